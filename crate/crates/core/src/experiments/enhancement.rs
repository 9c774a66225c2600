//! Enhancement dichotomy on the periodic shear `V = (0, A sin(2 pi x1))`:
//! `H(e1) = 1` since `<V, e1> = 0`, while `H(e2) > 1`.

use serde::{Deserialize, Serialize};

use super::{frozen, ExperimentReport, Tolerances, Verdict};
use crate::error::{Error, Result};
use crate::field::FieldSpec;
use crate::homogenize::{effective_hamiltonian_discounted, effective_hamiltonian_time, CellConfig};
use crate::io::{ArtifactWriter, LinePlot, Series};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnhancementParams {
    /// Must be a subset of the amplitudes with frozen margins.
    pub amplitudes: Vec<f64>,
    pub deltas: Vec<f64>,
    pub horizon: f64,
    pub cell: CellConfig,
}

impl Default for EnhancementParams {
    fn default() -> Self {
        EnhancementParams {
            amplitudes: frozen::SHEAR_AMPLITUDES.to_vec(),
            deltas: vec![0.2, 0.1, 0.05],
            horizon: 20.0,
            cell: CellConfig::default(),
        }
    }
}

/// One amplitude: `(A, H_disc(e1), H_time(e1), H_disc(e2), H_time(e2))`.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct EnhancementRow {
    pub amplitude: f64,
    pub e1: [f64; 2],
    pub e2: [f64; 2],
}

fn margin_for(a: f64) -> Result<f64> {
    frozen::SHEAR_AMPLITUDES
        .iter()
        .position(|x| (x - a).abs() < 1e-12)
        .map(|i| frozen::SHEAR_MARGIN[i])
        .ok_or_else(|| Error::config(format!("amplitude {a} has no frozen enhancement margin")))
}

pub fn enhancement_rows(params: &EnhancementParams) -> Result<Vec<EnhancementRow>> {
    let mut rows = Vec::new();
    for &a in &params.amplitudes {
        let spec = FieldSpec::shear(a);
        let est = |p: [f64; 2]| -> Result<[f64; 2]> {
            let disc = effective_hamiltonian_discounted::<2>(&spec, &[0], p, &params.deltas, &params.cell)?;
            let time = effective_hamiltonian_time::<2>(&spec, &[0], p, params.horizon, &params.cell)?;
            Ok([disc.extrapolated, time])
        };
        rows.push(EnhancementRow {
            amplitude: a,
            e1: est([1.0, 0.0])?,
            e2: est([0.0, 1.0])?,
        });
    }
    Ok(rows)
}

pub fn run_enhancement(
    params: &EnhancementParams,
    tol: &Tolerances,
    out: Option<&ArtifactWriter>,
) -> Result<ExperimentReport> {
    let (mut report, t0) = ExperimentReport::start("enhance", params);
    let margins: Vec<f64> = params.amplitudes.iter().map(|&a| margin_for(a)).collect::<Result<_>>()?;
    let rows = enhancement_rows(params)?;
    for (r, m) in rows.iter().zip(&margins) {
        let a = r.amplitude;
        let dev = r.e1.iter().map(|h| (h - 1.0).abs()).fold(0.0, f64::max);
        report.verdicts.push(Verdict::at_most(
            "hen_orthogonal",
            dev,
            tol.orthogonal_rel,
            format!("A={a}: |H(e1) - 1|, worst of discounted {:.4} and time {:.4}", r.e1[0], r.e1[1]),
        ));
        let low = r.e2[0].min(r.e2[1]);
        report.verdicts.push(Verdict::at_least(
            "hen_active",
            low,
            1.0 + m,
            format!("A={a}: min of discounted {:.4} and time {:.4} against 1 + frozen margin", r.e2[0], r.e2[1]),
        ));
    }
    for w in rows.windows(2) {
        let (lo, hi) = (mean2(w[0].e2), mean2(w[1].e2));
        report.verdicts.push(Verdict::at_least(
            "hen_monotone",
            hi,
            lo * (1.0 - tol.monotone_rel),
            format!("H(e2) at A={} against A={} less slack", w[1].amplitude, w[0].amplitude),
        ));
    }
    if let Some(w) = out {
        let data: Vec<Vec<f64>> = rows
            .iter()
            .map(|r| vec![r.amplitude, r.e1[0], r.e1[1], r.e2[0], r.e2[1]])
            .collect();
        let header = ["amplitude", "h_e1_discounted", "h_e1_time", "h_e2_discounted", "h_e2_time"];
        report.artifacts.push(w.csv("enhancement.csv", &header, &data)?.display().to_string());
        let plot = LinePlot::new("Shear enhancement", "amplitude A", "H(p)")
            .with(Series::line("H(e2)", rows.iter().map(|r| (r.amplitude, mean2(r.e2))).collect()))
            .with(Series::line("H(e1)", rows.iter().map(|r| (r.amplitude, mean2(r.e1))).collect()))
            .with(Series::scatter("1 + margin", rows.iter().zip(&margins).map(|(r, m)| (r.amplitude, 1.0 + m)).collect()));
        report.artifacts.push(w.svg("enhancement.svg", &plot)?.display().to_string());
    }
    Ok(report.finish(t0))
}

fn mean2(x: [f64; 2]) -> f64 {
    0.5 * (x[0] + x[1])
}
