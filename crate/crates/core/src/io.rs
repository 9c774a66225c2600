//! Artifact files. Every file starts with the config hash, the master seed
//! and the crate version (as `#` lines in CSV, an XML comment in SVG).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Result;

pub const VERSION: &str = concat!("gflame ", env!("CARGO_PKG_VERSION"));

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    /// Hash of the canonical JSON form of `config`.
    pub fn new<C: Serialize>(config: &C, seed: u64) -> Self {
        let json = serde_json::to_string(config).expect("configs serialize");
        let digest = Sha256::digest(json.as_bytes());
        let hex: String = digest.iter().take(8).map(|b| format!("{b:02x}")).collect();
        Provenance {
            config_hash: hex,
            seed,
            version: VERSION.to_string(),
        }
    }

    fn lines(&self) -> [String; 3] {
        [
            format!("config_hash={}", self.config_hash),
            format!("seed={}", self.seed),
            format!("version={}", self.version),
        ]
    }
}

/// Writes artifacts into one directory.
#[derive(Clone, Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    provenance: Provenance,
}

impl ArtifactWriter {
    pub fn new(dir: impl AsRef<Path>, provenance: Provenance) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(ArtifactWriter {
            dir: dir.as_ref().to_path_buf(),
            provenance,
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Comma-separated, `.` decimal, LF endings, header row after the
    /// provenance comments.
    pub fn csv(&self, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<PathBuf> {
        let mut s = String::new();
        for l in self.provenance.lines() {
            writeln!(s, "# {l}").unwrap();
        }
        writeln!(s, "{}", header.join(",")).unwrap();
        for r in rows {
            let cells: Vec<String> = r.iter().map(|v| fmt_num(*v)).collect();
            writeln!(s, "{}", cells.join(",")).unwrap();
        }
        self.write(name, &s)
    }

    /// CSV produced elsewhere (header row first); the provenance comments are
    /// prepended.
    pub fn csv_text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let mut s = String::new();
        for l in self.provenance.lines() {
            writeln!(s, "# {l}").unwrap();
        }
        s.push_str(body);
        self.write(name, &s)
    }

    /// Pretty JSON object `{"provenance": .., "data": ..}`.
    pub fn json<T: Serialize>(&self, name: &str, data: &T) -> Result<PathBuf> {
        let doc = serde_json::json!({ "provenance": self.provenance, "data": data });
        self.write(name, &(serde_json::to_string_pretty(&doc)? + "\n"))
    }

    /// Plain text with the provenance as leading `key = value` lines.
    pub fn text(&self, name: &str, body: &str) -> Result<PathBuf> {
        let mut s = String::new();
        for l in self.provenance.lines() {
            let (k, v) = l.split_once('=').unwrap();
            writeln!(s, "{k} = {v}").unwrap();
        }
        s.push_str(body);
        self.write(name, &s)
    }

    pub fn svg(&self, name: &str, plot: &LinePlot) -> Result<PathBuf> {
        let body = plot.render(&self.provenance);
        self.write(name, &body)
    }

    fn write(&self, name: &str, content: &str) -> Result<PathBuf> {
        let p = self.path(name);
        fs::write(&p, content)?;
        Ok(p)
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// One polyline (or scatter when `points_only`).
#[derive(Clone, Debug)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub points_only: bool,
}

impl Series {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            points_only: false,
        }
    }

    pub fn scatter(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            points_only: true,
        }
    }
}

/// Minimal standalone SVG line chart.
#[derive(Clone, Debug)]
pub struct LinePlot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    /// Equal scales on both axes (shape overlays).
    pub equal_aspect: bool,
    pub log_x: bool,
}

impl LinePlot {
    pub fn new(title: impl Into<String>, x_label: impl Into<String>, y_label: impl Into<String>) -> Self {
        LinePlot {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            equal_aspect: false,
            log_x: false,
        }
    }

    pub fn with(mut self, s: Series) -> Self {
        self.series.push(s);
        self
    }

    fn render(&self, prov: &Provenance) -> String {
        const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
        let (w, h, pad) = (640.0, 480.0, 60.0);
        let tx = |x: f64| if self.log_x { x.log10() } else { x };
        let pts = self.series.iter().flat_map(|s| s.points.iter()).filter(|(x, y)| tx(*x).is_finite() && y.is_finite());
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in pts {
            x0 = x0.min(tx(x));
            x1 = x1.max(tx(x));
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 < 1e-12 {
            x1 = x0 + 1.0;
        }
        if y1 - y0 < 1e-12 {
            y1 = y0 + 1.0;
        }
        let (mut sx, mut sy) = ((w - 2.0 * pad) / (x1 - x0), (h - 2.0 * pad) / (y1 - y0));
        if self.equal_aspect {
            let s = sx.min(sy);
            sx = s;
            sy = s;
        }
        let px = |x: f64| pad + (tx(x) - x0) * sx;
        let py = |y: f64| h - pad - (y - y0) * sy;
        let mut s = String::new();
        writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
        writeln!(s, "<!-- config_hash={} seed={} version={} -->", prov.config_hash, prov.seed, prov.version).unwrap();
        writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
        writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, esc(&self.title)).unwrap();
        writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, h - 12.0, esc(&self.x_label)).unwrap();
        writeln!(
            s,
            r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
            h / 2.0,
            h / 2.0,
            esc(&self.y_label)
        )
        .unwrap();
        writeln!(
            s,
            r#"<rect x="{pad}" y="{pad}" width="{}" height="{}" fill="none" stroke="black"/>"#,
            w - 2.0 * pad,
            h - 2.0 * pad
        )
        .unwrap();
        for (label, v, x, y) in [
            ("x", x0, pad, h - pad + 16.0),
            ("x", x1, w - pad, h - pad + 16.0),
            ("y", y0, pad - 6.0, h - pad),
            ("y", y1, pad - 6.0, pad + 4.0),
        ] {
            let anchor = if label == "x" { "middle" } else { "end" };
            let shown = if label == "x" && self.log_x { 10f64.powf(v) } else { v };
            writeln!(s, r#"<text x="{x}" y="{y}" text-anchor="{anchor}" font-size="11">{shown:.3}</text>"#).unwrap();
        }
        for (k, ser) in self.series.iter().enumerate() {
            let c = COLORS[k % COLORS.len()];
            let good: Vec<(f64, f64)> = ser
                .points
                .iter()
                .copied()
                .filter(|(x, y)| tx(*x).is_finite() && y.is_finite())
                .collect();
            if ser.points_only {
                for (x, y) in &good {
                    writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{c}"/>"#, px(*x), py(*y)).unwrap();
                }
            } else if !good.is_empty() {
                let path: Vec<String> = good.iter().map(|(x, y)| format!("{:.2},{:.2}", px(*x), py(*y))).collect();
                writeln!(s, r#"<polyline points="{}" fill="none" stroke="{c}" stroke-width="1.5"/>"#, path.join(" ")).unwrap();
            }
            writeln!(
                s,
                r#"<text x="{}" y="{}" font-size="12" fill="{c}">{}</text>"#,
                w - pad - 150.0,
                pad + 16.0 + 16.0 * k as f64,
                esc(&ser.label)
            )
            .unwrap();
        }
        s.push_str("</svg>\n");
        s
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn files_carry_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let prov = Provenance::new(&serde_json::json!({"a": 1}), 42);
        assert_eq!(prov, Provenance::new(&serde_json::json!({"a": 1}), 42));
        let w = ArtifactWriter::new(dir.path(), prov.clone()).unwrap();
        let p = w.csv("t.csv", &["x", "y"], &[vec![1.0, f64::INFINITY]]).unwrap();
        let s = fs::read_to_string(p).unwrap();
        assert!(s.starts_with(&format!("# config_hash={}\n# seed=42\n", prov.config_hash)));
        assert!(s.ends_with("x,y\n1,inf\n"));
        let plot = LinePlot::new("t", "x", "y").with(Series::line("a", vec![(0.0, 1.0), (1.0, 2.0)]));
        let p = w.svg("t.svg", &plot).unwrap();
        let s = fs::read_to_string(p).unwrap();
        assert!(s.contains(&format!("config_hash={}", prov.config_hash)) && s.contains("<polyline"));
    }
}
