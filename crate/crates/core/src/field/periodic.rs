/// Cellular flow. In 2D `psi = (A/k) sin(k x1) sin(k x2)` and
/// `V = (A sin(k x1) cos(k x2), -A cos(k x1) sin(k x2))`. In 3D `V` is the curl
/// of `(A/k) (sin k x2 sin k x3, sin k x3 sin k x1, sin k x1 sin k x2)`.
pub(super) fn cellular<const D: usize>(x: &[f64; D], a: f64, k: f64) -> [f64; D] {
    let mut v = [0.0; D];
    if D == 2 {
        let (s1, c1) = (k * x[0]).sin_cos();
        let (s2, c2) = (k * x[1]).sin_cos();
        v[0] = a * s1 * c2;
        v[1] = -a * c1 * s2;
    } else {
        let (s1, c1) = (k * x[0]).sin_cos();
        let (s2, c2) = (k * x[1]).sin_cos();
        let (s3, c3) = (k * x[2]).sin_cos();
        v[0] = a * s1 * (c2 - c3);
        v[1] = a * s2 * (c3 - c1);
        v[2] = a * s3 * (c1 - c2);
    }
    v
}
