//! Small numerical helpers shared by the solvers: matrix exponential and
//! Simpson quadrature on possibly non-uniform grids.

use nalgebra::DMatrix;

/// Matrix exponential (scaling and squaring with a degree-13 Padé approximant).
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    a.clone().exp()
}

/// Composite Simpson quadrature of samples `f` over the grid `t`.
///
/// Handles non-uniform spacing; an odd interval count gets a quadratic
/// correction on the last interval. Returns `None` for fewer than three samples.
pub fn simpson(t: &[f64], f: &[f64]) -> Option<f64> {
    let n = t.len();
    if n < 3 || f.len() != n {
        return None;
    }
    let intervals = n - 1;
    let paired = intervals - intervals % 2;
    let mut total = 0.0;
    let mut i = 0;
    while i < paired {
        let h0 = t[i + 1] - t[i];
        let h1 = t[i + 2] - t[i + 1];
        let hs = h0 + h1;
        total += hs / 6.0 * ((2.0 - h1 / h0) * f[i] + hs * hs / (h0 * h1) * f[i + 1] + (2.0 - h0 / h1) * f[i + 2]);
        i += 2;
    }
    if intervals % 2 == 1 {
        total += last_interval(&t[n - 3..], &f[n - 3..]);
    }
    Some(total)
}

/// Integral over `[x1, x2]` of the quadratic through three samples.
fn last_interval(t: &[f64], f: &[f64]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let hs = h0 + h1;
    f[2] * (2.0 * h1 * h1 + 3.0 * h0 * h1) / (6.0 * hs) + f[1] * (h1 * h1 + 3.0 * h0 * h1) / (6.0 * h0)
        - f[0] * h1 * h1 * h1 / (6.0 * h0 * hs)
}

/// Integral over `[x0, x1]` of the quadratic through three samples.
fn first_interval(t: &[f64], f: &[f64]) -> f64 {
    let h0 = t[1] - t[0];
    let h1 = t[2] - t[1];
    let hs = h0 + h1;
    f[0] * (2.0 * h0 * h0 + 3.0 * h0 * h1) / (6.0 * hs) + f[1] * (h0 * h0 + 3.0 * h0 * h1) / (6.0 * h1)
        - f[2] * h0 * h0 * h0 / (6.0 * h1 * hs)
}

/// Running integral `F[i] = ∫_{t₀}^{tᵢ} f`, piecewise-quadratic on each interval.
pub fn cumulative_simpson(t: &[f64], f: &[f64]) -> Option<Vec<f64>> {
    let n = t.len();
    if n < 3 || f.len() != n {
        return None;
    }
    let mut out = Vec::with_capacity(n);
    out.push(0.0);
    let mut acc = 0.0;
    for i in 0..n - 1 {
        // averaging the two overlapping quadratics cancels their leading errors
        acc += match (i > 0, i + 2 < n) {
            (true, true) => 0.5 * (first_interval(&t[i..i + 3], &f[i..i + 3]) + last_interval(&t[i - 1..i + 2], &f[i - 1..i + 2])),
            (false, _) => first_interval(&t[i..i + 3], &f[i..i + 3]),
            (true, false) => last_interval(&t[i - 1..i + 2], &f[i - 1..i + 2]),
        };
        out.push(acc);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let t: Vec<f64> = (0..=10).map(|i| i as f64 * 0.3).collect();
        let f: Vec<f64> = t.iter().map(|x| x * x * x - 2.0 * x).collect();
        let exact = 3f64.powi(4) / 4.0 - 9.0;
        assert!((simpson(&t, &f).unwrap() - exact).abs() < 1e-12);
        // odd interval count, non-uniform, quadratic integrand is exact
        let t = [0.0, 0.1, 0.35, 0.5, 0.9];
        let t = &t[..4];
        let f: Vec<f64> = t.iter().map(|x| 3.0 * x * x + 1.0).collect();
        assert!((simpson(t, &f).unwrap() - (0.125 + 0.5)).abs() < 1e-14);
        assert!(simpson(&[0.0, 1.0], &[1.0, 1.0]).is_none());
    }

    #[test]
    fn cumulative_matches_antiderivative() {
        let t: Vec<f64> = (0..=200).map(|i| i as f64 * 0.01).collect();
        let f: Vec<f64> = t.iter().map(|x| x.cos()).collect();
        let c = cumulative_simpson(&t, &f).unwrap();
        for (ti, ci) in t.iter().zip(&c) {
            assert!((ci - ti.sin()).abs() < 1e-9, "{}", ci - ti.sin());
        }
    }

    #[test]
    fn expm_rotation() {
        let a = dmatrix![0.0, -1.0; 1.0, 0.0];
        let e = expm(&(a * 0.7));
        let want = dmatrix![0.7f64.cos(), -0.7f64.sin(); 0.7f64.sin(), 0.7f64.cos()];
        assert!((e - want).norm() < 1e-14);
    }
}
