//! Central-difference gradients, used as an oracle for the analytic backward pass.

/// `(f(p + h·e_i) − f(p − h·e_i)) / 2h` for every coordinate of `params`.
pub fn finite_diff_grad(mut f: impl FnMut(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    assert!(h > 0.0, "step must be positive");
    let mut p = params.to_vec();
    let mut out = Vec::with_capacity(p.len());
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + h;
        let plus = f(&p);
        p[i] = orig - h;
        let minus = f(&p);
        p[i] = orig;
        out.push((plus - minus) / (2.0 * h));
    }
    out
}

/// `|a − n| / (|n| + 1e-6)`, maximised over coordinates. The floor keeps
/// round-off in near-zero gradients from dominating.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| (a - n).abs() / (n.abs() + 1e-6))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic() {
        let g = finite_diff_grad(|p| p[0] * p[0], &[3.0], 1e-4);
        assert!((g[0] - 6.0).abs() < 1e-7);
    }

    #[test]
    fn constant_is_zero() {
        let g = finite_diff_grad(|_| 4.2, &[1.0, -2.0, 0.0], 1e-4);
        assert_eq!(g, vec![0.0, 0.0, 0.0]);
    }
}
