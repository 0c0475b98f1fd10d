//! Small numeric utilities: deterministic summation, Gauss–Legendre
//! quadrature, log-log regression, finite differences.

/// Deterministic chunked pairwise summation.
///
/// Partial sums are taken over fixed-size chunks and then accumulated in
/// order, so the result does not depend on thread count or iterator fusion.
pub fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    const CHUNK: usize = 4096;
    let mut partials: Vec<f64> = Vec::new();
    let mut acc = 0.0;
    let mut count = 0usize;
    for v in values {
        acc += v;
        count += 1;
        if count == CHUNK {
            partials.push(acc);
            acc = 0.0;
            count = 0;
        }
    }
    if count > 0 {
        partials.push(acc);
    }
    partials.iter().sum()
}

/// Nodes and weights for `n`-point Gauss–Legendre quadrature on `[-1, 1]`.
///
/// Computed by Newton iteration on the Legendre polynomial; deterministic.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Chebyshev-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_n'(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Integrate `f` on `[a, b]` with cached 80-point Gauss–Legendre.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    use std::sync::OnceLock;
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    let (nodes, weights) = RULE.get_or_init(|| gauss_legendre(80));
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut s = 0.0;
    for (x, w) in nodes.iter().zip(weights.iter()) {
        s += w * f(mid + half * x);
    }
    s * half
}

/// Ordinary least-squares fit of `y = slope * x + intercept`.
///
/// Returns `(slope, intercept, r_squared, slope_stderr)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64, f64) {
    let n = xs.len() as f64;
    assert!(xs.len() == ys.len() && xs.len() >= 2);
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let e = y - (slope * x + intercept);
            e * e
        })
        .sum();
    let r2 = if syy > 0.0 { 1.0 - ss_res / syy } else { 1.0 };
    let dof = (xs.len() as f64 - 2.0).max(1.0);
    let se = (ss_res / dof / sxx).sqrt();
    (slope, intercept, r2, se)
}

/// Fit `value ≈ C · h^order` from paired `(h, value)` samples, in log-log
/// coordinates. Returns `(order, r_squared)`. Non-positive values are
/// clamped to a tiny floor so exact zeros do not poison the fit.
pub fn fit_order(hs: &[f64], values: &[f64]) -> (f64, f64) {
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.max(1e-300).ln()).collect();
    let (slope, _, r2, _) = linear_fit(&xs, &ys);
    (slope, r2)
}

/// Central first derivative with one Richardson extrapolation step.
pub fn central_deriv<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |hh: f64| (f(x + hh) - f(x - hh)) / (2.0 * hh);
    let d1 = d(h);
    let d2 = d(h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Central second derivative with one Richardson extrapolation step.
pub fn central_deriv2<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    let d = |hh: f64| (f(x + hh) - 2.0 * f(x) + f(x - hh)) / (hh * hh);
    let d1 = d(h);
    let d2 = d(h / 2.0);
    (4.0 * d2 - d1) / 3.0
}

/// Smooth transition that is exactly 0 for `t ≤ a` and exactly 1 for `t ≥ b`.
pub fn smooth_step_up(t: f64, a: f64, b: f64) -> f64 {
    debug_assert!(b > a);
    1.0 - crate::geometry::chi(1.0 + (t - a) / (b - a))
}

/// Smooth transition that is exactly 1 for `t ≤ a` and exactly 0 for `t ≥ b`.
pub fn smooth_step_down(t: f64, a: f64, b: f64) -> f64 {
    debug_assert!(b > a);
    crate::geometry::chi(1.0 + (t - a) / (b - a))
}
