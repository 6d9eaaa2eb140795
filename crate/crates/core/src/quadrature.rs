//! Gauss–Legendre rules and product-integration weights.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        dp = if d != 0.0 { d } else { dp };
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Gauss–Legendre rule mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
    (x.iter().map(|&t| c + h * t).collect(), w.iter().map(|&v| v * h).collect())
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]` with `panels` panels.
pub fn integrate_gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut s = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * h;
        let c = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(c + 0.5 * h * xi);
        }
    }
    s * 0.5 * h
}

/// Weights `w_m` with `Σ w_m g(t_m) = ∫ t^β g̃(t) dt` exactly, where `g̃` is
/// the piecewise-linear interpolant of `g` on increasing `nodes` and `β > -1`.
pub fn product_weights(nodes: &[f64], beta: f64) -> Vec<f64> {
    assert!(beta > -1.0, "weight exponent must exceed -1");
    assert!(nodes.first().map_or(true, |&t| t >= 0.0));
    let mut w = vec![0.0; nodes.len()];
    for p in 0..nodes.len().saturating_sub(1) {
        let (a, b) = (nodes[p], nodes[p + 1]);
        let len = b - a;
        let (m0, m1) = if a == 0.0 || len > 0.25 * b {
            (
                (b.powf(beta + 1.0) - a.powf(beta + 1.0)) / (beta + 1.0),
                (b.powf(beta + 2.0) - a.powf(beta + 2.0)) / (beta + 2.0),
            )
        } else {
            // smooth integrand away from zero: avoid cancellation
            let (x, ww) = gauss_legendre_on(8, a, b);
            x.iter().zip(&ww).fold((0.0, 0.0), |(s0, s1), (&t, &wt)| {
                let f = t.powf(beta);
                (s0 + wt * f, s1 + wt * f * t)
            })
        };
        w[p] += (b * m0 - m1) / len;
        w[p + 1] += (m1 - a * m0) / len;
    }
    w
}
