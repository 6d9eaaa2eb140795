//! Heat kernel, Oseen tensor and derivatives, with a slow quadrature oracle
//! for cross-checking the closed forms.

use std::f64::consts::PI;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, Spectral};
use crate::quadrature::integrate_gl;

pub type Tensor = [[f64; 3]; 3];

const SERIES_SWITCH: f64 = 1.5;
const SERIES_TERMS: usize = 40;

fn check_time(t: f64) -> Result<()> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveTime(t))
    }
}

fn norm(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// `Γ(x, t) = (4πt)^{-3/2} exp(-|x|²/4t)`.
pub fn heat_kernel(x: [f64; 3], t: f64) -> Result<f64> {
    check_time(t)?;
    Ok(gamma(norm(x), t))
}

fn gamma(r: f64, t: f64) -> f64 {
    (4.0 * PI * t).powf(-1.5) * (-r * r / (4.0 * t)).exp()
}

/// Radial coefficients of the Oseen tensor:
/// `S_ij = (Γ + A) δ_ij + C x_i x_j`, with `E = C'/r`.
#[derive(Debug, Clone, Copy)]
struct Radial {
    gamma: f64,
    a: f64,
    c: f64,
    e: f64,
}

/// `(Γ, A, C, E)` at radius `r` and time `t`; see [`oseen_tensor`].
pub fn radial_parts(r: f64, t: f64) -> (f64, f64, f64, f64) {
    let rd = radial(r, t);
    (rd.gamma, rd.a, rd.c, rd.e)
}

fn radial(r: f64, t: f64) -> Radial {
    let a = 0.5 / t.sqrt();
    let xi = a * r;
    let gam = gamma(r, t);
    if xi < SERIES_SWITCH {
        // Ψ = Σ c_n r^{2n}
        let two_over_sqrt_pi = 2.0 / PI.sqrt();
        let a2 = a * a;
        let r2 = r * r;
        let base = a / (4.0 * PI) * two_over_sqrt_pi;
        let mut r2pow = [1.0; SERIES_TERMS];
        for j in 1..SERIES_TERMS {
            r2pow[j] = r2pow[j - 1] * r2;
        }
        let (mut sa, mut sc, mut se) = (0.0, 0.0, 0.0);
        // u = (-1)^n a^{2n} / n!
        let mut u = 1.0;
        for n in 1..SERIES_TERMS {
            let nf = n as f64;
            u *= -a2 / nf;
            let cn = base * u / (2.0 * nf + 1.0);
            sa += 2.0 * nf * cn * r2pow[n - 1];
            if n >= 2 {
                sc += 4.0 * nf * (nf - 1.0) * cn * r2pow[n - 2];
            }
            if n >= 3 {
                se += 4.0 * nf * (nf - 1.0) * (2.0 * nf - 4.0) * cn * r2pow[n - 3];
            }
        }
        Radial { gamma: gam, a: sa, c: sc, e: se }
    } else {
        let ex = (-xi * xi).exp();
        let k = 4.0 * a.powi(3) / PI.sqrt();
        let g = 2.0 / PI.sqrt() * xi * ex - libm::erf(xi);
        let g1 = -k * r * r * ex;
        let g2 = -k * ex * (2.0 * r - 2.0 * a * a * r.powi(3));
        let f = 4.0 * PI;
        Radial {
            gamma: gam,
            a: g / (f * r.powi(3)),
            c: g1 / (f * r.powi(4)) - 3.0 * g / (f * r.powi(5)),
            e: g2 / (f * r.powi(5)) - 7.0 * g1 / (f * r.powi(6)) + 15.0 * g / (f * r.powi(7)),
        }
    }
}

/// Oseen tensor `S_ij = Γ δ_ij + ∂_i∂_j Ψ`, `Ψ` the Newtonian potential of `Γ(·, t)`.
pub fn oseen_tensor(x: [f64; 3], t: f64) -> Result<Tensor> {
    check_time(t)?;
    let rd = radial(norm(x), t);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = (rd.gamma + rd.a) * delta(i, j) + rd.c * x[i] * x[j];
        }
    }
    Ok(s)
}

/// Spatial derivative `∂_k S_ij`.
pub fn oseen_derivative(x: [f64; 3], t: f64, k: usize) -> Result<Tensor> {
    check_time(t)?;
    if k > 2 {
        return Err(Error::InvalidArgument(format!("axis {k} out of range")));
    }
    let rd = radial(norm(x), t);
    let gr = -rd.gamma / (2.0 * t);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = (gr + rd.c) * x[k] * delta(i, j)
                + rd.e * x[i] * x[j] * x[k]
                + rd.c * (delta(i, k) * x[j] + delta(j, k) * x[i]);
        }
    }
    Ok(s)
}

/// `∂_t S_ij = ∂_tΓ δ_ij − ∂_i∂_jΓ`.
pub fn oseen_time_derivative(x: [f64; 3], t: f64) -> Result<Tensor> {
    check_time(t)?;
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let gam = gamma(r2.sqrt(), t);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = gam * ((r2 / (4.0 * t * t) - 1.0 / t) * delta(i, j) - x[i] * x[j] / (4.0 * t * t));
        }
    }
    Ok(s)
}

/// `∂_k ∂_t S_ij`.
pub fn oseen_time_space_derivative(x: [f64; 3], t: f64, k: usize) -> Result<Tensor> {
    let st = oseen_time_derivative(x, t)?;
    let gam = gamma(norm(x), t);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = -x[k] / (2.0 * t) * st[i][j]
                + gam * (x[k] / (2.0 * t * t) * delta(i, j)
                    - (delta(i, k) * x[j] + delta(j, k) * x[i]) / (4.0 * t * t));
        }
    }
    Ok(s)
}

/// Newtonian potential of `Γ(·, t)` by radial Gauss–Legendre quadrature.
pub fn newtonian_potential_of_heat_kernel(r: f64, t: f64) -> f64 {
    let w = 2.0 * t.sqrt();
    let inner = if r > 0.0 {
        let panels = ((r / w) * 8.0).ceil().max(4.0) as usize;
        integrate_gl(|rho| gamma(rho, t) * rho * rho, 0.0, r, panels, 20) / r
    } else {
        0.0
    };
    let outer = integrate_gl(|rho| gamma(rho, t) * rho, r, r + 20.0 * w, 160, 20);
    inner + outer
}

/// Quadrature-oracle Oseen tensor: `Ψ` from radial quadrature, second
/// derivatives by centered differences with two Richardson levels.
pub fn oseen_tensor_oracle(x: [f64; 3], t: f64) -> Result<Tensor> {
    check_time(t)?;
    let r = norm(x);
    let h0 = 0.05 * t.sqrt().min(if r > 0.0 { r } else { f64::INFINITY });
    let psi = |y: [f64; 3]| newtonian_potential_of_heat_kernel(norm(y), t);
    let hessian = |h: f64| -> Tensor {
        let mut hs = [[0.0; 3]; 3];
        let f0 = psi(x);
        for i in 0..3 {
            for j in i..3 {
                let shift = |di: f64, dj: f64| {
                    let mut y = x;
                    y[i] += di;
                    y[j] += dj;
                    psi(y)
                };
                let v = if i == j {
                    (shift(h, 0.0) - 2.0 * f0 + shift(-h, 0.0)) / (h * h)
                } else {
                    (shift(h, h) - shift(h, -h) - shift(-h, h) + shift(-h, -h)) / (4.0 * h * h)
                };
                hs[i][j] = v;
                hs[j][i] = v;
            }
        }
        hs
    };
    let d1 = hessian(h0);
    let d2 = hessian(h0 / 2.0);
    let d3 = hessian(h0 / 4.0);
    let gam = gamma(r, t);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let e1 = (4.0 * d2[i][j] - d1[i][j]) / 3.0;
            let e2 = (4.0 * d3[i][j] - d2[i][j]) / 3.0;
            s[i][j] = gam * delta(i, j) + (16.0 * e2 - e1) / 15.0;
        }
    }
    Ok(s)
}

/// Centered-difference approximation of `∂_k S` from the closed form.
pub fn oseen_derivative_fd(x: [f64; 3], t: f64, k: usize, step: f64) -> Result<Tensor> {
    let mut xp = x;
    let mut xm = x;
    xp[k] += step;
    xm[k] -= step;
    let (a, b) = (oseen_tensor(xp, t)?, oseen_tensor(xm, t)?);
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            s[i][j] = (a[i][j] - b[i][j]) / (2.0 * step);
        }
    }
    Ok(s)
}

/// `(Γ(·,t) * Γ(·,s))(x)` by three one-dimensional Gauss–Legendre convolutions.
pub fn heat_convolution_oracle(x: [f64; 3], t: f64, s: f64) -> Result<f64> {
    check_time(t)?;
    check_time(s)?;
    let g1 = |y: f64, tau: f64| (4.0 * PI * tau).powf(-0.5) * (-y * y / (4.0 * tau)).exp();
    let w = 2.0 * t.max(s).sqrt();
    let mut prod = 1.0;
    for &xa in &x {
        let (lo, hi) = (xa.min(0.0) - 10.0 * w, xa.max(0.0) + 10.0 * w);
        prod *= integrate_gl(|y| g1(xa - y, t) * g1(y, s), lo, hi, 64, 16);
    }
    Ok(prod)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    ClosedForm,
    QuadratureOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelValue {
    Scalar(f64),
    Tensor(Tensor),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSample {
    pub x: [f64; 3],
    pub t: f64,
    pub value: KernelValue,
    pub method: KernelMethod,
}

impl KernelSample {
    pub fn heat(x: [f64; 3], t: f64) -> Result<Self> {
        Ok(Self { x, t, value: KernelValue::Scalar(heat_kernel(x, t)?), method: KernelMethod::ClosedForm })
    }

    pub fn oseen(x: [f64; 3], t: f64, method: KernelMethod) -> Result<Self> {
        let v = match method {
            KernelMethod::ClosedForm => oseen_tensor(x, t)?,
            KernelMethod::QuadratureOracle => oseen_tensor_oracle(x, t)?,
        };
        Ok(Self { x, t, value: KernelValue::Tensor(v), method })
    }
}

/// CSV rows `x1,x2,x3,t,i,j,value,method`; scalars use `i = j = 0`.
pub fn kernel_samples_csv(samples: &[KernelSample]) -> String {
    let mut s = String::from("x1,x2,x3,t,i,j,value,method\n");
    for k in samples {
        let m = match k.method {
            KernelMethod::ClosedForm => "closed_form",
            KernelMethod::QuadratureOracle => "quadrature_oracle",
        };
        let head = format!("{:e},{:e},{:e},{:e}", k.x[0], k.x[1], k.x[2], k.t);
        match k.value {
            KernelValue::Scalar(v) => {
                let _ = writeln!(s, "{head},0,0,{v:e},{m}");
            }
            KernelValue::Tensor(tn) => {
                for i in 0..3 {
                    for j in 0..3 {
                        let _ = writeln!(s, "{head},{i},{j},{:e},{m}", tn[i][j]);
                    }
                }
            }
        }
    }
    s
}

/// Log-uniform sample grid for [`decay_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSpec {
    pub r_min: f64,
    pub r_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub n_r: usize,
    pub n_t: usize,
}

impl Default for SampleSpec {
    fn default() -> Self {
        Self { r_min: 0.1, r_max: 10.0, t_min: 1e-3, t_max: 10.0, n_r: 24, n_t: 24 }
    }
}

impl SampleSpec {
    pub fn doubled(&self) -> Self {
        Self { n_r: 2 * self.n_r, n_t: 2 * self.n_t, ..*self }
    }

    fn points(&self) -> Vec<([f64; 3], f64)> {
        let dirs: [[f64; 3]; 4] = [
            [1.0, 0.0, 0.0],
            [0.6, 0.8, 0.0],
            [1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt(), 1.0 / 3f64.sqrt()],
            [0.2, -0.4, 0.8944271909999159],
        ];
        let logspace = |a: f64, b: f64, n: usize| -> Vec<f64> {
            if n == 1 {
                return vec![a];
            }
            (0..n).map(|i| (a.ln() + (b.ln() - a.ln()) * i as f64 / (n - 1) as f64).exp()).collect()
        };
        let mut pts = Vec::new();
        for r in logspace(self.r_min, self.r_max, self.n_r) {
            for t in logspace(self.t_min, self.t_max, self.n_t) {
                for d in &dirs {
                    pts.push((d.map(|c| c * r), t));
                }
            }
        }
        pts
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayScanReport {
    pub l: usize,
    pub k: usize,
    #[serde(rename = "C_emp")]
    pub c_emp: f64,
    pub n_samples: usize,
    pub stability_pct: f64,
    pub stable: bool,
}

fn scan_constant(l: usize, k: usize, spec: &SampleSpec) -> Result<(f64, usize)> {
    let pts = spec.points();
    if pts.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let weight_exp = (3 + l + 2 * k) as i32;
    let mut c: f64 = 0.0;
    for (x, t) in &pts {
        let tensors: Vec<Tensor> = match (l, k) {
            (0, 0) => vec![oseen_tensor(*x, *t)?],
            (0, 1) => vec![oseen_time_derivative(*x, *t)?],
            (1, 0) => (0..3).map(|a| oseen_derivative(*x, *t, a)).collect::<Result<_>>()?,
            (1, 1) => (0..3).map(|a| oseen_time_space_derivative(*x, *t, a)).collect::<Result<_>>()?,
            _ => unreachable!(),
        };
        let m = tensors.iter().flatten().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        c = c.max(m * (norm(*x) + t.sqrt()).powi(weight_exp));
    }
    Ok((c, pts.len()))
}

/// Empirical constant `max |D^ℓ ∂_t^k S| (|x| + √t)^{3+ℓ+2k}` over the
/// sample set, with a stability check against doubled sampling.
pub fn decay_scan(l: usize, k: usize, spec: &SampleSpec) -> Result<DecayScanReport> {
    if l > 1 || k > 1 {
        return Err(Error::InvalidArgument(format!("orders (l, k) = ({l}, {k}) not supported")));
    }
    if spec.n_r == 0 || spec.n_t == 0 {
        return Err(Error::EmptySampleSet);
    }
    let (c1, n) = scan_constant(l, k, spec)?;
    let (c2, _) = scan_constant(l, k, &spec.doubled())?;
    let stability_pct = 100.0 * (c2 - c1).abs() / c1;
    Ok(DecayScanReport { l, k, c_emp: c1, n_samples: n, stability_pct, stable: stability_pct <= 10.0 })
}

/// Zero-mean periodic solution of `-Δη = source`.
///
/// The source mean must vanish up to `1e-9` times its maximum magnitude.
pub fn newtonian_potential(source: &Field) -> Result<Field> {
    let tol = 1e-9 * source.max_abs().max(f64::MIN_POSITIVE);
    Spectral::new(*source.grid()).poisson(source, tol)
}
