//! Cut-off localization: `ũ = φu + ∇η`, `p̃ = φp − ∂_tη + Δη` and the
//! forcing terms of the localized system.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{
    dist, sample_function, write_space_time_snapshot, Field, GridSpec, Mask, Rank, SpaceTimeField, Spectral,
};
use crate::io::atomic_write_json;
use crate::jet::Jet;
use crate::lorentz::{combine_in_time, lebesgue_norm, lorentz_norm};

/// Smooth step: 0 for `s ≤ 0`, 1 for `s ≥ 1`.
pub fn smoothstep(s: f64) -> f64 {
    smoothstep_jet(Jet::variable(s)).value()
}

pub fn smoothstep_jet(s: Jet) -> Jet {
    let x = s.value();
    if x <= 1e-3 {
        return Jet::constant(0.0);
    }
    if x >= 1.0 - 1e-3 {
        return Jet::constant(1.0);
    }
    let one = Jet::constant(1.0);
    let a = (-(one / s)).exp();
    let b = (-(one / (one - s))).exp();
    a / (a + b)
}

/// Radial bump: 1 on `[0, 1/2]`, 0 on `[1, ∞)`.
pub fn bump(rho: f64) -> f64 {
    bump_jet(Jet::variable(rho)).value()
}

pub fn bump_jet(rho: Jet) -> Jet {
    Jet::constant(1.0) - smoothstep_jet(rho.scale(2.0) - 1.0)
}

/// Value and spatial derivatives up to third order of a radial function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialDerivs {
    pub value: f64,
    pub grad: [f64; 3],
    pub hess: [[f64; 3]; 3],
    pub third: [[[f64; 3]; 3]; 3],
}

impl RadialDerivs {
    pub fn laplacian(&self) -> f64 {
        self.hess[0][0] + self.hess[1][1] + self.hess[2][2]
    }

    /// `∇Δ`.
    pub fn grad_laplacian(&self) -> [f64; 3] {
        [0, 1, 2].map(|k| (0..3).map(|i| self.third[i][i][k]).sum())
    }
}

/// Derivatives of `x ↦ f(|x − c|)` from the jet of `f` at `|x − c|`.
pub fn radial_derivs(profile: impl Fn(Jet) -> Jet, x: [f64; 3], c: [f64; 3]) -> RadialDerivs {
    let d = [x[0] - c[0], x[1] - c[1], x[2] - c[2]];
    let rho = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let jet = profile(Jet::variable(rho));
    let (f0, f1, f2, f3) = (jet.value(), jet.derivative(1), jet.derivative(2), jet.derivative(3));
    let mut out = RadialDerivs { value: f0, grad: [0.0; 3], hess: [[0.0; 3]; 3], third: [[[0.0; 3]; 3]; 3] };
    if rho < 1e-12 || (f1 == 0.0 && f2 == 0.0 && f3 == 0.0) {
        if rho < 1e-12 {
            // profiles used here are flat near the origin
            debug_assert!(f1.abs() < 1e-9);
        }
        return out;
    }
    let n = d.map(|v| v / rho);
    let a = f2 - f1 / rho;
    let b = f1 / rho;
    let da = f3 - f2 / rho + f1 / (rho * rho);
    let db = f2 / rho - f1 / (rho * rho);
    let del = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
    for i in 0..3 {
        out.grad[i] = f1 * n[i];
        for j in 0..3 {
            out.hess[i][j] = a * n[i] * n[j] + b * del(i, j);
            for k in 0..3 {
                out.third[i][j][k] = da * n[i] * n[j] * n[k]
                    + a / rho * (del(i, k) * n[j] + del(j, k) * n[i] - 2.0 * n[i] * n[j] * n[k])
                    + db * n[k] * del(i, j);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmoothnessProfile {
    /// Transition `e^{-1/s} / (e^{-1/s} + e^{-1/(1-s)})`.
    #[default]
    ExpSmoothstep,
}

/// `θ(t)`, `φ₀(x)`, `φ = θφ₀` and `φ̃(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFamily {
    pub profile: SmoothnessProfile,
    /// θ rises from 0 at `time_on.0` to 1 at `time_on.1`.
    pub time_on: (f64, f64),
    /// φ₀ falls from 1 at `inner.0` to 0 at `inner.1`.
    pub inner: (f64, f64),
    /// φ̃ falls from 1 at `outer.0` to 0 at `outer.1`.
    pub outer: (f64, f64),
}

pub fn build_cutoffs(profile: SmoothnessProfile) -> CutoffFamily {
    CutoffFamily { profile, time_on: (0.05, 0.1), inner: (1.0, 1.25), outer: (1.25, 1.5) }
}

impl Default for CutoffFamily {
    fn default() -> Self {
        build_cutoffs(SmoothnessProfile::ExpSmoothstep)
    }
}

fn falling(r: Jet, (a, b): (f64, f64)) -> Jet {
    Jet::constant(1.0) - smoothstep_jet((r - a).scale(1.0 / (b - a)))
}

impl CutoffFamily {
    pub fn theta_jet(&self, t: f64) -> Jet {
        let (a, b) = self.time_on;
        smoothstep_jet((Jet::variable(t) - a).scale(1.0 / (b - a)))
    }

    pub fn theta(&self, t: f64) -> f64 {
        self.theta_jet(t).value()
    }

    pub fn phi0(&self, x: [f64; 3]) -> RadialDerivs {
        let inner = self.inner;
        radial_derivs(|r| falling(r, inner), x, [0.0; 3])
    }

    pub fn phi_tilde(&self, x: [f64; 3]) -> RadialDerivs {
        let outer = self.outer;
        radial_derivs(|r| falling(r, outer), x, [0.0; 3])
    }

    pub fn phi(&self, x: [f64; 3], t: f64) -> f64 {
        self.theta(t) * self.phi0(x).value
    }
}

#[derive(Debug, Clone)]
pub struct LocalizedState {
    pub cutoffs: CutoffFamily,
    pub u: SpaceTimeField,
    pub u_tilde: SpaceTimeField,
    pub eta: SpaceTimeField,
    pub p_tilde: SpaceTimeField,
    pub f0: SpaceTimeField,
    pub f1: SpaceTimeField,
    pub phi_tilde: Field,
    /// Largest per-frame `|mean(∇φ·u)| / max|∇φ·u|` before redistribution.
    pub source_mean_ratio: f64,
}

/// Relative tolerance on the mean of `∇φ·u` before it is rejected.
pub const SOURCE_MEAN_TOLERANCE: f64 = 1e-3;

fn grad_phi_field(grid: GridSpec, cut: &CutoffFamily) -> Result<(Field, Field, Field)> {
    // (φ₀, ∇φ₀, Δφ₀)
    let phi0 = sample_function(grid, Rank::Scalar, |x, o| o[0] = cut.phi0(x).value)?;
    let grad = sample_function(grid, Rank::Vector, |x, o| o.copy_from_slice(&cut.phi0(x).grad))?;
    let lap = sample_function(grid, Rank::Scalar, |x, o| o[0] = cut.phi0(x).laplacian())?;
    Ok((phi0, grad, lap))
}

/// Newtonian potential of `θ(t)∇φ₀·u` for one frame.
///
/// The discrete source mean is checked against [`SOURCE_MEAN_TOLERANCE`] and
/// then removed by a multiple of `|∇φ₀|`, keeping the source supported in the
/// transition shell so that `η` stays harmonic in `B₁`. Returns `η` and the
/// relative mean that was removed.
pub fn eta_frame(sp: &mut Spectral, u: &Field, grad0: &Field, theta: f64) -> Result<(Field, f64)> {
    let grid = *u.grid();
    let mut src: Vec<f64> =
        (0..grid.len()).map(|p| theta * (0..3).map(|a| grad0.at(a, p) * u.at(a, p)).sum::<f64>()).collect();
    let max = src.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if max == 0.0 {
        return Ok((Field::zeros(grid, Rank::Scalar), 0.0));
    }
    let mean = src.iter().sum::<f64>() / grid.len() as f64;
    let ratio = mean.abs() / max;
    if ratio > SOURCE_MEAN_TOLERANCE {
        return Err(Error::NonZeroMean { mean, tolerance: SOURCE_MEAN_TOLERANCE * max });
    }
    let weight = grad0.magnitude();
    let wsum: f64 = weight.iter().sum();
    let total = mean * grid.len() as f64;
    for (s, w) in src.iter_mut().zip(&weight) {
        *s -= total * w / wsum;
    }
    let source = Field::from_data(grid, Rank::Scalar, src)?;
    Ok((sp.poisson(&source, 1e-9 * max)?, ratio))
}

/// Per-frame Newtonian potential of `∇φ·u`; see [`eta_frame`].
pub fn eta_correction(u: &SpaceTimeField, cut: &CutoffFamily) -> Result<(SpaceTimeField, f64)> {
    if u.rank() != Rank::Vector {
        return Err(Error::RankMismatch { expected: 3, got: u.rank().components() });
    }
    let grid = *u.grid();
    let (_, grad0, _) = grad_phi_field(grid, cut)?;
    let mut sp = Spectral::new(grid);
    let mut worst: f64 = 0.0;
    let mut frames = Vec::with_capacity(u.time().len());
    for (m, t) in u.time().nodes().into_iter().enumerate() {
        let (eta, ratio) = eta_frame(&mut sp, u.frame(m), &grad0, cut.theta(t))?;
        worst = worst.max(ratio);
        frames.push(eta);
    }
    Ok((SpaceTimeField::new(*u.time(), frames)?, worst))
}

/// `ũ = φu + ∇η` and `η` for a single frame at time `t`.
pub fn localize_velocity_frame(u: &Field, t: f64, cut: &CutoffFamily) -> Result<(Field, Field)> {
    if u.rank() != Rank::Vector {
        return Err(Error::RankMismatch { expected: 3, got: u.rank().components() });
    }
    let grid = *u.grid();
    let (phi0, grad0, _) = grad_phi_field(grid, cut)?;
    let theta = cut.theta(t);
    let mut sp = Spectral::new(grid);
    let (eta, _) = eta_frame(&mut sp, u, &grad0, theta)?;
    let geta = sp.gradient(&eta)?;
    let len = grid.len();
    let mut d = vec![0.0; 3 * len];
    for i in 0..3 {
        for q in 0..len {
            d[i * len + q] = theta * phi0.at(0, q) * u.at(i, q) + geta.at(i, q);
        }
    }
    Ok((Field::from_data(grid, Rank::Vector, d)?, eta))
}

/// Builds `ũ`, `η`, `p̃`, `f⁰` and `f¹` from a discrete pair `(u, p)`.
///
/// `u` itself is never differentiated; only `η` and compactly supported
/// products are.
pub fn localize(u: &SpaceTimeField, p: &SpaceTimeField, cut: &CutoffFamily) -> Result<LocalizedState> {
    if u.rank() != Rank::Vector || p.rank() != Rank::Scalar {
        return Err(Error::RankMismatch { expected: 3, got: u.rank().components() });
    }
    u.ensure_compatible(p)?;
    let time = *u.time();
    if time.len() < 8 {
        return Err(Error::TimeGridTooCoarse(format!("need at least 8 frames, got {}", time.len())));
    }
    let grid = *u.grid();
    let (eta, ratio) = eta_correction(u, cut)?;
    let (phi0, grad0, lap0) = grad_phi_field(grid, cut)?;
    let phit = sample_function(grid, Rank::Scalar, |x, o| o[0] = cut.phi_tilde(x).value)?;
    let mut sp = Spectral::new(grid);
    let times = time.nodes();
    let dt = time.dt();
    let len = grid.len();
    let mut ut = Vec::with_capacity(times.len());
    let mut pt = Vec::with_capacity(times.len());
    let mut f0 = Vec::with_capacity(times.len());
    let mut f1 = Vec::with_capacity(times.len());
    let last = times.len() - 1;
    for (m, &t) in times.iter().enumerate() {
        let th = cut.theta_jet(t);
        let (theta, theta_t) = (th.value(), th.derivative(1));
        let (uf, pf, ef) = (u.frame(m), p.frame(m), eta.frame(m));
        let geta = sp.gradient(ef)?;
        let lap_eta = sp.laplacian(ef);
        // second-order ∂_t η, one-sided at the ends
        let deta: Vec<f64> = (0..len)
            .map(|q| {
                let e = |k: usize| eta.frame(k).at(0, q);
                if m == 0 {
                    (-3.0 * e(0) + 4.0 * e(1) - e(2)) / (2.0 * dt)
                } else if m == last {
                    (3.0 * e(last) - 4.0 * e(last - 1) + e(last - 2)) / (2.0 * dt)
                } else {
                    (e(m + 1) - e(m - 1)) / (2.0 * dt)
                }
            })
            .collect();
        let mut utd = vec![0.0; 3 * len];
        let mut f0d = vec![0.0; 3 * len];
        let mut f1d = vec![0.0; 9 * len];
        let mut ptd = vec![0.0; len];
        for q in 0..len {
            let phi = theta * phi0.at(0, q);
            let gphi = [0, 1, 2].map(|a| theta * grad0.at(a, q));
            let phi_t = theta_t * phi0.at(0, q);
            let lphi = theta * lap0.at(0, q);
            let uq = [0, 1, 2].map(|a| uf.at(a, q));
            let pq = pf.at(0, q);
            let gu = gphi[0] * uq[0] + gphi[1] * uq[1] + gphi[2] * uq[2];
            ptd[q] = phi * pq - deta[q] + lap_eta.at(0, q);
            for i in 0..3 {
                utd[i * len + q] = phi * uq[i] + geta.at(i, q);
                f0d[i * len + q] = uq[i] * (phi_t + lphi) + pq * gphi[i] + gu * uq[i];
                for j in 0..3 {
                    f1d[(3 * i + j) * len + q] =
                        -2.0 * gphi[j] * uq[i] + geta.at(j, q) * phit.at(0, q) * uq[i];
                }
            }
        }
        ut.push(Field::from_data(grid, Rank::Vector, utd)?);
        pt.push(Field::from_data(grid, Rank::Scalar, ptd)?);
        f0.push(Field::from_data(grid, Rank::Vector, f0d)?);
        f1.push(Field::from_data(grid, Rank::Tensor, f1d)?);
    }
    Ok(LocalizedState {
        cutoffs: *cut,
        u: u.clone(),
        u_tilde: SpaceTimeField::new(time, ut)?,
        eta,
        p_tilde: SpaceTimeField::new(time, pt)?,
        f0: SpaceTimeField::new(time, f0)?,
        f1: SpaceTimeField::new(time, f1)?,
        phi_tilde: phit,
        source_mean_ratio: ratio,
    })
}

/// `f²_ij(v) = −φ̃ u_i v_j` for one frame.
pub fn f2_frame(phi_tilde: &Field, u: &Field, v: &Field) -> Result<Field> {
    u.grid().ensure_same(v.grid())?;
    let len = u.grid().len();
    let mut d = vec![0.0; 9 * len];
    for i in 0..3 {
        for j in 0..3 {
            for q in 0..len {
                d[(3 * i + j) * len + q] = -phi_tilde.at(0, q) * u.at(i, q) * v.at(j, q);
            }
        }
    }
    Field::from_data(*u.grid(), Rank::Tensor, d)
}

pub fn f2(state: &LocalizedState, v: &SpaceTimeField) -> Result<SpaceTimeField> {
    state.u.ensure_compatible(v)?;
    v.map_frames(|m, vf| f2_frame(&state.phi_tilde, state.u.frame(m), vf))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportAudit {
    pub radius: f64,
    pub max_f0_outside: f64,
    pub max_f1_outside: f64,
    pub max_f2_outside: f64,
    pub f0_empty: bool,
    pub f1_empty: bool,
    pub m: f64,
    /// `‖f⁰‖_{L^m_t L¹_x}`.
    pub f0_lm_l1: f64,
    /// `‖f⁰‖_{L^m_t L^{3/2,∞}_x}`.
    pub f0_lm_weak32: f64,
    pub pass: bool,
}

fn max_outside(f: &SpaceTimeField, radius: f64) -> f64 {
    let g = *f.grid();
    let mut m: f64 = 0.0;
    for fr in f.frames() {
        let mag = fr.magnitude();
        for (p, v) in mag.iter().enumerate() {
            if dist(g.node(p), [0.0; 3]) >= radius {
                m = m.max(*v);
            }
        }
    }
    m
}

/// Checks that `f⁰`, `f¹` and `f²(ũ)` vanish outside `B_{3/2}` and reports
/// `L^m` in time of the `L¹` and weak `L^{3/2}` norms of `f⁰` on the box.
pub fn forcing_support_audit(state: &LocalizedState, m: f64) -> Result<SupportAudit> {
    let radius = state.cutoffs.outer.1;
    let f2v = f2(state, &state.u_tilde)?;
    let (a, b, c) = (max_outside(&state.f0, radius), max_outside(&state.f1, radius), max_outside(&f2v, radius));
    let mask = Mask::full(*state.f0.grid());
    let mut l1 = Vec::new();
    let mut weak = Vec::new();
    for fr in state.f0.frames() {
        l1.push(lebesgue_norm(fr, &mask, 1.0)?);
        weak.push(lorentz_norm(fr, &mask, 1.5, f64::INFINITY)?.value);
    }
    let w = state.f0.time().trapezoid_weights();
    Ok(SupportAudit {
        radius,
        max_f0_outside: a,
        max_f1_outside: b,
        max_f2_outside: c,
        f0_empty: state.f0.max_abs() == 0.0,
        f1_empty: state.f1.max_abs() == 0.0,
        m,
        f0_lm_l1: combine_in_time(&l1, &w, m),
        f0_lm_weak32: combine_in_time(&weak, &w, m),
        pass: a == 0.0 && b == 0.0 && c == 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    /// Least-squares slope of `ln max|∇η|` against `ln |x|`.
    pub exponent: f64,
    pub intercept: f64,
    pub r_min: f64,
    pub r_max: f64,
    /// `(geometric mid radius, max |∇η|)` per non-empty shell.
    pub shells: Vec<(f64, f64)>,
}

/// Power-law fit of shell maxima of `|∇η|` over `r_min < |x| < r_max`
/// using `n_shells` logarithmically spaced shells.
pub fn grad_eta_tail_fit(eta: &Field, r_min: f64, r_max: f64, n_shells: usize) -> Result<TailFit> {
    if !(r_min > 0.0 && r_max > r_min) || n_shells < 2 {
        return Err(Error::InvalidArgument(format!("bad tail window ({r_min}, {r_max}) / {n_shells}")));
    }
    let g = *eta.grid();
    if r_max > 0.5 * g.side + 1e-12 {
        return Err(Error::BallOutOfRange(format!("tail radius {r_max} exceeds half the box")));
    }
    let grad = Spectral::new(g).gradient(eta)?;
    let mag = grad.magnitude();
    let ratio = (r_max / r_min).ln();
    let mut maxima = vec![0.0f64; n_shells];
    let mut counts = vec![0usize; n_shells];
    for (p, v) in mag.iter().enumerate() {
        let r = dist(g.node(p), [0.0; 3]);
        if r <= r_min || r >= r_max {
            continue;
        }
        let b = (((r / r_min).ln() / ratio) * n_shells as f64) as usize;
        let b = b.min(n_shells - 1);
        maxima[b] = maxima[b].max(*v);
        counts[b] += 1;
    }
    let shells: Vec<(f64, f64)> = (0..n_shells)
        .filter(|&b| counts[b] > 0 && maxima[b] > 0.0)
        .map(|b| (r_min * (ratio * (b as f64 + 0.5) / n_shells as f64).exp(), maxima[b]))
        .collect();
    if shells.len() < 2 {
        return Err(Error::EmptySampleSet);
    }
    let n = shells.len() as f64;
    let (sx, sy) = shells.iter().fold((0.0, 0.0), |(a, b), (r, m)| (a + r.ln(), b + m.ln()));
    let (mx, my) = (sx / n, sy / n);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (r, m) in &shells {
        sxy += (r.ln() - mx) * (m.ln() - my);
        sxx += (r.ln() - mx).powi(2);
    }
    let exponent = sxy / sxx;
    Ok(TailFit { exponent, intercept: my - exponent * mx, r_min, r_max, shells })
}

#[derive(Serialize)]
struct Manifest<'a> {
    cutoffs: &'a CutoffFamily,
    components: Vec<&'a str>,
    source_mean_ratio: f64,
}

/// Writes every component as a snapshot plus `manifest.json`.
pub fn write_localized_state(dir: &Path, state: &LocalizedState) -> Result<()> {
    let parts: [(&str, &SpaceTimeField); 6] = [
        ("u", &state.u),
        ("u_tilde", &state.u_tilde),
        ("eta", &state.eta),
        ("p_tilde", &state.p_tilde),
        ("f0", &state.f0),
        ("f1", &state.f1),
    ];
    for (name, f) in parts {
        write_space_time_snapshot(dir, name, f)?;
    }
    crate::grid::write_snapshot(dir, "phi_tilde", &state.phi_tilde)?;
    let mut components: Vec<&str> = parts.iter().map(|(n, _)| *n).collect();
    components.push("phi_tilde");
    atomic_write_json(
        &dir.join("manifest.json"),
        &Manifest { cutoffs: &state.cutoffs, components, source_mean_ratio: state.source_mean_ratio },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateaus() {
        let c = CutoffFamily::default();
        assert_eq!(c.theta(0.1), 1.0);
        assert_eq!(c.theta(0.04), 0.0);
        assert_eq!(c.theta(0.05), 0.0);
        assert_eq!(c.phi0([1.0, 0.0, 0.0]).value, 1.0);
        assert_eq!(c.phi0([0.0, 1.25, 0.0]).value, 0.0);
        assert_eq!(c.phi_tilde([0.0, 0.0, 1.25]).value, 1.0);
        assert_eq!(c.phi_tilde([1.5, 0.0, 0.0]).value, 0.0);
        for k in 0..200 {
            let r = k as f64 * 0.01;
            let v = c.phi0([r, 0.0, 0.0]).value;
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn radial_derivatives_match_differences() {
        let c = CutoffFamily::default();
        let x = [0.7, 0.5, 0.6];
        let d = c.phi0(x);
        let h = 1e-5;
        for a in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[a] += h;
            xm[a] -= h;
            let (p, m) = (c.phi0(xp), c.phi0(xm));
            assert!(((p.value - m.value) / (2.0 * h) - d.grad[a]).abs() < 1e-7);
            for b in 0..3 {
                let fd2 = (p.grad[b] - m.grad[b]) / (2.0 * h);
                assert!((fd2 - d.hess[a][b]).abs() < 1e-6 * (1.0 + fd2.abs()), "{a}{b} {fd2} {}", d.hess[a][b]);
                for e in 0..3 {
                    let fd = (p.hess[b][e] - m.hess[b][e]) / (2.0 * h);
                    assert!((fd - d.third[a][b][e]).abs() < 1e-5 * (1.0 + fd.abs()));
                }
            }
        }
    }

    #[test]
    fn too_few_frames_rejected() {
        let g = GridSpec::new(8.0, 8).unwrap();
        let tg = crate::grid::TimeGrid::unit(4).unwrap();
        let u = SpaceTimeField::zeros(g, tg, Rank::Vector);
        let p = SpaceTimeField::zeros(g, tg, Rank::Scalar);
        assert!(matches!(localize(&u, &p, &CutoffFamily::default()), Err(Error::TimeGridTooCoarse(_))));
    }
}
