//! Fixed-point iteration `v ↦ Λv = v⁰ − Φ(φ̃u ⊗ v)` for the localized
//! problem, with contraction diagnostics and a uniqueness probe.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flows::{random_solenoidal, Spectrum, TestFlow};
use crate::grid::{Field, GridSpec, Mask, Rank, SpaceTimeField, Spectral, TimeGrid};
use crate::localization::{localize, CutoffFamily, LocalizedState};
use crate::lorentz::lorentz_norm;
use crate::stokes::{build_v0, duhamel_phi, duhamel_spectral, DuhamelConfig, DuhamelPath};

/// Metric used to measure iterates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum IterationNorm {
    /// `sup_t ‖v(t)‖_{L^{3,∞}}` on the box.
    X3,
    /// `sup_t ‖v(t)‖_{L^{3,∞}} + sup_t ‖v(t)‖_{L^{3+δ,∞}}`.
    Y { delta: f64 },
}

impl Default for IterationNorm {
    fn default() -> Self {
        IterationNorm::X3
    }
}

impl IterationNorm {
    pub fn y() -> Self {
        IterationNorm::Y { delta: 0.5 }
    }

    pub fn eval(&self, v: &SpaceTimeField) -> Result<f64> {
        let mask = Mask::full(*v.grid());
        let sup = |q: f64| -> Result<f64> {
            let mut m: f64 = 0.0;
            for f in v.frames() {
                m = m.max(lorentz_norm(f, &mask, q, f64::INFINITY)?.value);
            }
            Ok(m)
        };
        match *self {
            IterationNorm::X3 => sup(3.0),
            IterationNorm::Y { delta } => Ok(sup(3.0)? + sup(3.0 + delta)?),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PicardConfig {
    pub max_iters: usize,
    pub rel_tolerance: f64,
    pub divergence_cap: f64,
    pub norm: IterationNorm,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self { max_iters: 100, rel_tolerance: 1e-10, divergence_cap: 1e6, norm: IterationNorm::X3 }
    }
}

impl PicardConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tolerance > 0.0) {
            return Err(Error::InvalidArgument(format!("rel_tolerance must be positive, got {}", self.rel_tolerance)));
        }
        if !(self.divergence_cap > 1.0) {
            return Err(Error::InvalidArgument(format!("divergence_cap must exceed 1, got {}", self.divergence_cap)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if let IterationNorm::Y { delta } = self.norm {
            if !(delta > 0.0) {
                return Err(Error::InvalidArgument(format!("Y-norm delta must be positive, got {delta}")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PicardVerdict {
    Converged,
    Diverged,
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardTrace {
    /// `‖v_{n+1}‖` for each iteration `n`.
    pub norms: Vec<f64>,
    /// `d_n = ‖v_{n+1} − v_n‖`.
    pub increments: Vec<f64>,
    /// `ρ_n = d_n / d_{n−1}`, absent when `d_{n−1} = 0`.
    pub ratios: Vec<Option<f64>>,
    /// `‖v̄ − Λv̄‖ / ‖v̄‖` (absolute when `v̄ = 0`).
    pub residual: f64,
    pub verdict: PicardVerdict,
}

impl PicardTrace {
    pub fn iterations(&self) -> usize {
        self.increments.len()
    }

    pub fn max_ratio(&self) -> Option<f64> {
        self.ratios.iter().flatten().cloned().reduce(f64::max)
    }

    /// Largest ratio among the first `k` recorded ones.
    pub fn max_early_ratio(&self, k: usize) -> Option<f64> {
        self.ratios.iter().flatten().take(k).cloned().reduce(f64::max)
    }

    /// Worst value of `d_n / (d_m ρ̄^{n−m})` over `m < n` in the tail
    /// starting at `from`, with `ρ̄` the largest tail ratio.
    pub fn geometric_decay_excess(&self, from: usize) -> Option<f64> {
        let tail: Vec<f64> = self.ratios.iter().skip(from).flatten().cloned().collect();
        let rho = tail.iter().cloned().reduce(f64::max)?;
        let d = &self.increments;
        let mut worst: f64 = 0.0;
        for m in from..d.len() {
            for n in m + 1..d.len() {
                if d[m] > 0.0 && d[n] > 0.0 {
                    worst = worst.max(d[n] / (d[m] * rho.powi((n - m) as i32)));
                }
            }
        }
        Some(worst)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,norm,increment,ratio\n");
        for (n, (v, d)) in self.norms.iter().zip(&self.increments).enumerate() {
            let r = self.ratios[n].map(|r| format!("{r:e}")).unwrap_or_default();
            s.push_str(&format!("{n},{v:e},{d:e},{r}\n"));
        }
        s
    }
}

/// Localized data and source solution shared by all iterations.
#[derive(Debug, Clone)]
pub struct PicardProblem {
    pub state: LocalizedState,
    pub v0: SpaceTimeField,
    pub duhamel: DuhamelConfig,
}

impl PicardProblem {
    pub fn new(u: &SpaceTimeField, p: &SpaceTimeField, cutoffs: &CutoffFamily) -> Result<Self> {
        let state = localize(u, p, cutoffs)?;
        let duhamel = DuhamelConfig::spectral(*u.time());
        let v0 = build_v0(&state.f0, &state.f1, &duhamel)?.v0;
        Ok(Self { state, v0, duhamel })
    }

    pub fn from_flow(flow: &TestFlow, grid: GridSpec, time: TimeGrid, cutoffs: &CutoffFamily) -> Result<Self> {
        let (u, p) = flow.sample(grid, time)?;
        let p = p.ok_or_else(|| Error::InvalidArgument(format!("{} has no pressure", flow.name)))?;
        Self::new(&u, &p, cutoffs)
    }

    /// `Φ(φ̃u ⊗ w)` without materializing the tensor history.
    pub fn phi_of_product(&self, w: &SpaceTimeField) -> Result<SpaceTimeField> {
        self.state.u.ensure_compatible(w)?;
        if self.duhamel.path == DuhamelPath::Oseen {
            let t = crate::localization::f2(&self.state, w)?.scaled(-1.0);
            return duhamel_phi(&t, &self.duhamel);
        }
        let grid = *w.grid();
        let len = grid.len();
        let phit = &self.state.phi_tilde;
        let mut sp = Spectral::new(grid);
        let mut buf = vec![0.0; 9 * len];
        duhamel_spectral(&mut sp, &self.duhamel.time, |sp, m| {
            let (u, v) = (self.state.u.frame(m), w.frame(m));
            for i in 0..3 {
                for j in 0..3 {
                    let out = &mut buf[(3 * i + j) * len..(3 * i + j + 1) * len];
                    for q in 0..len {
                        out[q] = phit.at(0, q) * u.at(i, q) * v.at(j, q);
                    }
                }
            }
            let comps: Vec<&[f64]> = buf.chunks(len).collect();
            let s = sp.forward_slices(&comps);
            Ok(sp.tensor_divergence_hat(&s))
        })
    }

    /// `Λv = v⁰ − Φ(φ̃u ⊗ v)`.
    pub fn lambda(&self, v: &SpaceTimeField) -> Result<SpaceTimeField> {
        let phi = self.phi_of_product(v)?;
        self.v0.sub(&phi)
    }

    pub fn zeros(&self) -> SpaceTimeField {
        SpaceTimeField::zeros(*self.v0.grid(), *self.v0.time(), Rank::Vector)
    }

    /// Iterates from `start` until the relative increment drops below the
    /// tolerance, the norm exceeds the cap, or `max_iters` is reached.
    pub fn iterate(&self, start: &SpaceTimeField, cfg: &PicardConfig) -> Result<(SpaceTimeField, PicardTrace)> {
        cfg.validate()?;
        self.v0.ensure_compatible(start)?;
        let mut v = start.clone();
        let mut trace =
            PicardTrace { norms: vec![], increments: vec![], ratios: vec![], residual: f64::NAN, verdict: PicardVerdict::Stalled };
        for _ in 0..cfg.max_iters {
            let next = self.lambda(&v)?;
            let norm = cfg.norm.eval(&next)?;
            let inc = cfg.norm.eval(&next.sub(&v)?)?;
            let ratio = trace.increments.last().and_then(|&d: &f64| (d > 0.0).then(|| inc / d));
            trace.norms.push(norm);
            trace.increments.push(inc);
            trace.ratios.push(ratio);
            v = next;
            if !norm.is_finite() || norm > cfg.divergence_cap {
                trace.verdict = PicardVerdict::Diverged;
                return Ok((v, trace));
            }
            if inc <= cfg.rel_tolerance * norm {
                trace.verdict = PicardVerdict::Converged;
                break;
            }
        }
        let again = self.lambda(&v)?;
        let res = cfg.norm.eval(&again.sub(&v)?)?;
        let vn = cfg.norm.eval(&v)?;
        trace.residual = if vn > 0.0 { res / vn } else { res };
        Ok((v, trace))
    }

    pub fn solve(&self, cfg: &PicardConfig) -> Result<(SpaceTimeField, PicardTrace)> {
        self.iterate(&self.zeros(), cfg)
    }
}

/// `Λv` for explicit data; see [`PicardProblem::lambda`].
pub fn lambda_map(v: &SpaceTimeField, problem: &PicardProblem) -> Result<SpaceTimeField> {
    problem.lambda(v)
}

/// Localizes `(u, p)`, builds `v⁰` and iterates from zero.
pub fn solve_fixed_point(
    u: &SpaceTimeField,
    p: &SpaceTimeField,
    cutoffs: &CutoffFamily,
    cfg: &PicardConfig,
) -> Result<(SpaceTimeField, PicardTrace)> {
    PicardProblem::new(u, p, cutoffs)?.solve(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StartIterate {
    Zero,
    V0,
    /// Band-limited random solenoidal field times `t`.
    Random { seed: u64 },
}

impl StartIterate {
    fn build(&self, problem: &PicardProblem) -> Result<SpaceTimeField> {
        match self {
            StartIterate::Zero => Ok(problem.zeros()),
            StartIterate::V0 => Ok(problem.v0.clone()),
            StartIterate::Random { seed } => {
                let g = *problem.v0.grid();
                let spec = Spectrum { side: g.side, shell_min: 1.0, shell_max: 2.0, slope: 1.0 };
                let f = random_solenoidal(*seed, spec)?;
                crate::grid::sample_space_time(g, *problem.v0.time(), Rank::Vector, |x, t, o| {
                    let u = f.velocity(x, 0.0);
                    for i in 0..3 {
                        o[i] = t * u[i];
                    }
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub starts: Vec<StartIterate>,
    pub verdicts: Vec<PicardVerdict>,
    pub iterations: Vec<usize>,
    /// Largest pairwise distance between converged limits.
    pub max_distance: f64,
    pub all_converged: bool,
    /// `max_distance ≤ 100 · rel_tolerance · max‖limit‖` when all converged.
    pub pass: bool,
}

pub fn uniqueness_probe(problem: &PicardProblem, cfg: &PicardConfig, starts: &[StartIterate]) -> Result<UniquenessReport> {
    let mut limits = Vec::new();
    let mut verdicts = Vec::new();
    let mut iterations = Vec::new();
    for s in starts {
        let (v, trace) = problem.iterate(&s.build(problem)?, cfg)?;
        verdicts.push(trace.verdict);
        iterations.push(trace.iterations());
        if trace.verdict == PicardVerdict::Converged {
            limits.push(v);
        }
    }
    let mut max_distance: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for (i, a) in limits.iter().enumerate() {
        scale = scale.max(cfg.norm.eval(a)?);
        for b in &limits[i + 1..] {
            max_distance = max_distance.max(cfg.norm.eval(&a.sub(b)?)?);
        }
    }
    let all_converged = verdicts.iter().all(|v| *v == PicardVerdict::Converged);
    let pass = all_converged && max_distance <= 100.0 * cfg.rel_tolerance * scale.max(f64::MIN_POSITIVE);
    Ok(UniquenessReport { starts: starts.to_vec(), verdicts, iterations, max_distance, all_converged, pass })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub amplitude: f64,
    /// `sup_t ‖u(t)‖_{L^{3,∞}(B₂)}` of the scaled flow.
    pub epsilon: f64,
    /// Largest of the first few contraction ratios (0 when undefined).
    pub ratio: f64,
    pub verdict: PicardVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub points: Vec<ScanPoint>,
    pub monotone: bool,
    /// Amplitude where the ratio crosses 1, when bracketed.
    pub threshold_amplitude: Option<f64>,
    /// `ε*`: the weak-L³ size of the flow at the threshold.
    pub epsilon_star: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanConfig {
    /// Ratios considered when measuring contraction.
    pub early_iterations: usize,
    pub bisection_steps: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self { early_iterations: 6, bisection_steps: 8 }
    }
}

/// `sup_t ‖u(t)‖_{L^{3,∞}(B₂)}` of a sampled field.
pub fn epsilon_of(u: &SpaceTimeField) -> Result<f64> {
    let mask = Mask::ball(*u.grid(), [0.0; 3], 2.0);
    let mut m: f64 = 0.0;
    for f in u.frames() {
        m = m.max(lorentz_norm(f, &mask, 3.0, f64::INFINITY)?.value);
    }
    Ok(m)
}

fn scan_point(
    flow: &TestFlow,
    amplitude: f64,
    grid: GridSpec,
    time: TimeGrid,
    cutoffs: &CutoffFamily,
    cfg: &PicardConfig,
    scan: &ScanConfig,
) -> Result<ScanPoint> {
    let f = flow.scaled(amplitude);
    let (u, p) = f.sample(grid, time)?;
    let p = p.ok_or_else(|| Error::InvalidArgument(format!("{} has no pressure", flow.name)))?;
    let epsilon = epsilon_of(&u)?;
    let problem = PicardProblem::new(&u, &p, cutoffs)?;
    let mut c = *cfg;
    c.max_iters = scan.early_iterations + 1;
    let (_, trace) = problem.solve(&c)?;
    Ok(ScanPoint { amplitude, epsilon, ratio: trace.max_early_ratio(scan.early_iterations).unwrap_or(0.0), verdict: trace.verdict })
}

/// Measures the early contraction ratio over an amplitude grid and bisects
/// (in `log` amplitude) for the crossing of 1.
pub fn contraction_threshold_scan(
    flow: &TestFlow,
    amplitudes: &[f64],
    grid: GridSpec,
    time: TimeGrid,
    cutoffs: &CutoffFamily,
    cfg: &PicardConfig,
    scan: &ScanConfig,
) -> Result<ScanReport> {
    if amplitudes.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut amps = amplitudes.to_vec();
    amps.sort_by(|a, b| a.total_cmp(b));
    let mut points = Vec::with_capacity(amps.len());
    for &a in &amps {
        points.push(scan_point(flow, a, grid, time, cutoffs, cfg, scan)?);
    }
    let monotone = points.windows(2).all(|w| w[1].ratio >= w[0].ratio);
    let bracket = points.windows(2).find(|w| w[0].ratio < 1.0 && w[1].ratio >= 1.0).map(|w| (w[0], w[1]));
    let (threshold_amplitude, epsilon_star) = match bracket {
        Some((lo, hi)) if lo.amplitude > 0.0 => {
            let (mut lo, mut hi) = (lo, hi);
            for _ in 0..scan.bisection_steps {
                let mid = (lo.amplitude * hi.amplitude).sqrt();
                let pt = scan_point(flow, mid, grid, time, cutoffs, cfg, scan)?;
                if pt.ratio < 1.0 {
                    lo = pt;
                } else {
                    hi = pt;
                }
            }
            // interpolate the crossing linearly in the ratio
            let s = if hi.ratio > lo.ratio { (1.0 - lo.ratio) / (hi.ratio - lo.ratio) } else { 0.5 };
            let a = lo.amplitude + s * (hi.amplitude - lo.amplitude);
            let e = lo.epsilon + s * (hi.epsilon - lo.epsilon);
            (Some(a), Some(e))
        }
        _ => (None, None),
    };
    Ok(ScanReport { points, monotone, threshold_amplitude, epsilon_star })
}

/// Largest relative deviation from the affinity identity
/// `Λv₁ − Λv₂ = −Φ(φ̃u ⊗ (v₁ − v₂))`, measured in the max norm.
pub fn affinity_defect(problem: &PicardProblem, v1: &SpaceTimeField, v2: &SpaceTimeField) -> Result<f64> {
    let lhs = problem.lambda(v1)?.sub(&problem.lambda(v2)?)?;
    let rhs = problem.phi_of_product(&v1.sub(v2)?)?.scaled(-1.0);
    let scale = lhs.max_abs().max(rhs.max_abs());
    let d = lhs.sub(&rhs)?.max_abs();
    Ok(if scale > 0.0 { d / scale } else { d })
}

/// Frame-wise maximum of `|div v|`, for checking that iterates stay solenoidal.
pub fn max_divergence(v: &SpaceTimeField) -> Result<f64> {
    let mut sp = Spectral::new(*v.grid());
    let mut m: f64 = 0.0;
    for f in v.frames() {
        let d: Field = sp.divergence(f)?;
        m = m.max(d.max_abs());
    }
    Ok(m)
}
