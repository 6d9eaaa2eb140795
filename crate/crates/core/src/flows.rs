//! Closed-form test flows and weak/strong residual checkers for the
//! Navier–Stokes system `∂_t u − Δu + (u·∇)u + ∇p = 0`, `div u = 0`.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{dist, sample_space_time, GridSpec, Rank, SpaceTimeField, TimeGrid};
use crate::jet::Jet;
use crate::localization::{bump_jet, radial_derivs, smoothstep_jet, RadialDerivs};
use crate::quadrature::gauss_legendre_on;

/// Polynomial in `x₁, x₂, x₃` as a map from exponents to coefficients.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Polynomial {
    terms: BTreeMap<[u32; 3], f64>,
}

impl Polynomial {
    pub fn new(terms: &[(f64, [u32; 3])]) -> Self {
        let mut p = Polynomial::default();
        for &(c, e) in terms {
            *p.terms.entry(e).or_insert(0.0) += c;
        }
        p.terms.retain(|_, c| *c != 0.0);
        p
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e[0] + e[1] + e[2]).max().unwrap_or(0)
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| c * x[0].powi(e[0] as i32) * x[1].powi(e[1] as i32) * x[2].powi(e[2] as i32))
            .sum()
    }

    pub fn partial(&self, axis: usize) -> Polynomial {
        let mut out = Polynomial::default();
        for (e, c) in &self.terms {
            if e[axis] > 0 {
                let mut f = *e;
                f[axis] -= 1;
                *out.terms.entry(f).or_insert(0.0) += c * e[axis] as f64;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn laplacian(&self) -> Polynomial {
        let mut out = Polynomial::default();
        for a in 0..3 {
            for (e, c) in self.partial(a).partial(a).terms {
                *out.terms.entry(e).or_insert(0.0) += c;
            }
        }
        out.terms.retain(|_, c| *c != 0.0);
        out
    }

    pub fn max_coefficient(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// Harmonic polynomial of degree at most 4, with its gradient cached.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPolynomial {
    pub poly: Polynomial,
    grad: [Polynomial; 3],
}

impl HarmonicPolynomial {
    pub fn new(poly: Polynomial) -> Result<Self> {
        if poly.degree() > 4 {
            return Err(Error::InvalidArgument(format!("degree {} exceeds 4", poly.degree())));
        }
        let lap = poly.laplacian();
        if lap.max_coefficient() > 1e-12 * poly.max_coefficient().max(1.0) {
            return Err(Error::InvalidArgument(format!("polynomial is not harmonic: Δh = {:?}", lap)));
        }
        let grad = [poly.partial(0), poly.partial(1), poly.partial(2)];
        Ok(Self { poly, grad })
    }

    /// `x₁x₂`.
    pub fn x1x2() -> Self {
        Self::new(Polynomial::new(&[(1.0, [1, 1, 0])])).expect("harmonic")
    }

    pub fn eval(&self, x: [f64; 3]) -> f64 {
        self.poly.eval(x)
    }

    pub fn gradient(&self, x: [f64; 3]) -> [f64; 3] {
        [0, 1, 2].map(|a| self.grad[a].eval(x))
    }
}

/// `g(t) = Σ a_k t^k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeProfile {
    pub coefficients: Vec<f64>,
}

impl TimeProfile {
    pub fn linear() -> Self {
        Self { coefficients: vec![0.0, 1.0] }
    }

    pub fn constant(c: f64) -> Self {
        Self { coefficients: vec![c] }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coefficients.iter().rev().fold(0.0, |a, c| a * t + c)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let mut s = 0.0;
        for (k, c) in self.coefficients.iter().enumerate().skip(1).rev() {
            s = s * t + k as f64 * c;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub k: [f64; 3],
    pub cos_amp: [f64; 3],
    pub sin_amp: [f64; 3],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FlowKind {
    Zero,
    /// `u = g(t)∇h`, `p = −g'h − g²|∇h|²/2`.
    Serrin { g: TimeProfile, h: HarmonicPolynomial },
    /// Landau jet with axis `e₃` and parameter `a > 1`.
    Landau { a: f64 },
    /// Finite sum of solenoidal Fourier modes, constant in time.
    RandomSolenoidal { modes: Vec<Mode> },
    /// `u = t(x₂, −x₁, 0)`: solenoidal but not a solution.
    Rotation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Whole,
    /// Singular at the origin.
    PuncturedSpace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowProperties {
    pub divergence_free: bool,
    pub homogeneity: Option<f64>,
    pub stationary: bool,
    pub has_pressure: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFlow {
    pub name: String,
    pub kind: FlowKind,
    pub domain: Domain,
    pub properties: FlowProperties,
    /// Multiplies `u`; `p` scales by its square.
    pub amplitude: f64,
}

/// Spherical sample points used for construction-time property checks.
fn probe_points() -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..16)
        .map(|_| {
            let r = rng.gen_range(0.3..1.0);
            let z: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            [r * s * ph.cos(), r * s * ph.sin(), r * z]
        })
        .collect()
}

impl TestFlow {
    fn build(name: &str, kind: FlowKind, domain: Domain, properties: FlowProperties) -> Result<Self> {
        let f = TestFlow { name: name.into(), kind, domain, properties, amplitude: 1.0 };
        f.verify_properties()?;
        Ok(f)
    }

    pub fn zero() -> Self {
        let props = FlowProperties { divergence_free: true, homogeneity: None, stationary: true, has_pressure: true };
        TestFlow { name: "zero".into(), kind: FlowKind::Zero, domain: Domain::Whole, properties: props, amplitude: 1.0 }
    }

    /// Same flow with velocity multiplied by `a`. Serrin flows absorb `a`
    /// into `g` and stay exact solutions; otherwise the pressure is kept only
    /// for `|a| = 1` or the zero flow since the system is not linear.
    pub fn scaled(&self, a: f64) -> Self {
        let mut f = self.clone();
        if let FlowKind::Serrin { g, .. } = &mut f.kind {
            g.coefficients.iter_mut().for_each(|c| *c *= a);
            return f;
        }
        f.amplitude *= a;
        f.properties.has_pressure &= a.abs() == 1.0 || matches!(f.kind, FlowKind::Zero);
        f
    }

    pub fn velocity(&self, x: [f64; 3], t: f64) -> [f64; 3] {
        let u = match &self.kind {
            FlowKind::Zero => [0.0; 3],
            FlowKind::Serrin { g, h } => {
                let gt = g.eval(t);
                h.gradient(x).map(|v| gt * v)
            }
            FlowKind::Landau { a } => landau_velocity(*a, x),
            FlowKind::RandomSolenoidal { modes } => {
                let mut u = [0.0; 3];
                for m in modes {
                    let ph = m.k[0] * x[0] + m.k[1] * x[1] + m.k[2] * x[2];
                    let (s, c) = ph.sin_cos();
                    for i in 0..3 {
                        u[i] += m.cos_amp[i] * c + m.sin_amp[i] * s;
                    }
                }
                u
            }
            FlowKind::Rotation => [t * x[1], -t * x[0], 0.0],
        };
        u.map(|v| self.amplitude * v)
    }

    pub fn pressure(&self, x: [f64; 3], t: f64) -> Option<f64> {
        if !self.properties.has_pressure {
            return None;
        }
        let a2 = self.amplitude * self.amplitude;
        match &self.kind {
            FlowKind::Zero => Some(0.0),
            FlowKind::Serrin { g, h } => {
                // Serrin flows keep amplitude 1, see `scaled`
                let gt = self.amplitude * g.eval(t);
                let gd = self.amplitude * g.derivative(t);
                let gr = h.gradient(x);
                Some(-gd * h.eval(x) - 0.5 * gt * gt * (gr[0] * gr[0] + gr[1] * gr[1] + gr[2] * gr[2]))
            }
            FlowKind::Landau { a } => Some(a2 * landau_pressure(*a, x)),
            _ => None,
        }
    }

    /// Fourth-order central differences of the closed form.
    pub fn velocity_gradient(&self, x: [f64; 3], t: f64, step: f64) -> [[f64; 3]; 3] {
        let mut g = [[0.0; 3]; 3];
        for j in 0..3 {
            let at = |s: f64| {
                let mut y = x;
                y[j] += s;
                self.velocity(y, t)
            };
            let (p1, m1, p2, m2) = (at(step), at(-step), at(2.0 * step), at(-2.0 * step));
            for i in 0..3 {
                g[i][j] = (8.0 * (p1[i] - m1[i]) - (p2[i] - m2[i])) / (12.0 * step);
            }
        }
        g
    }

    /// Checks divergence and homogeneity claims at fixed probe points.
    pub fn verify_properties(&self) -> Result<()> {
        let t = 0.5;
        for x in probe_points() {
            let scale = self.velocity(x, t).iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if self.properties.divergence_free {
                let g = self.velocity_gradient(x, t, 1e-3);
                let div = g[0][0] + g[1][1] + g[2][2];
                if div.abs() > 1e-7 * scale {
                    return Err(Error::InvalidArgument(format!("{}: divergence {div:e} at {x:?}", self.name)));
                }
            }
            if let Some(d) = self.properties.homogeneity {
                let (u1, u2) = (self.velocity(x, t), self.velocity(x.map(|v| 2.0 * v), t));
                for i in 0..3 {
                    if (u2[i] - 2f64.powf(d) * u1[i]).abs() > 1e-12 * scale {
                        return Err(Error::InvalidArgument(format!("{}: not {d}-homogeneous", self.name)));
                    }
                }
            }
        }
        Ok(())
    }

    /// `u` and, when known, `p` on a grid.
    pub fn sample(&self, grid: GridSpec, time: TimeGrid) -> Result<(SpaceTimeField, Option<SpaceTimeField>)> {
        let u = sample_space_time(grid, time, Rank::Vector, |x, t, o| o.copy_from_slice(&self.velocity(x, t)))?;
        let p = if self.properties.has_pressure {
            Some(sample_space_time(grid, time, Rank::Scalar, |x, t, o| o[0] = self.pressure(x, t).unwrap_or(0.0))?)
        } else {
            None
        };
        Ok((u, p))
    }
}

pub fn serrin_flow(g: TimeProfile, h: HarmonicPolynomial) -> Result<TestFlow> {
    let props = FlowProperties { divergence_free: true, homogeneity: None, stationary: false, has_pressure: true };
    TestFlow::build("serrin", FlowKind::Serrin { g, h }, Domain::Whole, props)
}

/// `u = t(x₂, x₁, 0)`, `p = −x₁x₂ − t²(x₁² + x₂²)/2`.
pub fn serrin_default() -> TestFlow {
    serrin_flow(TimeProfile::linear(), HarmonicPolynomial::x1x2()).expect("valid serrin flow")
}

pub fn rotation_flow() -> TestFlow {
    let props = FlowProperties { divergence_free: true, homogeneity: None, stationary: false, has_pressure: false };
    TestFlow::build("rotation", FlowKind::Rotation, Domain::Whole, props).expect("valid rotation")
}

fn landau_velocity(a: f64, x: [f64; 3]) -> [f64; 3] {
    let r = (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt();
    let c = x[2] / r;
    let den = a - c;
    let ur = 2.0 / r * ((a * a - 1.0) / (den * den) - 1.0);
    // u_θ e_θ written without dividing by sin θ
    let k = -2.0 / (r * r * den);
    let rp2 = x[0] * x[0] + x[1] * x[1];
    [
        ur * x[0] / r + k * c * x[0],
        ur * x[1] / r + k * c * x[1],
        ur * x[2] / r - k * rp2 / r,
    ]
}

fn landau_pressure(a: f64, x: [f64; 3]) -> f64 {
    let r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    let c = x[2] / r2.sqrt();
    4.0 * (a * c - 1.0) / (r2 * (a - c) * (a - c))
}

/// Stationary Landau solution with axis `e₃`; `a > 1`, strength decreasing in `a`.
pub fn landau_flow(a: f64) -> Result<TestFlow> {
    if !(a.is_finite() && a > 1.0) {
        return Err(Error::InvalidArgument(format!("Landau parameter must satisfy a > 1, got {a}")));
    }
    let props = FlowProperties { divergence_free: true, homogeneity: Some(-1.0), stationary: true, has_pressure: true };
    TestFlow::build("landau", FlowKind::Landau { a }, Domain::PuncturedSpace, props)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Box side setting the fundamental wavenumber `2π / side`.
    pub side: f64,
    /// Integer shell bounds on `|n|`, `k = 2πn / side`.
    pub shell_min: f64,
    pub shell_max: f64,
    /// Amplitude decays like `|n|^{-slope}`.
    pub slope: f64,
}

impl Spectrum {
    pub fn shell(side: f64, kappa: f64) -> Self {
        Self { side, shell_min: kappa, shell_max: kappa, slope: 0.0 }
    }
}

/// Random solenoidal field periodic on the box, built mode by mode.
pub fn random_solenoidal(seed: u64, spectrum: Spectrum) -> Result<TestFlow> {
    if spectrum.shell_min < 0.0 || spectrum.shell_max < spectrum.shell_min || spectrum.side <= 0.0 {
        return Err(Error::InvalidArgument(format!("invalid spectrum {spectrum:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nmax = spectrum.shell_max.floor() as i64;
    let base = 2.0 * std::f64::consts::PI / spectrum.side;
    let mut modes = Vec::new();
    for a in -nmax..=nmax {
        for b in -nmax..=nmax {
            for c in -nmax..=nmax {
                // one representative of each ±n pair
                if (a, b, c) <= (0, 0, 0) {
                    continue;
                }
                let n2 = (a * a + b * b + c * c) as f64;
                let nn = n2.sqrt();
                if nn < spectrum.shell_min - 1e-12 || nn > spectrum.shell_max + 1e-12 {
                    continue;
                }
                let k = [a as f64 * base, b as f64 * base, c as f64 * base];
                let amp = nn.powf(-spectrum.slope);
                let project = |v: [f64; 3]| {
                    let d = (v[0] * a as f64 + v[1] * b as f64 + v[2] * c as f64) / n2;
                    [v[0] - d * a as f64, v[1] - d * b as f64, v[2] - d * c as f64].map(|x| amp * x)
                };
                let ca = project([0; 3].map(|_| rng.gen_range(-1.0..1.0)));
                let sa = project([0; 3].map(|_| rng.gen_range(-1.0..1.0)));
                modes.push(Mode { k, cos_amp: ca, sin_amp: sa });
            }
        }
    }
    let props = FlowProperties { divergence_free: true, homogeneity: None, stationary: true, has_pressure: false };
    TestFlow::build("random_solenoidal", FlowKind::RandomSolenoidal { modes }, Domain::Whole, props)
}

/// Largest wavenumber component of a Fourier flow, for Nyquist checks.
pub fn max_wavenumber(flow: &TestFlow) -> f64 {
    match &flow.kind {
        FlowKind::RandomSolenoidal { modes } => {
            modes.iter().flat_map(|m| m.k).fold(0.0, |a: f64, v| a.max(v.abs()))
        }
        _ => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFieldKind {
    /// `ζ = χ(t) β(x) e_j`.
    Plain,
    /// `ζ = χ(t) curl(β(x) e_j)`, solenoidal.
    Curl,
}

/// Space-time test field built from the radial bump `β(|x − c| / r)`
/// and the time bump `χ(t) = 1 − ψ(|t − t_c| / τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestField {
    pub center: [f64; 3],
    pub radius: f64,
    pub component: usize,
    pub t_center: f64,
    pub t_radius: f64,
    pub kind: TestFieldKind,
}

impl TestField {
    pub fn chi(&self, t: f64) -> (f64, f64) {
        let s = (t - self.t_center) / self.t_radius;
        // ψ is flat at 0, so |s| is harmless
        let jet = Jet::constant(1.0) - smoothstep_jet(Jet::variable(s.abs()));
        let d = jet.derivative(1) * s.signum() / self.t_radius;
        (jet.value(), d)
    }

    pub fn space(&self, x: [f64; 3]) -> RadialDerivs {
        let r = self.radius;
        radial_derivs(|rho| bump_jet(rho.scale(1.0 / r)), x, self.center)
    }
}

/// Battery of at least 21 test fields: radii 0.8, 0.4, 0.2 with centres on a
/// lattice inside `B₁`.
pub fn default_battery(kind: TestFieldKind) -> Vec<TestField> {
    let mut centers: Vec<([f64; 3], f64)> = vec![([0.0; 3], 0.8)];
    for a in 0..3 {
        for s in [-1.0, 1.0] {
            let mut c = [0.0; 3];
            c[a] = 0.3 * s;
            centers.push((c, 0.4));
        }
    }
    for i in 0..8 {
        let c = [0, 1, 2].map(|a| if i >> a & 1 == 1 { 0.4 } else { -0.4 });
        centers.push((c, 0.2));
    }
    for a in 0..2 {
        for s in [-1.0, 1.0] {
            let mut c = [0.0; 3];
            c[a] = 0.6 * s;
            centers.push((c, 0.2));
        }
    }
    let windows = [(0.55, 0.4), (0.5, 0.42), (0.57, 0.38)];
    let mut out = Vec::new();
    for (i, (c, r)) in centers.iter().enumerate() {
        let comps: Vec<usize> = if i == 0 { vec![0, 1, 2] } else { vec![i % 3] };
        for j in comps {
            let (tc, tr) = windows[out.len() % 3];
            out.push(TestField { center: *c, radius: *r, component: j, t_center: tc, t_radius: tr, kind });
        }
    }
    out
}

/// Scalar spatial bumps for the divergence check.
pub fn default_scalar_battery() -> Vec<TestField> {
    default_battery(TestFieldKind::Plain)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualQuadrature {
    /// Spherical rule on each support: `resolution / 2` radial panels of
    /// order 8 (most of them on the transition band), `resolution / 2`
    /// Gauss nodes in `cos θ` and `resolution` nodes in `φ`.
    pub resolution: usize,
    pub time: TimeGrid,
}

impl ResidualQuadrature {
    pub fn new(resolution: usize, time: TimeGrid) -> Self {
        Self { resolution, time }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub flow: String,
    pub battery_id: String,
    pub residuals: Vec<f64>,
    pub tol: f64,
    pub verdict: Verdict,
}

impl ResidualReport {
    fn new(flow: &str, battery_id: &str, residuals: Vec<f64>, tol: f64) -> Self {
        let pass = residuals.iter().all(|r| r.abs() <= tol);
        Self {
            flow: flow.into(),
            battery_id: battery_id.into(),
            residuals,
            tol,
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.residuals.iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

/// Spatial part of the integrand for one test field at one point:
/// `(ζ_s, Δζ_s, ∂_iζ_s_l, div ζ_s)` with `ζ = χ ζ_s`.
struct SpatialTest {
    zeta: [f64; 3],
    lap: [f64; 3],
    grad: [[f64; 3]; 3],
    div: f64,
}

fn spatial_test(tf: &TestField, x: [f64; 3]) -> SpatialTest {
    let d = tf.space(x);
    let j = tf.component;
    let mut s = SpatialTest { zeta: [0.0; 3], lap: [0.0; 3], grad: [[0.0; 3]; 3], div: 0.0 };
    match tf.kind {
        TestFieldKind::Plain => {
            s.zeta[j] = d.value;
            s.lap[j] = d.laplacian();
            for i in 0..3 {
                s.grad[i][j] = d.grad[i];
            }
            s.div = d.grad[j];
        }
        TestFieldKind::Curl => {
            // (curl βe_j)_l = ε_{lmj} ∂_m β
            let gl = d.grad_laplacian();
            for l in 0..3 {
                for m in 0..3 {
                    let e = levi_civita(l, m, j);
                    if e == 0.0 {
                        continue;
                    }
                    s.zeta[l] += e * d.grad[m];
                    s.lap[l] += e * gl[m];
                    for i in 0..3 {
                        s.grad[i][l] += e * d.hess[i][m];
                    }
                }
            }
        }
    }
    s
}

fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

/// `∫∫ u·(−∂_tζ − Δζ) − u_i u_j ∂_iζ_j − p div ζ` for one test field given
/// spatial nodes with a common weight and time nodes with weights.
fn residual_one(
    tf: &TestField,
    points: &[[f64; 3]],
    wspace: &[f64],
    times: &[f64],
    wtime: &[f64],
    mut up: impl FnMut(usize, usize) -> ([f64; 3], Option<f64>),
) -> f64 {
    let tests: Vec<SpatialTest> = points.iter().map(|&x| spatial_test(tf, x)).collect();
    let mut total = 0.0;
    for (m, &t) in times.iter().enumerate() {
        let (chi, dchi) = tf.chi(t);
        if chi == 0.0 && dchi == 0.0 {
            continue;
        }
        let mut acc = 0.0;
        for (q, st) in tests.iter().enumerate() {
            let w = wspace[q];
            if st.zeta == [0.0; 3] && st.lap == [0.0; 3] && st.div == 0.0 && st.grad == [[0.0; 3]; 3] {
                continue;
            }
            let (u, p) = up(q, m);
            let mut v = 0.0;
            for l in 0..3 {
                v -= u[l] * (dchi * st.zeta[l] + chi * st.lap[l]);
                for i in 0..3 {
                    v -= chi * u[i] * u[l] * st.grad[i][l];
                }
            }
            if let Some(p) = p {
                v -= chi * p * st.div;
            }
            acc += w * v;
        }
        total += wtime[m] * acc;
    }
    total
}

fn local_nodes(tf: &TestField, resolution: usize) -> (Vec<[f64; 3]>, Vec<f64>) {
    let half = (resolution / 2).max(2);
    let r = tf.radius;
    // β = 1 on [0, r/2]; the transition band gets most panels
    let mut radial = (Vec::new(), Vec::new());
    let inner = (half / 8).max(1);
    let outer = half - inner;
    let mut push = |a: f64, b: f64| {
        let (x, w) = gauss_legendre_on(8, a, b);
        radial.0.extend(x);
        radial.1.extend(w);
    };
    for k in 0..inner {
        push(0.5 * r * k as f64 / inner as f64, 0.5 * r * (k + 1) as f64 / inner as f64);
    }
    for k in 0..outer {
        push(0.5 * r * (1.0 + k as f64 / outer as f64), 0.5 * r * (1.0 + (k + 1) as f64 / outer as f64));
    }
    let (cz, wz) = gauss_legendre_on(half, -1.0, 1.0);
    let nphi = 2 * half;
    let dphi = std::f64::consts::TAU / nphi as f64;
    let mut pts = Vec::with_capacity(radial.0.len() * half * nphi);
    let mut wts = Vec::with_capacity(pts.capacity());
    for (rho, wr) in radial.0.iter().zip(&radial.1) {
        for (z, wzk) in cz.iter().zip(&wz) {
            let s = (1.0 - z * z).sqrt();
            for k in 0..nphi {
                let (sp, cp) = (k as f64 * dphi).sin_cos();
                pts.push([tf.center[0] + rho * s * cp, tf.center[1] + rho * s * sp, tf.center[2] + rho * z]);
                wts.push(wr * rho * rho * wzk * dphi);
            }
        }
    }
    (pts, wts)
}

fn check_support(flow: &TestFlow, tf: &TestField) -> Result<()> {
    if flow.domain == Domain::PuncturedSpace && dist(tf.center, [0.0; 3]) <= tf.radius {
        return Err(Error::InvalidArgument(format!("test field at {:?} meets the singularity of {}", tf.center, flow.name)));
    }
    if tf.t_center - tf.t_radius <= 0.0 || tf.t_center + tf.t_radius >= 1.0 {
        return Err(Error::InvalidArgument("test field time support must lie in (0, 1)".into()));
    }
    Ok(())
}

fn closed_form_residuals(
    flow: &TestFlow,
    battery: &[TestField],
    quad: &ResidualQuadrature,
    with_pressure: bool,
) -> Result<Vec<f64>> {
    let times = quad.time.nodes();
    let wt = quad.time.trapezoid_weights();
    let mut out = Vec::with_capacity(battery.len());
    for tf in battery {
        check_support(flow, tf)?;
        let (pts, w) = local_nodes(tf, quad.resolution);
        let r = residual_one(tf, &pts, &w, &times, &wt, |q, m| {
            let (x, t) = (pts[q], times[m]);
            let p = if with_pressure { flow.pressure(x, t) } else { None };
            (flow.velocity(x, t), p)
        });
        out.push(r);
    }
    Ok(out)
}

/// Weak form against general test fields; requires a pressure.
pub fn weak_residual(flow: &TestFlow, battery: &[TestField], quad: &ResidualQuadrature, tol: f64) -> Result<ResidualReport> {
    if !flow.properties.has_pressure {
        return Err(Error::InvalidArgument(format!("{} has no pressure", flow.name)));
    }
    let r = closed_form_residuals(flow, battery, quad, true)?;
    Ok(ResidualReport::new(&flow.name, "weak", r, tol))
}

/// Weak form against solenoidal test fields; the pressure never enters.
pub fn very_weak_residual(
    flow: &TestFlow,
    battery: &[TestField],
    quad: &ResidualQuadrature,
    tol: f64,
) -> Result<ResidualReport> {
    if let Some(tf) = battery.iter().find(|t| t.kind != TestFieldKind::Curl) {
        return Err(Error::InvalidArgument(format!("test field at {:?} is not solenoidal", tf.center)));
    }
    let r = closed_form_residuals(flow, battery, quad, false)?;
    Ok(ResidualReport::new(&flow.name, "very_weak", r, tol))
}

/// Weak residual of grid data, using the grid nodes inside each support.
pub fn weak_residual_on_grid(
    u: &SpaceTimeField,
    p: Option<&SpaceTimeField>,
    battery: &[TestField],
    tol: f64,
) -> Result<ResidualReport> {
    if let Some(p) = p {
        u.ensure_compatible(p)?;
    } else if let Some(tf) = battery.iter().find(|t| t.kind != TestFieldKind::Curl) {
        return Err(Error::InvalidArgument(format!("test field at {:?} needs a pressure", tf.center)));
    }
    let g = *u.grid();
    let times = u.time().nodes();
    let wt = u.time().trapezoid_weights();
    let mut out = Vec::with_capacity(battery.len());
    for tf in battery {
        let (lo, hi) = (g.lower(), g.upper());
        if (0..3).any(|a| tf.center[a] - tf.radius < lo[a] || tf.center[a] + tf.radius > hi[a]) {
            return Err(Error::InvalidArgument(format!("test field at {:?} leaves the box", tf.center)));
        }
        let idx: Vec<usize> = (0..g.len()).filter(|&q| dist(g.node(q), tf.center) < tf.radius).collect();
        let pts: Vec<[f64; 3]> = idx.iter().map(|&q| g.node(q)).collect();
        let w = vec![g.cell_volume(); pts.len()];
        out.push(residual_one(tf, &pts, &w, &times, &wt, |q, m| {
            let f = u.frame(m);
            let node = idx[q];
            ([f.at(0, node), f.at(1, node), f.at(2, node)], p.map(|p| p.frame(m).at(0, node)))
        }));
    }
    Ok(ResidualReport::new("grid", if p.is_some() { "weak" } else { "very_weak" }, out, tol))
}

/// `∫ u·∇φ dx` per scalar bump, reporting the frame of largest magnitude.
pub fn divergence_residual(u: &SpaceTimeField, battery: &[TestField], tol: f64) -> Result<ResidualReport> {
    let g = *u.grid();
    let mut out = Vec::with_capacity(battery.len());
    for tf in battery {
        let idx: Vec<usize> = (0..g.len()).filter(|&q| dist(g.node(q), tf.center) < tf.radius).collect();
        let grads: Vec<[f64; 3]> = idx.iter().map(|&q| tf.space(g.node(q)).grad).collect();
        let mut worst: f64 = 0.0;
        for f in u.frames() {
            let mut s = 0.0;
            for (q, gr) in idx.iter().zip(&grads) {
                s += (0..3).map(|a| f.at(a, *q) * gr[a]).sum::<f64>();
            }
            s *= g.cell_volume();
            if s.abs() > worst.abs() {
                worst = s;
            }
        }
        out.push(worst);
    }
    Ok(ResidualReport::new("grid", "divergence", out, tol))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrongResidual {
    pub momentum: f64,
    pub divergence: f64,
    /// `max |u|²/r + |p|/r` scale used for relative values.
    pub scale: f64,
}

/// Pointwise `∂_tu − Δu + (u·∇)u + ∇p` and `div u` by fourth-order central
/// differences of the closed form, maximized over `points`.
pub fn strong_residual(flow: &TestFlow, points: &[[f64; 3]], t: f64, step: f64) -> Result<StrongResidual> {
    if !flow.properties.has_pressure {
        return Err(Error::InvalidArgument(format!("{} has no pressure", flow.name)));
    }
    let d1 = |f: &dyn Fn(f64) -> f64| (8.0 * (f(step) - f(-step)) - (f(2.0 * step) - f(-2.0 * step))) / (12.0 * step);
    let d2 = |f: &dyn Fn(f64) -> f64| {
        (-f(2.0 * step) + 16.0 * f(step) - 30.0 * f(0.0) + 16.0 * f(-step) - f(-2.0 * step)) / (12.0 * step * step)
    };
    let shift = |x: [f64; 3], a: usize, s: f64| {
        let mut y = x;
        y[a] += s;
        y
    };
    let (mut mom, mut div, mut scale) = (0.0f64, 0.0f64, 0.0f64);
    for &x in points {
        let u = flow.velocity(x, t);
        let grad = flow.velocity_gradient(x, t, step);
        let p = flow.pressure(x, t).unwrap_or(0.0);
        let r = dist(x, [0.0; 3]).max(1e-300);
        scale = scale.max((u[0] * u[0] + u[1] * u[1] + u[2] * u[2]) / r + p.abs() / (r * r));
        for i in 0..3 {
            let dt = if flow.properties.stationary { 0.0 } else { d1(&|s| flow.velocity(x, t + s)[i]) };
            let lap: f64 = (0..3).map(|a| d2(&|s| flow.velocity(shift(x, a, s), t)[i])).sum();
            let conv: f64 = (0..3).map(|j| u[j] * grad[i][j]).sum();
            let dp = d1(&|s| flow.pressure(shift(x, i, s), t).unwrap_or(0.0));
            mom = mom.max((dt - lap + conv + dp).abs());
        }
        div = div.max((grad[0][0] + grad[1][1] + grad[2][2]).abs());
    }
    Ok(StrongResidual { momentum: mom, divergence: div, scale })
}

/// Deterministic points in the shell `r_in < |x| < r_out`.
pub fn shell_points(r_in: f64, r_out: f64, count: usize, seed: u64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let r = rng.gen_range(r_in..r_out);
            let z: f64 = rng.gen_range(-1.0..1.0);
            let ph: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            [r * s * ph.cos(), r * s * ph.sin(), r * z]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn non_harmonic_rejected() {
        let p = Polynomial::new(&[(1.0, [2, 0, 0])]);
        assert!(HarmonicPolynomial::new(p).is_err());
        let q = Polynomial::new(&[(1.0, [2, 0, 0]), (-1.0, [0, 2, 0])]);
        assert!(HarmonicPolynomial::new(q).is_ok());
        let deg5 = Polynomial::new(&[(1.0, [5, 0, 0])]);
        assert!(HarmonicPolynomial::new(deg5).is_err());
    }

    #[test]
    fn serrin_closed_form() {
        let f = serrin_default();
        let (x, t) = ([0.3, -0.2, 0.5], 0.7);
        assert_eq!(f.velocity(x, t), [t * x[1], t * x[0], 0.0]);
        let p = -x[0] * x[1] - t * t * (x[0] * x[0] + x[1] * x[1]) / 2.0;
        assert!((f.pressure(x, t).unwrap() - p).abs() < 1e-15);
        let pts = shell_points(0.0, 1.0, 20, 1);
        let s = strong_residual(&f, &pts, t, 1e-2).unwrap();
        assert!(s.momentum < 1e-10 && s.divergence < 1e-10, "{s:?}");
    }

    #[test]
    fn constant_serrin_flow() {
        let h = HarmonicPolynomial::new(Polynomial::new(&[(1.0, [1, 0, 0])])).unwrap();
        let f = serrin_flow(TimeProfile::linear(), h).unwrap();
        let pts = shell_points(0.0, 1.0, 10, 2);
        assert!(strong_residual(&f, &pts, 0.4, 1e-3).unwrap().momentum < 1e-10);
    }

    #[test]
    fn landau_homogeneous_and_stationary() {
        let f = landau_flow(1.5).unwrap();
        for x in shell_points(0.5, 2.0, 20, 3) {
            let (a, b) = (f.velocity(x, 0.0), f.velocity(x.map(|v| 2.0 * v), 0.0));
            for i in 0..3 {
                assert!((b[i] - a[i] / 2.0).abs() <= 1e-15 * a[i].abs().max(1.0));
            }
        }
        let s = strong_residual(&f, &shell_points(0.5, 2.0, 40, 4), 0.0, 1e-3).unwrap();
        assert!(s.momentum < 1e-6 * s.scale, "{s:?}");
        assert!(landau_flow(1.0).is_err());
    }

    #[test]
    fn random_field_is_deterministic_and_confined() {
        let a = random_solenoidal(5, Spectrum::shell(8.0, 2.0)).unwrap();
        let b = random_solenoidal(5, Spectrum::shell(8.0, 2.0)).unwrap();
        assert_eq!(a, b);
        if let FlowKind::RandomSolenoidal { modes } = &a.kind {
            for m in modes {
                let n = (m.k[0].powi(2) + m.k[1].powi(2) + m.k[2].powi(2)).sqrt() * 8.0 / std::f64::consts::TAU;
                assert!((n - 2.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn battery_size_and_curl_rejection() {
        let b = default_battery(TestFieldKind::Plain);
        assert!(b.len() >= 20);
        let quad = ResidualQuadrature::new(8, TimeGrid::unit(8).unwrap());
        assert!(very_weak_residual(&serrin_default(), &b, &quad, 1e-6).is_err());
    }

    #[test]
    fn zero_flow_residual_is_zero() {
        let quad = ResidualQuadrature::new(12, TimeGrid::unit(16).unwrap());
        let r = weak_residual(&TestFlow::zero(), &default_battery(TestFieldKind::Plain), &quad, 1e-12).unwrap();
        assert!(r.residuals.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn curl_test_field_is_solenoidal() {
        let tf = default_battery(TestFieldKind::Curl)[4];
        let x = [0.35, 0.1, -0.1];
        let s = spatial_test(&tf, x);
        let div = s.grad[0][0] + s.grad[1][1] + s.grad[2][2];
        assert!(div.abs() < 1e-9 * s.grad.iter().flatten().fold(1.0f64, |a, v| a.max(v.abs())));
    }
}
