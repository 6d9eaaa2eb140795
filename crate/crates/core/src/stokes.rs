//! Leray projection, Stokes semigroup, the Duhamel operator and the source
//! solution `v⁰`, pressure recovery and a semigroup gradient probe.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft3;
use crate::grid::{Field, GridSpec, Mask, Rank, SpaceTimeField, Spectral, TimeGrid};
use crate::kernels;
use crate::lorentz::{lorentz_norm, mixed_norm, SpatialNorm};
use crate::quadrature::{gauss_legendre_on, product_weights};

/// Divergence-free part of a periodic vector field.
pub fn leray_project(v: &Field) -> Result<Field> {
    Spectral::new(*v.grid()).project(v)
}

/// `e^{-tA} P v` with `A = -PΔ`.
pub fn stokes_semigroup(v: &Field, t: f64) -> Result<Field> {
    if t < 0.0 {
        return Err(Error::InvalidArgument(format!("semigroup time must be non-negative, got {t}")));
    }
    let mut sp = Spectral::new(*v.grid());
    let mut s = sp.forward(v)?;
    sp.project_hat(&mut s);
    for comp in s.iter_mut() {
        for (p, z) in comp.iter_mut().enumerate() {
            *z *= (-sp.k2(p) * t).exp();
        }
    }
    sp.to_field(&s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DuhamelPath {
    Spectral,
    Oseen,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuhamelConfig {
    pub time: TimeGrid,
    pub path: DuhamelPath,
}

impl DuhamelConfig {
    pub fn spectral(time: TimeGrid) -> Self {
        Self { time, path: DuhamelPath::Spectral }
    }
}

/// `(1 - e^{-z}) / z`.
fn phi1(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        -(-z).exp_m1() / z
    }
}

/// `(1 - e^{-z}(1 + z)) / z²`.
fn phi2(z: f64) -> f64 {
    if z < 0.1 {
        // Σ (-1)^n z^n (n+1)/(n+2)!
        let mut sum = 0.0;
        let mut zn = 1.0;
        let mut fact = 2.0;
        for n in 0..14 {
            let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * zn * (n + 1) as f64 / fact;
            zn *= z;
            fact *= (n + 3) as f64;
        }
        sum
    } else {
        (1.0 - (-z).exp() * (1.0 + z)) / (z * z)
    }
}

fn require_zero_start(time: &TimeGrid) -> Result<()> {
    if time.t0 != 0.0 {
        return Err(Error::InvalidTimeGrid(format!("Duhamel integrals start at t = 0, grid starts at {}", time.t0)));
    }
    Ok(())
}

/// Solves `∂_t w - Δw + ∇π = g`, `div w = 0`, `w(0) = 0` on the periodic box,
/// given the unprojected forcing spectrum `g` frame by frame.
///
/// The update integrates `e^{-(t-τ)A}` exactly against piecewise-linear
/// forcing, so only one forcing frame is held at a time.
pub fn duhamel_spectral<F>(sp: &mut Spectral, time: &TimeGrid, mut forcing_hat: F) -> Result<SpaceTimeField>
where
    F: FnMut(&mut Spectral, usize) -> Result<Vec<Vec<Complex64>>>,
{
    require_zero_start(time)?;
    let grid = *sp.grid();
    let len = grid.len();
    let dt = time.dt();
    let (decay, w_old, w_new): (Vec<f64>, Vec<f64>, Vec<f64>) = {
        let mut d = Vec::with_capacity(len);
        let mut a = Vec::with_capacity(len);
        let mut b = Vec::with_capacity(len);
        for p in 0..len {
            let z = sp.k2(p) * dt;
            let e2 = phi2(z);
            d.push((-z).exp());
            a.push(dt * e2);
            b.push(dt * (phi1(z) - e2));
        }
        (d, a, b)
    };
    let mut w = vec![vec![Complex64::default(); len]; 3];
    let mut frames = Vec::with_capacity(time.len());
    frames.push(Field::zeros(grid, Rank::Vector));
    let mut g_prev = forcing_hat(sp, 0)?;
    sp.project_hat(&mut g_prev);
    for m in 1..time.len() {
        let mut g = forcing_hat(sp, m)?;
        sp.project_hat(&mut g);
        for c in 0..3 {
            for p in 0..len {
                w[c][p] = decay[p] * w[c][p] + w_old[p] * g_prev[c][p] + w_new[p] * g[c][p];
            }
        }
        frames.push(sp.to_field(&w)?);
        g_prev = g;
    }
    SpaceTimeField::new(*time, frames)
}

fn check_grid(field: &SpaceTimeField, time: &TimeGrid, rank: Rank) -> Result<()> {
    field.time().ensure_same(time)?;
    if field.rank() != rank {
        return Err(Error::RankMismatch { expected: rank.components(), got: field.rank().components() });
    }
    Ok(())
}

/// `Φ(F)(t) = ∫₀ᵗ e^{-(t-τ)A} P ∇·F(τ) dτ` with `(∇·F)_i = Σ_j ∂_j F_ij`.
pub fn duhamel_phi(f: &SpaceTimeField, cfg: &DuhamelConfig) -> Result<SpaceTimeField> {
    check_grid(f, &cfg.time, Rank::Tensor)?;
    match cfg.path {
        DuhamelPath::Spectral => {
            let mut sp = Spectral::new(*f.grid());
            duhamel_spectral(&mut sp, &cfg.time, |sp, m| {
                let s = sp.forward(f.frame(m))?;
                Ok(sp.tensor_divergence_hat(&s))
            })
        }
        DuhamelPath::Oseen => v0_oseen(None, Some(f), &cfg.time),
    }
}

#[derive(Debug, Clone)]
pub struct V0Output {
    pub v0: SpaceTimeField,
    /// Largest forcing magnitude on the outermost grid layer, relative to the overall maximum.
    pub boundary_tail: f64,
    pub warning: Option<String>,
}

fn boundary_tail(fields: &[&SpaceTimeField]) -> f64 {
    let mut edge: f64 = 0.0;
    let mut all: f64 = 0.0;
    for f in fields {
        let g = *f.grid();
        let n = g.n;
        for fr in f.frames() {
            for c in 0..fr.components() {
                for (p, v) in fr.component(c).iter().enumerate() {
                    let (i, j, k) = g.unravel(p);
                    all = all.max(v.abs());
                    if [i, j, k].iter().any(|&a| a == 0 || a == n - 1) {
                        edge = edge.max(v.abs());
                    }
                }
            }
        }
    }
    if all == 0.0 {
        0.0
    } else {
        edge / all
    }
}

/// Source solution of `∂_t v - Δv + ∇q = f⁰ + ∇·f¹`, `v(0) = 0`.
pub fn build_v0(f0: &SpaceTimeField, f1: &SpaceTimeField, cfg: &DuhamelConfig) -> Result<V0Output> {
    check_grid(f0, &cfg.time, Rank::Vector)?;
    check_grid(f1, &cfg.time, Rank::Tensor)?;
    f0.grid().ensure_same(f1.grid())?;
    let tail = boundary_tail(&[f0, f1]);
    let warning = (tail > 1e-12).then(|| {
        format!("forcing reaches the box boundary: edge/max = {tail:.3e}; periodic images are not negligible")
    });
    let v0 = match cfg.path {
        DuhamelPath::Spectral => {
            let mut sp = Spectral::new(*f0.grid());
            duhamel_spectral(&mut sp, &cfg.time, |sp, m| {
                let mut g = sp.forward(f0.frame(m))?;
                let s1 = sp.forward(f1.frame(m))?;
                let d = sp.tensor_divergence_hat(&s1);
                for c in 0..3 {
                    for (a, b) in g[c].iter_mut().zip(&d[c]) {
                        *a += b;
                    }
                }
                Ok(g)
            })?
        }
        DuhamelPath::Oseen => v0_oseen(Some(f0), Some(f1), &cfg.time)?,
    };
    Ok(V0Output { v0, boundary_tail: tail, warning })
}

const WORKSPACE_LIMIT_BYTES: f64 = 3.0e9;

fn is_zero_stack(f: &SpaceTimeField) -> bool {
    f.frames().iter().all(|fr| fr.data().iter().all(|&v| v == 0.0))
}

/// Whole-space evaluation of
/// `v_i = ∫∫ S_ij(x-y, s) f⁰_j(y, t-s) + ∂_k S_ij(x-y, s) f¹_jk(y, t-s)`
/// by aperiodic lattice convolution (zero padding to `(2N)³`) and panel
/// quadrature in `s` against the piecewise-linear time interpolant of the data.
fn v0_oseen(f0: Option<&SpaceTimeField>, f1: Option<&SpaceTimeField>, time: &TimeGrid) -> Result<SpaceTimeField> {
    require_zero_start(time)?;
    let grid = *f0.or(f1).ok_or_else(|| Error::InvalidArgument("no forcing given".into()))?.grid();
    let f0 = f0.filter(|f| !is_zero_stack(f));
    let f1 = f1.filter(|f| !is_zero_stack(f));
    if f0.is_none() && f1.is_none() {
        return Ok(SpaceTimeField::zeros(grid, *time, Rank::Vector));
    }
    let n = grid.n;
    let pn = 2 * n;
    let plen = pn * pn * pn;
    let frames = time.len();
    let src_comps = f0.map_or(0, |_| 3) + f1.map_or(0, |_| 9);
    let kernel_comps = f0.map_or(0, |_| 6) + f1.map_or(0, |_| 18);
    let bytes = 16.0 * plen as f64 * ((frames * (src_comps + 3)) as f64 + 2.0 * kernel_comps as f64);
    if bytes > WORKSPACE_LIMIT_BYTES {
        return Err(Error::WorkspaceTooLarge(format!(
            "oseen quadrature needs about {:.2} GB",
            bytes / 1e9
        )));
    }
    let mut fft = Fft3::new(pn);
    let pad = |fft: &mut Fft3, vals: &[f64]| -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); plen];
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    buf[(i * pn + j) * pn + k] = Complex64::new(vals[(i * n + j) * n + k], 0.0);
                }
            }
        }
        fft.forward(&mut buf);
        buf
    };
    // source spectra, per frame: f⁰ comps then f¹ comps
    let mut src: Vec<Vec<Vec<Complex64>>> = Vec::with_capacity(frames);
    for m in 0..frames {
        let mut comps = Vec::with_capacity(src_comps);
        if let Some(f) = f0 {
            for c in 0..3 {
                comps.push(pad(&mut fft, f.frame(m).component(c)));
            }
        }
        if let Some(f) = f1 {
            for c in 0..9 {
                comps.push(pad(&mut fft, f.frame(m).component(c)));
            }
        }
        src.push(comps);
    }
    let mut acc = vec![vec![vec![Complex64::default(); plen]; 3]; frames];
    let h = grid.h();
    let hv = grid.cell_volume();
    let dt = time.dt();
    let s0 = 0.5 * h * h;
    let sym = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    let sym_index = |i: usize, j: usize| -> usize {
        let (a, b) = if i <= j { (i, j) } else { (j, i) };
        sym.iter().position(|&q| q == (a, b)).expect("symmetric pair")
    };
    let max_r2 = 3 * n * n;
    let signed = |a: usize| -> i64 { if a < n { a as i64 } else if a == n { 0 } else { a as i64 - pn as i64 } };
    for panel in 0..time.steps {
        let (a, b) = (panel as f64 * dt, (panel + 1) as f64 * dt);
        let nodes = panel_nodes(a, b, s0);
        // radial tables per node, indexed by integer |d|²
        let tables: Vec<Vec<[f64; 4]>> = nodes
            .iter()
            .map(|&(s, _, _)| {
                (0..=max_r2)
                    .map(|q2| {
                        let r = (q2 as f64).sqrt() * h;
                        let rd = kernels::radial_parts(r, s);
                        [rd.0, rd.1, rd.2, rd.3]
                    })
                    .collect()
            })
            .collect();
        let mut kr = vec![vec![Complex64::default(); plen]; kernel_comps];
        let mut kl = vec![vec![Complex64::default(); plen]; kernel_comps];
        for i in 0..pn {
            let di = signed(i);
            if i == n {
                continue;
            }
            for j in 0..pn {
                if j == n {
                    continue;
                }
                let dj = signed(j);
                for k in 0..pn {
                    if k == n {
                        continue;
                    }
                    let dk = signed(k);
                    let q2 = (di * di + dj * dj + dk * dk) as usize;
                    let x = [di as f64 * h, dj as f64 * h, dk as f64 * h];
                    let p = (i * pn + j) * pn + k;
                    for (node, &(s, wr, wl)) in nodes.iter().enumerate() {
                        let [gam, aa, cc, ee] = tables[node][q2];
                        let mut c = 0;
                        if f0.is_some() {
                            for &(ii, jj) in &sym {
                                let v = hv * ((gam + aa) * delta(ii, jj) + cc * x[ii] * x[jj]);
                                kr[c][p].re += wr * v;
                                kl[c][p].re += wl * v;
                                c += 1;
                            }
                        }
                        if f1.is_some() {
                            let gr = -gam / (2.0 * s);
                            for kx in 0..3 {
                                for &(ii, jj) in &sym {
                                    let v = hv
                                        * ((gr + cc) * x[kx] * delta(ii, jj)
                                            + ee * x[ii] * x[jj] * x[kx]
                                            + cc * (delta(ii, kx) * x[jj] + delta(jj, kx) * x[ii]));
                                    kr[c][p].re += wr * v;
                                    kl[c][p].re += wl * v;
                                    c += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
        for arr in kr.iter_mut().chain(kl.iter_mut()) {
            fft.forward(arr);
        }
        for m in (panel + 1)..frames {
            let (right, left) = (m - panel, m - panel - 1);
            for i in 0..3 {
                let out = &mut acc[m][i];
                let mut c_off = 0;
                let mut terms: Vec<(usize, usize)> = Vec::new();
                if f0.is_some() {
                    for j in 0..3 {
                        terms.push((sym_index(i, j), j));
                    }
                    c_off = 3;
                }
                if f1.is_some() {
                    let kbase = if f0.is_some() { 6 } else { 0 };
                    for j in 0..3 {
                        for kx in 0..3 {
                            terms.push((kbase + 6 * kx + sym_index(i, j), c_off + 3 * j + kx));
                        }
                    }
                }
                for &(kc, sc) in &terms {
                    let (ar, al) = (&kr[kc], &kl[kc]);
                    let (fr, fl) = (&src[right][sc], &src[left][sc]);
                    for p in 0..plen {
                        out[p] += ar[p] * fr[p] + al[p] * fl[p];
                    }
                }
            }
        }
    }
    let mut out_frames = Vec::with_capacity(frames);
    for spectra in acc.iter_mut() {
        let mut comps = Vec::with_capacity(3);
        for s in spectra.iter_mut() {
            fft.inverse(s);
            let mut vals = vec![0.0; grid.len()];
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        vals[(i * n + j) * n + k] = s[(i * pn + j) * pn + k].re;
                    }
                }
            }
            comps.push(vals);
        }
        out_frames.push(Field::from_components(grid, comps)?);
    }
    SpaceTimeField::new(*time, out_frames)
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

/// Quadrature nodes `(s, w·R(s), w·L(s))` on the panel `[a, b]`, where `R`
/// and `L` are the descending and ascending hat functions of the panel.
/// Below `s₀` the kernel is replaced by its cubic extrapolant from `s₀·{1,2,3,4}`.
fn panel_nodes(a: f64, b: f64, s0: f64) -> Vec<(f64, f64, f64)> {
    let len = b - a;
    let hat_r = |s: f64| (b - s) / len;
    let hat_l = |s: f64| (s - a) / len;
    let mut nodes = Vec::new();
    let lo = a.max(s0);
    if lo < b {
        let (x, w) = gauss_legendre_on(6, lo, b);
        for (s, wi) in x.into_iter().zip(w) {
            nodes.push((s, wi * hat_r(s), wi * hat_l(s)));
        }
    }
    if a < s0 {
        let hi = b.min(s0);
        let (x, w) = gauss_legendre_on(8, a, hi);
        let ext = [s0, 2.0 * s0, 3.0 * s0, 4.0 * s0];
        for e in 0..4 {
            let lagrange = |s: f64| {
                (0..4).filter(|&q| q != e).map(|q| (s - ext[q]) / (ext[e] - ext[q])).product::<f64>()
            };
            let (mut wr, mut wl) = (0.0, 0.0);
            for (&s, &wi) in x.iter().zip(&w) {
                wr += wi * lagrange(s) * hat_r(s);
                wl += wi * lagrange(s) * hat_l(s);
            }
            nodes.push((ext[e], wr, wl));
        }
    }
    nodes
}

/// Zero-mean `p` with `-Δp = ∂_i∂_j(u_i u_j)`.
pub fn pressure_from_velocity(u: &Field) -> Result<Field> {
    if u.rank() != Rank::Vector {
        return Err(Error::RankMismatch { expected: 3, got: u.components() });
    }
    let g = *u.grid();
    let mut sp = Spectral::new(g);
    let len = g.len();
    let mut products = Vec::with_capacity(6);
    let pairs = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)];
    for &(i, j) in &pairs {
        let (a, b) = (u.component(i), u.component(j));
        products.push(a.iter().zip(b).map(|(x, y)| x * y).collect::<Vec<f64>>());
    }
    let refs: Vec<&[f64]> = products.iter().map(|v| v.as_slice()).collect();
    let s = sp.forward_slices(&refs);
    let mut ph = vec![Complex64::default(); len];
    for p in 0..len {
        let k2 = sp.k2(p);
        if k2 == 0.0 {
            continue;
        }
        let k = sp.kvec(p);
        let mut acc = Complex64::default();
        for (c, &(i, j)) in pairs.iter().enumerate() {
            let mult = if i == j { 1.0 } else { 2.0 };
            acc += mult * k[i] * k[j] * s[c][p];
        }
        ph[p] = -acc / k2;
    }
    sp.to_field(&[ph])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct YamazakiReport {
    pub p: f64,
    pub q: f64,
    pub horizon: f64,
    pub weight_exponent: f64,
    pub value: f64,
    pub value_doubled: f64,
    pub tail_increment: f64,
}

/// `∫₀ᵀ t^{3/(2p) - 3/(2q) - 1/2} ‖∇e^{-tA}u‖_{L^{q,1}} dt` by product
/// integration on `steps` uniform nodes, plus the increment from `T` to `2T`.
pub fn yamazaki_probe(u: &Field, p: f64, q: f64, horizon: f64, steps: usize) -> Result<YamazakiReport> {
    if !(1.0 < p && p <= q && q.is_finite()) {
        return Err(Error::ExponentOutOfRange(format!("need 1 < p <= q < inf, got p = {p}, q = {q}")));
    }
    if !(horizon > 0.0) || steps < 2 {
        return Err(Error::InvalidArgument("horizon must be positive and steps >= 2".into()));
    }
    if u.rank() != Rank::Vector {
        return Err(Error::RankMismatch { expected: 3, got: u.components() });
    }
    let g = *u.grid();
    let scale = u.max_abs().max(f64::MIN_POSITIVE);
    for c in 0..3 {
        let mean = u.component(c).iter().sum::<f64>() / g.len() as f64;
        if mean.abs() > 1e-10 * scale {
            return Err(Error::NonZeroMean { mean, tolerance: 1e-10 * scale });
        }
    }
    let beta = 1.5 / p - 1.5 / q - 0.5;
    let mut sp = Spectral::new(g);
    let mut uh = sp.forward(u)?;
    sp.project_hat(&mut uh);
    let mask = Mask::full(g);
    let nodes: Vec<f64> = (0..=2 * steps).map(|m| 2.0 * horizon * m as f64 / (2 * steps) as f64).collect();
    let mut values = Vec::with_capacity(nodes.len());
    for &t in &nodes {
        let mut grad = Vec::with_capacity(9);
        for i in 0..3 {
            for a in 0..3 {
                grad.push(
                    (0..g.len())
                        .map(|pp| {
                            uh[i][pp] * (-sp.k2(pp) * t).exp() * Complex64::new(0.0, sp.kvec(pp)[a])
                        })
                        .collect::<Vec<_>>(),
                );
            }
        }
        let f = sp.to_field(&grad)?;
        values.push(lorentz_norm(&f, &mask, q, 1.0)?.value);
    }
    let w_half = product_weights(&nodes[..=steps], beta);
    let w_full = product_weights(&nodes, beta);
    let value: f64 = w_half.iter().zip(&values).map(|(w, v)| w * v).sum();
    let value_doubled: f64 = w_full.iter().zip(&values).map(|(w, v)| w * v).sum();
    Ok(YamazakiReport {
        p,
        q,
        horizon,
        weight_exponent: beta,
        value,
        value_doubled,
        tail_increment: value_doubled - value,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
    pub max_ratio_first_half: f64,
    pub stability_pct: f64,
}

/// Compactly supported random tensor histories: smooth bumps of radius
/// `≤ 1.2` with random centres, amplitudes and linear time profiles.
pub fn random_tensor_battery(grid: GridSpec, time: TimeGrid, count: usize, seed: u64) -> Result<Vec<SpaceTimeField>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let c: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-0.5..0.5));
        let rad = rng.gen_range(0.6..1.2);
        let a0: [f64; 9] = [0; 9].map(|_| rng.gen_range(-1.0..1.0));
        let a1: [f64; 9] = [0; 9].map(|_| rng.gen_range(-1.0..1.0));
        let f = crate::grid::sample_space_time(grid, time, Rank::Tensor, |x, t, o| {
            let d = crate::grid::dist(x, c) / rad;
            let b = crate::localization::bump(d);
            for k in 0..9 {
                o[k] = b * (a0[k] + t * a1[k]);
            }
        })?;
        out.push(f);
    }
    Ok(out)
}

/// Empirical `‖Φ(F)‖_{L^∞ L^{3,∞}} / ‖F‖_{L^∞ L^{3/2,∞}}` over a battery.
pub fn phi_boundedness_probe(battery: &[SpaceTimeField], cfg: &DuhamelConfig) -> Result<BoundednessReport> {
    if battery.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mask = Mask::full(*battery[0].grid());
    let mut ratios = Vec::with_capacity(battery.len());
    for f in battery {
        let den = mixed_norm(f, &mask, f64::INFINITY, SpatialNorm::weak(1.5))?.value;
        let phi = duhamel_phi(f, cfg)?;
        let num = mixed_norm(&phi, &mask, f64::INFINITY, SpatialNorm::weak(3.0))?.value;
        ratios.push(if den > 0.0 { num / den } else { 0.0 });
    }
    let max_ratio = ratios.iter().cloned().fold(0.0, f64::max);
    let half = ratios.len().div_ceil(2);
    let max_ratio_first_half = ratios[..half].iter().cloned().fold(0.0, f64::max);
    let stability_pct = if max_ratio > 0.0 { 100.0 * (max_ratio - max_ratio_first_half) / max_ratio } else { 0.0 };
    Ok(BoundednessReport { ratios, max_ratio, max_ratio_first_half, stability_pct })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{derivative, sample_scalar, sample_space_time, sample_vector, DerivativeOp};
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(8.0, 16).unwrap()
    }

    #[test]
    fn projection_examples() {
        let g = grid();
        let kap = 2.0 * PI / 8.0;
        let grad = sample_vector(g, |x| [(kap * x[0]).sin(), 0.0, 0.0]).unwrap();
        assert!(leray_project(&grad).unwrap().max_abs() < 1e-14);
        let sol = sample_vector(g, |x| [(kap * x[1]).sin(), 0.0, 0.0]).unwrap();
        let p = leray_project(&sol).unwrap();
        assert!(p.sub(&sol).unwrap().max_abs() < 1e-14);
        let mean = sample_vector(g, |x| [1.0 + (kap * x[0]).sin(), -2.0, 0.0]).unwrap();
        let pm = leray_project(&mean).unwrap();
        assert!((pm.component(0).iter().sum::<f64>() / g.len() as f64 - 1.0).abs() < 1e-13);
    }

    #[test]
    fn semigroup_examples() {
        let g = grid();
        let kap = 2.0 * PI / 8.0;
        let v = sample_vector(g, |x| [(kap * x[1]).sin(), 0.0, 0.0]).unwrap();
        assert!(stokes_semigroup(&v, 0.0).unwrap().sub(&v).unwrap().max_abs() < 1e-14);
        let t = 0.7;
        let w = stokes_semigroup(&v, t).unwrap();
        let expect = v.scaled((-kap * kap * t).exp());
        assert!(w.sub(&expect).unwrap().max_abs() < 1e-14);
        assert!(stokes_semigroup(&v, -1.0).is_err());
    }

    #[test]
    fn phi_series_matches_closed_form() {
        for z in [1e-3, 0.05, 0.0999] {
            let direct = (1.0 - (-z as f64).exp() * (1.0 + z)) / (z * z);
            assert!((phi2(z) - direct).abs() < 1e-9);
        }
        assert_eq!(phi2(0.0), 0.5);
        assert_eq!(phi1(0.0), 1.0);
    }

    #[test]
    fn duhamel_single_mode() {
        let g = grid();
        let tg = TimeGrid::unit(16).unwrap();
        let kap = 2.0 * PI / 8.0;
        let f = sample_space_time(g, tg, Rank::Tensor, |x, _, o| o[1] = (kap * x[1]).sin()).unwrap();
        let out = duhamel_phi(&f, &DuhamelConfig::spectral(tg)).unwrap();
        assert_eq!(out.frame(0).max_abs(), 0.0);
        for (m, t) in tg.nodes().into_iter().enumerate() {
            let amp = (1.0 - (-kap * kap * t).exp()) / (kap * kap) * kap;
            for p in 0..g.len() {
                let x = g.node(p);
                assert!((out.frame(m).at(0, p) - amp * (kap * x[1]).cos()).abs() < 1e-13);
            }
            let div = derivative(out.frame(m), DerivativeOp::Div).unwrap();
            assert!(div.max_abs() < 1e-13);
        }
    }

    #[test]
    fn duhamel_requires_zero_start() {
        let g = grid();
        let tg = TimeGrid::new(0.1, 1.0, 4).unwrap();
        let f = SpaceTimeField::zeros(g, tg, Rank::Tensor);
        assert!(duhamel_phi(&f, &DuhamelConfig::spectral(tg)).is_err());
    }

    #[test]
    fn pressure_examples() {
        let g = GridSpec::new(2.0 * PI, 16).unwrap();
        let zero = Field::zeros(g, Rank::Vector);
        assert_eq!(pressure_from_velocity(&zero).unwrap().max_abs(), 0.0);
        let shear = sample_vector(g, |x| [x[1].sin(), 0.0, 0.0]).unwrap();
        assert!(pressure_from_velocity(&shear).unwrap().max_abs() < 1e-14);
        // Taylor–Green: u·∇u = -∇p with p = (cos 2x₁ + cos 2x₂)/4
        let tg = sample_vector(g, |x| [x[0].sin() * x[1].cos(), -x[0].cos() * x[1].sin(), 0.0]).unwrap();
        let p = pressure_from_velocity(&tg).unwrap();
        let exact = sample_scalar(g, |x| ((2.0 * x[0]).cos() + (2.0 * x[1]).cos()) / 4.0).unwrap();
        assert!(p.sub(&exact).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn panel_weights_integrate_hats() {
        // both branches integrate a constant kernel exactly
        for (a, b, s0) in [(0.0, 0.1, 0.02), (0.0, 0.01, 0.03), (0.01, 0.02, 0.03), (0.1, 0.2, 0.01)] {
            let nodes = panel_nodes(a, b, s0);
            let wr: f64 = nodes.iter().map(|n| n.1).sum();
            let wl: f64 = nodes.iter().map(|n| n.2).sum();
            assert!((wr - 0.5 * (b - a)).abs() < 1e-14);
            assert!((wl - 0.5 * (b - a)).abs() < 1e-14);
        }
    }
}
