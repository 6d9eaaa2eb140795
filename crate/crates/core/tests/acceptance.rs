//! End-to-end acceptance suite. Each test prints one `PASS`/`FAIL` line for
//! its criterion (written past the test harness capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;

use nsreg::flows::{
    default_battery, landau_flow, random_solenoidal, rotation_flow, serrin_default, shell_points, strong_residual,
    very_weak_residual, weak_residual, ResidualQuadrature, Spectrum, TestFieldKind,
};
use nsreg::grid::{sample_scalar, sample_space_time, sample_vector, DerivativeOp, Field, GridSpec, Mask, Rank,
    SpaceTimeField, Spectral, TimeGrid};
use nsreg::kernels::{decay_scan, heat_kernel, oseen_derivative, oseen_tensor, oseen_tensor_oracle, SampleSpec};
use nsreg::ledger::{
    step1_conditions, bootstrap_chain, bootstrap_schedule, pressure_m_condition, random_step1_tuples,
    random_subcritical_pairs, ExtRational,
};
use nsreg::localization::{grad_eta_tail_fit, localize, localize_velocity_frame, CutoffFamily};
use nsreg::lorentz::lorentz_norm;
use nsreg::picard::{
    affinity_defect, contraction_threshold_scan, epsilon_of, uniqueness_probe, PicardConfig, PicardProblem,
    PicardVerdict, ScanConfig, StartIterate,
};
use nsreg::quadrature::integrate_gl;
use nsreg::stokes::{
    build_v0, duhamel_phi, phi_boundedness_probe, random_tensor_battery, yamazaki_probe, DuhamelConfig, DuhamelPath,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Check {
    name: &'static str,
    ok: bool,
    detail: String,
}

fn check(name: &'static str, ok: bool, detail: String) -> Check {
    Check { name, ok, detail }
}

/// Prints the criterion line and fails the test if any check failed.
fn conclude(id: u32, title: &str, checks: &[Check]) {
    let pass = checks.iter().all(|c| c.ok);
    let parts: Vec<String> = checks
        .iter()
        .map(|c| format!("{} {} ({})", if c.ok { "ok" } else { "FAILED" }, c.name, c.detail))
        .collect();
    let line = format!(
        "acceptance criterion {id} [{title}]: {} | {}\n",
        if pass { "PASS" } else { "FAIL" },
        parts.join("; ")
    );
    // bypass the capture so the line lands in the log for passing tests too
    let mut out = std::io::stdout().lock();
    out.write_all(line.as_bytes()).unwrap();
    out.flush().unwrap();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.ok).map(|c| c.name).collect();
    assert!(pass, "criterion {id} failed checks: {failed:?}");
}

fn q(s: &str) -> ExtRational {
    s.parse().unwrap()
}

fn norm3(x: [f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

fn max_entry(t: &[[f64; 3]; 3]) -> f64 {
    t.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn random_point(rng: &mut ChaCha8Rng, r_lo: f64, r_hi: f64) -> [f64; 3] {
    let r = rng.gen_range(r_lo..r_hi);
    let z: f64 = rng.gen_range(-1.0..1.0);
    let ph: f64 = rng.gen_range(0.0..2.0 * PI);
    let s = (1.0 - z * z).sqrt();
    [r * s * ph.cos(), r * s * ph.sin(), r * z]
}

#[test]
fn criterion_1_kernels() {
    let mut checks = Vec::new();

    let mut mass_err: f64 = 0.0;
    for t in [1e-3f64, 0.1, 1.0, 10.0] {
        let rmax = 14.0 * t.sqrt();
        let mass = integrate_gl(|r| 4.0 * PI * r * r * heat_kernel([r, 0.0, 0.0], t).unwrap(), 0.0, rmax, 64, 16);
        mass_err = mass_err.max((mass - 1.0).abs());
    }
    checks.push(check("heat unit mass", mass_err <= 1e-8, format!("max |mass - 1| = {mass_err:.2e}")));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut oracle_err: f64 = 0.0;
    let mut trace_err: f64 = 0.0;
    let mut div_err: f64 = 0.0;
    for _ in 0..20 {
        let x = random_point(&mut rng, 0.2, 3.0);
        let t = rng.gen_range(0.05..2.0);
        let s = oseen_tensor(x, t).unwrap();
        let o = oseen_tensor_oracle(x, t).unwrap();
        let scale = max_entry(&o);
        let diff = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).fold(0.0f64, |m, (i, j)| m.max((s[i][j] - o[i][j]).abs()));
        oracle_err = oracle_err.max(diff / scale);
        let tr = s[0][0] + s[1][1] + s[2][2];
        let gam = heat_kernel(x, t).unwrap();
        trace_err = trace_err.max((tr - 2.0 * gam).abs() / max_entry(&s));
        let d: Vec<_> = (0..3).map(|k| oseen_derivative(x, t, k).unwrap()).collect();
        let dscale = d.iter().map(max_entry).fold(0.0, f64::max);
        for i in 0..3 {
            let row: f64 = (0..3).map(|j| d[j][i][j]).sum();
            div_err = div_err.max(row.abs() / dscale);
        }
    }
    checks.push(check("oseen vs quadrature oracle", oracle_err <= 1e-6, format!("max rel {oracle_err:.2e} over 20 points")));
    checks.push(check("trace law", trace_err <= 1e-8, format!("max rel {trace_err:.2e}")));
    checks.push(check("row divergence", div_err <= 1e-8, format!("max rel {div_err:.2e}")));

    let spec = SampleSpec::default();
    let mut worst: f64 = 0.0;
    let mut all_stable = true;
    let mut consts = Vec::new();
    for (l, k) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let r = decay_scan(l, k, &spec).unwrap();
        worst = worst.max(r.stability_pct);
        all_stable &= r.stable && r.stability_pct <= 10.0 && r.c_emp.is_finite() && r.c_emp > 0.0;
        consts.push(format!("C({l},{k}) = {:.3e}", r.c_emp));
    }
    checks.push(check("decay constants stable", all_stable, format!("{}; worst drift {worst:.2}%", consts.join(", "))));

    conclude(1, "kernels", &checks);
}

#[test]
fn criterion_2_lorentz() {
    let mut checks = Vec::new();
    let exact = (4.0 * PI / 3.0f64).powf(1.0 / 3.0);

    let mut errs = Vec::new();
    for n in [16, 32, 64, 128] {
        let g = GridSpec::half_shifted(2.5, n).unwrap();
        let f = sample_scalar(g, |x| if norm3(x) < 1.0 { 1.0 } else { 0.0 }).unwrap();
        let v = lorentz_norm(&f, &Mask::full(g), 3.0, f64::INFINITY).unwrap().value;
        errs.push((n, (v - exact).abs() / exact));
    }
    let at64 = errs.iter().find(|e| e.0 == 64).unwrap().1;
    let decreasing = errs.windows(2).all(|w| w[1].1 < w[0].1);
    let listing: Vec<String> = errs.iter().map(|(n, e)| format!("N={n}: {e:.2e}")).collect();
    checks.push(check("ball indicator", at64 <= 0.02 && decreasing, listing.join(", ")));

    let g = GridSpec::half_shifted(4.5, 64).unwrap();
    let f = sample_scalar(g, |x| 1.0 / norm3(x)).unwrap();
    let vals: Vec<f64> = [0.5, 1.0, 1.5, 2.0]
        .iter()
        .map(|&r| lorentz_norm(&f, &Mask::ball(g, [0.0; 3], r), 3.0, f64::INFINITY).unwrap().value)
        .collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &v| (a.min(v), b.max(v)));
    checks.push(check("|x|^-1 radius independence", (hi - lo) / lo <= 0.01, format!("values {vals:.6?}")));

    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let g = GridSpec::new(2.0, 8).unwrap();
    let mask = Mask::full(g);
    let mut violations = 0;
    for _ in 0..100 {
        let data: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0) * rng.gen_range(0.0f64..1.0).powi(3)).collect();
        let f = Field::from_data(g, Rank::Scalar, data).unwrap();
        let weak = lorentz_norm(&f, &mask, 3.0, f64::INFINITY).unwrap().value;
        let mid = lorentz_norm(&f, &mask, 3.0, 2.0).unwrap().value;
        let strong = lorentz_norm(&f, &mask, 3.0, 3.0).unwrap().value;
        let one = lorentz_norm(&f, &mask, 3.0, 1.0).unwrap().value;
        let tol = 1e-12 * one;
        if weak > strong + tol || strong > mid + tol || mid > one + tol {
            violations += 1;
        }
    }
    checks.push(check("quasinorm ordering", violations == 0, format!("{violations} violations in 100 fields")));

    conclude(2, "lorentz", &checks);
}

fn max_in_ball(f: &Field, radius: f64) -> f64 {
    let g = *f.grid();
    (0..g.len()).filter(|&p| norm3(g.node(p)) < radius).fold(0.0, |m, p| m.max(f.at(0, p).abs()))
}

#[test]
fn criterion_3_localization() {
    let mut checks = Vec::new();
    let cut = CutoffFamily::default();
    let flow = serrin_default();

    // div ũ under refinement at t = 1/2
    let mut errs = Vec::new();
    for n in [64, 96, 128] {
        let g = GridSpec::new(3.5, n).unwrap();
        let u = sample_vector(g, |x| flow.velocity(x, 0.5)).unwrap();
        let (ut, _) = localize_velocity_frame(&u, 0.5, &cut).unwrap();
        let div = Spectral::new(g).divergence(&ut).unwrap();
        errs.push((n as f64, div.max_abs()));
    }
    let orders: Vec<f64> = errs.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[1].0 / w[0].0).ln()).collect();
    checks.push(check(
        "div residual order",
        orders.iter().all(|&o| o >= 2.0),
        format!("errors {:.2e}/{:.2e}/{:.2e}, orders {orders:.2?}", errs[0].1, errs[1].1, errs[2].1),
    ));

    let g = GridSpec::new(4.0, 32).unwrap();
    let tg = TimeGrid::unit(32).unwrap();
    let (u, p) = flow.sample(g, tg).unwrap();
    let state = localize(&u, &p.unwrap(), &cut).unwrap();
    let early: Vec<usize> = (0..tg.len()).filter(|&m| tg.node(m) < 0.05).collect();
    let zero = early.iter().all(|&m| state.u_tilde.frame(m).max_abs() == 0.0);
    checks.push(check("zero before switch-on", zero && !early.is_empty(), format!("{} frames with t < 1/20", early.len())));

    let mut sp = Spectral::new(g);
    let mut worst: f64 = 0.0;
    for fr in state.eta.frames() {
        let scale = fr.max_abs();
        if scale == 0.0 {
            continue;
        }
        let lap = sp.laplacian(fr);
        worst = worst.max(max_in_ball(&lap, 0.9) / scale);
    }
    checks.push(check("eta harmonic in B_0.9", worst <= 1e-8, format!("max |Δη| / ‖η‖ = {worst:.2e}")));

    // ∇η tail on 2 < |x| < L/2 for a generic solenoidal field
    let side = 8.0;
    let rs = random_solenoidal(5, Spectrum { side, shell_min: 1.0, shell_max: 3.0, slope: 1.0 }).unwrap();
    let g = GridSpec::new(side, 48).unwrap();
    let u = sample_vector(g, |x| rs.velocity(x, 1.0)).unwrap();
    let (_, eta) = localize_velocity_frame(&u, 1.0, &cut).unwrap();
    let fit = grad_eta_tail_fit(&eta, 2.0, side / 2.0, 8).unwrap();
    checks.push(check(
        "grad eta tail exponent -2 +/- 0.1",
        (fit.exponent + 2.0).abs() <= 0.1,
        format!("fitted {:.3} on 2 < |x| < {}", fit.exponent, side / 2.0),
    ));

    conclude(3, "localization", &checks);
}

fn small_serrin_problem(g: GridSpec, tg: TimeGrid, target: f64) -> (PicardProblem, f64) {
    let base = serrin_default();
    let (u, _) = base.sample(g, tg).unwrap();
    let e1 = epsilon_of(&u).unwrap();
    let flow = base.scaled(target / e1);
    let (u, p) = flow.sample(g, tg).unwrap();
    let eps = epsilon_of(&u).unwrap();
    (PicardProblem::new(&u, &p.unwrap(), &CutoffFamily::default()).unwrap(), eps)
}

#[test]
fn criterion_4_picard() {
    let mut checks = Vec::new();
    let g = GridSpec::new(4.0, 32).unwrap();
    let tg = TimeGrid::unit(32).unwrap();
    let (problem, eps) = small_serrin_problem(g, tg, 1e-2 * (1.0 - 1e-9));
    let cfg = PicardConfig::default();
    let (vbar, trace) = problem.solve(&cfg).unwrap();
    let rho = trace.max_ratio().unwrap_or(0.0);
    checks.push(check(
        "convergence",
        eps <= 1e-2 && trace.verdict == PicardVerdict::Converged && rho < 0.5,
        format!("eps = {eps:.3e}, {:?} in {} iterations, max rho = {rho:.2e}", trace.verdict, trace.iterations()),
    ));
    checks.push(check("fixed-point residual", trace.residual <= 1e-8, format!("{:.2e}", trace.residual)));

    let starts = [StartIterate::Zero, StartIterate::V0, StartIterate::Random { seed: 3 }, StartIterate::Random { seed: 4 }];
    let uq = uniqueness_probe(&problem, &cfg, &starts).unwrap();
    let vnorm = cfg.norm.eval(&vbar).unwrap();
    checks.push(check(
        "uniqueness spread",
        uq.all_converged && uq.max_distance <= 1e-8 && uq.max_distance <= 1e-8 * vnorm,
        format!("spread {:.2e}, relative {:.2e}", uq.max_distance, uq.max_distance / vnorm),
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut rand_field = || {
        let c: [f64; 6] = [0; 6].map(|_| rng.gen_range(-1.0..1.0));
        sample_space_time(g, tg, Rank::Vector, move |x, t, o| {
            o[0] = t * (c[0] * x[1].sin() + c[1]);
            o[1] = t * (c[2] * x[2].cos() + c[3] * x[0]);
            o[2] = t * (c[4] * (x[0] * x[1]).sin() + c[5]);
        })
        .unwrap()
    };
    let (v1, v2) = (rand_field(), rand_field());
    let aff = affinity_defect(&problem, &v1, &v2).unwrap();
    checks.push(check("affinity identity", aff <= 1e-12, format!("relative defect {aff:.2e}")));

    let excess = trace.geometric_decay_excess(1).unwrap_or(f64::INFINITY);
    checks.push(check("geometric decay", excess <= 1.05, format!("worst d_n / (d_m rho^(n-m)) = {excess:.4}")));

    let flow = serrin_default();
    let amps = [1.0, 3.0, 10.0, 30.0, 100.0];
    let scan_cfg = ScanConfig { early_iterations: 6, bisection_steps: 6 };
    let mut stars = Vec::new();
    let mut monotone = true;
    for n in [32, 48] {
        let gs = GridSpec::new(4.0, n).unwrap();
        let rep = contraction_threshold_scan(&flow, &amps, gs, tg, &CutoffFamily::default(), &cfg, &scan_cfg).unwrap();
        monotone &= rep.monotone;
        stars.push(rep.epsilon_star);
    }
    let (a, b) = (stars[0].unwrap_or(f64::NAN), stars[1].unwrap_or(f64::NAN));
    let drift = (a - b).abs() / b;
    checks.push(check(
        "threshold scan",
        monotone && drift <= 0.2,
        format!("monotone = {monotone}, eps* = {a:.3} (N=32) vs {b:.3} (N=48), drift {:.1}%", 100.0 * drift),
    ));

    conclude(4, "picard", &checks);
}

#[test]
fn criterion_5_ledger() {
    let mut checks = Vec::new();

    let led = bootstrap_schedule(&q("9"), &q("9")).unwrap();
    let (k, sigma, chain) = bootstrap_chain(&led);
    let expect: Vec<ExtRational> = ["3/2", "12/7", "2", "12/5", "3", "4", "6", "12", "inf"].iter().map(|s| q(s)).collect();
    checks.push(check(
        "(9,9) schedule",
        k == q("8") && sigma == q("1/12") && chain == expect && led.all_pass(),
        format!("K = {k}, sigma = {sigma}, {} exponents", chain.len()),
    ));

    let pairs = random_subcritical_pairs(7, 50);
    let mut bad = 0;
    for (qq, s) in &pairs {
        let led = bootstrap_schedule(qq, s).unwrap();
        let (_, _, chain) = bootstrap_chain(&led);
        let minimal = led.conditions.iter().any(|c| c.name == "K_minimal" && c.verdict);
        if chain.last() != Some(&ExtRational::Infinity) || !minimal || !led.all_pass() {
            bad += 1;
        }
    }
    checks.push(check("random pairs reach inf minimally", bad == 0 && pairs.len() == 50, format!("{bad} of {} failed", pairs.len())));

    let tuples = random_step1_tuples(13, 100);
    let mut mismatch = 0;
    for [qq, s, m, d] in &tuples {
        let led = step1_conditions(qq, s, m, d).unwrap();
        let get = |n: &str| led.conditions.iter().find(|c| c.name == n).map(|c| c.verdict).unwrap();
        // independent check of the reduced inequality
        let rhs = &(&q("3") / s) + &(&q("3/2") / &(qq + d));
        let reduced = m.recip() < rhs;
        if get("step1_product") != reduced || get("step1_reduced") != reduced {
            mismatch += 1;
        }
    }
    checks.push(check("step-1 equivalence", mismatch == 0 && tuples.len() == 100, format!("{mismatch} of {} disagree", tuples.len())));

    let at4 = pressure_m_condition(&q("4"), &q("2")).unwrap().threshold;
    let mut above_six_ok = true;
    for s in ["61/10", "7", "8", "25/3", "12", "100", "1000001/1000", "inf"] {
        let th = pressure_m_condition(&q(s), &q("1")).unwrap().threshold;
        above_six_ok &= th < ExtRational::one();
    }
    let at6 = pressure_m_condition(&q("6"), &q("2")).unwrap().threshold;
    checks.push(check(
        "m thresholds",
        at4 == q("4/3") && above_six_ok && at6 == ExtRational::one(),
        format!("q=4 -> {at4}, q=6 -> {at6}"),
    ));

    conclude(5, "ledger", &checks);
}

#[test]
fn criterion_6_residuals() {
    let mut checks = Vec::new();
    let tol = 1e-6;
    let serrin = serrin_default();
    let battery = default_battery(TestFieldKind::Plain);
    let mut maxes = Vec::new();
    let mut last_pass = false;
    for m in [16, 32, 64] {
        let quad = ResidualQuadrature::new(48, TimeGrid::unit(m).unwrap());
        let r = weak_residual(&serrin, &battery, &quad, tol).unwrap();
        maxes.push(r.max_abs());
        last_pass = r.passed();
    }
    let orders: Vec<f64> = maxes.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    checks.push(check(
        "serrin weak residual",
        last_pass && orders.iter().all(|&o| o >= 2.0),
        format!("M=16/32/64: {:.2e}/{:.2e}/{:.2e}, orders {orders:.2?}", maxes[0], maxes[1], maxes[2]),
    ));

    let quad = ResidualQuadrature::new(32, TimeGrid::unit(32).unwrap());
    let r = very_weak_residual(&rotation_flow(), &default_battery(TestFieldKind::Curl), &quad, tol).unwrap();
    checks.push(check(
        "non-solution rejected",
        !r.passed() && r.max_abs() >= 10.0 * tol,
        format!("max residual {:.2e} = {:.1e} x tol", r.max_abs(), r.max_abs() / tol),
    ));

    let landau = landau_flow(2.0).unwrap();
    let pts = shell_points(0.5, 2.0, 200, 21);
    let sr = strong_residual(&landau, &pts, 0.0, 1e-3).unwrap();
    checks.push(check(
        "landau stationary residual",
        sr.momentum <= tol * sr.scale && sr.divergence <= tol * sr.scale,
        format!("momentum {:.2e}, divergence {:.2e}, scale {:.2e}", sr.momentum, sr.divergence, sr.scale),
    ));

    let mut hom: f64 = 0.0;
    for &x in &pts {
        let (u, p) = (landau.velocity(x, 0.0), landau.pressure(x, 0.0).unwrap());
        for lam in [0.25, 0.5, 2.0, 4.0] {
            let y = x.map(|c| lam * c);
            let (uy, py) = (landau.velocity(y, 0.0), landau.pressure(y, 0.0).unwrap());
            for i in 0..3 {
                hom = hom.max((lam * uy[i] - u[i]).abs() / norm3(u));
            }
            hom = hom.max((lam * lam * py - p).abs() / p.abs());
        }
    }
    checks.push(check("landau homogeneity", hom <= 4.0 * f64::EPSILON, format!("max rel deviation {hom:.1e}")));

    conclude(6, "residuals", &checks);
}

#[test]
fn criterion_7_operators() {
    let mut checks = Vec::new();

    let g = GridSpec::new(8.0, 16).unwrap();
    let tg = TimeGrid::unit(16).unwrap();
    let kap = 2.0 * PI / 8.0;
    let f = sample_space_time(g, tg, Rank::Tensor, |x, _, o| o[1] = (kap * x[1]).sin()).unwrap();
    let out = duhamel_phi(&f, &DuhamelConfig::spectral(tg)).unwrap();
    let mut err: f64 = 0.0;
    for (m, t) in tg.nodes().into_iter().enumerate() {
        // Φ(F)_1 = ∫₀ᵗ e^{-κ²(t-s)} ds · κ cos(κx₂)
        let amp = (1.0 - (-kap * kap * t).exp()) / kap;
        for p in 0..g.len() {
            err = err.max((out.frame(m).at(0, p) - amp * (kap * g.node(p)[1]).cos()).abs());
        }
    }
    checks.push(check("single-mode duhamel", err <= 1e-6, format!("max error {err:.2e}")));

    // gradient-plus-curl Gaussian forcing growing linearly from t = 0
    let g = GridSpec::new(10.0, 32).unwrap();
    let tg = TimeGrid::new(0.0, 0.5, 32).unwrap();
    let s2 = 2.0;
    let f0 = sample_space_time(g, tg, Rank::Vector, |x, t, o| {
        let e = (-(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]) / s2).exp();
        let d = x.map(|c| -2.0 * c / s2 * e);
        o[0] = t * (d[0] + d[1]);
        o[1] = t * (d[1] - d[0]);
        o[2] = t * d[2];
    })
    .unwrap();
    let f1 = SpaceTimeField::zeros(g, tg, Rank::Tensor);
    let a = build_v0(&f0, &f1, &DuhamelConfig::spectral(tg)).unwrap().v0;
    let b = build_v0(&f0, &f1, &DuhamelConfig { time: tg, path: DuhamelPath::Oseen }).unwrap().v0;
    let (mut num, mut den) = (0.0, 0.0);
    for (x, y) in a.frames().iter().zip(b.frames()) {
        for (p, q) in x.data().iter().zip(y.data()) {
            num += (p - q) * (p - q);
            den += q * q;
        }
    }
    let rel = (num / den).sqrt();
    checks.push(check("v0 spectral vs oseen", rel <= 1e-3, format!("relative L2 {rel:.2e}")));

    let g = GridSpec::new(8.0, 32).unwrap();
    let tg = TimeGrid::unit(16).unwrap();
    let battery = random_tensor_battery(g, tg, 20, 17).unwrap();
    let bnd = phi_boundedness_probe(&battery, &DuhamelConfig::spectral(tg)).unwrap();
    let finite = bnd.ratios.iter().all(|r| r.is_finite() && *r > 0.0);
    checks.push(check(
        "phi boundedness",
        finite && bnd.stability_pct <= 20.0,
        format!("max ratio {:.4}, first half {:.4}, drift {:.1}%", bnd.max_ratio, bnd.max_ratio_first_half, bnd.stability_pct),
    ));

    let g = GridSpec::new(2.0 * PI, 16).unwrap();
    let u = sample_vector(g, |x| [x[1].sin(), 0.0, 0.0]).unwrap();
    let y = yamazaki_probe(&u, 1.5, 3.0, 10.0, 256).unwrap();
    checks.push(check(
        "yamazaki tail",
        y.value.is_finite() && y.tail_increment.abs() <= 1e-4 * y.value,
        format!("value {:.4}, increment T=10->20 {:.2e}", y.value, y.tail_increment),
    ));

    // the projection must also annihilate the gradient part exactly
    let grad = nsreg::grid::derivative(&sample_scalar(g, |x| x[0].sin() * x[2].cos()).unwrap(), DerivativeOp::Grad).unwrap();
    let pg = nsreg::stokes::leray_project(&grad).unwrap().max_abs();
    checks.push(check("projection of gradient", pg <= 1e-12, format!("{pg:.1e}")));

    conclude(7, "operators", &checks);
}
