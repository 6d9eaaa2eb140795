use nsreg::grid::{Field, GridSpec, Rank, SpaceTimeField, Spectral, TimeGrid};
use nsreg::kernels::{heat_convolution_oracle, heat_kernel, oseen_tensor};
use nsreg::stokes::{duhamel_phi, leray_project, pressure_from_velocity, stokes_semigroup, DuhamelConfig};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn grid() -> GridSpec {
    GridSpec::new(4.0, 8).unwrap()
}

fn random_field(rng: &mut ChaCha8Rng, rank: Rank) -> Field {
    let n = grid().len() * rank.components();
    Field::from_data(grid(), rank, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

fn random_history(seed: u64, time: TimeGrid) -> SpaceTimeField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = (0..time.len()).map(|_| random_field(&mut rng, Rank::Tensor)).collect();
    SpaceTimeField::new(time, frames).unwrap()
}

fn dot(a: &Field, b: &Field) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| x * y).sum()
}

fn point() -> impl Strategy<Value = [f64; 3]> {
    [-3.0f64..3.0, -3.0f64..3.0, -3.0f64..3.0]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn oseen_parabolic_scaling(x in point(), t in 0.05f64..2.0) {
        let a = oseen_tensor(x.map(|c| 2.0 * c), 4.0 * t).unwrap();
        let b = oseen_tensor(x, t).unwrap();
        let scale = b.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((8.0 * a[i][j] - b[i][j]).abs() <= 1e-13 * scale);
                prop_assert!((b[i][j] - b[j][i]).abs() <= 1e-15 * scale);
            }
        }
    }

    #[test]
    fn projection_idempotent_and_self_adjoint(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (v, w) = (random_field(&mut rng, Rank::Vector), random_field(&mut rng, Rank::Vector));
        let pv = leray_project(&v).unwrap();
        let ppv = leray_project(&pv).unwrap();
        prop_assert!(ppv.sub(&pv).unwrap().max_abs() <= 1e-13 * pv.max_abs());
        let pw = leray_project(&w).unwrap();
        let (a, b) = (dot(&pv, &w), dot(&v, &pw));
        prop_assert!((a - b).abs() <= 1e-12 * v.l2_norm() * w.l2_norm());
        let div = Spectral::new(grid()).divergence(&pv).unwrap();
        prop_assert!(div.max_abs() <= 1e-12 * pv.max_abs());
    }

    #[test]
    fn semigroup_commutes_with_projection(seed in any::<u64>(), t in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = random_field(&mut rng, Rank::Vector);
        let a = leray_project(&stokes_semigroup(&v, t).unwrap()).unwrap();
        let b = stokes_semigroup(&leray_project(&v).unwrap(), t).unwrap();
        prop_assert!(a.sub(&b).unwrap().max_abs() <= 1e-13 * v.max_abs());
    }

    #[test]
    fn pressure_ignores_constant_shift(seed in any::<u64>(), c in [-2.0f64..2.0, -2.0f64..2.0, -2.0f64..2.0]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = leray_project(&random_field(&mut rng, Rank::Vector)).unwrap();
        let mut shifted = u.clone();
        for (i, ci) in c.iter().enumerate() {
            for v in shifted.component_mut(i) {
                *v += ci;
            }
        }
        let (p, q) = (pressure_from_velocity(&u).unwrap(), pressure_from_velocity(&shifted).unwrap());
        prop_assert!(p.sub(&q).unwrap().max_abs() <= 1e-12 * (1.0 + p.max_abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn duhamel_linear_solenoidal_and_zero_at_start(s1 in any::<u64>(), s2 in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let time = TimeGrid::unit(4).unwrap();
        let cfg = DuhamelConfig::spectral(time);
        let (f, g) = (random_history(s1, time), random_history(s2, time));
        let combo = f.scaled(a).axpy(b, &g).unwrap();
        let lhs = duhamel_phi(&combo, &cfg).unwrap();
        let rhs = duhamel_phi(&f, &cfg).unwrap().scaled(a).axpy(b, &duhamel_phi(&g, &cfg).unwrap()).unwrap();
        let scale = lhs.max_abs().max(1e-300);
        prop_assert!(lhs.sub(&rhs).unwrap().max_abs() <= 1e-12 * scale);
        prop_assert_eq!(lhs.frame(0).max_abs(), 0.0);
        let mut sp = Spectral::new(grid());
        for fr in lhs.frames() {
            prop_assert!(sp.divergence(fr).unwrap().max_abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn heat_semigroup_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let x = [0; 3].map(|_| rng.gen_range(-1.5..1.5));
        let (t, s) = (rng.gen_range(0.05..1.0), rng.gen_range(0.05..1.0));
        let conv = heat_convolution_oracle(x, t, s).unwrap();
        let direct = heat_kernel(x, t + s).unwrap();
        assert!((conv - direct).abs() <= 1e-6 * direct, "x = {x:?}, t = {t}, s = {s}");
    }
}
