use facetflow::anisotropy::{Anisotropy, RegularizationMode};
use facetflow::forcing::Forcing;
use facetflow::grid::{Boundary, Grid, ScalarField};
use facetflow::levelset::{self, CurvatureForm, GradientNorm, LevelSetState, Mobility, SchemeOptions};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOP: f64 = 0.3;

/// Minimum of two square cones capped at `TOP`, and the same plus a
/// nonnegative bump, also capped.
fn pair(seed: u64, g: Grid) -> (ScalarField, ScalarField) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cones: Vec<([f64; 2], f64)> = (0..2).map(|_| ([rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)], rng.gen_range(0.2..0.4))).collect();
    let (bc, br, ba) = ([rng.gen_range(-0.4..0.4), rng.gen_range(-0.4..0.4)], rng.gen_range(0.1..0.4), rng.gen_range(0.0..0.1));
    let base = move |x: [f64; 2]| cones.iter().map(|(c, r)| (x[0] - c[0]).abs().max((x[1] - c[1]).abs()) - r).fold(f64::INFINITY, f64::min);
    let bump = move |x: [f64; 2]| ba * (1.0 - (x[0] - bc[0]).hypot(x[1] - bc[1]) / br).max(0.0);
    let u = ScalarField::from_fn(g, Boundary::Exterior(TOP), |x| base(x).min(TOP)).unwrap();
    let v = ScalarField::from_fn(g, Boundary::Exterior(TOP), |x| (base(x) + bump(x)).min(TOP)).unwrap();
    (u, v)
}

fn scheme(curvature: CurvatureForm) -> SchemeOptions {
    SchemeOptions { curvature, gradient: GradientNorm::Upwind, delta_grad: Some(1e-8), ..SchemeOptions::default() }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn one_step_preserves_order(seed in any::<u64>(), c in -3.0f64..3.0) {
        let g = Grid::square(32, -1.6, 1.6).unwrap();
        let (u, v) = pair(seed, g);
        let reg = Anisotropy::square().regularize(RegularizationMode::A, 16).unwrap();
        let mob = Mobility::linear(1.0).unwrap();
        let f = Forcing::tent_2d(c, 0.8, [0.0, 0.0]).unwrap();
        let form = CurvatureForm::Divergence;
        let dt = levelset::default_dt(&u, &reg, &mob, &f, 0.01, form, 4.0)
            .min(levelset::default_dt(&v, &reg, &mob, &f, 0.01, form, 4.0));
        let opts = scheme(form);
        let a = levelset::step(&LevelSetState::new(u), &reg, &mob, &f, dt, &opts).unwrap();
        let b = levelset::step(&LevelSetState::new(v), &reg, &mob, &f, dt, &opts).unwrap();
        let worst = a.u.values.iter().zip(&b.u.values).map(|(x, y)| x - y).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(worst <= 1e-12, "{}", worst);
    }

    #[test]
    fn unforced_step_stays_within_the_initial_range(seed in any::<u64>()) {
        let g = Grid::square(32, -1.6, 1.6).unwrap();
        let (u, _) = pair(seed, g);
        let reg = Anisotropy::diamond().regularize(RegularizationMode::A, 8).unwrap();
        let mob = Mobility::linear(1.0).unwrap();
        let f = Forcing::zero(2);
        let dt = levelset::default_dt(&u, &reg, &mob, &f, 0.01, CurvatureForm::Divergence, 4.0);
        let (lo, hi) = (u.min(), u.max());
        let s = levelset::step(&LevelSetState::new(u), &reg, &mob, &f, dt, &scheme(CurvatureForm::Divergence)).unwrap();
        prop_assert!(s.u.min() >= lo - 1e-14 && s.u.max() <= hi + 1e-14);
    }

    #[test]
    fn step_commutes_with_constant_shift(seed in any::<u64>(), c in -2.0f64..2.0) {
        let g = Grid::square(24, -1.6, 1.6).unwrap();
        let (u, _) = pair(seed, g);
        let shifted = ScalarField::new(g, Boundary::Exterior(TOP + c), u.values.iter().map(|x| x + c).collect()).unwrap();
        let reg = Anisotropy::square().regularize(RegularizationMode::A, 8).unwrap();
        let mob = Mobility::linear(1.0).unwrap();
        let f = Forcing::tent_2d(1.5, 0.6, [0.1, 0.0]).unwrap();
        let a = levelset::step(&LevelSetState::new(u), &reg, &mob, &f, 1e-5, &scheme(CurvatureForm::Divergence)).unwrap();
        let b = levelset::step(&LevelSetState::new(shifted), &reg, &mob, &f, 1e-5, &scheme(CurvatureForm::Divergence)).unwrap();
        for (x, y) in a.u.values.iter().zip(&b.u.values) {
            prop_assert!((x + c - y).abs() <= 1e-12);
        }
    }
}

#[test]
fn lipschitz_bound_holds_along_a_forced_run() {
    let g = Grid::square(48, -1.5, 1.5).unwrap();
    let (u, _) = pair(5, g);
    let reg = Anisotropy::square().regularize(RegularizationMode::A, 8).unwrap();
    let mob = Mobility::linear(1.0).unwrap();
    let f = Forcing::tent_2d(2.0, 0.8, [0.0, 0.0]).unwrap();
    let opts = levelset::EvolveOptions { t_end: 0.02, emit_every: 0.002, scheme: SchemeOptions::default(), gauge: None };
    let traj = levelset::evolve(&u, &reg, &mob, &f, &opts).unwrap();
    let (l0, m) = (traj.diagnostics[0].lip, mob.lipschitz() * f.lipschitz());
    for d in &traj.diagnostics {
        assert!(d.lip <= l0 * (m * d.t).exp() + 1e-12, "t {}: {} > {}", d.t, d.lip, l0 * (m * d.t).exp());
    }
}
