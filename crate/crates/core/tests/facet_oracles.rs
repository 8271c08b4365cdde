use facetflow::facet1d::{self, CertificateOptions, ExplicitSolution, FacetOdeOptions, FacetProblem1D};
use facetflow::forcing::{Forcing, Shape, Tent};
use facetflow::grid::Grid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Facet speeds by projected gradient on the dual field: minimize
/// `Σ h·((z_{k+1} − z_k)/h − f_k)²` over `z ∈ [−1, 1]` with pinned ends,
/// then `Λ_k = (z_{k+1} − z_k)/h − f_k`.
fn qp_speeds(f: &[f64], h: f64, theta: (f64, f64)) -> Vec<f64> {
    let n = f.len();
    let mut z: Vec<f64> = (0..=n).map(|j| theta.0 + (theta.1 - theta.0) * j as f64 / n as f64).collect();
    let speeds = |z: &[f64]| (0..n).map(|k| (z[k + 1] - z[k]) / h - f[k]).collect::<Vec<f64>>();
    let step = h / 8.0;
    for _ in 0..5_000_000 {
        let lam = speeds(&z);
        let mut moved = 0.0f64;
        for j in 1..n {
            let g = 2.0 * (lam[j - 1] - lam[j]);
            let next = (z[j] - step * g).clamp(-1.0, 1.0);
            moved = moved.max((next - z[j]).abs());
            z[j] = next;
        }
        if moved < 1e-16 {
            break;
        }
    }
    speeds(&z)
}

fn random_piecewise_linear(rng: &mut impl Rng, lo: f64, hi: f64) -> Forcing {
    let knots = rng.gen_range(3..8);
    let x: Vec<f64> = (0..knots).map(|k| lo + (hi - lo) * k as f64 / (knots - 1) as f64).collect();
    let values = (0..knots).map(|_| rng.gen_range(-3.0..3.0)).collect();
    Forcing::new(1, Shape::Tabulated { x, values }).unwrap()
}

#[test]
fn taut_string_matches_quadratic_program() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..6 {
        let half = rng.gen_range(0.3..1.5);
        let f = random_piecewise_linear(&mut rng, -half, half);
        let theta = (if rng.gen_bool(0.5) { 1.0 } else { -1.0 }, if rng.gen_bool(0.5) { 1.0 } else { -1.0 });
        let p = FacetProblem1D::from_forcing(&f, -half, half, 64, theta.0, theta.1).unwrap();
        let r = facet1d::solve(&p).unwrap();
        let want = qp_speeds(&p.forcing, p.h(), theta);
        let diff = r.lambda.iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(diff <= 1e-8, "max diff {diff}");
    }
}

#[test]
fn two_bumps_split_the_facet() {
    let tents = vec![
        Tent { c: -8.0, r: 0.3, center: [-0.7, 0.0] },
        Tent { c: -8.0, r: 0.3, center: [0.7, 0.0] },
    ];
    let f = Forcing::new(1, Shape::SumOfTents(tents)).unwrap();
    let p = FacetProblem1D::from_forcing(&f, -1.2, 1.2, 480, -1.0, 1.0).unwrap();
    let r = facet1d::solve(&p).unwrap();
    let o = facet1d::obstacles(&p);
    // two deep wells pin the string to an obstacle between them
    let touches = r.knots.iter().any(|&k| {
        let x = o.x[k];
        x.abs() < 0.5 && ((r.y[k] - o.upper[k]).abs() < 1e-12 || (r.y[k] - o.lower[k]).abs() < 1e-12)
    });
    assert!(touches);
    assert!(facet1d::facet_partition(&r, 1e-9).len() >= 2);
    assert_eq!(facet1d::facet_partition(&r, f64::INFINITY).len(), 1);
}

#[test]
fn chord_solution_is_a_single_run() {
    let p = FacetProblem1D::new(-0.5, 0.5, -1.0, 1.0, vec![0.0; 100]).unwrap();
    let r = facet1d::solve(&p).unwrap();
    assert_eq!(facet1d::facet_partition(&r, 1e-9).len(), 1);
    assert!(r.lambda.iter().all(|l| (l - 2.0).abs() < 1e-12));
}

#[test]
fn facet_length_residual_and_mass_condition() {
    let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
    let ell = facet1d::solve_ell(&f).unwrap();
    assert!((ell - (2.0f64 / 3.0).sqrt()).abs() < 1e-10);
    assert!(facet1d::tangency_residual(&f, ell).abs() <= 1e-10);
    assert!(facet1d::solve_ell(&Forcing::tent_1d(1.0, 1.0, 0.0).unwrap()).is_err());
}

#[test]
fn facet_height_grows_linearly() {
    let f = Forcing::tent_1d(3.0, 1.0, 0.0).unwrap();
    let sol = ExplicitSolution::new(&f).unwrap();
    let grid = Grid::line(4000, -2.0, 2.0).unwrap();
    let opts = FacetOdeOptions { t_end: 0.1, dt: 1e-4, emit_every: 100, ..FacetOdeOptions::default() };
    let traj = facet1d::evolve_facet_ode(&f, &vec![0.0; 4000], &grid, &opts).unwrap();
    let mid = traj.x.iter().position(|x| x.abs() < 1e-3).unwrap();
    for (t, u) in &traj.frames {
        if *t >= 0.02 - 1e-12 {
            assert!((u[mid] / t - sol.facet_speed()).abs() <= 1e-3, "t {t}");
        }
    }
}

#[test]
fn zero_forcing_keeps_zero_data() {
    let grid = Grid::line(200, -1.0, 1.0).unwrap();
    let opts = FacetOdeOptions { t_end: 0.05, dt: 1e-3, emit_every: 10, ..FacetOdeOptions::default() };
    let traj = facet1d::evolve_facet_ode(&Forcing::zero(1), &vec![0.0; 200], &grid, &opts).unwrap();
    // the whole box is one facet pinned by θ = ∓1 at the walls: Λ = 2/|box|
    for (t, u) in &traj.frames {
        assert!(u.iter().all(|v| (v - t).abs() < 1e-12), "t {t}");
    }
}

#[test]
fn certificate_rejects_unmet_hypotheses() {
    let opts = CertificateOptions::default();
    for f in [Forcing::tent_1d(3.0, 1.0, 0.0).unwrap(), Forcing::zero(1)] {
        let r = facet1d::nonexistence_certificate(&f, &opts).unwrap();
        assert!(!r.issued(), "{}", r.verdict);
    }
    let r = facet1d::nonexistence_certificate(&Forcing::tent_1d(0.9, 1.0, 0.0).unwrap(), &opts).unwrap();
    assert!(r.issued());
    assert!((r.l.unwrap() - 10.0 / 9.0).abs() < 1e-12);
}
