use std::sync::Arc;

use approx::assert_relative_eq;
use isocline::chart::{finite_difference_metric, Chart};
use isocline::field::{central_jacobian, AmbientField, GradientField, Potential};
use isocline::geometry::{Matrix, Vector};
use isocline::manifolds::{
    chart_transition, muller_brown_planar, stereo_coords, AnalyticAtlas, Manifold, PlanarMullerBrown, Plane,
    PlaneChart, Pseudosphere, PseudosphereChart, PseudosphereMullerBrown, Sphere, SphereMullerBrown,
    StereographicChart, XyzPotential,
};
use proptest::prelude::*;

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

/// Planar equilibria and their energies, Newton-polished in extended precision.
const FIXTURES: [([f64; 2], f64); 5] = [
    (
        [-0.558_223_634_633_024_3, 1.441_725_841_804_668_7],
        -146.699_517_209_954,
    ),
    (
        [0.623_499_404_930_876_6, 0.028_037_758_528_685_66],
        -108.166_724_116_852_36,
    ),
    (
        [-0.050_010_822_998_206_04, 0.466_694_104_871_972_1],
        -80.767_818_129_659_03,
    ),
    (
        [-0.822_001_558_732_732_1, 0.624_312_802_814_871_4],
        -40.664_843_508_657_4,
    ),
    ([0.212_486_582_000_662, 0.292_988_325_107_367_8], -72.248_940_112_325_21),
];

#[test]
fn planar_equilibria_fixtures() {
    for (u, e) in FIXTURES {
        let (energy, grad) = muller_brown_planar(&v(&u));
        assert_relative_eq!(energy, e, max_relative = 1e-13);
        assert!(grad.norm() < 1e-9, "gradient {grad} at {u:?}");
    }
}

#[test]
fn planar_gradient_matches_finite_differences() {
    for u in [[-1.2, 0.3], [0.1, 1.7], [0.8, -0.2]] {
        let p = v(&u);
        let fd = central_jacobian(|q| Ok(Vector::from_element(1, PlanarMullerBrown.energy(q)?)), &p, 1e-6).unwrap();
        let g = PlanarMullerBrown.gradient(&p).unwrap();
        assert_relative_eq!(fd.row(0).transpose(), g, max_relative = 1e-7);
    }
}

#[test]
fn sphere_fixtures_are_equilibria_of_the_surface_field() {
    let field = GradientField::new(Arc::new(SphereMullerBrown), Arc::new(Sphere));
    for (u, e) in FIXTURES {
        let x = SphereMullerBrown::from_planar(u);
        assert_relative_eq!(x.norm(), 1.0, epsilon = 1e-14);
        let back = SphereMullerBrown::to_planar(&x).unwrap();
        assert_relative_eq!(back[0], u[0], epsilon = 1e-12);
        assert_relative_eq!(back[1], u[1], epsilon = 1e-12);
        assert_relative_eq!(SphereMullerBrown.energy(&x).unwrap(), e, max_relative = 1e-10);
        assert!(field.value(&x).unwrap().norm() < 1e-6);
    }
}

#[test]
fn pseudosphere_fixtures_are_equilibria() {
    let chart = PseudosphereChart;
    let field = GradientField::new(Arc::new(PseudosphereMullerBrown), Arc::new(Pseudosphere));
    let mut inside = 0;
    for (u, _) in FIXTURES {
        let p = PseudosphereMullerBrown::chart_from_planar(u);
        if !chart.contains(&p) {
            continue;
        }
        inside += 1;
        let x = chart.param(&p).unwrap();
        let back = PseudosphereMullerBrown::to_planar(&x).unwrap();
        assert_relative_eq!(back[0], u[0], epsilon = 1e-12);
        assert_relative_eq!(back[1], u[1], epsilon = 1e-12);
        assert!(field.value(&x).unwrap().norm() < 1e-6);
    }
    assert!(inside >= 2);
}

#[test]
fn xyz_gradient_is_tangent_and_vanishes_at_vertices() {
    let field = GradientField::new(Arc::new(XyzPotential), Arc::new(Sphere));
    let x = v(&[0.3, -0.5, 0.6]).normalize();
    assert!(field.value(&x).unwrap().dot(&x).abs() < 1e-14);
    for vertex in [
        v(&[0.0, 0.0, 1.0]),
        v(&[1.0, 1.0, 1.0]).normalize(),
        v(&[1.0, -1.0, 1.0]).normalize(),
    ] {
        assert!(field.value(&vertex).unwrap().norm() < 1e-14);
    }
}

fn check_chart(chart: &dyn Chart, manifold: &dyn Manifold, p: &Vector) {
    let x = chart.param(p).unwrap();
    let on = manifold.project(&x).unwrap();
    assert!((&on - &x).norm() < 1e-12, "param leaves the manifold at {p:?}");
    assert_relative_eq!(chart.coords(&x).unwrap(), p.clone(), epsilon = 1e-10);
    let jac = chart.param_jacobian(p).unwrap();
    let fd = central_jacobian(|q| chart.param(q), p, 1e-6).unwrap();
    assert!((&jac - &fd).amax() < 1e-7);
    let inv = chart.coords_jacobian(&x).unwrap() * &jac;
    assert!((inv - Matrix::identity(2, 2)).amax() < 1e-10);
    let closed = chart.metric(p).unwrap();
    let fd = finite_difference_metric(chart, p, 1e-5).unwrap();
    assert!((&closed.g - &fd.g).amax() < 1e-12);
    let d = closed.gamma.max_abs_diff(&fd.gamma);
    assert!(
        d < 1e-6 * closed.gamma.max_abs().max(1.0),
        "Christoffel mismatch {d:e} at {p:?} in chart {}",
        chart.id()
    );
    assert!((&closed.g * &closed.g_inv - Matrix::identity(2, 2)).amax() < 1e-10);
}

#[test]
fn closed_form_charts_are_consistent() {
    for p in [[0.3, -0.2], [1.1, 0.4], [-0.6, -1.3]] {
        check_chart(&StereographicChart::new(1.0), &Sphere, &v(&p));
        check_chart(&StereographicChart::new(-1.0), &Sphere, &v(&p));
    }
    for p in [[0.3, -0.2], [0.8, 1.2], [0.05, 0.0]] {
        check_chart(&PseudosphereChart, &Pseudosphere, &v(&p));
    }
    check_chart(&PlaneChart::default(), &Plane, &v(&[3.0, -1.0]));
}

proptest! {
    #[test]
    fn stereographic_transition_is_the_inversion(a in -3.0..3.0f64, b in -3.0..3.0f64) {
        let p = v(&[a, b]);
        prop_assume!(p.norm() > 0.05);
        let x = StereographicChart::new(1.0).param(&p).unwrap();
        let q = stereo_coords(&x, -1.0).unwrap();
        prop_assert!((q - chart_transition(&p).unwrap()).norm() < 1e-10 * (1.0 + 1.0 / p.norm_squared()));
    }

    #[test]
    fn sphere_exponential_map_moves_by_the_tangent_length(
        x in prop::collection::vec(-1.0..1.0f64, 3),
        w in prop::collection::vec(-1.0..1.0f64, 2),
    ) {
        let x = v(&x);
        prop_assume!(x.norm() > 0.1);
        let x = x.normalize();
        let basis = Sphere.tangent_basis(&x).unwrap();
        prop_assert!((basis.transpose() * &basis - Matrix::identity(2, 2)).amax() < 1e-12);
        prop_assert!((basis.transpose() * &x).amax() < 1e-12);
        let w = &basis * v(&w);
        let y = Sphere.exp_map(&x, &w).unwrap();
        prop_assert!((y.norm() - 1.0).abs() < 1e-12);
        prop_assert!((Sphere.distance(&x, &y) - w.norm()).abs() < 1e-10);
    }
}

#[test]
fn sphere_atlas_uses_the_chart_whose_origin_is_nearer() {
    let south = AnalyticAtlas::Sphere.chart_at(&v(&[0.0, 0.6, -0.8])).unwrap();
    let north = AnalyticAtlas::Sphere.chart_at(&v(&[0.0, 0.6, 0.8])).unwrap();
    assert_ne!(south.id(), north.id());
    let p = south.coords(&v(&[0.0, 0.6, -0.8])).unwrap();
    assert!(p.norm_squared() < 1.0);
    assert!(AnalyticAtlas::Plane { extent: 1.0 }.chart_at(&v(&[2.0, 0.0])).is_err());
    assert!(AnalyticAtlas::Pseudosphere.chart_at(&v(&[-0.5, 0.0, 1.3])).is_err());
}

#[test]
fn stereographic_examples() {
    let north = StereographicChart::new(1.0);
    assert_eq!(north.coords(&v(&[0.0, 0.0, -1.0])).unwrap(), v(&[0.0, 0.0]));
    assert_relative_eq!(
        north.coords(&v(&[1.0, 0.0, 0.0])).unwrap(),
        v(&[1.0, 0.0]),
        epsilon = 1e-15
    );
    assert_relative_eq!(
        north.param(&v(&[1.0, 0.0])).unwrap(),
        v(&[1.0, 0.0, 0.0]),
        epsilon = 1e-15
    );
    assert_relative_eq!(
        chart_transition(&v(&[2.0, 0.0])).unwrap(),
        v(&[0.5, 0.0]),
        epsilon = 1e-15
    );
    assert!(chart_transition(&v(&[0.0, 0.0])).is_err());
}

#[test]
fn stereographic_round_trips_on_random_points() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    for _ in 0..1000 {
        let p = v(&[rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)]);
        for pole in [1.0, -1.0] {
            let chart = StereographicChart::new(pole);
            let x = chart.param(&p).unwrap();
            assert!((x.norm() - 1.0).abs() < 1e-14);
            assert!((chart.coords(&x).unwrap() - &p).norm() < 1e-12 * (1.0 + p.norm_squared()));
        }
    }
}

#[test]
fn planar_gradient_matches_finite_differences_on_random_points() {
    use isocline::field::central_gradient;
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let energy = |u: &Vector| Ok(muller_brown_planar(u).0);
    for _ in 0..100 {
        let u = v(&[rng.random_range(-1.5..1.5), rng.random_range(-0.5..2.0)]);
        let fd = central_gradient(&energy, &u, 1e-6).unwrap();
        let grad = muller_brown_planar(&u).1;
        assert!((&grad - &fd).norm() <= 1e-6 * grad.norm().max(1.0), "at {u:?}");
    }
}

#[test]
fn sphere_energy_is_chart_independent() {
    let x = SphereMullerBrown::from_planar([-1.85, 0.875]);
    assert_relative_eq!(x, v(&[1.0, 0.0, 0.0]), epsilon = 1e-15);
    let x = SphereMullerBrown::from_planar([-0.3, 0.9]);
    let e = SphereMullerBrown.energy(&x).unwrap();
    for pole in [1.0, -1.0] {
        let chart = StereographicChart::new(pole);
        let y = chart.param(&chart.coords(&x).unwrap()).unwrap();
        assert_relative_eq!(SphereMullerBrown.energy(&y).unwrap(), e, max_relative = 1e-12);
    }
}

#[test]
fn pseudosphere_surface_examples() {
    let edge = PseudosphereChart.param(&v(&[1.0, 0.4])).unwrap();
    assert!(edge[2].abs() < 1e-15);
    for r in [0.05, 0.3, 0.7, 0.99] {
        let x = PseudosphereChart.param(&v(&[r, -0.8])).unwrap();
        let rho = x[0].hypot(x[1]);
        let defining = (1.0 / rho).acosh() - (1.0 - rho * rho).sqrt();
        assert!((x[2] - defining).abs() < 1e-12);
    }
}

/// Gaussian curvature from the metric and its Christoffel symbols by finite differences.
fn gaussian_curvature(chart: &dyn Chart, p: &Vector) -> f64 {
    let h = 1e-5;
    let gamma = |q: &Vector| chart.metric(q).unwrap().gamma;
    let shift = |j: usize, s: f64| {
        let mut q = p.clone();
        q[j] += s;
        q
    };
    let d = |k: usize, i: usize, j: usize, axis: usize| {
        (gamma(&shift(axis, h)).get(k, i, j) - gamma(&shift(axis, -h)).get(k, i, j)) / (2.0 * h)
    };
    let m = chart.metric(p).unwrap();
    let g = &m.gamma;
    // R^l_{212} = ∂₁Γˡ₂₂ − ∂₂Γˡ₁₂ + Γˡ₁ₖΓᵏ₂₂ − Γˡ₂ₖΓᵏ₁₂
    let r = |l: usize| {
        d(l, 1, 1, 0) - d(l, 0, 1, 1)
            + (0..2)
                .map(|k| g.get(l, 0, k) * g.get(k, 1, 1) - g.get(l, 1, k) * g.get(k, 0, 1))
                .sum::<f64>()
    };
    let r1212 = m.g[(0, 0)] * r(0) + m.g[(0, 1)] * r(1);
    r1212 / m.g.determinant()
}

#[test]
fn curvature_of_the_closed_form_metrics() {
    for p in [[0.3, 0.1], [0.6, -0.5], [0.9, 1.0]] {
        assert_relative_eq!(gaussian_curvature(&PseudosphereChart, &v(&p)), -1.0, epsilon = 1e-6);
        assert_relative_eq!(
            gaussian_curvature(&StereographicChart::new(1.0), &v(&p)),
            1.0,
            epsilon = 1e-6
        );
    }
}

#[test]
fn xyz_line_field_vanishes_at_the_origin_and_is_odd() {
    use isocline::manifolds::xyz_line_field;
    assert_eq!(xyz_line_field(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
    for p in [[0.3, 0.7], [-1.2, 0.4], [0.05, -2.0]] {
        let p = v(&p);
        assert_relative_eq!(xyz_line_field(&-&p), -xyz_line_field(&p), max_relative = 1e-12);
    }
}

#[test]
fn constant_energy_has_no_gradient_field() {
    use isocline::field::riemannian_gradient_field;
    let chart = StereographicChart::new(1.0);
    let p = v(&[0.4, -0.3]);
    let g_inv = chart.metric(&p).unwrap().g_inv;
    let x = riemannian_gradient_field(|_| Ok(2.5), &p, &g_inv, 1e-5).unwrap();
    assert_eq!(x, v(&[0.0, 0.0]));
}

#[test]
fn xyz_equilibria_polish_to_zero_field() {
    use isocline::field::{ChartField, FieldMode};
    let chart = StereographicChart::new(1.0);
    let field = GradientField::new(Arc::new(XyzPotential), Arc::new(Sphere));
    let cf = ChartField::new(&chart, &field, FieldMode::Gradient);
    let s = 1.0 / 3f64.sqrt();
    for vertex in [[s, s, -s], [s, -s, s], [1.0, 0.0, 0.0], [0.0, 0.0, -1.0]] {
        let exact = chart.coords(&v(&vertex)).unwrap();
        let mut p = &exact + v(&[0.01, -0.02]);
        for _ in 0..30 {
            let step = cf.jacobian(&p).unwrap().lu().solve(&cf.value(&p).unwrap()).unwrap();
            p -= step;
        }
        let metric = chart.metric(&p).unwrap();
        assert!(metric.norm(&cf.value(&p).unwrap()) < 1e-10);
        assert!((&p - &exact).norm() < 1e-8);
    }
}
