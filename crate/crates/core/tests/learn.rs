use std::f64::consts::PI;
use std::sync::Arc;

use approx::assert_relative_eq;
use isocline::chart::{finite_difference_metric, Chart, ChartProvider};
use isocline::field::{pushforward_field, AmbientField, GradientField, PushforwardMode};
use isocline::geometry::{Matrix, Vector};
use isocline::learn::{
    build_learned_chart, diffusion_maps, gpr_fit, median_bandwidth, CovarianceNorm, GprConfig, LearnedAtlas,
    LearnedAtlasConfig, LearnedChart, LearnedChartConfig,
};
use isocline::manifolds::{Manifold, Plane, Sphere, SphereMullerBrown};
use isocline::sampling::{exp_map_sample, metropolis_sample, MetropolisConfig, PointCloud};
use isocline::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn v(xs: &[f64]) -> Vector {
    Vector::from_row_slice(xs)
}

fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn median_bandwidth_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for k in [2usize, 5, 12] {
        let pts = Matrix::from_fn(k, 3, |_, _| rng.random::<f64>());
        let mut d = Vec::new();
        for i in 0..k {
            for j in 0..k {
                if i < j {
                    d.push((pts.row(i) - pts.row(j)).norm());
                }
            }
        }
        d.sort_by(f64::total_cmp);
        let n = d.len();
        let expect = if n % 2 == 1 {
            d[n / 2]
        } else {
            (d[n / 2 - 1] + d[n / 2]) / 2.0
        };
        assert_eq!(median_bandwidth(&pts).unwrap(), expect);
    }
    assert!(matches!(
        median_bandwidth(&Matrix::zeros(4, 2)),
        Err(Error::DegenerateCloud)
    ));
}

#[test]
fn diffusion_maps_recover_the_circle() {
    let k = 200;
    let angles: Vec<f64> = (0..k).map(|i| 2.0 * PI * i as f64 / k as f64).collect();
    let pts = Matrix::from_fn(k, 2, |i, c| if c == 0 { angles[i].cos() } else { angles[i].sin() });
    let emb = diffusion_maps(&pts, 0.3, 2).unwrap();
    assert_relative_eq!(emb.spectrum[0], 1.0, epsilon = 1e-12);
    // the two leading coordinates span {cos θ, sin θ}: fit by least squares
    let basis = Matrix::from_fn(k, 3, |i, c| match c {
        0 => 1.0,
        1 => angles[i].cos(),
        _ => angles[i].sin(),
    });
    for c in 0..2 {
        let y = emb.coordinates.column(c).into_owned();
        let coef = basis.clone().svd(true, true).solve(&y, 1e-12).unwrap();
        let fit = &basis * coef;
        let r = correlation(fit.as_slice(), y.as_slice());
        assert!(r > 0.999, "coordinate {c}: correlation {r}");
    }
}

#[test]
fn diffusion_coordinate_is_monotone_along_an_arc() {
    let k = 120;
    let angles: Vec<f64> = (0..k).map(|i| 2.0 * i as f64 / (k - 1) as f64).collect();
    let pts = Matrix::from_fn(k, 2, |i, c| if c == 0 { angles[i].cos() } else { angles[i].sin() });
    let eps = median_bandwidth(&pts).unwrap();
    let emb = diffusion_maps(&pts, eps, 1).unwrap();
    let first = emb.coordinates.column(0);
    let sign = (first[k - 1] - first[0]).signum();
    assert!((1..k).all(|i| sign * (first[i] - first[i - 1]) > 0.0));
}

#[test]
fn diffusion_maps_separate_a_long_rectangle() {
    // Neumann Laplacian on [0, 3] × [0, 1]: the slowest mode is cos(π x / 3)
    let (nx, ny) = (30, 10);
    let pts = Matrix::from_fn(nx * ny, 2, |i, c| {
        if c == 0 {
            3.0 * ((i % nx) as f64 + 0.5) / nx as f64
        } else {
            ((i / nx) as f64 + 0.5) / ny as f64
        }
    });
    let emb = diffusion_maps(&pts, 0.2, 2).unwrap();
    let mode: Vec<f64> = (0..nx * ny).map(|i| (PI * pts[(i, 0)] / 3.0).cos()).collect();
    let first: Vec<f64> = emb.coordinates.column(0).iter().copied().collect();
    assert!(correlation(&first, &mode).abs() > 0.99);
    assert!(emb.eigenvalues[0] > emb.eigenvalues[1]);
}

#[test]
fn disconnected_cloud_is_reported() {
    let pts = Matrix::from_row_slice(4, 2, &[0.0, 0.0, 0.01, 0.0, 0.0, 0.01, 100.0, 100.0]);
    assert!(matches!(
        diffusion_maps(&pts, 0.05, 1),
        Err(Error::Disconnected { index: 3 })
    ));
}

fn sine_data(k: usize) -> (Matrix, Matrix) {
    let x = Matrix::from_fn(k, 1, |i, _| i as f64 / (k - 1) as f64);
    let y = Matrix::from_fn(k, 1, |i, _| (2.0 * PI * x[(i, 0)]).sin());
    (x, y)
}

#[test]
fn gpr_leave_one_out_error_is_small() {
    let k = 40;
    let (x, y) = sine_data(k);
    let mut sq = 0.0;
    for hold in 1..k - 1 {
        let keep: Vec<usize> = (0..k).filter(|&i| i != hold).collect();
        let xs = x.select_rows(&keep);
        let ys = y.select_rows(&keep);
        let model = gpr_fit(&xs, &ys, 0.1, &GprConfig::default()).unwrap();
        sq += (model.predict(&v(&[x[(hold, 0)]]))[0] - y[(hold, 0)]).powi(2);
    }
    let rmse = (sq / (k - 2) as f64).sqrt();
    assert!(rmse < 1e-3, "LOO RMSE {rmse}");
}

#[test]
fn gpr_prediction_is_the_kernel_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let inputs = Matrix::from_fn(15, 2, |_, _| rng.random::<f64>());
    let targets = Matrix::from_fn(15, 3, |_, _| rng.random::<f64>());
    let cfg = GprConfig {
        prior_variance: 2.0,
        center_targets: true,
        ..GprConfig::default()
    };
    let model = gpr_fit(&inputs, &targets, 0.4, &cfg).unwrap();
    let x = v(&[0.3, 0.7]);
    for c in 0..3 {
        let (mut naive, mut magnitude) = (model.mean()[c], model.mean()[c].abs());
        for j in 0..15 {
            let d2 = (inputs.row(j).transpose() - &x).norm_squared();
            let term = model.alpha()[(j, c)] * 2.0 * (-d2 / (2.0 * 0.16)).exp();
            naive += term;
            magnitude += term.abs();
        }
        assert!((model.predict(&x)[c] - naive).abs() < 1e-14 * magnitude);
    }
    // interpolation at training inputs
    for j in 0..15 {
        let p = model.predict(&inputs.row(j).transpose());
        assert!((p - targets.row(j).transpose()).amax() < 1e-4);
    }
}

#[test]
fn gpr_covariance_grows_away_from_the_data() {
    let (x, y) = sine_data(20);
    let model = gpr_fit(&x, &y, 0.1, &GprConfig::default()).unwrap();
    let mut last = model.covariance_norm(&v(&[1.0]), CovarianceNorm::Frobenius);
    for step in 1..30 {
        let now = model.covariance_norm(&v(&[1.0 + 0.02 * step as f64]), CovarianceNorm::Frobenius);
        assert!(now >= last, "covariance shrank at step {step}");
        last = now;
    }
    assert!(last > 0.9);
    let op = model.covariance_norm(&v(&[0.5]), CovarianceNorm::Operator);
    assert!(op <= model.covariance_norm(&v(&[0.5]), CovarianceNorm::Frobenius) + 1e-15);
}

#[test]
fn gpr_reports_conditioning_failure() {
    let x = Matrix::from_row_slice(2, 1, &[0.0, 0.0]);
    let y = Matrix::from_row_slice(2, 1, &[0.0, 1.0]);
    let cfg = GprConfig {
        noise: 0.0,
        max_noise: 0.0,
        ..GprConfig::default()
    };
    assert!(matches!(gpr_fit(&x, &y, 1.0, &cfg), Err(Error::Conditioning { .. })));
}

fn cap_chart(center: &Vector, r: f64, seed: u64) -> LearnedChart {
    let cloud = metropolis_sample(&Sphere, center, r, 500, seed, &MetropolisConfig::default()).unwrap();
    build_learned_chart(&cloud, 3, &LearnedChartConfig::default()).unwrap()
}

#[test]
fn pushforward_modes_agree() {
    let center = SphereMullerBrown::from_planar([-0.5, 1.2]);
    let chart = cap_chart(&center, 0.3, 1);
    let field = GradientField::new(Arc::new(SphereMullerBrown), Arc::new(Sphere));
    let x = Sphere
        .exp_map(&center, &(Sphere.tangent_basis(&center).unwrap().column(0) * 0.1))
        .unwrap();
    let xv = field.value(&x).unwrap();
    let jac = pushforward_field(&chart, &x, &xv, PushforwardMode::Jacobian).unwrap();
    let fd = pushforward_field(&chart, &x, &xv, PushforwardMode::FiniteDifference { dt: 1e-7 }).unwrap();
    assert!((&jac - &fd).norm() < 1e-4 * jac.norm(), "{jac} vs {fd}");
}

#[test]
fn flat_disk_metric_is_isotropic_at_the_center() {
    let cloud = exp_map_sample(&Plane, &v(&[0.0, 0.0]), 1.0, 600, 12).unwrap();
    let chart = build_learned_chart(&cloud, 0, &LearnedChartConfig::default()).unwrap();
    let g = chart.metric_tensor(&chart.coords(&v(&[0.0, 0.0])).unwrap()).unwrap();
    let eig = g.symmetric_eigenvalues();
    let ratio = eig.min() / eig.max();
    assert!(ratio > 0.9, "metric eigenvalues {eig}");
}

#[test]
fn tilted_flat_disk_in_space_is_isotropic() {
    let flat = exp_map_sample(&Plane, &v(&[0.0, 0.0]), 1.0, 600, 13).unwrap();
    let e1 = v(&[1.0, 2.0, 2.0]) / 3.0;
    let e2 = v(&[2.0, 1.0, -2.0]) / 3.0;
    let offset = v(&[0.5, -1.0, 2.0]);
    let embed = |u: &Vector| &offset + &e1 * u[0] + &e2 * u[1];
    let cloud = PointCloud {
        points: flat.points.iter().map(embed).collect(),
        field_values: None,
        center: offset.clone(),
        radius: 1.0,
    };
    let chart = build_learned_chart(&cloud, 0, &LearnedChartConfig::default()).unwrap();
    let g = chart.metric_tensor(&chart.coords(&offset).unwrap()).unwrap();
    let eig = g.symmetric_eigenvalues();
    assert!(eig.min() / eig.max() > 0.9, "metric eigenvalues {eig}");
    let x = chart.param(&chart.coords(&offset).unwrap()).unwrap();
    assert!((x - &offset).norm() < 1e-3);
}

#[test]
fn validity_separates_the_cap_from_far_points() {
    let center = v(&[0.0, 0.6, 0.8]);
    let r = 0.3;
    let chart = cap_chart(&center, r, 2);
    assert!(chart.is_valid_at(&center));
    let basis = Sphere.tangent_basis(&center).unwrap();
    for k in 0..2 {
        let far = Sphere.exp_map(&center, &(basis.column(k) * (3.0 * r))).unwrap();
        assert!(!chart.is_valid_at(&far));
        assert!(!chart.contains(&chart.coords(&far).unwrap()) || chart.covariance_norm(&far) > chart.eta);
    }
    // the covariance norm grows along a geodesic ray
    let mut last = 0.0;
    for i in 0..=12 {
        let x = Sphere
            .exp_map(&center, &(basis.column(1) * (0.3 * r * i as f64)))
            .unwrap();
        let c = chart.covariance_norm(&x);
        assert!(c + 1e-9 >= last, "covariance shrank at step {i}");
        last = c;
    }
}

#[test]
fn snapshot_round_trip_preserves_the_chart() {
    let center = v(&[1.0, 0.0, 0.0]);
    let chart = cap_chart(&center, 0.3, 5);
    let text = chart.to_json().unwrap();
    let back = LearnedChart::from_json(&text).unwrap();
    let x = Sphere.exp_map(&center, &v(&[0.0, 0.1, -0.05])).unwrap();
    assert_eq!(back.coords(&x).unwrap(), chart.coords(&x).unwrap());
    let p = chart.coords(&x).unwrap();
    assert_eq!(back.param(&p).unwrap(), chart.param(&p).unwrap());
    assert_eq!(back.covariance_norm(&x), chart.covariance_norm(&x));
    assert_eq!(back.id, 3);
    let bumped = text.replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(LearnedChart::from_json(&bumped), Err(Error::Format(_))));
}

#[test]
fn closed_form_christoffels_match_finite_differences() {
    let center = v(&[0.0, 0.0, -1.0]);
    let chart = cap_chart(&center, 0.4, 11);
    for w in [[0.0, 0.0], [0.15, -0.1], [-0.2, 0.05]] {
        let x = Sphere
            .exp_map(&center, &(Sphere.tangent_basis(&center).unwrap() * v(&w)))
            .unwrap();
        let p = chart.coords(&x).unwrap();
        let closed = chart.metric(&p).unwrap();
        let fd = finite_difference_metric(&chart, &p, 1e-4).unwrap();
        let scale = closed.gamma.max_abs().max(1e-3);
        assert!(closed.gamma.max_abs_diff(&fd.gamma) < 1e-3 * scale.max(1.0), "at {w:?}");
    }
}

#[test]
fn atlas_builds_a_chart_per_request_with_shifted_seeds() {
    let cfg = LearnedAtlasConfig {
        samples: 60,
        seed: 10,
        ..LearnedAtlasConfig::default()
    };
    let mut atlas = LearnedAtlas::new(Arc::new(Sphere), cfg.clone()).unwrap();
    let x = v(&[0.0, 0.0, 1.0]);
    let a = atlas.chart_for(&x).unwrap();
    let b = atlas.chart_for(&(&x * 1.5)).unwrap();
    assert_eq!((a.id(), b.id()), (0, 1));
    assert_eq!(atlas.charts().len(), 2);
    // the second chart was sampled with seed + 1, so it differs from the first
    assert_ne!(atlas.charts()[0].phi.inputs(), atlas.charts()[1].phi.inputs());
    let again = LearnedAtlas::new(Arc::new(Sphere), cfg.clone())
        .unwrap()
        .chart_for(&x)
        .unwrap();
    assert_eq!(again.coords(&x).unwrap(), a.coords(&x).unwrap());
    let too_few = LearnedAtlasConfig { samples: 4, ..cfg };
    assert!(LearnedAtlas::new(Arc::new(Sphere), too_few).is_err());
}
