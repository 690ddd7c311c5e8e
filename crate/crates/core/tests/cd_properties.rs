use depthcd::cd::{bootstrap_draws, bootstrap_t_draws, CdKind, CustomEstimator, Provenance, TOrientation};
use depthcd::rng::{derive_seed, stream};
use depthcd::stats::normal_cdf;
use depthcd::{
    bootstrap_cd, bootstrap_t_cd, confidence_region, pivot_cd, BootstrapTOptions, DepthCD, DepthPolicy, Error,
    Estimator, GridSpec, PivotSpec, PointCloud, TieRule,
};
use rand::Rng;
use rand_distr::StandardNormal;

fn gaussian_sample(seed: u64, n: usize, mean: [f64; 2]) -> PointCloud {
    let mut rng = stream(seed, 0);
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [mean[0] + a, mean[1] + 0.5 * a + b]
        })
        .collect();
    PointCloud::from_rows(&rows).unwrap()
}

fn sd(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let m = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn column(cloud: &PointCloud, j: usize) -> Vec<f64> {
    cloud.iter().map(|p| p[j]).collect()
}

#[test]
fn bootstrap_mean_draws_center_on_the_sample_mean() {
    let sample = gaussian_sample(1, 30, [2.0, -1.0]);
    let cd = bootstrap_cd(&sample, &Estimator::Mean, 2000, &DepthPolicy::default(), 9).unwrap();
    let xbar = sample.mean();
    let center = cd.draws().mean();
    for j in 0..2 {
        let se = sd(&column(&sample, j)) / 30f64.sqrt();
        assert!((center[j] - xbar[j]).abs() < 3.0 * se);
        // Spread of the bootstrap mean is close to the usual standard error.
        let spread = sd(&column(cd.draws(), j));
        assert!((spread / se - 1.0).abs() < 0.15, "coordinate {j}: {spread} vs {se}");
    }
    assert_eq!(cd.len(), 2000);
    assert_eq!(cd.provenance().kind, CdKind::Bootstrap);
}

#[test]
fn resample_streams_are_indexed() {
    let sample = gaussian_sample(2, 25, [0.0, 0.0]);
    let long = bootstrap_draws(&sample, &Estimator::Mean, 400, 5).unwrap();
    let short = bootstrap_draws(&sample, &Estimator::Mean, 300, 5).unwrap();
    assert_eq!(&long.as_flat()[..600], short.as_flat());
}

#[test]
fn constant_sample_is_degenerate() {
    let sample = PointCloud::from_rows(&vec![[1.5, -2.0]; 20]).unwrap();
    let err = bootstrap_cd(&sample, &Estimator::Mean, 500, &DepthPolicy::default(), 1).unwrap_err();
    assert!(matches!(err, Error::DegenerateDraws { coordinate: 0 }));
}

#[test]
fn small_inputs_are_rejected() {
    let sample = gaussian_sample(3, 9, [0.0, 0.0]);
    assert!(matches!(
        bootstrap_cd(&sample, &Estimator::Mean, 500, &DepthPolicy::default(), 1),
        Err(Error::TooFewPoints { needed: 10, found: 9 })
    ));
    let sample = gaussian_sample(3, 30, [0.0, 0.0]);
    assert!(matches!(
        bootstrap_cd(&sample, &Estimator::Mean, 199, &DepthPolicy::default(), 1),
        Err(Error::InvalidArgument(_))
    ));
    assert!(matches!(
        bootstrap_t_cd(
            &sample,
            &Estimator::CoordinatewiseMedian,
            500,
            &DepthPolicy::default(),
            1,
            BootstrapTOptions::default()
        ),
        Err(Error::StudentizationUnavailable(_))
    ));
}

/// The mean with a covariance that ignores the data, so every replicate is
/// studentized by the same matrix.
fn fixed_covariance_mean() -> Estimator {
    Estimator::Custom(
        CustomEstimator::new("fixed-mean", 2, |s: &PointCloud| Ok(s.mean()))
            .with_covariance(|_: &PointCloud| Ok(vec![0.04, 0.01, 0.01, 0.09])),
    )
}

#[test]
fn fixed_covariance_bootstrap_t_is_the_plain_bootstrap() {
    let sample = gaussian_sample(4, 40, [1.0, 1.0]);
    let est = fixed_covariance_mean();
    let plain = bootstrap_draws(&sample, &est, 500, 77).unwrap();
    let options = BootstrapTOptions {
        orientation: TOrientation::Direct,
        ..Default::default()
    };
    let direct = bootstrap_t_draws(&sample, &est, 500, 77, options).unwrap();
    assert_eq!(plain.as_flat(), direct.as_flat());

    let reflected = bootstrap_t_draws(&sample, &est, 500, 77, BootstrapTOptions::default()).unwrap();
    let theta = sample.mean();
    for (r, p) in reflected.iter().zip(plain.iter()) {
        for j in 0..2 {
            assert!((r[j] - (2.0 * theta[j] - p[j])).abs() < 1e-12);
        }
    }
}

#[test]
fn results_do_not_depend_on_worker_count() {
    let sample = gaussian_sample(5, 30, [0.0, 0.0]);
    let build = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let a = bootstrap_cd(&sample, &Estimator::Mean, 600, &DepthPolicy::default(), 11).unwrap();
            let b = bootstrap_t_cd(
                &sample,
                &Estimator::Mean,
                600,
                &DepthPolicy::simplicial(),
                11,
                Default::default(),
            )
            .unwrap();
            (a, b)
        })
    };
    let (a1, b1) = build(1);
    let (a4, b4) = build(4);
    assert_eq!(a1.draws().as_flat(), a4.draws().as_flat());
    assert_eq!(a1.depths(), a4.depths());
    assert_eq!(b1.draws().as_flat(), b4.draws().as_flat());
    assert_eq!(b1.depths(), b4.depths());
}

#[test]
fn csv_round_trip_preserves_the_cd() {
    let sample = gaussian_sample(6, 30, [0.0, 0.0]);
    let cd = bootstrap_cd(&sample, &Estimator::Mean, 300, &DepthPolicy::default(), 3).unwrap();
    let (mut csv, mut side) = (Vec::new(), Vec::new());
    cd.write_csv(&mut csv).unwrap();
    cd.write_sidecar(&mut side).unwrap();
    let back = DepthCD::read(csv.as_slice(), side.as_slice(), true).unwrap();
    assert_eq!(back.draws().as_flat(), cd.draws().as_flat());
    assert_eq!(back.depths(), cd.depths());
    assert_eq!(back.provenance(), cd.provenance());
}

#[test]
fn deepest_draw_and_far_point() {
    let sample = gaussian_sample(7, 30, [0.0, 0.0]);
    let cd = bootstrap_cd(&sample, &Estimator::Mean, 1000, &DepthPolicy::mahalanobis(), 2).unwrap();
    let top = cd.mce();
    assert!((cd.pvalue(&top).unwrap() - 999.0 / 1000.0).abs() < 1e-15);
    assert_eq!(cd.pvalue(&[50.0, -50.0]).unwrap(), 0.0);
    let hs = bootstrap_cd(&sample, &Estimator::Mean, 1000, &DepthPolicy::default(), 2).unwrap();
    assert_eq!(hs.pvalue(&[50.0, -50.0]).unwrap(), 0.0);
}

#[test]
fn point_mass_pivot() {
    let spec = PivotSpec {
        center: vec![0.5, -0.5],
        scale: vec![1.0, 0.0, 0.0, 1.0],
        pivot_draws: PointCloud::from_rows(&vec![[0.0, 0.0]; 50]).unwrap(),
    };
    let strict = pivot_cd(&spec, &DepthPolicy::default()).unwrap();
    assert_eq!(strict.mce(), vec![0.5, -0.5]);
    assert_eq!(strict.pvalue(&[0.5, -0.5]).unwrap(), 0.0);
    let weak = pivot_cd(&spec, &DepthPolicy::default().with_tie_rule(TieRule::Weak)).unwrap();
    assert_eq!(weak.pvalue(&[0.5, -0.5]).unwrap(), 1.0);
}

#[test]
fn univariate_normal_cd_values() {
    // H_n(theta) = Phi(sqrt(n) (theta - xbar)) with n = 20 and xbar = 0.11.
    let h0 = normal_cdf(20f64.sqrt() * (0.0 - 0.11));
    assert!((h0 - 0.31).abs() < 0.005, "{h0}");
    let cv = 2.0 * h0.min(1.0 - h0);
    assert!((cv - 0.62).abs() < 0.01, "{cv}");

    // The same curve from a depth-CD built on an exact pivot.
    let spec = PivotSpec::gaussian_mean(&[0.11], &[1.0], 20, 20000, 8).unwrap();
    let cd = pivot_cd(&spec, &DepthPolicy::default()).unwrap();
    assert!((cd.pvalue(&[0.0]).unwrap() - cv).abs() < 0.02);
}

#[test]
fn regions_are_nested_and_match_pvalues() {
    let spec = PivotSpec::gaussian_mean(&[1.0, 2.0], &[1.0, 0.3, 0.3, 2.0], 20, 800, 4).unwrap();
    let cd = pivot_cd(&spec, &DepthPolicy::default()).unwrap();
    let grid = GridSpec {
        bounds: None,
        resolution: 41,
    };
    let levels = [0.5, 0.8, 0.9, 0.95];
    let grids: Vec<_> = levels
        .iter()
        .map(|&l| confidence_region(&cd, l, Some(&grid)).unwrap().grid().unwrap().clone())
        .collect();
    for w in grids.windows(2) {
        for (small, large) in w[0].inside.iter().zip(&w[1].inside) {
            assert!(!small | large);
        }
    }
    let region = confidence_region(&cd, 0.9, None).unwrap();
    for p in cd.draws().iter().take(200) {
        assert_eq!(region.contains(p).unwrap(), cd.pvalue(p).unwrap() >= 0.1);
    }
    let tight = confidence_region(&cd, 1.0 - 799.0 / 800.0, None).unwrap();
    assert!(tight.contains(&cd.mce()).unwrap());
    assert!(matches!(confidence_region(&cd, 1.0, None), Err(Error::Domain(_))));
}

#[test]
fn pivot_region_coverage_is_the_pvalue_event() {
    let sigma = [1.0, 0.5, 0.5, 1.0];
    let truth = [0.0, 0.0];
    let runs = 1000;
    let mut covered = 0;
    for r in 0..runs {
        let seed = derive_seed(&[100, r]);
        let sample = {
            let mut rng = stream(seed, 1);
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            // Mean of 20 draws from N(0, sigma) has covariance sigma / 20.
            let l = (0.75f64).sqrt();
            [truth[0] + a / 20f64.sqrt(), truth[1] + (0.5 * a + l * b) / 20f64.sqrt()]
        };
        let spec = PivotSpec::gaussian_mean(&sample, &sigma, 20, 500, seed).unwrap();
        let cd = pivot_cd(&spec, &DepthPolicy::mahalanobis()).unwrap();
        let inside = confidence_region(&cd, 0.9, None).unwrap().contains(&truth).unwrap();
        assert_eq!(inside, cd.pvalue(&truth).unwrap() >= 0.1);
        covered += inside as usize;
    }
    let rate = covered as f64 / runs as f64;
    // Three binomial standard errors.
    assert!(
        (rate - 0.9).abs() < 3.0 * (0.09f64 / runs as f64).sqrt(),
        "coverage {rate}"
    );
}

#[test]
fn mce_of_a_symmetric_cloud_is_near_its_center() {
    let mut rng = stream(12, 0);
    let rows: Vec<[f64; 2]> = (0..5000)
        .map(|_| {
            let a: f64 = rng.sample(StandardNormal);
            let b: f64 = rng.sample(StandardNormal);
            [3.0 + 2.0 * a, -1.0 + 2.0 * b]
        })
        .collect();
    let cd = DepthCD::from_draws(
        PointCloud::from_rows(&rows).unwrap(),
        &DepthPolicy::default(),
        Provenance {
            estimator: "external".into(),
            kind: CdKind::External,
            replicates: 5000,
            seed: None,
        },
    )
    .unwrap();
    let m = cd.mce();
    assert!(
        (m[0] - 3.0).abs() < 0.15 * 2.0 && (m[1] + 1.0).abs() < 0.15 * 2.0,
        "{m:?}"
    );
}

#[test]
fn mce_error_shrinks_at_root_n() {
    let mean_error = |n: usize| {
        let total: f64 = (0..500u64)
            .map(|r| {
                let sample = gaussian_sample(derive_seed(&[n as u64, r]), n, [0.0, 0.0]);
                let cd = bootstrap_cd(&sample, &Estimator::Mean, 200, &DepthPolicy::default(), r).unwrap();
                let m = cd.mce();
                m[0].hypot(m[1])
            })
            .sum();
        total / 500.0
    };
    // Quadrupling n halves the error in expectation, so only the ratio band
    // is checked, not a strict halving.
    let ratio = mean_error(400) / mean_error(100);
    assert!((0.4..0.6).contains(&ratio), "ratio {ratio}");
}
