use depthcd::rng::stream;
use depthcd::simlab::{self, Method, Operation, ScenarioKind, ScenarioSpec, SimOutput};
use depthcd::stats::median;
use depthcd::{bootstrap_cd, combined_cv, DepthPolicy, Error, Estimator, FusionScheme, ParamMap, Study};

fn small(kind: ScenarioKind) -> ScenarioSpec {
    let mut spec = ScenarioSpec::new(kind);
    spec.reps = 100;
    spec.b = 200;
    spec.mc_draws = 20_000;
    spec.master_seed = 5;
    spec
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

fn calibration_bytes(spec: &ScenarioSpec) -> (Vec<u8>, Vec<u8>) {
    let SimOutput::Calibration(t) = simlab::run(Operation::default_for(spec.kind), spec).unwrap() else {
        panic!("calibration expected");
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    t.write_csv(&mut a).unwrap();
    t.write_pvalues_csv(&mut b).unwrap();
    (a, b)
}

#[test]
fn tables_do_not_depend_on_worker_count() {
    for kind in [ScenarioKind::Normal, ScenarioKind::CorrNormal] {
        let spec = small(kind);
        let one = in_pool(1, || calibration_bytes(&spec));
        let three = in_pool(3, || calibration_bytes(&spec));
        assert_eq!(one, three, "{kind}");
    }
    let spec = small(ScenarioKind::HeteroSum);
    let est = |threads| {
        in_pool(threads, || {
            let SimOutput::Estimates(e) = simlab::run(Operation::Hetero, &spec).unwrap() else {
                panic!("estimates expected");
            };
            let mut out = Vec::new();
            e.write_csv(&mut out).unwrap();
            out
        })
    };
    assert_eq!(est(1), est(2));
}

#[test]
fn calibration_rows_are_empirical_cdfs() {
    let spec = small(ScenarioKind::ChiSq);
    let SimOutput::Calibration(t) = simlab::run(Operation::Calibration, &spec).unwrap() else {
        panic!("calibration expected");
    };
    assert_eq!(t.methods, vec![Method::Gd, Method::Jk, Method::Clt, Method::Cd]);
    assert_eq!(t.reps, 100);
    for row in &t.ecdf {
        assert_eq!(row.len(), t.levels.len());
        assert!(row.windows(2).all(|w| w[0] <= w[1]));
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
    for m in &t.methods {
        let p = t.pvalues(*m).unwrap();
        assert_eq!(p.len(), t.reps);
        let manual = p.iter().filter(|&&v| v <= 0.05).count() as f64 / t.reps as f64;
        assert_eq!(t.at(*m, 0.05).unwrap(), manual);
    }
}

#[test]
fn estimation_counts_match_reps() {
    let spec = small(ScenarioKind::Normal);
    let SimOutput::Estimates(e) = simlab::run(Operation::Estimation, &spec).unwrap() else {
        panic!("estimates expected");
    };
    assert_eq!(e.truth, vec![0.0, 0.0]);
    assert_eq!(e.methods, vec![Method::Gd, Method::Cd]);
    for per_method in &e.estimates {
        assert_eq!(per_method.len(), e.reps);
    }
    for s in &e.summaries {
        assert!(s.sd.iter().all(|v| *v > 0.0 && *v < 1.0));
    }
}

#[test]
fn scenario_moments() {
    let spec = ScenarioSpec::new(ScenarioKind::ChiSq);
    let draws = 2000;
    for index in 0..2 {
        let mut rng = stream(40 + index as u64, 0);
        let (mut s1, mut s2, mut count) = (0.0, 0.0, 0usize);
        for _ in 0..draws {
            for p in spec.sample(index, &mut rng).iter() {
                s1 += p[0];
                s2 += p[1];
                count += 1;
            }
        }
        let c = count as f64;
        // Z^2 with Z ~ N(0, s^2) has sd sqrt(2) s^2.
        assert!((s1 / c - 1.0).abs() < 4.0 * 2f64.sqrt() / c.sqrt());
        assert!((s2 / c - 4.0).abs() < 4.0 * 4.0 * 2f64.sqrt() / c.sqrt());
    }

    let spec = ScenarioSpec::new(ScenarioKind::Cauchy);
    for index in 0..2 {
        let mut rng = stream(50 + index as u64, 0);
        let (mut x, mut y) = (Vec::new(), Vec::new());
        for _ in 0..300 {
            for p in spec.sample(index, &mut rng).iter() {
                x.push(p[0]);
                y.push(p[1]);
            }
        }
        assert!(median(&x).abs() < 0.15 && median(&y).abs() < 0.15);
    }

    let spec = ScenarioSpec::new(ScenarioKind::HeteroSum);
    let mut rng = stream(60, 0);
    assert_eq!(spec.sample(0, &mut rng).dim(), 2);
    assert_eq!(spec.sample(1, &mut rng).dim(), 2);
    assert_eq!(spec.sample(2, &mut rng).dim(), 1);
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = ScenarioSpec::new(ScenarioKind::Normal);
    spec.reps = 99;
    assert!(spec.validate().is_err());
    let mut spec = ScenarioSpec::new(ScenarioKind::Normal);
    spec.methods = vec![Method::Ho];
    assert!(spec.validate().is_err());
    let mut spec = ScenarioSpec::new(ScenarioKind::CorrNormal);
    spec.methods = vec![Method::Gd];
    assert!(spec.validate().is_err());
    let mut spec = ScenarioSpec::new(ScenarioKind::Normal);
    spec.squared = true;
    assert!(spec.validate().is_err());
    assert!(ScenarioSpec::new(ScenarioKind::HeteroSum).validate().is_ok());
}

#[test]
fn sum_studies_need_their_map() {
    let spec = ScenarioSpec::new(ScenarioKind::HeteroSum);
    let mut rng = stream(70, 0);
    let samples: Vec<_> = (0..4).map(|i| spec.sample(i, &mut rng)).collect();
    let cds: Vec<_> = samples
        .iter()
        .enumerate()
        .map(|(i, s)| bootstrap_cd(s, &Estimator::Mean, 300, &DepthPolicy::default(), i as u64).unwrap())
        .collect();
    let identity: Vec<Study> = cds.iter().map(|cd| Study::identity(cd.clone(), 30)).collect();
    assert!(matches!(
        combined_cv(identity, FusionScheme::fisher()),
        Err(Error::DimensionMismatch { expected: 2, found: 1 })
    ));
    let sum = ParamMap::linear(1, 2, vec![1.0, 1.0]).unwrap();
    let mapped: Vec<Study> = cds
        .iter()
        .enumerate()
        .map(|(i, cd)| {
            if i < 2 {
                Study::identity(cd.clone(), 30)
            } else {
                Study::new(cd.clone(), sum.clone(), 30).unwrap()
            }
        })
        .collect();
    assert!(combined_cv(mapped, FusionScheme::fisher()).is_ok());
}
