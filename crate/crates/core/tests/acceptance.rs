//! Acceptance checks, one line per criterion.
//!
//! `DEPTHCD_ACCEPTANCE_TIER=smoke` runs the Monte Carlo criteria with fewer
//! replications and tolerances widened to the smoke band.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{halfspace_oracle, random_instance, simplicial_oracle, to_cloud};
use depthcd::depth::{halfspace_depth_count, simplicial_depth_count};
use depthcd::fusion::MIN_MC_DRAWS;
use depthcd::rng::{derive_seed, stream};
use depthcd::simlab::{self, Method, Operation, ScenarioKind, ScenarioSpec, SimOutput};
use depthcd::stats::ks_uniform;
use depthcd::{
    bootstrap_t_cd, combine_values, combined_cv, combined_mce, combined_region, confidence_region, pivot_cd,
    DepthPolicy, Estimator, FusionScheme, GridSpec, PivotSpec, PointCloud, RankedCloud, Reference, SearchSpec, Study,
    Transform,
};
use rand::Rng;
use rand_distr::StandardNormal;

#[derive(Clone, Copy, PartialEq)]
enum Tier {
    Full,
    Smoke,
}

impl Tier {
    fn from_env() -> Self {
        match std::env::var("DEPTHCD_ACCEPTANCE_TIER").as_deref() {
            Ok("smoke") => Tier::Smoke,
            _ => Tier::Full,
        }
    }

    /// Replications: the criterion's own count, or the smoke count.
    fn reps(self, full: usize) -> usize {
        match self {
            Tier::Full => full,
            Tier::Smoke => full.min(500),
        }
    }

    /// Tolerance on a rejection or coverage rate.
    fn tol(self, full: f64) -> f64 {
        match self {
            Tier::Full => full,
            Tier::Smoke => full.max(0.05),
        }
    }
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(value: f64, target: f64, tol: f64) -> bool {
    (value - target).abs() <= tol
}

fn depth_oracles(_: Tier) -> Outcome {
    let mut mismatches = 0;
    for seed in 0..200u64 {
        let m = 3 + (seed as usize % 10);
        let (pts, z) = random_instance(derive_seed(&[1, seed]), m);
        let cloud = to_cloud(&pts);
        let zf = [z[0] as f64, z[1] as f64];
        if halfspace_depth_count(&cloud, &zf).unwrap() != halfspace_oracle(&pts, z)
            || simplicial_depth_count(&cloud, &zf).unwrap() != simplicial_oracle(&pts, z)
        {
            mismatches += 1;
        }
    }
    check(
        mismatches == 0,
        format!("{} of 200 instances agree exactly", 200 - mismatches),
    )
}

fn correlated(rng: &mut impl Rng) -> [f64; 2] {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    [a, 0.6 * a + 0.8 * b]
}

fn fresh_draw_uniformity(_: Tier) -> Outcome {
    let mut rng = stream(2, 0);
    let cloud: Vec<[f64; 2]> = (0..5000).map(|_| correlated(&mut rng)).collect();
    let ranked = RankedCloud::new(&PointCloud::from_rows(&cloud).unwrap(), &DepthPolicy::halfspace()).unwrap();
    let values: Vec<f64> = (0..5000)
        .map(|_| ranked.centrality(&correlated(&mut rng)).unwrap())
        .collect();
    let ks = ks_uniform(&values);
    check(ks < 0.03, format!("KS {ks:.4} (< 0.03), 5000 fresh draws"))
}

fn pivot_coverage(tier: Tier) -> Outcome {
    let runs = tier.reps(5000);
    let sigma = [1.0, 0.6, 0.6, 2.0];
    let l = [1.0, 0.0, 0.6, (2.0f64 - 0.36).sqrt()];
    let n = 20;
    let covered: usize = (0..runs as u64)
        .map(|r| {
            let mut rng = stream(derive_seed(&[3, r]), 0);
            let (a, b): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
            let s = (n as f64).sqrt();
            let ybar = [a * l[0] / s, (a * l[2] + b * l[3]) / s];
            let spec = PivotSpec::gaussian_mean(&ybar, &sigma, n, 2000, derive_seed(&[3, r, 1])).unwrap();
            let cd = pivot_cd(&spec, &DepthPolicy::mahalanobis()).unwrap();
            confidence_region(&cd, 0.9, None)
                .unwrap()
                .contains(&[0.0, 0.0])
                .unwrap() as usize
        })
        .sum();
    let rate = covered as f64 / runs as f64;
    let tol = tier.tol(0.02);
    check(
        within(rate, 0.9, tol),
        format!("90% coverage {rate:.4} (0.90 ± {tol}), {runs} runs"),
    )
}

fn fusion_identity_and_product_bound(_: Tier) -> Outcome {
    let fisher = FusionScheme::fisher();
    let identity_err = (1..=1000)
        .map(|i| {
            let u = i as f64 / 1000.0;
            (combine_values(&[u], &fisher).unwrap() - u).abs()
        })
        .fold(0.0, f64::max);
    let mc = FusionScheme::new(
        Transform::Log,
        Some(vec![1.0, 0.5, 2.0]),
        Reference::MonteCarlo {
            draws: MIN_MC_DRAWS,
            seed: 4,
        },
    )
    .unwrap();
    let schemes = [
        (fisher, 0.0),
        (FusionScheme::normal_score(None).unwrap(), 0.0),
        (mc, 3.0 / (MIN_MC_DRAWS as f64).sqrt()),
    ];
    let mut rng = stream(4, 0);
    let mut violations = 0;
    for _ in 0..10_000 {
        let u: Vec<f64> = (0..3).map(|_| 1.0 - rng.random::<f64>()).collect();
        let product: f64 = u.iter().product();
        for (s, tol) in &schemes {
            if combine_values(&u, s).unwrap() < product - tol {
                violations += 1;
            }
        }
    }
    check(
        identity_err <= 1e-12 && violations == 0,
        format!("K=1 max error {identity_err:.1e}; product bound violations {violations} of 30000"),
    )
}

fn calibration(kind: ScenarioKind, reps: usize, methods: Vec<Method>) -> simlab::CalibrationTable {
    let mut spec = ScenarioSpec::new(kind);
    spec.reps = reps;
    spec.n = 30;
    spec.b = 2000;
    spec.methods = methods;
    match simlab::run(Operation::Calibration, &spec).unwrap() {
        SimOutput::Calibration(t) => t,
        SimOutput::Estimates(_) => unreachable!(),
    }
}

/// Method, expected rejection rate, tolerance.
type Target = (Method, f64, f64);

fn common_mean_calibration(tier: Tier) -> Outcome {
    let reps = tier.reps(4000);
    let all = vec![Method::Gd, Method::Jk, Method::Clt, Method::Cd];
    let targets: [(ScenarioKind, Vec<Target>); 3] = [
        (
            ScenarioKind::Normal,
            vec![
                (Method::Gd, 0.05, 0.02),
                (Method::Jk, 0.05, 0.02),
                (Method::Clt, 0.09, 0.02),
                (Method::Cd, 0.04, 0.02),
            ],
        ),
        (
            ScenarioKind::ChiSq,
            vec![
                (Method::Gd, 0.18, 0.03),
                (Method::Jk, 0.18, 0.03),
                (Method::Clt, 0.25, 0.03),
                (Method::Cd, 0.07, 0.03),
            ],
        ),
        (
            ScenarioKind::Cauchy,
            vec![(Method::Gd, 0.01, 0.01), (Method::Cd, 0.06, 0.03)],
        ),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (kind, expected) in targets {
        let methods = if kind == ScenarioKind::Cauchy {
            vec![Method::Gd, Method::Cd]
        } else {
            all.clone()
        };
        let t = calibration(kind, reps, methods);
        let cells: Vec<String> = expected
            .iter()
            .map(|&(m, target, tol)| {
                let v = t.at(m, 0.05).unwrap();
                let ok = within(v, target, tier.tol(tol));
                pass &= ok;
                format!("{m} {v:.3}{}", if ok { "" } else { "!" })
            })
            .collect();
        parts.push(format!("{kind}: {}", cells.join(" ")));
    }
    check(pass, format!("rejection at 0.05, {reps} reps; {}", parts.join("; ")))
}

fn estimates(op: Operation, kind: ScenarioKind, reps: usize, squared: bool) -> simlab::EstimateSample {
    let mut spec = ScenarioSpec::new(kind);
    spec.reps = reps;
    spec.squared = squared;
    match simlab::run(op, &spec).unwrap() {
        SimOutput::Estimates(e) => e,
        SimOutput::Calibration(_) => unreachable!(),
    }
}

fn estimation_comparison(tier: Tier) -> Outcome {
    let reps = tier.reps(1000);
    let pair = |e: &simlab::EstimateSample| {
        (
            e.summary(Method::Cd).unwrap().clone(),
            e.summary(Method::Gd).unwrap().clone(),
        )
    };
    let (cd, gd) = pair(&estimates(Operation::Estimation, ScenarioKind::Normal, reps, false));
    let ratios: Vec<f64> = (0..2).map(|j| cd.sd[j] / gd.sd[j]).collect();
    let normal_ok = ratios.iter().all(|r| (0.9..=1.15).contains(r));
    let (cd2, gd2) = pair(&estimates(Operation::Estimation, ScenarioKind::ChiSq, reps, false));
    let bias_ok = (0..2).all(|j| cd2.bias[j].abs() < gd2.bias[j].abs());
    let (cd3, gd3) = pair(&estimates(Operation::Estimation, ScenarioKind::Cauchy, reps, false));
    let cauchy_ok = (0..2).all(|j| cd3.sd[j] < gd3.sd[j]);
    check(
        normal_ok && bias_ok && cauchy_ok,
        format!(
            "{reps} reps; normal sd ratio {:.3}/{:.3}; chisq |bias| cd {:.3}/{:.3} gd {:.3}/{:.3}; cauchy sd cd {:.3}/{:.3} gd {:.3}/{:.3}",
            ratios[0],
            ratios[1],
            cd2.bias[0].abs(),
            cd2.bias[1].abs(),
            gd2.bias[0].abs(),
            gd2.bias[1].abs(),
            cd3.sd[0],
            cd3.sd[1],
            gd3.sd[0],
            gd3.sd[1]
        ),
    )
}

fn heterogeneous_gain(tier: Tier) -> Outcome {
    let reps = tier.reps(1000);
    let mut pass = true;
    let mut parts = Vec::new();
    for squared in [false, true] {
        let e = estimates(Operation::Hetero, ScenarioKind::HeteroSum, reps, squared);
        let (cd, gd) = (e.summary(Method::Cd).unwrap(), e.summary(Method::Gd).unwrap());
        pass &= cd.sd[1] < gd.sd[1];
        parts.push(format!(
            "{} sd(mu2) cd {:.3} gd {:.3}",
            if squared { "chisq" } else { "normal" },
            cd.sd[1],
            gd.sd[1]
        ));
    }
    check(pass, format!("{reps} reps; {}", parts.join("; ")))
}

fn correlation_calibration(tier: Tier) -> Outcome {
    let reps = tier.reps(2000);
    let mut pass = true;
    let mut parts = Vec::new();
    let targets = [
        (
            ScenarioKind::CorrNormal,
            [
                (Method::Naive, 0.05, 0.02),
                (Method::Ho, 0.05, 0.02),
                (Method::Cd, 0.05, 0.02),
            ],
        ),
        (
            ScenarioKind::CorrNormalChiSq,
            [
                (Method::Naive, 0.38, 0.04),
                (Method::Ho, 0.37, 0.04),
                (Method::Cd, 0.05, 0.03),
            ],
        ),
    ];
    for (kind, expected) in targets {
        let mut spec = ScenarioSpec::new(kind);
        spec.reps = reps;
        let SimOutput::Calibration(t) = simlab::run(Operation::Correlation, &spec).unwrap() else {
            unreachable!()
        };
        let cells: Vec<String> = expected
            .iter()
            .map(|&(m, target, tol)| {
                let v = t.at(m, 0.05).unwrap();
                let ok = within(v, target, tier.tol(tol));
                pass &= ok;
                format!("{m} {v:.3}{}", if ok { "" } else { "!" })
            })
            .collect();
        parts.push(format!("{kind}: {}", cells.join(" ")));
    }
    check(pass, format!("rejection at 0.05, {reps} reps; {}", parts.join("; ")))
}

/// CSV and JSON bytes of a small simulation and a fusion run.
fn pipeline_bytes() -> Vec<Vec<u8>> {
    let mut out = Vec::new();
    let mut spec = ScenarioSpec::new(ScenarioKind::ChiSq);
    spec.reps = 200;
    spec.b = 300;
    spec.mc_draws = 20_000;
    let SimOutput::Calibration(t) = simlab::run(Operation::Calibration, &spec).unwrap() else {
        unreachable!()
    };
    let (mut a, mut b) = (Vec::new(), Vec::new());
    t.write_csv(&mut a).unwrap();
    t.write_pvalues_csv(&mut b).unwrap();
    out.push(a);
    out.push(b);
    out.push(serde_json::to_vec(&t).unwrap());

    let mut rng = stream(9, 0);
    let studies: Vec<Study> = (0..2)
        .map(|k| {
            let sample = spec.sample(k, &mut rng);
            let cd = bootstrap_t_cd(
                &sample,
                &Estimator::Mean,
                500,
                &DepthPolicy::default(),
                k as u64,
                Default::default(),
            )
            .unwrap();
            Study::identity(cd, sample.len())
        })
        .collect();
    let ccv = combined_cv(studies, FusionScheme::fisher()).unwrap();
    let mce = combined_mce(&ccv, &SearchSpec::default()).unwrap();
    let grid = GridSpec {
        bounds: None,
        resolution: 41,
    };
    let region = combined_region(&ccv, 0.95, Some(&grid)).unwrap();
    out.push(serde_json::to_vec(&(mce, region.grid().unwrap())).unwrap());
    out
}

fn determinism(_: Tier) -> Outcome {
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(pipeline_bytes)
    };
    let (one, four) = (run(1), run(4));
    let same = one.iter().zip(&four).filter(|(a, b)| a == b).count();
    check(
        same == one.len() && one.len() == four.len(),
        format!("{same} of {} outputs byte-identical across 1 and 4 threads", one.len()),
    )
}

type Criterion = (&'static str, fn(Tier) -> Outcome, Duration);

fn main() -> ExitCode {
    let tier = Tier::from_env();
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let criteria: [Criterion; 9] = [
        ("depth-oracles", depth_oracles, Duration::from_secs(10)),
        ("fresh-draw-uniformity", fresh_draw_uniformity, minutes(1)),
        ("pivot-coverage", pivot_coverage, minutes(5)),
        (
            "fusion-identity-and-product-bound",
            fusion_identity_and_product_bound,
            minutes(1),
        ),
        ("common-mean-calibration", common_mean_calibration, minutes(120)),
        ("estimation-comparison", estimation_comparison, minutes(30)),
        ("heterogeneous-gain", heterogeneous_gain, minutes(30)),
        ("correlation-calibration", correlation_calibration, minutes(45)),
        ("determinism", determinism, minutes(5)),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    println!("acceptance tier: {}", if tier == Tier::Full { "full" } else { "smoke" });
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|p| name.contains(p.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = f(tier);
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let pass = outcome.pass && in_time;
        failed += !pass as usize;
        println!(
            "{} {}. {name}: {} [{:.1?}{}]",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            outcome.detail,
            elapsed,
            if in_time {
                String::new()
            } else {
                format!(" over budget {budget:?}")
            }
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
