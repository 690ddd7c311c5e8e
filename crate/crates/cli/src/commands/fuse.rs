use std::path::PathBuf;

use depthcd::cd::{CdKind, Provenance, DEFAULT_GRID_RESOLUTION, DEFAULT_REPLICATES};
use depthcd::depth::TieRule;
use depthcd::fusion::{MapSummary, MceResult, SchemeSummary, MIN_MC_DRAWS};
use depthcd::rng::derive_seed;
use depthcd::{
    bootstrap_cd, bootstrap_t_cd, combined_cv, combined_mce, combined_region, BootstrapTOptions, DepthKind,
    DepthPolicy, Estimator, FusionScheme, GridSpec, ParamMap, Reference, SearchSpec, Study, Transform,
};
use serde::{Deserialize, Serialize};

use super::depth::DEPTH_NAMES;
use super::Outputs;
use crate::config::{
    read_flag_file, BootstrapMode, Envelope, FuseConfig, RegionConfig, RunConfig, SchemeChoice, Vector,
};
use crate::data::{self, StudyData};
use crate::error::{parse_choice, unknown_choice, CliError, CliResult};
use crate::output;

pub const ESTIMATOR_NAMES: [&str; 3] = ["mean", "median", "pearson"];
pub const DEFAULT_SEED: u64 = 1;

#[derive(clap::Args, Deserialize, Default)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Args {
    /// Study CSV files. A file with the study column holds several studies.
    #[serde(default)]
    pub files: Vec<PathBuf>,
    /// Name of the study-label column [default: study].
    #[arg(long)]
    pub study_column: Option<String>,
    /// Hypothesized common parameter, comma separated.
    #[arg(long, allow_hyphen_values = true)]
    pub null: Option<Vector>,
    /// mean, median or pearson [default: mean].
    #[arg(long)]
    pub estimator: Option<String>,
    /// auto, plain or t [default: auto].
    #[arg(long)]
    pub bootstrap: Option<String>,
    /// Bootstrap replicates per study [default: 2000].
    #[arg(long = "B")]
    pub b: Option<usize>,
    /// halfspace, simplicial or mahalanobis [default: halfspace].
    #[arg(long)]
    pub depth: Option<String>,
    /// strict or weak [default: strict].
    #[arg(long)]
    pub tie_rule: Option<String>,
    /// fisher or normal-score [default: fisher].
    #[arg(long)]
    pub scheme: Option<String>,
    /// Positive study weights, comma separated.
    #[arg(long)]
    pub weights: Option<Vector>,
    /// One per study, in order: identity, select:i,j (0-based) or
    /// linear:a,b;c,d (rows separated by `;`).
    #[arg(long = "map")]
    #[serde(default)]
    pub maps: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Confidence level of the combined region, e.g. 0.95.
    #[arg(long)]
    pub region_level: Option<f64>,
    /// Grid points per axis for the region [default: 101].
    #[arg(long)]
    pub region_resolution: Option<usize>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// JSON report path.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    /// Region grid as CSV.
    #[arg(long)]
    #[serde(skip)]
    pub region_csv: Option<PathBuf>,
}

pub fn resolve(mut a: Args) -> CliResult<(FuseConfig, Outputs)> {
    if let Some(path) = a.config.take() {
        let f: Args = read_flag_file(&path)?;
        if a.files.is_empty() {
            a.files = f.files;
        }
        if a.maps.is_empty() {
            a.maps = f.maps;
        }
        a.study_column = a.study_column.or(f.study_column);
        a.null = a.null.or(f.null);
        a.estimator = a.estimator.or(f.estimator);
        a.bootstrap = a.bootstrap.or(f.bootstrap);
        a.b = a.b.or(f.b);
        a.depth = a.depth.or(f.depth);
        a.tie_rule = a.tie_rule.or(f.tie_rule);
        a.scheme = a.scheme.or(f.scheme);
        a.weights = a.weights.or(f.weights);
        a.seed = a.seed.or(f.seed);
        a.region_level = a.region_level.or(f.region_level);
        a.region_resolution = a.region_resolution.or(f.region_resolution);
    }
    if a.files.is_empty() {
        return Err(CliError::usage("at least one study file is required"));
    }
    let estimator = a.estimator.unwrap_or_else(|| "mean".into()).to_ascii_lowercase();
    estimator_from_name(&estimator)?;
    if a.region_resolution.is_some() && a.region_level.is_none() {
        return Err(CliError::usage("--region-resolution needs --region-level"));
    }
    let config = FuseConfig {
        files: a.files,
        study_column: a.study_column.unwrap_or_else(|| "study".into()),
        null: a.null.map(|v| v.0),
        estimator,
        bootstrap: a.bootstrap.map_or(Ok(BootstrapMode::Auto), |s| {
            parse_choice(&s, &["auto", "plain", "t"], "bootstrap")
        })?,
        b: a.b.unwrap_or(DEFAULT_REPLICATES),
        depth: a
            .depth
            .map_or(Ok(DepthKind::HalfSpace), |d| parse_choice(&d, &DEPTH_NAMES, "depth"))?,
        tie_rule: a.tie_rule.map_or(Ok(TieRule::Strict), |t| {
            parse_choice(&t, &["strict", "weak"], "tie rule")
        })?,
        scheme: a.scheme.map_or(Ok(SchemeChoice::Fisher), |s| {
            parse_choice(&s, &["fisher", "normal-score"], "scheme")
        })?,
        weights: a.weights.map(|v| v.0),
        maps: a.maps,
        seed: a.seed.unwrap_or(DEFAULT_SEED),
        region: a.region_level.map(|level| RegionConfig {
            level,
            resolution: a.region_resolution.unwrap_or(DEFAULT_GRID_RESOLUTION),
        }),
    };
    let outputs = Outputs {
        out: a.out,
        region_csv: a.region_csv,
    };
    if outputs.region_csv.is_some() && config.region.is_none() {
        return Err(CliError::usage("--region-csv needs --region-level"));
    }
    Ok((config, outputs))
}

pub fn run(a: Args) -> CliResult<()> {
    let (c, outputs) = resolve(a)?;
    super::execute(&RunConfig::Fuse(c), &outputs)
}

fn estimator_from_name(name: &str) -> CliResult<Estimator> {
    match name {
        "mean" => Ok(Estimator::Mean),
        "median" => Ok(Estimator::CoordinatewiseMedian),
        "pearson" | "correlation" => Ok(Estimator::PearsonCorrelation),
        other => Err(unknown_choice(other, &ESTIMATOR_NAMES, "estimator")),
    }
}

/// Parses one `--map` value. `common` is the common dimension when known.
pub fn parse_map(text: &str, common: Option<usize>) -> CliResult<ParamMap> {
    let text = text.trim();
    let (kind, body) = text.split_once(':').unwrap_or((text, ""));
    let bad = |why: &str| CliError::map(format!("map `{text}`: {why}"));
    match kind.to_ascii_lowercase().as_str() {
        "identity" | "id" if body.is_empty() => Ok(ParamMap::Identity),
        "select" => {
            let indices = body
                .split(',')
                .map(|s| s.trim().parse::<usize>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|_| bad("indices must be non-negative integers"))?;
            let p = common.ok_or_else(|| bad("the common dimension is unknown; pass --null"))?;
            ParamMap::select(indices, p).map_err(CliError::in_map_context)
        }
        "linear" => {
            let rows: Vec<Vec<f64>> = body
                .split(';')
                .map(data::parse_vector)
                .collect::<Result<_, _>>()
                .map_err(|e| bad(&e))?;
            let cols = rows[0].len();
            if rows.iter().any(|r| r.len() != cols) {
                return Err(bad("rows have different lengths"));
            }
            if common.is_some_and(|p| p != cols) {
                return Err(bad(&format!(
                    "has {cols} columns but the common dimension is {}",
                    common.unwrap()
                )));
            }
            ParamMap::linear(rows.len(), cols, rows.concat()).map_err(CliError::in_map_context)
        }
        _ => Err(bad("expected identity, select:i,j or linear:a,b;c,d")),
    }
}

/// Common dimension from the null, else from identity or linear maps.
fn common_dimension(c: &FuseConfig, study_dims: &[usize]) -> Option<usize> {
    if let Some(null) = &c.null {
        return Some(null.len());
    }
    if c.maps.is_empty() {
        return study_dims.first().copied();
    }
    c.maps.iter().zip(study_dims).find_map(|(m, &d)| {
        let m = m.trim().to_ascii_lowercase();
        if m == "identity" || m == "id" {
            Some(d)
        } else {
            m.strip_prefix("linear:")
                .and_then(|body| body.split(';').next())
                .map(|row| row.split(',').count())
        }
    })
}

#[derive(Serialize)]
struct StudyReport {
    name: String,
    n: usize,
    columns: Vec<String>,
    map: MapSummary,
    provenance: Provenance,
    mce: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pvalue: Option<f64>,
}

#[derive(Serialize)]
struct RegionReport {
    level: f64,
    axes: Vec<Vec<f64>>,
    /// Share of grid points inside the region.
    coverage: f64,
    intervals: Vec<(f64, f64)>,
    boundary: Vec<Vec<[f64; 2]>>,
}

#[derive(Serialize)]
struct FuseReport {
    dim: usize,
    studies: Vec<StudyReport>,
    scheme: SchemeSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    combined_pvalue: Option<f64>,
    combined_mce: MceResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    region: Option<RegionReport>,
}

fn build_scheme(c: &FuseConfig) -> CliResult<FusionScheme> {
    let weights = c.weights.clone();
    Ok(match c.scheme {
        SchemeChoice::NormalScore => FusionScheme::normal_score(weights)?,
        SchemeChoice::Fisher => match weights {
            Some(w) if w.iter().any(|&x| x != 1.0) => FusionScheme::new(
                Transform::Log,
                Some(w),
                Reference::MonteCarlo {
                    draws: MIN_MC_DRAWS,
                    seed: derive_seed(&[c.seed, u64::MAX]),
                },
            )?,
            w => FusionScheme::new(Transform::Log, w, Reference::ExactChiSq)?,
        },
    })
}

fn study_cd(
    s: &StudyData,
    est: &Estimator,
    c: &FuseConfig,
    policy: &DepthPolicy,
    seed: u64,
) -> CliResult<depthcd::DepthCD> {
    let t = match c.bootstrap {
        BootstrapMode::Auto => est.studentizable(),
        BootstrapMode::Plain => false,
        BootstrapMode::T if !est.studentizable() => {
            return Err(CliError::usage(format!(
                "the {} estimator has no covariance estimate; use --bootstrap plain",
                est.name()
            )))
        }
        BootstrapMode::T => true,
    };
    let cd = if t {
        bootstrap_t_cd(&s.cloud, est, c.b, policy, seed, BootstrapTOptions::default())
    } else {
        bootstrap_cd(&s.cloud, est, c.b, policy, seed)
    };
    cd.map_err(|e| CliError::from(e).context(format!("study `{}`", s.name)))
}

pub fn execute(c: &FuseConfig, config: &RunConfig, outputs: &Outputs) -> CliResult<()> {
    let studies = data::read_studies(&c.files, &c.study_column)?;
    data::check_study_sizes(&studies)?;
    let est = estimator_from_name(&c.estimator)?;
    if !c.maps.is_empty() && c.maps.len() != studies.len() {
        return Err(CliError::map(format!(
            "{} maps given for {} studies; give one per study or none",
            c.maps.len(),
            studies.len()
        )));
    }
    let study_dims = studies
        .iter()
        .map(|s| est.output_dim(s.cloud.dim()))
        .collect::<depthcd::Result<Vec<_>>>()?;
    let common = common_dimension(c, &study_dims);
    let maps = if c.maps.is_empty() {
        vec![ParamMap::Identity; studies.len()]
    } else {
        c.maps.iter().map(|m| parse_map(m, common)).collect::<CliResult<_>>()?
    };

    let policy = DepthPolicy::new(c.depth).with_tie_rule(c.tie_rule);
    let mut fused = Vec::with_capacity(studies.len());
    for (k, (s, map)) in studies.iter().zip(maps).enumerate() {
        let cd = study_cd(s, &est, c, &policy, derive_seed(&[c.seed, k as u64]))?;
        let study = Study::new(cd, map, s.cloud.len())
            .map_err(|e| CliError::in_map_context(e).context(format!("study `{}`", s.name)))?;
        fused.push(study);
    }
    let scheme = build_scheme(c)?;
    let ccv = combined_cv(fused, scheme).map_err(CliError::in_map_context)?;
    let p = ccv.dim();
    if let Some(null) = &c.null {
        if null.len() != p {
            return Err(CliError::dimension(format!(
                "--null has {} coordinates but the common parameter has {p}",
                null.len()
            )));
        }
    }

    let mut reports = Vec::with_capacity(studies.len());
    for (s, st) in studies.iter().zip(ccv.studies()) {
        let pvalue = c.null.as_ref().map(|null| st.centrality(null)).transpose()?;
        reports.push(StudyReport {
            name: s.name.clone(),
            n: st.n,
            columns: s.columns.clone(),
            map: st.map.summary(),
            provenance: st.cd.provenance().clone(),
            mce: st.cd.mce(),
            pvalue,
        });
    }
    let combined_pvalue = c.null.as_ref().map(|null| ccv.pvalue(null)).transpose()?;
    let mce = combined_mce(&ccv, &SearchSpec::default())?;

    let region = match &c.region {
        None => None,
        Some(r) => {
            let spec = GridSpec {
                bounds: None,
                resolution: r.resolution,
            };
            let region = combined_region(&ccv, r.level, Some(&spec))?;
            let grid = region.grid().expect("grid requested");
            if let Some(path) = &outputs.region_csv {
                write_region_csv(path, grid)?;
            }
            let inside = grid.inside.iter().filter(|&&b| b).count();
            Some(RegionReport {
                level: r.level,
                axes: grid.axes.clone(),
                coverage: inside as f64 / grid.inside.len() as f64,
                intervals: grid.intervals.clone(),
                boundary: grid.boundary.clone(),
            })
        }
    };

    for r in &reports {
        let kind = match r.provenance.kind {
            CdKind::BootstrapT => "bootstrap-t",
            CdKind::Bootstrap => "bootstrap",
            CdKind::Pivot => "pivot",
            CdKind::External => "external",
        };
        print!("{:<16} n={:<6} {kind:<12} mce={:?}", r.name, r.n, r.mce);
        match r.pvalue {
            Some(pv) => println!(" p={pv:.4}"),
            None => println!(),
        }
    }
    if let Some(pv) = combined_pvalue {
        println!("combined p-value {pv:.4}");
    }
    println!("combined mce     {:?} (value {:.4})", mce.theta, mce.value);
    if let Some(r) = &region {
        println!("region {:.0}%: {:.1}% of the grid", 100.0 * r.level, 100.0 * r.coverage);
    }

    if let Some(out) = &outputs.out {
        let report = FuseReport {
            dim: p,
            studies: reports,
            scheme: ccv.scheme().summary(),
            combined_pvalue,
            combined_mce: mce,
            region,
        };
        output::write_json(out, &Envelope::new(config, report))?;
    }
    Ok(())
}

fn write_region_csv(path: &std::path::Path, grid: &depthcd::cd::RegionGrid) -> CliResult<()> {
    output::write_atomic(path, |w| {
        let p = grid.axes.len();
        let header: Vec<String> = (1..=p).map(|j| format!("theta_{j}")).collect();
        writeln!(w, "{},value,inside", header.join(","))?;
        let nx = grid.axes[0].len();
        for (i, (v, inside)) in grid.values.iter().zip(&grid.inside).enumerate() {
            if p == 1 {
                writeln!(w, "{},{v},{}", grid.axes[0][i], u8::from(*inside))?;
            } else {
                writeln!(
                    w,
                    "{},{},{v},{}",
                    grid.axes[0][i % nx],
                    grid.axes[1][i / nx],
                    u8::from(*inside)
                )?;
            }
        }
        Ok(())
    })
}
