//! Batch pipeline behind the command-line driver: configuration, stage
//! orchestration, CSV/JSON/SVG outputs and a manifest tying them together.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::eval::{rolling_evaluation, simulate_networks, simulation_gof};
use crate::fit::{
    fit_model, FitSettings, FittedModel, LambdaMode, ModelSpec, Role, TermBlocks, Variant,
};
use crate::fpca::{discretize_curves, fpca, perturbation_curves, DEFAULT_GRID_POINTS};
use crate::panel::{
    aggregate_windows, binarize, load_edge_list, ActorRegistry, CovariateInput, EdgeSchema,
    NetworkPanel, Period, WindowMap,
};
use crate::plot::{line_plot, PlotSeries};
use crate::stats::global_stats;
use crate::synth::{generate, SynthConfig};
use crate::transition::TransitionOptions;

fn default_window() -> usize {
    1
}
fn default_n_sims() -> usize {
    1000
}
fn default_components() -> usize {
    2
}
fn default_model() -> ModelSpec {
    ModelSpec::standard(Variant::StergmRe)
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Synthetic-fixture parameters for the `synth` stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthParams {
    pub n_actors: usize,
    pub n_periods: i32,
    pub staggered_entry: bool,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_actors: 30,
            n_periods: 40,
            staggered_entry: false,
        }
    }
}

/// Full run configuration. Command-line flags override individual fields.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub edges: Option<PathBuf>,
    pub monadic: Option<PathBuf>,
    pub dyadic: Option<PathBuf>,
    pub registry: Option<PathBuf>,
    #[serde(default)]
    pub threshold: f64,
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default)]
    pub use_predecessors: bool,
    #[serde(default = "default_model")]
    pub model: ModelSpec,
    #[serde(default)]
    pub lambda: LambdaMode,
    pub eval_start: Option<Period>,
    pub eval_end: Option<Period>,
    /// Step periods `t` whose horizons `t+1` are simulated for the gof
    /// stage; defaults to every step with observed horizon data.
    pub gof_steps: Option<Vec<Period>>,
    /// Step period for the simulate stage; defaults to the last usable one.
    pub sim_step: Option<Period>,
    #[serde(default = "default_n_sims")]
    pub n_sims: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_components")]
    pub fpca_components: usize,
    pub grid_points: Option<usize>,
    /// Where outputs land. Execution plumbing: excluded from the config
    /// echo and hash so reruns elsewhere stay byte-identical.
    #[serde(skip_serializing, default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Worker threads; defaults to the number of available cores. Also
    /// excluded from the echo: parallelism must not change any output.
    #[serde(skip_serializing, default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub synth: SynthParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            edges: None,
            monadic: None,
            dyadic: None,
            registry: None,
            threshold: 0.0,
            window: 1,
            use_predecessors: false,
            model: default_model(),
            lambda: LambdaMode::Select,
            eval_start: None,
            eval_end: None,
            gof_steps: None,
            sim_step: None,
            n_sims: default_n_sims(),
            seed: 0,
            fpca_components: default_components(),
            grid_points: None,
            out_dir: default_out_dir(),
            threads: None,
            synth: SynthParams::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<RunConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let config: RunConfig = serde_json::from_str(&text)?;
        Ok(config)
    }

    fn fit_settings(&self) -> FitSettings {
        FitSettings {
            lambda: self.lambda.clone(),
            transition: TransitionOptions {
                use_predecessors: self.use_predecessors,
            },
            ..Default::default()
        }
    }

    fn input_paths(&self) -> Result<[&PathBuf; 4]> {
        match (&self.edges, &self.monadic, &self.dyadic, &self.registry) {
            (Some(e), Some(m), Some(d), Some(r)) => Ok([e, m, d, r]),
            _ => Err(Error::Config(
                "edges, monadic, dyadic and registry paths are all required".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Ingest,
    Fit,
    Curves,
    Fpca,
    Evaluate,
    Simulate,
    Gof,
    Synth,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Fit => "fit",
            Stage::Curves => "curves",
            Stage::Fpca => "fpca",
            Stage::Evaluate => "evaluate",
            Stage::Simulate => "simulate",
            Stage::Gof => "gof",
            Stage::Synth => "synth",
        }
    }
}

#[derive(Debug)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
    pub notes: Vec<String>,
}

struct OutputTracker {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputTracker {
    fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        Ok(OutputTracker {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, relative: &str, content: &str) -> Result<PathBuf> {
        let path = self.dir.join(relative);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| Error::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
        std::fs::write(&path, content).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        self.written.push(path.clone());
        Ok(path)
    }
}

fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

#[derive(Serialize)]
struct Manifest {
    stage: String,
    version: String,
    config_hash: String,
    config: RunConfig,
    input_hashes: BTreeMap<String, String>,
    outputs: Vec<String>,
}

fn write_manifest(
    tracker: &mut OutputTracker,
    stage: Stage,
    config: &RunConfig,
    input_hashes: BTreeMap<String, String>,
) -> Result<()> {
    let config_json = serde_json::to_string(config)?;
    let mut hasher = Sha256::new();
    hasher.update(config_json.as_bytes());
    let config_hash = format!("{:x}", hasher.finalize());
    let mut outputs: Vec<String> = tracker
        .written
        .iter()
        .map(|p| {
            p.strip_prefix(&tracker.dir)
                .unwrap_or(p)
                .display()
                .to_string()
        })
        .collect();
    outputs.push("manifest.json".to_string());
    let manifest = Manifest {
        stage: stage.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash,
        config: config.clone(),
        input_hashes,
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    tracker.write("manifest.json", &(json + "\n"))?;
    Ok(())
}

/// Load, window-aggregate, binarize and prepare the panel described by the
/// configuration. Returns the panel plus the consumed input hashes.
pub fn ingest(config: &RunConfig) -> Result<(NetworkPanel, BTreeMap<String, String>)> {
    let [edges, monadic, dyadic, registry_path] = config.input_paths()?;
    let mut hashes = BTreeMap::new();
    for path in [edges, monadic, dyadic, registry_path] {
        hashes.insert(path.display().to_string(), sha256_file(path)?);
    }
    let flows = load_edge_list(edges, &EdgeSchema::default())?;
    let mut covariates = CovariateInput::default();
    covariates.load_monadic(monadic)?;
    covariates.load_dyadic(dyadic)?;
    let mut registry = ActorRegistry::load(registry_path)?;
    let (flows, covariates) = if config.window > 1 {
        let periods: Vec<Period> = {
            // the window anchor comes from the monadic table period range
            let probe = binarize(
                &crate::panel::RawFlows::from_records(vec![])?,
                0.0,
                &registry,
                &covariates,
            )?;
            probe.periods().to_vec()
        };
        let map = WindowMap::new(periods[0], *periods.last().unwrap(), config.window)?;
        registry = registry.map_periods(&map)?;
        aggregate_windows(&flows, config.window, &covariates)?
    } else {
        (flows, covariates)
    };
    let panel = binarize(&flows, config.threshold, &registry, &covariates)?.prepare()?;
    Ok((panel, hashes))
}

fn csv_float(v: f64) -> String {
    format!("{v}")
}

fn panel_summary_csv(panel: &NetworkPanel) -> Result<String> {
    let mut out = String::from(
        "period,n_actors,size,order,density,mean_indegree,reciprocity,transitivity\n",
    );
    for &p in panel.periods() {
        let net = panel.network(p)?;
        if net.order() < 2 {
            let _ = writeln!(out, "{p},{},0,0,0,0,0,0", net.order());
            continue;
        }
        let s = global_stats(net)?;
        let _ = writeln!(
            out,
            "{p},{},{},{},{},{},{},{}",
            net.order(),
            s.size,
            s.order,
            csv_float(s.density),
            csv_float(s.mean_indegree),
            csv_float(s.reciprocity),
            csv_float(s.transitivity)
        );
    }
    Ok(out)
}

fn fit_document(model: &FittedModel, input_hashes: &BTreeMap<String, String>) -> Result<String> {
    #[derive(Serialize)]
    struct BlockInfo {
        label: String,
        offset: usize,
        ncols: usize,
        lambda: f64,
        /// Prior variance implied by the smoothing parameter (unit scale).
        sigma_squared: Option<f64>,
    }
    #[derive(Serialize)]
    struct SideDoc {
        side: String,
        n_coefficients: usize,
        deviance: f64,
        penalized_deviance: f64,
        iterations: usize,
        score_norm: f64,
        separation_warning: bool,
        blocks: Vec<BlockInfo>,
        coefficients: Vec<f64>,
        covariance_row_major: Vec<f64>,
    }
    #[derive(Serialize)]
    struct FitDoc<'a> {
        spec: &'a ModelSpec,
        diagnostics: &'a [String],
        input_hashes: &'a BTreeMap<String, String>,
        sides: Vec<SideDoc>,
    }
    let sides = model
        .side_fits()
        .iter()
        .map(|sf| {
            let r = &sf.result;
            let blocks = r
                .block_labels
                .iter()
                .enumerate()
                .map(|(k, label)| BlockInfo {
                    label: label.clone(),
                    offset: r.block_offsets[k],
                    ncols: r.block_offsets[k + 1] - r.block_offsets[k],
                    lambda: r.lambdas[k],
                    sigma_squared: (r.lambdas[k] > 0.0).then(|| 1.0 / r.lambdas[k]),
                })
                .collect();
            SideDoc {
                side: sf.side.label().to_string(),
                n_coefficients: r.coefficients.len(),
                deviance: r.deviance,
                penalized_deviance: r.penalized_deviance,
                iterations: r.iterations,
                score_norm: r.score_norm,
                separation_warning: r.separation_warning,
                blocks,
                coefficients: r.coefficients.to_vec(),
                covariance_row_major: r.covariance.iter().copied().collect(),
            }
        })
        .collect();
    let doc = FitDoc {
        spec: &model.spec,
        diagnostics: &model.diagnostics,
        input_hashes,
        sides,
    };
    Ok(serde_json::to_string_pretty(&doc)? + "\n")
}

fn curve_grid(panel: &NetworkPanel, grid_points: Option<usize>) -> Vec<f64> {
    match grid_points {
        Some(n) if n >= 2 => {
            let lo = *panel.periods().first().unwrap() as f64;
            let hi = *panel.periods().last().unwrap() as f64;
            (0..n)
                .map(|g| lo + (hi - lo) * g as f64 / (n - 1) as f64)
                .collect()
        }
        _ => panel.periods().iter().map(|&p| p as f64).collect(),
    }
}

fn write_curves(
    tracker: &mut OutputTracker,
    model: &FittedModel,
    panel: &NetworkPanel,
    grid_points: Option<usize>,
) -> Result<()> {
    let grid = curve_grid(panel, grid_points);
    let mut csv = String::from("side,term,period,value,se\n");
    let mut constants = String::from("side,term,estimate,se\n");
    for sf in model.side_fits() {
        for entry in &sf.layout.entries {
            match &entry.blocks {
                TermBlocks::TimeVarying { .. } => {
                    let (values, ses) = sf.coefficient_curve(&entry.label, &grid)?;
                    for (k, &g) in grid.iter().enumerate() {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{}",
                            sf.side.label(),
                            entry.label,
                            csv_float(g),
                            csv_float(values[k]),
                            csv_float(ses[k])
                        );
                    }
                    let band_lo: Vec<f64> = values
                        .iter()
                        .zip(&ses)
                        .map(|(v, s)| v - 2.0 * s)
                        .collect();
                    let band_hi: Vec<f64> =
                        values.iter().zip(&ses).map(|(v, s)| v + 2.0 * s).collect();
                    let series = vec![PlotSeries::line(
                        entry.label.clone(),
                        grid.clone(),
                        values,
                        "black",
                    )
                    .with_band(band_lo, band_hi)];
                    let svg = line_plot(
                        &format!("{} coefficient, {} model", entry.label, sf.side.label()),
                        "period",
                        "effect",
                        &series,
                    );
                    tracker.write(
                        &format!("curve_{}_{}.svg", sf.side.label(), entry.label),
                        &svg,
                    )?;
                }
                TermBlocks::Intercept { .. }
                | TermBlocks::Stability { .. }
                | TermBlocks::Constant { .. } => {
                    let (value, se) = sf.constant_coefficient(&entry.label)?;
                    let _ = writeln!(
                        constants,
                        "{},{},{},{}",
                        sf.side.label(),
                        entry.label,
                        csv_float(value),
                        csv_float(se)
                    );
                }
                TermBlocks::RandomSmooth { .. } => {}
            }
        }
    }
    tracker.write("coefficients.csv", &csv)?;
    tracker.write("constants.csv", &constants)?;
    Ok(())
}

fn write_fpca(
    tracker: &mut OutputTracker,
    model: &FittedModel,
    n_components: usize,
    grid_points: usize,
) -> Result<usize> {
    let mut bundles = 0;
    for sf in model.side_fits() {
        for role in [Role::Sender, Role::Receiver] {
            let has_role = sf.layout.entries.iter().any(
                |e| matches!(&e.blocks, TermBlocks::RandomSmooth { role: r, .. } if *r == role),
            );
            if !has_role {
                continue;
            }
            let bundle = discretize_curves(model, role, sf.side, grid_points)?;
            let m = n_components.min(bundle.n_actors().min(bundle.n_grid()));
            let result = fpca(&bundle, m)?;
            let prefix = format!("fpca/{}_{}", sf.side.label(), role.label());

            let mut scores = String::from("actor");
            for c in 0..m {
                let _ = write!(scores, ",comp{}", c + 1);
            }
            scores.push('\n');
            for (i, actor) in bundle.actors.iter().enumerate() {
                let _ = write!(scores, "{actor}");
                for c in 0..m {
                    let _ = write!(scores, ",{}", csv_float(result.scores[[i, c]]));
                }
                scores.push('\n');
            }
            tracker.write(&format!("{prefix}/scores.csv"), &scores)?;

            let mut eigen = String::from("grid_point");
            for c in 0..m {
                let _ = write!(eigen, ",xi{}", c + 1);
            }
            eigen.push('\n');
            for (g, &t) in result.grid.iter().enumerate() {
                let _ = write!(eigen, "{}", csv_float(t));
                for c in 0..m {
                    let _ = write!(eigen, ",{}", csv_float(result.eigenfunctions[[c, g]]));
                }
                eigen.push('\n');
            }
            tracker.write(&format!("{prefix}/eigenfunctions.csv"), &eigen)?;

            let mut shares = String::from("component,eigenvalue,variance_share\n");
            for c in 0..m {
                let _ = writeln!(
                    shares,
                    "{},{},{}",
                    c + 1,
                    csv_float(result.eigenvalues[c]),
                    csv_float(result.variance_shares[c])
                );
            }
            tracker.write(&format!("{prefix}/variance_shares.csv"), &shares)?;

            for c in 0..m {
                let (plus, minus) = perturbation_curves(&result, c, 2.0)?;
                let series = vec![
                    PlotSeries::line("mean", result.grid.clone(), result.mean.clone(), "black"),
                    PlotSeries::line("+", result.grid.clone(), plus, "firebrick"),
                    PlotSeries::line("-", result.grid.clone(), minus, "steelblue").dashed(),
                ];
                let svg = line_plot(
                    &format!(
                        "{} {} component {} ({:.1}% of variance)",
                        sf.side.label(),
                        role.label(),
                        c + 1,
                        100.0 * result.variance_shares[c]
                    ),
                    "period",
                    "random effect",
                    &series,
                );
                tracker.write(&format!("{prefix}/perturbation_c{}.svg", c + 1), &svg)?;
            }
            bundles += 1;
        }
    }
    Ok(bundles)
}

fn option_csv(v: Option<f64>) -> String {
    v.map(csv_float).unwrap_or_default()
}

/// Run one pipeline stage under the configured thread pool.
pub fn run(config: &RunConfig, stage: Stage) -> Result<RunSummary> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(threads) = config.threads {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| run_stage(config, stage))
}

fn run_stage(config: &RunConfig, stage: Stage) -> Result<RunSummary> {
    let mut tracker = OutputTracker::new(&config.out_dir)?;
    let mut notes = Vec::new();

    let input_hashes = match stage {
        Stage::Synth => {
            let synth = generate(&SynthConfig {
                n_actors: config.synth.n_actors,
                n_periods: config.synth.n_periods,
                seed: config.seed,
                staggered_entry: config.synth.staggered_entry,
                re_scale: SynthConfig::default().re_scale,
            })?;
            let files = synth.write_files(&config.out_dir)?;
            tracker.written.extend(files);
            // a ready-to-run configuration pointing at the fixture
            let mut fixture_config = config.clone();
            fixture_config.edges = Some(config.out_dir.join("edges.csv"));
            fixture_config.monadic = Some(config.out_dir.join("monadic.csv"));
            fixture_config.dyadic = Some(config.out_dir.join("dyadic.csv"));
            fixture_config.registry = Some(config.out_dir.join("registry.csv"));
            fixture_config.model = synth.model_spec();
            let json = serde_json::to_string_pretty(&fixture_config)? + "\n";
            tracker.write("config.json", &json)?;
            notes.push(format!(
                "synthetic fixture: {} actors, {} periods",
                config.synth.n_actors, config.synth.n_periods
            ));
            BTreeMap::new()
        }
        Stage::Ingest => {
            let (panel, hashes) = ingest(config)?;
            let provenance = serde_json::to_string_pretty(panel.provenance())? + "\n";
            tracker.write("provenance.json", &provenance)?;
            let summary = panel_summary_csv(&panel)?;
            tracker.write("panel_summary.csv", &summary)?;
            notes.push(format!(
                "panel: {} periods, {} edges kept",
                panel.periods().len(),
                panel.provenance().edges_kept
            ));
            hashes
        }
        Stage::Fit | Stage::Curves | Stage::Fpca => {
            let (panel, hashes) = ingest(config)?;
            let model = fit_model(&panel, &config.model, &config.fit_settings())?;
            notes.extend(model.diagnostics.iter().cloned());
            match stage {
                Stage::Fit => {
                    let doc = fit_document(&model, &hashes)?;
                    tracker.write("fit.json", &doc)?;
                }
                Stage::Curves => {
                    write_curves(&mut tracker, &model, &panel, config.grid_points)?;
                }
                Stage::Fpca => {
                    let grid_points = config.grid_points.unwrap_or(DEFAULT_GRID_POINTS);
                    let bundles =
                        write_fpca(&mut tracker, &model, config.fpca_components, grid_points)?;
                    if bundles == 0 {
                        return Err(Error::Fpca(
                            "the fitted model has no random-smooth terms".into(),
                        ));
                    }
                }
                _ => unreachable!(),
            }
            hashes
        }
        Stage::Evaluate => {
            let (panel, hashes) = ingest(config)?;
            let first = *panel.periods().first().unwrap();
            let last = *panel.periods().last().unwrap();
            let start = config.eval_start.unwrap_or(first + 1);
            let end = config.eval_end.unwrap_or(last);
            let result =
                rolling_evaluation(&panel, &config.model, &config.fit_settings(), start, end)?;
            let mut csv = String::from("period,side,pr_auc,roc_auc\n");
            for row in &result.rows {
                let _ = writeln!(
                    csv,
                    "{},{},{},{}",
                    row.horizon,
                    row.side,
                    option_csv(row.pr_auc),
                    option_csv(row.roc_auc)
                );
            }
            tracker.write("auc.csv", &csv)?;
            notes.extend(result.diagnostics);
            hashes
        }
        Stage::Simulate => {
            let (panel, hashes) = ingest(config)?;
            let model = fit_model(&panel, &config.model, &config.fit_settings())?;
            notes.extend(model.diagnostics.iter().cloned());
            let last = *panel.periods().last().unwrap();
            let step = config.sim_step.unwrap_or(last - 1);
            let sims = simulate_networks(
                &model,
                &panel,
                step,
                config.n_sims,
                config.seed,
                config.fit_settings().transition,
            )?;
            let mut csv = String::from(
                "period,replicate,size,order,density,mean_indegree,reciprocity,transitivity\n",
            );
            for (r, net) in sims.iter().enumerate() {
                let s = global_stats(net)?;
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{}",
                    step + 1,
                    r,
                    s.size,
                    s.order,
                    csv_float(s.density),
                    csv_float(s.mean_indegree),
                    csv_float(s.reciprocity),
                    csv_float(s.transitivity)
                );
            }
            tracker.write("sim_stats.csv", &csv)?;
            hashes
        }
        Stage::Gof => {
            let (panel, hashes) = ingest(config)?;
            let model = fit_model(&panel, &config.model, &config.fit_settings())?;
            notes.extend(model.diagnostics.iter().cloned());
            let periods = panel.periods();
            let steps: Vec<Period> = match &config.gof_steps {
                Some(steps) => steps.clone(),
                None => periods[1..periods.len() - 1].to_vec(),
            };
            let report = simulation_gof(
                &model,
                &panel,
                &steps,
                config.n_sims,
                config.seed,
                config.fit_settings().transition,
            )?;
            let mut csv = String::from(
                "period,statistic,observed,min,q25,median,q75,max,observed_quantile\n",
            );
            for period in &report.periods {
                for band in &period.bands {
                    let _ = writeln!(
                        csv,
                        "{},{},{},{},{},{},{},{},{}",
                        period.period,
                        band.statistic,
                        csv_float(band.observed),
                        csv_float(band.min),
                        csv_float(band.q25),
                        csv_float(band.median),
                        csv_float(band.q75),
                        csv_float(band.max),
                        csv_float(band.observed_quantile)
                    );
                }
            }
            tracker.write("gof.csv", &csv)?;
            hashes
        }
    };

    write_manifest(&mut tracker, stage, config, input_hashes)?;
    Ok(RunSummary {
        outputs: tracker.written,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixture_config(dir: &Path) -> RunConfig {
        RunConfig {
            out_dir: dir.join("fixture"),
            seed: 11,
            synth: SynthParams {
                n_actors: 10,
                n_periods: 10,
                staggered_entry: false,
            },
            ..Default::default()
        }
    }

    fn desk_model() -> ModelSpec {
        use crate::fit::{Covariate, Term};
        ModelSpec {
            variant: Variant::Stergm,
            terms: vec![
                Term::time_varying(Covariate::Recip),
                Term::constant(Covariate::Alliance),
                Term::constant(Covariate::GdpReceiver),
            ],
            include_intercept: true,
            tv_dim: 6,
            tv_degree: 2,
            tv_order: 1,
            re_dim: 5,
            re_degree: 2,
            re_order: 1,
        }
    }

    #[test]
    fn synth_then_full_pipeline_stages_write_documented_outputs() {
        let dir = tempfile::tempdir().unwrap();
        let config = fixture_config(dir.path());
        let summary = run(&config, Stage::Synth).unwrap();
        assert!(summary.outputs.iter().any(|p| p.ends_with("edges.csv")));
        assert!(summary.outputs.iter().any(|p| p.ends_with("config.json")));

        let mut stage_config = RunConfig::load(config.out_dir.join("config.json")).unwrap();
        stage_config.model = desk_model();
        stage_config.lambda = LambdaMode::Fixed {
            default: 1.0,
            per_term: Default::default(),
        };
        stage_config.n_sims = 40;
        stage_config.fpca_components = 2;

        for (stage, key_output) in [
            (Stage::Ingest, "panel_summary.csv"),
            (Stage::Fit, "fit.json"),
            (Stage::Curves, "coefficients.csv"),
            (Stage::Evaluate, "auc.csv"),
            (Stage::Simulate, "sim_stats.csv"),
            (Stage::Gof, "gof.csv"),
        ] {
            let out = dir.path().join(stage.name());
            stage_config.out_dir = out.clone();
            let summary = run(&stage_config, stage)
                .unwrap_or_else(|e| panic!("stage {} failed: {e}", stage.name()));
            assert!(
                summary.outputs.iter().any(|p| p.ends_with(key_output)),
                "stage {} must write {key_output}",
                stage.name()
            );
            let manifest_path = out.join("manifest.json");
            assert!(manifest_path.exists());
            let manifest: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(&manifest_path).unwrap()).unwrap();
            // every output is referenced in the manifest
            let listed: Vec<String> = manifest["outputs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|v| v.as_str().unwrap().to_string())
                .collect();
            for output in &summary.outputs {
                let rel = output.strip_prefix(&out).unwrap().display().to_string();
                assert!(listed.contains(&rel), "output {rel} missing from manifest");
            }
        }
    }

    #[test]
    fn fpca_stage_requires_random_effects() {
        let dir = tempfile::tempdir().unwrap();
        let config = fixture_config(dir.path());
        run(&config, Stage::Synth).unwrap();
        let mut stage_config = RunConfig::load(config.out_dir.join("config.json")).unwrap();
        stage_config.model = desk_model(); // no random smooths
        stage_config.lambda = LambdaMode::Fixed {
            default: 1.0,
            per_term: Default::default(),
        };
        stage_config.out_dir = dir.path().join("fpca");
        assert!(matches!(
            run(&stage_config, Stage::Fpca),
            Err(Error::Fpca(_))
        ));
    }

    #[test]
    fn evaluate_on_two_period_panel_reports_insufficient_horizon() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = fixture_config(dir.path());
        config.synth.n_periods = 6;
        run(&config, Stage::Synth).unwrap();
        let mut stage_config = RunConfig::load(config.out_dir.join("config.json")).unwrap();
        stage_config.model = desk_model();
        stage_config.out_dir = dir.path().join("eval");
        stage_config.eval_start = Some(2);
        stage_config.eval_end = Some(3); // fewer than 3 periods of range
        let err = run(&stage_config, Stage::Evaluate).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("insufficient horizon"));
    }
}
