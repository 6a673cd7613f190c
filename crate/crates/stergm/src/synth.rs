//! Synthetic panel generator with known ground truth: a separable
//! formation/persistence process with time-varying coefficient curves and
//! smooth actor-specific random curves drives the network forward, and the
//! true curves are kept for recovery checks. The generator also writes the
//! four input CSVs so the whole pipeline can run without external data.

use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fit::{pirls::sigmoid, Covariate, ModelSpec, Role, Term, Variant};
use crate::network::Network;
use crate::panel::{binarize, ActorRegistry, CovariateInput, NetworkPanel, Period, RawFlows};
use crate::splines::SplineBasis;

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub n_actors: usize,
    pub n_periods: i32,
    pub seed: u64,
    /// Let a few actors enter late or leave early.
    pub staggered_entry: bool,
    /// Amplitude scale of the actor random curves.
    pub re_scale: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_actors: 30,
            n_periods: 40,
            seed: 20240,
            staggered_entry: false,
            re_scale: 1.1,
        }
    }
}

/// True coefficient structure of one side.
#[derive(Debug, Clone)]
pub struct TrueSide {
    pub intercept: f64,
    /// Per covariate term, the curve sampled at the panel periods.
    pub curves: Vec<(Covariate, Vec<f64>)>,
    /// n_actors x n_periods random-curve values per role.
    pub sender_curves: Array2<f64>,
    pub receiver_curves: Array2<f64>,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub config: SynthConfig,
    pub names: Vec<String>,
    pub periods: Vec<Period>,
    pub registry: ActorRegistry,
    pub covariates: CovariateInput,
    pub flows: RawFlows,
    pub formation_truth: TrueSide,
    pub persistence_truth: TrueSide,
}

fn formation_curve(covariate: Covariate, t01: f64) -> f64 {
    match covariate {
        // one full sine cycle over the panel
        Covariate::Recip => 1.0 * (2.0 * std::f64::consts::PI * t01).sin() + 0.6,
        // linear rise
        Covariate::Alliance => -0.5 + 1.7 * t01,
        // constant
        Covariate::GdpReceiver => 0.35,
        _ => 0.0,
    }
}

fn persistence_curve(covariate: Covariate, _t01: f64) -> f64 {
    match covariate {
        Covariate::Recip => 0.5,
        Covariate::Alliance => 0.3,
        Covariate::GdpReceiver => 0.25,
        _ => 0.0,
    }
}

const FORMATION_INTERCEPT: f64 = -4.4;
const PERSISTENCE_INTERCEPT: f64 = -0.9;

/// Smooth random curves: spline coefficients follow a level plus a random
/// walk, so levels and trends both vary across actors.
fn random_curves(
    rng: &mut ChaCha8Rng,
    basis: &SplineBasis,
    periods: &[Period],
    n_actors: usize,
    scale: f64,
) -> Array2<f64> {
    let q = basis.dim();
    let mut curves = Array2::zeros((n_actors, periods.len()));
    for a in 0..n_actors {
        let mut coefs = vec![0.0; q];
        coefs[0] = scale * rng.sample::<f64, _>(rand_distr::StandardNormal);
        for k in 1..q {
            coefs[k] = coefs[k - 1]
                + 0.45 * scale * rng.sample::<f64, _>(rand_distr::StandardNormal);
        }
        let mean = coefs.iter().sum::<f64>() / q as f64;
        for c in coefs.iter_mut() {
            *c -= mean; // keep levels centered so the intercept stays interpretable
        }
        coefs[0] += 0.8 * scale * rng.sample::<f64, _>(rand_distr::StandardNormal);
        for (g, &p) in periods.iter().enumerate() {
            let (start, vals) = basis.eval_sparse(p as f64).unwrap();
            curves[[a, g]] = vals
                .iter()
                .enumerate()
                .map(|(k, &b)| b * coefs[start + k])
                .sum();
        }
    }
    curves
}

/// Generate the synthetic fixture.
pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    if config.n_actors < 5 || config.n_periods < 6 {
        return Err(Error::Config(
            "synthetic panels need at least 5 actors and 6 periods".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n = config.n_actors;
    let periods: Vec<Period> = (1..=config.n_periods).collect();
    let names: Vec<String> = (0..n).map(|i| format!("A{i:02}")).collect();

    // inclusion spans
    let mut spans = vec![(1, config.n_periods); n];
    if config.staggered_entry {
        for a in 0..n {
            if a % 7 == 3 {
                spans[a].0 = 1 + config.n_periods / 4;
            }
            if a % 11 == 5 {
                spans[a].1 = config.n_periods - config.n_periods / 5;
            }
        }
    }
    let registry = ActorRegistry::new(
        (0..n)
            .map(|a| (names[a].clone(), spans[a].0, spans[a].1, None))
            .collect(),
    )?;

    // monadic covariates: gdp as a level plus slow random walk, similar for
    // military spending, polity as a bounded integer walk
    let mut covariates = CovariateInput::default();
    let mut log_gdp: Vec<f64> = (0..n).map(|_| rng.gen_range(30f64.ln()..3000f64.ln())).collect();
    let mut log1p_milex: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..5.0)).collect();
    let mut polity: Vec<i32> = (0..n).map(|_| rng.gen_range(-10..=10)).collect();
    for &p in &periods {
        for a in 0..n {
            log_gdp[a] += rng.gen_range(-0.03..0.035);
            log1p_milex[a] = (log1p_milex[a] + rng.gen_range(-0.08..0.08)).clamp(0.0, 6.0);
            polity[a] = (polity[a] + rng.gen_range(-1..=1)).clamp(-10, 10);
            if registry.existent(a as u32, p) {
                covariates.set_monadic(
                    p,
                    &names[a],
                    Some(log_gdp[a].exp()),
                    Some(log1p_milex[a].exp_m1()),
                    Some(polity[a] as f64),
                );
            }
        }
    }
    // dyadic: static distances, slowly switching symmetric alliances
    let mut alliance_on = vec![vec![false; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            covariates.set_distance(&names[i], &names[j], rng.gen_range(200.0..18_000.0));
            alliance_on[i][j] = rng.gen::<f64>() < 0.3;
        }
    }
    for &p in &periods {
        for i in 0..n {
            for j in (i + 1)..n {
                let on = alliance_on[i][j];
                let stay = if on { 0.95 } else { 0.022 };
                alliance_on[i][j] = rng.gen::<f64>() < stay;
                if alliance_on[i][j] {
                    covariates.set_alliance(p, &names[i], &names[j]);
                }
            }
        }
    }

    // a covariate-only panel provides the prepared lookup tables the
    // generator shares with the fitted model
    let empty = RawFlows::from_records(vec![])?;
    let tables_panel = binarize(&empty, 0.0, &registry, &covariates)?.prepare()?;
    let tables = tables_panel.covariates();

    // true curves
    let span01 = |p: Period| (p - periods[0]) as f64 / (config.n_periods - 1) as f64;
    let curve_covariates = [Covariate::Recip, Covariate::Alliance, Covariate::GdpReceiver];
    let sample_side = |f: &dyn Fn(Covariate, f64) -> f64, intercept: f64,
                       sender: Array2<f64>, receiver: Array2<f64>| TrueSide {
        intercept,
        curves: curve_covariates
            .iter()
            .map(|&c| (c, periods.iter().map(|&p| f(c, span01(p))).collect()))
            .collect(),
        sender_curves: sender,
        receiver_curves: receiver,
    };
    let re_basis = SplineBasis::new(1.0, config.n_periods as f64, 9, 2, 1)?;
    let formation_truth = sample_side(
        &formation_curve,
        FORMATION_INTERCEPT,
        random_curves(&mut rng, &re_basis, &periods, n, config.re_scale),
        random_curves(&mut rng, &re_basis, &periods, n, config.re_scale),
    );
    let persistence_truth = sample_side(
        &persistence_curve,
        PERSISTENCE_INTERCEPT,
        random_curves(&mut rng, &re_basis, &periods, n, 0.5 * config.re_scale),
        random_curves(&mut rng, &re_basis, &periods, n, 0.5 * config.re_scale),
    );

    // roll the network forward
    let actor_set_at = |p: Period| -> Vec<u32> {
        (0..n as u32).filter(|&a| registry.existent(a, p)).collect()
    };
    let mut networks: Vec<Network> = Vec::with_capacity(periods.len());
    let mut first = Network::empty(actor_set_at(periods[0]));
    for (i, j) in first.clone().dyads() {
        if rng.gen::<f64>() < 0.10 {
            first.set(i, j, true);
        }
    }
    networks.push(first);
    for (step, &t) in periods.iter().enumerate().skip(1) {
        let prev = &networks[step - 1];
        let mut curr = Network::empty(actor_set_at(t));
        let t_idx = step;
        let lag = t - 1;
        for (ci, cj) in curr.clone().dyads() {
            let (gi, gj) = (curr.actors()[ci], curr.actors()[cj]);
            let (pi, pj) = match (prev.local(gi), prev.local(gj)) {
                (Some(a), Some(b)) => (a, b),
                _ => continue, // entrants start without ties
            };
            let recip = if prev.has(pj, pi) { 1.0 } else { 0.0 };
            let alliance = tables.alliance(lag, gi, gj);
            let gdp_j = tables.gdp(lag, gj)?;
            let t01 = span01(t);
            let (truth, re_s, re_r, intercept) = if prev.has(pi, pj) {
                (
                    &persistence_curve as &dyn Fn(Covariate, f64) -> f64,
                    persistence_truth.sender_curves[[gi as usize, t_idx]],
                    persistence_truth.receiver_curves[[gj as usize, t_idx]],
                    PERSISTENCE_INTERCEPT,
                )
            } else {
                (
                    &formation_curve as &dyn Fn(Covariate, f64) -> f64,
                    formation_truth.sender_curves[[gi as usize, t_idx]],
                    formation_truth.receiver_curves[[gj as usize, t_idx]],
                    FORMATION_INTERCEPT,
                )
            };
            let eta = intercept
                + recip * truth(Covariate::Recip, t01)
                + alliance * truth(Covariate::Alliance, t01)
                + gdp_j * truth(Covariate::GdpReceiver, t01)
                + re_s
                + re_r;
            if rng.gen::<f64>() < sigmoid(eta) {
                curr.set(ci, cj, true);
            }
        }
        networks.push(curr);
    }

    // valued flows: each present edge carries a skewed positive volume
    let mut records = Vec::new();
    for (idx, &p) in periods.iter().enumerate() {
        let net = &networks[idx];
        for (i, j) in net.dyads() {
            if net.has(i, j) {
                let z: f64 = rng.sample(rand_distr::StandardNormal);
                let value = (2.19 + 1.3 * z).exp().max(0.02);
                records.push((
                    p,
                    names[net.actors()[i] as usize].clone(),
                    names[net.actors()[j] as usize].clone(),
                    value,
                ));
            }
        }
    }
    let flows = RawFlows::from_records(records)?;

    Ok(SynthOutput {
        config: config.clone(),
        names,
        periods,
        registry,
        covariates,
        flows,
        formation_truth,
        persistence_truth,
    })
}

impl SynthOutput {
    /// Binarize the generated flows into a prepared panel.
    pub fn to_panel(&self, threshold: f64) -> Result<NetworkPanel> {
        binarize(&self.flows, threshold, &self.registry, &self.covariates)?.prepare()
    }

    /// The model family the data were generated from.
    pub fn model_spec(&self) -> ModelSpec {
        ModelSpec {
            variant: Variant::StergmRe,
            terms: vec![
                Term::time_varying(Covariate::Recip),
                Term::time_varying(Covariate::Alliance),
                Term::time_varying(Covariate::GdpReceiver),
                Term::random_smooth(Role::Sender),
                Term::random_smooth(Role::Receiver),
            ],
            include_intercept: true,
            tv_dim: 8,
            tv_degree: 2,
            tv_order: 1,
            re_dim: 9,
            re_degree: 2,
            re_order: 1,
        }
    }

    /// Write the four ingestion CSVs plus the true formation curves, and
    /// return the written paths.
    pub fn write_files(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let mut written = Vec::new();
        let create = |name: &str| -> Result<(std::fs::File, PathBuf)> {
            let path = dir.join(name);
            let file = std::fs::File::create(&path).map_err(|e| Error::Io {
                path: path.display().to_string(),
                source: e,
            })?;
            Ok((file, path))
        };
        let io_err = |path: &Path, e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            source: e,
        };

        let (mut f, path) = create("edges.csv")?;
        writeln!(f, "period,sender,receiver,value").map_err(|e| io_err(&path, e))?;
        for rec in self.flows.records() {
            writeln!(f, "{},{},{},{}", rec.period, rec.sender, rec.receiver, rec.value)
                .map_err(|e| io_err(&path, e))?;
        }
        written.push(path);

        let (mut f, path) = create("monadic.csv")?;
        writeln!(f, "period,actor,gdp,milex,polity").map_err(|e| io_err(&path, e))?;
        for &p in &self.periods {
            for (a, name) in self.names.iter().enumerate() {
                if !self.registry.existent(a as u32, p) {
                    continue;
                }
                let (gdp, milex, polity) = self
                    .covariates
                    .monadic_row(p, name)
                    .expect("generated monadic rows are complete");
                writeln!(f, "{p},{name},{gdp},{milex},{polity}").map_err(|e| io_err(&path, e))?;
            }
        }
        written.push(path);

        let (mut f, path) = create("dyadic.csv")?;
        writeln!(f, "period,actor_i,actor_j,alliance,distance_km").map_err(|e| io_err(&path, e))?;
        for (i, a) in self.names.iter().enumerate() {
            for b in self.names.iter().skip(i + 1) {
                let km = self.covariates.distance_between(a, b).expect("generated");
                for &p in &self.periods {
                    let alliance = if self.covariates.has_alliance(p, a, b) { 1 } else { 0 };
                    writeln!(f, "{p},{a},{b},{alliance},{km}").map_err(|e| io_err(&path, e))?;
                }
            }
        }
        written.push(path);

        let (mut f, path) = create("registry.csv")?;
        writeln!(f, "actor,first,last,predecessor").map_err(|e| io_err(&path, e))?;
        for (a, name) in self.names.iter().enumerate() {
            let (first, last) = self.registry.span(a as u32);
            writeln!(f, "{name},{first},{last},").map_err(|e| io_err(&path, e))?;
        }
        written.push(path);

        let (mut f, path) = create("true_coefficients.csv")?;
        writeln!(f, "side,term,period,value").map_err(|e| io_err(&path, e))?;
        for (side, truth) in [
            ("formation", &self.formation_truth),
            ("persistence", &self.persistence_truth),
        ] {
            for (cov, values) in &truth.curves {
                for (k, &p) in self.periods.iter().enumerate() {
                    writeln!(f, "{side},{},{p},{}", cov.name(), values[k])
                        .map_err(|e| io_err(&path, e))?;
                }
            }
        }
        written.push(path);

        let (mut f, path) = create("true_random_effects.csv")?;
        writeln!(f, "side,role,actor,period,value").map_err(|e| io_err(&path, e))?;
        for (side, truth) in [
            ("formation", &self.formation_truth),
            ("persistence", &self.persistence_truth),
        ] {
            for (role, curves) in [
                ("sender", &truth.sender_curves),
                ("receiver", &truth.receiver_curves),
            ] {
                for (a, name) in self.names.iter().enumerate() {
                    for (k, &p) in self.periods.iter().enumerate() {
                        writeln!(f, "{side},{role},{name},{p},{}", curves[[a, k]])
                            .map_err(|e| io_err(&path, e))?;
                    }
                }
            }
        }
        written.push(path);

        Ok(written)
    }
}
