//! Model specification, design assembly over transitions, penalized fitting
//! and coefficient-curve extraction.

pub mod pirls;
pub mod reml;

pub use pirls::{pirls_fit, FitResult, PirlsOptions};
pub use reml::{reml_criterion, select_lambdas, SelectOptions};

use std::collections::BTreeMap;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::ActorIdx;
use crate::panel::{ActorRegistry, CovariateTables, NetworkPanel, Period};
use crate::splines::{
    apply_centering_constraint, random_smooth_block, varying_coeff_block, DesignBlock, SplineBasis,
};
use crate::stats::DyadCovariateRow;
use crate::transition::{build_all_transitions, TransitionData, TransitionOptions};

/// Exogenous and lagged-network regressors available to model terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Covariate {
    SenderOutdeg,
    ReceiverOutdeg,
    Recip,
    Trans,
    SharedSup,
    Alliance,
    Poldiff,
    #[serde(rename = "gdp_i")]
    GdpSender,
    #[serde(rename = "gdp_j")]
    GdpReceiver,
    Distance,
    #[serde(rename = "milex_i")]
    MilexSender,
    #[serde(rename = "milex_j")]
    MilexReceiver,
}

impl Covariate {
    pub const ALL: [Covariate; 12] = [
        Covariate::SenderOutdeg,
        Covariate::ReceiverOutdeg,
        Covariate::Recip,
        Covariate::Trans,
        Covariate::SharedSup,
        Covariate::Alliance,
        Covariate::Poldiff,
        Covariate::GdpSender,
        Covariate::GdpReceiver,
        Covariate::Distance,
        Covariate::MilexSender,
        Covariate::MilexReceiver,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Covariate::SenderOutdeg => "sender_outdeg",
            Covariate::ReceiverOutdeg => "receiver_outdeg",
            Covariate::Recip => "recip",
            Covariate::Trans => "trans",
            Covariate::SharedSup => "shared_sup",
            Covariate::Alliance => "alliance",
            Covariate::Poldiff => "poldiff",
            Covariate::GdpSender => "gdp_i",
            Covariate::GdpReceiver => "gdp_j",
            Covariate::Distance => "distance",
            Covariate::MilexSender => "milex_i",
            Covariate::MilexReceiver => "milex_j",
        }
    }

    pub fn extract(&self, row: &DyadCovariateRow) -> f64 {
        match self {
            Covariate::SenderOutdeg => row.sender_outdeg,
            Covariate::ReceiverOutdeg => row.receiver_outdeg,
            Covariate::Recip => row.recip,
            Covariate::Trans => row.trans,
            Covariate::SharedSup => row.shared_sup,
            Covariate::Alliance => row.alliance,
            Covariate::Poldiff => row.poldiff,
            Covariate::GdpSender => row.gdp_i,
            Covariate::GdpReceiver => row.gdp_j,
            Covariate::Distance => row.distance,
            Covariate::MilexSender => row.milex_i,
            Covariate::MilexReceiver => row.milex_j,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Sender,
    Receiver,
}

impl Role {
    pub fn label(&self) -> &'static str {
        match self {
            Role::Sender => "sender_effect",
            Role::Receiver => "receiver_effect",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    Constant,
    TimeVarying,
}

/// One model term: a covariate effect (constant or varying smoothly with
/// time) or a bundle of actor-specific random curves for one role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Term {
    Covariate { covariate: Covariate, kind: TermKind },
    RandomSmooth { role: Role },
}

impl Term {
    pub fn label(&self) -> String {
        match self {
            Term::Covariate { covariate, .. } => covariate.name().to_string(),
            Term::RandomSmooth { role } => role.label().to_string(),
        }
    }

    pub fn time_varying(covariate: Covariate) -> Term {
        Term::Covariate {
            covariate,
            kind: TermKind::TimeVarying,
        }
    }

    pub fn constant(covariate: Covariate) -> Term {
        Term::Covariate {
            covariate,
            kind: TermKind::Constant,
        }
    }

    pub fn random_smooth(role: Role) -> Term {
        Term::RandomSmooth { role }
    }
}

/// The model ladder, ordered by increasing structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Model 1: intercept plus the lagged edge, pooled over all dyads.
    ArErgm,
    /// Model 2: covariates, pooled.
    Tergm,
    /// Model 3: covariates plus random smooths, pooled.
    TergmRe,
    /// Model 4: covariates plus the dyadic stability term, pooled.
    TergmStability,
    /// Model 5: covariates, stability and random smooths, pooled.
    TergmStabilityRe,
    /// Model 6: separable formation/persistence, covariates only.
    Stergm,
    /// Model 7: separable formation/persistence with random smooths.
    StergmRe,
}

impl Variant {
    pub const ALL: [Variant; 7] = [
        Variant::ArErgm,
        Variant::Tergm,
        Variant::TergmRe,
        Variant::TergmStability,
        Variant::TergmStabilityRe,
        Variant::Stergm,
        Variant::StergmRe,
    ];

    /// Pooled variants model all ordered dyads in one equation; separable
    /// variants fit formation and persistence independently.
    pub fn pooled(&self) -> bool {
        !matches!(self, Variant::Stergm | Variant::StergmRe)
    }

    /// Whether the lagged edge enters as a regressor. Separable variants
    /// cannot use it: the lagged edge is constant within each side.
    pub fn has_stability(&self) -> bool {
        matches!(
            self,
            Variant::ArErgm | Variant::TergmStability | Variant::TergmStabilityRe
        )
    }

    pub fn has_random_effects(&self) -> bool {
        matches!(
            self,
            Variant::TergmRe | Variant::TergmStabilityRe | Variant::StergmRe
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Variant::ArErgm => "ar-ergm",
            Variant::Tergm => "tergm",
            Variant::TergmRe => "tergm-re",
            Variant::TergmStability => "tergm-stability",
            Variant::TergmStabilityRe => "tergm-stability-re",
            Variant::Stergm => "stergm",
            Variant::StergmRe => "stergm-re",
        }
    }
}

fn default_true() -> bool {
    true
}
fn default_tv_dim() -> usize {
    65
}
fn default_degree() -> usize {
    2
}
fn default_order() -> usize {
    1
}
fn default_re_dim() -> usize {
    9
}

/// Declarative model specification.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    #[serde(default)]
    pub terms: Vec<Term>,
    #[serde(default = "default_true")]
    pub include_intercept: bool,
    /// Basis dimension for time-varying coefficient smooths.
    #[serde(default = "default_tv_dim")]
    pub tv_dim: usize,
    #[serde(default = "default_degree")]
    pub tv_degree: usize,
    #[serde(default = "default_order")]
    pub tv_order: usize,
    /// Basis dimension for actor random smooths.
    #[serde(default = "default_re_dim")]
    pub re_dim: usize,
    #[serde(default = "default_degree")]
    pub re_degree: usize,
    #[serde(default = "default_order")]
    pub re_order: usize,
}

impl ModelSpec {
    /// The full specification for a variant: every covariate with a
    /// time-varying coefficient, plus sender and receiver random smooths
    /// where the variant carries them.
    pub fn standard(variant: Variant) -> ModelSpec {
        let mut terms = Vec::new();
        if !matches!(variant, Variant::ArErgm) {
            for covariate in Covariate::ALL {
                terms.push(Term::time_varying(covariate));
            }
        }
        if variant.has_random_effects() {
            terms.push(Term::random_smooth(Role::Sender));
            terms.push(Term::random_smooth(Role::Receiver));
        }
        ModelSpec {
            variant,
            terms,
            include_intercept: true,
            tv_dim: default_tv_dim(),
            tv_degree: default_degree(),
            tv_order: default_order(),
            re_dim: default_re_dim(),
            re_degree: default_degree(),
            re_order: default_order(),
        }
    }

    /// Same spec with all time-varying covariate terms demoted to constant
    /// coefficients (the single-step fits of rolling evaluation have no
    /// within-fit time variation to identify a curve from).
    pub fn with_constant_coefficients(mut self) -> ModelSpec {
        for term in &mut self.terms {
            if let Term::Covariate { kind, .. } = term {
                *kind = TermKind::Constant;
            }
        }
        self
    }

    pub fn with_basis_dims(mut self, tv_dim: usize, re_dim: usize) -> ModelSpec {
        self.tv_dim = tv_dim;
        self.re_dim = re_dim;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if matches!(self.variant, Variant::ArErgm) {
            if !self.terms.is_empty() {
                return Err(Error::InvalidSpec(
                    "the autoregressive variant admits only the intercept and the lagged edge"
                        .into(),
                ));
            }
            if !self.include_intercept {
                return Err(Error::InvalidSpec(
                    "the autoregressive variant requires an intercept".into(),
                ));
            }
        }
        let has_re_terms = self
            .terms
            .iter()
            .any(|t| matches!(t, Term::RandomSmooth { .. }));
        if has_re_terms && !self.variant.has_random_effects() {
            return Err(Error::InvalidSpec(format!(
                "variant {} does not carry random smooths",
                self.variant.name()
            )));
        }
        if self.variant.has_random_effects() && !has_re_terms {
            return Err(Error::InvalidSpec(format!(
                "variant {} requires at least one random-smooth term",
                self.variant.name()
            )));
        }
        let mut labels = std::collections::HashSet::new();
        for term in &self.terms {
            let key = match term {
                Term::Covariate { covariate, .. } => covariate.name().to_string(),
                Term::RandomSmooth { role } => role.label().to_string(),
            };
            if !labels.insert(key.clone()) {
                return Err(Error::InvalidSpec(format!("duplicate term {key}")));
            }
        }
        let check_basis = |dim: usize, degree: usize, order: usize, what: &str| -> Result<()> {
            if dim < degree + 1 || order < 1 || dim <= order {
                return Err(Error::InvalidSpec(format!(
                    "{what} basis: dimension {dim}, degree {degree}, penalty order {order} are inconsistent"
                )));
            }
            Ok(())
        };
        let uses_tv = self
            .terms
            .iter()
            .any(|t| matches!(t, Term::Covariate { kind: TermKind::TimeVarying, .. }));
        if uses_tv {
            check_basis(self.tv_dim, self.tv_degree, self.tv_order, "time-varying")?;
        }
        if has_re_terms {
            check_basis(self.re_dim, self.re_degree, self.re_order, "random-smooth")?;
        }
        Ok(())
    }
}

/// Which rows of a transition enter the design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Formation,
    Persistence,
    Pooled,
}

impl Side {
    pub fn label(&self) -> &'static str {
        match self {
            Side::Formation => "formation",
            Side::Persistence => "persistence",
            Side::Pooled => "pooled",
        }
    }
}

/// How one layout entry maps onto design blocks.
#[derive(Debug, Clone)]
pub enum TermBlocks {
    Intercept {
        block: usize,
    },
    Stability {
        block: usize,
    },
    Constant {
        covariate: Covariate,
        block: usize,
    },
    /// A parametric slope column plus a centered smooth; the coefficient
    /// curve is their sum.
    TimeVarying {
        covariate: Covariate,
        companion: usize,
        smooth: usize,
        transform: Array2<f64>,
    },
    RandomSmooth {
        role: Role,
        block: usize,
    },
}

#[derive(Debug, Clone)]
pub struct LayoutEntry {
    pub label: String,
    pub blocks: TermBlocks,
}

/// Everything needed to rebuild design rows for new transitions and to
/// evaluate fitted curves.
#[derive(Debug, Clone)]
pub struct DesignLayout {
    pub side: Side,
    pub entries: Vec<LayoutEntry>,
    pub tv_basis: Option<SplineBasis>,
    pub re_basis: Option<SplineBasis>,
    /// Actor roster backing random-smooth slots, sorted by roster index.
    pub re_actors: Vec<ActorIdx>,
}

/// Identity of one design row.
#[derive(Debug, Clone, Copy)]
pub struct RowMeta {
    pub period: Period,
    pub sender: ActorIdx,
    pub receiver: ActorIdx,
    /// Lagged edge indicator of the dyad.
    pub lag: f64,
}

pub struct AssembledDesign {
    pub response: Vec<f64>,
    pub blocks: Vec<DesignBlock>,
    pub layout: DesignLayout,
    pub meta: Vec<RowMeta>,
}

impl AssembledDesign {
    pub fn n_rows(&self) -> usize {
        self.response.len()
    }

    pub fn n_cols(&self) -> usize {
        self.blocks.iter().map(|b| b.ncols()).sum()
    }
}

/// Stack design rows for the requested side across the given transitions.
pub fn assemble_design(
    transitions: &[TransitionData],
    covariates: &CovariateTables,
    spec: &ModelSpec,
    side: Side,
    time_range: (f64, f64),
) -> Result<AssembledDesign> {
    spec.validate()?;
    if transitions.is_empty() {
        return Err(Error::Design("no transitions to assemble".into()));
    }
    if !covariates.prepared() {
        return Err(Error::Design(
            "covariates must be log-transformed before assembly".into(),
        ));
    }
    if matches!(side, Side::Pooled) != spec.variant.pooled() {
        return Err(Error::InvalidSpec(format!(
            "variant {} cannot be assembled on the {} side",
            spec.variant.name(),
            side.label()
        )));
    }

    let needed: Vec<Covariate> = spec
        .terms
        .iter()
        .filter_map(|t| match t {
            Term::Covariate { covariate, .. } => Some(*covariate),
            _ => None,
        })
        .collect();
    let has_re = spec.variant.has_random_effects();

    // random-smooth roster: union of common actors over the transitions
    let mut re_actors: Vec<ActorIdx> = Vec::new();
    if has_re {
        for td in transitions {
            re_actors.extend_from_slice(&td.actors);
        }
        re_actors.sort_unstable();
        re_actors.dedup();
    }
    let slot_of = |actor: ActorIdx| -> usize {
        re_actors.binary_search(&actor).expect("actor in roster")
    };

    let mut response = Vec::new();
    let mut meta = Vec::new();
    let mut times = Vec::new();
    let mut lag_col = Vec::new();
    let mut cov_cols: BTreeMap<Covariate, Vec<f64>> =
        needed.iter().map(|c| (*c, Vec::new())).collect();
    let mut sender_slots = Vec::new();
    let mut receiver_slots = Vec::new();

    for td in transitions {
        let dyads: Vec<(usize, usize, f64)> = match side {
            Side::Formation => td
                .formation
                .iter()
                .map(|o| (o.i, o.j, o.response))
                .collect(),
            Side::Persistence => td
                .persistence
                .iter()
                .map(|o| (o.i, o.j, o.response))
                .collect(),
            Side::Pooled => td
                .y_prev
                .dyads()
                .map(|(i, j)| (i, j, if td.y_curr.has(i, j) { 1.0 } else { 0.0 }))
                .collect(),
        };
        for (i, j, y) in dyads {
            let row = td.dyad_row(covariates, i, j)?;
            response.push(y);
            times.push(td.period as f64);
            lag_col.push(if td.y_prev.has(i, j) { 1.0 } else { 0.0 });
            for (c, col) in cov_cols.iter_mut() {
                col.push(c.extract(&row));
            }
            if has_re {
                sender_slots.push(slot_of(td.actors[i]));
                receiver_slots.push(slot_of(td.actors[j]));
            }
            meta.push(RowMeta {
                period: td.period,
                sender: td.actors[i],
                receiver: td.actors[j],
                lag: *lag_col.last().unwrap(),
            });
        }
    }
    let n = response.len();
    if n == 0 {
        // an empty side (no formable or no persistable dyads anywhere)
        return Ok(AssembledDesign {
            response,
            blocks: Vec::new(),
            layout: DesignLayout {
                side,
                entries: Vec::new(),
                tv_basis: None,
                re_basis: None,
                re_actors,
            },
            meta,
        });
    }

    let uses_tv = spec
        .terms
        .iter()
        .any(|t| matches!(t, Term::Covariate { kind: TermKind::TimeVarying, .. }));
    let tv_basis = if uses_tv {
        Some(SplineBasis::new(
            time_range.0,
            time_range.1,
            spec.tv_dim,
            spec.tv_degree,
            spec.tv_order,
        )?)
    } else {
        None
    };
    let re_basis = if has_re {
        Some(SplineBasis::new(
            time_range.0,
            time_range.1,
            spec.re_dim,
            spec.re_degree,
            spec.re_order,
        )?)
    } else {
        None
    };

    let mut blocks: Vec<DesignBlock> = Vec::new();
    let mut entries: Vec<LayoutEntry> = Vec::new();
    if spec.include_intercept {
        blocks.push(DesignBlock::column("intercept", &vec![1.0; n]));
        entries.push(LayoutEntry {
            label: "intercept".into(),
            blocks: TermBlocks::Intercept {
                block: blocks.len() - 1,
            },
        });
    }
    if spec.variant.has_stability() {
        blocks.push(DesignBlock::column("stability", &lag_col));
        entries.push(LayoutEntry {
            label: "stability".into(),
            blocks: TermBlocks::Stability {
                block: blocks.len() - 1,
            },
        });
    }
    for term in &spec.terms {
        match term {
            Term::Covariate {
                covariate,
                kind: TermKind::Constant,
            } => {
                blocks.push(DesignBlock::column(covariate.name(), &cov_cols[covariate]));
                entries.push(LayoutEntry {
                    label: covariate.name().into(),
                    blocks: TermBlocks::Constant {
                        covariate: *covariate,
                        block: blocks.len() - 1,
                    },
                });
            }
            Term::Covariate {
                covariate,
                kind: TermKind::TimeVarying,
            } => {
                let basis = tv_basis.as_ref().expect("basis built when needed");
                let raw = varying_coeff_block(
                    &cov_cols[covariate],
                    &times,
                    basis,
                    format!("{}(t)", covariate.name()),
                )?;
                let centered = apply_centering_constraint(&raw).map_err(|e| {
                    Error::Design(format!("term {}: {e}", covariate.name()))
                })?;
                let transform = centered.transform.clone().expect("constraint stores it");
                blocks.push(DesignBlock::column(covariate.name(), &cov_cols[covariate]));
                let companion = blocks.len() - 1;
                blocks.push(centered);
                entries.push(LayoutEntry {
                    label: covariate.name().into(),
                    blocks: TermBlocks::TimeVarying {
                        covariate: *covariate,
                        companion,
                        smooth: blocks.len() - 1,
                        transform,
                    },
                });
            }
            Term::RandomSmooth { role } => {
                let basis = re_basis.as_ref().expect("basis built when needed");
                let slots = match role {
                    Role::Sender => &sender_slots,
                    Role::Receiver => &receiver_slots,
                };
                blocks.push(random_smooth_block(
                    slots,
                    &times,
                    re_actors.len(),
                    basis,
                    role.label(),
                )?);
                entries.push(LayoutEntry {
                    label: role.label().into(),
                    blocks: TermBlocks::RandomSmooth {
                        role: *role,
                        block: blocks.len() - 1,
                    },
                });
            }
        }
    }

    Ok(AssembledDesign {
        response,
        blocks,
        layout: DesignLayout {
            side,
            entries,
            tv_basis,
            re_basis,
            re_actors,
        },
        meta,
    })
}

/// How smoothing parameters are chosen.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum LambdaMode {
    /// Restricted-likelihood selection.
    #[default]
    Select,
    /// User-supplied values, keyed by term label with a fallback default.
    Fixed {
        #[serde(default = "default_lambda")]
        default: f64,
        #[serde(default)]
        per_term: BTreeMap<String, f64>,
    },
}

fn default_lambda() -> f64 {
    1.0
}

#[derive(Debug, Clone, Default)]
pub struct FitSettings {
    pub lambda: LambdaMode,
    pub transition: TransitionOptions,
    pub pirls: PirlsOptions,
    pub select: SelectOptions,
}

/// One fitted side (formation, persistence, or pooled).
#[derive(Debug, Clone)]
pub struct SideFit {
    pub side: Side,
    pub result: FitResult,
    pub layout: DesignLayout,
}

#[derive(Debug, Clone)]
pub enum SideFits {
    Pooled(SideFit),
    Separable {
        formation: Option<SideFit>,
        persistence: Option<SideFit>,
    },
}

/// A fitted model: per-side results plus everything needed to score new
/// transitions and evaluate curves.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub spec: ModelSpec,
    pub fits: SideFits,
    pub time_range: (f64, f64),
    pub registry: ActorRegistry,
    /// Sides that were skipped, with the reason.
    pub diagnostics: Vec<String>,
}

impl FittedModel {
    pub fn side(&self, side: Side) -> Option<&SideFit> {
        match (&self.fits, side) {
            (SideFits::Pooled(f), Side::Pooled) => Some(f),
            (SideFits::Separable { formation, .. }, Side::Formation) => formation.as_ref(),
            (SideFits::Separable { persistence, .. }, Side::Persistence) => persistence.as_ref(),
            _ => None,
        }
    }

    pub fn side_fits(&self) -> Vec<&SideFit> {
        match &self.fits {
            SideFits::Pooled(f) => vec![f],
            SideFits::Separable {
                formation,
                persistence,
            } => formation.iter().chain(persistence.iter()).collect(),
        }
    }
}

fn lambdas_for(blocks: &[DesignBlock], layout: &DesignLayout, mode: &LambdaMode) -> Vec<f64> {
    match mode {
        LambdaMode::Select => unreachable!("selection handled separately"),
        LambdaMode::Fixed { default, per_term } => {
            let mut lambdas = vec![0.0; blocks.len()];
            for entry in &layout.entries {
                match &entry.blocks {
                    TermBlocks::TimeVarying { smooth, .. } => {
                        lambdas[*smooth] = per_term.get(&entry.label).copied().unwrap_or(*default);
                    }
                    TermBlocks::RandomSmooth { block, .. } => {
                        lambdas[*block] = per_term.get(&entry.label).copied().unwrap_or(*default);
                    }
                    _ => {}
                }
            }
            lambdas
        }
    }
}

fn fit_side(
    design: AssembledDesign,
    settings: &FitSettings,
) -> Result<SideFit> {
    let result = match &settings.lambda {
        LambdaMode::Select => {
            let (_lambdas, fit) = select_lambdas(
                &design.response,
                &design.blocks,
                &settings.select,
                &settings.pirls,
            )?;
            fit
        }
        fixed => {
            let lambdas = lambdas_for(&design.blocks, &design.layout, fixed);
            pirls_fit(&design.response, &design.blocks, &lambdas, None, &settings.pirls)?
        }
    };
    Ok(SideFit {
        side: design.layout.side,
        result,
        layout: design.layout,
    })
}

/// Reasons a side cannot be fit on this data.
fn side_skip_reason(design: &AssembledDesign) -> Option<String> {
    let n = design.n_rows();
    let p = design.n_cols();
    let positives = design.response.iter().filter(|&&y| y == 1.0).count();
    if n == 0 {
        Some(format!("{}: no rows", design.layout.side.label()))
    } else if positives == 0 || positives == n {
        Some(format!(
            "{}: single-class response ({positives} of {n} positive)",
            design.layout.side.label()
        ))
    } else if p >= n {
        Some(format!(
            "{}: {p} columns for only {n} rows",
            design.layout.side.label()
        ))
    } else {
        None
    }
}

/// Fit the specified model on the panel. Separable variants produce two
/// independent fits; pooled variants a single one.
pub fn fit_model(
    panel: &NetworkPanel,
    spec: &ModelSpec,
    settings: &FitSettings,
) -> Result<FittedModel> {
    spec.validate()?;
    if panel.periods().len() < 3 {
        return Err(Error::Design(
            "fitting needs a panel with at least 3 periods".into(),
        ));
    }
    let (transitions, skipped) = build_all_transitions(panel, settings.transition)?;
    if transitions.is_empty() {
        return Err(Error::Design("no usable transitions in the panel".into()));
    }
    let mut diagnostics: Vec<String> = skipped
        .iter()
        .map(|p| format!("transition at {p} skipped: too few common actors"))
        .collect();
    let time_range = (
        *panel.periods().first().unwrap() as f64,
        *panel.periods().last().unwrap() as f64,
    );
    fit_transitions(
        &transitions,
        panel.covariates(),
        panel.registry(),
        spec,
        settings,
        time_range,
        diagnostics.drain(..).collect(),
    )
}

/// Fit on an explicit set of transitions (used by rolling evaluation).
pub fn fit_transitions(
    transitions: &[TransitionData],
    covariates: &CovariateTables,
    registry: &ActorRegistry,
    spec: &ModelSpec,
    settings: &FitSettings,
    time_range: (f64, f64),
    mut diagnostics: Vec<String>,
) -> Result<FittedModel> {
    let fits = if spec.variant.pooled() {
        let design = assemble_design(transitions, covariates, spec, Side::Pooled, time_range)?;
        if let Some(reason) = side_skip_reason(&design) {
            return Err(Error::Design(reason));
        }
        SideFits::Pooled(fit_side(design, settings)?)
    } else {
        let mut fit_one = |side: Side| -> Result<Option<SideFit>> {
            let design = assemble_design(transitions, covariates, spec, side, time_range)?;
            if let Some(reason) = side_skip_reason(&design) {
                diagnostics.push(format!("{reason}; side skipped"));
                return Ok(None);
            }
            fit_side(design, settings).map(Some)
        };
        let formation = fit_one(Side::Formation)?;
        let persistence = fit_one(Side::Persistence)?;
        if formation.is_none() && persistence.is_none() {
            return Err(Error::Design(
                "both sides are degenerate on this panel".into(),
            ));
        }
        SideFits::Separable {
            formation,
            persistence,
        }
    };
    Ok(FittedModel {
        spec: spec.clone(),
        fits,
        time_range,
        registry: registry.clone(),
        diagnostics,
    })
}

impl SideFit {
    fn entry(&self, label: &str) -> Result<&LayoutEntry> {
        self.layout
            .entries
            .iter()
            .find(|e| e.label == label)
            .ok_or_else(|| Error::UnknownTerm(label.to_string()))
    }

    fn offsets(&self) -> &[usize] {
        &self.result.block_offsets
    }

    /// Point estimate and standard error of a scalar (non-curve) term.
    pub fn constant_coefficient(&self, label: &str) -> Result<(f64, f64)> {
        let entry = self.entry(label)?;
        let block = match &entry.blocks {
            TermBlocks::Intercept { block }
            | TermBlocks::Stability { block }
            | TermBlocks::Constant { block, .. } => *block,
            _ => return Err(Error::NotACurve(format!("{label} is a curve, not a scalar"))),
        };
        let off = self.offsets()[block];
        let se = self.result.covariance[[off, off]].max(0.0).sqrt();
        Ok((self.result.coefficients[off], se))
    }

    /// Coefficient curve of a time-varying term on a grid, with pointwise
    /// standard errors.
    pub fn coefficient_curve(&self, label: &str, grid: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let entry = self.entry(label)?;
        let TermBlocks::TimeVarying {
            companion,
            smooth,
            transform,
            ..
        } = &entry.blocks
        else {
            return Err(Error::NotACurve(label.to_string()));
        };
        let basis = self
            .layout
            .tv_basis
            .as_ref()
            .ok_or_else(|| Error::NotACurve(label.to_string()))?;
        let (lo, hi) = basis.coverage();
        let comp_off = self.offsets()[*companion];
        let smooth_off = self.offsets()[*smooth];
        let ncols = transform.ncols();
        let gamma = self.result.coefficients[comp_off];
        let mut values = Vec::with_capacity(grid.len());
        let mut ses = Vec::with_capacity(grid.len());
        for &g in grid {
            let (start, bvals) = basis.eval_sparse(g.clamp(lo, hi))?;
            // row of B(g) Z
            let mut bz = vec![0.0; ncols];
            for (col, item) in bz.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (k, &b) in bvals.iter().enumerate() {
                    acc += b * transform[[start + k, col]];
                }
                *item = acc;
            }
            let mut value = gamma;
            for (col, &b) in bz.iter().enumerate() {
                value += b * self.result.coefficients[smooth_off + col];
            }
            values.push(value);
            // variance of gamma + bz . v
            let cov = &self.result.covariance;
            let mut var = cov[[comp_off, comp_off]];
            for (a, &ba) in bz.iter().enumerate() {
                var += 2.0 * ba * cov[[comp_off, smooth_off + a]];
                for (b, &bb) in bz.iter().enumerate() {
                    var += ba * bb * cov[[smooth_off + a, smooth_off + b]];
                }
            }
            ses.push(var.max(0.0).sqrt());
        }
        Ok((values, ses))
    }

    /// Fitted random curve of one actor in one role.
    pub fn actor_curve(
        &self,
        role: Role,
        actor: ActorIdx,
        grid: &[f64],
    ) -> Result<(Vec<f64>, Vec<f64>)> {
        let entry = self
            .layout
            .entries
            .iter()
            .find(|e| matches!(&e.blocks, TermBlocks::RandomSmooth { role: r, .. } if *r == role))
            .ok_or_else(|| Error::UnknownTerm(role.label().to_string()))?;
        let TermBlocks::RandomSmooth { block, .. } = &entry.blocks else {
            unreachable!()
        };
        let basis = self
            .layout
            .re_basis
            .as_ref()
            .ok_or_else(|| Error::UnknownTerm(role.label().to_string()))?;
        let slot = self
            .layout
            .re_actors
            .binary_search(&actor)
            .map_err(|_| Error::UnknownActor(format!("actor #{actor} not in the fit")))?;
        let (lo, hi) = basis.coverage();
        let q = basis.dim();
        let off = self.offsets()[*block] + slot * q;
        let mut values = Vec::with_capacity(grid.len());
        let mut ses = Vec::with_capacity(grid.len());
        for &g in grid {
            let (start, bvals) = basis.eval_sparse(g.clamp(lo, hi))?;
            let mut value = 0.0;
            let mut var = 0.0;
            for (a, &ba) in bvals.iter().enumerate() {
                value += ba * self.result.coefficients[off + start + a];
                for (b, &bb) in bvals.iter().enumerate() {
                    var += ba * bb * self.result.covariance[[off + start + a, off + start + b]];
                }
            }
            values.push(value);
            ses.push(var.max(0.0).sqrt());
        }
        Ok((values, ses))
    }

    /// Probability of each listed dyad of the transition under this fit.
    /// Dyad rows are rebuilt with the stored layout; actors unseen during
    /// fitting contribute no random effect.
    pub fn predict_dyads(
        &self,
        td: &TransitionData,
        covariates: &CovariateTables,
        dyads: &[(usize, usize)],
    ) -> Result<Vec<f64>> {
        let offsets = self.offsets();
        let coefs = &self.result.coefficients;
        let t = td.period as f64;
        let mut probs = Vec::with_capacity(dyads.len());
        for &(i, j) in dyads {
            let row = td.dyad_row(covariates, i, j)?;
            let mut eta = 0.0;
            for entry in &self.layout.entries {
                match &entry.blocks {
                    TermBlocks::Intercept { block } => {
                        eta += coefs[offsets[*block]];
                    }
                    TermBlocks::Stability { block } => {
                        let lag = if td.y_prev.has(i, j) { 1.0 } else { 0.0 };
                        eta += coefs[offsets[*block]] * lag;
                    }
                    TermBlocks::Constant { covariate, block } => {
                        eta += coefs[offsets[*block]] * covariate.extract(&row);
                    }
                    TermBlocks::TimeVarying {
                        covariate,
                        companion,
                        smooth,
                        transform,
                    } => {
                        let basis = self.layout.tv_basis.as_ref().expect("tv basis present");
                        let (lo, hi) = basis.coverage();
                        let (start, bvals) = basis.eval_sparse(t.clamp(lo, hi))?;
                        let mut curve = coefs[offsets[*companion]];
                        for col in 0..transform.ncols() {
                            let mut bz = 0.0;
                            for (k, &b) in bvals.iter().enumerate() {
                                bz += b * transform[[start + k, col]];
                            }
                            curve += bz * coefs[offsets[*smooth] + col];
                        }
                        eta += curve * covariate.extract(&row);
                    }
                    TermBlocks::RandomSmooth { role, block } => {
                        let actor = match role {
                            Role::Sender => td.actors[i],
                            Role::Receiver => td.actors[j],
                        };
                        if let Ok(slot) = self.layout.re_actors.binary_search(&actor) {
                            let basis = self.layout.re_basis.as_ref().expect("re basis present");
                            let (lo, hi) = basis.coverage();
                            let (start, bvals) = basis.eval_sparse(t.clamp(lo, hi))?;
                            let off = offsets[*block] + slot * basis.dim();
                            for (k, &b) in bvals.iter().enumerate() {
                                eta += b * coefs[off + start + k];
                            }
                        }
                    }
                }
            }
            probs.push(pirls::sigmoid(eta));
        }
        Ok(probs)
    }
}
