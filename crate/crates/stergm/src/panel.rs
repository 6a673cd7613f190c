//! Panel ingestion: valued edge lists, actor registry and covariate tables
//! come in as CSV, gaps are imputed, flows are binarized (optionally after
//! time-window aggregation) and everything is exposed as an immutable
//! [`NetworkPanel`].

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ActorIdx, Network};

pub type Period = i32;

/// Column names for the valued edge list.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeSchema {
    pub period: String,
    pub sender: String,
    pub receiver: String,
    pub value: String,
}

impl Default for EdgeSchema {
    fn default() -> Self {
        EdgeSchema {
            period: "period".into(),
            sender: "sender".into(),
            receiver: "receiver".into(),
            value: "value".into(),
        }
    }
}

/// One aggregated valued flow.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub period: Period,
    pub sender: String,
    pub receiver: String,
    pub value: f64,
}

/// Valued flow records with duplicates summed, sorted by (period, sender, receiver).
#[derive(Debug, Clone, Default)]
pub struct RawFlows {
    records: Vec<FlowRecord>,
}

impl RawFlows {
    pub fn from_records(records: Vec<(Period, String, String, f64)>) -> Result<Self> {
        let mut map: BTreeMap<(Period, String, String), f64> = BTreeMap::new();
        for (row, (period, sender, receiver, value)) in records.into_iter().enumerate() {
            if sender == receiver {
                return Err(Error::SelfLoop {
                    row: row + 2,
                    actor: sender,
                });
            }
            if value < 0.0 {
                return Err(Error::NegativeValue { row: row + 2, value });
            }
            *map.entry((period, sender, receiver)).or_insert(0.0) += value;
        }
        Ok(RawFlows {
            records: map
                .into_iter()
                .map(|((period, sender, receiver), value)| FlowRecord {
                    period,
                    sender,
                    receiver,
                    value,
                })
                .collect(),
        })
    }

    pub fn records(&self) -> &[FlowRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

fn open_csv(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Io {
            path: path.display().to_string(),
            source: std::io::Error::new(std::io::ErrorKind::Other, e.to_string()),
        })
}

fn header_index(headers: &csv::StringRecord, name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::Parse {
            path: path.display().to_string(),
            row: 1,
            message: format!("missing column `{name}`"),
        })
}

fn parse_field<T: std::str::FromStr>(
    field: &str,
    what: &str,
    path: &Path,
    row: usize,
) -> Result<T> {
    field.parse::<T>().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        row,
        message: format!("cannot parse {what} from `{field}`"),
    })
}

/// Load a valued edge list. Duplicate (period, sender, receiver) rows are
/// summed; self-loops and negative values are rejected with their row number.
pub fn load_edge_list(path: impl AsRef<Path>, schema: &EdgeSchema) -> Result<RawFlows> {
    let path = path.as_ref();
    let mut reader = open_csv(path)?;
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row: 1,
            message: e.to_string(),
        })?
        .clone();
    let ip = header_index(&headers, &schema.period, path)?;
    let is = header_index(&headers, &schema.sender, path)?;
    let ir = header_index(&headers, &schema.receiver, path)?;
    let iv = header_index(&headers, &schema.value, path)?;
    let mut map: BTreeMap<(Period, String, String), f64> = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2; // header is row 1
        let record = record.map_err(|e| Error::Parse {
            path: path.display().to_string(),
            row,
            message: e.to_string(),
        })?;
        let period: Period = parse_field(&record[ip], "period", path, row)?;
        let sender = record[is].to_string();
        let receiver = record[ir].to_string();
        let value: f64 = parse_field(&record[iv], "value", path, row)?;
        if sender == receiver {
            return Err(Error::SelfLoop { row, actor: sender });
        }
        if value < 0.0 {
            return Err(Error::NegativeValue { row, value });
        }
        *map.entry((period, sender, receiver)).or_insert(0.0) += value;
    }
    Ok(RawFlows {
        records: map
            .into_iter()
            .map(|((period, sender, receiver), value)| FlowRecord {
                period,
                sender,
                receiver,
                value,
            })
            .collect(),
    })
}

/// Actor roster with inclusion spans and optional predecessor states.
#[derive(Debug, Clone)]
pub struct ActorRegistry {
    names: Vec<String>,
    index: HashMap<String, ActorIdx>,
    spans: Vec<(Period, Period)>,
    predecessors: Vec<Option<ActorIdx>>,
}

impl ActorRegistry {
    pub fn new(entries: Vec<(String, Period, Period, Option<String>)>) -> Result<Self> {
        let mut sorted = entries;
        sorted.sort_by(|a, b| a.0.cmp(&b.0));
        let mut names = Vec::with_capacity(sorted.len());
        let mut index = HashMap::new();
        let mut spans = Vec::new();
        for (name, first, last, _) in &sorted {
            if first > last {
                return Err(Error::InvalidCovariate {
                    subject: name.clone(),
                    message: format!("inclusion span {first}-{last} is reversed"),
                });
            }
            if index.insert(name.clone(), names.len() as ActorIdx).is_some() {
                return Err(Error::InvalidCovariate {
                    subject: name.clone(),
                    message: "duplicate registry entry".into(),
                });
            }
            names.push(name.clone());
            spans.push((*first, *last));
        }
        let mut predecessors = vec![None; names.len()];
        for (name, _, _, pred) in &sorted {
            if let Some(pred) = pred {
                let a = index[name.as_str()];
                let p = *index
                    .get(pred.as_str())
                    .ok_or_else(|| Error::UnknownActor(pred.clone()))?;
                predecessors[a as usize] = Some(p);
            }
        }
        // predecessor chains must terminate
        for start in 0..names.len() {
            let mut seen = HashSet::new();
            let mut cur = start;
            while let Some(p) = predecessors[cur] {
                if !seen.insert(p) || p as usize == start {
                    return Err(Error::CyclicPredecessors(names[start].clone()));
                }
                cur = p as usize;
            }
        }
        Ok(ActorRegistry {
            names,
            index,
            spans,
            predecessors,
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = open_csv(path)?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        let ia = header_index(&headers, "actor", path)?;
        let i1 = header_index(&headers, "first", path)?;
        let i2 = header_index(&headers, "last", path)?;
        let ip = header_index(&headers, "predecessor", path)?;
        let mut entries = Vec::new();
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 2;
            let record = record.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row,
                message: e.to_string(),
            })?;
            let first: Period = parse_field(&record[i1], "first period", path, row)?;
            let last: Period = parse_field(&record[i2], "last period", path, row)?;
            let pred = if record[ip].is_empty() {
                None
            } else {
                Some(record[ip].to_string())
            };
            entries.push((record[ia].to_string(), first, last, pred));
        }
        ActorRegistry::new(entries)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn idx(&self, name: &str) -> Option<ActorIdx> {
        self.index.get(name).copied()
    }

    pub fn name(&self, idx: ActorIdx) -> &str {
        &self.names[idx as usize]
    }

    pub fn span(&self, idx: ActorIdx) -> (Period, Period) {
        self.spans[idx as usize]
    }

    pub fn existent(&self, idx: ActorIdx, period: Period) -> bool {
        let (first, last) = self.spans[idx as usize];
        period >= first && period <= last
    }

    pub fn predecessor(&self, idx: ActorIdx) -> Option<ActorIdx> {
        self.predecessors[idx as usize]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    /// Remap inclusion spans onto aggregated window labels. An actor counts
    /// as existent in a window only when it exists in all of its years.
    pub fn map_periods(&self, map: &WindowMap) -> Result<ActorRegistry> {
        let entries = (0..self.names.len())
            .map(|i| {
                let (first, last) = self.spans[i];
                let (wf, wl) = map.span_to_windows(first, last);
                (
                    self.names[i].clone(),
                    wf,
                    wl,
                    self.predecessors[i].map(|p| self.names[p as usize].clone()),
                )
            })
            .filter(|(_, f, l, _)| f <= l)
            .collect();
        ActorRegistry::new(entries)
    }
}

/// Raw covariate tables as loaded from CSV; values may be missing.
#[derive(Debug, Clone, Default)]
pub struct CovariateInput {
    monadic: BTreeMap<(Period, String), [Option<f64>; 3]>, // gdp, milex, polity
    alliance: HashSet<(Period, String, String)>,
    distance: BTreeMap<(String, String), f64>,
}

impl CovariateInput {
    pub fn set_monadic(
        &mut self,
        period: Period,
        actor: &str,
        gdp: Option<f64>,
        milex: Option<f64>,
        polity: Option<f64>,
    ) {
        self.monadic
            .insert((period, actor.to_string()), [gdp, milex, polity]);
    }

    pub fn set_alliance(&mut self, period: Period, a: &str, b: &str) {
        self.alliance.insert((period, a.to_string(), b.to_string()));
    }

    pub fn set_distance(&mut self, a: &str, b: &str, km: f64) {
        self.distance.insert((a.to_string(), b.to_string()), km);
    }

    pub fn load_monadic(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut reader = open_csv(path)?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        let ip = header_index(&headers, "period", path)?;
        let ia = header_index(&headers, "actor", path)?;
        let ig = header_index(&headers, "gdp", path)?;
        let im = header_index(&headers, "milex", path)?;
        let io = header_index(&headers, "polity", path)?;
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 2;
            let record = record.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row,
                message: e.to_string(),
            })?;
            let period: Period = parse_field(&record[ip], "period", path, row)?;
            let actor = record[ia].to_string();
            let opt = |field: &str, what: &str| -> Result<Option<f64>> {
                if field.is_empty() {
                    Ok(None)
                } else {
                    parse_field::<f64>(field, what, path, row).map(Some)
                }
            };
            let gdp = opt(&record[ig], "gdp")?;
            let milex = opt(&record[im], "milex")?;
            let polity = opt(&record[io], "polity")?;
            if let Some(p) = polity {
                if !(-10.0..=10.0).contains(&p) {
                    return Err(Error::InvalidCovariate {
                        subject: actor.clone(),
                        message: format!("polity {p} outside [-10, 10] at row {row}"),
                    });
                }
            }
            if let Some(m) = milex {
                if m < 0.0 {
                    return Err(Error::InvalidCovariate {
                        subject: actor.clone(),
                        message: format!("negative milex {m} at row {row}"),
                    });
                }
            }
            self.monadic.insert((period, actor), [gdp, milex, polity]);
        }
        Ok(())
    }

    pub fn load_dyadic(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut reader = open_csv(path)?;
        let headers = reader
            .headers()
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row: 1,
                message: e.to_string(),
            })?
            .clone();
        let ip = header_index(&headers, "period", path)?;
        let ii = header_index(&headers, "actor_i", path)?;
        let ij = header_index(&headers, "actor_j", path)?;
        let ia = header_index(&headers, "alliance", path)?;
        let id = header_index(&headers, "distance_km", path)?;
        for (idx, record) in reader.records().enumerate() {
            let row = idx + 2;
            let record = record.map_err(|e| Error::Parse {
                path: path.display().to_string(),
                row,
                message: e.to_string(),
            })?;
            let period: Period = parse_field(&record[ip], "period", path, row)?;
            let i = record[ii].to_string();
            let j = record[ij].to_string();
            if !record[ia].is_empty() {
                let alliance: f64 = parse_field(&record[ia], "alliance", path, row)?;
                if alliance != 0.0 && alliance != 1.0 {
                    return Err(Error::Parse {
                        path: path.display().to_string(),
                        row,
                        message: format!("alliance must be 0 or 1, got {alliance}"),
                    });
                }
                if alliance == 1.0 {
                    self.alliance.insert((period, i.clone(), j.clone()));
                }
            }
            if !record[id].is_empty() {
                let km: f64 = parse_field(&record[id], "distance", path, row)?;
                if km <= 0.0 {
                    return Err(Error::InvalidCovariate {
                        subject: format!("{i}-{j}"),
                        message: format!("distance must be positive, got {km}"),
                    });
                }
                let key = canonical_pair(&i, &j);
                if let Some(prev) = self.distance.get(&key) {
                    if (prev - km).abs() > 1e-9 * prev.abs().max(1.0) {
                        return Err(Error::InvalidCovariate {
                            subject: format!("{i}-{j}"),
                            message: format!("conflicting distances {prev} and {km}"),
                        });
                    }
                } else {
                    self.distance.insert(key, km);
                }
            }
        }
        Ok(())
    }

    fn monadic_periods(&self) -> Vec<Period> {
        let mut periods: Vec<Period> = self.monadic.keys().map(|(p, _)| *p).collect();
        periods.sort_unstable();
        periods.dedup();
        periods
    }

    /// Fully observed monadic row, if present.
    pub fn monadic_row(&self, period: Period, actor: &str) -> Option<(f64, f64, f64)> {
        let vals = self.monadic.get(&(period, actor.to_string()))?;
        Some((vals[0]?, vals[1]?, vals[2]?))
    }

    pub fn distance_between(&self, a: &str, b: &str) -> Option<f64> {
        self.distance.get(&canonical_pair(a, b)).copied()
    }

    pub fn has_alliance(&self, period: Period, a: &str, b: &str) -> bool {
        self.alliance.contains(&(period, a.to_string(), b.to_string()))
            || self.alliance.contains(&(period, b.to_string(), a.to_string()))
    }
}

fn canonical_pair(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

/// Fill a gappy series: ends carry the nearest observed value, interior gaps
/// are linearly interpolated between the flanking observations (which for a
/// single gap is the mean of its neighbours).
pub fn impute_series(series: &BTreeMap<Period, Option<f64>>) -> Result<BTreeMap<Period, f64>> {
    let periods: Vec<Period> = series.keys().copied().collect();
    let values: Vec<Option<f64>> = series.values().copied().collect();
    let observed: Vec<usize> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|_| i))
        .collect();
    if observed.is_empty() {
        return Err(Error::AllMissing {
            subject: "series".into(),
        });
    }
    let mut out = BTreeMap::new();
    for (i, &p) in periods.iter().enumerate() {
        let v = if let Some(v) = values[i] {
            v
        } else if i < observed[0] {
            values[observed[0]].unwrap()
        } else if i > *observed.last().unwrap() {
            values[*observed.last().unwrap()].unwrap()
        } else {
            // interior gap: flanking observed indices
            let right = *observed.iter().find(|&&o| o > i).unwrap();
            let left = *observed.iter().rev().find(|&&o| o < i).unwrap();
            let (t0, t1) = (periods[left] as f64, periods[right] as f64);
            let (v0, v1) = (values[left].unwrap(), values[right].unwrap());
            v0 + (v1 - v0) * (periods[i] as f64 - t0) / (t1 - t0)
        };
        out.insert(p, v);
    }
    Ok(out)
}

/// Complete covariate tables over a fixed roster and contiguous period range.
#[derive(Debug, Clone)]
pub struct CovariateTables {
    periods: Vec<Period>,
    n_actors: usize,
    gdp: Vec<f64>,
    milex: Vec<f64>,
    polity: Vec<f64>,
    alliance: HashSet<(Period, ActorIdx, ActorIdx)>,
    distance: HashMap<(ActorIdx, ActorIdx), f64>,
    prepared: bool,
}

impl CovariateTables {
    fn cell(&self, period: Period, actor: ActorIdx) -> Result<usize> {
        let p = self
            .periods
            .binary_search(&period)
            .map_err(|_| Error::UnknownPeriod(period))?;
        Ok(p * self.n_actors + actor as usize)
    }

    fn monadic_value(
        &self,
        table: &[f64],
        name: &str,
        period: Period,
        actor: ActorIdx,
    ) -> Result<f64> {
        let v = table[self.cell(period, actor)?];
        if v.is_nan() {
            return Err(Error::MissingCovariate {
                name: name.into(),
                subject: format!("actor #{actor}"),
                period,
            });
        }
        Ok(v)
    }

    pub fn gdp(&self, period: Period, actor: ActorIdx) -> Result<f64> {
        self.monadic_value(&self.gdp, "gdp", period, actor)
    }

    pub fn milex(&self, period: Period, actor: ActorIdx) -> Result<f64> {
        self.monadic_value(&self.milex, "milex", period, actor)
    }

    pub fn polity(&self, period: Period, actor: ActorIdx) -> Result<f64> {
        self.monadic_value(&self.polity, "polity", period, actor)
    }

    pub fn poldiff(&self, period: Period, i: ActorIdx, j: ActorIdx) -> Result<f64> {
        Ok((self.polity(period, i)? - self.polity(period, j)?).abs())
    }

    pub fn alliance(&self, period: Period, i: ActorIdx, j: ActorIdx) -> f64 {
        if self.alliance.contains(&(period, i, j)) || self.alliance.contains(&(period, j, i)) {
            1.0
        } else {
            0.0
        }
    }

    /// Distance is held constant per dyad and replicated across periods.
    pub fn distance(&self, i: ActorIdx, j: ActorIdx) -> Result<f64> {
        let key = if i <= j { (i, j) } else { (j, i) };
        self.distance
            .get(&key)
            .copied()
            .ok_or_else(|| Error::MissingCovariate {
                name: "distance".into(),
                subject: format!("dyad #{i}-#{j}"),
                period: 0,
            })
    }

    pub fn prepared(&self) -> bool {
        self.prepared
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }
}

/// Replace gdp and distance by their natural logs and milex by log(1 + x).
/// Regime distance stays on the raw polity scale and is derived on demand.
pub fn prepare_covariates(tables: &CovariateTables) -> Result<CovariateTables> {
    if tables.prepared {
        return Err(Error::InvalidCovariate {
            subject: "tables".into(),
            message: "covariates are already log-transformed".into(),
        });
    }
    let mut out = tables.clone();
    for (idx, v) in tables.gdp.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        if *v <= 0.0 {
            let period = tables.periods[idx / tables.n_actors];
            let actor = idx % tables.n_actors;
            return Err(Error::InvalidCovariate {
                subject: format!("actor #{actor}"),
                message: format!("gdp {v} at period {period} is not positive"),
            });
        }
        out.gdp[idx] = v.ln();
    }
    for (idx, v) in tables.milex.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        out.milex[idx] = v.ln_1p();
    }
    for (key, v) in &tables.distance {
        if *v <= 0.0 {
            return Err(Error::InvalidCovariate {
                subject: format!("dyad #{}-#{}", key.0, key.1),
                message: format!("distance {v} is not positive"),
            });
        }
        out.distance.insert(*key, v.ln());
    }
    out.prepared = true;
    Ok(out)
}

/// Ingestion bookkeeping: everything that was silently filtered, with counts.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Provenance {
    pub flow_records: usize,
    pub edges_kept: usize,
    pub dropped_below_threshold: usize,
    pub dropped_nonexistent_actor: usize,
    pub dropped_outside_periods: usize,
    pub actors_dropped_missing_covariates: Vec<String>,
}

/// A validated, immutable panel of binary networks plus covariates.
#[derive(Debug, Clone)]
pub struct NetworkPanel {
    registry: ActorRegistry,
    periods: Vec<Period>,
    networks: Vec<Network>,
    covariates: CovariateTables,
    provenance: Provenance,
}

impl NetworkPanel {
    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn has_period(&self, period: Period) -> bool {
        self.periods.binary_search(&period).is_ok()
    }

    pub fn network(&self, period: Period) -> Result<&Network> {
        let i = self
            .periods
            .binary_search(&period)
            .map_err(|_| Error::UnknownPeriod(period))?;
        Ok(&self.networks[i])
    }

    pub fn registry(&self) -> &ActorRegistry {
        &self.registry
    }

    pub fn covariates(&self) -> &CovariateTables {
        &self.covariates
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Log-transform the stored covariate tables.
    pub fn prepare(mut self) -> Result<Self> {
        self.covariates = prepare_covariates(&self.covariates)?;
        Ok(self)
    }
}

/// Binarize valued flows into a panel of directed networks.
///
/// An edge is present when the summed flow value strictly exceeds the
/// threshold and both actors exist in the period. Actors with an entirely
/// missing covariate series are dropped from every period; remaining gaps
/// are imputed.
pub fn binarize(
    flows: &RawFlows,
    threshold: f64,
    registry: &ActorRegistry,
    covariates: &CovariateInput,
) -> Result<NetworkPanel> {
    if !(threshold >= 0.0) {
        return Err(Error::Config(format!(
            "binarization threshold must be nonnegative, got {threshold}"
        )));
    }
    let periods = covariates.monadic_periods();
    if periods.is_empty() {
        return Err(Error::Config(
            "monadic covariate table is empty; the panel period range is undefined".into(),
        ));
    }
    for w in periods.windows(2) {
        if w[1] != w[0] + 1 {
            return Err(Error::NonContiguousPeriods {
                prev: w[0],
                next: w[1],
            });
        }
    }
    let n_actors = registry.len();
    let n_cells = periods.len() * n_actors;
    let mut gdp = vec![f64::NAN; n_cells];
    let mut milex = vec![f64::NAN; n_cells];
    let mut polity = vec![f64::NAN; n_cells];
    let mut provenance = Provenance {
        flow_records: flows.len(),
        ..Default::default()
    };
    let mut kept = vec![false; n_actors];

    for a in 0..n_actors {
        let idx = a as ActorIdx;
        let existence: Vec<Period> = periods
            .iter()
            .copied()
            .filter(|&p| registry.existent(idx, p))
            .collect();
        if existence.is_empty() {
            continue; // never inside the panel range
        }
        let mut series: [BTreeMap<Period, Option<f64>>; 3] = Default::default();
        for &p in &existence {
            let vals = covariates
                .monadic
                .get(&(p, registry.name(idx).to_string()))
                .copied()
                .unwrap_or([None, None, None]);
            for (s, v) in series.iter_mut().zip(vals) {
                s.insert(p, v);
            }
        }
        let imputed: Vec<_> = series.iter().map(impute_series).collect();
        if imputed.iter().any(|r| r.is_err()) {
            provenance
                .actors_dropped_missing_covariates
                .push(registry.name(idx).to_string());
            continue;
        }
        kept[a] = true;
        for (k, table) in [&mut gdp, &mut milex, &mut polity].into_iter().enumerate() {
            for (&p, &v) in imputed[k].as_ref().unwrap() {
                let cell = (p - periods[0]) as usize * n_actors + a;
                // polity stays an integer score after imputation
                table[cell] = if k == 2 { v.round().clamp(-10.0, 10.0) } else { v };
            }
        }
    }

    // networks per period over kept, existent actors
    let mut networks = Vec::with_capacity(periods.len());
    let mut edge_lookup: Vec<HashMap<(ActorIdx, ActorIdx), f64>> =
        vec![HashMap::new(); periods.len()];
    for rec in flows.records() {
        let Ok(pi) = periods.binary_search(&rec.period) else {
            provenance.dropped_outside_periods += 1;
            continue;
        };
        let (Some(s), Some(r)) = (registry.idx(&rec.sender), registry.idx(&rec.receiver)) else {
            provenance.dropped_nonexistent_actor += 1;
            continue;
        };
        if !registry.existent(s, rec.period)
            || !registry.existent(r, rec.period)
            || !kept[s as usize]
            || !kept[r as usize]
        {
            provenance.dropped_nonexistent_actor += 1;
            continue;
        }
        *edge_lookup[pi].entry((s, r)).or_insert(0.0) += rec.value;
    }
    for (pi, &p) in periods.iter().enumerate() {
        let actors: Vec<ActorIdx> = (0..n_actors as ActorIdx)
            .filter(|&a| kept[a as usize] && registry.existent(a, p))
            .collect();
        let mut net = Network::empty(actors);
        for (&(s, r), &value) in &edge_lookup[pi] {
            if value > threshold {
                let (i, j) = (net.local(s).unwrap(), net.local(r).unwrap());
                net.set(i, j, true);
                provenance.edges_kept += 1;
            } else {
                provenance.dropped_below_threshold += 1;
            }
        }
        networks.push(net);
    }

    // deterministic dyadic resolution against the roster
    let mut alliance = HashSet::new();
    for (p, a, b) in &covariates.alliance {
        if let (Some(i), Some(j)) = (registry.idx(a), registry.idx(b)) {
            alliance.insert((*p, i, j));
        }
    }
    let mut distance = HashMap::new();
    for ((a, b), km) in &covariates.distance {
        if let (Some(i), Some(j)) = (registry.idx(a), registry.idx(b)) {
            let key = if i <= j { (i, j) } else { (j, i) };
            distance.insert(key, *km);
        }
    }

    provenance.actors_dropped_missing_covariates.sort();
    Ok(NetworkPanel {
        registry: registry.clone(),
        periods: periods.clone(),
        networks,
        covariates: CovariateTables {
            periods,
            n_actors,
            gdp,
            milex,
            polity,
            alliance,
            distance,
            prepared: false,
        },
        provenance,
    })
}

/// Mapping from calendar years onto aggregated window labels.
#[derive(Debug, Clone, Copy)]
pub struct WindowMap {
    pub start: Period,
    pub width: usize,
    pub n_windows: usize,
}

impl WindowMap {
    pub fn new(start: Period, end: Period, width: usize) -> Result<Self> {
        if width < 1 {
            return Err(Error::InvalidWindowWidth(width));
        }
        let years = (end - start + 1).max(0) as usize;
        Ok(WindowMap {
            start,
            width,
            n_windows: years / width,
        })
    }

    /// Window label containing `period`, if it is not in a dropped trailing
    /// partial window.
    pub fn window_of(&self, period: Period) -> Option<Period> {
        if period < self.start {
            return None;
        }
        let k = (period - self.start) as usize / self.width;
        (k < self.n_windows).then_some(self.start + k as Period)
    }

    pub fn years_of(&self, window: Period) -> std::ops::RangeInclusive<Period> {
        let k = window - self.start;
        let first = self.start + k * self.width as Period;
        first..=(first + self.width as Period - 1)
    }

    fn span_to_windows(&self, first: Period, last: Period) -> (Period, Period) {
        // existent in a window only if existent in all of its years
        let mut lo = None;
        let mut hi = None;
        for k in 0..self.n_windows {
            let w = self.start + k as Period;
            let years = self.years_of(w);
            if *years.start() >= first && *years.end() <= last {
                if lo.is_none() {
                    lo = Some(w);
                }
                hi = Some(w);
            }
        }
        match (lo, hi) {
            (Some(a), Some(b)) => (a, b),
            _ => (1, 0), // empty span, filtered by the caller
        }
    }
}

/// Combine consecutive years into windows: flow values are summed, continuous
/// covariates averaged over observed years, and binary indicators set only
/// when present in every year of the window. A trailing partial window is
/// dropped.
pub fn aggregate_windows(
    flows: &RawFlows,
    width: usize,
    covariates: &CovariateInput,
) -> Result<(RawFlows, CovariateInput)> {
    if width < 1 {
        return Err(Error::InvalidWindowWidth(width));
    }
    if width == 1 {
        return Ok((flows.clone(), covariates.clone()));
    }
    let periods = covariates.monadic_periods();
    if periods.is_empty() {
        return Err(Error::Config(
            "cannot window-aggregate without a monadic covariate table".into(),
        ));
    }
    let map = WindowMap::new(periods[0], *periods.last().unwrap(), width)?;

    let mut flow_map: BTreeMap<(Period, String, String), f64> = BTreeMap::new();
    for rec in flows.records() {
        if let Some(w) = map.window_of(rec.period) {
            *flow_map
                .entry((w, rec.sender.clone(), rec.receiver.clone()))
                .or_insert(0.0) += rec.value;
        }
    }
    let out_flows = RawFlows {
        records: flow_map
            .into_iter()
            .map(|((period, sender, receiver), value)| FlowRecord {
                period,
                sender,
                receiver,
                value,
            })
            .collect(),
    };

    let mut out_cov = CovariateInput {
        distance: covariates.distance.clone(),
        ..Default::default()
    };
    // continuous monadic covariates: average observed years per window
    let mut acc: BTreeMap<(Period, String), [(f64, usize); 3]> = BTreeMap::new();
    for ((p, actor), vals) in &covariates.monadic {
        let Some(w) = map.window_of(*p) else { continue };
        let entry = acc.entry((w, actor.clone())).or_insert([(0.0, 0); 3]);
        for (slot, v) in entry.iter_mut().zip(vals) {
            if let Some(v) = v {
                slot.0 += v;
                slot.1 += 1;
            }
        }
    }
    for ((w, actor), sums) in acc {
        let mean = |s: (f64, usize)| (s.1 > 0).then(|| s.0 / s.1 as f64);
        out_cov
            .monadic
            .insert((w, actor), [mean(sums[0]), mean(sums[1]), mean(sums[2])]);
    }
    // binary dyadic covariate: present only when present in all window years
    let mut counts: BTreeMap<(Period, String, String), usize> = BTreeMap::new();
    for (p, a, b) in &covariates.alliance {
        if let Some(w) = map.window_of(*p) {
            *counts.entry((w, a.clone(), b.clone())).or_insert(0) += 1;
        }
    }
    for ((w, a, b), count) in counts {
        if count == width {
            out_cov.alliance.insert((w, a, b));
        }
    }
    Ok((out_flows, out_cov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::io::Write;

    fn write_file(dir: &tempfile::TempDir, name: &str, content: &str) -> std::path::PathBuf {
        let path = dir.path().join(name);
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn simple_registry() -> ActorRegistry {
        ActorRegistry::new(vec![
            ("AAA".into(), 1950, 1960, None),
            ("BBB".into(), 1950, 1960, None),
            ("CCC".into(), 1950, 1960, None),
        ])
        .unwrap()
    }

    fn full_covariates(periods: std::ops::RangeInclusive<Period>) -> CovariateInput {
        let mut cov = CovariateInput::default();
        for p in periods {
            for a in ["AAA", "BBB", "CCC"] {
                cov.set_monadic(p, a, Some(100.0), Some(10.0), Some(5.0));
            }
        }
        for (a, b) in [("AAA", "BBB"), ("AAA", "CCC"), ("BBB", "CCC")] {
            cov.set_distance(a, b, 1000.0);
        }
        cov
    }

    #[test]
    fn edge_list_duplicates_are_summed() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "edges.csv",
            "period,sender,receiver,value\n1950,AAA,BBB,1.5\n1950,AAA,BBB,2.5\n1950,BBB,CCC,1.0\n",
        );
        let flows = load_edge_list(&path, &EdgeSchema::default()).unwrap();
        assert_eq!(flows.len(), 2);
        assert_abs_diff_eq!(flows.records()[0].value, 4.0);
    }

    #[test]
    fn empty_edge_list_parses() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(&dir, "edges.csv", "period,sender,receiver,value\n");
        let flows = load_edge_list(&path, &EdgeSchema::default()).unwrap();
        assert!(flows.is_empty());
    }

    #[test]
    fn self_loop_is_rejected_with_row() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "edges.csv",
            "period,sender,receiver,value\n1950,USA,USA,5\n",
        );
        match load_edge_list(&path, &EdgeSchema::default()) {
            Err(Error::SelfLoop { row, actor }) => {
                assert_eq!(row, 2);
                assert_eq!(actor, "USA");
            }
            other => panic!("expected self-loop error, got {other:?}"),
        }
    }

    #[test]
    fn negative_value_and_parse_errors_carry_rows() {
        let dir = tempfile::tempdir().unwrap();
        let bad_value = write_file(
            &dir,
            "neg.csv",
            "period,sender,receiver,value\n1950,AAA,BBB,-2\n",
        );
        assert!(matches!(
            load_edge_list(&bad_value, &EdgeSchema::default()),
            Err(Error::NegativeValue { row: 2, .. })
        ));
        let bad_parse = write_file(
            &dir,
            "parse.csv",
            "period,sender,receiver,value\n1950,AAA,BBB,1\nxyz,AAA,BBB,1\n",
        );
        assert!(matches!(
            load_edge_list(&bad_parse, &EdgeSchema::default()),
            Err(Error::Parse { row: 3, .. })
        ));
    }

    #[test]
    fn binarize_threshold_is_strict() {
        let registry = simple_registry();
        let cov = full_covariates(1950..=1951);
        let flows = RawFlows::from_records(vec![
            (1950, "AAA".into(), "BBB".into(), 0.02),
            (1950, "BBB".into(), "CCC".into(), 3.0),
            (1951, "AAA".into(), "CCC".into(), 3.01),
        ])
        .unwrap();
        let panel = binarize(&flows, 0.0, &registry, &cov).unwrap();
        let net = panel.network(1950).unwrap();
        let (a, b) = (net.local(0).unwrap(), net.local(1).unwrap());
        assert!(net.has(a, b), "0.02 > 0 must be an edge");

        let panel3 = binarize(&flows, 3.0, &registry, &cov).unwrap();
        let net = panel3.network(1950).unwrap();
        assert_eq!(net.edge_count(), 0, "3.0 at threshold 3 is dropped");
        let net = panel3.network(1951).unwrap();
        assert_eq!(net.edge_count(), 1, "3.01 survives threshold 3");
        assert_eq!(panel3.provenance().dropped_below_threshold, 2);
    }

    #[test]
    fn binarize_is_monotone_in_threshold() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let registry = simple_registry();
        let cov = full_covariates(1950..=1955);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut records = Vec::new();
        for p in 1950..=1955 {
            for (s, r) in [("AAA", "BBB"), ("BBB", "AAA"), ("AAA", "CCC"), ("CCC", "BBB")] {
                if rng.gen::<f64>() < 0.8 {
                    records.push((p, s.to_string(), r.to_string(), rng.gen_range(0.0..4.0)));
                }
            }
        }
        let flows = RawFlows::from_records(records).unwrap();
        let thresholds = [0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0];
        let panels: Vec<_> = thresholds
            .iter()
            .map(|&t| binarize(&flows, t, &registry, &cov).unwrap())
            .collect();
        for w in panels.windows(2) {
            for &p in &[1950, 1953, 1955] {
                let hi = w[1].network(p).unwrap();
                let lo = w[0].network(p).unwrap();
                assert!(hi.subset_of(lo), "raising the threshold must never add edges");
            }
        }
    }

    #[test]
    fn actor_with_entirely_missing_series_is_dropped() {
        let registry = simple_registry();
        let mut cov = full_covariates(1950..=1951);
        // CCC loses its milex series entirely
        for p in 1950..=1951 {
            cov.set_monadic(p, "CCC", Some(100.0), None, Some(5.0));
        }
        let flows = RawFlows::from_records(vec![
            (1950, "AAA".into(), "CCC".into(), 1.0),
            (1950, "AAA".into(), "BBB".into(), 1.0),
        ])
        .unwrap();
        let panel = binarize(&flows, 0.0, &registry, &cov).unwrap();
        assert_eq!(
            panel.provenance().actors_dropped_missing_covariates,
            vec!["CCC".to_string()]
        );
        let net = panel.network(1950).unwrap();
        assert_eq!(net.order(), 2);
        assert_eq!(net.edge_count(), 1);
        assert_eq!(panel.provenance().dropped_nonexistent_actor, 1);
    }

    #[test]
    fn impute_series_examples() {
        let series: BTreeMap<Period, Option<f64>> =
            [(1, Some(2.0)), (2, None), (3, Some(4.0))].into_iter().collect();
        let filled = impute_series(&series).unwrap();
        assert_abs_diff_eq!(filled[&2], 3.0);

        let series: BTreeMap<Period, Option<f64>> =
            [(1, None), (2, Some(5.0))].into_iter().collect();
        let filled = impute_series(&series).unwrap();
        assert_abs_diff_eq!(filled[&1], 5.0);

        let series: BTreeMap<Period, Option<f64>> =
            [(1, Some(1.0)), (2, None), (3, None), (4, Some(4.0))]
                .into_iter()
                .collect();
        let filled = impute_series(&series).unwrap();
        assert_abs_diff_eq!(filled[&2], 2.0);
        assert_abs_diff_eq!(filled[&3], 3.0);

        let series: BTreeMap<Period, Option<f64>> =
            [(1, Some(7.0)), (2, None)].into_iter().collect();
        assert_abs_diff_eq!(impute_series(&series).unwrap()[&2], 7.0);

        let all_missing: BTreeMap<Period, Option<f64>> =
            [(1, None), (2, None)].into_iter().collect();
        assert!(matches!(impute_series(&all_missing), Err(Error::AllMissing { .. })));
    }

    #[test]
    fn impute_is_idempotent_and_preserves_observed() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let n = rng.gen_range(2..12);
            let mut series = BTreeMap::new();
            for p in 0..n {
                let v = if rng.gen::<f64>() < 0.4 {
                    None
                } else {
                    Some(rng.gen_range(-5.0..5.0))
                };
                series.insert(p, v);
            }
            if series.values().all(|v| v.is_none()) {
                series.insert(0, Some(1.0));
            }
            let filled = impute_series(&series).unwrap();
            for (p, v) in &series {
                if let Some(v) = v {
                    assert_eq!(filled[p], *v, "observed values must not move");
                }
            }
            let refill: BTreeMap<Period, Option<f64>> =
                filled.iter().map(|(p, v)| (*p, Some(*v))).collect();
            assert_eq!(impute_series(&refill).unwrap(), filled);
        }
    }

    #[test]
    fn custom_edge_schema_maps_columns() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_file(
            &dir,
            "flows.csv",
            "year,from,to,tiv\n1950,AAA,BBB,2.0\n",
        );
        let schema = EdgeSchema {
            period: "year".into(),
            sender: "from".into(),
            receiver: "to".into(),
            value: "tiv".into(),
        };
        let flows = load_edge_list(&path, &schema).unwrap();
        assert_eq!(flows.len(), 1);
        assert!(matches!(
            load_edge_list(&path, &EdgeSchema::default()),
            Err(Error::Parse { row: 1, .. })
        ));
    }

    #[test]
    fn imputed_polity_stays_an_integer_score() {
        let registry = simple_registry();
        let mut cov = full_covariates(1950..=1952);
        // gap at 1951 between polity -3 and -4: the mean -3.5 must round
        cov.set_monadic(1950, "AAA", Some(100.0), Some(1.0), Some(-3.0));
        cov.set_monadic(1951, "AAA", Some(100.0), Some(1.0), None);
        cov.set_monadic(1952, "AAA", Some(100.0), Some(1.0), Some(-4.0));
        let flows = RawFlows::from_records(vec![]).unwrap();
        let panel = binarize(&flows, 0.0, &registry, &cov).unwrap();
        let polity = panel.covariates().polity(1951, 0).unwrap();
        assert_eq!(polity, polity.round());
        assert!((-10.0..=10.0).contains(&polity));
    }

    #[test]
    fn window_aggregation_width_one_is_identity() {
        let cov = full_covariates(1950..=1953);
        let flows = RawFlows::from_records(vec![(1950, "AAA".into(), "BBB".into(), 2.0)]).unwrap();
        let (f2, c2) = aggregate_windows(&flows, 1, &cov).unwrap();
        assert_eq!(f2.records(), flows.records());
        assert_eq!(c2.monadic, cov.monadic);
        assert_eq!(c2.alliance, cov.alliance);
    }

    #[test]
    fn window_aggregation_rules() {
        let mut cov = CovariateInput::default();
        for p in 1950..=1954 {
            cov.set_monadic(p, "AAA", Some(if p == 1950 { 100.0 } else { 200.0 }), Some(1.0), Some(0.0));
            cov.set_monadic(p, "BBB", Some(50.0), Some(1.0), Some(0.0));
        }
        // alliance only in 1950, not 1951: fails the all-years rule for window 0
        cov.set_alliance(1950, "AAA", "BBB");
        cov.set_alliance(1952, "AAA", "BBB");
        cov.set_alliance(1953, "AAA", "BBB");
        let flows = RawFlows::from_records(vec![
            (1950, "AAA".into(), "BBB".into(), 1.0),
            (1951, "AAA".into(), "BBB".into(), 2.0),
            (1954, "AAA".into(), "BBB".into(), 9.0), // trailing partial window
        ])
        .unwrap();
        let (f2, c2) = aggregate_windows(&flows, 2, &cov).unwrap();
        assert_eq!(f2.len(), 1, "trailing partial window must be dropped");
        assert_abs_diff_eq!(f2.records()[0].value, 3.0);
        assert_eq!(f2.records()[0].period, 1950);
        // gdp mean over the window: (100 + 200) / 2
        assert_abs_diff_eq!(c2.monadic[&(1950, "AAA".into())][0].unwrap(), 150.0);
        // alliance (1, 0) over the first window drops out, (1, 1) over the second stays
        assert!(!c2.alliance.contains(&(1950, "AAA".into(), "BBB".into())));
        assert!(c2.alliance.contains(&(1951, "AAA".into(), "BBB".into())));
        assert!(matches!(
            aggregate_windows(&flows, 0, &cov),
            Err(Error::InvalidWindowWidth(0))
        ));
    }

    #[test]
    fn prepare_covariates_applies_logs() {
        let registry = simple_registry();
        let mut cov = full_covariates(1950..=1950);
        cov.set_monadic(1950, "AAA", Some(1.0), Some(0.0), Some(-10.0));
        cov.set_monadic(1950, "BBB", Some(2.0), Some(3.0), Some(10.0));
        let flows = RawFlows::from_records(vec![]).unwrap();
        let panel = binarize(&flows, 0.0, &registry, &cov).unwrap();
        let prepared = prepare_covariates(panel.covariates()).unwrap();
        assert_abs_diff_eq!(prepared.gdp(1950, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(prepared.milex(1950, 0).unwrap(), 0.0);
        assert_abs_diff_eq!(prepared.gdp(1950, 1).unwrap(), 2f64.ln());
        assert_abs_diff_eq!(prepared.poldiff(1950, 0, 1).unwrap(), 20.0);
        assert_abs_diff_eq!(prepared.distance(0, 1).unwrap(), 1000f64.ln());
        assert!(prepare_covariates(&prepared).is_err(), "double prepare must fail");

        let mut bad = full_covariates(1950..=1950);
        bad.set_monadic(1950, "AAA", Some(0.0), Some(0.0), Some(0.0));
        let panel = binarize(&flows, 0.0, &registry, &bad).unwrap();
        assert!(prepare_covariates(panel.covariates()).is_err());
    }

    #[test]
    fn prepared_covariates_are_finite() {
        let registry = simple_registry();
        let cov = full_covariates(1950..=1952);
        let flows = RawFlows::from_records(vec![]).unwrap();
        let panel = binarize(&flows, 0.0, &registry, &cov).unwrap().prepare().unwrap();
        for &p in panel.periods() {
            for a in 0..3 {
                assert!(panel.covariates().gdp(p, a).unwrap().is_finite());
                assert!(panel.covariates().milex(p, a).unwrap().is_finite());
                assert!(panel.covariates().polity(p, a).unwrap().is_finite());
            }
        }
    }

    #[test]
    fn registry_validates_spans_and_predecessors() {
        assert!(ActorRegistry::new(vec![("AAA".into(), 1990, 1950, None)]).is_err());
        assert!(ActorRegistry::new(vec![
            ("AAA".into(), 1950, 1960, Some("BBB".into())),
            ("BBB".into(), 1950, 1960, Some("AAA".into())),
        ])
        .is_err());
        let reg = ActorRegistry::new(vec![
            ("RUS".into(), 1992, 2016, Some("SUN".into())),
            ("SUN".into(), 1950, 1991, None),
        ])
        .unwrap();
        let rus = reg.idx("RUS").unwrap();
        assert_eq!(reg.predecessor(rus), reg.idx("SUN"));
        assert!(!reg.existent(rus, 1991));
        assert!(reg.existent(rus, 1992));
    }
}
