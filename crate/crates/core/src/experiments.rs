//! Monte Carlo sweeps over the scenario parameters, CSV output and the TOML
//! run configuration.
//!
//! Realization `r` of a sweep uses the seed `derive_seed(master_seed, [r])`
//! for every sweep value and variant, so all curves of one run are paired on
//! the same geometry and fading draws.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ao_driver::{
    optimize, optimize_without_ris, AlgorithmConfig, JammerPolicy, OptimizationResult,
};
use crate::channel::{dbm_to_watts, draw_beta, generate_channels, Scenario};
use crate::error::{Error, Result};
use crate::rng::derive_seed;

/// CSV header, in column order.
pub const CSV_HEADER: &str =
    "sweep_var,sweep_value,variant,realization,seed,R_u,R_e,R_s_raw,R_s_clipped,iterations,converged,wall_ms";

/// Realization count used when a sweep does not set one.
pub const DEFAULT_REALIZATIONS: usize = 20;

const REALIZATION_STREAM: u64 = 0x5EED;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SweepVariable {
    #[serde(rename = "P_BS_dBm")]
    PBsDbm,
    K,
    L,
    #[serde(rename = "N_r")]
    Nr,
    /// One row per outer iteration of a single operating point.
    #[serde(rename = "iteration_trace")]
    IterationTrace,
}

impl SweepVariable {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::PBsDbm => "P_BS_dBm",
            Self::K => "K",
            Self::L => "L",
            Self::Nr => "N_r",
            Self::IterationTrace => "iteration_trace",
        }
    }

    fn is_count(self) -> bool {
        matches!(self, Self::K | Self::L | Self::Nr)
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which optimizer produces a row. Declaration order is the row order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    WithJamming,
    WithoutJamming,
    WithoutRis,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Self::WithJamming, Self::WithoutJamming, Self::WithoutRis];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::WithJamming => "with_jamming",
            Self::WithoutJamming => "without_jamming",
            Self::WithoutRis => "without_ris",
        }
    }

    /// Runs this variant on one realized scenario.
    pub fn run(self, s: &Scenario, cfg: &AlgorithmConfig) -> Result<OptimizationResult> {
        let ch = generate_channels(s)?;
        match self {
            Self::WithJamming => optimize(&ch, s, cfg),
            Self::WithoutJamming => {
                let quiet = AlgorithmConfig {
                    jammer: JammerPolicy::Zero,
                    ..cfg.clone()
                };
                optimize(&ch, s, &quiet)
            }
            Self::WithoutRis => optimize_without_ris(&ch, s, cfg),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    /// Strictly increasing. Empty in trace mode, where the outer-iteration
    /// index takes the place of the sweep value.
    pub values: Vec<f64>,
    pub n_realizations: usize,
    pub variants: Vec<Variant>,
    pub master_seed: u64,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_realizations == 0 {
            return Err(Error::invalid("sweep.n_realizations", "must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(Error::invalid(
                "sweep.variants",
                "must name at least one variant",
            ));
        }
        let mut sorted = self.variants.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != self.variants.len() {
            return Err(Error::invalid("sweep.variants", "variants must not repeat"));
        }
        if self.variable == SweepVariable::IterationTrace {
            if !self.values.is_empty() {
                return Err(Error::invalid(
                    "sweep.values",
                    "must be empty for iteration_trace (rows are indexed by outer iteration)",
                ));
            }
            return Ok(());
        }
        if self.values.is_empty() {
            return Err(Error::invalid(
                "sweep.values",
                "must list at least one value",
            ));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("sweep.values", "values must be finite"));
        }
        if self.values.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::invalid(
                "sweep.values",
                "values must be strictly increasing",
            ));
        }
        if self.variable.is_count() && self.values.iter().any(|&v| v < 1.0 || v.fract() != 0.0) {
            return Err(Error::invalid(
                "sweep.values",
                format!("{} values must be positive integers", self.variable),
            ));
        }
        Ok(())
    }

    /// Variants in row order.
    pub fn ordered_variants(&self) -> Vec<Variant> {
        let mut v = self.variants.clone();
        v.sort();
        v
    }

    /// Seed shared by every row of realization `r`.
    pub fn realization_seed(&self, r: usize) -> u64 {
        derive_seed(self.master_seed, &[REALIZATION_STREAM, r as u64])
    }

    /// Realized scenario for one sweep value and realization: the swept
    /// parameter is applied to `base`, then the seed and bearing are redrawn.
    pub fn scenario(&self, base: &Scenario, value: Option<f64>, r: usize) -> Scenario {
        let mut s = base.clone();
        if let Some(x) = value {
            match self.variable {
                SweepVariable::PBsDbm => s.p_bs = dbm_to_watts(x),
                SweepVariable::K => s.bs_antennas = x as usize,
                SweepVariable::L => s.ris_elements = x as usize,
                SweepVariable::Nr => s.eve_rx_antennas = x as usize,
                SweepVariable::IterationTrace => {}
            }
        }
        s.seed = self.realization_seed(r);
        s.beta = draw_beta(s.seed);
        s
    }
}

/// One CSV line.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub sweep_var: SweepVariable,
    /// Swept value, or the outer-iteration index in trace mode.
    pub sweep_value: f64,
    pub variant: Variant,
    pub realization: usize,
    pub seed: u64,
    pub r_u: f64,
    pub r_e: f64,
    pub r_s_raw: f64,
    pub r_s_clipped: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
}

/// Execution knobs that do not change results.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses the global pool.
    pub jobs: Option<usize>,
    /// Record wall times in the rows. Off by default so that reruns produce
    /// identical bytes.
    pub record_wall_time: bool,
}

fn rows_for(
    spec: &SweepSpec,
    result: &OptimizationResult,
    value: Option<f64>,
    variant: Variant,
    r: usize,
    seed: u64,
    wall_ms: f64,
) -> Vec<ResultRow> {
    let row = |sweep_value: f64, r_u: f64, r_e: f64, r_s: f64, wall_ms: f64| ResultRow {
        sweep_var: spec.variable,
        sweep_value,
        variant,
        realization: r,
        seed,
        r_u,
        r_e,
        r_s_raw: r_s,
        r_s_clipped: r_s.max(0.0),
        iterations: result.trace.iterations_used,
        converged: result.trace.converged,
        wall_ms,
    };
    match value {
        Some(x) => vec![row(
            x,
            result.rates.user,
            result.rates.eve,
            result.rates.raw,
            wall_ms,
        )],
        None => result
            .trace
            .records
            .iter()
            .map(|rec| {
                row(
                    rec.iteration as f64,
                    rec.user_rate,
                    rec.eve_rate,
                    rec.secrecy_rate,
                    rec.wall_ms,
                )
            })
            .collect(),
    }
}

/// Runs every `(value, variant, realization)` triple and returns the rows
/// ordered by that triple, independent of scheduling.
pub fn run_sweep(
    spec: &SweepSpec,
    base: &Scenario,
    cfg: &AlgorithmConfig,
    opts: &RunOptions,
) -> Result<Vec<ResultRow>> {
    spec.validate()?;
    cfg.validate()?;
    base.validate()?;
    let values: Vec<Option<f64>> = if spec.variable == SweepVariable::IterationTrace {
        vec![None]
    } else {
        spec.values.iter().copied().map(Some).collect()
    };
    let mut tasks = Vec::new();
    for &value in &values {
        for variant in spec.ordered_variants() {
            for r in 0..spec.n_realizations {
                tasks.push((value, variant, r));
            }
        }
    }
    let work = || -> Result<Vec<Vec<ResultRow>>> {
        tasks
            .par_iter()
            .map(|&(value, variant, r)| {
                let s = spec.scenario(base, value, r);
                let start = Instant::now();
                let result = variant.run(&s, cfg)?;
                let ms = start.elapsed().as_secs_f64() * 1e3;
                let mut rows = rows_for(spec, &result, value, variant, r, s.seed, ms);
                if !opts.record_wall_time {
                    rows.iter_mut().for_each(|row| row.wall_ms = 0.0);
                }
                Ok(rows)
            })
            .collect()
    };
    let nested = match opts.jobs {
        Some(n) => {
            if n == 0 {
                return Err(Error::invalid("jobs", "must be at least 1"));
            }
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("thread pool: {e}")))?
                .install(work)?
        }
        None => work()?,
    };
    Ok(nested.into_iter().flatten().collect())
}

/// Writes `rows` as CSV to any sink.
pub fn write_csv<W: Write>(rows: &[ResultRow], sink: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink);
    let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER.split(',')).map_err(csv_err)?;
    for row in rows {
        w.write_record([
            row.sweep_var.as_str().to_string(),
            row.sweep_value.to_string(),
            row.variant.as_str().to_string(),
            row.realization.to_string(),
            row.seed.to_string(),
            row.r_u.to_string(),
            row.r_e.to_string(),
            row.r_s_raw.to_string(),
            row.r_s_clipped.to_string(),
            row.iterations.to_string(),
            row.converged.to_string(),
            row.wall_ms.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(Error::invalid("rows", "nothing to write"));
    }
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

/// Full-scale setup of one figure: `2` sweeps the BS power, `3` the BS
/// antenna count, `4` the RIS size and `5` traces the outer iterations.
pub fn figure_preset(n: u8) -> Result<(SweepSpec, Scenario)> {
    let scenario = |k: usize, l: usize| Scenario {
        bs_antennas: k,
        ris_elements: l,
        p_bs: dbm_to_watts(30.0),
        ..Scenario::default()
    };
    let sweep = |variable, values: &[f64], variants: &[Variant]| SweepSpec {
        variable,
        values: values.to_vec(),
        n_realizations: DEFAULT_REALIZATIONS,
        variants: variants.to_vec(),
        master_seed: 0,
    };
    Ok(match n {
        2 => (
            sweep(
                SweepVariable::PBsDbm,
                &[10.0, 15.0, 20.0, 25.0, 30.0],
                &Variant::ALL,
            ),
            scenario(3, 36),
        ),
        3 => (
            sweep(SweepVariable::K, &[2.0, 3.0, 4.0, 5.0, 6.0], &Variant::ALL),
            scenario(3, 36),
        ),
        4 => (
            sweep(
                SweepVariable::L,
                &[4.0, 8.0, 16.0, 24.0, 36.0],
                &Variant::ALL,
            ),
            scenario(3, 36),
        ),
        5 => (
            sweep(SweepVariable::IterationTrace, &[], &[Variant::WithJamming]),
            scenario(3, 36),
        ),
        _ => {
            return Err(Error::invalid(
                "preset",
                format!("expected 2, 3, 4 or 5, got {n}"),
            ))
        }
    })
}

/// Fully resolved run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    /// Base scenario; `seed` and `beta` are replaced per realization.
    pub scenario: Scenario,
    pub algorithm: AlgorithmConfig,
    pub sweep: SweepSpec,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ConfigOverrides {
    pub preset: Option<u8>,
    pub seed: Option<u64>,
}

const TOP_LEVEL_KEYS: [&str; 5] = ["seed", "preset", "scenario", "algorithm", "sweep"];

fn kind(v: &toml::Value) -> &'static str {
    match v {
        toml::Value::String(_) => "string",
        toml::Value::Integer(_) => "integer",
        toml::Value::Float(_) => "float",
        toml::Value::Boolean(_) => "boolean",
        toml::Value::Datetime(_) => "datetime",
        toml::Value::Array(_) => "array",
        toml::Value::Table(_) => "table",
    }
}

/// Checks `user` key by key against the fully populated `template`, widening
/// integers to floats where a float is expected, and overlays it.
fn overlay(template: &mut toml::Table, user: toml::Table, prefix: &str) -> Result<()> {
    for (key, value) in user {
        let path = format!("{prefix}.{key}");
        let Some(slot) = template.get_mut(&key) else {
            return Err(Error::invalid(path, "unknown key"));
        };
        *slot = conform(slot, value, &path)?;
    }
    Ok(())
}

fn conform(expected: &mut toml::Value, value: toml::Value, path: &str) -> Result<toml::Value> {
    use toml::Value as V;
    Ok(match (expected, value) {
        (V::Float(_), V::Integer(i)) => V::Float(i as f64),
        (V::Table(t), V::Table(u)) => {
            let mut merged = t.clone();
            overlay(&mut merged, u, path)?;
            V::Table(merged)
        }
        (V::Array(a), V::Array(items)) => {
            let mut out = Vec::with_capacity(items.len());
            for (i, item) in items.into_iter().enumerate() {
                out.push(match a.first_mut() {
                    Some(e) => conform(e, item, &format!("{path}[{i}]"))?,
                    None => item,
                });
            }
            V::Array(out)
        }
        (e, v) if kind(e) == kind(&v) => v,
        (e, v) => {
            return Err(Error::invalid(
                path,
                format!("expected {}, got {}", kind(e), kind(&v)),
            ))
        }
    })
}

fn to_table<T: Serialize>(x: &T) -> toml::Table {
    toml::Table::try_from(x).expect("config types serialize to a TOML table")
}

fn from_table<T: for<'de> Deserialize<'de>>(t: toml::Table, section: &str) -> Result<T> {
    t.try_into()
        .map_err(|e: toml::de::Error| Error::invalid(section, e.message().trim().to_string()))
}

fn take_section(doc: &mut toml::Table, key: &str) -> Result<toml::Table> {
    match doc.remove(key) {
        None => Ok(toml::Table::new()),
        Some(toml::Value::Table(t)) => Ok(t),
        Some(v) => Err(Error::invalid(
            key,
            format!("expected table, got {}", kind(&v)),
        )),
    }
}

/// Resolves configuration text: preset defaults first, then the file, then
/// `overrides`. Every error names the offending key.
pub fn parse_config(text: &str, overrides: ConfigOverrides) -> Result<RunConfig> {
    let mut doc: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string().trim().to_string()))?;
    if let Some(key) = doc.keys().find(|k| !TOP_LEVEL_KEYS.contains(&k.as_str())) {
        return Err(Error::invalid(key.clone(), "unknown key"));
    }
    let seed = match (overrides.seed, doc.remove("seed")) {
        (Some(s), _) => s,
        (None, Some(toml::Value::Integer(s))) if s >= 0 => s as u64,
        (None, Some(v)) => {
            return Err(Error::invalid(
                "seed",
                format!("expected non-negative integer, got {v}"),
            ))
        }
        (None, None) => return Err(Error::invalid("seed", "missing required key")),
    };
    let preset = match (overrides.preset, doc.remove("preset")) {
        (Some(p), _) => Some(p),
        (None, Some(toml::Value::Integer(p))) => {
            Some(u8::try_from(p).map_err(|_| Error::invalid("preset", "expected 2, 3, 4 or 5"))?)
        }
        (None, Some(v)) => {
            return Err(Error::invalid(
                "preset",
                format!("expected integer, got {}", kind(&v)),
            ))
        }
        (None, None) => None,
    };
    let user_scenario = take_section(&mut doc, "scenario")?;
    let user_algorithm = take_section(&mut doc, "algorithm")?;
    let user_sweep = take_section(&mut doc, "sweep")?;

    let (base_sweep, base_scenario) = match preset {
        Some(n) => {
            let (sweep, scenario) = figure_preset(n)?;
            (Some(sweep), scenario)
        }
        None => (None, Scenario::default()),
    };

    for key in ["seed", "beta"] {
        if user_scenario.contains_key(key) {
            return Err(Error::invalid(
                format!("scenario.{key}"),
                "drawn per realization; set the top-level seed instead",
            ));
        }
    }
    let mut scenario = to_table(&base_scenario);
    overlay(&mut scenario, user_scenario, "scenario")?;
    let scenario: Scenario = from_table(scenario, "scenario")?;

    let mut algorithm = to_table(&AlgorithmConfig::default());
    overlay(&mut algorithm, user_algorithm, "algorithm")?;
    let algorithm: AlgorithmConfig = from_table(algorithm, "algorithm")?;

    if user_sweep.contains_key("master_seed") {
        return Err(Error::invalid(
            "sweep.master_seed",
            "use the top-level seed",
        ));
    }
    if base_sweep.is_none() {
        for key in ["variable", "values"] {
            if !user_sweep.contains_key(key) {
                return Err(Error::invalid(
                    format!("sweep.{key}"),
                    "missing required key (or set a preset)",
                ));
            }
        }
    }
    let template = base_sweep.unwrap_or_else(|| SweepSpec {
        variable: SweepVariable::PBsDbm,
        values: vec![0.0],
        n_realizations: DEFAULT_REALIZATIONS,
        variants: Variant::ALL.to_vec(),
        master_seed: 0,
    });
    let mut sweep_table = to_table(&template);
    overlay(&mut sweep_table, user_sweep, "sweep")?;
    let mut sweep: SweepSpec = from_table(sweep_table, "sweep")?;
    sweep.master_seed = seed;

    let cfg = RunConfig {
        scenario,
        algorithm,
        sweep,
    };
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: ConfigOverrides) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text, overrides)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate().map_err(|e| match e {
            Error::InvalidParameter { key, message } => {
                Error::invalid(format!("scenario.{key}"), message)
            }
            other => other,
        })?;
        self.algorithm.validate().map_err(|e| match e {
            Error::InvalidParameter { key, message } => {
                Error::invalid(format!("algorithm.{key}"), message)
            }
            other => other,
        })?;
        self.sweep.validate()?;
        if self.sweep.master_seed > i64::MAX as u64 {
            return Err(Error::invalid(
                "seed",
                "must fit in a signed 64-bit integer",
            ));
        }
        Ok(())
    }

    /// Complete TOML document that reloads to an equal configuration.
    pub fn to_toml(&self) -> String {
        let mut scenario = to_table(&self.scenario);
        scenario.remove("seed");
        scenario.remove("beta");
        let mut sweep = to_table(&self.sweep);
        sweep.remove("master_seed");
        let mut doc = toml::Table::new();
        doc.insert(
            "seed".into(),
            toml::Value::Integer(self.sweep.master_seed as i64),
        );
        doc.insert("scenario".into(), toml::Value::Table(scenario));
        doc.insert(
            "algorithm".into(),
            toml::Value::Table(to_table(&self.algorithm)),
        );
        doc.insert("sweep".into(), toml::Value::Table(sweep));
        toml::to_string(&doc).expect("TOML tables serialize")
    }

    pub fn run(&self, opts: &RunOptions) -> Result<Vec<ResultRow>> {
        run_sweep(&self.sweep, &self.scenario, &self.algorithm, opts)
    }
}

/// Contents of the JSON file written next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub crate_name: &'static str,
    pub crate_version: &'static str,
    pub rows: usize,
    pub jobs: Option<usize>,
    pub elapsed_ms: f64,
    /// The effective configuration, defaults included.
    pub config_toml: String,
    pub scenario: Scenario,
    pub algorithm: AlgorithmConfig,
    pub sweep: SweepSpec,
}

impl RunMetadata {
    pub fn new(cfg: &RunConfig, rows: usize, jobs: Option<usize>, elapsed_ms: f64) -> Self {
        Self {
            crate_name: env!("CARGO_PKG_NAME"),
            crate_version: env!("CARGO_PKG_VERSION"),
            rows,
            jobs,
            elapsed_ms,
            config_toml: cfg.to_toml(),
            scenario: cfg.scenario.clone(),
            algorithm: cfg.algorithm.clone(),
            sweep: cfg.sweep.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }
}

/// Sidecar path for a CSV path: `results.csv` gives `results.meta.json`.
pub fn metadata_path(csv: &Path) -> std::path::PathBuf {
    csv.with_extension("meta.json")
}
