//! Experiment configuration: a TOML file, defaults for every key, and
//! `--section.key value` overrides applied on top.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::Value;

use nfcrb::experiment::{log_space, noise_from_snr_db, seed_list, Scenario};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArraySection,
    pub ofdm: OfdmSection,
    pub paths: Vec<PathEntry>,
    pub noise: NoiseSection,
    pub combiner: CombinerSection,
    pub snapshots: SnapshotSection,
    pub sweep: SweepSection,
    pub output: OutputSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            array: ArraySection::default(),
            ofdm: OfdmSection::default(),
            paths: vec![PathEntry::default()],
            noise: NoiseSection::default(),
            combiner: CombinerSection::default(),
            snapshots: SnapshotSection::default(),
            sweep: SweepSection::default(),
            output: OutputSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ArraySection {
    #[serde(rename = "M")]
    pub elements: usize,
    pub f_c_hz: f64,
}

impl Default for ArraySection {
    fn default() -> Self {
        Self { elements: 256, f_c_hz: 28e9 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OfdmSection {
    pub delta_f_hz: f64,
    #[serde(rename = "B_hz")]
    pub bandwidth_hz: f64,
    /// Explicit bandwidth list for `sweep-bw`; log-spaced from the sweep
    /// section when absent.
    #[serde(rename = "B_sweep", skip_serializing_if = "Option::is_none")]
    pub bandwidth_sweep_hz: Option<Vec<f64>>,
    #[serde(rename = "Ks_max")]
    pub max_selected: usize,
}

impl Default for OfdmSection {
    fn default() -> Self {
        Self { delta_f_hz: 120e3, bandwidth_hz: 400e6, bandwidth_sweep_hz: None, max_selected: 512 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct PathEntry {
    pub theta_deg: f64,
    pub r_m: f64,
    pub p: f64,
}

impl Default for PathEntry {
    fn default() -> Self {
        Self { theta_deg: 40.0, r_m: 5.0, p: 1.0 }
    }
}

/// Exactly one of `snr_db` and `N_0` is used; `N_0` wins when both are set.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub snr_db: f64,
    #[serde(rename = "N_0", skip_serializing_if = "Option::is_none")]
    pub noise_power: Option<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { snr_db: 10.0, noise_power: None }
    }
}

impl NoiseSection {
    pub fn resolve(&self) -> f64 {
        self.noise_power.unwrap_or_else(|| noise_from_snr_db(self.snr_db))
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum CombinerChoice {
    Random,
    Identity,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct CombinerSection {
    pub kind: CombinerChoice,
    #[serde(rename = "N_RF")]
    pub rf_chains: usize,
    #[serde(rename = "N_RF_sweep")]
    pub rf_chains_sweep: Vec<usize>,
    /// First seed; the seed list is `seed, seed + 1, …` unless given.
    pub seed: u64,
    /// Number of seeds averaged by the multi-seed commands.
    pub seeds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed_list: Option<Vec<u64>>,
}

impl Default for CombinerSection {
    fn default() -> Self {
        Self {
            kind: CombinerChoice::Random,
            rf_chains: 16,
            rf_chains_sweep: vec![4, 8, 16, 32, 64],
            seed: 1,
            seeds: 10,
            seed_list: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SnapshotSection {
    #[serde(rename = "N")]
    pub count: usize,
}

impl Default for SnapshotSection {
    fn default() -> Self {
        Self { count: 64 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub range_list_m: Option<Vec<f64>>,
    pub range_min_m: f64,
    pub range_max_m: f64,
    pub range_points: usize,
    pub bandwidth_min_hz: f64,
    pub bandwidth_max_hz: f64,
    pub bandwidth_points: usize,
    pub mismatch_bandwidths_hz: Vec<f64>,
    pub mismatch_range_points: usize,
    /// Optional vertical marker on the range plot.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ebrd_m: Option<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            range_list_m: None,
            range_min_m: 1.0,
            range_max_m: 100.0,
            range_points: 20,
            bandwidth_min_hz: 50e6,
            bandwidth_max_hz: 800e6,
            bandwidth_points: 16,
            mismatch_bandwidths_hz: vec![100e6, 400e6, 800e6],
            mismatch_range_points: 60,
            ebrd_m: None,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq, Hash, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: "out".into(), formats: vec![Format::Csv, Format::Json, Format::Svg] }
    }
}

impl ExperimentConfig {
    /// Reads `path` (if any), applies dotted overrides in order, and checks
    /// the result.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self, CliError> {
        let mut tree = match Value::try_from(Self::default()) {
            Ok(Value::Table(t)) => t,
            _ => unreachable!("default config serializes to a table"),
        };
        if let Some(p) = path {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
            let file = text.parse::<toml::Table>().map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            merge(&mut tree, file);
        }
        for (key, raw) in overrides {
            set_dotted(&mut tree, key, parse_value(raw))?;
        }
        let cfg: Self = Value::Table(tree).try_into().map_err(|e: toml::de::Error| CliError::Usage(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Usage(m));
        if self.paths.is_empty() {
            return bad("at least one path is required".into());
        }
        if self.combiner.seeds == 0 && self.combiner.seed_list.as_ref().map_or(true, |l| l.is_empty()) {
            return bad("combiner.seeds must be at least 1".into());
        }
        if self.snapshots.count == 0 {
            return bad("snapshots.N must be at least 1".into());
        }
        if self.output.formats.is_empty() {
            return bad("output.formats is empty".into());
        }
        if self.sweep.range_points == 0 || self.sweep.bandwidth_points == 0 || self.sweep.mismatch_range_points == 0 {
            return bad("sweep point counts must be positive".into());
        }
        Ok(())
    }

    pub fn seeds(&self) -> Vec<u64> {
        match &self.combiner.seed_list {
            Some(list) if !list.is_empty() => list.clone(),
            _ => seed_list(self.combiner.seed, self.combiner.seeds),
        }
    }

    pub fn scenario(&self) -> Scenario {
        Scenario {
            elements: self.array.elements,
            carrier_hz: self.array.f_c_hz,
            spacing_hz: self.ofdm.delta_f_hz,
            bandwidth_hz: self.ofdm.bandwidth_hz,
            max_selected: self.ofdm.max_selected,
            theta_rad: self.paths.iter().map(|p| p.theta_deg.to_radians()).collect(),
            range_m: self.paths.iter().map(|p| p.r_m).collect(),
            power: self.paths.iter().map(|p| p.p).collect(),
            noise: self.noise.resolve(),
            rf_chains: self.combiner.rf_chains,
            identity_combiner: self.combiner.kind == CombinerChoice::Identity,
            snapshots: self.snapshots.count,
        }
    }

    pub fn ranges(&self) -> Vec<f64> {
        match &self.sweep.range_list_m {
            Some(list) => list.clone(),
            None => log_space(self.sweep.range_min_m, self.sweep.range_max_m, self.sweep.range_points),
        }
    }

    pub fn bandwidths(&self) -> Vec<f64> {
        match &self.ofdm.bandwidth_sweep_hz {
            Some(list) => list.clone(),
            None => log_space(self.sweep.bandwidth_min_hz, self.sweep.bandwidth_max_hz, self.sweep.bandwidth_points),
        }
    }

    pub fn wants(&self, f: Format) -> bool {
        self.output.formats.contains(&f)
    }
}

/// Tables merge key by key; anything else (including lists) is replaced.
fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// TOML scalar or array if it parses as one, a bare string otherwise.
fn parse_value(raw: &str) -> Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_dotted(root: &mut toml::Table, key: &str, value: Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("malformed override key `{key}`")));
    }
    let mut table = root;
    for (i, part) in parts[..parts.len() - 1].iter().enumerate() {
        let next = parts[i + 1];
        let slot = table.entry(part.to_string()).or_insert_with(|| Value::Table(toml::Table::new()));
        table = match slot {
            Value::Table(t) => t,
            // `paths.0.r_m` addresses an element of an array of tables.
            Value::Array(items) => {
                let idx: usize = next
                    .parse()
                    .map_err(|_| CliError::Usage(format!("`{key}`: `{part}` is a list, expected an index after it")))?;
                if idx >= items.len() {
                    items.resize(idx + 1, Value::Table(toml::Table::new()));
                }
                match &mut items[idx] {
                    Value::Table(t) if i + 2 < parts.len() => return set_dotted(t, &parts[i + 2..].join("."), value),
                    _ => return Err(CliError::Usage(format!("`{key}` must name a field inside the list element"))),
                }
            }
            _ => return Err(CliError::Usage(format!("`{key}`: `{part}` is not a section"))),
        };
    }
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

/// Splits `--section.key value` and `--section.key=value` out of `args`.
/// Everything else is returned untouched for the argument parser.
pub fn extract_overrides(args: Vec<String>) -> Result<(Vec<String>, Vec<(String, String)>), CliError> {
    let mut rest = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter();
    while let Some(arg) = it.next() {
        let dotted = arg.strip_prefix("--").filter(|k| k.split('=').next().is_some_and(|name| name.contains('.')));
        match dotted {
            Some(body) => {
                let (key, value) = match body.split_once('=') {
                    Some((k, v)) => (k.to_string(), v.to_string()),
                    None => {
                        let v = it.next().ok_or_else(|| CliError::Usage(format!("--{body} needs a value")))?;
                        (body.to_string(), v)
                    }
                };
                overrides.push((key, value));
            }
            None => rest.push(arg),
        }
    }
    Ok((rest, overrides))
}
