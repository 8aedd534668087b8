//! Experiment specification: TOML configuration file, CLI overrides, and
//! the environment override for the output directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::channel::SimplificationConfig;
use crate::error::{Result, SimError};
use crate::params::ParamTable;
use crate::scenario::ScenarioConfig;

/// Environment variable overriding the output directory (and nothing else).
pub const OUTPUT_DIR_ENV: &str = "MMWAVE_SIM_OUTPUT_DIR";

/// Which per-link metrics a simulate run computes and emits.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Sinr,
    Sir,
    Lcf,
    Afbw,
    Svr,
}

impl MetricKind {
    pub fn all() -> Vec<MetricKind> {
        vec![
            MetricKind::Sinr,
            MetricKind::Sir,
            MetricKind::Lcf,
            MetricKind::Afbw,
            MetricKind::Svr,
        ]
    }

    pub fn parse(name: &str) -> Result<MetricKind> {
        match name {
            "sinr" => Ok(MetricKind::Sinr),
            "sir" => Ok(MetricKind::Sir),
            "lcf" => Ok(MetricKind::Lcf),
            "afbw" => Ok(MetricKind::Afbw),
            "svr" => Ok(MetricKind::Svr),
            other => Err(SimError::config(format!(
                "unknown metric '{other}' (expected sinr, sir, lcf, afbw, or svr)"
            ))),
        }
    }
}

/// `[simplification]` section: cluster counts as "LoS/NLoS/O2I".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimplificationSpec {
    pub clusters: String,
    pub rays: usize,
}

impl Default for SimplificationSpec {
    fn default() -> Self {
        SimplificationSpec { clusters: "12/20/12".to_string(), rays: 20 }
    }
}

impl SimplificationSpec {
    pub fn from_config(config: &SimplificationConfig) -> Self {
        SimplificationSpec {
            clusters: format!("{}/{}/{}", config.n_los, config.n_nlos, config.n_o2i),
            rays: config.m_rays,
        }
    }

    pub fn to_config(&self, table: &ParamTable) -> Result<SimplificationConfig> {
        let parts: Vec<&str> = self.clusters.split('/').collect();
        if parts.len() != 3 {
            return Err(SimError::config(format!(
                "clusters must be 'LoS/NLoS/O2I', got '{}'",
                self.clusters
            )));
        }
        let mut counts = [0usize; 3];
        for (slot, part) in counts.iter_mut().zip(&parts) {
            *slot = part.trim().parse().map_err(|_| {
                SimError::config(format!("invalid cluster count '{part}' in '{}'", self.clusters))
            })?;
        }
        let config = SimplificationConfig {
            n_los: counts[0],
            n_nlos: counts[1],
            n_o2i: counts[2],
            m_rays: self.rays,
        };
        config.validate(table)?;
        Ok(config)
    }
}

/// `[arrays]` section: rectangular array shapes as "ROWSxCOLS".
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ArraySpec {
    pub ue: String,
    pub gnb: String,
}

impl Default for ArraySpec {
    fn default() -> Self {
        ArraySpec { ue: "4x4".to_string(), gnb: "8x8".to_string() }
    }
}

/// Parses "RxC" (also accepting 'X') into (rows, cols).
pub fn parse_array_dims(text: &str) -> Result<(usize, usize)> {
    let normalized = text.to_ascii_lowercase();
    let mut parts = normalized.split('x');
    let parse = |part: Option<&str>| -> Result<usize> {
        let value: usize = part
            .unwrap_or("")
            .trim()
            .parse()
            .map_err(|_| SimError::config(format!("array shape must be 'ROWSxCOLS', got '{text}'")))?;
        if value == 0 {
            return Err(SimError::config(format!("array dimensions must be >= 1, got '{text}'")));
        }
        Ok(value)
    };
    let rows = parse(parts.next())?;
    let cols = parse(parts.next())?;
    if parts.next().is_some() {
        return Err(SimError::config(format!("array shape must be 'ROWSxCOLS', got '{text}'")));
    }
    Ok((rows, cols))
}

/// `[run]` section.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    pub drops: usize,
    pub metrics: Vec<MetricKind>,
    pub output_dir: PathBuf,
    /// Channel parameter file; the built-in urban-macro table when absent.
    pub parameter_file: Option<PathBuf>,
    /// Store per-drop realizations for later `metrics` recomputation.
    pub save_realizations: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            drops: 1,
            metrics: MetricKind::all(),
            output_dir: PathBuf::from("out"),
            parameter_file: None,
            save_realizations: false,
        }
    }
}

/// Fully resolved experiment description; serializes to the configuration
/// file layout and into manifest.json.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    pub simplification: SimplificationSpec,
    pub arrays: ArraySpec,
    pub run: RunSpec,
}

impl ExperimentSpec {
    pub fn to_config_string(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| SimError::Serialization(e.to_string()))
    }

    pub fn from_config_str(text: &str, source: &str) -> Result<ExperimentSpec> {
        toml::from_str(text)
            .map_err(|e| SimError::config(format!("{source}: {}", e.to_string().trim_end())))
    }

    /// Deduplicated metric set in canonical order.
    pub fn enabled_metrics(&self) -> Vec<MetricKind> {
        let mut metrics = self.run.metrics.clone();
        metrics.sort();
        metrics.dedup();
        metrics
    }

    pub fn metric_enabled(&self, kind: MetricKind) -> bool {
        self.run.metrics.contains(&kind)
    }
}

/// CLI flag values that take precedence over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub drops: Option<usize>,
    pub clusters: Option<String>,
    pub rays: Option<usize>,
    pub ue_ant: Option<String>,
    pub gnb_ant: Option<String>,
    pub out: Option<PathBuf>,
    pub metrics: Option<Vec<MetricKind>>,
    pub save_realizations: bool,
}

/// Builds the experiment spec from an optional file plus CLI overrides.
/// Precedence: CLI flag > `MMWAVE_SIM_OUTPUT_DIR` (output dir only) >
/// configuration file > built-in default.
pub fn parse_config(path: Option<&Path>, overrides: &Overrides) -> Result<ExperimentSpec> {
    let mut spec = match path {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            ExperimentSpec::from_config_str(&text, &path.display().to_string())?
        }
        None => ExperimentSpec::default(),
    };
    if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
        spec.run.output_dir = PathBuf::from(dir);
    }
    if let Some(seed) = overrides.seed {
        spec.scenario.seed = seed;
    }
    if let Some(drops) = overrides.drops {
        spec.run.drops = drops;
    }
    if let Some(clusters) = &overrides.clusters {
        spec.simplification.clusters = clusters.clone();
    }
    if let Some(rays) = overrides.rays {
        spec.simplification.rays = rays;
    }
    if let Some(ue) = &overrides.ue_ant {
        spec.arrays.ue = ue.clone();
    }
    if let Some(gnb) = &overrides.gnb_ant {
        spec.arrays.gnb = gnb.clone();
    }
    if let Some(out) = &overrides.out {
        spec.run.output_dir = out.clone();
    }
    if let Some(metrics) = &overrides.metrics {
        spec.run.metrics = metrics.clone();
    }
    if overrides.save_realizations {
        spec.run.save_realizations = true;
    }
    Ok(spec)
}

/// Everything a run needs after the spec has been checked against the
/// parameter table.
#[derive(Debug, Clone)]
pub struct ResolvedSpec {
    pub spec: ExperimentSpec,
    pub table: ParamTable,
    /// Raw parameter file text, embedded into the manifest.
    pub table_text: String,
    pub simplification: SimplificationConfig,
    pub ue_dims: (usize, usize),
    pub gnb_dims: (usize, usize),
}

/// Validates the spec and loads the parameter table. `table_text` (from a
/// manifest) takes precedence over `run.parameter_file`.
pub fn resolve(spec: &ExperimentSpec, table_text: Option<&str>) -> Result<ResolvedSpec> {
    spec.scenario.validate()?;
    if spec.run.drops == 0 {
        return Err(SimError::config("run.drops must be >= 1"));
    }
    let (table, text) = match (table_text, &spec.run.parameter_file) {
        (Some(text), _) => (ParamTable::parse_str(text, "<manifest>")?, text.to_string()),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| SimError::Parameter {
                path: path.clone(),
                message: e.to_string(),
            })?;
            (ParamTable::parse_str(&text, &path.display().to_string())?, text)
        }
        (None, None) => {
            (ParamTable::builtin_uma(), crate::params::BUILTIN_UMA_TEXT.to_string())
        }
    };
    let simplification = spec.simplification.to_config(&table)?;
    let ue_dims = parse_array_dims(&spec.arrays.ue)?;
    let gnb_dims = parse_array_dims(&spec.arrays.gnb)?;
    Ok(ResolvedSpec {
        spec: spec.clone(),
        table,
        table_text: text,
        simplification,
        ue_dims,
        gnb_dims,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_round_trip_identity() {
        let spec = ExperimentSpec::default();
        let text = spec.to_config_string().unwrap();
        let parsed = ExperimentSpec::from_config_str(&text, "test").unwrap();
        assert_eq!(spec, parsed);
    }

    #[test]
    fn empty_file_gives_defaults() {
        let spec = ExperimentSpec::from_config_str("", "test").unwrap();
        assert_eq!(spec, ExperimentSpec::default());
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let err = ExperimentSpec::from_config_str("[scenario]\nbogus_key = 1\n", "test")
            .unwrap_err();
        let message = err.to_string();
        assert!(message.contains("bogus_key"), "{message}");
    }

    #[test]
    fn unsupported_cluster_count_rejected() {
        let table = ParamTable::builtin_uma();
        let spec =
            SimplificationSpec { clusters: "9/9/9".to_string(), rays: 20 };
        assert!(spec.to_config(&table).is_err());
    }

    #[test]
    fn cluster_string_round_trip() {
        let table = ParamTable::builtin_uma();
        let config = SimplificationConfig::most_simplified();
        let spec = SimplificationSpec::from_config(&config);
        assert_eq!(spec.clusters, "8/8/8");
        assert_eq!(spec.to_config(&table).unwrap(), config);
    }

    #[test]
    fn array_dims_parsing() {
        assert_eq!(parse_array_dims("4x4").unwrap(), (4, 4));
        assert_eq!(parse_array_dims("1X16").unwrap(), (1, 16));
        assert!(parse_array_dims("0x4").is_err());
        assert!(parse_array_dims("4").is_err());
        assert!(parse_array_dims("4x4x4").is_err());
    }

    #[test]
    fn overrides_take_precedence() {
        let overrides = Overrides {
            seed: Some(99),
            drops: Some(7),
            clusters: Some("8/8/8".to_string()),
            rays: Some(1),
            ue_ant: Some("2x2".to_string()),
            gnb_ant: Some("4x8".to_string()),
            out: Some(PathBuf::from("elsewhere")),
            metrics: Some(vec![MetricKind::Sinr]),
            save_realizations: true,
        };
        let spec = parse_config(None, &overrides).unwrap();
        assert_eq!(spec.scenario.seed, 99);
        assert_eq!(spec.run.drops, 7);
        assert_eq!(spec.simplification.clusters, "8/8/8");
        assert_eq!(spec.simplification.rays, 1);
        assert_eq!(spec.arrays.ue, "2x2");
        assert_eq!(spec.arrays.gnb, "4x8");
        assert_eq!(spec.run.output_dir, PathBuf::from("elsewhere"));
        assert_eq!(spec.run.metrics, vec![MetricKind::Sinr]);
        assert!(spec.run.save_realizations);
    }

    #[test]
    fn resolve_checks_everything() {
        let spec = ExperimentSpec::default();
        let resolved = resolve(&spec, None).unwrap();
        assert_eq!(resolved.simplification.n_nlos, 20);
        assert_eq!(resolved.ue_dims, (4, 4));
        assert_eq!(resolved.gnb_dims, (8, 8));

        let mut bad = ExperimentSpec::default();
        bad.run.drops = 0;
        assert!(resolve(&bad, None).is_err());
    }
}
