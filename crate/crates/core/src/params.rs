//! Channel parameter table: per-state large-scale statistics, azimuth/zenith
//! scaling constants, and the canonical ray-offset table.
//!
//! The table is loaded from a plain-text file (`key = value` lines grouped in
//! `[LoS]` / `[NLoS]` / `[O2I]` / `[global]` sections) so that normative
//! constants stay out of the code and can be corrected without recompiling.
//! Frequency-dependent entries are `(a, b)` coefficient pairs evaluated as
//! `a + b*log10(fc_GHz)`.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Result, SimError};

/// Propagation state of a link.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum ChannelState {
    Los,
    Nlos,
    O2i,
}

impl fmt::Display for ChannelState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChannelState::Los => write!(f, "LoS"),
            ChannelState::Nlos => write!(f, "NLoS"),
            ChannelState::O2i => write!(f, "O2I"),
        }
    }
}

/// Value of the form `a + b*log10(fc_GHz)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreqDep {
    pub a: f64,
    pub b: f64,
}

impl FreqDep {
    pub const fn constant(a: f64) -> Self {
        FreqDep { a, b: 0.0 }
    }

    pub fn eval(&self, fc_hz: f64) -> f64 {
        self.a + self.b * (fc_hz / 1e9).log10()
    }
}

/// Large-scale statistics for one channel state.
#[derive(Debug, Clone)]
pub struct StateParams {
    pub lg_ds_mu: FreqDep,
    pub lg_ds_sigma: FreqDep,
    pub lg_asa_mu: FreqDep,
    pub lg_asa_sigma: FreqDep,
    pub lg_asd_mu: FreqDep,
    pub lg_asd_sigma: FreqDep,
    pub lg_zsa_mu: FreqDep,
    pub lg_zsa_sigma: FreqDep,
    pub lg_zsd_mu: FreqDep,
    pub lg_zsd_sigma: FreqDep,
    pub k_mu: FreqDep,
    pub k_sigma: FreqDep,
    pub sf_sigma: FreqDep,
    pub r_tau: f64,
    pub zeta: f64,
    pub c_asa: f64,
    pub c_asd: f64,
    pub c_zsa: f64,
    pub c_zsd: f64,
    pub n_default: usize,
}

/// Full parameter table: the three state sections plus global tables.
#[derive(Debug, Clone)]
pub struct ParamTable {
    pub los: StateParams,
    pub nlos: StateParams,
    pub o2i: StateParams,
    /// Azimuth scaling constant per supported cluster count.
    pub c_phi: BTreeMap<usize, f64>,
    /// Zenith scaling constant per supported cluster count.
    pub c_theta: BTreeMap<usize, f64>,
    /// Canonical 20-entry intra-cluster ray offset table.
    pub ray_offsets: [f64; 20],
    /// Polynomial in K (dB), ascending powers, for the LoS delay scaling.
    pub k_delay_scaling: Vec<f64>,
}

/// Raw text of the urban-macro table shipped with the crate.
pub const BUILTIN_UMA_TEXT: &str = include_str!("../data/uma_params.txt");

impl ParamTable {
    /// The urban-macro table shipped with the crate.
    pub fn builtin_uma() -> ParamTable {
        parse(BUILTIN_UMA_TEXT, Path::new("<builtin-uma>"))
            .expect("builtin parameter table must parse")
    }

    /// Parses a table from in-memory text; `label` names the source in
    /// diagnostics.
    pub fn parse_str(text: &str, label: &str) -> Result<ParamTable> {
        parse(text, Path::new(label))
    }

    pub fn load(path: &Path) -> Result<ParamTable> {
        let text = std::fs::read_to_string(path).map_err(|e| SimError::Parameter {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        parse(&text, path)
    }

    pub fn state(&self, state: ChannelState) -> &StateParams {
        match state {
            ChannelState::Los => &self.los,
            ChannelState::Nlos => &self.nlos,
            ChannelState::O2i => &self.o2i,
        }
    }

    /// Azimuth scaling constant for `n` clusters; an unsupported `n` is the
    /// hard limit on cluster reduction and must be rejected.
    pub fn c_phi(&self, n: usize) -> Result<f64> {
        self.c_phi.get(&n).copied().ok_or_else(|| {
            SimError::config(format!(
                "no azimuth scaling constant for N={n} clusters (supported: {:?})",
                self.c_phi.keys().collect::<Vec<_>>()
            ))
        })
    }

    pub fn c_theta(&self, n: usize) -> Result<f64> {
        self.c_theta.get(&n).copied().ok_or_else(|| {
            SimError::config(format!(
                "no zenith scaling constant for N={n} clusters (supported: {:?})",
                self.c_theta.keys().collect::<Vec<_>>()
            ))
        })
    }

    pub fn supported_cluster_counts(&self) -> Vec<usize> {
        self.c_phi
            .keys()
            .filter(|n| self.c_theta.contains_key(n))
            .copied()
            .collect()
    }

    /// LoS delay scaling constant C_tau evaluated at a K-factor in dB.
    pub fn k_delay_scaling(&self, k_db: f64) -> f64 {
        self.k_delay_scaling
            .iter()
            .rev()
            .fold(0.0, |acc, &c| acc * k_db + c)
    }
}

fn perr(path: &Path, line: usize, message: impl Into<String>) -> SimError {
    SimError::Parameter {
        path: path.to_path_buf(),
        message: format!("line {line}: {}", message.into()),
    }
}

fn parse(text: &str, path: &Path) -> Result<ParamTable> {
    let mut sections: BTreeMap<String, BTreeMap<String, (Vec<f64>, usize)>> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(perr(path, line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(name.clone(), BTreeMap::new());
            current = Some(name);
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(path, line_no, format!("expected 'key = value', got '{line}'")))?;
        let section = current
            .as_ref()
            .ok_or_else(|| perr(path, line_no, "key outside any [section]"))?;
        let values: Vec<f64> = value
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|_| perr(path, line_no, format!("invalid number '{tok}'")))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(perr(path, line_no, format!("no value for key '{}'", key.trim())));
        }
        let prev = sections
            .get_mut(section)
            .unwrap()
            .insert(key.trim().to_string(), (values, line_no));
        if prev.is_some() {
            return Err(perr(path, line_no, format!("duplicate key '{}'", key.trim())));
        }
    }

    let mut take_section = |name: &str| -> Result<BTreeMap<String, (Vec<f64>, usize)>> {
        sections.remove(name).ok_or_else(|| SimError::Parameter {
            path: path.to_path_buf(),
            message: format!("missing section [{name}]"),
        })
    };

    let los = parse_state(take_section("LoS")?, path, "LoS")?;
    let nlos = parse_state(take_section("NLoS")?, path, "NLoS")?;
    let o2i = parse_state(take_section("O2I")?, path, "O2I")?;
    let global = take_section("global")?;
    if let Some(name) = sections.keys().next() {
        return Err(SimError::Parameter {
            path: path.to_path_buf(),
            message: format!("unknown section [{name}]"),
        });
    }

    let mut c_phi = BTreeMap::new();
    let mut c_theta = BTreeMap::new();
    let mut ray_offsets: Option<[f64; 20]> = None;
    let mut k_delay_scaling: Option<Vec<f64>> = None;

    for (key, (values, line_no)) in global {
        if let Some(n) = indexed_key(&key, "C_phi") {
            expect_len(&values, 1, path, line_no, &key)?;
            c_phi.insert(n, values[0]);
        } else if let Some(n) = indexed_key(&key, "C_theta") {
            expect_len(&values, 1, path, line_no, &key)?;
            c_theta.insert(n, values[0]);
        } else if key == "ray_offsets[20]" {
            expect_len(&values, 20, path, line_no, &key)?;
            let mut table = [0.0; 20];
            table.copy_from_slice(&values);
            ray_offsets = Some(table);
        } else if key == "K_delay_scaling" {
            k_delay_scaling = Some(values);
        } else {
            return Err(perr(path, line_no, format!("unknown global key '{key}'")));
        }
    }

    Ok(ParamTable {
        los,
        nlos,
        o2i,
        c_phi,
        c_theta,
        ray_offsets: ray_offsets.ok_or_else(|| SimError::Parameter {
            path: path.to_path_buf(),
            message: "missing global key 'ray_offsets[20]'".into(),
        })?,
        k_delay_scaling: k_delay_scaling.ok_or_else(|| SimError::Parameter {
            path: path.to_path_buf(),
            message: "missing global key 'K_delay_scaling'".into(),
        })?,
    })
}

fn indexed_key(key: &str, base: &str) -> Option<usize> {
    key.strip_prefix(base)?
        .strip_prefix('[')?
        .strip_suffix(']')?
        .parse()
        .ok()
}

fn expect_len(values: &[f64], len: usize, path: &Path, line: usize, key: &str) -> Result<()> {
    if values.len() == len {
        Ok(())
    } else {
        Err(perr(
            path,
            line,
            format!("key '{key}' expects {len} value(s), got {}", values.len()),
        ))
    }
}

fn parse_state(
    mut entries: BTreeMap<String, (Vec<f64>, usize)>,
    path: &Path,
    section: &str,
) -> Result<StateParams> {
    let mut freq_dep = |key: &str| -> Result<FreqDep> {
        let (values, line_no) = entries.remove(key).ok_or_else(|| SimError::Parameter {
            path: path.to_path_buf(),
            message: format!("section [{section}]: missing key '{key}'"),
        })?;
        match values.as_slice() {
            [a] => Ok(FreqDep::constant(*a)),
            [a, b] => Ok(FreqDep { a: *a, b: *b }),
            _ => Err(perr(
                path,
                line_no,
                format!("key '{key}' expects 1 or 2 values, got {}", values.len()),
            )),
        }
    };

    let params = StateParams {
        lg_ds_mu: freq_dep("lgDS_mu")?,
        lg_ds_sigma: freq_dep("lgDS_sigma")?,
        lg_asa_mu: freq_dep("lgASA_mu")?,
        lg_asa_sigma: freq_dep("lgASA_sigma")?,
        lg_asd_mu: freq_dep("lgASD_mu")?,
        lg_asd_sigma: freq_dep("lgASD_sigma")?,
        lg_zsa_mu: freq_dep("lgZSA_mu")?,
        lg_zsa_sigma: freq_dep("lgZSA_sigma")?,
        lg_zsd_mu: freq_dep("lgZSD_mu")?,
        lg_zsd_sigma: freq_dep("lgZSD_sigma")?,
        k_mu: freq_dep("K_mu")?,
        k_sigma: freq_dep("K_sigma")?,
        sf_sigma: freq_dep("SF_sigma")?,
        r_tau: freq_dep("r_tau")?.a,
        zeta: freq_dep("zeta")?.a,
        c_asa: freq_dep("c_ASA")?.a,
        c_asd: freq_dep("c_ASD")?.a,
        c_zsa: freq_dep("c_ZSA")?.a,
        c_zsd: freq_dep("c_ZSD")?.a,
        n_default: freq_dep("N_default")?.a as usize,
    };
    if let Some((key, (_, line_no))) = entries.into_iter().next() {
        return Err(perr(path, line_no, format!("unknown key '{key}' in section [{section}]")));
    }
    if params.r_tau <= 1.0 {
        return Err(SimError::Parameter {
            path: path.to_path_buf(),
            message: format!("section [{section}]: r_tau must be > 1"),
        });
    }
    Ok(params)
}

/// Default path of the shipped parameter file, relative to the crate root.
pub fn default_param_path() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data/uma_params.txt"))
}
