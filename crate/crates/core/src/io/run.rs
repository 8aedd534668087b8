//! Experiment drivers: `simulate` (drops + metric CSVs + manifest),
//! `profile` (timing/speed-up CSVs), and metric recomputation from stored
//! realizations.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::antenna::AntennaArray;
use crate::channel::{
    bilinear_form, frequency_response, link_geometry, subcarrier_grid,
    SimplificationConfig,
};
use crate::error::{Result, SimError};
use crate::io::config::{ExperimentSpec, MetricKind, ResolvedSpec};
use crate::io::store::{read_drop_record, write_drop_record, DropData};
use crate::metrics::{
    afbw, dbm_to_mw, lcf, narrowband_sinr, singular_value_ratios, svd_beamforming,
    wideband_sir,
};
use crate::profiler::{bootstrap_ci, median, speedup_table, PhaseTimer};
use crate::rng::{Phase, SeedTree};
use crate::scenario::drop_scenario;

/// Fade-statistics threshold grid: -30..=30 dB in 1 dB steps.
pub fn threshold_grid_db() -> Vec<f64> {
    (-30..=30).map(|t| t as f64).collect()
}

// ---------------------------------------------------------------------------
// CSV formatting
// ---------------------------------------------------------------------------

/// dB quantities: 4 decimal places; infinities spelled out.
pub fn fmt_db(value: f64) -> String {
    if value.is_infinite() {
        return if value > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    format!("{value:.4}")
}

/// Times in seconds: 9 decimal places.
pub fn fmt_seconds(value: f64) -> String {
    format!("{value:.9}")
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> Result<()> {
    let mut content = String::with_capacity(header.len() + 1 + 16 * rows.len());
    content.push_str(header);
    content.push('\n');
    for row in rows {
        content.push_str(row);
        content.push('\n');
    }
    std::fs::write(path, content)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

/// Self-contained run description: re-executing from a manifest reproduces
/// byte-identical CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub spec: ExperimentSpec,
    /// Resolved channel parameter file content.
    pub parameter_table: String,
}

impl Manifest {
    pub fn new(resolved: &ResolvedSpec) -> Manifest {
        Manifest {
            version: env!("CARGO_PKG_VERSION").to_string(),
            spec: resolved.spec.clone(),
            parameter_table: resolved.table_text.clone(),
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut json = serde_json::to_string_pretty(self)
            .map_err(|e| SimError::Serialization(e.to_string()))?;
        json.push('\n');
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| SimError::Serialization(e.to_string()))
    }
}

// ---------------------------------------------------------------------------
// Drop generation
// ---------------------------------------------------------------------------

/// Generates one complete drop: deployment, per-gNB scheduling, and every
/// channel realization the enabled metrics need.
pub fn generate_drop(resolved: &ResolvedSpec, drop_index: usize) -> Result<DropData> {
    let scenario = &resolved.spec.scenario;
    let table = &resolved.table;
    let master = SeedTree::new(scenario.seed);
    let tree = master.drop_tree(drop_index as u64);
    let deployment = drop_scenario(scenario, table, &tree)?;
    let wavelength = scenario.wavelength();

    let ue_array = AntennaArray::new(resolved.ue_dims.0, resolved.ue_dims.1, wavelength)?;
    let gnb_arrays: Vec<AntennaArray> = deployment
        .sector_orientations
        .iter()
        .map(|&az| {
            AntennaArray::with_orientation(
                resolved.gnb_dims.0,
                resolved.gnb_dims.1,
                0.5,
                az,
                0.0,
                wavelength,
            )
        })
        .collect::<Result<_>>()?;

    // Full-buffer downlink: each gNB beams toward one uniformly chosen UE
    // among its own attached UEs for the whole drop.
    let num_gnbs = deployment.num_gnbs();
    let mut attached: Vec<Vec<u32>> = vec![Vec::new(); num_gnbs];
    for (ue, &gnb) in deployment.attachment.iter().enumerate() {
        attached[gnb as usize].push(ue as u32);
    }
    let scheduled: Vec<Option<u32>> = (0..num_gnbs)
        .map(|g| {
            let candidates = &attached[g];
            if candidates.is_empty() {
                return None;
            }
            let mut rng = tree.link_stream(g as u32, 0, Phase::Scheduling);
            Some(candidates[rng.random_range(0..candidates.len())])
        })
        .collect();

    // Realizations: every gNB toward every metric UE (serving + cross
    // links), plus each gNB toward its scheduled UE (for its beam).
    let mut pairs: BTreeSet<(u32, u32)> = BTreeSet::new();
    for &ue in &deployment.central_ues() {
        for g in 0..num_gnbs as u32 {
            pairs.insert((g, ue));
        }
    }
    for (g, sched) in scheduled.iter().enumerate() {
        if let Some(ue) = sched {
            pairs.insert((g as u32, *ue));
        }
    }

    let mut data = DropData {
        drop_index,
        deployment,
        scheduled,
        realizations: Default::default(),
    };
    let mut timer = PhaseTimer::disabled();
    for (gnb, ue) in pairs {
        let link = data.deployment.link(gnb, ue);
        let geom = link_geometry(
            &data.deployment.gnb_positions[gnb as usize],
            &data.deployment.ue_positions[ue as usize],
        );
        let realization = crate::channel::generate_link_realization(
            &geom,
            link.state,
            gnb,
            ue,
            &resolved.simplification,
            table,
            scenario.carrier_frequency,
            &gnb_arrays[gnb as usize],
            &ue_array,
            &tree,
            &mut timer,
        )?;
        data.realizations.insert((gnb, ue), realization);
    }
    Ok(data)
}

// ---------------------------------------------------------------------------
// Metric computation
// ---------------------------------------------------------------------------

/// Metric rows for emission, aggregated over every processed drop.
#[derive(Debug, Clone, Default)]
pub struct MetricsOutput {
    /// (drop, ue_id, sinr_db)
    pub sinr: Vec<(usize, u32, f64)>,
    /// (drop, ue_id, subcarrier_hz, sir_db)
    pub sir: Vec<(usize, u32, f64, f64)>,
    /// (threshold_db, mean crossing fraction)
    pub lcf: Vec<(f64, f64)>,
    /// (threshold_db, mean fade width in kHz)
    pub afbw: Vec<(f64, f64)>,
    /// (rank_index, mean normalized singular value)
    pub svr: Vec<(usize, f64)>,
    /// Zero serving matrices excluded from the singular-value average.
    pub svr_excluded: usize,
}

/// Computes every enabled metric from finished drops. Pure with respect to
/// the drop data, so stored realizations reproduce identical output.
pub fn compute_metrics(
    resolved: &ResolvedSpec,
    drops: &[DropData],
    enabled: &[MetricKind],
) -> Result<MetricsOutput> {
    let scenario = &resolved.spec.scenario;
    let want = |k: MetricKind| enabled.contains(&k);
    let need_sir_grid =
        want(MetricKind::Sir) || want(MetricKind::Lcf) || want(MetricKind::Afbw);
    let thresholds = threshold_grid_db();
    let grid = subcarrier_grid(scenario.bandwidth, scenario.subcarrier_spacing);

    let mut out = MetricsOutput::default();
    let mut lcf_sums = vec![0.0f64; thresholds.len()];
    let mut afbw_sums = vec![0.0f64; thresholds.len()];
    let mut fade_samples = 0usize;
    let mut serving_matrices = Vec::new();

    for data in drops {
        let deployment = &data.deployment;
        // Interferer transmit beams, fixed per drop by scheduling.
        let mut tx_beams: Vec<Option<Vec<Complex64>>> =
            vec![None; deployment.num_gnbs()];
        for (g, sched) in data.scheduled.iter().enumerate() {
            if let Some(ue) = sched {
                let h = data.realization(g as u32, *ue)?.narrowband();
                tx_beams[g] = Some(svd_beamforming(&h).tx_weights);
            }
        }

        for &ue in &deployment.central_ues() {
            let serving = deployment.attachment[ue as usize];
            let serving_real = data.realization(serving, ue)?;
            let h_serving = serving_real.narrowband();
            let pair = svd_beamforming(&h_serving);

            if want(MetricKind::Sinr) {
                let mut interferers = Vec::new();
                for (g, beam) in tx_beams.iter().enumerate() {
                    let g = g as u32;
                    if g == serving {
                        continue;
                    }
                    if let Some(beam) = beam {
                        let h = data.realization(g, ue)?.narrowband();
                        let gain = bilinear_form(beam, &h, &pair.rx_weights).norm_sqr();
                        interferers.push((g, gain));
                    }
                }
                let sinr = narrowband_sinr(
                    deployment,
                    ue,
                    pair.gain * pair.gain,
                    &interferers,
                )?;
                out.sinr.push((data.drop_index, ue, sinr));
            }

            if need_sir_grid {
                let amp = |gnb: u32| {
                    dbm_to_mw(
                        scenario.tx_power_dbm - deployment.link(gnb, ue).coupling_loss_db(),
                    )
                    .sqrt()
                };
                let scale = amp(serving);
                let victim: Vec<Complex64> =
                    frequency_response(serving_real, &pair.tx_weights, &pair.rx_weights, &grid)?
                        .into_iter()
                        .map(|c| c * scale)
                        .collect();
                let mut interferer_cfrs = Vec::new();
                for (g, beam) in tx_beams.iter().enumerate() {
                    let g = g as u32;
                    if g == serving {
                        continue;
                    }
                    if let Some(beam) = beam {
                        let scale = amp(g);
                        let cfr: Vec<Complex64> = frequency_response(
                            data.realization(g, ue)?,
                            beam,
                            &pair.rx_weights,
                            &grid,
                        )?
                        .into_iter()
                        .map(|c| c * scale)
                        .collect();
                        interferer_cfrs.push(cfr);
                    }
                }
                let sir = wideband_sir(&victim, &interferer_cfrs, true)?;
                if want(MetricKind::Lcf) || want(MetricKind::Afbw) {
                    fade_samples += 1;
                    for (i, &th) in thresholds.iter().enumerate() {
                        lcf_sums[i] += lcf(&sir, th);
                        afbw_sums[i] += afbw(&sir, th, scenario.subcarrier_spacing);
                    }
                }
                if want(MetricKind::Sir) {
                    for (&f, &value) in grid.iter().zip(&sir) {
                        out.sir.push((data.drop_index, ue, f, value));
                    }
                }
            }

            if want(MetricKind::Svr) {
                serving_matrices.push(h_serving);
            }
        }
    }

    if want(MetricKind::Lcf) && fade_samples > 0 {
        out.lcf = thresholds
            .iter()
            .enumerate()
            .map(|(i, &th)| (th, lcf_sums[i] / fade_samples as f64))
            .collect();
    }
    if want(MetricKind::Afbw) && fade_samples > 0 {
        out.afbw = thresholds
            .iter()
            .enumerate()
            .map(|(i, &th)| (th, afbw_sums[i] / fade_samples as f64))
            .collect();
    }
    if want(MetricKind::Svr) {
        let (mean, excluded) = singular_value_ratios(&serving_matrices);
        out.svr = mean.into_iter().enumerate().collect();
        out.svr_excluded = excluded;
    }
    Ok(out)
}

fn write_metric_csvs(
    dir: &Path,
    enabled: &[MetricKind],
    metrics: &MetricsOutput,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut emit = |name: &str, header: &str, rows: Vec<String>| -> Result<()> {
        let path = dir.join(name);
        write_csv(&path, header, &rows)?;
        written.push(path);
        Ok(())
    };
    for &kind in enabled {
        match kind {
            MetricKind::Sinr => emit(
                "sinr.csv",
                "drop,ue_id,sinr_db",
                metrics
                    .sinr
                    .iter()
                    .map(|(d, u, v)| format!("{d},{u},{}", fmt_db(*v)))
                    .collect(),
            )?,
            MetricKind::Sir => emit(
                "sir.csv",
                "drop,ue_id,subcarrier_hz,sir_db",
                metrics
                    .sir
                    .iter()
                    .map(|(d, u, f, v)| format!("{d},{u},{f:.1},{}", fmt_db(*v)))
                    .collect(),
            )?,
            MetricKind::Lcf => emit(
                "lcf.csv",
                "threshold_db,value",
                metrics
                    .lcf
                    .iter()
                    .map(|(t, v)| format!("{},{v:.6}", fmt_db(*t)))
                    .collect(),
            )?,
            MetricKind::Afbw => emit(
                "afbw.csv",
                "threshold_db,value",
                metrics
                    .afbw
                    .iter()
                    .map(|(t, v)| format!("{},{v:.6}", fmt_db(*t)))
                    .collect(),
            )?,
            MetricKind::Svr => emit(
                "svr.csv",
                "rank_index,mean_ratio",
                metrics
                    .svr
                    .iter()
                    .map(|(r, v)| format!("{r},{v:.6}"))
                    .collect(),
            )?,
        }
    }
    Ok(written)
}

// ---------------------------------------------------------------------------
// Subcommand drivers
// ---------------------------------------------------------------------------

fn drop_record_path(dir: &Path, drop_index: usize) -> PathBuf {
    dir.join(format!("drop_{drop_index:04}.json"))
}

/// Runs all drops and writes manifest.json plus one CSV per enabled metric.
/// Returns the written files.
pub fn run_simulate(resolved: &ResolvedSpec) -> Result<Vec<PathBuf>> {
    let dir = resolved.spec.run.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let realization_dir = dir.join("realizations");
    if resolved.spec.run.save_realizations {
        std::fs::create_dir_all(&realization_dir)?;
    }

    let mut drops = Vec::with_capacity(resolved.spec.run.drops);
    for drop_index in 0..resolved.spec.run.drops {
        let data = generate_drop(resolved, drop_index)?;
        if resolved.spec.run.save_realizations {
            write_drop_record(&drop_record_path(&realization_dir, drop_index), &data)?;
        }
        drops.push(data);
    }

    let enabled = resolved.spec.enabled_metrics();
    let metrics = compute_metrics(resolved, &drops, &enabled)?;
    let mut written = write_metric_csvs(&dir, &enabled, &metrics)?;

    let manifest_path = dir.join("manifest.json");
    Manifest::new(resolved).write(&manifest_path)?;
    written.push(manifest_path);
    Ok(written)
}

/// Recomputes metric CSVs from realizations stored by an earlier
/// `simulate --save-realizations` run.
pub fn run_metrics(input_dir: &Path, output_dir: &Path) -> Result<Vec<PathBuf>> {
    let manifest = Manifest::read(&input_dir.join("manifest.json"))?;
    let resolved = crate::io::config::resolve(&manifest.spec, Some(&manifest.parameter_table))?;
    let realization_dir = input_dir.join("realizations");
    if !realization_dir.is_dir() {
        return Err(SimError::config(format!(
            "{} has no realizations/ directory; rerun simulate with save_realizations",
            input_dir.display()
        )));
    }
    let mut drops = Vec::with_capacity(resolved.spec.run.drops);
    for drop_index in 0..resolved.spec.run.drops {
        drops.push(read_drop_record(&drop_record_path(&realization_dir, drop_index))?);
    }
    std::fs::create_dir_all(output_dir)?;
    let enabled = resolved.spec.enabled_metrics();
    let metrics = compute_metrics(&resolved, &drops, &enabled)?;
    write_metric_csvs(output_dir, &enabled, &metrics)
}

/// Profiling sweep over array sizes for baseline vs the configured
/// simplification. Writes timing.csv and speedup.csv.
pub fn run_profile(
    resolved: &ResolvedSpec,
    ue_sizes: &[usize],
    gnb_sizes: &[usize],
    repetitions: usize,
    warmup: usize,
) -> Result<Vec<PathBuf>> {
    let baseline = SimplificationConfig::baseline();
    let mut candidates = vec![baseline];
    if resolved.simplification != baseline {
        candidates.push(resolved.simplification);
    }
    let rows = speedup_table(
        &resolved.table,
        &baseline,
        &candidates,
        ue_sizes,
        gnb_sizes,
        resolved.spec.scenario.carrier_frequency,
        resolved.spec.scenario.seed,
        repetitions,
        warmup,
    )?;

    let dir = resolved.spec.run.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut ci_rng = SeedTree::new(resolved.spec.scenario.seed).stream(&[0xc1]);

    let mut timing_rows = Vec::new();
    let mut speedup_rows = Vec::new();
    for row in &rows {
        let c = &row.config;
        let prefix = format!(
            "{},{},{},{},{},{}",
            row.ue_elements, row.gnb_elements, c.n_los, c.n_nlos, c.n_o2i, c.m_rays
        );
        for (phase, samples) in [
            ("computations", &row.samples.computations),
            ("random_variables", &row.samples.random_variables),
            ("other", &row.samples.other),
            ("total", &row.samples.total),
        ] {
            let (lo, hi) = bootstrap_ci(samples, &mut ci_rng, 1000, 0.95);
            timing_rows.push(format!(
                "{prefix},{phase},{},{},{},{:.4}",
                fmt_seconds(median(samples)),
                fmt_seconds(lo),
                fmt_seconds(hi),
                row.speedup_vs_baseline
            ));
        }
        speedup_rows.push(format!(
            "{prefix},{},{:.4}",
            fmt_seconds(row.mean_time_s),
            row.speedup_vs_baseline
        ));
    }

    let timing_path = dir.join("timing.csv");
    write_csv(
        &timing_path,
        "ue_elements,gnb_elements,n_los,n_nlos,n_o2i,m_rays,phase,median_s,ci_low_s,ci_high_s,speedup",
        &timing_rows,
    )?;
    let speedup_path = dir.join("speedup.csv");
    write_csv(
        &speedup_path,
        "ue_elements,gnb_elements,n_los,n_nlos,n_o2i,m_rays,mean_time_s,speedup",
        &speedup_rows,
    )?;
    Ok(vec![timing_path, speedup_path])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::config::{parse_config, resolve, Overrides};

    fn tiny_spec(out: &Path) -> ResolvedSpec {
        let overrides = Overrides {
            drops: Some(1),
            clusters: Some("8/8/8".to_string()),
            rays: Some(1),
            ue_ant: Some("1x2".to_string()),
            gnb_ant: Some("2x2".to_string()),
            out: Some(out.to_path_buf()),
            ..Default::default()
        };
        let mut spec = parse_config(None, &overrides).unwrap();
        spec.scenario.num_ues = 30;
        // Few subcarriers keep the wideband grid cheap.
        spec.scenario.bandwidth = 1.2e6;
        resolve(&spec, None).unwrap()
    }

    #[test]
    fn formatting_rules() {
        assert_eq!(fmt_db(1.23456789), "1.2346");
        assert_eq!(fmt_db(f64::INFINITY), "inf");
        assert_eq!(fmt_db(f64::NEG_INFINITY), "-inf");
        assert_eq!(fmt_seconds(0.001234567891), "0.001234568");
    }

    #[test]
    fn threshold_grid_shape() {
        let grid = threshold_grid_db();
        assert_eq!(grid.len(), 61);
        assert_eq!(grid[0], -30.0);
        assert_eq!(grid[60], 30.0);
    }

    #[test]
    fn drop_generation_covers_metric_links() {
        let dir = tempfile::tempdir().unwrap();
        let resolved = tiny_spec(dir.path());
        let data = generate_drop(&resolved, 0).unwrap();
        let num_gnbs = data.deployment.num_gnbs();
        for &ue in &data.deployment.central_ues() {
            for g in 0..num_gnbs as u32 {
                assert!(data.realizations.contains_key(&(g, ue)));
            }
        }
        for (g, sched) in data.scheduled.iter().enumerate() {
            if let Some(ue) = sched {
                assert!(data.realizations.contains_key(&(g as u32, *ue)));
            }
        }
    }

    #[test]
    fn simulate_emits_selected_metrics_only() {
        let dir = tempfile::tempdir().unwrap();
        let mut resolved = tiny_spec(dir.path());
        resolved.spec.run.metrics = vec![MetricKind::Sinr];
        run_simulate(&resolved).unwrap();
        assert!(dir.path().join("sinr.csv").is_file());
        assert!(dir.path().join("manifest.json").is_file());
        assert!(!dir.path().join("sir.csv").exists());
        assert!(!dir.path().join("svr.csv").exists());
    }

    #[test]
    fn simulate_is_deterministic() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        let mut a = tiny_spec(dir_a.path());
        a.spec.run.drops = 2;
        let mut b = tiny_spec(dir_b.path());
        b.spec.run.drops = 2;
        run_simulate(&a).unwrap();
        run_simulate(&b).unwrap();
        for name in ["sinr.csv", "sir.csv", "lcf.csv", "afbw.csv", "svr.csv"] {
            let bytes_a = std::fs::read(dir_a.path().join(name)).unwrap();
            let bytes_b = std::fs::read(dir_b.path().join(name)).unwrap();
            assert_eq!(bytes_a, bytes_b, "{name} differs between identical runs");
        }
    }

    #[test]
    fn metrics_recompute_matches_simulate() {
        let dir = tempfile::tempdir().unwrap();
        let mut resolved = tiny_spec(dir.path());
        resolved.spec.run.save_realizations = true;
        run_simulate(&resolved).unwrap();
        let recompute_dir = tempfile::tempdir().unwrap();
        run_metrics(dir.path(), recompute_dir.path()).unwrap();
        for name in ["sinr.csv", "sir.csv", "lcf.csv", "afbw.csv", "svr.csv"] {
            let original = std::fs::read(dir.path().join(name)).unwrap();
            let recomputed = std::fs::read(recompute_dir.path().join(name)).unwrap();
            assert_eq!(original, recomputed, "{name} differs after recomputation");
        }
    }

    #[test]
    fn manifest_reexecution_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let resolved = tiny_spec(dir.path());
        run_simulate(&resolved).unwrap();
        let manifest = Manifest::read(&dir.path().join("manifest.json")).unwrap();

        let replay_dir = tempfile::tempdir().unwrap();
        let mut spec = manifest.spec.clone();
        spec.run.output_dir = replay_dir.path().to_path_buf();
        let replay = resolve(&spec, Some(&manifest.parameter_table)).unwrap();
        run_simulate(&replay).unwrap();
        for name in ["sinr.csv", "sir.csv", "lcf.csv", "afbw.csv", "svr.csv"] {
            let original = std::fs::read(dir.path().join(name)).unwrap();
            let replayed = std::fs::read(replay_dir.path().join(name)).unwrap();
            assert_eq!(original, replayed, "{name} differs after manifest replay");
        }
    }

    #[test]
    fn profile_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let resolved = tiny_spec(dir.path());
        run_profile(&resolved, &[1], &[1, 4], 10, 2).unwrap();
        let timing = std::fs::read_to_string(dir.path().join("timing.csv")).unwrap();
        // 2 configs x 2 gNB sizes x 4 phases + header.
        assert_eq!(timing.lines().count(), 1 + 2 * 2 * 4);
        let speedup = std::fs::read_to_string(dir.path().join("speedup.csv")).unwrap();
        assert_eq!(speedup.lines().count(), 1 + 2 * 2);
        for line in speedup.lines().skip(1) {
            assert_eq!(line.split(',').count(), 8);
        }
    }
}
