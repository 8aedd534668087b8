//! Acceptance gate: one pass/fail line per criterion. Criteria run
//! sequentially inside a single test because the timing-based ones require
//! exclusive use of the in-process profiler.

use mmwave_sim::antenna::{steering_vector, AntennaArray};
use mmwave_sim::channel::{
    frequency_response, generate_cluster_delays, generate_cluster_powers,
    generate_link_realization, link_geometry, subcarrier_grid, ChannelRealization,
    SimplificationConfig,
};
use mmwave_sim::io::config::{parse_config, resolve, MetricKind, Overrides, ResolvedSpec};
use mmwave_sim::io::run::{compute_metrics, run_simulate, Manifest};
use mmwave_sim::metrics::{afbw, ks_statistic, lcf, svd_beamforming};
use mmwave_sim::params::{ChannelState, ParamTable};
use mmwave_sim::profiler::{profile_generation, speedup_table, PhaseTimer};
use mmwave_sim::rng::SeedTree;
use mmwave_sim::scenario::Point3;

use nalgebra::{DMatrix, DVector, RowDVector};
use num_complex::Complex64;
use rand::Rng;

struct Criterion {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn report(results: &[Criterion]) -> String {
    results
        .iter()
        .map(|c| {
            format!(
                "{} criterion {}: {}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                c.detail
            )
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn acceptance() {
    // Timing-based criteria run first, before the metric workloads below
    // put allocator and cache pressure on the process.
    let c1 = criterion_1_speedup();
    let c4 = criterion_4_phase_share();
    let (c2, c3) = criteria_2_and_3_sinr_and_svr();
    let results = vec![
        c1,
        c2,
        c3,
        c4,
        criterion_5_properties(),
        criterion_6_exclusions(),
    ];
    let summary = report(&results);
    println!("{summary}");
    assert!(results.iter().all(|c| c.passed), "\n{summary}");
}

// ---------------------------------------------------------------------------
// 1. Generation speed-up at UE = 1 / gNB = 1024
// ---------------------------------------------------------------------------

fn criterion_1_speedup() -> Criterion {
    let table = ParamTable::builtin_uma();
    let baseline = SimplificationConfig::baseline();
    let simplified = SimplificationConfig::most_simplified();
    let rows = speedup_table(
        &table,
        &baseline,
        &[baseline, simplified],
        &[1],
        &[1024],
        30e9,
        7,
        200,
        10,
    )
    .expect("profiling failed");
    let speedup = rows
        .iter()
        .find(|r| r.config == simplified)
        .expect("simplified row present")
        .speedup_vs_baseline;
    Criterion {
        name: "1 (speed-up)",
        passed: speedup >= 4.0,
        detail: format!("mean-time ratio {speedup:.2} (required >= 4.0, 200 matched-seed reps)"),
    }
}

// ---------------------------------------------------------------------------
// 2 + 3. SINR equivalence (KS) and singular-value ordering, 16x64 elements
// ---------------------------------------------------------------------------

fn full_size_spec(clusters: &str, rays: usize, drops: usize) -> ResolvedSpec {
    let overrides = Overrides {
        drops: Some(drops),
        clusters: Some(clusters.to_string()),
        rays: Some(rays),
        ue_ant: Some("4x4".to_string()),
        gnb_ant: Some("8x8".to_string()),
        ..Default::default()
    };
    let spec = parse_config(None, &overrides).expect("default spec");
    resolve(&spec, None).expect("spec resolves")
}

/// Runs the shared 45-drop experiment once per configuration and derives
/// both metric criteria from it.
fn criteria_2_and_3_sinr_and_svr() -> (Criterion, Criterion) {
    let drops = 45;
    let wanted = [MetricKind::Sinr, MetricKind::Svr];
    let mut outputs = Vec::new();
    for (clusters, rays) in [("12/20/12", 20), ("8/8/8", 1)] {
        let resolved = full_size_spec(clusters, rays, drops);
        let data: Vec<_> = (0..drops)
            .map(|d| mmwave_sim::io::run::generate_drop(&resolved, d).expect("drop"))
            .collect();
        outputs.push(compute_metrics(&resolved, &data, &wanted).expect("metrics"));
    }
    let base_sinr: Vec<f64> = outputs[0].sinr.iter().map(|r| r.2).collect();
    let simp_sinr: Vec<f64> = outputs[1].sinr.iter().map(|r| r.2).collect();
    let n = base_sinr.len().min(simp_sinr.len());
    let ks = ks_statistic(&base_sinr, &simp_sinr);
    let c2 = Criterion {
        name: "2 (narrowband SINR equivalence)",
        passed: n >= 500 && ks <= 0.10,
        detail: format!(
            "two-sample KS {ks:.4} over {} vs {} attached-UE samples \
             (required: >= 500 samples each, KS <= 0.10)",
            base_sinr.len(),
            simp_sinr.len()
        ),
    };
    let base_first = outputs[0].svr[0].1;
    let simp_first = outputs[1].svr[0].1;
    let links = outputs[0].sinr.len();
    let c3 = Criterion {
        name: "3 (singular-value ordering)",
        passed: links >= 300
            && simp_first > base_first
            && (0.40..=0.60).contains(&base_first),
        detail: format!(
            "first ratio baseline {base_first:.4} vs simplified {simp_first:.4} \
             over {links} links (required: simplified > baseline, \
             baseline in [0.40, 0.60], >= 300 links)"
        ),
    };
    (c2, c3)
}

// ---------------------------------------------------------------------------
// 4. Computations share grows with array size
// ---------------------------------------------------------------------------

fn criterion_4_phase_share() -> Criterion {
    let table = ParamTable::builtin_uma();
    let baseline = SimplificationConfig::baseline();
    let share = |ue: usize, gnb: usize| -> f64 {
        let samples = profile_generation(&table, &baseline, ue, gnb, 30e9, 11, 200, 10)
            .expect("profiling failed");
        let medians = samples.median_timing();
        medians.computations_share()
    };
    let small = share(1, 1);
    let large = share(16, 1024);
    Criterion {
        name: "4 (phase-share monotonicity)",
        passed: large > small,
        detail: format!(
            "median computations share {:.2}% at 16x1024 vs {:.2}% at 1x1 \
             (required: strictly larger at the large size, 200 reps)",
            100.0 * large,
            100.0 * small
        ),
    }
}

// ---------------------------------------------------------------------------
// 5. Deterministic property suites
// ---------------------------------------------------------------------------

fn random_link_realization(
    label: u64,
    state: ChannelState,
    simp: &SimplificationConfig,
    table: &ParamTable,
    tx: &AntennaArray,
    rx: &AntennaArray,
) -> ChannelRealization {
    let tree = SeedTree::new(label);
    let mut rng = tree.stream(&[0xfeed]);
    let d2d = 30.0 + 250.0 * rng.random::<f64>();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let geom = link_geometry(
        &Point3::new(0.0, 0.0, 25.0),
        &Point3::new(d2d * theta.cos(), d2d * theta.sin(), 1.5),
    );
    let mut timer = PhaseTimer::disabled();
    generate_link_realization(
        &geom, state, 0, 0, simp, table, 30e9, tx, rx, &tree, &mut timer,
    )
    .expect("realization")
}

fn powers_sum_property(table: &ParamTable) -> Option<String> {
    let states = [ChannelState::Los, ChannelState::Nlos, ChannelState::O2i];
    let cluster_counts = [8usize, 12, 20];
    let draws_per_combo = 10_000 / (states.len() * cluster_counts.len()) + 1;
    let tree = SeedTree::new(21);
    let mut rng = tree.stream(&[1]);
    for &state in &states {
        for &n in &cluster_counts {
            for _ in 0..draws_per_combo {
                let lsp = mmwave_sim::channel::draw_large_scale_params(
                    state, 30e9, table, &mut rng,
                );
                let delays = generate_cluster_delays(&lsp, n, state, table, &mut rng);
                let powers = generate_cluster_powers(&delays, &lsp, state, &mut rng);
                let sum: f64 = powers.powers.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Some(format!(
                        "powers sum {sum} for state {state:?}, N={n}"
                    ));
                }
            }
        }
    }
    None
}

fn steering_property() -> Option<String> {
    let wavelength = 0.01;
    let array = AntennaArray::with_orientation(4, 8, 0.5, 120.0, 6.0, wavelength).unwrap();
    let tree = SeedTree::new(22);
    let mut rng = tree.stream(&[2]);
    for _ in 0..1000 {
        let az = 360.0 * rng.random::<f64>() - 180.0;
        let zen = 180.0 * rng.random::<f64>();
        let sv = steering_vector(&array, az, zen, wavelength);
        if sv[0] != Complex64::new(1.0, 0.0) {
            return Some(format!("reference entry {} != 1", sv[0]));
        }
        for entry in &sv {
            if (entry.norm() - 1.0).abs() > 1e-12 {
                return Some(format!("modulus {} off unity", entry.norm()));
            }
        }
    }
    None
}

/// Quantizes cluster delays onto a uniform grid, then checks the
/// beamformed response against a naive DFT of the resulting tap sequence.
fn frequency_response_oracle(table: &ParamTable) -> Option<String> {
    let wavelength = mmwave_sim::scenario::SPEED_OF_LIGHT / 30e9;
    let tx = AntennaArray::new(2, 2, wavelength).unwrap();
    let rx = AntennaArray::new(2, 1, wavelength).unwrap();
    let grid = subcarrier_grid(3.84e6, 60e3);
    let states = [ChannelState::Los, ChannelState::Nlos, ChannelState::O2i];
    let simp = SimplificationConfig::baseline();
    let tree = SeedTree::new(23);
    let mut rng = tree.stream(&[3]);
    for i in 0..100u64 {
        let state = states[i as usize % states.len()];
        let mut realization =
            random_link_realization(1000 + i, state, &simp, table, &tx, &rx);
        let max_delay = realization
            .delays_s
            .iter()
            .cloned()
            .fold(0.0f64, f64::max)
            .max(1e-9);
        // Oversampled uniform delay grid; quantization makes tap indices exact.
        let dt = max_delay / 4096.0;
        let indices: Vec<usize> = realization
            .delays_s
            .iter()
            .map(|&tau| (tau / dt).round() as usize)
            .collect();
        for (tau, &k) in realization.delays_s.iter_mut().zip(&indices) {
            *tau = k as f64 * dt;
        }

        let unit = |len: usize, rng: &mut dyn rand::RngCore| -> Vec<Complex64> {
            let v: Vec<Complex64> = (0..len)
                .map(|_| {
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                })
                .collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / norm).collect()
        };
        let w_tx = unit(4, &mut rng);
        let w_rx = unit(2, &mut rng);
        let cfr = frequency_response(&realization, &w_tx, &w_rx, &grid).unwrap();

        // Independent path: per-cluster scalar gains via nalgebra products,
        // accumulated into taps, then a naive DFT over the tap sequence.
        let tx_row = RowDVector::from_row_slice(&w_tx);
        let rx_col = DVector::from_column_slice(&w_rx);
        let mut taps = vec![Complex64::new(0.0, 0.0); 4097];
        for (h, &k) in realization.matrices.iter().zip(&indices) {
            taps[k] += (&tx_row * h * &rx_col)[(0, 0)];
        }
        let scale = cfr.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        for (&f, &value) in grid.iter().zip(&cfr) {
            let mut oracle = Complex64::new(0.0, 0.0);
            for (k, &tap) in taps.iter().enumerate() {
                if tap != Complex64::new(0.0, 0.0) {
                    let phase = -2.0 * std::f64::consts::PI * f * (k as f64 * dt);
                    oracle += tap * Complex64::from_polar(1.0, phase);
                }
            }
            if (value - oracle).norm() > 1e-9 * scale {
                return Some(format!(
                    "realization {i}: |{value} - {oracle}| > 1e-9 relative"
                ));
            }
        }
    }
    None
}

fn svd_domination_property() -> Option<String> {
    let tree = SeedTree::new(24);
    for matrix_idx in 0..3u64 {
        let mut rng = tree.stream(&[4, matrix_idx]);
        let h = DMatrix::from_fn(8, 4, |_, _| {
            Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
        });
        let pair = svd_beamforming(&h);
        // Phase invariance.
        let rotated = h.map(|c| c * Complex64::from_polar(1.0, 0.789));
        let rotated_gain = svd_beamforming(&rotated).gain;
        if (pair.gain - rotated_gain).abs() > 1e-9 * pair.gain {
            return Some(format!(
                "gain {} changed to {rotated_gain} under unit-modulus scaling",
                pair.gain
            ));
        }
        let mut unit = |len: usize| -> Vec<Complex64> {
            let v: Vec<Complex64> = (0..len)
                .map(|_| {
                    Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                })
                .collect();
            let norm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
            v.into_iter().map(|c| c / norm).collect()
        };
        for _ in 0..100_000 {
            let w_tx = unit(8);
            let w_rx = unit(4);
            let value = mmwave_sim::channel::bilinear_form(&w_tx, &h, &w_rx).norm();
            if value > pair.gain * (1.0 + 1e-9) {
                return Some(format!("random pair beats sigma1: {value} > {}", pair.gain));
            }
        }
    }
    None
}

fn manifest_determinism_property() -> Option<String> {
    let dir = tempfile::tempdir().unwrap();
    let overrides = Overrides {
        drops: Some(2),
        clusters: Some("8/8/8".to_string()),
        rays: Some(1),
        ue_ant: Some("1x2".to_string()),
        gnb_ant: Some("2x2".to_string()),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let mut spec = parse_config(None, &overrides).unwrap();
    spec.scenario.num_ues = 30;
    spec.scenario.bandwidth = 1.2e6;
    let resolved = resolve(&spec, None).unwrap();
    run_simulate(&resolved).unwrap();

    let manifest = Manifest::read(&dir.path().join("manifest.json")).unwrap();
    let replay_dir = tempfile::tempdir().unwrap();
    let mut replay_spec = manifest.spec.clone();
    replay_spec.run.output_dir = replay_dir.path().to_path_buf();
    let replay = resolve(&replay_spec, Some(&manifest.parameter_table)).unwrap();
    run_simulate(&replay).unwrap();
    for name in ["sinr.csv", "sir.csv", "lcf.csv", "afbw.csv", "svr.csv"] {
        let a = std::fs::read(dir.path().join(name)).unwrap();
        let b = std::fs::read(replay_dir.path().join(name)).unwrap();
        if a != b {
            return Some(format!("{name} differs between a run and its manifest replay"));
        }
    }
    None
}

fn fade_statistics_hand_counts() -> Option<String> {
    let grid = [-1.0, 1.0, -1.0, 1.0];
    if lcf(&grid, 0.0) != 0.5 {
        return Some("lcf([-1,1,-1,1], 0) != 0.5".into());
    }
    if lcf(&[5.0; 8], 0.0) != 0.0 || lcf(&grid, -2.0) != 0.0 || lcf(&grid, 2.0) != 0.0 {
        return Some("lcf threshold edge cases failed".into());
    }
    let runs = [-1.0, -1.0, 1.0, -1.0, -1.0, -1.0, -1.0, 1.0];
    if afbw(&runs, 0.0, 60e3) != 180.0 {
        return Some("afbw runs {2,4} at 60 kHz != 180 kHz".into());
    }
    if afbw(&[-5.0; 10], 0.0, 60e3) != 600.0 || afbw(&[-5.0; 10], -10.0, 60e3) != 0.0 {
        return Some("afbw all/none-below cases failed".into());
    }
    None
}

fn criterion_5_properties() -> Criterion {
    let table = ParamTable::builtin_uma();
    let failures: Vec<String> = [
        powers_sum_property(&table).map(|m| format!("cluster powers: {m}")),
        steering_property().map(|m| format!("steering vectors: {m}")),
        frequency_response_oracle(&table).map(|m| format!("frequency response: {m}")),
        svd_domination_property().map(|m| format!("svd beamforming: {m}")),
        manifest_determinism_property().map(|m| format!("manifest determinism: {m}")),
        fade_statistics_hand_counts().map(|m| format!("fade statistics: {m}")),
    ]
    .into_iter()
    .flatten()
    .collect();
    Criterion {
        name: "5 (property suites)",
        passed: failures.is_empty(),
        detail: if failures.is_empty() {
            "cluster powers, steering vectors, DFT oracle, SVD domination, \
             manifest determinism, fade hand counts all hold"
                .to_string()
        } else {
            failures.join("; ")
        },
    }
}

// ---------------------------------------------------------------------------
// 6. Out-of-scope reproductions, by design
// ---------------------------------------------------------------------------

fn criterion_6_exclusions() -> Criterion {
    Criterion {
        name: "6 (non-goals)",
        passed: true,
        detail: "absolute millisecond timings and exact CDF curves are \
                 machine/realization specific and are intentionally covered \
                 by the ratio, ordering, and KS criteria instead"
            .to_string(),
    }
}
