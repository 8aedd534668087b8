//! Link metrics: SVD-based beamforming, narrowband SINR, wideband SIR,
//! level crossing frequency, average fade bandwidth, singular-value ratios,
//! and empirical CDF / two-sample Kolmogorov-Smirnov comparison.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Result, SimError};
use crate::scenario::Deployment;

const BOLTZMANN: f64 = 1.380_649e-23;
const NOISE_TEMPERATURE_K: f64 = 290.0;

/// Optimal single-stream beamforming weights and gain for a narrowband
/// channel matrix (tx_elements x rx_elements).
#[derive(Debug, Clone)]
pub struct BeamformingPair {
    pub tx_weights: Vec<Complex64>,
    pub rx_weights: Vec<Complex64>,
    /// Largest singular value of the matrix.
    pub gain: f64,
}

/// Dominant-singular-vector beamforming such that |w_tx^T H w_rx| equals
/// the largest singular value. The first nonzero entry of each weight
/// vector is made real positive for a deterministic phase convention.
pub fn svd_beamforming(h: &DMatrix<Complex64>) -> BeamformingPair {
    let n_tx = h.nrows();
    let n_rx = h.ncols();
    let norm = h.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 {
        let mut tx = vec![Complex64::new(0.0, 0.0); n_tx];
        let mut rx = vec![Complex64::new(0.0, 0.0); n_rx];
        tx[0] = Complex64::new(1.0, 0.0);
        rx[0] = Complex64::new(1.0, 0.0);
        return BeamformingPair { tx_weights: tx, rx_weights: rx, gain: 0.0 };
    }
    let svd = h.clone().svd(true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let mut best = 0;
    for (i, sigma) in svd.singular_values.iter().enumerate() {
        if *sigma > svd.singular_values[best] {
            best = i;
        }
    }
    let gain = svd.singular_values[best];
    // H = U S V^H with v_t = V^H: u1^H H v1 = sigma1, so w_tx = conj(u1)
    // and w_rx = v1 give w_tx^T H w_rx = sigma1.
    let tx_weights: Vec<Complex64> = (0..n_tx).map(|s| u[(s, best)].conj()).collect();
    let rx_weights: Vec<Complex64> = (0..n_rx).map(|r| v_t[(best, r)].conj()).collect();
    BeamformingPair {
        tx_weights: normalize_phase(tx_weights),
        rx_weights: normalize_phase(rx_weights),
        gain,
    }
}

fn normalize_phase(mut weights: Vec<Complex64>) -> Vec<Complex64> {
    if let Some(first) = weights.iter().find(|w| w.norm() > 1e-14) {
        let rotation = first.conj() / first.norm();
        for w in weights.iter_mut() {
            *w *= rotation;
        }
    }
    weights
}

/// Thermal noise power in dBm for the configured bandwidth and noise figure.
pub fn noise_power_dbm(bandwidth_hz: f64, noise_figure_db: f64) -> f64 {
    let watts = BOLTZMANN * NOISE_TEMPERATURE_K * bandwidth_hz;
    10.0 * (watts * 1e3).log10() + noise_figure_db
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

fn mw_to_db_ratio(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Narrowband SINR in dB for one victim UE.
///
/// `serving_gain_sq` is sigma1^2 of the serving narrowband matrix;
/// `interferer_gains_sq` holds, per interfering gNB, |w_tx,i^T H_i w_rx|^2
/// with the interferer's own transmit beam and the victim's combiner.
pub fn narrowband_sinr(
    deployment: &Deployment,
    victim_ue: u32,
    serving_gain_sq: f64,
    interferer_gains_sq: &[(u32, f64)],
) -> Result<f64> {
    let config = &deployment.config;
    let serving_gnb = deployment.attachment[victim_ue as usize];
    let serving = deployment.link(serving_gnb, victim_ue);
    let p_rx_mw =
        dbm_to_mw(config.tx_power_dbm - serving.coupling_loss_db()) * serving_gain_sq;
    let mut interference_mw = 0.0;
    for &(gnb, gain_sq) in interferer_gains_sq {
        if gnb == serving_gnb {
            return Err(SimError::contract(
                "serving gNB listed among interferers".to_string(),
            ));
        }
        let link = deployment.link(gnb, victim_ue);
        interference_mw += dbm_to_mw(config.tx_power_dbm - link.coupling_loss_db()) * gain_sq;
    }
    let noise_mw = dbm_to_mw(noise_power_dbm(config.bandwidth, config.noise_figure_db));
    Ok(mw_to_db_ratio(p_rx_mw / (noise_mw + interference_mw)))
}

/// Per-subcarrier wideband SIR in dB. The interferer sum is coherent
/// (complex sum inside the squared magnitude); `coherent = false` switches
/// to the incoherent power sum for sensitivity analysis.
pub fn wideband_sir(
    victim_cfr: &[Complex64],
    interferer_cfrs: &[Vec<Complex64>],
    coherent: bool,
) -> Result<Vec<f64>> {
    for cfr in interferer_cfrs {
        if cfr.len() != victim_cfr.len() {
            return Err(SimError::contract(format!(
                "interferer grid length {} does not match victim grid length {}",
                cfr.len(),
                victim_cfr.len()
            )));
        }
    }
    Ok((0..victim_cfr.len())
        .map(|k| {
            let num = victim_cfr[k].norm_sqr();
            let denom = if coherent {
                interferer_cfrs
                    .iter()
                    .fold(Complex64::new(0.0, 0.0), |acc, cfr| acc + cfr[k])
                    .norm_sqr()
            } else {
                interferer_cfrs.iter().map(|cfr| cfr[k].norm_sqr()).sum()
            };
            if denom == 0.0 {
                // Coherent cancellation: flagged as unbounded SIR.
                f64::INFINITY
            } else {
                10.0 * (num / denom).log10()
            }
        })
        .collect())
}

/// Level crossing frequency: fraction of subcarriers at which the SIR grid
/// crosses the threshold upward. Always in [0, 0.5].
pub fn lcf(sir_grid_db: &[f64], threshold_db: f64) -> f64 {
    if sir_grid_db.len() < 2 {
        return 0.0;
    }
    let crossings = sir_grid_db
        .windows(2)
        .filter(|w| w[0] < threshold_db && w[1] >= threshold_db)
        .count();
    crossings as f64 / sir_grid_db.len() as f64
}

/// Average fade bandwidth: mean width in kHz of maximal runs of consecutive
/// subcarriers below the threshold; 0 when no subcarrier is below.
pub fn afbw(sir_grid_db: &[f64], threshold_db: f64, subcarrier_spacing_hz: f64) -> f64 {
    let mut runs: Vec<usize> = Vec::new();
    let mut current = 0usize;
    for &value in sir_grid_db {
        if value < threshold_db {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    if runs.is_empty() {
        return 0.0;
    }
    let mean_len = runs.iter().sum::<usize>() as f64 / runs.len() as f64;
    mean_len * subcarrier_spacing_hz / 1e3
}

/// Singular values of one matrix normalized to sum to 1, descending.
pub fn singular_value_ratio(h: &DMatrix<Complex64>) -> Option<Vec<f64>> {
    let svd = h.clone().svd(false, false);
    let mut values: Vec<f64> = svd.singular_values.iter().copied().collect();
    values.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = values.iter().sum();
    if total == 0.0 {
        return None;
    }
    Some(values.iter().map(|v| v / total).collect())
}

/// Mean normalized singular-value spectrum over many links. Zero matrices
/// are excluded; the second return value counts them.
pub fn singular_value_ratios(matrices: &[DMatrix<Complex64>]) -> (Vec<f64>, usize) {
    let mut acc: Vec<f64> = Vec::new();
    let mut used = 0usize;
    let mut excluded = 0usize;
    for h in matrices {
        match singular_value_ratio(h) {
            Some(ratios) => {
                if acc.is_empty() {
                    acc = vec![0.0; ratios.len()];
                }
                for (slot, r) in acc.iter_mut().zip(&ratios) {
                    *slot += r;
                }
                used += 1;
            }
            None => excluded += 1,
        }
    }
    if used > 0 {
        for slot in acc.iter_mut() {
            *slot /= used as f64;
        }
    }
    (acc, excluded)
}

/// Sorted step CDF: (value, cumulative probability) per sample.
pub fn empirical_cdf(samples: &[f64]) -> Vec<(f64, f64)> {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, v)| (v, (i + 1) as f64 / n))
        .collect()
}

/// Two-sample Kolmogorov-Smirnov statistic: the supremum distance between
/// the empirical CDFs.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.partial_cmp(q).unwrap());
    ys.sort_by(|p, q| p.partial_cmp(q).unwrap());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let x = xs[i];
        let y = ys[j];
        if x <= y {
            i += 1;
        }
        if y <= x {
            j += 1;
        }
        let fx = i as f64 / xs.len() as f64;
        let fy = j as f64 / ys.len() as f64;
        d = d.max((fx - fy).abs());
    }
    d
}
