//! Wall-clock profiling of channel generation, split into the three phases:
//! steering-vector computations, random-variable draws, and everything else.
//!
//! Attribution is by instrumented scopes around fixed phase boundaries, not
//! by a sampling profiler, so the split is deterministic and portable.
//! Absolute times are machine-specific; the interesting outputs are phase
//! shares and speed-up ratios between simplification configurations.

use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use rand::Rng;

use crate::antenna::AntennaArray;
use crate::channel::{generate_link_realization, link_geometry, SimplificationConfig};
use crate::error::{Result, SimError};
use crate::params::{ChannelState, ParamTable};
use crate::rng::SeedTree;
use crate::scenario::{los_probability, Point3};

/// Scope-based accumulator for the instrumented phases of one generation.
#[derive(Debug)]
pub struct PhaseTimer {
    enabled: bool,
    computations: Duration,
    random_variables: Duration,
    comp_scopes: u32,
    rv_scopes: u32,
}

impl PhaseTimer {
    pub fn enabled() -> Self {
        PhaseTimer {
            enabled: true,
            computations: Duration::ZERO,
            random_variables: Duration::ZERO,
            comp_scopes: 0,
            rv_scopes: 0,
        }
    }

    /// No-op timer: scopes run their closure with only a branch of overhead.
    pub fn disabled() -> Self {
        PhaseTimer {
            enabled: false,
            computations: Duration::ZERO,
            random_variables: Duration::ZERO,
            comp_scopes: 0,
            rv_scopes: 0,
        }
    }

    #[inline]
    pub fn computations<T>(&mut self, f: impl FnOnce() -> T) -> T {
        if !self.enabled {
            return f();
        }
        let start = Instant::now();
        let out = f();
        self.computations += start.elapsed();
        self.comp_scopes += 1;
        out
    }

    #[inline]
    pub fn random_variables<T>(&mut self, f: impl FnOnce() -> T) -> T {
        if !self.enabled {
            return f();
        }
        let start = Instant::now();
        let out = f();
        self.random_variables += start.elapsed();
        self.rv_scopes += 1;
        out
    }

    pub fn reset(&mut self) {
        self.computations = Duration::ZERO;
        self.random_variables = Duration::ZERO;
        self.comp_scopes = 0;
        self.rv_scopes = 0;
    }

    pub fn scopes(&self) -> u64 {
        (self.comp_scopes + self.rv_scopes) as u64
    }

    /// Phase split for one generation, given its total wall time. Measured
    /// instrumentation overhead is subtracted from the instrumented phases.
    pub fn split(&self, total: Duration, overhead_per_scope: Duration) -> PhaseTiming {
        let overhead = overhead_per_scope * (self.comp_scopes + self.rv_scopes);
        let total_s = total.saturating_sub(overhead).as_secs_f64();
        let comp_s = self
            .computations
            .saturating_sub(overhead_per_scope * self.comp_scopes)
            .as_secs_f64()
            .min(total_s);
        let rv_s = self
            .random_variables
            .saturating_sub(overhead_per_scope * self.rv_scopes)
            .as_secs_f64()
            .min(total_s - comp_s);
        PhaseTiming {
            computations: comp_s,
            random_variables: rv_s,
            other: (total_s - comp_s - rv_s).max(0.0),
            total: total_s,
        }
    }
}

/// Generation wall time partitioned into the three phases, seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTiming {
    pub computations: f64,
    pub random_variables: f64,
    pub other: f64,
    pub total: f64,
}

impl PhaseTiming {
    pub fn computations_share(&self) -> f64 {
        if self.total > 0.0 {
            self.computations / self.total
        } else {
            0.0
        }
    }
}

/// Raw per-repetition samples for one (array size, config) workload.
#[derive(Debug, Clone)]
pub struct PhaseSamples {
    pub computations: Vec<f64>,
    pub random_variables: Vec<f64>,
    pub other: Vec<f64>,
    pub total: Vec<f64>,
}

impl PhaseSamples {
    pub fn median_timing(&self) -> PhaseTiming {
        PhaseTiming {
            computations: median(&self.computations),
            random_variables: median(&self.random_variables),
            other: median(&self.other),
            total: median(&self.total),
        }
    }

    pub fn mean_total(&self) -> f64 {
        self.total.iter().sum::<f64>() / self.total.len() as f64
    }
}

/// One row of the speed-up table.
#[derive(Debug, Clone)]
pub struct SpeedupRow {
    pub ue_elements: usize,
    pub gnb_elements: usize,
    pub config: SimplificationConfig,
    pub mean_time_s: f64,
    pub speedup_vs_baseline: f64,
    pub samples: PhaseSamples,
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = sorted.len();
    if n == 0 {
        return 0.0;
    }
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Percentile bootstrap confidence interval for the median.
pub fn bootstrap_ci(values: &[f64], rng: &mut impl Rng, resamples: usize, level: f64) -> (f64, f64) {
    let n = values.len();
    let mut medians: Vec<f64> = (0..resamples)
        .map(|_| {
            let resample: Vec<f64> =
                (0..n).map(|_| values[rng.random_range(0..n)]).collect();
            median(&resample)
        })
        .collect();
    medians.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - level) / 2.0;
    let lo = ((resamples as f64 * alpha) as usize).min(resamples - 1);
    let hi = ((resamples as f64 * (1.0 - alpha)) as usize).min(resamples - 1);
    (medians[lo], medians[hi])
}

static PROFILER_BUSY: AtomicBool = AtomicBool::new(false);

struct ProfilerGuard;

impl ProfilerGuard {
    fn acquire() -> Result<Self> {
        if PROFILER_BUSY.swap(true, Ordering::SeqCst) {
            return Err(SimError::Profiler(
                "another profiler instance is already running in this process".into(),
            ));
        }
        Ok(ProfilerGuard)
    }
}

impl Drop for ProfilerGuard {
    fn drop(&mut self) {
        PROFILER_BUSY.store(false, Ordering::SeqCst);
    }
}

/// Cost of one instrumentation scope (a pair of monotonic clock reads).
pub fn instrumentation_overhead() -> Duration {
    let iterations = 10_000u32;
    let start = Instant::now();
    for _ in 0..iterations {
        let inner = Instant::now();
        std::hint::black_box(inner.elapsed());
    }
    start.elapsed() / iterations
}

/// Smallest observable nonzero step of the monotonic clock.
pub fn timer_resolution() -> Duration {
    let mut best = Duration::MAX;
    for _ in 0..64 {
        let start = Instant::now();
        let mut now = start.elapsed();
        while now.is_zero() {
            now = start.elapsed();
        }
        best = best.min(now);
    }
    best
}

/// Maps an element count to a (rows, cols) rectangle: square when the count
/// is a perfect square, single-row otherwise.
pub fn array_shape(elements: usize) -> (usize, usize) {
    let side = (elements as f64).sqrt().round() as usize;
    if side * side == elements {
        (side, side)
    } else {
        (1, elements)
    }
}

/// Deterministic representative link for repetition `rep`: 80% indoor
/// (O2I), outdoor split LoS/NLoS by distance-dependent probability.
fn workload_link(tree: &SeedTree, rep: u64) -> (ChannelState, Point3, Point3) {
    let mut rng = tree.stream(&[0x906f, rep]);
    let indoor = rng.random::<f64>() < 0.8;
    let d2d = 25.0 + 263.0 * rng.random::<f64>();
    let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
    let state = if indoor {
        ChannelState::O2i
    } else if rng.random::<f64>() < los_probability(d2d) {
        ChannelState::Los
    } else {
        ChannelState::Nlos
    };
    let gnb = Point3::new(0.0, 0.0, 25.0);
    let ue = Point3::new(d2d * theta.cos(), d2d * theta.sin(), 1.5);
    (state, gnb, ue)
}

/// Profiles channel generation for one array-size/config combination.
/// Strictly single-threaded; refuses to run concurrently with another
/// profiler instance in the same process.
#[allow(clippy::too_many_arguments)]
pub fn profile_generation(
    table: &ParamTable,
    simp: &SimplificationConfig,
    ue_elements: usize,
    gnb_elements: usize,
    fc_hz: f64,
    seed: u64,
    repetitions: usize,
    warmup: usize,
) -> Result<PhaseSamples> {
    let _guard = ProfilerGuard::acquire()?;
    profile_generation_locked(table, simp, ue_elements, gnb_elements, fc_hz, seed, repetitions, warmup)
}

#[allow(clippy::too_many_arguments)]
fn profile_generation_locked(
    table: &ParamTable,
    simp: &SimplificationConfig,
    ue_elements: usize,
    gnb_elements: usize,
    fc_hz: f64,
    seed: u64,
    repetitions: usize,
    warmup: usize,
) -> Result<PhaseSamples> {
    if repetitions == 0 {
        return Err(SimError::config("repetitions must be >= 1"));
    }
    simp.validate(table)?;
    let wavelength = crate::scenario::SPEED_OF_LIGHT / fc_hz;
    let (g_rows, g_cols) = array_shape(gnb_elements);
    let (u_rows, u_cols) = array_shape(ue_elements);
    let gnb_array = AntennaArray::new(g_rows, g_cols, wavelength)?;
    let ue_array = AntennaArray::new(u_rows, u_cols, wavelength)?;
    let tree = SeedTree::new(seed);
    let overhead = instrumentation_overhead();

    let mut samples = PhaseSamples {
        computations: Vec::with_capacity(repetitions),
        random_variables: Vec::with_capacity(repetitions),
        other: Vec::with_capacity(repetitions),
        total: Vec::with_capacity(repetitions),
    };
    let mut timer = PhaseTimer::enabled();
    for rep in 0..(warmup + repetitions) {
        let (state, gnb, ue) = workload_link(&tree, rep as u64);
        let geom = link_geometry(&gnb, &ue);
        timer.reset();
        let start = Instant::now();
        let realization = generate_link_realization(
            &geom,
            state,
            0,
            rep as u32,
            simp,
            table,
            fc_hz,
            &gnb_array,
            &ue_array,
            &tree,
            &mut timer,
        )?;
        let total = start.elapsed();
        std::hint::black_box(&realization);
        if rep < warmup {
            continue;
        }
        let timing = timer.split(total, overhead);
        samples.computations.push(timing.computations);
        samples.random_variables.push(timing.random_variables);
        samples.other.push(timing.other);
        samples.total.push(timing.total);
    }

    let medians = samples.median_timing();
    let resolution = timer_resolution().as_secs_f64();
    if resolution > 0.01 * medians.total {
        return Err(SimError::Profiler(format!(
            "timer resolution {resolution:.2e} s is coarser than 1% of the median \
             generation time ({:.2e} s); timings are unreliable",
            medians.total
        )));
    }
    Ok(samples)
}

/// Mean generation times and speed-ups for every (ue, gnb, config)
/// combination, with matched seeds across configurations.
#[allow(clippy::too_many_arguments)]
pub fn speedup_table(
    table: &ParamTable,
    baseline: &SimplificationConfig,
    candidates: &[SimplificationConfig],
    ue_sizes: &[usize],
    gnb_sizes: &[usize],
    fc_hz: f64,
    seed: u64,
    repetitions: usize,
    warmup: usize,
) -> Result<Vec<SpeedupRow>> {
    if !candidates.contains(baseline) {
        return Err(SimError::config("baseline configuration must be among the candidates"));
    }
    let _guard = ProfilerGuard::acquire()?;
    let mut rows = Vec::new();
    for &ue in ue_sizes {
        for &gnb in gnb_sizes {
            let baseline_samples = profile_generation_locked(
                table, baseline, ue, gnb, fc_hz, seed, repetitions, warmup,
            )?;
            let baseline_mean = baseline_samples.mean_total();
            for candidate in candidates {
                let samples = if candidate == baseline {
                    baseline_samples.clone()
                } else {
                    profile_generation_locked(
                        table, candidate, ue, gnb, fc_hz, seed, repetitions, warmup,
                    )?
                };
                let mean = samples.mean_total();
                let speedup = if candidate == baseline { 1.0 } else { baseline_mean / mean };
                rows.push(SpeedupRow {
                    ue_elements: ue,
                    gnb_elements: gnb,
                    config: *candidate,
                    mean_time_s: mean,
                    speedup_vs_baseline: speedup,
                    samples,
                });
            }
        }
    }
    Ok(rows)
}
