//! System-level mmWave network simulator: hexagonal macro deployment,
//! cluster-based spatial channel generation with configurable cluster and
//! ray counts, link metrics, and generation-time profiling.

pub mod antenna;
pub mod channel;
pub mod error;
pub mod io;
pub mod metrics;
pub mod params;
pub mod profiler;
pub mod rng;
pub mod scenario;
