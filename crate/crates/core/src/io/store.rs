//! On-disk form of per-drop channel realizations, so metrics can be
//! recomputed later without regenerating channels.

use std::collections::BTreeMap;
use std::path::Path;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelRealization, SimplificationConfig};
use crate::error::{Result, SimError};
use crate::params::ChannelState;
use crate::scenario::Deployment;

/// Column-major complex matrix with interleaved (re, im) entries. JSON
/// round-trips f64 exactly, so stored realizations reproduce bit-identical
/// metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl StoredMatrix {
    pub fn from_matrix(m: &DMatrix<Complex64>) -> Self {
        let mut data = Vec::with_capacity(2 * m.len());
        for c in m.iter() {
            data.push(c.re);
            data.push(c.im);
        }
        StoredMatrix { rows: m.nrows(), cols: m.ncols(), data }
    }

    pub fn to_matrix(&self) -> Result<DMatrix<Complex64>> {
        if self.data.len() != 2 * self.rows * self.cols {
            return Err(SimError::Serialization(format!(
                "stored {}x{} matrix holds {} scalars",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(DMatrix::from_iterator(
            self.rows,
            self.cols,
            self.data.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])),
        ))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoredRealization {
    pub gnb_id: u32,
    pub ue_id: u32,
    pub state: ChannelState,
    pub simplification: SimplificationConfig,
    pub delays_s: Vec<f64>,
    pub matrices: Vec<StoredMatrix>,
}

impl StoredRealization {
    pub fn from_realization(r: &ChannelRealization) -> Self {
        StoredRealization {
            gnb_id: r.gnb_id,
            ue_id: r.ue_id,
            state: r.state,
            simplification: r.simplification,
            delays_s: r.delays_s.clone(),
            matrices: r.matrices.iter().map(StoredMatrix::from_matrix).collect(),
        }
    }

    pub fn to_realization(&self) -> Result<ChannelRealization> {
        Ok(ChannelRealization {
            matrices: self
                .matrices
                .iter()
                .map(StoredMatrix::to_matrix)
                .collect::<Result<_>>()?,
            delays_s: self.delays_s.clone(),
            gnb_id: self.gnb_id,
            ue_id: self.ue_id,
            state: self.state,
            simplification: self.simplification,
        })
    }
}

/// Everything one drop contributes to metrics: geometry/link state, the
/// per-gNB scheduled UE, and every generated realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DropRecord {
    pub drop_index: usize,
    pub deployment: Deployment,
    /// Scheduled UE per gNB; `None` for gNBs with no attached UEs.
    pub scheduled: Vec<Option<u32>>,
    pub realizations: Vec<StoredRealization>,
}

/// In-memory drop state shared by fresh simulation and recomputation.
#[derive(Debug, Clone)]
pub struct DropData {
    pub drop_index: usize,
    pub deployment: Deployment,
    pub scheduled: Vec<Option<u32>>,
    pub realizations: BTreeMap<(u32, u32), ChannelRealization>,
}

impl DropData {
    pub fn realization(&self, gnb_id: u32, ue_id: u32) -> Result<&ChannelRealization> {
        self.realizations.get(&(gnb_id, ue_id)).ok_or_else(|| {
            SimError::contract(format!("no stored realization for gNB {gnb_id} / UE {ue_id}"))
        })
    }

    pub fn to_record(&self) -> DropRecord {
        DropRecord {
            drop_index: self.drop_index,
            deployment: self.deployment.clone(),
            scheduled: self.scheduled.clone(),
            realizations: self
                .realizations
                .values()
                .map(StoredRealization::from_realization)
                .collect(),
        }
    }

    pub fn from_record(record: DropRecord) -> Result<DropData> {
        let mut realizations = BTreeMap::new();
        for stored in &record.realizations {
            realizations
                .insert((stored.gnb_id, stored.ue_id), stored.to_realization()?);
        }
        Ok(DropData {
            drop_index: record.drop_index,
            deployment: record.deployment,
            scheduled: record.scheduled,
            realizations,
        })
    }
}

pub fn write_drop_record(path: &Path, data: &DropData) -> Result<()> {
    let json = serde_json::to_string(&data.to_record())
        .map_err(|e| SimError::Serialization(e.to_string()))?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn read_drop_record(path: &Path) -> Result<DropData> {
    let text = std::fs::read_to_string(path)?;
    let record: DropRecord =
        serde_json::from_str(&text).map_err(|e| SimError::Serialization(e.to_string()))?;
    DropData::from_record(record)
}
