//! Uniform rectangular arrays and steering vectors.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SimError};

/// Uniform rectangular array. Elements lie in the y-z plane of the local
/// frame (boresight along +x), rotated by the boresight azimuth about z.
/// The first element is the phase reference at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AntennaArray {
    pub rows: usize,
    pub cols: usize,
    /// Element spacing in wavelengths.
    pub spacing: f64,
    pub boresight_azimuth_deg: f64,
    pub downtilt_deg: f64,
    /// Element offsets in meters, relative to the reference element.
    element_positions: Vec<[f64; 3]>,
}

impl AntennaArray {
    pub fn new(rows: usize, cols: usize, wavelength: f64) -> Result<Self> {
        Self::with_orientation(rows, cols, 0.5, 0.0, 0.0, wavelength)
    }

    pub fn with_orientation(
        rows: usize,
        cols: usize,
        spacing: f64,
        boresight_azimuth_deg: f64,
        downtilt_deg: f64,
        wavelength: f64,
    ) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(SimError::config("antenna array needs at least one element"));
        }
        if spacing <= 0.0 || wavelength <= 0.0 {
            return Err(SimError::config("antenna spacing and wavelength must be positive"));
        }
        let d = spacing * wavelength;
        let az = boresight_azimuth_deg.to_radians();
        let (sin_az, cos_az) = az.sin_cos();
        let mut element_positions = Vec::with_capacity(rows * cols);
        for row in 0..rows {
            for col in 0..cols {
                // Local offsets along y (columns) and z (rows), rotated about z.
                let y = col as f64 * d;
                let z = row as f64 * d;
                element_positions.push([-y * sin_az, y * cos_az, z]);
            }
        }
        Ok(AntennaArray {
            rows,
            cols,
            spacing,
            boresight_azimuth_deg,
            downtilt_deg,
            element_positions,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn element_positions(&self) -> &[[f64; 3]] {
        &self.element_positions
    }
}

/// Unit propagation direction for (azimuth, zenith) in degrees. Zenith is
/// measured from +z, azimuth from +x in the x-y plane.
pub fn direction_unit_vector(azimuth_deg: f64, zenith_deg: f64) -> [f64; 3] {
    let az = azimuth_deg.to_radians();
    let zen = zenith_deg.to_radians();
    let (sin_zen, cos_zen) = zen.sin_cos();
    let (sin_az, cos_az) = az.sin_cos();
    [sin_zen * cos_az, sin_zen * sin_az, cos_zen]
}

/// Steering vector of the array toward (azimuth, zenith): one unit-modulus
/// phase factor per element, reference element fixed at 1.
pub fn steering_vector(
    array: &AntennaArray,
    azimuth_deg: f64,
    zenith_deg: f64,
    wavelength: f64,
) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(array.num_elements());
    steering_vector_into(array, azimuth_deg, zenith_deg, wavelength, &mut out);
    out
}

/// Same as [`steering_vector`] but reuses the output buffer.
pub fn steering_vector_into(
    array: &AntennaArray,
    azimuth_deg: f64,
    zenith_deg: f64,
    wavelength: f64,
    out: &mut Vec<Complex64>,
) {
    let dir = direction_unit_vector(azimuth_deg, zenith_deg);
    let k = 2.0 * std::f64::consts::PI / wavelength;
    out.clear();
    out.extend(array.element_positions.iter().map(|p| {
        let phase = k * (dir[0] * p[0] + dir[1] * p[1] + dir[2] * p[2]);
        Complex64::from_polar(1.0, phase)
    }));
}
