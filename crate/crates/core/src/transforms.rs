//! Marginal standardization and the mapping of paired observations onto the
//! unit square.
//!
//! Each margin is centred on its median and scaled by the (normal-consistent)
//! median absolute deviation, then pushed through the standard normal CDF.
//! Splitting the unit square at dyadic midpoints is therefore the same as
//! splitting the original axes at quantiles of a fitted normal distribution.
//!
//! The shift-and-wrap map relocates the top-level split of one axis: every
//! observation at or below `delta` is moved past the maximum by the sample
//! range, so the cut at `delta` becomes the new boundary of the data.

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scale factor turning the MAD of normal data into an estimate of sigma.
pub const MAD_NORMAL_FACTOR: f64 = 1.4826;

/// Distance kept between transformed coordinates and the edges of `[0, 1]`.
pub const UNIT_CLAMP: f64 = 1e-15;

/// Sentinel shift position lying below every observation; wrapping at it is
/// the identity.
pub const NO_SHIFT: f64 = f64::NEG_INFINITY;

/// Two equal-length vectors of finite observations.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSample {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(Error::LengthMismatch {
                x: x.len(),
                y: y.len(),
            });
        }
        if x.is_empty() {
            return Err(Error::InvalidInput(
                "sample must hold at least one pair".into(),
            ));
        }
        if let Some(index) = x.iter().chain(y.iter()).position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: index % x.len(),
            });
        }
        Ok(Self { x, y })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// The same pairs with the roles of x and y exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }

    /// Re-pair `y` against `x` using `order[i]` as the y-index for row `i`.
    pub fn repaired(&self, order: &[usize]) -> Self {
        debug_assert_eq!(order.len(), self.len());
        Self {
            x: self.x.clone(),
            y: order.iter().map(|&i| self.y[i]).collect(),
        }
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.x, self.y)
    }
}

/// Location (median) and spread of one margin.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RobustStats {
    pub location: f64,
    pub scale: f64,
    /// Set when the MAD vanished and the sample standard deviation was used.
    pub fallback_used: bool,
}

/// Coordinates of a sample after mapping each margin into `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPoints {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl UnitPoints {
    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Where and along which axis to cut and wrap the sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShiftSpec {
    pub delta: f64,
    pub axis: Axis,
}

impl ShiftSpec {
    pub fn none(axis: Axis) -> Self {
        Self {
            delta: NO_SHIFT,
            axis,
        }
    }

    pub fn is_no_shift(&self) -> bool {
        self.delta == NO_SHIFT
    }
}

pub(crate) fn sorted(values: &[f64]) -> Vec<f64> {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

fn median_of_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

fn sample_std(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    (ss / (n - 1) as f64).sqrt()
}

/// Median and normal-consistent MAD of `values`.
pub fn robust_location_scale(values: &[f64]) -> Result<RobustStats> {
    robust_location_scale_with_factor(values, MAD_NORMAL_FACTOR)
}

/// Median and `mad_factor * MAD`. Falls back to the sample standard deviation
/// when the MAD is zero.
pub fn robust_location_scale_with_factor(values: &[f64], mad_factor: f64) -> Result<RobustStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty margin".into()));
    }
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { index });
    }
    if !(mad_factor.is_finite() && mad_factor > 0.0) {
        return Err(Error::InvalidInput(format!(
            "MAD factor must be positive, got {mad_factor}"
        )));
    }
    let s = sorted(values);
    let location = median_of_sorted(&s);
    let deviations = sorted(&s.iter().map(|v| (v - location).abs()).collect::<Vec<_>>());
    let mad = median_of_sorted(&deviations);
    if mad > 0.0 {
        return Ok(RobustStats {
            location,
            scale: mad_factor * mad,
            fallback_used: false,
        });
    }
    let sd = sample_std(values);
    if sd > 0.0 && sd.is_finite() {
        Ok(RobustStats {
            location,
            scale: sd,
            fallback_used: true,
        })
    } else {
        Err(Error::DegenerateSample(format!(
            "all {} values are identical ({location})",
            values.len()
        )))
    }
}

/// Standard normal distribution function.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn margin_to_unit(values: &[f64], stats: &RobustStats) -> Vec<f64> {
    values
        .iter()
        .map(|&v| {
            normal_cdf((v - stats.location) / stats.scale).clamp(UNIT_CLAMP, 1.0 - UNIT_CLAMP)
        })
        .collect()
}

/// Map both margins into the open unit square with the default MAD scaling.
pub fn to_unit_square(sample: &PairedSample) -> Result<UnitPoints> {
    to_unit_square_with_factor(sample, MAD_NORMAL_FACTOR)
}

pub fn to_unit_square_with_factor(sample: &PairedSample, mad_factor: f64) -> Result<UnitPoints> {
    let sx = robust_location_scale_with_factor(sample.x(), mad_factor)
        .map_err(|e| tag_margin(e, "x"))?;
    let sy = robust_location_scale_with_factor(sample.y(), mad_factor)
        .map_err(|e| tag_margin(e, "y"))?;
    Ok(UnitPoints {
        u: margin_to_unit(sample.x(), &sx),
        v: margin_to_unit(sample.y(), &sy),
    })
}

fn tag_margin(e: Error, margin: &str) -> Error {
    match e {
        Error::DegenerateSample(msg) => Error::DegenerateSample(format!("{margin} margin: {msg}")),
        other => other,
    }
}

/// Cut the chosen axis at `spec.delta` and wrap everything at or below the
/// cut past the maximum: `v <= delta` becomes `v + (max - min)`.
pub fn shift_wrap(sample: &PairedSample, spec: ShiftSpec) -> PairedSample {
    if spec.is_no_shift() {
        return sample.clone();
    }
    let wrap = |values: &[f64]| -> Vec<f64> {
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let range = hi - lo;
        values
            .iter()
            .map(|&v| if v <= spec.delta { range + v } else { v })
            .collect()
    };
    match spec.axis {
        Axis::X => PairedSample {
            x: wrap(sample.x()),
            y: sample.y.clone(),
        },
        Axis::Y => PairedSample {
            x: sample.x.clone(),
            y: wrap(sample.y()),
        },
    }
}
