use serde::{Deserialize, Serialize};

use crate::ebayes::ShiftSearchConfig;
use crate::error::{Error, Result};
use crate::transforms::MAD_NORMAL_FACTOR;
use crate::tree::DEFAULT_DEPTH_CAP;

pub const DEFAULT_C: f64 = 5.0;

/// Prior hyperparameters: the concentration constant `c` (cell parameters are
/// `c * k^2` at level `k`) and the prior odds `p(M0) / p(M1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyperParams {
    pub c: f64,
    pub prior_odds: f64,
}

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            c: DEFAULT_C,
            prior_odds: 1.0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(Error::InvalidInput(format!(
                "c must be positive, got {}",
                self.c
            )));
        }
        if !(self.prior_odds.is_finite() && self.prior_odds > 0.0) {
            return Err(Error::InvalidInput(format!(
                "prior odds must be positive, got {}",
                self.prior_odds
            )));
        }
        Ok(())
    }

    /// Dirichlet parameter of each quadrant for a split at level `level`.
    pub fn cell_param(&self, level: usize) -> f64 {
        let k = level as f64;
        self.c * k * k
    }
}

/// Everything that fixes the partition and the prior for one test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionConfig {
    pub hyper: HyperParams,
    pub depth_cap: usize,
    /// Multiplier applied to the MAD when scaling each margin.
    pub mad_factor: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        Self {
            hyper: HyperParams::default(),
            depth_cap: DEFAULT_DEPTH_CAP,
            mad_factor: MAD_NORMAL_FACTOR,
        }
    }
}

impl PartitionConfig {
    pub fn with_c(mut self, c: f64) -> Self {
        self.hyper.c = c;
        self
    }

    pub fn with_prior_odds(mut self, prior_odds: f64) -> Self {
        self.hyper.prior_odds = prior_odds;
        self
    }

    pub fn with_depth_cap(mut self, depth_cap: usize) -> Self {
        self.depth_cap = depth_cap;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.hyper.validate()?;
        if self.depth_cap == 0 || self.depth_cap > 50 {
            return Err(Error::InvalidInput(format!(
                "depth cap must be in 1..=50, got {}",
                self.depth_cap
            )));
        }
        if !(self.mad_factor.is_finite() && self.mad_factor > 0.0) {
            return Err(Error::InvalidInput(format!(
                "MAD factor must be positive, got {}",
                self.mad_factor
            )));
        }
        Ok(())
    }
}

/// Which partition the test is evaluated on.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum Method {
    /// Partition centred on the marginal medians.
    #[default]
    Basic,
    /// Best shift-and-wrap centring over a candidate grid.
    EmpiricalBayes(ShiftSearchConfig),
}

impl Method {
    pub fn kind(&self) -> MethodKind {
        match self {
            Method::Basic => MethodKind::Basic,
            Method::EmpiricalBayes(_) => MethodKind::Ebayes,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodKind {
    Basic,
    Ebayes,
}

impl MethodKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            MethodKind::Basic => "basic",
            MethodKind::Ebayes => "ebayes",
        }
    }
}
