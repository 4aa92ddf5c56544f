//! Empirical-Bayes choice of the partition centring.
//!
//! The top-level split is moved by cutting one axis at `delta` and wrapping
//! the lower piece past the maximum. Among the candidate cuts, the partition
//! with the smallest Bayes factor `p(x,y|M0) / p(x,y|M1)` is kept. The
//! objective only changes when `delta` crosses an observation, so a finite
//! grid of cuts between observations covers the search.

use crate::bf::{evaluate, make_result, Evaluation, TestResult};
use crate::config::{MethodKind, PartitionConfig};
use crate::error::{Error, Result};
use crate::transforms::{shift_wrap, sorted, Axis, PairedSample, ShiftSpec, NO_SHIFT};

pub const DEFAULT_GRID: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AxisPolicy {
    #[default]
    XOnly,
    /// Search each axis separately and keep the better optimum.
    XAndY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShiftGrid {
    /// Midpoints between consecutive distinct values.
    AllMidpoints,
    /// `G` empirical quantiles at probabilities `g / (G + 1)`.
    Quantiles(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSearchConfig {
    pub axes: AxisPolicy,
    pub grid: ShiftGrid,
    pub include_no_shift: bool,
}

impl Default for ShiftSearchConfig {
    fn default() -> Self {
        Self {
            axes: AxisPolicy::XOnly,
            grid: ShiftGrid::Quantiles(DEFAULT_GRID),
            include_no_shift: true,
        }
    }
}

impl ShiftSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if let ShiftGrid::Quantiles(g) = self.grid {
            if g < 2 {
                return Err(Error::InvalidInput(format!(
                    "quantile grid needs at least 2 points, got {g}"
                )));
            }
        }
        Ok(())
    }
}

/// Linearly interpolated empirical quantile of sorted data.
fn quantile_sorted(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

/// Candidate cut positions for one axis, in increasing order, with the
/// no-shift sentinel first when requested.
pub fn delta_candidates(values: &[f64], cfg: &ShiftSearchConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let s = sorted(values);
    let mut unique = s.clone();
    unique.dedup();
    if unique.len() < 2 {
        return Err(Error::DegenerateSample(
            "shift search needs at least two distinct values".into(),
        ));
    }
    let (a, b) = (unique[0], unique[unique.len() - 1]);
    let mut out = Vec::new();
    if cfg.include_no_shift {
        out.push(NO_SHIFT);
    }
    match cfg.grid {
        ShiftGrid::AllMidpoints => {
            out.extend(unique.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        }
        ShiftGrid::Quantiles(g) => {
            let mut grid: Vec<f64> = (1..=g)
                .map(|i| quantile_sorted(&s, i as f64 / (g + 1) as f64))
                .filter(|&q| q > a && q < b)
                .collect();
            grid.dedup();
            out.extend(grid);
        }
    }
    Ok(out)
}

/// Empirical-Bayes test over the configured shift grid.
pub fn ebayes_test(
    sample: &PairedSample,
    cfg: &PartitionConfig,
    scfg: &ShiftSearchConfig,
) -> Result<TestResult> {
    cfg.validate()?;
    scfg.validate()?;
    if sample.len() < 2 {
        let eval = evaluate(sample, cfg)?;
        return Ok(make_result(sample, cfg, MethodKind::Ebayes, eval, None));
    }
    let x_cands = delta_candidates(sample.x(), scfg)?;
    let y_cands = match scfg.axes {
        AxisPolicy::XOnly => Vec::new(),
        AxisPolicy::XAndY => {
            let mut c = delta_candidates(sample.y(), scfg)?;
            c.retain(|&d| d != NO_SHIFT);
            c
        }
    };
    ebayes_test_with_candidates(sample, cfg, &x_cands, &y_cands)
}

/// Empirical-Bayes test over explicit cut positions. `x_cands` are tried
/// first, then `y_cands`; ties keep the earlier candidate. Cuts that leave a
/// margin without spread are skipped.
pub fn ebayes_test_with_candidates(
    sample: &PairedSample,
    cfg: &PartitionConfig,
    x_cands: &[f64],
    y_cands: &[f64],
) -> Result<TestResult> {
    cfg.validate()?;
    let mut best: Option<(Evaluation, ShiftSpec)> = None;
    let mut first_err = None;
    let specs = x_cands
        .iter()
        .map(|&delta| ShiftSpec {
            delta,
            axis: Axis::X,
        })
        .chain(y_cands.iter().map(|&delta| ShiftSpec {
            delta,
            axis: Axis::Y,
        }));
    for spec in specs {
        let shifted = shift_wrap(sample, spec);
        let eval = match evaluate(&shifted, cfg) {
            Ok(e) => e,
            Err(e) if e.is_degenerate() => {
                first_err.get_or_insert(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        if best.as_ref().is_none_or(|(b, _)| eval.log_bf < b.log_bf) {
            best = Some((eval, spec));
        }
    }
    match best {
        Some((eval, spec)) => {
            let shift = (!spec.is_no_shift()).then_some((spec.axis, spec.delta));
            Ok(make_result(sample, cfg, MethodKind::Ebayes, eval, shift))
        }
        None => Err(first_err.unwrap_or_else(|| {
            Error::InvalidInput("empirical-Bayes search needs at least one candidate".into())
        })),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bf::test_dependence;

    fn midpoints() -> ShiftSearchConfig {
        ShiftSearchConfig {
            grid: ShiftGrid::AllMidpoints,
            ..Default::default()
        }
    }

    #[test]
    fn midpoint_candidates() {
        let c = delta_candidates(&[3.0, 1.0, 2.0, 2.0], &midpoints()).unwrap();
        assert_eq!(c, vec![NO_SHIFT, 1.5, 2.5]);
    }

    #[test]
    fn quantile_grid_size() {
        let values: Vec<f64> = (0..1000)
            .map(|i| (i as f64 * 0.37).sin() * 10.0 + i as f64 * 1e-3)
            .collect();
        let c = delta_candidates(&values, &ShiftSearchConfig::default()).unwrap();
        assert_eq!(c.len(), 65);
        assert_eq!(c[0], NO_SHIFT);
        assert!(c[1..].windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn without_sentinel() {
        let cfg = ShiftSearchConfig {
            include_no_shift: false,
            ..midpoints()
        };
        assert_eq!(
            delta_candidates(&[1.0, 2.0, 3.0], &cfg).unwrap(),
            vec![1.5, 2.5]
        );
    }

    #[test]
    fn constant_values_have_no_candidates() {
        let err = delta_candidates(&[4.0; 6], &ShiftSearchConfig::default()).unwrap_err();
        assert!(err.is_degenerate());
    }

    #[test]
    fn tiny_grid_rejected() {
        let cfg = ShiftSearchConfig {
            grid: ShiftGrid::Quantiles(1),
            ..Default::default()
        };
        assert!(delta_candidates(&[1.0, 2.0], &cfg).is_err());
    }

    fn wavy(n: usize) -> PairedSample {
        let x: Vec<f64> = (0..n).map(|i| i as f64 * 20.0 / n as f64 - 10.0).collect();
        let y: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| 2.0 * v.sin() + ((i * 7919) % 13) as f64 * 0.1)
            .collect();
        PairedSample::new(x, y).unwrap()
    }

    #[test]
    fn sentinel_only_matches_basic_test() {
        let s = wavy(60);
        let cfg = PartitionConfig::default();
        let basic = test_dependence(&s, &cfg).unwrap();
        let eb = ebayes_test_with_candidates(&s, &cfg, &[NO_SHIFT], &[]).unwrap();
        assert_eq!(eb.log_bf.to_bits(), basic.log_bf.to_bits());
        assert_eq!(eb.level_contributions, basic.level_contributions);
        assert_eq!(eb.delta_star, None);
    }

    #[test]
    fn search_never_loses_to_basic() {
        let s = wavy(80);
        let cfg = PartitionConfig::default();
        let basic = test_dependence(&s, &cfg).unwrap();
        for scfg in [ShiftSearchConfig::default(), midpoints()] {
            let eb = ebayes_test(&s, &cfg, &scfg).unwrap();
            assert!(eb.p_dependent >= basic.p_dependent);
            assert!(eb.log_bf <= basic.log_bf);
        }
    }

    #[test]
    fn both_axes_at_least_as_good_as_x_only() {
        let s = wavy(80);
        let cfg = PartitionConfig::default();
        let x_only = ebayes_test(&s, &cfg, &ShiftSearchConfig::default()).unwrap();
        let xy = ebayes_test(
            &s,
            &cfg,
            &ShiftSearchConfig {
                axes: AxisPolicy::XAndY,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(xy.log_bf <= x_only.log_bf);
    }

    #[test]
    fn reports_chosen_shift() {
        let s = wavy(80);
        let r = ebayes_test(&s, &PartitionConfig::default(), &midpoints()).unwrap();
        if let Some(d) = r.delta_star {
            assert_eq!(r.shift_axis, Some(Axis::X));
            assert!(d > -10.0 && d < 10.0);
            let shifted = shift_wrap(
                &s,
                ShiftSpec {
                    delta: d,
                    axis: Axis::X,
                },
            );
            let direct = test_dependence(&shifted, &PartitionConfig::default()).unwrap();
            assert_eq!(direct.log_bf, r.log_bf);
        } else {
            assert_eq!(r.shift_axis, None);
        }
    }

    #[test]
    fn degenerate_wraps_are_skipped() {
        // Cutting between the two clusters wraps to a constant margin.
        let s = PairedSample::new(vec![0.0, 0.0, 10.0, 10.0], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = ebayes_test(&s, &PartitionConfig::default(), &midpoints()).unwrap();
        assert_eq!(r.delta_star, None);
    }

    #[test]
    fn single_pair_is_even_odds() {
        let s = PairedSample::new(vec![1.0], vec![2.0]).unwrap();
        let r = ebayes_test(
            &s,
            &PartitionConfig::default(),
            &ShiftSearchConfig::default(),
        )
        .unwrap();
        assert_eq!(r.p_dependent, 0.5);
        assert_eq!(r.method, MethodKind::Ebayes);
    }
}
