//! Analytic Bayes factor of independence (M0) against dependence (M1).
//!
//! Under M0 each cell splits through two independent Beta(2a, 2a) branching
//! probabilities, one per axis; under M1 through a Dirichlet(a, a, a, a) over
//! the four quadrants. Both marginal likelihoods factor over cells, so the
//! Bayes factor is a product of per-cell ratios `b_j` that equal one for any
//! cell with fewer than two points.

use libm::lgamma as ln_gamma;
use serde::Serialize;

use crate::config::{HyperParams, MethodKind, PartitionConfig};
use crate::error::Result;
use crate::transforms::{to_unit_square_with_factor, Axis, PairedSample};
use crate::tree::{build_count_tree, CountTree};

/// Rising factorials up to this length are summed term by term.
const DIRECT_RISING_MAX: u64 = 64;

/// `ln Γ(t + m) - ln Γ(t)` for `t > 0`.
pub(crate) fn ln_rising(t: f64, m: u64) -> f64 {
    if m == 0 {
        0.0
    } else if m <= DIRECT_RISING_MAX {
        (0..m).map(|i| (t + i as f64).ln()).sum()
    } else {
        ln_gamma(t + m as f64) - ln_gamma(t)
    }
}

/// Log of the per-cell Bayes factor term for quadrant counts `counts` and
/// Dirichlet parameter `a`.
///
/// Written as differences of log-gamma values:
/// `ln b = Σ_axes,halves [lnΓ(m + 2a) - lnΓ(2a)] - [lnΓ(n + 4a) - lnΓ(4a)] - Σ_i [lnΓ(n_i + a) - lnΓ(a)]`,
/// where the four half-counts `m` are the left, right, bottom and top totals.
pub fn log_beta_ratio_bj(counts: [u64; 4], a: f64) -> f64 {
    let [n0, n1, n2, n3] = counts;
    let n = n0 + n1 + n2 + n3;
    if n <= 1 {
        return 0.0;
    }
    let two_a = 2.0 * a;
    let independent = ln_rising(two_a, n0 + n2)
        + ln_rising(two_a, n1 + n3)
        + ln_rising(two_a, n0 + n1)
        + ln_rising(two_a, n2 + n3);
    let joint = ln_rising(4.0 * a, n) + counts.iter().map(|&ni| ln_rising(a, ni)).sum::<f64>();
    independent - joint
}

/// Log Bayes factor over all retained cells plus its per-level breakdown
/// (`levels[k - 1]` holds `B_k`).
pub fn log_bayes_factor(tree: &CountTree, hp: &HyperParams) -> (f64, Vec<f64>) {
    let mut levels = vec![0.0; tree.max_level()];
    let mut total = 0.0;
    for cell in &tree.cells {
        let term = log_beta_ratio_bj(cell.counts, hp.cell_param(cell.level));
        levels[cell.level - 1] += term;
        total += term;
    }
    (total, levels)
}

/// Posterior probability of dependence, `1 / (1 + prior_odds * BF)`.
pub fn posterior_dependence(log_bf: f64, prior_odds: f64) -> f64 {
    let t = log_bf + prior_odds.ln();
    if t > 0.0 {
        let e = (-t).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + t.exp())
    }
}

/// Outcome of one dependence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestResult {
    pub n: usize,
    pub method: MethodKind,
    pub c: f64,
    pub prior_odds: f64,
    pub depth_cap: usize,
    /// `ln[p(x, y | M0) / p(x, y | M1)]`
    pub log_bf: f64,
    pub p_dependent: f64,
    /// `B_1, B_2, ...`
    pub level_contributions: Vec<f64>,
    /// Chosen wrap position; `None` when the median-centred partition won.
    pub delta_star: Option<f64>,
    pub shift_axis: Option<Axis>,
    pub truncated: bool,
}

impl TestResult {
    pub fn p_independent(&self) -> f64 {
        1.0 - self.p_dependent
    }

    /// `B_k` for 1-based level `k`, zero past the deepest retained level.
    pub fn level(&self, k: usize) -> f64 {
        k.checked_sub(1)
            .and_then(|i| self.level_contributions.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Log Bayes factor of a sample on its median-centred partition.
pub(crate) struct Evaluation {
    pub log_bf: f64,
    pub levels: Vec<f64>,
    pub truncated: bool,
}

pub(crate) fn evaluate(sample: &PairedSample, cfg: &PartitionConfig) -> Result<Evaluation> {
    // No cell can hold two points, so the partition is irrelevant.
    if sample.len() < 2 {
        return Ok(Evaluation {
            log_bf: 0.0,
            levels: Vec::new(),
            truncated: false,
        });
    }
    let points = to_unit_square_with_factor(sample, cfg.mad_factor)?;
    let tree = build_count_tree(&points, cfg.depth_cap);
    let (log_bf, levels) = log_bayes_factor(&tree, &cfg.hyper);
    Ok(Evaluation {
        log_bf,
        levels,
        truncated: tree.truncated,
    })
}

pub(crate) fn make_result(
    sample: &PairedSample,
    cfg: &PartitionConfig,
    method: MethodKind,
    eval: Evaluation,
    shift: Option<(Axis, f64)>,
) -> TestResult {
    TestResult {
        n: sample.len(),
        method,
        c: cfg.hyper.c,
        prior_odds: cfg.hyper.prior_odds,
        depth_cap: cfg.depth_cap,
        log_bf: eval.log_bf,
        p_dependent: posterior_dependence(eval.log_bf, cfg.hyper.prior_odds),
        level_contributions: eval.levels,
        delta_star: shift.map(|s| s.1),
        shift_axis: shift.map(|s| s.0),
        truncated: eval.truncated,
    }
}

/// Median-centred Pólya-tree test of dependence.
pub fn test_dependence(sample: &PairedSample, cfg: &PartitionConfig) -> Result<TestResult> {
    cfg.validate()?;
    let eval = evaluate(sample, cfg)?;
    Ok(make_result(sample, cfg, MethodKind::Basic, eval, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::CellCounts;

    fn cell(address: Vec<u8>, counts: [u64; 4]) -> CellCounts {
        CellCounts {
            level: address.len() + 1,
            address,
            counts,
        }
    }

    #[test]
    fn empty_and_single_counts_are_exactly_zero() {
        assert_eq!(log_beta_ratio_bj([0, 0, 0, 0], 5.0), 0.0);
        for i in 0..4 {
            let mut c = [0; 4];
            c[i] = 1;
            assert_eq!(log_beta_ratio_bj(c, 5.0), 0.0);
        }
    }

    #[test]
    fn two_points_hand_computed() {
        // Two points in the same quadrant, a = 1, as rising factorials:
        // independent: (2)_2 * (2)_0 * (2)_2 * (2)_0 = 6 * 6 = 36
        // joint: (4)_2 * (1)_2 = 20 * 2 = 40
        let expected = (36.0f64 / 40.0).ln();
        assert!((log_beta_ratio_bj([2, 0, 0, 0], 1.0) - expected).abs() < 1e-15);
        // Opposite corners: independent (2)(2)(2)(2) = 16, joint (4)_2 (1)(1) = 20
        let expected = (16.0f64 / 20.0).ln();
        assert!((log_beta_ratio_bj([1, 0, 0, 1], 1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn mirror_and_transpose_symmetry() {
        let c = [3, 7, 1, 4];
        let base = log_beta_ratio_bj(c, 2.5);
        assert!((log_beta_ratio_bj([3, 1, 7, 4], 2.5) - base).abs() < 1e-12);
        assert!((log_beta_ratio_bj([7, 3, 4, 1], 2.5) - base).abs() < 1e-12);
        assert!((log_beta_ratio_bj([1, 4, 3, 7], 2.5) - base).abs() < 1e-12);
    }

    #[test]
    fn large_counts_switch_to_log_gamma() {
        // Both evaluation routes must agree where they meet.
        let t = 7.5;
        let direct: f64 = (0..200).map(|i| (t + i as f64).ln()).sum();
        assert!((ln_rising(t, 200) - direct).abs() < 1e-10);
    }

    #[test]
    fn vanishes_as_parameter_grows() {
        // |ln b| decays like 1/a.
        let c = [3, 0, 0, 3];
        let shallow = log_beta_ratio_bj(c, 5.0).abs();
        let deep = log_beta_ratio_bj(c, 5.0 * 400.0).abs();
        assert!(deep < shallow / 100.0);
        assert!(deep < 2e-3);
    }

    #[test]
    fn empty_tree_gives_zero() {
        let tree = CountTree {
            cells: vec![],
            depth_cap: 20,
            truncated: false,
            n_points: 1,
        };
        let (lbf, levels) = log_bayes_factor(&tree, &HyperParams::default());
        assert_eq!(lbf, 0.0);
        assert!(levels.is_empty());
    }

    #[test]
    fn root_only_tree_uses_level_one() {
        let tree = CountTree {
            cells: vec![cell(vec![], [1, 0, 0, 1])],
            depth_cap: 20,
            truncated: false,
            n_points: 2,
        };
        let hp = HyperParams::default();
        let (lbf, levels) = log_bayes_factor(&tree, &hp);
        assert_eq!(lbf, log_beta_ratio_bj([1, 0, 0, 1], 5.0));
        assert_eq!(levels, vec![lbf]);
    }

    #[test]
    fn levels_aggregate_cells() {
        let tree = CountTree {
            cells: vec![
                cell(vec![], [4, 0, 0, 3]),
                cell(vec![0], [2, 1, 1, 0]),
                cell(vec![0, 0], [1, 0, 0, 1]),
                cell(vec![3], [0, 1, 2, 0]),
            ],
            depth_cap: 20,
            truncated: false,
            n_points: 7,
        };
        let hp = HyperParams {
            c: 1.0,
            prior_odds: 1.0,
        };
        let (lbf, levels) = log_bayes_factor(&tree, &hp);
        assert_eq!(levels.len(), 3);
        let l2 = log_beta_ratio_bj([2, 1, 1, 0], 4.0) + log_beta_ratio_bj([0, 1, 2, 0], 4.0);
        assert!((levels[1] - l2).abs() < 1e-15);
        assert_eq!(levels[2], log_beta_ratio_bj([1, 0, 0, 1], 9.0));
        assert!((levels.iter().sum::<f64>() - lbf).abs() < 1e-12);
    }

    #[test]
    fn posterior_values() {
        assert_eq!(posterior_dependence(0.0, 1.0), 0.5);
        assert!((posterior_dependence(3f64.ln(), 1.0) - 0.25).abs() < 1e-15);
        assert!((posterior_dependence(0.0, 3.0) - 0.25).abs() < 1e-15);
        let tiny = posterior_dependence(200.0, 1.0);
        assert!(tiny > 0.0 && tiny < 1e-80);
        assert_eq!(posterior_dependence(-200.0, 1.0), 1.0);
        assert_eq!(posterior_dependence(1e6, 1.0), 0.0);
    }

    #[test]
    fn posterior_complement() {
        for i in -400..=400 {
            let l = i as f64 * 0.1;
            let s = posterior_dependence(l, 1.0) + posterior_dependence(-l, 1.0);
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_decreases_in_log_bf() {
        let mut prev = 1.0;
        for i in -100..=100 {
            let p = posterior_dependence(i as f64 * 0.25, 1.0);
            assert!(p < prev);
            prev = p;
        }
    }

    #[test]
    fn single_pair_is_even_odds() {
        let s = PairedSample::new(vec![3.0], vec![-1.0]).unwrap();
        let r = test_dependence(&s, &PartitionConfig::default()).unwrap();
        assert_eq!(r.p_dependent, 0.5);
        assert_eq!(r.log_bf, 0.0);
        assert!(r.level_contributions.is_empty());
    }

    #[test]
    fn coincident_pairs_truncate_with_finite_result() {
        let s = PairedSample::new(vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        let r = test_dependence(&s, &PartitionConfig::default()).unwrap();
        assert!(r.truncated);
        assert!(r.log_bf.is_finite());
        assert_eq!(r.level_contributions.len(), 20);
    }

    #[test]
    fn constant_margin_propagates() {
        let s = PairedSample::new(vec![2.0, 2.0], vec![0.0, 1.0]).unwrap();
        let err = test_dependence(&s, &PartitionConfig::default()).unwrap_err();
        assert!(err.is_degenerate());
    }

    #[test]
    fn invalid_config_rejected() {
        let s = PairedSample::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(test_dependence(&s, &PartitionConfig::default().with_c(0.0)).is_err());
        assert!(test_dependence(&s, &PartitionConfig::default().with_prior_odds(-1.0)).is_err());
        assert!(test_dependence(&s, &PartitionConfig::default().with_depth_cap(0)).is_err());
    }
}
