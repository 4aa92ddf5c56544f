//! Quaternary partition of the unit square and per-cell quadrant counts.
//!
//! Digits follow the quadrant layout `0` bottom-left, `1` bottom-right,
//! `2` top-left, `3` top-right. A coordinate equal to a cell midpoint belongs
//! to the upper/right child. Only cells holding at least two points are
//! recorded; every other cell contributes a unit factor to the Bayes factor.

use crate::transforms::UnitPoints;

pub const DEFAULT_DEPTH_CAP: usize = 20;

/// Axis-aligned cell `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };

    pub fn mid_x(&self) -> f64 {
        0.5 * (self.x0 + self.x1)
    }

    pub fn mid_y(&self) -> f64 {
        0.5 * (self.y0 + self.y1)
    }

    pub fn child(&self, digit: u8) -> Rect {
        let (mx, my) = (self.mid_x(), self.mid_y());
        let (x0, x1) = if digit & 1 == 0 {
            (self.x0, mx)
        } else {
            (mx, self.x1)
        };
        let (y0, y1) = if digit & 2 == 0 {
            (self.y0, my)
        } else {
            (my, self.y1)
        };
        Rect { x0, x1, y0, y1 }
    }

    /// Bounds of the cell reached by following `address` from the unit square.
    pub fn from_address(address: &[u8]) -> Rect {
        address.iter().fold(Rect::UNIT, |r, &d| r.child(d))
    }
}

/// Quadrant of `cell` containing `(u, v)`.
pub fn quadrant_digit(u: f64, v: f64, cell: &Rect) -> u8 {
    let right = u >= cell.mid_x();
    let top = v >= cell.mid_y();
    (right as u8) | ((top as u8) << 1)
}

/// Quadrant counts of one cell that undergoes a split at level `level`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CellCounts {
    pub address: Vec<u8>,
    /// `address.len() + 1`
    pub level: usize,
    pub counts: [u64; 4],
}

impl CellCounts {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountTree {
    /// Retained cells in depth-first address order.
    pub cells: Vec<CellCounts>,
    pub depth_cap: usize,
    /// A cell with two or more points was cut off by the depth cap.
    pub truncated: bool,
    pub n_points: usize,
}

impl CountTree {
    pub fn max_level(&self) -> usize {
        self.cells.iter().map(|c| c.level).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// Split the unit square recursively, recording counts for every cell with at
/// least two points up to `depth_cap` levels.
///
/// # Panics
///
/// Panics if `depth_cap` is zero.
pub fn build_count_tree(points: &UnitPoints, depth_cap: usize) -> CountTree {
    assert!(depth_cap >= 1, "depth cap must be at least 1");
    let mut builder = Builder {
        points,
        depth_cap,
        cells: Vec::new(),
        truncated: false,
        scratch: vec![0; points.len()],
    };
    let mut idx: Vec<usize> = (0..points.len()).collect();
    let mut address = Vec::with_capacity(depth_cap);
    builder.split(&mut idx, Rect::UNIT, &mut address);
    CountTree {
        cells: builder.cells,
        depth_cap,
        truncated: builder.truncated,
        n_points: points.len(),
    }
}

struct Builder<'a> {
    points: &'a UnitPoints,
    depth_cap: usize,
    cells: Vec<CellCounts>,
    truncated: bool,
    scratch: Vec<usize>,
}

impl Builder<'_> {
    fn split(&mut self, idx: &mut [usize], cell: Rect, address: &mut Vec<u8>) {
        if idx.len() < 2 {
            return;
        }
        if address.len() >= self.depth_cap {
            self.truncated = true;
            return;
        }
        let mut counts = [0u64; 4];
        for &i in idx.iter() {
            counts[quadrant_digit(self.points.u[i], self.points.v[i], &cell) as usize] += 1;
        }

        // Stable counting sort of the indices by quadrant.
        let mut offsets = [0usize; 4];
        for d in 1..4 {
            offsets[d] = offsets[d - 1] + counts[d - 1] as usize;
        }
        let starts = offsets;
        let scratch = &mut self.scratch[..idx.len()];
        for &i in idx.iter() {
            let d = quadrant_digit(self.points.u[i], self.points.v[i], &cell) as usize;
            scratch[offsets[d]] = i;
            offsets[d] += 1;
        }
        idx.copy_from_slice(scratch);

        self.cells.push(CellCounts {
            address: address.clone(),
            level: address.len() + 1,
            counts,
        });

        for d in 0..4u8 {
            let lo = starts[d as usize];
            let hi = lo + counts[d as usize] as usize;
            if hi - lo < 2 {
                continue;
            }
            address.push(d);
            self.split(&mut idx[lo..hi], cell.child(d), address);
            address.pop();
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(coords: &[(f64, f64)]) -> UnitPoints {
        UnitPoints {
            u: coords.iter().map(|c| c.0).collect(),
            v: coords.iter().map(|c| c.1).collect(),
        }
    }

    #[test]
    fn quadrant_layout() {
        assert_eq!(quadrant_digit(0.3, 0.3, &Rect::UNIT), 0);
        assert_eq!(quadrant_digit(0.6, 0.3, &Rect::UNIT), 1);
        assert_eq!(quadrant_digit(0.3, 0.6, &Rect::UNIT), 2);
        assert_eq!(quadrant_digit(0.6, 0.6, &Rect::UNIT), 3);
    }

    #[test]
    fn midpoint_goes_up_and_right() {
        assert_eq!(quadrant_digit(0.5, 0.5, &Rect::UNIT), 3);
        assert_eq!(quadrant_digit(0.5, 0.2, &Rect::UNIT), 1);
        assert_eq!(quadrant_digit(0.2, 0.5, &Rect::UNIT), 2);
    }

    #[test]
    fn child_rects_follow_digits() {
        let r = Rect::from_address(&[3, 0]);
        assert_eq!(
            r,
            Rect {
                x0: 0.5,
                x1: 0.75,
                y0: 0.5,
                y1: 0.75
            }
        );
        assert_eq!(quadrant_digit(0.6, 0.6, &Rect::from_address(&[3])), 0);
    }

    #[test]
    fn single_point_has_no_cells() {
        let t = build_count_tree(&pts(&[(0.2, 0.7)]), 20);
        assert!(t.cells.is_empty());
        assert!(!t.truncated);
    }

    #[test]
    fn two_separated_points_keep_only_root() {
        let t = build_count_tree(&pts(&[(0.2, 0.2), (0.8, 0.8)]), 20);
        assert_eq!(t.cells.len(), 1);
        assert_eq!(t.cells[0].address, Vec::<u8>::new());
        assert_eq!(t.cells[0].level, 1);
        assert_eq!(t.cells[0].counts, [1, 0, 0, 1]);
    }

    #[test]
    fn coincident_points_form_a_truncated_chain() {
        let t = build_count_tree(&pts(&[(0.3, 0.4), (0.3, 0.4)]), 20);
        assert_eq!(t.cells.len(), 20);
        assert!(t.truncated);
        for (k, c) in t.cells.iter().enumerate() {
            assert_eq!(c.level, k + 1);
            assert_eq!(c.total(), 2);
        }
    }

    #[test]
    fn nested_counts() {
        // Three points in the bottom-left quadrant, one top-right.
        let t = build_count_tree(&pts(&[(0.1, 0.1), (0.4, 0.1), (0.1, 0.4), (0.9, 0.9)]), 20);
        assert_eq!(t.cells.len(), 2);
        assert_eq!(t.cells[0].counts, [3, 0, 0, 1]);
        assert_eq!(t.cells[1].address, vec![0]);
        assert_eq!(t.cells[1].counts, [1, 1, 1, 0]);
        assert!(!t.truncated);
    }

    #[test]
    fn depth_cap_of_one_truncates() {
        let t = build_count_tree(&pts(&[(0.1, 0.1), (0.2, 0.2), (0.9, 0.9)]), 1);
        assert_eq!(t.cells.len(), 1);
        assert!(t.truncated);
    }
}
