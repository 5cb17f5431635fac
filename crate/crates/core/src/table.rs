//! Classifying two-sample data into pooled-quartile tables for any
//! hypothesized shift, and the full piecewise-constant trajectory of tables
//! as the shift varies.
//!
//! The cell counts change only at the `n*m` pairwise differences
//! `y_j - x_i`. Between consecutive distinct differences the table is
//! constant, so the whole map `delta -> counts` is a step function described
//! by its breakpoints.

use crate::error::Error;
use crate::hypergeom::{CellCounts, QuartileDesign};
use crate::Result;

/// Raw control (`x`) and treated (`y`) observations. Stored sorted; the
/// statistics computed here depend on the data only through the sorted
/// values.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoSample {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TwoSample {
    /// Validates and sorts the two groups. Requires both groups nonempty,
    /// all values finite, and a pooled size of at least 4.
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidSample("control group is empty".into()));
        }
        if y.is_empty() {
            return Err(Error::InvalidSample("treated group is empty".into()));
        }
        if x.len() + y.len() < 4 {
            return Err(Error::InvalidSample(format!(
                "pooled size must be at least 4, got {}",
                x.len() + y.len()
            )));
        }
        if let Some(v) = x.iter().chain(y.iter()).find(|v| !v.is_finite()) {
            return Err(Error::InvalidSample(format!("non-finite observation {v}")));
        }
        let mut x = x;
        let mut y = y;
        x.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        y.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(TwoSample { x, y })
    }

    /// Sorted control observations.
    pub fn control(&self) -> &[f64] {
        &self.x
    }

    /// Sorted treated observations.
    pub fn treated(&self) -> &[f64] {
        &self.y
    }

    pub fn control_len(&self) -> usize {
        self.x.len()
    }

    pub fn treated_len(&self) -> usize {
        self.y.len()
    }

    pub fn total(&self) -> usize {
        self.x.len() + self.y.len()
    }

    /// The pooled-quartile design implied by the group sizes.
    pub fn design(&self) -> QuartileDesign {
        QuartileDesign::new(self.total(), self.treated_len())
            .expect("sizes were validated on construction")
    }

    /// Same controls with every treated observation shifted by `c`.
    pub fn with_treated_shifted(&self, c: f64) -> Result<TwoSample> {
        TwoSample::new(self.x.clone(), self.y.iter().map(|v| v + c).collect())
    }
}

fn cell_of(pos: usize, q: [usize; 3]) -> usize {
    if pos <= q[0] {
        0
    } else if pos <= q[1] {
        1
    } else if pos <= q[2] {
        2
    } else {
        3
    }
}

/// Builds the cell counts for the hypothesized shift `delta0`.
///
/// The pooled ordering places a shifted treated value *below* a control
/// value it ties with, which makes `delta -> counts` right-continuous in
/// the shift: treated `j` precedes control `i` exactly when
/// `delta0 >= y_j - x_i`. The comparison is evaluated on the pairwise
/// difference itself so that the result is bit-consistent with the
/// breakpoint sweep even when `y_j - delta0` would round onto `x_i`.
pub fn build_table(data: &TwoSample, delta0: f64) -> CellCounts {
    let q = data.design().quartile_indices();
    let x = data.control();
    let mut counts = [0u32; 4];
    for (j, &yv) in data.treated().iter().enumerate() {
        // controls with y_j - x_i > delta0 sit below the shifted value
        let below = x.partition_point(|&xv| yv - xv > delta0);
        let pos = below + j + 1;
        counts[cell_of(pos, q)] += 1;
    }
    CellCounts::new_unchecked(counts)
}

/// Number of pairs with the treated response strictly higher:
/// `#{(i, j) : y_j > x_i}`. Ties contribute zero.
pub fn mann_whitney_count(data: &TwoSample) -> u64 {
    let x = data.control();
    data.treated()
        .iter()
        .map(|&yv| x.partition_point(|&v| v < yv) as u64)
        .sum()
}

/// Sorted distinct pairwise differences `y_j - x_i`: the shifts at which the
/// table can change.
pub(crate) fn sorted_breakpoints(data: &TwoSample) -> Vec<f64> {
    let mut diffs = Vec::with_capacity(data.control_len() * data.treated_len());
    for &yv in data.treated() {
        for &xv in data.control() {
            diffs.push(yv - xv);
        }
    }
    diffs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    diffs.dedup();
    diffs
}

/// The step function `delta -> CellCounts` over the whole real line.
///
/// Segment `t` covers the half-open interval from `breakpoints[t-1]`
/// (inclusive; minus infinity for `t = 0`) up to `breakpoints[t]`
/// (exclusive; plus infinity for the last segment).
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftTrajectory {
    design: QuartileDesign,
    breakpoints: Vec<f64>,
    segments: Vec<CellCounts>,
}

impl ShiftTrajectory {
    pub fn design(&self) -> &QuartileDesign {
        &self.design
    }

    /// Sorted distinct values of `y_j - x_i`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// One constant table per segment; `breakpoints().len() + 1` entries.
    pub fn segments(&self) -> &[CellCounts] {
        &self.segments
    }

    pub fn segment_count(&self) -> usize {
        self.segments.len()
    }

    /// Index of the segment containing `delta` (right-continuous: a
    /// breakpoint belongs to the segment on its right).
    pub fn segment_index(&self, delta: f64) -> usize {
        self.breakpoints.partition_point(|&d| d <= delta)
    }

    /// Half-open interval `[lo, hi)` covered by segment `t`; the end
    /// segments are unbounded.
    pub fn segment_interval(&self, t: usize) -> (f64, f64) {
        let lo = if t == 0 {
            f64::NEG_INFINITY
        } else {
            self.breakpoints[t - 1]
        };
        let hi = if t == self.breakpoints.len() {
            f64::INFINITY
        } else {
            self.breakpoints[t]
        };
        (lo, hi)
    }

    /// Table at an arbitrary shift.
    pub fn counts_at(&self, delta: f64) -> &CellCounts {
        &self.segments[self.segment_index(delta)]
    }
}

/// Builds the trajectory by sorting the pairwise differences once and
/// applying each crossing as an O(1) position update. Coincident
/// breakpoints collapse to a single boundary with all their crossings
/// applied before the segment is emitted.
pub fn trajectory(data: &TwoSample) -> ShiftTrajectory {
    let design = data.design();
    let q = design.quartile_indices();
    let n = data.treated_len();
    let m = data.control_len();

    // (difference, treated index) for every pair
    let mut pairs: Vec<(f64, u32)> = Vec::with_capacity(n * m);
    for (j, &yv) in data.treated().iter().enumerate() {
        for &xv in data.control() {
            pairs.push((yv - xv, j as u32));
        }
    }
    pairs.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    // below every breakpoint the treated values occupy the top n positions
    let mut pos: Vec<usize> = (0..n).map(|j| m + j + 1).collect();
    let mut counts = [0u32; 4];
    for &p in &pos {
        counts[cell_of(p, q)] += 1;
    }

    let mut breakpoints = Vec::new();
    let mut segments = Vec::new();
    segments.push(CellCounts::new_unchecked(counts));

    let mut idx = 0;
    while idx < pairs.len() {
        let d = pairs[idx].0;
        while idx < pairs.len() && pairs[idx].0 == d {
            let j = pairs[idx].1 as usize;
            let old_cell = cell_of(pos[j], q);
            pos[j] -= 1;
            let new_cell = cell_of(pos[j], q);
            if new_cell != old_cell {
                counts[old_cell] -= 1;
                counts[new_cell] += 1;
            }
            idx += 1;
        }
        breakpoints.push(d);
        segments.push(CellCounts::new_unchecked(counts));
    }

    debug_assert!(pos.iter().enumerate().all(|(j, &p)| p == j + 1));

    ShiftTrajectory {
        design,
        breakpoints,
        segments,
    }
}

/// Representative shift inside segment `t` of a breakpoint list: the left
/// endpoint for interior segments (the table is right-continuous), the
/// predecessor float of the first breakpoint for the unbounded left segment.
pub(crate) fn representative_delta(breakpoints: &[f64], t: usize) -> f64 {
    if t == 0 {
        breakpoints[0].next_down()
    } else {
        breakpoints[t - 1]
    }
}

/// Oracle construction of the trajectory: rebuilds the table from scratch at
/// a representative point of every segment. Slower than [`trajectory`] but
/// trusted; the two must agree everywhere.
pub fn trajectory_scratch(data: &TwoSample) -> ShiftTrajectory {
    let design = data.design();
    let breakpoints = sorted_breakpoints(data);
    let segments = (0..=breakpoints.len())
        .map(|t| build_table(data, representative_delta(&breakpoints, t)))
        .collect();
    ShiftTrajectory {
        design,
        breakpoints,
        segments,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    // Reference data used throughout the crate's tests: 7 controls and 16
    // treated responses.
    pub(crate) fn demo_data() -> TwoSample {
        TwoSample::new(
            vec![3.2, 5.1, 8.3, 8.8, 9.5, 11.9, 14.0],
            vec![
                3.7, 6.8, 8.4, 8.5, 10.0, 11.3, 12.0, 12.5, 18.7, 19.0, 20.0, 22.7, 24.0, 31.8,
                33.3, 36.0,
            ],
        )
        .unwrap()
    }

    // Direct pooled-sort implementation of the classification, used as an
    // independent oracle for `build_table`.
    fn build_table_oracle(data: &TwoSample, delta0: f64) -> [u32; 4] {
        #[derive(Clone, Copy)]
        struct Obs {
            value: f64,
            treated: bool,
        }
        let mut pooled: Vec<Obs> = data
            .control()
            .iter()
            .map(|&v| Obs {
                value: v,
                treated: false,
            })
            .chain(data.treated().iter().map(|&v| Obs {
                value: v - delta0,
                treated: true,
            }))
            .collect();
        // treated sorts before control on ties
        pooled.sort_by(|a, b| {
            a.value
                .partial_cmp(&b.value)
                .unwrap()
                .then_with(|| b.treated.cmp(&a.treated))
        });
        let q = data.design().quartile_indices();
        let mut counts = [0u32; 4];
        for (idx, obs) in pooled.iter().enumerate() {
            if obs.treated {
                counts[cell_of(idx + 1, q)] += 1;
            }
        }
        counts
    }

    #[test]
    fn demo_table_at_8_69() {
        let data = demo_data();
        let a = build_table(&data, 8.69);
        assert_eq!(a.counts(), [6, 2, 3, 5]);
    }

    #[test]
    fn tie_rule_pins_the_jump_at_8_7() {
        let data = demo_data();
        let w = [0.0, 1.0, 2.0, 3.0];
        let t = |a: &CellCounts| -> f64 {
            a.as_f64().iter().zip(&w).map(|(ai, wi)| ai * wi).sum()
        };
        let at = build_table(&data, 8.7);
        assert_eq!(at.counts(), [6, 2, 4, 4]);
        assert_eq!(t(&at), 22.0);
        assert_eq!(t(&build_table(&data, 8.69999)), 23.0);
    }

    #[test]
    fn margins_always_hold() {
        let data = demo_data();
        let design = data.design();
        for delta in [-100.0, -3.5, 0.0, 2.5, 8.69, 8.7, 19.5, 1e6] {
            let a = build_table(&data, delta);
            assert!(CellCounts::new(a.counts(), &design).is_ok());
        }
        // identical groups still satisfy the margin identities
        let same = TwoSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        let a = build_table(&same, 0.0);
        assert_eq!(a.counts().iter().sum::<u32>(), 3);
    }

    #[test]
    fn build_table_matches_pooled_sort_oracle() {
        let data = demo_data();
        for delta in [-5.0, 0.0, 4.35, 8.69, 8.7, 14.0, 22.7, 100.0] {
            assert_eq!(
                build_table(&data, delta).counts(),
                build_table_oracle(&data, delta),
                "delta = {delta}"
            );
        }
    }

    #[test]
    fn mann_whitney_reference() {
        let data = demo_data();
        assert_eq!(mann_whitney_count(&data), 87);
        assert_eq!(data.total(), 23);
        assert_eq!(data.control_len() * data.treated_len(), 112);

        let tiny = TwoSample::new(vec![1.0, 1.0, 1.0], vec![2.0]).unwrap();
        assert_eq!(mann_whitney_count(&tiny), 3);
        let below = TwoSample::new(vec![5.0, 6.0, 7.0], vec![1.0]).unwrap();
        assert_eq!(mann_whitney_count(&below), 0);
        // ties contribute zero
        let tied = TwoSample::new(vec![1.0, 2.0, 3.0], vec![2.0]).unwrap();
        assert_eq!(mann_whitney_count(&tied), 1);
    }

    #[test]
    fn trajectory_tiny_example() {
        let data = TwoSample::new(vec![0.0, 0.0, 0.0], vec![1.0, 2.0]).unwrap();
        let traj = trajectory(&data);
        assert_eq!(traj.breakpoints(), &[1.0, 2.0]);
        assert_eq!(traj.segment_count(), 3);
    }

    #[test]
    fn trajectory_matches_scratch_on_demo_data() {
        let data = demo_data();
        let fast = trajectory(&data);
        let slow = trajectory_scratch(&data);
        assert_eq!(fast, slow);
        // every breakpoint is a pairwise difference and segments agree with
        // a direct rebuild at interior points
        for t in 0..fast.segment_count() {
            let rep = representative_delta(fast.breakpoints(), t);
            assert_eq!(fast.segments()[t], build_table(&data, rep));
        }
    }

    #[test]
    fn trajectory_end_segments() {
        let data = demo_data();
        let traj = trajectory(&data);
        let first = traj.segments()[0].counts();
        assert_eq!(first, [0, 5, 6, 5]);
        let last = traj.segments()[traj.segment_count() - 1].counts();
        assert_eq!(last, [6, 6, 4, 0]);
        // leftmost segment: treated occupy the top 16 pooled positions
        let w = [0.0, 1.0, 2.0, 3.0];
        let t0: f64 = first
            .iter()
            .zip(&w)
            .map(|(&a, &wi)| a as f64 * wi)
            .sum();
        assert_eq!(t0, 32.0);
    }

    #[test]
    fn monotone_cells_along_trajectory() {
        let data = demo_data();
        let traj = trajectory(&data);
        let mut prev_a1 = 0;
        let mut prev_a4 = u32::MAX;
        for seg in traj.segments() {
            let c = seg.counts();
            assert!(c[0] >= prev_a1, "a1 must be nondecreasing");
            assert!(c[3] <= prev_a4, "a4 must be nonincreasing");
            prev_a1 = c[0];
            prev_a4 = c[3];
        }
    }

    #[test]
    fn segment_index_is_right_continuous() {
        let data = TwoSample::new(vec![0.0, 0.5, 3.0], vec![1.0, 2.0]).unwrap();
        let traj = trajectory(&data);
        for (t, &bp) in traj.breakpoints().iter().enumerate() {
            assert_eq!(traj.segment_index(bp), t + 1);
            assert_eq!(traj.counts_at(bp), &build_table(&data, bp));
        }
    }

    #[test]
    fn rejects_bad_samples() {
        assert!(TwoSample::new(vec![], vec![1.0, 2.0, 3.0]).is_err());
        assert!(TwoSample::new(vec![1.0], vec![]).is_err());
        assert!(TwoSample::new(vec![1.0], vec![2.0, f64::NAN]).is_err());
        assert!(TwoSample::new(vec![1.0], vec![2.0, f64::INFINITY, 3.0]).is_err());
        assert!(TwoSample::new(vec![1.0], vec![2.0, 3.0]).is_err()); // N = 3
    }
}
