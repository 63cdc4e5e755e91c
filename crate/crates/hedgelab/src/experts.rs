//! A countable, enumerable family of dyadic histogram functions on `[0,1]^d`.
//!
//! Expert `i` is a function constant on each half-open dyadic cell
//! `[k 2^-m, (k+1) 2^-m)` per coordinate (the right boundary `1.0` belongs to
//! the last cell), taking values on a finite outcome grid. The enumeration is
//! tier-major: tier `r` holds every function of resolution at most `r` whose
//! values lie in the tier-`r` grid, listed by mixed-radix counting over the
//! `2^{rd}` depth-`r` cells with cell 0 as the most significant digit, and
//! functions already expressible at tier `r-1` are skipped. This makes the
//! enumeration a bijection: every (resolution, assignment) pair appears at
//! exactly one index.
//!
//! For label spaces the grid is all labels at every tier; for the interval it
//! is the dyadic rationals `{k 2^-r : 0 <= k <= 2^r}`, so tier grids are
//! nested. Tier sizes grow doubly exponentially; a configured tier cap keeps
//! materialization at desk scale and fails loudly past it.

use crate::loss::{Outcome, OutcomeSpace};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExpertError {
    #[error("expert indices start at 1")]
    ZeroIndex,
    #[error("expert {index} lies beyond tier cap {max_tier} (family holds {available} functions)")]
    TierCapExceeded { index: usize, max_tier: u32, available: u128 },
    #[error("tier cap {max_tier} with dimension {dimension} exceeds the materializable cell budget")]
    CellBudgetExceeded { max_tier: u32, dimension: usize },
    #[error("input has dimension {got}, expert expects {expected}")]
    DimensionMismatch { got: usize, expected: usize },
    #[error("coordinate {coord} = {value} outside the unit cube")]
    OutsideCube { coord: usize, value: f64 },
    #[error("dimension must be at least 1")]
    ZeroDimension,
}

/// Enumeration parameters: input dimension and the largest materializable tier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FamilyConfig {
    pub dimension: usize,
    pub max_tier: u32,
}

impl Default for FamilyConfig {
    fn default() -> Self {
        Self { dimension: 1, max_tier: 8 }
    }
}

/// One member function: piecewise constant on depth-`resolution` dyadic cells.
#[derive(Debug, Clone, PartialEq)]
pub struct DyadicExpert {
    pub index: usize,
    pub resolution: u32,
    pub dimension: usize,
    pub cells: Vec<Outcome>,
}

impl DyadicExpert {
    /// The cell value containing `x`; `x = 1.0` maps into the last cell.
    pub fn evaluate(&self, x: &[f64]) -> Result<Outcome, ExpertError> {
        Ok(self.cells[self.cell_of(x)?])
    }

    fn cell_of(&self, x: &[f64]) -> Result<usize, ExpertError> {
        if x.len() != self.dimension {
            return Err(ExpertError::DimensionMismatch { got: x.len(), expected: self.dimension });
        }
        let bins = 1usize << self.resolution;
        let mut flat = 0usize;
        for (c, &v) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(ExpertError::OutsideCube { coord: c, value: v });
            }
            let k = ((v * bins as f64) as usize).min(bins - 1);
            flat = flat * bins + k;
        }
        Ok(flat)
    }
}

/// The enumerable family for one outcome space and input dimension.
#[derive(Debug, Clone)]
pub struct DyadicFamily {
    space: OutcomeSpace,
    config: FamilyConfig,
}

impl DyadicFamily {
    pub fn new(space: OutcomeSpace, config: FamilyConfig) -> Result<Self, ExpertError> {
        if config.dimension == 0 {
            return Err(ExpertError::ZeroDimension);
        }
        // cells per expert at the cap: 2^(tier * dimension)
        if config.max_tier as usize * config.dimension > 22 {
            return Err(ExpertError::CellBudgetExceeded {
                max_tier: config.max_tier,
                dimension: config.dimension,
            });
        }
        Ok(Self { space, config })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn config(&self) -> FamilyConfig {
        self.config
    }

    /// Outcome grid at a tier, in enumeration (digit) order.
    pub fn grid(&self, tier: u32) -> Vec<Outcome> {
        match &self.space {
            OutcomeSpace::Interval => {
                let denom = 1u64 << tier;
                (0..=denom).map(|k| Outcome::Real(k as f64 / denom as f64)).collect()
            }
            labelled => (0..labelled.label_count().expect("label space"))
                .map(Outcome::Label)
                .collect(),
        }
    }

    fn grid_len(&self, tier: u32) -> u128 {
        match &self.space {
            OutcomeSpace::Interval => (1u128 << tier) + 1,
            labelled => labelled.label_count().expect("label space") as u128,
        }
    }

    fn cell_count(&self, tier: u32) -> usize {
        1usize << (tier as usize * self.config.dimension)
    }

    /// Total number of distinct functions in tiers `0..=tier`, saturating.
    ///
    /// Every assignment of tier-`tier` grid values to depth-`tier` cells is a
    /// distinct function and earlier tiers are exactly the assignments that
    /// refine, so the cumulative count is `grid_len(tier) ^ cells(tier)`.
    pub fn cumulative_count(&self, tier: u32) -> u128 {
        let g = self.grid_len(tier);
        let mut acc: u128 = 1;
        for _ in 0..self.cell_count(tier) {
            acc = acc.saturating_mul(g);
        }
        acc
    }

    /// The family member at 1-based `index`.
    pub fn expert(&self, index: usize) -> Result<DyadicExpert, ExpertError> {
        let mut out = self.materialize_range(index, 1)?;
        Ok(out.pop().expect("one expert requested"))
    }

    /// Members `1..=count`, enumerated in a single pass.
    pub fn materialize(&self, count: usize) -> Result<Vec<DyadicExpert>, ExpertError> {
        self.materialize_range(1, count)
    }

    fn materialize_range(&self, first: usize, count: usize) -> Result<Vec<DyadicExpert>, ExpertError> {
        if first == 0 {
            return Err(ExpertError::ZeroIndex);
        }
        let last = first + count - 1;
        let mut out = Vec::with_capacity(count);
        let mut next_index = 1usize;

        for tier in 0..=self.config.max_tier {
            let start_of_tier = if tier == 0 { 0 } else { self.cumulative_count(tier - 1) };
            let end_of_tier = self.cumulative_count(tier);
            let new_in_tier = end_of_tier - start_of_tier;
            if (next_index as u128) + new_in_tier <= first as u128 {
                // whole tier precedes the requested range
                next_index += new_in_tier as usize;
                continue;
            }

            let cells = self.cell_count(tier);
            let grid = self.grid(tier);
            let mut digits = vec![0usize; cells];
            loop {
                if !self.is_refinement(tier, &digits) {
                    if next_index >= first {
                        out.push(DyadicExpert {
                            index: next_index,
                            resolution: tier,
                            dimension: self.config.dimension,
                            cells: digits.iter().map(|&d| grid[d]).collect(),
                        });
                        if next_index == last {
                            return Ok(out);
                        }
                    }
                    next_index += 1;
                }
                if !increment(&mut digits, grid.len()) {
                    break;
                }
            }
        }

        Err(ExpertError::TierCapExceeded {
            index: last,
            max_tier: self.config.max_tier,
            available: self.cumulative_count(self.config.max_tier),
        })
    }

    /// Whether a tier-`tier` assignment is already expressible at tier-1:
    /// constant across sibling cells and (for the interval grid) with all
    /// values on the coarser grid.
    fn is_refinement(&self, tier: u32, digits: &[usize]) -> bool {
        if tier == 0 {
            return false;
        }
        if matches!(self.space, OutcomeSpace::Interval) && digits.iter().any(|d| d % 2 != 0) {
            return false;
        }
        let d = self.config.dimension;
        let bins = 1usize << tier;
        for (flat, &digit) in digits.iter().enumerate() {
            // representative sibling: low bit of every coordinate cleared
            let mut rep = 0usize;
            let mut rem = flat;
            let mut scale = 1usize;
            for _ in 0..d {
                let k = rem % bins;
                rem /= bins;
                rep += (k & !1) * scale;
                scale *= bins;
            }
            if digits[rep] != digit {
                return false;
            }
        }
        true
    }
}

/// Odometer step over `digits` in base `radix`, least significant digit last.
/// Returns false when the counter wraps to all zeros.
fn increment(digits: &mut [usize], radix: usize) -> bool {
    for d in digits.iter_mut().rev() {
        *d += 1;
        if *d < radix {
            return true;
        }
        *d = 0;
    }
    false
}

/// Best approximation of a comparator by family prefixes, on observed inputs.
///
/// For each `M` in the ascending `m_grid`, reports
/// `min over i <= M of (1/n) sum_t loss(expert_i(x_t), f0(x_t))`.
/// The curve is nonincreasing in `M` by construction.
pub fn density_profile(
    family: &DyadicFamily,
    f0: &dyn Fn(&[f64]) -> Outcome,
    xs: &[Vec<f64>],
    m_grid: &[usize],
) -> Result<Vec<(usize, f64)>, ExpertError> {
    assert!(!xs.is_empty(), "density profile needs at least one input point");
    assert!(m_grid.first().is_some_and(|&m| m >= 1), "m_grid must start at 1 or later");
    assert!(m_grid.windows(2).all(|w| w[0] < w[1]), "m_grid must be ascending");
    let max_m = *m_grid.last().expect("nonempty m_grid");
    let experts = family.materialize(max_m)?;
    let targets: Vec<Outcome> = xs.iter().map(|x| f0(x)).collect();
    let space = family.space();

    let mut profile = Vec::with_capacity(m_grid.len());
    let mut best = f64::INFINITY;
    let mut next = m_grid.iter().copied().peekable();
    for (pos, expert) in experts.iter().enumerate() {
        let mut total = 0.0;
        for (x, target) in xs.iter().zip(&targets) {
            let z = expert.evaluate(x)?;
            total += space.loss(&z, target).expect("family values lie in the carrier");
        }
        best = best.min(total / xs.len() as f64);
        while next.peek() == Some(&(pos + 1)) {
            profile.push((pos + 1, best));
            next.next();
        }
    }
    Ok(profile)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    fn binary_family(max_tier: u32) -> DyadicFamily {
        DyadicFamily::new(OutcomeSpace::Binary, FamilyConfig { dimension: 1, max_tier }).unwrap()
    }

    #[test]
    fn first_indices_are_the_constants_then_steps() {
        let fam = binary_family(4);
        let e1 = fam.expert(1).unwrap();
        assert_eq!(e1.resolution, 0);
        assert_eq!(e1.cells, vec![Outcome::Label(0)]);
        let e2 = fam.expert(2).unwrap();
        assert_eq!(e2.cells, vec![Outcome::Label(1)]);
        // tier 1 contributes the two non-constant step functions
        let e3 = fam.expert(3).unwrap();
        assert_eq!(e3.cells, vec![Outcome::Label(0), Outcome::Label(1)]);
        let e4 = fam.expert(4).unwrap();
        assert_eq!(e4.cells, vec![Outcome::Label(1), Outcome::Label(0)]);
        // the next tier starts right after: cumulative counts are 2, 4, 16
        assert_eq!(fam.cumulative_count(0), 2);
        assert_eq!(fam.cumulative_count(1), 4);
        assert_eq!(fam.cumulative_count(2), 16);
        assert_eq!(fam.expert(5).unwrap().resolution, 2);
    }

    #[test]
    fn evaluation_respects_half_open_cells() {
        let fam = binary_family(4);
        let step = fam.expert(3).unwrap(); // 0 on [0,1/2), 1 on [1/2,1]
        assert_eq!(step.evaluate(&[0.0]).unwrap(), Outcome::Label(0));
        assert_eq!(step.evaluate(&[0.499]).unwrap(), Outcome::Label(0));
        assert_eq!(step.evaluate(&[0.5]).unwrap(), Outcome::Label(1));
        assert_eq!(step.evaluate(&[1.0]).unwrap(), Outcome::Label(1));
        assert!(matches!(
            step.evaluate(&[1.2]),
            Err(ExpertError::OutsideCube { coord: 0, .. })
        ));
        assert!(step.evaluate(&[0.1, 0.2]).is_err());
    }

    #[test]
    fn interval_grids_are_nested_dyadics() {
        let fam =
            DyadicFamily::new(OutcomeSpace::Interval, FamilyConfig { dimension: 1, max_tier: 3 })
                .unwrap();
        assert_eq!(fam.grid(0), vec![Outcome::Real(0.0), Outcome::Real(1.0)]);
        assert_eq!(
            fam.grid(1),
            vec![Outcome::Real(0.0), Outcome::Real(0.5), Outcome::Real(1.0)]
        );
        for tier in 0..3 {
            let coarse: HashSet<u64> = fam
                .grid(tier)
                .iter()
                .map(|o| match o {
                    Outcome::Real(v) => v.to_bits(),
                    _ => unreachable!(),
                })
                .collect();
            let fine: HashSet<u64> = fam
                .grid(tier + 1)
                .iter()
                .map(|o| match o {
                    Outcome::Real(v) => v.to_bits(),
                    _ => unreachable!(),
                })
                .collect();
            assert!(coarse.is_subset(&fine));
        }
        // tier-0 duplicates are skipped inside tier 1: 9 assignments, 2 dups
        assert_eq!(fam.cumulative_count(1), 9);
        let e3 = fam.expert(3).unwrap();
        assert_eq!(e3.resolution, 1);
    }

    #[test]
    fn enumeration_is_injective_on_a_probe_grid() {
        let fam = binary_family(5);
        let experts = fam.materialize(600).unwrap();
        let probe: Vec<Vec<f64>> = (0..64).map(|k| vec![(k as f64 + 0.5) / 64.0]).collect();
        let mut seen = HashSet::new();
        for e in &experts {
            let fingerprint: Vec<(u8, u64)> =
                probe.iter().map(|x| e.evaluate(x).unwrap().key()).collect();
            assert!(seen.insert(fingerprint), "expert {} duplicates an earlier one", e.index);
        }
        // reproducibility: single-index lookups agree with the batch pass
        for i in [1usize, 2, 3, 17, 255, 256, 257, 599] {
            assert_eq!(fam.expert(i).unwrap(), experts[i - 1]);
        }
    }

    #[test]
    fn two_dimensional_cells_flatten_row_major() {
        let fam =
            DyadicFamily::new(OutcomeSpace::Binary, FamilyConfig { dimension: 2, max_tier: 2 })
                .unwrap();
        // tier 1 in 2d: 4 cells; first non-refinement has digits (0,0,0,1),
        // i.e. 1 only on the cell with both coordinates in the upper half
        let e3 = fam.expert(3).unwrap();
        assert_eq!(e3.resolution, 1);
        assert_eq!(e3.evaluate(&[0.1, 0.1]).unwrap(), Outcome::Label(0));
        assert_eq!(e3.evaluate(&[0.9, 0.9]).unwrap(), Outcome::Label(1));
        assert_eq!(e3.evaluate(&[0.1, 0.9]).unwrap(), Outcome::Label(0));
        assert_eq!(e3.evaluate(&[0.9, 0.1]).unwrap(), Outcome::Label(0));
    }

    #[test]
    fn tier_cap_fails_loudly() {
        let fam = binary_family(1);
        assert_eq!(
            fam.expert(5),
            Err(ExpertError::TierCapExceeded { index: 5, max_tier: 1, available: 4 })
        );
        assert!(DyadicFamily::new(
            OutcomeSpace::Binary,
            FamilyConfig { dimension: 4, max_tier: 8 }
        )
        .is_err());
    }

    #[test]
    fn planted_member_profile_reaches_exact_zero() {
        let fam = binary_family(4);
        let target = fam.expert(5).unwrap();
        let xs: Vec<Vec<f64>> = (0..500).map(|k| vec![k as f64 / 499.0]).collect();
        let f0 = move |x: &[f64]| target.evaluate(x).unwrap();
        let profile = density_profile(&fam, &f0, &xs, &[1, 2, 4, 5, 9, 16]).unwrap();
        for &(m, v) in &profile {
            assert!(v >= 0.0);
            if m >= 5 {
                assert_eq!(v, 0.0, "profile must hit exactly zero at M={m}");
            }
        }
        assert!(profile.windows(2).all(|w| w[1].1 <= w[0].1), "profile must be nonincreasing");
    }

    /// Independent oracle for exhausted tiers: the best tier-r function
    /// decomposes cell by cell, so the minimum is the sum of per-cell minima
    /// over grid values. The enumerated prefix must agree exactly once a
    /// tier is fully listed.
    #[test]
    fn profile_at_tier_exhaustion_matches_per_cell_oracle() {
        let fam = binary_family(3);
        let xs: Vec<Vec<f64>> = (0..2000).map(|k| vec![(k as f64 + 0.5) / 2000.0]).collect();
        let f0 = |x: &[f64]| Outcome::Label(usize::from(x[0] > 1.0 / 3.0));
        let space = fam.space().clone();

        let oracle = |resolution: u32| -> f64 {
            let bins = 1usize << resolution;
            let mut total = 0.0;
            for cell in 0..bins {
                let members: Vec<&Vec<f64>> = xs
                    .iter()
                    .filter(|x| ((x[0] * bins as f64) as usize).min(bins - 1) == cell)
                    .collect();
                let best: f64 = fam
                    .grid(resolution)
                    .iter()
                    .map(|v| {
                        members
                            .iter()
                            .map(|x| space.loss(v, &f0(x)).unwrap())
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min);
                total += best;
            }
            total / xs.len() as f64
        };

        let m_grid = [2usize, 4, 16, 256];
        let profile = density_profile(&fam, &f0, &xs, &m_grid).unwrap();
        for (tier, &(m, value)) in profile.iter().enumerate() {
            assert_eq!(m as u128, fam.cumulative_count(tier as u32));
            let expected = oracle(tier as u32);
            assert!(
                (value - expected).abs() < 1e-12,
                "tier {tier}: profile {value} vs oracle {expected}"
            );
        }
    }
}
