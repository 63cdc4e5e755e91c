//! The growing-block partition of time.
//!
//! Block `j` covers `T_j = {t_j, ..., t_j + j - 1}` with `t_1 = 1` and
//! `t_{j+1} = t_j + j`, so `t_j = 1 + j(j-1)/2` and the blocks partition the
//! positive integers. Block `j` runs its own Hedge instance over the first
//! `j` experts at rate `eta_j = sqrt((8/j) ln j)`.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ScheduleError {
    #[error("time and block indices start at 1, got 0")]
    ZeroIndex,
}

/// First time step of block `j`: `1 + j(j-1)/2`.
pub fn block_start(j: u64) -> u64 {
    debug_assert!(j >= 1);
    1 + j * (j - 1) / 2
}

/// The unique `j` with `n ∈ T_j`.
///
/// The closed form `⌈√(8n+1)/2 - 1/2⌉` is evaluated in floating point and
/// then corrected against the exact integer block starts, so the result
/// matches the unrolled recurrence for every representable `n`.
pub fn block_index(n: u64) -> Result<u64, ScheduleError> {
    if n == 0 {
        return Err(ScheduleError::ZeroIndex);
    }
    let guess = (0.5 * ((8 * n + 1) as f64).sqrt() - 0.5).ceil() as u64;
    let mut j = guess.max(1);
    while block_start(j) > n {
        j -= 1;
    }
    while block_start(j + 1) <= n {
        j += 1;
    }
    Ok(j)
}

/// `eta_j = sqrt((8/j) ln j)`; exactly zero in the one-expert first block.
pub fn learning_rate(j: u64) -> Result<f64, ScheduleError> {
    if j == 0 {
        return Err(ScheduleError::ZeroIndex);
    }
    Ok((8.0 / j as f64 * (j as f64).ln()).sqrt())
}

/// Epoch descriptor: block index, start time, length and learning rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockSchedule {
    pub j: u64,
    pub start: u64,
    pub len: u64,
    pub eta: f64,
}

impl BlockSchedule {
    pub fn for_block(j: u64) -> Result<Self, ScheduleError> {
        if j == 0 {
            return Err(ScheduleError::ZeroIndex);
        }
        Ok(Self { j, start: block_start(j), len: j, eta: learning_rate(j)? })
    }

    pub fn at_time(n: u64) -> Result<Self, ScheduleError> {
        Self::for_block(block_index(n)?)
    }

    /// Whether `t` is the first step of this block.
    pub fn is_block_start(&self, t: u64) -> bool {
        t == self.start
    }

    pub fn contains(&self, t: u64) -> bool {
        t >= self.start && t < self.start + self.len
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Recurrence-unrolled oracle: walk t_{j+1} = t_j + j until n is covered.
    fn block_index_oracle(n: u64) -> u64 {
        let (mut j, mut start) = (1u64, 1u64);
        loop {
            if n < start + j {
                return j;
            }
            start += j;
            j += 1;
        }
    }

    #[test]
    fn spot_values_match_hand_unrolling() {
        // T_1={1}, T_2={2,3}, T_3={4,5,6}, T_4={7..10}
        assert_eq!(block_index(1).unwrap(), 1);
        assert_eq!(block_index(6).unwrap(), 3);
        assert_eq!(block_index(7).unwrap(), 4);
        assert_eq!(block_index(10).unwrap(), 4);
        assert_eq!(block_index(11).unwrap(), 5);
        assert_eq!(block_index(0), Err(ScheduleError::ZeroIndex));
    }

    #[test]
    fn closed_form_matches_oracle_on_prefix_and_boundaries() {
        for n in 1..=20_000u64 {
            assert_eq!(block_index(n).unwrap(), block_index_oracle(n), "n={n}");
        }
        // block boundaries are the risky spots for the float closed form
        for j in 1..=2_000_000u64 {
            let s = block_start(j);
            assert_eq!(block_index(s).unwrap(), j);
            assert_eq!(block_index(s + j - 1).unwrap(), j);
        }
    }

    #[test]
    fn blocks_partition_time() {
        let mut expected_start = 1u64;
        for j in 1..=700u64 {
            let b = BlockSchedule::for_block(j).unwrap();
            assert_eq!(b.start, expected_start);
            assert_eq!(b.len, j);
            expected_start += j;
        }
        // consecutive time steps never skip or overlap blocks
        let mut prev = block_index(1).unwrap();
        for n in 2..=50_000u64 {
            let j = block_index(n).unwrap();
            assert!(j == prev || j == prev + 1);
            prev = j;
        }
    }

    #[test]
    fn learning_rate_frozen_values() {
        assert_eq!(learning_rate(1).unwrap(), 0.0);
        // oracle: mpmath — sqrt(2 ln 4) = sqrt(4 ln 2) = 1.66510922231539551
        assert!((learning_rate(4).unwrap() - 1.6651092223153955).abs() < 1e-15);
        assert!((learning_rate(2).unwrap() - 1.6651092223153955).abs() < 1e-15);
        // sqrt(0.08 ln 100) = 0.606970851754058540
        assert!((learning_rate(100).unwrap() - 0.6069708517540585).abs() < 1e-15);
    }
}
