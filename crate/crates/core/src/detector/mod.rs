//! Noise-predictive List-Viterbi detection on the 4-state PR4 trellis.
//!
//! The trellis state is the pair of most recent channel bits,
//! `state = (b_{n-1} << 1) | b_{n-2}`. Each state keeps a rank-ordered list
//! of up to `N` survivors with accumulated metric `phi`, predecessor state
//! `beta` and predecessor rank `r`. Branch costs are whitened with a
//! length-`L` noise predictor whose past noise estimates are rebuilt from each
//! survivor's own bit history, so the trellis stays at 4 states.
//!
//! Detection runs over non-overlapping windows of `period` bits. At the end
//! of a window every survivor of every state is a candidate; the candidates
//! are checked in metric order against an error-detection gate and the first
//! that passes is the decision (the best one if none passes). The next window
//! restarts from the chosen survivor alone, at metric 0.
//!
//! Ranks are 0-based throughout.

mod baseline;
mod gate;
mod list;

pub use baseline::NpmlViterbi;
pub use gate::EdcGate;
pub use list::{
    window_update, DetectorOutput, ListState, ListViterbi, PathEntry, WindowCandidate,
    WindowDecision, WindowDiagnostics,
};

use serde::{Deserialize, Serialize};

use crate::equalizer::WhitenerCoeffs;
use crate::error::{Error, Result};

pub const NUM_STATES: usize = 4;

/// Longest supported noise predictor.
pub const MAX_ORDER: usize = 12;

#[inline]
fn nrz(bit: usize) -> f64 {
    if bit & 1 == 1 {
        1.0
    } else {
        -1.0
    }
}

/// One branch of the PR4 trellis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub bit: u8,
    /// Noiseless PR4 output `a_n - a_{n-2}` in {-2, 0, +2}.
    pub output: f64,
}

/// The 4-state PR4 (1 - D^2) trellis.
#[derive(Clone, Copy, Debug, Default)]
pub struct Trellis;

impl Trellis {
    #[inline]
    pub const fn next_state(from: usize, bit: u8) -> usize {
        ((bit as usize) << 1) | (from >> 1)
    }

    /// The two states leading into `to`, lower index first.
    #[inline]
    pub const fn predecessors(to: usize) -> [usize; 2] {
        let hi = (to & 1) << 1;
        [hi, hi | 1]
    }

    /// State after the bits `.., before_last, last`.
    pub const fn state_of(last: u8, before_last: u8) -> usize {
        ((last as usize) << 1) | before_last as usize
    }

    #[inline]
    pub fn output(from: usize, to: usize) -> f64 {
        nrz(to >> 1) - nrz(from & 1)
    }

    pub fn transitions() -> [Transition; 8] {
        let mut out = [Transition {
            from: 0,
            to: 0,
            bit: 0,
            output: 0.0,
        }; 8];
        for from in 0..NUM_STATES {
            for bit in 0..2u8 {
                let to = Self::next_state(from, bit);
                out[2 * from + bit as usize] = Transition {
                    from,
                    to,
                    bit,
                    output: Self::output(from, to),
                };
            }
        }
        out
    }
}

/// Whitened branch cost
/// `((z_n - y) - sum_i p_i * (z_{n-1-i} - yhat_{n-1-i}))^2`, where
/// `past_errors[i] = z_{n-1-i} - yhat_{n-1-i}` along the survivor.
pub fn branch_cost(z_n: f64, ideal: f64, past_errors: &[f64], p: &WhitenerCoeffs) -> f64 {
    let predicted: f64 = p.p.iter().zip(past_errors).map(|(a, e)| a * e).sum();
    let e = (z_n - ideal) - predicted;
    e * e
}

/// Precomputed form of [`branch_cost`] used in the detector loops.
///
/// The predicted noise splits into a part common to all survivors,
/// `sum_i p_i z_{n-1-i}`, and a part fixed by the survivor's last `L + 2`
/// bits, `sum_i p_i yhat_{n-1-i}`, which is tabulated.
#[derive(Clone, Debug)]
pub struct BranchMetric {
    p: Vec<f64>,
    mask: u32,
    ideal_term: Vec<f64>,
}

impl BranchMetric {
    pub fn new(whitener: &WhitenerCoeffs) -> Result<Self> {
        let order = whitener.order();
        if order > MAX_ORDER {
            return Err(Error::config(format!(
                "whitener order {order} exceeds {MAX_ORDER}"
            )));
        }
        if whitener.p.iter().any(|v| !v.is_finite()) {
            return Err(Error::config("whitener coefficients must be finite"));
        }
        let width = order + 2;
        let mask = ((1u64 << width) - 1) as u32;
        // history bit i is b_{n-1-i}
        let ideal_term = (0..=mask)
            .map(|h| {
                (0..order)
                    .map(|i| {
                        let b = |k: usize| ((h >> k) & 1) as usize;
                        whitener.p[i] * (nrz(b(i)) - nrz(b(i + 2)))
                    })
                    .sum()
            })
            .collect();
        Ok(BranchMetric {
            p: whitener.p.clone(),
            mask,
            ideal_term,
        })
    }

    pub fn order(&self) -> usize {
        self.p.len()
    }

    /// `sum_i p_i z[n-1-i]`; samples before index 0 count as zero.
    #[inline]
    pub fn sample_term(&self, z: &[f64], n: usize) -> f64 {
        let mut acc = 0.0;
        for (i, p) in self.p.iter().enumerate() {
            if n > i {
                acc += p * z[n - 1 - i];
            }
        }
        acc
    }

    /// Predicted noise for a survivor with bit history `history`.
    #[inline]
    pub fn predicted(&self, sample_term: f64, history: u32) -> f64 {
        sample_term - self.ideal_term[(history & self.mask) as usize]
    }

    #[inline]
    pub fn cost(innovation: f64, predicted: f64) -> f64 {
        let e = innovation - predicted;
        e * e
    }
}

/// List-Viterbi parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Survivors kept per state (N).
    pub depth: usize,
    pub whitener: WhitenerCoeffs,
    /// Window length in channel bits (P).
    pub period: usize,
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::config("list depth must be at least 1"));
        }
        if self.depth > u16::MAX as usize {
            return Err(Error::config(format!("list depth {} is too large", self.depth)));
        }
        if self.period == 0 {
            return Err(Error::config("window period must be positive"));
        }
        if self.whitener.order() > MAX_ORDER {
            return Err(Error::config(format!(
                "whitener order {} exceeds {MAX_ORDER}",
                self.whitener.order()
            )));
        }
        Ok(())
    }
}
