use super::{BranchMetric, Trellis, NUM_STATES};
use crate::equalizer::WhitenerCoeffs;
use crate::error::{Error, Result};

/// Conventional 4-state NPML Viterbi detector with per-survivor decision
/// feedback.
///
/// [`NpmlViterbi::detect_block`] decides the whole block at once from the
/// best terminal state. [`NpmlViterbi::detect_windowed`] decides every
/// `period` bits and restarts from the decided state, using register-exchange
/// survivor memory; it is the reference that a depth-1 list detector without
/// error detection must reproduce.
#[derive(Clone, Debug)]
pub struct NpmlViterbi {
    metric: BranchMetric,
}

struct Survivors {
    metric: [f64; NUM_STATES],
    history: [u32; NUM_STATES],
}

impl Survivors {
    fn start(state: usize, history: u32) -> Self {
        let mut metric = [f64::INFINITY; NUM_STATES];
        metric[state] = 0.0;
        Survivors {
            metric,
            history: [history; NUM_STATES],
        }
    }

    /// Add-compare-select; returns the chosen predecessor of every state.
    fn acs(&mut self, bm: &BranchMetric, z: &[f64], n: usize) -> [usize; NUM_STATES] {
        let common = bm.sample_term(z, n);
        let mut metric = [f64::INFINITY; NUM_STATES];
        let mut history = [0u32; NUM_STATES];
        let mut chosen = [0usize; NUM_STATES];
        for to in 0..NUM_STATES {
            let [j0, j1] = Trellis::predecessors(to);
            let m0 = self.metric[j0]
                + BranchMetric::cost(
                    z[n] - Trellis::output(j0, to),
                    bm.predicted(common, self.history[j0]),
                );
            let m1 = self.metric[j1]
                + BranchMetric::cost(
                    z[n] - Trellis::output(j1, to),
                    bm.predicted(common, self.history[j1]),
                );
            let j = if m1 < m0 { j1 } else { j0 };
            metric[to] = if m1 < m0 { m1 } else { m0 };
            history[to] = (self.history[j] << 1) | (to >> 1) as u32;
            chosen[to] = j;
        }
        self.metric = metric;
        self.history = history;
        chosen
    }

    fn best(&self) -> usize {
        (0..NUM_STATES).fold(0, |b, s| if self.metric[s] < self.metric[b] { s } else { b })
    }
}

impl NpmlViterbi {
    pub fn new(whitener: &WhitenerCoeffs) -> Result<Self> {
        Ok(NpmlViterbi {
            metric: BranchMetric::new(whitener)?,
        })
    }

    /// Plain PR4 Viterbi (no noise prediction).
    pub fn pr4() -> Self {
        Self::new(&WhitenerCoeffs::zero(0)).expect("empty predictor")
    }

    /// Maximum-likelihood decision over `z[start..]` from state 0.
    pub fn detect_block(&self, z: &[f64], start: usize) -> Vec<u8> {
        let len = z.len().saturating_sub(start);
        let mut surv = Survivors::start(0, 0);
        let mut back = vec![[0u8; NUM_STATES]; len];
        for (t, slot) in back.iter_mut().enumerate() {
            let chosen = surv.acs(&self.metric, z, start + t);
            for (b, c) in slot.iter_mut().zip(chosen) {
                *b = c as u8;
            }
        }
        let mut bits = vec![0u8; len];
        let mut s = surv.best();
        for t in (0..len).rev() {
            bits[t] = (s >> 1) as u8;
            s = back[t][s] as usize;
        }
        bits
    }

    /// Per-window decisions with hard restart from the decided state.
    pub fn detect_windowed(&self, z: &[f64], start: usize, period: usize) -> Result<Vec<u8>> {
        if period == 0 || start > z.len() || !(z.len() - start).is_multiple_of(period) {
            return Err(Error::shape(format!(
                "{} samples is not a whole number of {period}-bit windows",
                z.len().saturating_sub(start)
            )));
        }
        let mut out = Vec::with_capacity(z.len() - start);
        let mut paths = vec![vec![0u8; period]; NUM_STATES];
        let mut next_paths = paths.clone();
        let (mut state, mut history) = (0usize, 0u32);
        for first in (start..z.len()).step_by(period) {
            let mut surv = Survivors::start(state, history);
            for t in 0..period {
                let chosen = surv.acs(&self.metric, z, first + t);
                for to in 0..NUM_STATES {
                    next_paths[to][..t].copy_from_slice(&paths[chosen[to]][..t]);
                    next_paths[to][t] = (to >> 1) as u8;
                }
                std::mem::swap(&mut paths, &mut next_paths);
            }
            let best = surv.best();
            out.extend_from_slice(&paths[best]);
            state = best;
            history = surv.history[best];
        }
        Ok(out)
    }
}
