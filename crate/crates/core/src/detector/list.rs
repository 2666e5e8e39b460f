use super::{BranchMetric, DetectorConfig, EdcGate, Trellis, NUM_STATES};
use crate::error::{Error, Result};

/// One survivor of a state's list.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathEntry {
    /// Accumulated metric.
    pub phi: f64,
    /// Predecessor state.
    pub beta: usize,
    /// Predecessor rank.
    pub rank: usize,
    /// Survivor bits, most recent in bit 0. Supplies the reconstructed ideal
    /// outputs for noise prediction.
    pub history: u32,
}

/// Rank-ordered survivor lists of all states at one time instant.
#[derive(Clone, Debug, PartialEq)]
pub struct ListState {
    depth: usize,
    len: [usize; NUM_STATES],
    phi: Vec<f64>,
    history: Vec<u32>,
    /// Packed `(beta << 16) | rank` of each slot.
    origin: Vec<u32>,
}

/// Depths up to this use sorted insertion; larger ones sort and merge.
const INSERTION_DEPTH: usize = 8;

#[inline]
fn pack(state: usize, rank: usize) -> u32 {
    ((state as u32) << 16) | rank as u32
}

#[inline]
fn unpack(v: u32) -> (usize, usize) {
    ((v >> 16) as usize, (v & 0xFFFF) as usize)
}

impl ListState {
    /// Empty lists (every slot at the +inf sentinel).
    pub fn empty(depth: usize) -> Self {
        ListState {
            depth,
            len: [0; NUM_STATES],
            phi: vec![0.0; NUM_STATES * depth],
            history: vec![0; NUM_STATES * depth],
            origin: vec![0; NUM_STATES * depth],
        }
    }

    /// A single survivor at `state` with metric 0.
    pub fn restart(depth: usize, state: usize, history: u32) -> Self {
        let mut s = Self::empty(depth);
        s.reset_to(state, history);
        s
    }

    fn reset_to(&mut self, state: usize, history: u32) {
        self.len = [0; NUM_STATES];
        let slot = state * self.depth;
        self.len[state] = 1;
        self.phi[slot] = 0.0;
        self.history[slot] = history;
        self.origin[slot] = pack(state, 0);
    }

    /// Builds lists from explicit per-state metrics (ascending), for
    /// inspection and tests. Histories are zero.
    pub fn from_metrics(depth: usize, metrics: [&[f64]; NUM_STATES]) -> Result<Self> {
        let mut s = Self::empty(depth);
        for (state, m) in metrics.iter().enumerate() {
            if m.len() > depth {
                return Err(Error::shape(format!(
                    "state {state} has {} metrics for depth {depth}",
                    m.len()
                )));
            }
            if m.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Input(format!("metrics of state {state} are not sorted")));
            }
            s.len[state] = m.len();
            s.phi[state * depth..state * depth + m.len()].copy_from_slice(m);
        }
        Ok(s)
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self, state: usize) -> usize {
        self.len[state]
    }

    pub fn is_empty(&self) -> bool {
        self.len.iter().all(|&l| l == 0)
    }

    pub fn metrics(&self, state: usize) -> &[f64] {
        let s = state * self.depth;
        &self.phi[s..s + self.len[state]]
    }

    pub fn entry(&self, state: usize, rank: usize) -> Option<PathEntry> {
        (rank < self.len[state]).then(|| {
            let slot = state * self.depth + rank;
            let (beta, r) = unpack(self.origin[slot]);
            PathEntry {
                phi: self.phi[slot],
                beta,
                rank: r,
                history: self.history[slot],
            }
        })
    }

    pub fn entries(&self, state: usize) -> Vec<PathEntry> {
        (0..self.len[state])
            .filter_map(|r| self.entry(state, r))
            .collect()
    }

    /// One list recursion with caller-supplied branch costs
    /// `cost(from, rank, to)`.
    ///
    /// For each target state, keeps the `depth` smallest of
    /// `phi(from, rank) + cost(from, rank, to)` over both incoming states and
    /// all their survivors. Ties go to the lower predecessor state, then the
    /// lower predecessor rank. Costs must be non-negative.
    pub fn step_with<F>(&self, next: &mut ListState, cost: F)
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        if self.depth <= INSERTION_DEPTH {
            self.step_insert(next, cost);
        } else {
            self.step_merge(next, cost);
        }
    }

    /// Sorted insertion. Candidates are visited in tie-break order and a
    /// predecessor's remaining ranks are skipped once its metric alone cannot
    /// beat the current worst kept entry (costs are non-negative).
    fn step_insert<F>(&self, next: &mut ListState, mut cost: F)
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        debug_assert_eq!(self.depth, next.depth);
        let depth = self.depth;
        for to in 0..NUM_STATES {
            let base = to * depth;
            let mut kept = 0usize;
            let bit = (to >> 1) as u32;
            for from in Trellis::predecessors(to) {
                let src = from * depth;
                for rank in 0..self.len[from] {
                    let phi = self.phi[src + rank];
                    if kept == depth && phi >= next.phi[base + depth - 1] {
                        break;
                    }
                    let m = phi + cost(from, rank, to);
                    if kept == depth && !(m < next.phi[base + depth - 1]) {
                        continue;
                    }
                    // first slot whose metric exceeds m
                    let pos = next.phi[base..base + kept].partition_point(|&v| v <= m);
                    let mut i = base + if kept == depth { depth - 1 } else { kept };
                    while i > base + pos {
                        next.phi[i] = next.phi[i - 1];
                        next.history[i] = next.history[i - 1];
                        next.origin[i] = next.origin[i - 1];
                        i -= 1;
                    }
                    next.phi[base + pos] = m;
                    next.history[base + pos] = (self.history[src + rank] << 1) | bit;
                    next.origin[base + pos] = pack(from, rank);
                    if kept < depth {
                        kept += 1;
                    }
                }
            }
            next.len[to] = kept;
        }
    }

    /// Sorts each predecessor's extensions (nearly sorted already: survivors
    /// of one state differ in cost only through older history bits), then
    /// merges the two runs. The second predecessor stops as soon as its
    /// metric alone reaches the first one's `depth`-th extension.
    fn step_merge<F>(&self, next: &mut ListState, mut cost: F)
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        debug_assert_eq!(self.depth, next.depth);
        let depth = self.depth;
        // Metrics are non-negative, so their bit patterns order like the
        // values; the low word breaks ties by (state, rank).
        let key = |m: f64, from: usize, rank: usize| {
            debug_assert!(m >= 0.0);
            ((m.to_bits() as u128) << 32) | pack(from, rank) as u128
        };
        let mut runs: [Vec<u128>; 2] = [Vec::with_capacity(depth), Vec::with_capacity(depth)];
        for to in 0..NUM_STATES {
            let mut bound = f64::INFINITY;
            for (run, from) in runs.iter_mut().zip(Trellis::predecessors(to)) {
                run.clear();
                let src = from * depth;
                for rank in 0..self.len[from] {
                    let phi = self.phi[src + rank];
                    if phi >= bound {
                        break;
                    }
                    let k = key(phi + cost(from, rank, to), from, rank);
                    let mut i = run.len();
                    run.push(k);
                    while i > 0 && run[i - 1] > k {
                        run[i] = run[i - 1];
                        i -= 1;
                    }
                    run[i] = k;
                }
                run.truncate(depth);
                if run.len() == depth {
                    bound = f64::from_bits((run[depth - 1] >> 32) as u64);
                }
            }
            let base = to * depth;
            let bit = (to >> 1) as u32;
            let [a, b] = &runs;
            let (mut i, mut j) = (0, 0);
            let mut kept = 0;
            while kept < depth && (i < a.len() || j < b.len()) {
                let k = if j == b.len() || (i < a.len() && a[i] < b[j]) {
                    i += 1;
                    a[i - 1]
                } else {
                    j += 1;
                    b[j - 1]
                };
                let origin = k as u32;
                let (from, rank) = unpack(origin);
                next.phi[base + kept] = f64::from_bits((k >> 32) as u64);
                next.history[base + kept] = (self.history[from * depth + rank] << 1) | bit;
                next.origin[base + kept] = origin;
                kept += 1;
            }
            next.len[to] = kept;
        }
    }

    /// One list recursion on equalized sample `z[n]` with noise-predictive
    /// branch costs.
    pub fn step(&self, next: &mut ListState, metric: &BranchMetric, z: &[f64], n: usize) {
        let mut predicted = vec![0.0; NUM_STATES * self.depth];
        self.step_into(next, metric, z, n, &mut predicted);
    }

    /// Same as [`ListState::step`] with caller-owned scratch for the
    /// predictions.
    fn step_into(
        &self,
        next: &mut ListState,
        metric: &BranchMetric,
        z: &[f64],
        n: usize,
        predicted: &mut [f64],
    ) {
        let common = metric.sample_term(z, n);
        let zn = z[n];
        let depth = self.depth;
        for state in 0..NUM_STATES {
            let s = state * depth;
            for r in 0..self.len[state] {
                predicted[s + r] = metric.predicted(common, self.history[s + r]);
            }
        }
        let innovation = |from: usize, to: usize| zn - Trellis::output(from, to);
        self.step_with(next, |from, rank, to| {
            BranchMetric::cost(innovation(from, to), predicted[from * depth + rank])
        });
    }

    /// All live `(metric, state, rank)` triples in ascending metric order,
    /// ties broken by state then rank.
    pub fn ranked_terminals(&self) -> Vec<(f64, usize, usize)> {
        let mut out = Vec::with_capacity(NUM_STATES * self.depth);
        for state in 0..NUM_STATES {
            for r in 0..self.len[state] {
                out.push((self.phi[state * self.depth + r], state, r));
            }
        }
        out.sort_by(|a, b| {
            a.0.total_cmp(&b.0)
                .then(a.1.cmp(&b.1))
                .then(a.2.cmp(&b.2))
        });
        out
    }
}

/// A decoded window proposed to the update stage.
#[derive(Clone, Debug, PartialEq)]
pub struct WindowCandidate {
    pub bits: Vec<u8>,
    pub metric: f64,
    pub terminal_state: usize,
    pub terminal_rank: usize,
    /// Survivor bit history at the window end.
    pub history: u32,
}

/// Decision of the update stage for one window.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowDecision {
    /// Position of the chosen candidate in the metric-ordered list.
    pub chosen: usize,
    pub edc_pass: bool,
    pub fallback: bool,
}

/// Picks the first candidate (in metric order) that passes the gate, else the
/// best one, and returns the restarted lists for the next window.
pub fn window_update(
    candidates: &[WindowCandidate],
    gate: &EdcGate<'_>,
    window_index: usize,
    start_state: usize,
    depth: usize,
) -> Result<(WindowDecision, ListState)> {
    if candidates.is_empty() {
        return Err(Error::Input("update stage received no candidates".into()));
    }
    let mut scratch = Vec::new();
    let mut decision = WindowDecision {
        chosen: 0,
        edc_pass: false,
        fallback: true,
    };
    for (i, c) in candidates.iter().enumerate() {
        if gate.check(window_index, start_state, &c.bits, &mut scratch)? {
            decision = WindowDecision {
                chosen: i,
                edc_pass: true,
                fallback: false,
            };
            break;
        }
    }
    let c = &candidates[decision.chosen];
    Ok((decision, ListState::restart(depth, c.terminal_state, c.history)))
}

/// Per-window record of the update stage.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WindowDiagnostics {
    pub index: usize,
    /// 0-based position of the chosen candidate in metric order.
    pub chosen_rank: usize,
    pub candidates: usize,
    pub edc_pass: bool,
    pub fallback: bool,
    pub metric_best: f64,
    pub metric_chosen: f64,
    /// Audit only: whether the transmitted window was among the candidates.
    pub reference_listed: Option<bool>,
    /// Audit only: whether the chosen window equals the transmitted one.
    pub chosen_is_reference: Option<bool>,
}

impl WindowDiagnostics {
    pub const CSV_HEADER: &'static str =
        "window_index,chosen_rank,edc_pass,fallback_used,metric_best,metric_chosen";

    /// CSV row; `chosen_rank` is written 1-based.
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{:.9e},{:.9e}",
            self.index,
            self.chosen_rank + 1,
            self.edc_pass as u8,
            self.fallback as u8,
            self.metric_best,
            self.metric_chosen
        )
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetectorOutput {
    /// Decided channel bits.
    pub bits: Vec<u8>,
    pub windows: Vec<WindowDiagnostics>,
}

impl DetectorOutput {
    pub fn trace_csv(&self) -> String {
        let mut s = String::from(WindowDiagnostics::CSV_HEADER);
        s.push('\n');
        for w in &self.windows {
            s.push_str(&w.csv_row());
            s.push('\n');
        }
        s
    }
}

/// Windowed noise-predictive List-Viterbi detector.
#[derive(Clone, Debug)]
pub struct ListViterbi {
    cfg: DetectorConfig,
    metric: BranchMetric,
    /// Backpointers of every step in the current window.
    back: Vec<u32>,
    lists: [ListState; 2],
    predicted: Vec<f64>,
}

impl ListViterbi {
    pub fn new(cfg: DetectorConfig) -> Result<Self> {
        cfg.validate()?;
        let metric = BranchMetric::new(&cfg.whitener)?;
        let slots = NUM_STATES * cfg.depth;
        Ok(ListViterbi {
            back: vec![0; cfg.period * slots],
            lists: [ListState::empty(cfg.depth), ListState::empty(cfg.depth)],
            predicted: vec![0.0; slots],
            metric,
            cfg,
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.cfg
    }

    /// Runs one window of `period` steps on `z[first..first + period]` from
    /// `start`, leaving the terminal lists in `self.lists[0]`.
    fn run_window(&mut self, z: &[f64], first: usize, start: ListState) {
        let slots = NUM_STATES * self.cfg.depth;
        self.lists[0] = start;
        for t in 0..self.cfg.period {
            let [cur, next] = &mut self.lists;
            cur.step_into(next, &self.metric, z, first + t, &mut self.predicted);
            self.back[t * slots..(t + 1) * slots].copy_from_slice(&next.origin);
            self.lists.swap(0, 1);
        }
    }

    /// Follows `(beta, rank)` pointers from a terminal survivor back to the
    /// window start, writing its bits into `out`.
    fn trace(&self, state: usize, rank: usize, out: &mut [u8]) {
        let depth = self.cfg.depth;
        let slots = NUM_STATES * depth;
        let (mut s, mut r) = (state, rank);
        for t in (0..self.cfg.period).rev() {
            out[t] = (s >> 1) as u8;
            let (ps, pr) = unpack(self.back[t * slots + s * depth + r]);
            s = ps;
            r = pr;
        }
    }

    /// Runs one window and returns every terminal survivor as a candidate,
    /// best metric first.
    pub fn window_candidates(&mut self, z: &[f64], first: usize, start: ListState) -> Result<Vec<WindowCandidate>> {
        if first + self.cfg.period > z.len() {
            return Err(Error::shape("window extends past the sample stream"));
        }
        self.run_window(z, first, start);
        Ok(self.traceback_candidates())
    }

    /// Materializes all terminal survivors of the last window, best first.
    pub fn traceback_candidates(&self) -> Vec<WindowCandidate> {
        let lists = &self.lists[0];
        lists
            .ranked_terminals()
            .into_iter()
            .map(|(metric, state, rank)| {
                let mut bits = vec![0u8; self.cfg.period];
                self.trace(state, rank, &mut bits);
                WindowCandidate {
                    bits,
                    metric,
                    terminal_state: state,
                    terminal_rank: rank,
                    history: lists.history[state * self.cfg.depth + rank],
                }
            })
            .collect()
    }

    /// Detects `z[start..]`, whose length must be a whole number of windows.
    /// Samples before `start` are history: the bits under them are taken as 0
    /// (trellis state 0).
    ///
    /// With `audit` set and a gate that knows the transmitted stream, every
    /// candidate is compared against it and the outcome recorded.
    pub fn run(&mut self, z: &[f64], start: usize, gate: &EdcGate<'_>, audit: bool) -> Result<DetectorOutput> {
        let period = self.cfg.period;
        if start > z.len() || !(z.len() - start).is_multiple_of(period) {
            return Err(Error::shape(format!(
                "{} samples is not a whole number of {period}-bit windows",
                z.len().saturating_sub(start)
            )));
        }
        if gate.period() != period {
            return Err(Error::config(format!(
                "gate period {} differs from detector period {period}",
                gate.period()
            )));
        }
        let windows = (z.len() - start) / period;
        let mut out = DetectorOutput {
            bits: Vec::with_capacity(windows * period),
            windows: Vec::with_capacity(windows),
        };
        let mut start_state = 0usize;
        let mut history = 0u32;
        let mut bits = vec![0u8; period];
        let mut scratch = Vec::with_capacity(period);
        for w in 0..windows {
            let first = start + w * period;
            let restart = ListState::restart(self.cfg.depth, start_state, history);
            self.run_window(z, first, restart);
            let ranked = self.lists[0].ranked_terminals();
            if ranked.is_empty() {
                return Err(Error::Input(format!("window {w} has no survivors")));
            }
            let mut chosen = None;
            for (i, &(_, s, r)) in ranked.iter().enumerate() {
                self.trace(s, r, &mut bits);
                if gate.check(w, start_state, &bits, &mut scratch)? {
                    chosen = Some(i);
                    break;
                }
            }
            let (pos, passed) = match chosen {
                Some(i) => (i, true),
                None => (0, false),
            };
            let (metric, s, r) = ranked[pos];
            self.trace(s, r, &mut bits);

            let (reference_listed, chosen_is_reference) = match (audit, gate.reference_window(w)) {
                (true, Some(reference)) if bits == reference => (Some(true), Some(true)),
                (true, Some(reference)) => {
                    let mut probe = vec![0u8; period];
                    let listed = ranked.iter().any(|&(_, ps, pr)| {
                        self.trace(ps, pr, &mut probe);
                        probe == reference
                    });
                    (Some(listed), Some(false))
                }
                _ => (None, None),
            };

            out.bits.extend_from_slice(&bits);
            out.windows.push(WindowDiagnostics {
                index: w,
                chosen_rank: pos,
                candidates: ranked.len(),
                edc_pass: passed,
                fallback: !passed,
                metric_best: ranked[0].0,
                metric_chosen: metric,
                reference_listed,
                chosen_is_reference,
            });
            start_state = s;
            history = self.lists[0].history[s * self.cfg.depth + r];
        }
        Ok(out)
    }
}
