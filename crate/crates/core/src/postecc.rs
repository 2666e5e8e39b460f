//! Codeword failure rate of a bounded-distance RS decoder from block error
//! statistics (block multinomial model).
//!
//! A codeword of `n` symbols is cut into `n / M` blocks of `M` symbols. If
//! `y_w` is the probability that a block carries exactly `w` symbol errors and
//! blocks are independent, the failure probability is
//!
//! ```text
//! CFR = sum_{j=1}^{j_max} C(n/M, j) * y_0^(n/M - j) * [D^{>t}] Y(D)^j
//! ```
//!
//! where `Y(D) = y_1 D + .. + y_M D^M` and `[D^{>t}]` takes the mass of the
//! terms of degree above `t`. Truncating at `j_max = 2t` drops patterns with
//! more than `2t` erroneous blocks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Block error-weight distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightDistribution {
    /// `y[w]` for `w = 0..=M`; `y[0]` is the residual `1 - sum_{w>0} y_w`.
    y: Vec<f64>,
    /// Observed block counts per weight, when estimated from data.
    counts: Option<Vec<u64>>,
}

impl WeightDistribution {
    /// From `(y_1, .., y_M)`.
    pub fn from_probabilities(y_nonzero: &[f64]) -> Result<Self> {
        if y_nonzero.is_empty() {
            return Err(Error::Input("block size must be at least 1".into()));
        }
        if let Some(v) = y_nonzero.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Input(format!("probability {v} outside [0, 1]")));
        }
        let mass: f64 = y_nonzero.iter().sum();
        if mass > 1.0 + 1e-12 {
            return Err(Error::Input(format!("block weights sum to {mass} > 1")));
        }
        let mut y = Vec::with_capacity(y_nonzero.len() + 1);
        y.push((1.0 - mass).max(0.0));
        y.extend_from_slice(y_nonzero);
        Ok(WeightDistribution { y, counts: None })
    }

    /// Error-free distribution for block size `m`.
    pub fn zero(m: usize) -> Self {
        let mut y = vec![0.0; m + 1];
        y[0] = 1.0;
        WeightDistribution { y, counts: None }
    }

    /// Counts errors in consecutive `m`-symbol blocks of `flags`.
    pub fn estimate(flags: &[bool], m: usize) -> Result<Self> {
        let mut acc = WeightCounter::new(m)?;
        acc.add(flags)?;
        acc.distribution()
    }

    pub fn block_size(&self) -> usize {
        self.y.len() - 1
    }

    /// `y_w` for `w = 0..=M`.
    pub fn probabilities(&self) -> &[f64] {
        &self.y
    }

    pub fn y0(&self) -> f64 {
        self.y[0]
    }

    pub fn counts(&self) -> Option<&[u64]> {
        self.counts.as_deref()
    }

    pub fn blocks(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c.iter().sum())
    }

    /// Blocks observed with at least one error.
    pub fn error_blocks(&self) -> Option<u64> {
        self.counts.as_ref().map(|c| c[1..].iter().sum())
    }

    /// CSV with header `w,y_w,count`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("w,y_w,count\n");
        for (w, y) in self.y.iter().enumerate() {
            let count = self
                .counts
                .as_ref()
                .map(|c| c[w].to_string())
                .unwrap_or_default();
            s.push_str(&format!("{w},{y:.9e},{count}\n"));
        }
        s
    }
}

/// Block weight distribution of a per-symbol error-flag stream.
pub fn estimate_weights(flags: &[bool], m: usize) -> Result<WeightDistribution> {
    WeightDistribution::estimate(flags, m)
}

/// Streaming accumulator for block weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightCounter {
    m: usize,
    counts: Vec<u64>,
}

impl WeightCounter {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::config("block size must be at least 1"));
        }
        Ok(WeightCounter {
            m,
            counts: vec![0; m + 1],
        })
    }

    pub fn add(&mut self, flags: &[bool]) -> Result<()> {
        if !flags.len().is_multiple_of(self.m) {
            return Err(Error::shape(format!(
                "{} symbols is not a multiple of the {}-symbol block",
                flags.len(),
                self.m
            )));
        }
        for block in flags.chunks(self.m) {
            self.counts[block.iter().filter(|&&f| f).count()] += 1;
        }
        Ok(())
    }

    pub fn merge(&mut self, other: &WeightCounter) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn distribution(&self) -> Result<WeightDistribution> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return Err(Error::Input("no blocks observed".into()));
        }
        Ok(WeightDistribution {
            y: self
                .counts
                .iter()
                .map(|&c| c as f64 / total as f64)
                .collect(),
            counts: Some(self.counts.clone()),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BmmParams {
    /// Block size in symbols.
    pub m: usize,
    /// Codeword length in symbols.
    pub n: usize,
    /// Correctable symbol errors.
    pub t: usize,
    /// Largest number of erroneous blocks considered.
    pub j_max: usize,
    /// Codeword payload in bits.
    pub m_b: usize,
}

impl Default for BmmParams {
    fn default() -> Self {
        BmmParams {
            m: 17,
            n: 255,
            t: 5,
            j_max: 10,
            m_b: 1960,
        }
    }
}

impl BmmParams {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || !self.n.is_multiple_of(self.m) {
            return Err(Error::config(format!(
                "codeword length {} is not a multiple of block size {}",
                self.n, self.m
            )));
        }
        if self.j_max == 0 {
            return Err(Error::config("truncation parameter must be at least 1"));
        }
        if self.m_b == 0 {
            return Err(Error::config("codeword payload must be positive"));
        }
        Ok(())
    }

    pub fn blocks_per_codeword(&self) -> usize {
        self.n / self.m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfrEstimate {
    pub cfr: f64,
    pub hber: f64,
    pub params: BmmParams,
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Codeword failure rate by the block multinomial recursion.
pub fn bmm_cfr(y: &WeightDistribution, params: &BmmParams) -> Result<CfrEstimate> {
    params.validate()?;
    if y.block_size() != params.m {
        return Err(Error::config(format!(
            "weight distribution has block size {}, model expects {}",
            y.block_size(),
            params.m
        )));
    }
    if y.y.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Input("block probabilities outside [0, 1]".into()));
    }
    let blocks = params.blocks_per_codeword();
    let y0 = y.y0();
    let mut yw = y.y.clone();
    yw[0] = 0.0;
    // R(D) = Y(D)^j, kept to degree min(j M, n)
    let mut r = yw.clone();
    let mut cfr = 0.0;
    for j in 1..=params.j_max.min(blocks) {
        let tail: f64 = r.iter().skip(params.t + 1).sum();
        cfr += binomial(blocks, j) * y0.powi((blocks - j) as i32) * tail;
        if j < params.j_max.min(blocks) {
            let deg = ((j + 1) * params.m).min(params.n);
            let mut next = vec![0.0; deg + 1];
            for (a, &ra) in r.iter().enumerate() {
                if ra == 0.0 {
                    continue;
                }
                for (b, &yb) in yw.iter().enumerate().skip(1) {
                    if a + b <= deg {
                        next[a + b] += ra * yb;
                    }
                }
            }
            r = next;
        }
    }
    let cfr = cfr.clamp(0.0, 1.0);
    Ok(CfrEstimate {
        cfr,
        hber: cfr / params.m_b as f64,
        params: *params,
    })
}

/// Monte Carlo failure-rate estimate with its binomial standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McCfr {
    pub cfr: f64,
    pub failures: u64,
    pub trials: u64,
    pub std_error: f64,
}

/// Draws `n / M` independent block weights per codeword and counts
/// codewords with more than `t` symbol errors.
pub fn mc_cfr_oracle<R: Rng>(
    y: &WeightDistribution,
    params: &BmmParams,
    trials: u64,
    rng: &mut R,
) -> Result<McCfr> {
    params.validate()?;
    if y.block_size() != params.m {
        return Err(Error::config("weight distribution block size mismatch"));
    }
    let cdf: Vec<f64> = y
        .y
        .iter()
        .scan(0.0, |acc, &p| {
            *acc += p;
            Some(*acc)
        })
        .collect();
    let blocks = params.blocks_per_codeword();
    let mut failures = 0u64;
    for _ in 0..trials {
        let mut weight = 0usize;
        for _ in 0..blocks {
            let u: f64 = rng.random();
            weight += cdf.partition_point(|&c| c <= u).min(params.m);
        }
        failures += (weight > params.t) as u64;
    }
    let cfr = if trials > 0 {
        failures as f64 / trials as f64
    } else {
        0.0
    };
    Ok(McCfr {
        cfr,
        failures,
        trials,
        std_error: if trials > 0 {
            (cfr * (1.0 - cfr) / trials as f64).sqrt()
        } else {
            0.0
        },
    })
}
