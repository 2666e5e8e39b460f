//! MMSE design of the PR4 equalizer and of the noise-predictive whitener.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ideal PR4 output `a_n - a_{n-2}` for `±1` symbols; symbols before the
/// start are `-1`.
pub fn pr4_target(symbols: &[i8]) -> Vec<f64> {
    (0..symbols.len())
        .map(|n| {
            let past = if n >= 2 { symbols[n - 2] } else { -1 };
            f64::from(symbols[n] - past)
        })
        .collect()
}

const CONDITION_LIMIT: f64 = 1e10;
const LOADING: f64 = 1e-8;

/// FIR equalizer. Output `z_n = sum_i taps[i] * s[n + delay + c - i]` with
/// `c = taps.len() / 2`, so the center tap sits on sample `n + delay`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EqualizerTaps {
    pub taps: Vec<f64>,
    pub delay: i64,
    /// Training mean squared error per sample.
    pub mse: f64,
    /// Diagonal loading was needed to solve the normal equations.
    pub regularized: bool,
}

impl EqualizerTaps {
    pub fn identity(len: usize) -> Self {
        let mut taps = vec![0.0; len];
        taps[len / 2] = 1.0;
        EqualizerTaps {
            taps,
            delay: 0,
            mse: 0.0,
            regularized: false,
        }
    }

    /// Output sample `n` for sample stream `s` (zero outside its range).
    #[inline]
    pub fn output_at(&self, s: &[f64], n: usize) -> f64 {
        let c = (self.taps.len() / 2) as i64;
        let base = n as i64 + self.delay + c;
        self.taps
            .iter()
            .enumerate()
            .map(|(i, w)| {
                let idx = base - i as i64;
                if idx >= 0 && (idx as usize) < s.len() {
                    w * s[idx as usize]
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Equalizes the whole stream; output has the input's length.
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        (0..s.len()).map(|n| self.output_at(s, n)).collect()
    }
}

/// Designs `taps_len` MMSE taps mapping `samples` onto the PR4 target of
/// `symbols`; `samples[n]` must be aligned with `symbols[n]`. The decision
/// delay is searched over `±max_delay` samples.
pub fn design_mmse_pr4(
    samples: &[f64],
    symbols: &[i8],
    taps_len: usize,
    max_delay: i64,
) -> Result<EqualizerTaps> {
    if taps_len == 0 || taps_len.is_multiple_of(2) {
        return Err(Error::config(format!("equalizer length {taps_len} must be odd")));
    }
    if samples.len() != symbols.len() {
        return Err(Error::shape(format!(
            "{} samples but {} symbols",
            samples.len(),
            symbols.len()
        )));
    }
    let margin = taps_len + max_delay.unsigned_abs() as usize + 2;
    if samples.len() < 10 * taps_len + 2 * margin {
        return Err(Error::shape(format!(
            "{} training samples is too few for {taps_len} taps",
            samples.len()
        )));
    }
    let target = pr4_target(symbols);
    let rows = margin..samples.len() - margin;
    let c = (taps_len / 2) as i64;

    let mut best: Option<EqualizerTaps> = None;
    // smaller |delay| wins ties
    let mut delays: Vec<i64> = (-max_delay..=max_delay).collect();
    delays.sort_by_key(|d| (d.abs(), *d));
    for delay in delays {
        let mut r = DMatrix::<f64>::zeros(taps_len, taps_len);
        let mut p = DVector::<f64>::zeros(taps_len);
        let mut yy = 0.0;
        let mut v = vec![0.0; taps_len];
        for n in rows.clone() {
            let base = n as i64 + delay + c;
            for (i, vi) in v.iter_mut().enumerate() {
                *vi = samples[(base - i as i64) as usize];
            }
            let y = target[n];
            yy += y * y;
            for i in 0..taps_len {
                p[i] += y * v[i];
                for j in i..taps_len {
                    r[(i, j)] += v[i] * v[j];
                }
            }
        }
        for i in 0..taps_len {
            for j in 0..i {
                r[(i, j)] = r[(j, i)];
            }
        }
        let (w, regularized) = solve_normal_equations(r.clone(), &p)?;
        // E = yy - 2 w.p + w.R.w
        let mse = (yy - 2.0 * w.dot(&p) + w.dot(&(&r * &w))) / rows.len() as f64;
        let tie = 1e-12 * yy / rows.len() as f64;
        if best.as_ref().is_none_or(|b| mse < b.mse - tie) {
            best = Some(EqualizerTaps {
                taps: w.iter().copied().collect(),
                delay,
                mse: mse.max(0.0),
                regularized,
            });
        }
    }
    Ok(best.expect("at least one delay is searched"))
}

/// Solves `R w = p`, loading the diagonal by `1e-8 * trace` when the
/// condition number exceeds 1e10.
fn solve_normal_equations(mut r: DMatrix<f64>, p: &DVector<f64>) -> Result<(DVector<f64>, bool)> {
    let sv = r.clone().singular_values();
    let max = sv.max();
    let min = sv.min();
    let regularized = !(min > 0.0) || max / min > CONDITION_LIMIT;
    if regularized {
        let load = LOADING * r.trace().max(f64::MIN_POSITIVE);
        for i in 0..r.nrows() {
            r[(i, i)] += load;
        }
    }
    let w = r
        .clone()
        .cholesky()
        .map(|ch| ch.solve(p))
        .or_else(|| r.lu().solve(p))
        .ok_or_else(|| Error::Input("normal equations are singular".into()))?;
    Ok((w, regularized))
}

/// Noise predictor `e_n ≈ sum_i p[i] e_{n-1-i}`; the whitening filter is
/// `1 - sum_i p[i] D^(i+1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WhitenerCoeffs {
    pub p: Vec<f64>,
}

impl WhitenerCoeffs {
    pub fn zero(order: usize) -> Self {
        WhitenerCoeffs { p: vec![0.0; order] }
    }

    pub fn order(&self) -> usize {
        self.p.len()
    }

    /// Reflection coefficients by the step-down recursion, or `None` when the
    /// prediction-error filter is not strictly minimum phase.
    pub fn reflection_coefficients(&self) -> Option<Vec<f64>> {
        // a = [1, -p1, ..., -pL]
        let mut a: Vec<f64> = self.p.iter().map(|v| -v).collect();
        let mut ks = vec![0.0; a.len()];
        for m in (0..a.len()).rev() {
            let k = a[m];
            if !(k.abs() < 1.0) {
                return None;
            }
            ks[m] = k;
            let denom = 1.0 - k * k;
            let prev: Vec<f64> = (0..m).map(|i| (a[i] - k * a[m - 1 - i]) / denom).collect();
            a.truncate(m);
            a.copy_from_slice(&prev);
        }
        Some(ks)
    }

    pub fn is_stable(&self) -> bool {
        self.reflection_coefficients().is_some()
    }

    /// Prediction errors `e_n - sum p_i e_{n-i}` with zero history.
    pub fn prediction_errors(&self, noise: &[f64]) -> Vec<f64> {
        (0..noise.len())
            .map(|n| {
                let pred: f64 = self
                    .p
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| n > *i)
                    .map(|(i, p)| p * noise[n - 1 - i])
                    .sum();
                noise[n] - pred
            })
            .collect()
    }
}

/// Result of a whitener design.
#[derive(Clone, Debug, PartialEq)]
pub struct WhitenerDesign {
    pub coeffs: WhitenerCoeffs,
    /// Autocorrelation at lag 0.
    pub input_variance: f64,
    /// Levinson-Durbin final prediction-error power.
    pub prediction_error_variance: f64,
    pub regularized: bool,
}

/// Biased autocorrelation estimate for lags `0..=max_lag`.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len() as f64;
    (0..=max_lag)
        .map(|k| {
            if k >= x.len() {
                0.0
            } else {
                x[k..].iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / n
            }
        })
        .collect()
}

/// Order-`order` linear predictor from the Yule-Walker equations, solved by
/// the Levinson-Durbin recursion.
pub fn design_whitener(noise: &[f64], order: usize) -> Result<WhitenerDesign> {
    if noise.len() < 10 * (order + 1) {
        return Err(Error::shape(format!(
            "{} noise samples is too few for order {order}",
            noise.len()
        )));
    }
    let mut r = autocorrelation(noise, order);
    let mut regularized = false;
    if !(r[0] > 0.0) {
        return Ok(WhitenerDesign {
            coeffs: WhitenerCoeffs::zero(order),
            input_variance: 0.0,
            prediction_error_variance: 0.0,
            regularized: true,
        });
    }
    let input_variance = r[0];
    let (a, err) = loop {
        match levinson_durbin(&r, order) {
            Some(sol) => break sol,
            None if !regularized => {
                r[0] *= 1.0 + LOADING;
                regularized = true;
            }
            None => return Err(Error::Input("noise autocorrelation is singular".into())),
        }
    };
    Ok(WhitenerDesign {
        coeffs: WhitenerCoeffs {
            p: a[1..].iter().map(|v| -v).collect(),
        },
        input_variance,
        prediction_error_variance: err,
        regularized,
    })
}

/// Returns the prediction-error filter `[1, a1, .., a_order]` and its error
/// power, or `None` if a reflection coefficient reaches unit magnitude.
pub fn levinson_durbin(r: &[f64], order: usize) -> Option<(Vec<f64>, f64)> {
    let mut a = vec![0.0; order + 1];
    a[0] = 1.0;
    let mut err = r[0];
    for m in 1..=order {
        let acc: f64 = (0..m).map(|i| a[i] * r[m - i]).sum();
        let k = -acc / err;
        if !(k.abs() < 1.0) {
            return None;
        }
        let prev = a.clone();
        for i in 1..m {
            a[i] = prev[i] + k * prev[m - i];
        }
        a[m] = k;
        err *= 1.0 - k * k;
    }
    Some((a, err))
}

/// Frozen front-end design, stored as a TOML key-value file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontEndDesign {
    pub equalizer: EqualizerTaps,
    pub whitener: WhitenerCoeffs,
}

impl FrontEndDesign {
    pub fn to_text(&self) -> String {
        toml::to_string(self).expect("design is always serializable")
    }

    pub fn from_text(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: "<design>".into(),
            message: e.to_string(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_symbols(rng: &mut impl Rng, n: usize) -> Vec<i8> {
        (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
    }

    #[test]
    fn ideal_pr4_input_gives_unit_impulse() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let a = random_symbols(&mut rng, 5000);
        let y = pr4_target(&a);
        let eq = design_mmse_pr4(&y, &a, 11, 3).unwrap();
        assert_eq!(eq.delay, 0);
        assert!(eq.mse < 1e-12);
        for (i, w) in eq.taps.iter().enumerate() {
            let expected = if i == 5 { 1.0 } else { 0.0 };
            assert!((w - expected).abs() < 1e-6, "tap {i} = {w}");
        }
        assert!(pr4_target(&a).iter().all(|v| [-2.0, 0.0, 2.0].contains(v)));
    }

    #[test]
    fn designed_taps_are_a_local_minimum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = random_symbols(&mut rng, 4000);
        // mild ISI plus noise
        let s: Vec<f64> = (0..a.len())
            .map(|n| {
                let x = |k: usize| if n >= k { f64::from(a[n - k]) } else { -1.0 };
                0.6 * x(0) + 0.5 * x(1) - 0.3 * x(2) - 0.6 * x(3)
                    + 0.05 * rng.sample::<f64, _>(StandardNormal)
            })
            .collect();
        let eq = design_mmse_pr4(&s, &a, 9, 3).unwrap();
        let target = pr4_target(&a);
        let mse = |taps: &EqualizerTaps| {
            let z = taps.apply(&s);
            let r = 20..a.len() - 20;
            r.clone().map(|n| (z[n] - target[n]).powi(2)).sum::<f64>() / r.len() as f64
        };
        let base = mse(&eq);
        for i in 0..eq.taps.len() {
            for eps in [-1e-3, 1e-3] {
                let mut t = eq.clone();
                t.taps[i] += eps;
                assert!(mse(&t) > base);
            }
        }
    }

    #[test]
    fn white_noise_is_unpredictable() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w: Vec<f64> = (0..200_000).map(|_| rng.sample(StandardNormal)).collect();
        let d = design_whitener(&w, 3).unwrap();
        for p in &d.coeffs.p {
            assert!(p.abs() < 0.01, "{:?}", d.coeffs.p);
        }
    }

    #[test]
    fn ar1_noise_recovers_its_coefficient() {
        let a = 0.6;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut u = 0.0;
        let x: Vec<f64> = (0..200_000)
            .map(|_| {
                u = a * u + rng.sample::<f64, _>(StandardNormal);
                u
            })
            .collect();
        let d = design_whitener(&x, 3).unwrap();
        assert!((d.coeffs.p[0] - a).abs() < 0.01, "{:?}", d.coeffs.p);
        assert!(d.coeffs.p[1].abs() < 0.01 && d.coeffs.p[2].abs() < 0.01);
        assert!(d.prediction_error_variance < d.input_variance);
        assert!(d.coeffs.is_stable());
        // closed form: innovation variance 1, process variance 1 / (1 - a^2)
        assert!((d.input_variance * (1.0 - a * a) - 1.0).abs() < 0.02);
        assert!((d.prediction_error_variance - 1.0).abs() < 0.02);
    }

    #[test]
    fn error_variance_non_increasing_in_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let w: Vec<f64> = (0..50_000).map(|_| rng.sample(StandardNormal)).collect();
        let x: Vec<f64> = (0..w.len())
            .map(|n| w[n] + if n > 0 { 0.8 * w[n - 1] } else { 0.0 } - if n > 2 { 0.3 * w[n - 3] } else { 0.0 })
            .collect();
        let mut prev = f64::INFINITY;
        for order in 0..8 {
            let d = design_whitener(&x, order).unwrap();
            assert!(d.prediction_error_variance <= prev + 1e-15);
            assert!(d.coeffs.is_stable());
            prev = d.prediction_error_variance;
        }
    }

    #[test]
    fn singular_noise_is_flagged() {
        let d = design_whitener(&vec![0.0; 100], 3).unwrap();
        assert!(d.regularized);
        assert_eq!(d.coeffs.p, vec![0.0; 3]);
        assert!(design_whitener(&[1.0; 5], 3).is_err());
    }

    #[test]
    fn stability_check() {
        assert!(WhitenerCoeffs { p: vec![0.5, 0.2, 0.1] }.is_stable());
        assert!(WhitenerCoeffs::zero(3).is_stable());
        // 1 - 1.0 z^-1 has a root on the unit circle
        assert!(!WhitenerCoeffs { p: vec![1.0] }.is_stable());
        // 1 - 2.5 z^-1 + z^-2 has a root at z = 2
        assert!(!WhitenerCoeffs { p: vec![2.5, -1.0] }.is_stable());
    }

    #[test]
    fn design_file_round_trip() {
        let design = FrontEndDesign {
            equalizer: EqualizerTaps {
                taps: vec![0.125, -0.5, 1.0, 0.3333333333333333],
                delay: -1,
                mse: 0.01,
                regularized: false,
            },
            whitener: WhitenerCoeffs { p: vec![0.5, -0.25, 0.1] },
        };
        let text = design.to_text();
        assert!(text.contains("delay = -1"));
        assert_eq!(FrontEndDesign::from_text(&text).unwrap(), design);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(design_mmse_pr4(&[0.0; 10], &[1; 10], 4, 0).is_err());
        assert!(design_mmse_pr4(&[0.0; 10], &[1; 9], 3, 0).is_err());
        assert!(design_mmse_pr4(&[0.0; 10], &[1; 10], 3, 0).is_err());
    }
}
