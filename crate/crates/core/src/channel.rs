//! Lorentzian magnetic-recording readback with first-order position jitter,
//! white electronics noise, and a 5th-order Butterworth front-end filter.
//!
//! Time is measured in bit periods (T = 1). The waveform is synthesized at
//! `oversampling` samples per bit. Transition `k` sits at time `k`; bit-rate
//! samples are taken at the bit-cell centers `n + 1/2`, so sample `n` sees
//! transitions `n` and `n + 1` symmetrically.
//!
//! Noise levels follow `SNR = 2 / (N0 + Nm)` with `beta = Nm / (N0 + Nm)`.
//! Both components are referred to the band `|f| < 1/(2T)` at the filter
//! input: the electronics noise has in-band power `N0` and the jitter noise
//! has power `Nm`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lorentzian transition response with unit peak: `1 / (1 + (2t / PW50)^2)`,
/// `PW50 = density` bit periods.
pub fn lorentzian_step(t: f64, density: f64) -> f64 {
    let u = 2.0 * t / density;
    1.0 / (1.0 + u * u)
}

/// d/dt of [`lorentzian_step`].
pub fn lorentzian_step_derivative(t: f64, density: f64) -> f64 {
    let u = 2.0 * t / density;
    let d = 1.0 + u * u;
    -(4.0 * u / density) / (d * d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChannelConfig {
    /// PW50 / T.
    pub density: f64,
    pub snr_db: f64,
    /// Transition-noise share of the total noise power.
    pub beta: f64,
    /// Samples per bit period.
    pub oversampling: usize,
    /// Butterworth 3 dB cutoff as a fraction of the bit rate.
    pub lpf_cutoff: f64,
    /// Pulses are truncated to `±span_bits` bit periods.
    pub span_bits: usize,
    /// Idle bit periods before and after the data.
    pub guard_bits: usize,
    pub rng_seed: u64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        ChannelConfig {
            density: 3.25,
            snr_db: 20.0,
            beta: 0.5,
            oversampling: 8,
            lpf_cutoff: 0.5,
            span_bits: 32,
            guard_bits: 24,
            rng_seed: 0,
        }
    }
}

/// Absolute noise levels derived from a [`ChannelConfig`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseLevels {
    pub n0: f64,
    pub nm: f64,
    /// Per-sample standard deviation of the oversampled electronics noise.
    pub electronics_sigma: f64,
    /// Standard deviation of the per-transition position jitter, in bit periods.
    pub jitter_sigma: f64,
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.density > 0.0) {
            return Err(Error::config(format!("density {} must be positive", self.density)));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::config(format!("beta {} outside [0, 1]", self.beta)));
        }
        if self.oversampling < 4 || !self.oversampling.is_multiple_of(2) {
            return Err(Error::config(format!(
                "oversampling {} must be an even integer >= 4",
                self.oversampling
            )));
        }
        if !(self.lpf_cutoff > 0.0 && self.lpf_cutoff < self.oversampling as f64 / 2.0) {
            return Err(Error::config(format!("LPF cutoff {} out of range", self.lpf_cutoff)));
        }
        if self.span_bits == 0 {
            return Err(Error::config("pulse span must be at least one bit"));
        }
        Ok(())
    }

    /// `N0 + Nm = 2 / SNR`; an infinite SNR gives a noiseless channel.
    pub fn total_noise(&self) -> f64 {
        if self.snr_db.is_infinite() && self.snr_db > 0.0 {
            0.0
        } else {
            2.0 / 10f64.powf(self.snr_db / 10.0)
        }
    }

    pub fn noise_levels(&self) -> NoiseLevels {
        let total = self.total_noise();
        let n0 = (1.0 - self.beta) * total;
        let nm = self.beta * total;
        let gain = jitter_power_gain(self);
        NoiseLevels {
            n0,
            nm,
            electronics_sigma: (n0 * self.oversampling as f64).sqrt(),
            jitter_sigma: if nm > 0.0 { (nm / gain).sqrt() } else { 0.0 },
        }
    }
}

/// Expected jitter-noise power per unit jitter variance.
///
/// The jitter component is `-sum_k d_k j_k g'(t - k)` with independent
/// `j_k`, so its mean power is `P(transition) * (1/os) * sum_m g'(m/os)^2`
/// over the truncated pulse grid. Random precoded data has transition
/// probability 1/2. Out-of-band energy of g' is below 1e-4 of the total at
/// the densities of interest and is ignored.
pub fn jitter_power_gain(cfg: &ChannelConfig) -> f64 {
    let os = cfg.oversampling as f64;
    let half = (cfg.span_bits * cfg.oversampling) as i64;
    let energy: f64 = (-half..=half)
        .map(|m| lorentzian_step_derivative(m as f64 / os, cfg.density).powi(2))
        .sum();
    0.5 * energy / os
}

/// Oversampled readback.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub samples_per_bit: usize,
    /// Sample index of time 0 (the first transition slot).
    pub t0: usize,
    pub num_bits: usize,
}

impl Waveform {
    /// Dumps samples as little-endian f64.
    pub fn write_f64_le(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for s in &self.samples {
            w.write_all(&s.to_le_bytes()).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_f64_le(path: &Path) -> Result<Vec<f64>> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut bytes = Vec::new();
        BufReader::new(file)
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() % 8 != 0 {
            return Err(Error::Parse {
                path: path.into(),
                message: "length is not a multiple of 8 bytes".into(),
            });
        }
        Ok(bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect())
    }
}

/// Signal and the two noise components, kept apart for calibration.
#[derive(Clone, Debug)]
pub struct ReadbackParts {
    pub signal: Waveform,
    pub jitter_noise: Vec<f64>,
    pub electronics_noise: Vec<f64>,
}

impl ReadbackParts {
    pub fn total(&self) -> Waveform {
        let mut w = self.signal.clone();
        for ((s, j), e) in w
            .samples
            .iter_mut()
            .zip(&self.jitter_noise)
            .zip(&self.electronics_noise)
        {
            *s += j + e;
        }
        w
    }
}

/// Precomputed pulse tables and filters for one channel configuration.
#[derive(Clone, Debug)]
pub struct ReadChannel {
    cfg: ChannelConfig,
    levels: NoiseLevels,
    pulse: Vec<f64>,
    pulse_derivative: Vec<f64>,
    lpf: Butterworth,
}

impl ReadChannel {
    pub fn new(cfg: &ChannelConfig) -> Result<Self> {
        cfg.validate()?;
        let os = cfg.oversampling as f64;
        let half = (cfg.span_bits * cfg.oversampling) as i64;
        let grid = || (-half..=half).map(|m| m as f64 / os);
        Ok(ReadChannel {
            levels: cfg.noise_levels(),
            pulse: grid().map(|t| lorentzian_step(t, cfg.density)).collect(),
            pulse_derivative: grid()
                .map(|t| lorentzian_step_derivative(t, cfg.density))
                .collect(),
            lpf: Butterworth::lowpass(5, cfg.lpf_cutoff / os)?,
            cfg: cfg.clone(),
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.cfg
    }

    pub fn noise_levels(&self) -> NoiseLevels {
        self.levels
    }

    pub fn lpf(&self) -> &Butterworth {
        &self.lpf
    }

    fn layout(&self, num_bits: usize) -> (usize, usize) {
        let os = self.cfg.oversampling;
        let t0 = self.cfg.guard_bits * os;
        (t0, (num_bits + 2 * self.cfg.guard_bits) * os)
    }

    /// Noise-free signal plus separately drawn jitter and electronics noise.
    ///
    /// Symbols before the first bit and after the last are held at their edge
    /// values (the medium is DC-erased to -1 before the data).
    pub fn synthesize_parts<R: Rng>(&self, symbols: &[i8], rng: &mut R) -> ReadbackParts {
        let os = self.cfg.oversampling;
        let (t0, len) = self.layout(symbols.len());
        let half = self.cfg.span_bits * os;
        let mut signal = vec![0.0; len];
        let mut jitter = vec![0.0; len];
        let sigma_j = self.levels.jitter_sigma;
        let mut prev = -1i8;
        for (k, &a) in symbols.iter().enumerate() {
            let d = f64::from(a - prev) / 2.0;
            prev = a;
            if d == 0.0 {
                continue;
            }
            let dj = if sigma_j > 0.0 {
                sigma_j * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            let center = (t0 + k * os) as i64;
            let lo = (center - half as i64).max(0) as usize;
            let hi = ((center + half as i64) as usize).min(len - 1);
            let off = lo as i64 - (center - half as i64);
            let p = &self.pulse[off as usize..off as usize + (hi - lo + 1)];
            let pd = &self.pulse_derivative[off as usize..off as usize + (hi - lo + 1)];
            for (s, &g) in signal[lo..=hi].iter_mut().zip(p) {
                *s += d * g;
            }
            if dj != 0.0 {
                let scale = -d * dj;
                for (s, &g) in jitter[lo..=hi].iter_mut().zip(pd) {
                    *s += scale * g;
                }
            }
        }
        let sigma_e = self.levels.electronics_sigma;
        let electronics = if sigma_e > 0.0 {
            (0..len)
                .map(|_| sigma_e * rng.sample::<f64, _>(StandardNormal))
                .collect()
        } else {
            vec![0.0; len]
        };
        ReadbackParts {
            signal: Waveform {
                samples: signal,
                samples_per_bit: os,
                t0,
                num_bits: symbols.len(),
            },
            jitter_noise: jitter,
            electronics_noise: electronics,
        }
    }

    /// Noisy readback at the filter input.
    pub fn synthesize_readback<R: Rng>(&self, symbols: &[i8], rng: &mut R) -> Waveform {
        let os = self.cfg.oversampling;
        let (t0, len) = self.layout(symbols.len());
        let half = self.cfg.span_bits * os;
        let sigma_j = self.levels.jitter_sigma;
        let mut out = vec![0.0; len];
        let mut prev = -1i8;
        for (k, &a) in symbols.iter().enumerate() {
            let d = f64::from(a - prev) / 2.0;
            prev = a;
            if d == 0.0 {
                continue;
            }
            let dj = if sigma_j > 0.0 {
                sigma_j * rng.sample::<f64, _>(StandardNormal)
            } else {
                0.0
            };
            let center = (t0 + k * os) as i64;
            let lo = (center - half as i64).max(0) as usize;
            let hi = ((center + half as i64) as usize).min(len - 1);
            let off = (lo as i64 - (center - half as i64)) as usize;
            let n = hi - lo + 1;
            let scale = -d * dj;
            for ((s, &g), &gd) in out[lo..=hi]
                .iter_mut()
                .zip(&self.pulse[off..off + n])
                .zip(&self.pulse_derivative[off..off + n])
            {
                *s += d * g + scale * gd;
            }
        }
        let sigma_e = self.levels.electronics_sigma;
        if sigma_e > 0.0 {
            for s in out.iter_mut() {
                *s += sigma_e * rng.sample::<f64, _>(StandardNormal);
            }
        }
        Waveform {
            samples: out,
            samples_per_bit: os,
            t0,
            num_bits: symbols.len(),
        }
    }

    /// Filters and decimates to one sample per bit at the bit-cell centers.
    ///
    /// The result covers the guard region too: entry `offset + n` is bit `n`.
    pub fn lowpass_and_sample(&self, w: &Waveform) -> Result<Sampled> {
        if w.samples_per_bit != self.cfg.oversampling {
            return Err(Error::shape(format!(
                "waveform has {} samples per bit, channel expects {}",
                w.samples_per_bit, self.cfg.oversampling
            )));
        }
        let filtered = self.lpf.filter(&w.samples);
        let os = w.samples_per_bit;
        let delay = self.lpf.dc_group_delay().round() as usize;
        let first_bit = w.t0 / os;
        let phase = os / 2 + delay;
        let total_bits = w.samples.len() / os;
        let samples: Vec<f64> = (0..total_bits)
            .map(|b| b * os + phase)
            .take_while(|&i| i < filtered.len())
            .map(|i| filtered[i])
            .collect();
        Ok(Sampled {
            samples,
            offset: first_bit,
            num_bits: w.num_bits,
        })
    }

    /// Symbols in, bit-rate samples out.
    pub fn read<R: Rng>(&self, symbols: &[i8], rng: &mut R) -> Sampled {
        let w = self.synthesize_readback(symbols, rng);
        self.lowpass_and_sample(&w)
            .expect("waveform produced by this channel")
    }
}

/// Bit-rate samples; `samples[offset + n]` belongs to bit `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Sampled {
    pub samples: Vec<f64>,
    pub offset: usize,
    pub num_bits: usize,
}

impl Sampled {
    pub fn data(&self) -> &[f64] {
        &self.samples[self.offset..self.offset + self.num_bits]
    }
}

/// Cascade of first- and second-order sections from the bilinear transform of
/// an analog Butterworth prototype.
#[derive(Clone, Debug)]
pub struct Butterworth {
    /// `(b0, b1, b2, a1, a2)` with `a0 = 1`.
    sections: Vec<[f64; 5]>,
}

impl Butterworth {
    /// `cutoff` is the 3 dB frequency in cycles per sample, prewarped so the
    /// digital response is exactly -3 dB there.
    pub fn lowpass(order: usize, cutoff: f64) -> Result<Self> {
        if order == 0 || !(cutoff > 0.0 && cutoff < 0.5) {
            return Err(Error::config(format!(
                "Butterworth order {order} cutoff {cutoff} cycles/sample is not realizable"
            )));
        }
        let c = 1.0 / (PI * cutoff).tan();
        let mut sections = Vec::new();
        for k in 0..order / 2 {
            // s^2 + a s + 1 for each conjugate pole pair
            let a = 2.0 * (PI * (2 * k + 1) as f64 / (2 * order) as f64).sin();
            let a0 = c * c + a * c + 1.0;
            sections.push([
                1.0 / a0,
                2.0 / a0,
                1.0 / a0,
                (2.0 - 2.0 * c * c) / a0,
                (c * c - a * c + 1.0) / a0,
            ]);
        }
        if order % 2 == 1 {
            let a0 = c + 1.0;
            sections.push([1.0 / a0, 1.0 / a0, 0.0, (1.0 - c) / a0, 0.0]);
        }
        Ok(Butterworth { sections })
    }

    pub fn filter(&self, x: &[f64]) -> Vec<f64> {
        let mut y = x.to_vec();
        for &[b0, b1, b2, a1, a2] in &self.sections {
            // transposed direct form II
            let (mut s1, mut s2) = (0.0, 0.0);
            for v in y.iter_mut() {
                let input = *v;
                let out = b0 * input + s1;
                s1 = b1 * input - a1 * out + s2;
                s2 = b2 * input - a2 * out;
                *v = out;
            }
        }
        y
    }

    /// Magnitude response at `f` cycles per sample.
    pub fn gain(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f;
        let z1 = Complex::new(w.cos(), -w.sin());
        let z2 = z1 * z1;
        self.sections
            .iter()
            .map(|&[b0, b1, b2, a1, a2]| {
                let num = Complex::new(b0, 0.0) + z1 * b1 + z2 * b2;
                let den = Complex::new(1.0, 0.0) + z1 * a1 + z2 * a2;
                (num / den).norm()
            })
            .product()
    }

    /// Group delay at DC, in samples.
    pub fn dc_group_delay(&self) -> f64 {
        self.sections
            .iter()
            .map(|&[b0, b1, b2, a1, a2]| {
                (b1 + 2.0 * b2) / (b0 + b1 + b2) - (a1 + 2.0 * a2) / (1.0 + a1 + a2)
            })
            .sum()
    }
}

/// Power of `x` inside `|f| < 1/(2T)`, for a sequence sampled at
/// `samples_per_bit` per bit period. Measured with a brick-wall FFT mask.
pub fn inband_power(x: &[f64], samples_per_bit: usize) -> f64 {
    let n = x.len();
    if n == 0 {
        return 0.0;
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    // bin k <-> k / n cycles per sample; the band edge is 1 / (2 os)
    let edge = n as f64 / (2.0 * samples_per_bit as f64);
    let energy: f64 = buf
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = (*k).min(n - *k) as f64;
            f < edge
        })
        .map(|(_, c)| c.norm_sqr())
        .sum();
    energy / (n as f64 * n as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn random_symbols(rng: &mut impl Rng, n: usize) -> Vec<i8> {
        (0..n).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect()
    }

    #[test]
    fn lorentzian_examples() {
        let dc = 3.25;
        assert_eq!(lorentzian_step(0.0, dc), 1.0);
        assert!((lorentzian_step(dc / 2.0, dc) - 0.5).abs() < 1e-15);
        assert!((lorentzian_step(-dc / 2.0, dc) - 0.5).abs() < 1e-15);
        assert!((lorentzian_step(dc, dc) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let dc = 3.25;
        for &t in &[-4.0, -1.3, -0.2, 0.0, 0.7, 2.5] {
            let h = 1e-6;
            let fd = (lorentzian_step(t + h, dc) - lorentzian_step(t - h, dc)) / (2.0 * h);
            assert!((fd - lorentzian_step_derivative(t, dc)).abs() < 1e-8);
        }
    }

    #[test]
    fn jitter_gain_matches_closed_form_integral() {
        // integral of g'^2 over the real line is pi / (2 PW50)
        let cfg = ChannelConfig {
            span_bits: 4000,
            ..ChannelConfig::default()
        };
        let expected = 0.5 * PI / (2.0 * cfg.density);
        assert!((jitter_power_gain(&cfg) - expected).abs() / expected < 1e-4);
    }

    #[test]
    fn butterworth_dc_and_cutoff() {
        let lpf = Butterworth::lowpass(5, 0.0625).unwrap();
        assert!((lpf.gain(0.0) - 1.0).abs() < 1e-12);
        assert!((lpf.gain(0.0625) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        // bilinear Butterworth: |H| = 1 / sqrt(1 + (tan(pi f) / tan(pi fc))^10)
        for f in [0.01, 0.1, 0.2, 0.4] {
            let ratio = (PI * f).tan() / (PI * 0.0625).tan();
            let expected = 1.0 / (1.0 + ratio.powi(10)).sqrt();
            assert!((lpf.gain(f) - expected).abs() < 1e-9 * expected.max(1e-3), "f={f}");
        }

        let y = lpf.filter(&vec![1.0; 2000]);
        assert!((y[1999] - 1.0).abs() < 1e-9);

        // measured sinusoid at the cutoff
        let f = 0.0625;
        let x: Vec<f64> = (0..20_000).map(|n| (2.0 * PI * f * n as f64).sin()).collect();
        let y = lpf.filter(&x);
        let tail = &y[10_000..];
        let rms_in = (0.5f64).sqrt();
        let rms_out = (tail.iter().map(|v| v * v).sum::<f64>() / tail.len() as f64).sqrt();
        assert!((rms_out / rms_in - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.01);
    }

    #[test]
    fn group_delay_matches_step_centroid() {
        let lpf = Butterworth::lowpass(5, 0.0625).unwrap();
        let mut impulse = vec![0.0; 4000];
        impulse[0] = 1.0;
        let h = lpf.filter(&impulse);
        let centroid: f64 =
            h.iter().enumerate().map(|(i, v)| i as f64 * v).sum::<f64>() / h.iter().sum::<f64>();
        assert!((centroid - lpf.dc_group_delay()).abs() < 1e-6);
    }

    #[test]
    fn single_transition_is_a_sampled_lorentzian() {
        let cfg = ChannelConfig {
            snr_db: f64::INFINITY,
            ..ChannelConfig::default()
        };
        let ch = ReadChannel::new(&cfg).unwrap();
        let mut symbols = vec![-1i8; 40];
        for s in symbols.iter_mut().skip(20) {
            *s = 1;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let w = ch.synthesize_readback(&symbols, &mut rng);
        for (m, &s) in w.samples.iter().enumerate() {
            let t = (m as f64 - w.t0 as f64) / 8.0 - 20.0;
            let expected = if t.abs() <= 32.0 { lorentzian_step(t, 3.25) } else { 0.0 };
            assert!((s - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn noiseless_readback_is_linear_in_transitions() {
        let cfg = ChannelConfig {
            snr_db: f64::INFINITY,
            ..ChannelConfig::default()
        };
        let ch = ReadChannel::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_symbols(&mut rng, 200);
        let wa = ch.synthesize_readback(&a, &mut rng);
        // superpose isolated transitions
        let mut sum = vec![0.0; wa.samples.len()];
        let mut prev = -1i8;
        for (k, &s) in a.iter().enumerate() {
            if s != prev {
                let mut single = vec![-1i8; 200];
                for v in single.iter_mut().skip(k) {
                    *v = 1;
                }
                let w = ch.synthesize_readback(&single, &mut rng);
                let sign = f64::from(s - prev) / 2.0;
                for (acc, v) in sum.iter_mut().zip(&w.samples) {
                    *acc += sign * v;
                }
            }
            prev = s;
        }
        for (x, y) in wa.samples.iter().zip(&sum) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn same_seed_same_waveform() {
        let cfg = ChannelConfig::default();
        let ch = ReadChannel::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let a = random_symbols(&mut rng, 500);
        let w1 = ch.synthesize_readback(&a, &mut ChaCha8Rng::seed_from_u64(99));
        let w2 = ch.synthesize_readback(&a, &mut ChaCha8Rng::seed_from_u64(99));
        assert_eq!(w1, w2);
    }

    #[test]
    fn parts_sum_to_readback() {
        let cfg = ChannelConfig::default();
        let ch = ReadChannel::new(&cfg).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = random_symbols(&mut rng, 300);
        let parts = ch.synthesize_parts(&a, &mut ChaCha8Rng::seed_from_u64(1));
        let w = ch.synthesize_readback(&a, &mut ChaCha8Rng::seed_from_u64(1));
        for (x, y) in parts.total().samples.iter().zip(&w.samples) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn waveform_dump_round_trip() {
        let w = Waveform {
            samples: vec![1.5, -2.25, 1e-300, f64::MAX],
            samples_per_bit: 4,
            t0: 0,
            num_bits: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.f64");
        w.write_f64_le(&path).unwrap();
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 32);
        assert_eq!(Waveform::read_f64_le(&path).unwrap(), w.samples);
    }

    #[test]
    fn dc_passes_the_sampler() {
        let cfg = ChannelConfig {
            snr_db: f64::INFINITY,
            ..ChannelConfig::default()
        };
        let ch = ReadChannel::new(&cfg).unwrap();
        let w = Waveform {
            samples: vec![0.75; 8 * 400],
            samples_per_bit: 8,
            t0: 0,
            num_bits: 400,
        };
        let s = ch.lowpass_and_sample(&w).unwrap();
        assert!(s.samples[200..390].iter().all(|v| (v - 0.75).abs() < 1e-9));
        let bad = Waveform { samples_per_bit: 4, ..w };
        assert!(ch.lowpass_and_sample(&bad).is_err());
    }
}
