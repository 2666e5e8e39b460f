use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::config::{DetectorKind, EdcKind, ExperimentConfig, VariantSpec, WhitenerSource};
use crate::channel::{ChannelConfig, ReadChannel};
use crate::detector::{DetectorConfig, EdcGate, ListViterbi, NpmlViterbi};
use crate::equalizer::{
    design_mmse_pr4, design_whitener, pr4_target, EqualizerTaps, FrontEndDesign, WhitenerCoeffs,
};
use crate::error::{Error, Result};
use crate::framing::{insert_edc_parity, strip_edc_parity, EdcScheme, PrecoderSpec};
use crate::gf_rs::{Interleaver, RsCode};
use crate::postecc::WeightCounter;
use crate::rng::{rng_for, snr_label, tag_label};

/// Variants sharing a group see the same written stream and channel noise.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Group {
    pub density: f64,
    pub framed: bool,
}

impl Group {
    pub fn of(cfg: &ExperimentConfig, v: &VariantSpec) -> Self {
        Group {
            density: cfg.density_of(v),
            framed: v.framed,
        }
    }

    pub fn label(&self) -> u64 {
        tag_label(&format!("{:.6}/{}", self.density, self.framed))
    }
}

/// Distinct groups in order of first appearance.
pub fn groups(cfg: &ExperimentConfig) -> Vec<Group> {
    let mut out: Vec<Group> = Vec::new();
    for v in &cfg.variants {
        let g = Group::of(cfg, v);
        if !out.contains(&g) {
            out.push(g);
        }
    }
    out
}

fn symbols(bits: &[u8]) -> Vec<i8> {
    bits.iter().map(|&b| if b == 1 { 1 } else { -1 }).collect()
}

pub(crate) fn channel_config(cfg: &ExperimentConfig, group: Group, snr_db: f64) -> ChannelConfig {
    ChannelConfig {
        density: group.density,
        snr_db,
        ..cfg.channel.clone()
    }
}

/// Designs the equalizer and whitener on a dedicated random training sector.
pub fn design_front_end(
    cfg: &ExperimentConfig,
    channel: &ReadChannel,
    rng: &mut ChaCha8Rng,
) -> Result<FrontEndDesign> {
    let fe = cfg.front_end;
    let bits: Vec<u8> = (0..fe.training_bits).map(|_| rng.random::<bool>() as u8).collect();
    let a = symbols(&bits);
    let sampled = channel.read(&a, rng);
    let equalizer = design_mmse_pr4(sampled.data(), &a, fe.equalizer_taps, fe.max_delay)?;
    let z = equalizer.apply(&sampled.samples);
    let target = pr4_target(&a);
    let margin = fe.equalizer_taps + fe.max_delay.unsigned_abs() as usize;
    let noise: Vec<f64> = (margin..a.len().saturating_sub(margin))
        .map(|n| z[sampled.offset + n] - target[n])
        .collect();
    let whitener = if fe.whitener_order == 0 {
        WhitenerCoeffs::zero(0)
    } else {
        design_whitener(&noise, fe.whitener_order)?.coeffs
    };
    Ok(FrontEndDesign {
        equalizer,
        whitener,
    })
}

/// One simulated sector as written.
#[derive(Clone, Debug)]
pub struct Sector {
    /// User bits, `sector_windows * payload_bits` of them.
    pub payload: Vec<u8>,
    /// RS codewords carried at the front of the payload, if any.
    pub codewords: Option<Vec<Vec<u8>>>,
}

pub(crate) fn bytes_to_bits(bytes: &[u8]) -> Vec<u8> {
    bytes
        .iter()
        .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1))
        .collect()
}

pub(crate) fn bits_to_bytes(bits: &[u8]) -> Vec<u8> {
    bits.chunks(8)
        .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b))
        .collect()
}

impl Sector {
    pub fn random(cfg: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Self {
        let n = cfg.window.payload_per_sector();
        Sector {
            payload: (0..n).map(|_| rng.random::<bool>() as u8).collect(),
            codewords: None,
        }
    }

    /// Interleaved RS codewords followed by random filler bits.
    pub fn with_codewords(
        cfg: &ExperimentConfig,
        code: &RsCode,
        interleaver: &Interleaver,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let words = (0..interleaver.depth)
            .map(|_| {
                let data: Vec<u8> = (0..code.k()).map(|_| rng.random()).collect();
                code.encode(&data)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut payload = bytes_to_bits(&interleaver.interleave(&words)?);
        let n = cfg.window.payload_per_sector();
        if payload.len() > n {
            return Err(Error::config("codewords do not fit in the sector"));
        }
        payload.extend((payload.len()..n).map(|_| rng.random::<bool>() as u8));
        Ok(Sector {
            payload,
            codewords: Some(words),
        })
    }

    /// Channel bits written for `group`: parity inserted when framed, then
    /// precoded.
    pub fn channel_bits(&self, cfg: &ExperimentConfig, framed: bool) -> Result<Vec<u8>> {
        let precoder = PrecoderSpec::default();
        if framed {
            let scheme = if cfg.window.parity_bits > 0 {
                EdcScheme::Crc(cfg.window.crc()?)
            } else {
                EdcScheme::Disabled
            };
            let data = insert_edc_parity(&self.payload, cfg.window.format()?, scheme)?;
            Ok(precoder.precode(&data))
        } else {
            Ok(precoder.precode(&self.payload))
        }
    }
}

/// Equalized samples of one sector; `z[start + n]` belongs to channel bit `n`.
#[derive(Clone, Debug)]
pub struct Equalized {
    pub z: Vec<f64>,
    pub start: usize,
}

pub fn read_sector(
    channel: &ReadChannel,
    equalizer: &EqualizerTaps,
    channel_bits: &[u8],
    rng: &mut ChaCha8Rng,
) -> Equalized {
    let sampled = channel.read(&symbols(channel_bits), rng);
    let z = equalizer.apply(&sampled.samples);
    let start = sampled.offset.min(crate::detector::MAX_ORDER);
    Equalized {
        z: z[sampled.offset - start..sampled.offset + sampled.num_bits].to_vec(),
        start,
    }
}

/// Detector instance of one variant.
#[allow(clippy::large_enum_variant)]
pub enum Detector {
    Block(NpmlViterbi),
    Windowed(NpmlViterbi, usize),
    List(ListViterbi, EdcKind),
}

/// Detector output for one sector.
#[derive(Clone, Debug, Default)]
pub struct Detection {
    pub channel_bits: Vec<u8>,
    pub windows: u64,
    pub fallbacks: u64,
    /// PED audit: windows where the transmitted window was listed but not chosen.
    pub violations: u64,
    /// PED audit: windows whose transmitted bits were among the candidates.
    pub listed: u64,
}

impl Detector {
    pub fn new(cfg: &ExperimentConfig, v: &VariantSpec, design: &FrontEndDesign) -> Result<Self> {
        let whitener = match v.whitener {
            WhitenerSource::Designed => design.whitener.clone(),
            WhitenerSource::Zero => WhitenerCoeffs::zero(design.whitener.order()),
        };
        Ok(match v.detector {
            DetectorKind::Npml => Detector::Block(NpmlViterbi::new(&whitener)?),
            DetectorKind::NpmlWindowed => {
                Detector::Windowed(NpmlViterbi::new(&whitener)?, cfg.window.period)
            }
            DetectorKind::List => Detector::List(
                ListViterbi::new(DetectorConfig {
                    depth: v.depth,
                    whitener,
                    period: cfg.window.period,
                })?,
                v.edc,
            ),
        })
    }

    pub fn detect(
        &mut self,
        cfg: &ExperimentConfig,
        eq: &Equalized,
        transmitted: &[u8],
    ) -> Result<Detection> {
        match self {
            Detector::Block(vit) => Ok(Detection {
                channel_bits: vit.detect_block(&eq.z, eq.start),
                ..Detection::default()
            }),
            Detector::Windowed(vit, period) => Ok(Detection {
                channel_bits: vit.detect_windowed(&eq.z, eq.start, *period)?,
                ..Detection::default()
            }),
            Detector::List(lv, edc) => {
                let period = cfg.window.period;
                let gate = match edc {
                    EdcKind::None => EdcGate::disabled(period),
                    EdcKind::Ped => EdcGate::ped(period, transmitted),
                    EdcKind::Crc => EdcGate::new(
                        EdcScheme::Crc(cfg.window.crc()?),
                        cfg.window.format()?,
                        PrecoderSpec::default(),
                        None,
                    )?,
                };
                let audit = *edc == EdcKind::Ped;
                let out = lv.run(&eq.z, eq.start, &gate, audit)?;
                let mut d = Detection {
                    windows: out.windows.len() as u64,
                    ..Detection::default()
                };
                for w in &out.windows {
                    d.fallbacks += w.fallback as u64;
                    if w.reference_listed == Some(true) {
                        d.listed += 1;
                        d.violations += (w.chosen_is_reference == Some(false)) as u64;
                    }
                }
                d.channel_bits = out.bits;
                Ok(d)
            }
        }
    }
}

/// Running totals of one variant at one SNR.
#[derive(Clone, Debug)]
pub struct Tally {
    pub sectors: u64,
    pub bits: u64,
    pub bit_errors: u64,
    pub windows: u64,
    pub fallbacks: u64,
    pub violations: u64,
    pub listed: u64,
    pub codewords: u64,
    pub codeword_failures: u64,
    pub weights: Option<WeightCounter>,
}

impl Tally {
    pub fn new(block: Option<usize>) -> Result<Self> {
        Ok(Tally {
            sectors: 0,
            bits: 0,
            bit_errors: 0,
            windows: 0,
            fallbacks: 0,
            violations: 0,
            listed: 0,
            codewords: 0,
            codeword_failures: 0,
            weights: block.map(WeightCounter::new).transpose()?,
        })
    }

    /// Scores one detected sector against what was written.
    pub fn record(
        &mut self,
        cfg: &ExperimentConfig,
        sector: &Sector,
        framed: bool,
        detection: &Detection,
        ecc: Option<(&RsCode, &Interleaver)>,
    ) -> Result<()> {
        let data = PrecoderSpec::default().inverse_precode(&detection.channel_bits);
        let payload = if framed {
            strip_edc_parity(&data, cfg.window.format()?)?
        } else {
            data
        };
        if payload.len() != sector.payload.len() {
            return Err(Error::shape("decoded payload length differs from the written one"));
        }
        self.sectors += 1;
        self.bits += payload.len() as u64;
        self.bit_errors += payload
            .iter()
            .zip(&sector.payload)
            .filter(|(a, b)| a != b)
            .count() as u64;
        self.windows += detection.windows;
        self.fallbacks += detection.fallbacks;
        self.violations += detection.violations;
        self.listed += detection.listed;

        if let (Some((code, interleaver)), Some(words)) = (ecc, &sector.codewords) {
            let n = code.n();
            let bytes = bits_to_bytes(&payload[..n * words.len() * 8]);
            let received = interleaver.deinterleave(&bytes, n)?;
            for (r, w) in received.iter().zip(words) {
                self.codewords += 1;
                self.codeword_failures += !code.decode_judge(r, w)?.corrected as u64;
            }
            if let Some(counter) = self.weights.as_mut() {
                let flags: Vec<bool> = if cfg.ecc.deinterleave_weights {
                    received
                        .iter()
                        .zip(words)
                        .flat_map(|(r, w)| r.iter().zip(w).map(|(a, b)| a != b))
                        .collect()
                } else {
                    let sent = interleaver.interleave(words)?;
                    bytes.iter().zip(&sent).map(|(a, b)| a != b).collect()
                };
                counter.add(&flags)?;
            }
        }
        Ok(())
    }
}

/// Seeds for one (SNR, trial) payload, one (SNR, trial, group) channel
/// realization, and one (SNR, group) training sector.
pub(crate) mod seeds {
    use super::*;

    const PAYLOAD: u64 = 1;
    const CHANNEL: u64 = 2;
    const TRAINING: u64 = 3;

    pub fn payload(master: u64, snr: f64, trial: u64) -> ChaCha8Rng {
        rng_for(master, &[PAYLOAD, snr_label(snr), trial])
    }

    pub fn channel(master: u64, snr: f64, trial: u64, group: &Group) -> ChaCha8Rng {
        rng_for(master, &[CHANNEL, snr_label(snr), trial, group.label()])
    }

    pub fn training(master: u64, snr: f64, group: &Group) -> ChaCha8Rng {
        rng_for(master, &[TRAINING, snr_label(snr), group.label()])
    }
}
