use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, VariantSpec};
use super::pipeline::{
    channel_config, design_front_end, groups, read_sector, seeds, Detector, Group, Sector, Tally,
};
use crate::channel::ReadChannel;
use crate::error::Result;
use crate::postecc::{bmm_cfr, WeightDistribution};

/// Minimum observed error blocks for a trusted weight distribution.
pub const MIN_ERROR_BLOCKS: u64 = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BerPoint {
    pub snr_db: f64,
    pub variant: String,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub ber: f64,
    pub windows: u64,
    pub window_fallback_rate: f64,
    /// PED audit: windows whose transmitted bits were listed but not chosen.
    pub ped_violations: Option<u64>,
    pub seed: u64,
    /// Fewer errors than the stop rule asks for.
    pub low_confidence: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfrPoint {
    pub snr_db: f64,
    pub variant: String,
    pub cfr: f64,
    pub hber: f64,
    pub weights: WeightDistribution,
    pub error_blocks: u64,
    pub blocks: u64,
    /// Directly counted codewords with more than `t` symbol errors.
    pub codewords: u64,
    pub codeword_failures: u64,
    pub bits_simulated: u64,
    pub bit_errors: u64,
    pub seed: u64,
    /// Fewer than [`MIN_ERROR_BLOCKS`] error blocks behind the estimate.
    pub low_confidence: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Mode {
    Ber,
    Cfr,
}

/// Results of one (SNR, group) task, variants in config order.
struct GroupRun {
    tallies: Vec<(usize, Tally)>,
}

fn run_group(cfg: &ExperimentConfig, snr_db: f64, group: Group, mode: Mode) -> Result<GroupRun> {
    let members: Vec<(usize, &VariantSpec)> = cfg
        .variants
        .iter()
        .enumerate()
        .filter(|(_, v)| Group::of(cfg, v) == group)
        .collect();
    let channel = ReadChannel::new(&channel_config(cfg, group, snr_db))?;
    let design = design_front_end(cfg, &channel, &mut seeds::training(cfg.master_seed, snr_db, &group))?;
    let mut detectors = members
        .iter()
        .map(|(_, v)| Detector::new(cfg, v, &design))
        .collect::<Result<Vec<_>>>()?;
    let ecc = match mode {
        Mode::Cfr => Some((cfg.ecc.code()?, cfg.ecc.interleaver()?)),
        Mode::Ber => None,
    };
    let block = (mode == Mode::Cfr).then_some(cfg.bmm.m);
    let mut tallies = members
        .iter()
        .map(|_| Tally::new(block))
        .collect::<Result<Vec<_>>>()?;

    let stop = cfg.stop;
    let mut bits = 0u64;
    let mut trial = 0u64;
    loop {
        let mut payload_rng = seeds::payload(cfg.master_seed, snr_db, trial);
        let sector = match &ecc {
            Some((code, il)) => Sector::with_codewords(cfg, code, il, &mut payload_rng)?,
            None => Sector::random(cfg, &mut payload_rng),
        };
        let written = sector.channel_bits(cfg, group.framed)?;
        let mut noise_rng = seeds::channel(cfg.master_seed, snr_db, trial, &group);
        let eq = read_sector(&channel, &design.equalizer, &written, &mut noise_rng);
        for (det, tally) in detectors.iter_mut().zip(tallies.iter_mut()) {
            let detection = det.detect(cfg, &eq, &written)?;
            tally.record(
                cfg,
                &sector,
                group.framed,
                &detection,
                ecc.as_ref().map(|(c, i)| (c, i)),
            )?;
        }
        bits += sector.payload.len() as u64;
        trial += 1;
        let enough = tallies.iter().all(|t| t.bit_errors >= stop.min_errors);
        if bits >= stop.bit_budget || (bits >= stop.min_bits && enough) {
            break;
        }
    }
    Ok(GroupRun {
        tallies: members.iter().map(|(i, _)| *i).zip(tallies).collect(),
    })
}

/// Runs every (SNR, group) task; tallies come back in (SNR, variant) order.
fn run_all(cfg: &ExperimentConfig, mode: Mode) -> Result<Vec<(f64, usize, Tally)>> {
    cfg.validate()?;
    if mode == Mode::Cfr {
        cfg.validate_for_cfr()?;
    }
    let gs = groups(cfg);
    let tasks: Vec<(f64, Group)> = cfg
        .snr_db
        .iter()
        .flat_map(|&s| gs.iter().map(move |&g| (s, g)))
        .collect();
    let runs = tasks
        .par_iter()
        .map(|&(snr, g)| run_group(cfg, snr, g, mode).map(|r| (snr, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::new();
    for &snr in &cfg.snr_db {
        let mut at_snr: Vec<(usize, Tally)> = runs
            .iter()
            .filter(|(s, _)| s.to_bits() == snr.to_bits())
            .flat_map(|(_, r)| r.tallies.iter().cloned())
            .collect();
        at_snr.sort_by_key(|(i, _)| *i);
        out.extend(at_snr.into_iter().map(|(i, t)| (snr, i, t)));
    }
    Ok(out)
}

/// Bit error rate of every variant at every SNR point.
pub fn run_ber_sweep(cfg: &ExperimentConfig) -> Result<Vec<BerPoint>> {
    Ok(run_all(cfg, Mode::Ber)?
        .into_iter()
        .map(|(snr, i, t)| {
            let v = &cfg.variants[i];
            BerPoint {
                snr_db: snr,
                variant: v.name.clone(),
                bits_simulated: t.bits,
                bit_errors: t.bit_errors,
                ber: t.bit_errors as f64 / t.bits as f64,
                windows: t.windows,
                window_fallback_rate: if t.windows > 0 {
                    t.fallbacks as f64 / t.windows as f64
                } else {
                    0.0
                },
                ped_violations: (v.edc == super::config::EdcKind::Ped).then_some(t.violations),
                seed: cfg.master_seed,
                low_confidence: t.bit_errors < cfg.stop.min_errors,
            }
        })
        .collect())
}

/// Codeword failure rate of every variant at every SNR point, by the block
/// multinomial model on measured block weights.
pub fn run_cfr_sweep(cfg: &ExperimentConfig) -> Result<Vec<CfrPoint>> {
    run_all(cfg, Mode::Cfr)?
        .into_iter()
        .map(|(snr, i, t)| {
            let weights = t
                .weights
                .as_ref()
                .expect("weights are counted in CFR mode")
                .distribution()?;
            let est = bmm_cfr(&weights, &cfg.bmm)?;
            let error_blocks = weights.error_blocks().unwrap_or(0);
            Ok(CfrPoint {
                snr_db: snr,
                variant: cfg.variants[i].name.clone(),
                cfr: est.cfr,
                hber: est.hber,
                error_blocks,
                blocks: weights.blocks().unwrap_or(0),
                weights,
                codewords: t.codewords,
                codeword_failures: t.codeword_failures,
                bits_simulated: t.bits,
                bit_errors: t.bit_errors,
                seed: cfg.master_seed,
                low_confidence: error_blocks < MIN_ERROR_BLOCKS,
            })
        })
        .collect()
}

/// SNR at which a curve crosses `target`, by linear interpolation of
/// `log10(rate)` between the two adjacent points that bracket it.
pub fn crossing_snr(curve: &[(f64, f64)], target: f64) -> Option<f64> {
    let mut pts: Vec<(f64, f64)> = curve.iter().copied().filter(|(s, _)| s.is_finite()).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let lt = target.log10();
    pts.windows(2).find_map(|w| {
        let ((s0, r0), (s1, r1)) = (w[0], w[1]);
        // a zero-error point leaves the crossing unresolved
        (r0 >= target && r1 < target && r1 > 0.0).then(|| {
            let (l0, l1) = (r0.log10(), r1.log10());
            s0 + (lt - l0) / (l1 - l0) * (s1 - s0)
        })
    })
}

/// SNR gain of `variant` over `reference` at `target`, in dB.
pub fn gain_db(
    points: &[(String, f64, f64)],
    reference: &str,
    variant: &str,
    target: f64,
) -> Option<f64> {
    let curve = |name: &str| -> Vec<(f64, f64)> {
        points
            .iter()
            .filter(|(v, _, _)| v == name)
            .map(|(_, s, r)| (*s, *r))
            .collect()
    };
    Some(crossing_snr(&curve(reference), target)? - crossing_snr(&curve(variant), target)?)
}

/// `(variant, snr, ber)` triples for [`gain_db`].
pub fn ber_curves(points: &[BerPoint]) -> Vec<(String, f64, f64)> {
    points.iter().map(|p| (p.variant.clone(), p.snr_db, p.ber)).collect()
}

/// `(variant, snr, cfr)` triples for [`gain_db`].
/// Low-confidence points (too few error blocks behind the weights) are left out.
pub fn cfr_curves(points: &[CfrPoint]) -> Vec<(String, f64, f64)> {
    points
        .iter()
        .filter(|p| !p.low_confidence)
        .map(|p| (p.variant.clone(), p.snr_db, p.cfr))
        .collect()
}
