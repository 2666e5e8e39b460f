use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::ChannelConfig;
use crate::error::{Error, Result};
use crate::framing::{Crc, WindowFormat};
use crate::gf_rs::{Interleaver, RsCode};
use crate::postecc::BmmParams;

/// Config layout version understood by this build.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectorKind {
    /// Viterbi over the whole sector, decided once at the end.
    Npml,
    /// Viterbi decided and restarted every window.
    NpmlWindowed,
    List,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdcKind {
    None,
    Ped,
    Crc,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WhitenerSource {
    /// Linear prediction on training noise.
    Designed,
    /// `p = 0`: plain PR4 metric.
    Zero,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSpec {
    pub name: String,
    pub detector: DetectorKind,
    #[serde(default = "one")]
    pub depth: usize,
    #[serde(default = "no_edc")]
    pub edc: EdcKind,
    #[serde(default = "designed")]
    pub whitener: WhitenerSource,
    /// Density override (PW50 / T) for this variant.
    #[serde(default)]
    pub density: Option<f64>,
    /// Whether the written stream carries EDC parity.
    #[serde(default = "yes")]
    pub framed: bool,
}

fn one() -> usize {
    1
}
fn no_edc() -> EdcKind {
    EdcKind::None
}
fn designed() -> WhitenerSource {
    WhitenerSource::Designed
}
fn yes() -> bool {
    true
}

impl VariantSpec {
    pub fn list(name: &str, depth: usize, edc: EdcKind) -> Self {
        VariantSpec {
            name: name.to_string(),
            detector: DetectorKind::List,
            depth,
            edc,
            whitener: WhitenerSource::Designed,
            density: None,
            framed: true,
        }
    }

    pub fn npml(name: &str) -> Self {
        VariantSpec {
            name: name.to_string(),
            detector: DetectorKind::Npml,
            depth: 1,
            edc: EdcKind::None,
            whitener: WhitenerSource::Designed,
            density: None,
            framed: true,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WindowSettings {
    pub period: usize,
    pub parity_bits: usize,
    /// CRC generator without its leading term; width is `parity_bits`.
    pub crc_poly: u32,
    /// Windows per simulated sector.
    pub sector_windows: usize,
}

impl Default for WindowSettings {
    fn default() -> Self {
        WindowSettings {
            period: 198,
            parity_bits: 3,
            crc_poly: Crc::CRC3.poly,
            sector_windows: 42,
        }
    }
}

impl WindowSettings {
    pub fn format(&self) -> Result<WindowFormat> {
        WindowFormat::new(self.period, self.parity_bits)
    }

    pub fn crc(&self) -> Result<Crc> {
        Crc::new(self.crc_poly, self.parity_bits as u32)
    }

    pub fn payload_per_sector(&self) -> usize {
        self.sector_windows * (self.period - self.parity_bits.min(self.period))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrontEndSettings {
    pub equalizer_taps: usize,
    pub max_delay: i64,
    pub whitener_order: usize,
    pub training_bits: usize,
}

impl Default for FrontEndSettings {
    fn default() -> Self {
        FrontEndSettings {
            equalizer_taps: 21,
            max_delay: 6,
            whitener_order: 3,
            training_bits: 100_000,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EccSettings {
    pub n: usize,
    pub k: usize,
    pub interleave_depth: usize,
    /// Measure block weights after deinterleaving (decoder view) or on the
    /// recorded byte order.
    pub deinterleave_weights: bool,
}

impl Default for EccSettings {
    fn default() -> Self {
        EccSettings {
            n: 255,
            k: 245,
            interleave_depth: 4,
            deinterleave_weights: true,
        }
    }
}

impl EccSettings {
    pub fn code(&self) -> Result<RsCode> {
        RsCode::new(self.n, self.k)
    }

    pub fn interleaver(&self) -> Result<Interleaver> {
        Interleaver::new(self.interleave_depth)
    }

    pub fn sector_bits(&self) -> usize {
        self.n * self.interleave_depth * 8
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StopRule {
    /// Payload bits simulated per point at most.
    pub bit_budget: u64,
    /// Payload bits simulated per point at least.
    pub min_bits: u64,
    /// Stop once every variant sharing the channel has this many bit errors.
    pub min_errors: u64,
}

impl Default for StopRule {
    fn default() -> Self {
        StopRule {
            bit_budget: 10_000_000,
            min_bits: 0,
            min_errors: 100,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Sweep points; `inf` gives a noiseless channel.
    pub snr_db: Vec<f64>,
    /// BER level at which gains are read off.
    #[serde(default = "default_target")]
    pub target: f64,
    /// CFR level at which post-ECC gains are read off.
    #[serde(default = "default_cfr_target")]
    pub cfr_target: f64,
    /// Variant the gains are measured against.
    #[serde(default)]
    pub reference: Option<String>,
    /// `snr_db` and `rng_seed` here are ignored.
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub window: WindowSettings,
    #[serde(default)]
    pub front_end: FrontEndSettings,
    #[serde(default)]
    pub ecc: EccSettings,
    #[serde(default)]
    pub bmm: BmmParams,
    #[serde(default)]
    pub stop: StopRule,
    pub variants: Vec<VariantSpec>,
}

fn default_target() -> f64 {
    1e-4
}

fn default_cfr_target() -> f64 {
    1e-10
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Parse {
            path: "<config>".into(),
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("cannot serialize config: {e}")))
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.snr_db.is_empty() {
            return Err(Error::config("no SNR points"));
        }
        if self.snr_db.iter().any(|s| s.is_nan() || *s == f64::NEG_INFINITY) {
            return Err(Error::config("SNR points must be numbers or +inf"));
        }
        if !(self.target > 0.0 && self.target < 1.0) {
            return Err(Error::config(format!("target {} outside (0, 1)", self.target)));
        }
        if !(self.cfr_target > 0.0 && self.cfr_target < 1.0) {
            return Err(Error::config(format!("cfr_target {} outside (0, 1)", self.cfr_target)));
        }
        self.channel.validate()?;
        let fmt = self.window.format()?;
        if self.window.parity_bits > 0 {
            self.window.crc()?;
        }
        if self.window.sector_windows == 0 {
            return Err(Error::config("sector must hold at least one window"));
        }
        self.ecc.code()?;
        self.ecc.interleaver()?;
        self.bmm.validate()?;
        if self.stop.bit_budget == 0 || self.stop.min_bits > self.stop.bit_budget {
            return Err(Error::config("bit budget must be positive and at least min_bits"));
        }
        if (self.stop.bit_budget as f64) * self.target < 100.0 {
            return Err(Error::config(format!(
                "bit budget {} cannot resolve target {:e}",
                self.stop.bit_budget, self.target
            )));
        }
        if self.front_end.whitener_order > crate::detector::MAX_ORDER {
            return Err(Error::config("whitener order too large"));
        }
        if self.variants.is_empty() {
            return Err(Error::config("no detector variants"));
        }
        let mut names = HashSet::new();
        for v in &self.variants {
            if !names.insert(v.name.as_str()) {
                return Err(Error::config(format!("duplicate variant name {:?}", v.name)));
            }
            if v.name.is_empty() || v.name.contains([',', '"', '\n']) {
                return Err(Error::config(format!("invalid variant name {:?}", v.name)));
            }
            if let Some(d) = v.density {
                if !(d > 0.0) {
                    return Err(Error::config(format!("variant {}: density must be positive", v.name)));
                }
            }
            match v.detector {
                DetectorKind::List => {
                    if v.depth == 0 || v.depth > u16::MAX as usize {
                        return Err(Error::config(format!("variant {}: bad list depth", v.name)));
                    }
                    if !v.framed {
                        return Err(Error::config(format!(
                            "variant {}: list detection needs the framed stream",
                            v.name
                        )));
                    }
                    if v.edc == EdcKind::Crc && fmt.parity_bits == 0 {
                        return Err(Error::config(format!(
                            "variant {}: CRC gating needs parity bits",
                            v.name
                        )));
                    }
                }
                DetectorKind::Npml | DetectorKind::NpmlWindowed => {
                    if v.edc != EdcKind::None {
                        return Err(Error::config(format!(
                            "variant {}: Viterbi variants take no EDC",
                            v.name
                        )));
                    }
                }
            }
            if v.detector == DetectorKind::NpmlWindowed && !v.framed {
                return Err(Error::config(format!(
                    "variant {}: windowed detection needs the framed stream",
                    v.name
                )));
            }
        }
        if let Some(r) = &self.reference {
            if !names.contains(r.as_str()) {
                return Err(Error::config(format!("reference variant {r:?} is not defined")));
            }
        }
        Ok(())
    }

    /// Keeps only the named variants (and the reference, if any).
    pub fn retain_variants(&mut self, names: &[String]) -> Result<()> {
        for n in names {
            if !self.variants.iter().any(|v| &v.name == n) {
                return Err(Error::config(format!("unknown variant {n:?}")));
            }
        }
        let reference = self.reference.clone();
        self.variants
            .retain(|v| names.contains(&v.name) || reference.as_ref() == Some(&v.name));
        Ok(())
    }

    pub fn density_of(&self, v: &VariantSpec) -> f64 {
        v.density.unwrap_or(self.channel.density)
    }

    /// Checks that the ECC sector fits in a channel sector.
    pub fn validate_for_cfr(&self) -> Result<()> {
        let payload = self.window.payload_per_sector();
        if self.ecc.sector_bits() > payload {
            return Err(Error::config(format!(
                "{} interleaved codeword bits exceed the {payload}-bit sector payload",
                self.ecc.sector_bits()
            )));
        }
        if self.bmm.n != self.ecc.n {
            return Err(Error::config("block model and RS code disagree on codeword length"));
        }
        if !self.ecc.n.is_multiple_of(self.bmm.m) {
            return Err(Error::config("codeword length is not a multiple of the block size"));
        }
        Ok(())
    }
}
