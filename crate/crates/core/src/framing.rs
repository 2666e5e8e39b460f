//! Write-side framing and its read-side inverse: the 1/(1 + D^2) precoder,
//! the pluggable run-length-limited codec, and per-window error-detection
//! parity.
//!
//! A window is `period` channel bits: `payload_bits` of data followed by
//! `parity_bits` of EDC parity. Parity is computed on the data-domain
//! window, so read-side verification runs after inverse precoding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Recursive GF(2) precoder `y_n = x_n ^ XOR_{d in taps} y_{n-d}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecoderSpec {
    /// Feedback delays; `[2]` is 1/(1 + D^2).
    pub taps: Vec<usize>,
    /// Output memory before the first bit: `initial[i]` is `y_{-1-i}`.
    pub initial: Vec<u8>,
}

impl Default for PrecoderSpec {
    fn default() -> Self {
        PrecoderSpec {
            taps: vec![2],
            initial: vec![0, 0],
        }
    }
}

impl PrecoderSpec {
    fn memory_len(&self) -> usize {
        self.taps.iter().copied().max().unwrap_or(0)
    }

    /// Memory `[y_{-1}, y_{-2}, ...]` padded with zeros to the tap span.
    fn initial_memory(&self) -> Vec<u8> {
        let mut mem = self.initial.clone();
        mem.resize(self.memory_len(), 0);
        mem
    }

    pub fn precode(&self, bits: &[u8]) -> Vec<u8> {
        self.precode_from(bits, &self.initial_memory())
    }

    pub fn inverse_precode(&self, bits: &[u8]) -> Vec<u8> {
        self.inverse_precode_from(bits, &self.initial_memory())
    }

    /// Precodes starting from an explicit output memory `[y_{-1}, y_{-2}, ...]`.
    pub fn precode_from(&self, bits: &[u8], memory: &[u8]) -> Vec<u8> {
        let mut out: Vec<u8> = Vec::with_capacity(bits.len());
        for (n, &x) in bits.iter().enumerate() {
            let fb = self
                .taps
                .iter()
                .fold(0u8, |acc, &d| acc ^ past(&out, memory, n, d));
            out.push((x & 1) ^ fb);
        }
        out
    }

    /// Feed-forward inverse: `x_n = y_n ^ XOR_{d in taps} y_{n-d}`.
    pub fn inverse_precode_from(&self, bits: &[u8], memory: &[u8]) -> Vec<u8> {
        let mut out = Vec::with_capacity(bits.len());
        self.inverse_precode_into(bits, memory, &mut out);
        out
    }

    pub(crate) fn inverse_precode_into(&self, bits: &[u8], memory: &[u8], out: &mut Vec<u8>) {
        out.clear();
        for (n, &y) in bits.iter().enumerate() {
            let fb = self
                .taps
                .iter()
                .fold(0u8, |acc, &d| acc ^ past(bits, memory, n, d));
            out.push((y & 1) ^ fb);
        }
    }
}

/// `y_{n-d}` from the produced prefix or, before the start, from `memory`.
#[inline]
fn past(seq: &[u8], memory: &[u8], n: usize, d: usize) -> u8 {
    if n >= d {
        seq[n - d]
    } else {
        memory.get(d - n - 1).copied().unwrap_or(0)
    }
}

/// A run-length-limited modulation codec.
pub trait RllCodec: Send + Sync {
    /// Channel bits per codeword.
    fn codeword_len(&self) -> usize;
    fn encode(&self, bits: &[u8]) -> Result<Vec<u8>>;
    fn decode(&self, bits: &[u8]) -> Result<Vec<u8>>;
}

/// Rate-1 pass-through codec with a declared codeword length.
#[derive(Clone, Copy, Debug)]
pub struct IdentityRll {
    pub codeword_len: usize,
}

impl Default for IdentityRll {
    fn default() -> Self {
        IdentityRll { codeword_len: 66 }
    }
}

impl RllCodec for IdentityRll {
    fn codeword_len(&self) -> usize {
        self.codeword_len
    }

    fn encode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        Ok(bits.to_vec())
    }

    fn decode(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if !bits.len().is_multiple_of(self.codeword_len) {
            return Err(Error::Framing(format!(
                "{} bits is not a whole number of {}-bit codewords",
                bits.len(),
                self.codeword_len
            )));
        }
        Ok(bits.to_vec())
    }
}

/// Window layout: `period = payload_bits + parity_bits` channel bits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowFormat {
    pub period: usize,
    pub parity_bits: usize,
}

impl Default for WindowFormat {
    fn default() -> Self {
        WindowFormat {
            period: 198,
            parity_bits: 3,
        }
    }
}

impl WindowFormat {
    pub fn new(period: usize, parity_bits: usize) -> Result<Self> {
        let fmt = WindowFormat {
            period,
            parity_bits,
        };
        fmt.validate()?;
        Ok(fmt)
    }

    pub fn payload_bits(&self) -> usize {
        self.period - self.parity_bits
    }

    pub fn validate(&self) -> Result<()> {
        if self.period == 0 || self.parity_bits >= self.period {
            return Err(Error::config(format!(
                "window period {} must exceed parity width {}",
                self.period, self.parity_bits
            )));
        }
        Ok(())
    }

    /// Checks that the window is a whole number of RLL codewords.
    pub fn check_codec(&self, codec: &dyn RllCodec) -> Result<()> {
        if !self.period.is_multiple_of(codec.codeword_len()) {
            return Err(Error::config(format!(
                "period {} is not a multiple of the {}-bit RLL codeword",
                self.period,
                codec.codeword_len()
            )));
        }
        Ok(())
    }
}

/// Bitwise CRC with zero initial register, no reflection and no output xor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crc {
    /// Generator without its leading x^width term.
    pub poly: u32,
    pub width: u32,
}

impl Crc {
    /// x^3 + x + 1
    pub const CRC3: Crc = Crc { poly: 0x3, width: 3 };
    /// x^6 + x + 1
    pub const CRC6: Crc = Crc { poly: 0x03, width: 6 };
    /// x^8 + x^2 + x + 1
    pub const CRC8: Crc = Crc { poly: 0x07, width: 8 };

    pub fn new(poly: u32, width: u32) -> Result<Self> {
        if width == 0 || width > 31 || poly >= (1 << width) {
            return Err(Error::config(format!(
                "invalid CRC polynomial {poly:#x} of width {width}"
            )));
        }
        Ok(Crc { poly, width })
    }

    /// Remainder of `bits(x) * x^width` modulo the generator.
    pub fn remainder(&self, bits: &[u8]) -> u32 {
        let mask = (1u32 << self.width) - 1;
        let top = self.width - 1;
        bits.iter().fold(0u32, |reg, &b| {
            let fb = ((reg >> top) ^ b as u32) & 1;
            let reg = (reg << 1) & mask;
            if fb != 0 {
                reg ^ self.poly
            } else {
                reg
            }
        })
    }

    /// Parity bits, most significant first.
    pub fn parity(&self, bits: &[u8]) -> Vec<u8> {
        let rem = self.remainder(bits);
        (0..self.width)
            .rev()
            .map(|i| ((rem >> i) & 1) as u8)
            .collect()
    }

    pub fn check(&self, payload: &[u8], parity: &[u8]) -> bool {
        let rem = self.remainder(payload);
        parity.len() == self.width as usize
            && parity
                .iter()
                .enumerate()
                .all(|(i, &p)| ((rem >> (self.width as usize - 1 - i)) & 1) as u8 == p)
    }
}

/// How a decoded window is verified.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EdcScheme {
    /// Every window passes.
    Disabled,
    /// Genie check: a window passes iff it equals the transmitted one.
    Ped,
    Crc(Crc),
}

/// Appends `parity_bits` of EDC after every `payload_bits` of `stream`.
///
/// Schemes without parity of their own (PED, disabled) fill the parity
/// positions with zeros.
pub fn insert_edc_parity(stream: &[u8], fmt: WindowFormat, scheme: EdcScheme) -> Result<Vec<u8>> {
    fmt.validate()?;
    let payload = fmt.payload_bits();
    if !stream.len().is_multiple_of(payload) {
        return Err(Error::shape(format!(
            "stream of {} bits is not a multiple of the {payload}-bit window payload",
            stream.len()
        )));
    }
    if let EdcScheme::Crc(crc) = scheme {
        if crc.width as usize != fmt.parity_bits {
            return Err(Error::config(format!(
                "CRC width {} does not match {} parity bits",
                crc.width, fmt.parity_bits
            )));
        }
    }
    let windows = stream.len() / payload;
    let mut out = Vec::with_capacity(windows * fmt.period);
    for chunk in stream.chunks(payload) {
        out.extend_from_slice(chunk);
        match scheme {
            EdcScheme::Crc(crc) => out.extend(crc.parity(chunk)),
            _ => out.extend(std::iter::repeat_n(0u8, fmt.parity_bits)),
        }
    }
    Ok(out)
}

/// Drops the parity positions of every window.
pub fn strip_edc_parity(stream: &[u8], fmt: WindowFormat) -> Result<Vec<u8>> {
    fmt.validate()?;
    if !stream.len().is_multiple_of(fmt.period) {
        return Err(Error::shape(format!(
            "stream of {} bits is not a multiple of the {}-bit window",
            stream.len(),
            fmt.period
        )));
    }
    Ok(stream
        .chunks(fmt.period)
        .flat_map(|w| w[..fmt.payload_bits()].iter().copied())
        .collect())
}

/// Verifies one data-domain window.
pub fn verify_edc(
    window: &[u8],
    fmt: WindowFormat,
    scheme: EdcScheme,
    genie_reference: Option<&[u8]>,
) -> Result<bool> {
    if window.len() != fmt.period {
        return Err(Error::shape(format!(
            "window has {} bits, expected {}",
            window.len(),
            fmt.period
        )));
    }
    match scheme {
        EdcScheme::Disabled => Ok(true),
        EdcScheme::Ped => {
            let reference = genie_reference
                .ok_or_else(|| Error::config("perfect error detection needs the transmitted window"))?;
            Ok(window == reference)
        }
        EdcScheme::Crc(crc) => {
            if crc.width as usize != fmt.parity_bits {
                return Err(Error::config(format!(
                    "CRC width {} does not match {} parity bits",
                    crc.width, fmt.parity_bits
                )));
            }
            let (payload, parity) = window.split_at(fmt.payload_bits());
            Ok(crc.check(payload, parity))
        }
    }
}
