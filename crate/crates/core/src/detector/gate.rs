use crate::error::{Error, Result};
use crate::framing::{verify_edc, EdcScheme, PrecoderSpec, WindowFormat};

/// Window verification used by the update stage.
///
/// PED compares the channel-bit candidate with the transmitted channel bits.
/// CRC verification runs on the inverse-precoded window; the precoder memory
/// comes from the window's start state, which holds the last two decided
/// channel bits.
#[derive(Clone, Debug)]
pub struct EdcGate<'a> {
    scheme: EdcScheme,
    format: WindowFormat,
    precoder: PrecoderSpec,
    reference: Option<&'a [u8]>,
}

impl<'a> EdcGate<'a> {
    /// Every window passes.
    pub fn disabled(period: usize) -> Self {
        EdcGate {
            scheme: EdcScheme::Disabled,
            format: WindowFormat {
                period,
                parity_bits: 0,
            },
            precoder: PrecoderSpec::default(),
            reference: None,
        }
    }

    /// Perfect error detection against the transmitted channel-bit stream.
    pub fn ped(period: usize, transmitted: &'a [u8]) -> Self {
        EdcGate {
            scheme: EdcScheme::Ped,
            format: WindowFormat {
                period,
                parity_bits: 0,
            },
            precoder: PrecoderSpec::default(),
            reference: Some(transmitted),
        }
    }

    pub fn new(
        scheme: EdcScheme,
        format: WindowFormat,
        precoder: PrecoderSpec,
        reference: Option<&'a [u8]>,
    ) -> Result<Self> {
        format.validate()?;
        if scheme == EdcScheme::Ped && reference.is_none() {
            return Err(Error::config("perfect error detection needs the transmitted stream"));
        }
        if let EdcScheme::Crc(crc) = scheme {
            if crc.width as usize != format.parity_bits {
                return Err(Error::config(format!(
                    "CRC width {} does not match {} parity bits",
                    crc.width, format.parity_bits
                )));
            }
            if precoder.taps.iter().any(|&d| d > 2) {
                return Err(Error::config(
                    "CRC gating supports precoders with memory of at most two bits",
                ));
            }
        }
        Ok(EdcGate {
            scheme,
            format,
            precoder,
            reference,
        })
    }

    pub fn scheme(&self) -> EdcScheme {
        self.scheme
    }

    pub fn period(&self) -> usize {
        self.format.period
    }

    /// Transmitted channel bits of window `index`, if known.
    pub fn reference_window(&self, index: usize) -> Option<&'a [u8]> {
        let p = self.format.period;
        self.reference
            .and_then(|r| r.get(index * p..(index + 1) * p))
    }

    /// Checks candidate channel bits of window `index` that start from
    /// trellis state `start_state`.
    pub fn check(
        &self,
        index: usize,
        start_state: usize,
        bits: &[u8],
        scratch: &mut Vec<u8>,
    ) -> Result<bool> {
        match self.scheme {
            EdcScheme::Disabled => Ok(true),
            EdcScheme::Ped => {
                let reference = self.reference_window(index).ok_or_else(|| {
                    Error::shape(format!("no transmitted bits for window {index}"))
                })?;
                verify_edc(bits, self.format, EdcScheme::Ped, Some(reference))
            }
            EdcScheme::Crc(_) => {
                let memory = [(start_state >> 1) as u8, (start_state & 1) as u8];
                self.precoder.inverse_precode_into(bits, &memory, scratch);
                verify_edc(scratch, self.format, self.scheme, None)
            }
        }
    }
}
