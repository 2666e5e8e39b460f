//! GF(256) arithmetic, the systematic (255, 245) Reed-Solomon code and
//! byte-wise block interleaving.
//!
//! The field is built on the primitive polynomial x^8 + x^4 + x^3 + x^2 + 1
//! (0x11D) with primitive element alpha = 0x02. The code generator has the
//! consecutive roots alpha^1 .. alpha^(2t).
//!
//! Decoding is a genie judgment: the received word is compared against the
//! transmitted one and declared correctable iff at most `t` symbols differ.
//! That is exactly the bounded-distance failure event counted by the
//! block-multinomial model in [`crate::postecc`].

use std::ops::{Add, Mul};

use crate::error::{Error, Result};

pub const PRIMITIVE_POLY: u16 = 0x11D;

const fn build_tables() -> ([u8; 256], [u8; 512]) {
    let mut log = [0u8; 256];
    let mut exp = [0u8; 512];
    let mut x: u16 = 1;
    let mut i = 0;
    while i < 255 {
        exp[i] = x as u8;
        log[x as usize] = i as u8;
        x <<= 1;
        if x & 0x100 != 0 {
            x ^= PRIMITIVE_POLY;
        }
        i += 1;
    }
    // Doubled so that exp[log a + log b] needs no modular reduction.
    while i < 512 {
        exp[i] = exp[i - 255];
        i += 1;
    }
    (log, exp)
}

const TABLES: ([u8; 256], [u8; 512]) = build_tables();
const LOG: [u8; 256] = TABLES.0;
const EXP: [u8; 512] = TABLES.1;

/// An element of GF(256).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct GfElement(pub u8);

impl GfElement {
    pub const ZERO: GfElement = GfElement(0);
    pub const ONE: GfElement = GfElement(1);

    /// alpha^i for any integer exponent.
    pub fn alpha_pow(i: i64) -> GfElement {
        GfElement(EXP[i.rem_euclid(255) as usize])
    }

    pub fn inverse(self) -> Option<GfElement> {
        if self.0 == 0 {
            None
        } else {
            Some(GfElement(EXP[255 - LOG[self.0 as usize] as usize]))
        }
    }
}

impl Add for GfElement {
    type Output = GfElement;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn add(self, rhs: GfElement) -> GfElement {
        GfElement(self.0 ^ rhs.0)
    }
}

impl Mul for GfElement {
    type Output = GfElement;
    fn mul(self, rhs: GfElement) -> GfElement {
        gf_mul(self, rhs)
    }
}

pub fn gf_mul(a: GfElement, b: GfElement) -> GfElement {
    if a.0 == 0 || b.0 == 0 {
        return GfElement::ZERO;
    }
    GfElement(EXP[LOG[a.0 as usize] as usize + LOG[b.0 as usize] as usize])
}

/// A systematic Reed-Solomon code over GF(256).
#[derive(Clone, Debug)]
pub struct RsCode {
    n: usize,
    k: usize,
    t: usize,
    /// Generator coefficients, highest degree first; `generator[0] == 1`.
    generator: Vec<GfElement>,
}

/// Outcome of the bounded-distance judgment on one codeword.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeJudgment {
    pub corrected: bool,
    pub symbol_errors: usize,
}

impl RsCode {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n > 255 || k == 0 || k >= n || !(n - k).is_multiple_of(2) {
            return Err(Error::config(format!("unsupported RS({n}, {k})")));
        }
        let t = (n - k) / 2;
        let mut generator = vec![GfElement::ONE];
        for i in 1..=(2 * t) as i64 {
            // multiply by (x + alpha^i)
            let root = GfElement::alpha_pow(i);
            let mut next = vec![GfElement::ZERO; generator.len() + 1];
            for (j, &g) in generator.iter().enumerate() {
                next[j] = next[j] + g;
                next[j + 1] = next[j + 1] + g * root;
            }
            generator = next;
        }
        Ok(RsCode { n, k, t, generator })
    }

    /// The (255, 245) code with t = 5.
    pub fn standard() -> Self {
        Self::new(255, 245).expect("RS(255,245) is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn generator(&self) -> &[GfElement] {
        &self.generator
    }

    /// Systematic encoding: the data symbols followed by `2t` parity symbols.
    pub fn encode(&self, data: &[u8]) -> Result<Vec<u8>> {
        if data.len() != self.k {
            return Err(Error::shape(format!(
                "RS data block has {} symbols, expected {}",
                data.len(),
                self.k
            )));
        }
        let parity_len = self.n - self.k;
        // LFSR division of data(x) * x^(n-k) by the generator.
        let mut rem = vec![GfElement::ZERO; parity_len];
        for &d in data {
            let feedback = GfElement(d) + rem[0];
            rem.rotate_left(1);
            rem[parity_len - 1] = GfElement::ZERO;
            if feedback.0 != 0 {
                for (r, &g) in rem.iter_mut().zip(&self.generator[1..]) {
                    *r = *r + feedback * g;
                }
            }
        }
        let mut out = Vec::with_capacity(self.n);
        out.extend_from_slice(data);
        out.extend(rem.iter().map(|g| g.0));
        Ok(out)
    }

    /// Evaluates the codeword polynomial at alpha^1 .. alpha^(2t).
    pub fn syndromes(&self, word: &[u8]) -> Vec<GfElement> {
        (1..=(2 * self.t) as i64)
            .map(|i| {
                let x = GfElement::alpha_pow(i);
                word.iter()
                    .fold(GfElement::ZERO, |acc, &c| acc * x + GfElement(c))
            })
            .collect()
    }

    pub fn decode_judge(&self, received: &[u8], reference: &[u8]) -> Result<DecodeJudgment> {
        if received.len() != self.n || reference.len() != self.n {
            return Err(Error::shape(format!(
                "RS judgment needs two {}-symbol words, got {} and {}",
                self.n,
                received.len(),
                reference.len()
            )));
        }
        let symbol_errors = received
            .iter()
            .zip(reference)
            .filter(|(a, b)| a != b)
            .count();
        Ok(DecodeJudgment {
            corrected: symbol_errors <= self.t,
            symbol_errors,
        })
    }
}

/// Round-robin byte interleaver over groups of `depth` codewords.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Interleaver {
    pub depth: usize,
}

impl Default for Interleaver {
    fn default() -> Self {
        Interleaver { depth: 4 }
    }
}

impl Interleaver {
    pub fn new(depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::config("interleaver depth must be at least 1"));
        }
        Ok(Interleaver { depth })
    }

    /// Emits symbol `i` of every word in a group before symbol `i + 1`.
    pub fn interleave<W: AsRef<[u8]>>(&self, codewords: &[W]) -> Result<Vec<u8>> {
        if !codewords.len().is_multiple_of(self.depth) {
            return Err(Error::shape(format!(
                "{} codewords is not a multiple of interleaver depth {}",
                codewords.len(),
                self.depth
            )));
        }
        let Some(first) = codewords.first() else {
            return Ok(Vec::new());
        };
        let n = first.as_ref().len();
        if codewords.iter().any(|w| w.as_ref().len() != n) {
            return Err(Error::shape("codewords have unequal lengths"));
        }
        let mut out = Vec::with_capacity(n * codewords.len());
        for group in codewords.chunks(self.depth) {
            for i in 0..n {
                out.extend(group.iter().map(|w| w.as_ref()[i]));
            }
        }
        Ok(out)
    }

    pub fn deinterleave(&self, stream: &[u8], n: usize) -> Result<Vec<Vec<u8>>> {
        let group = self.depth * n;
        if n == 0 || !stream.len().is_multiple_of(group) {
            return Err(Error::shape(format!(
                "stream of {} symbols is not a multiple of depth*n = {}",
                stream.len(),
                group
            )));
        }
        let mut words = Vec::with_capacity(stream.len() / n);
        for chunk in stream.chunks(group) {
            for w in 0..self.depth {
                words.push(chunk.iter().skip(w).step_by(self.depth).copied().collect());
            }
        }
        Ok(words)
    }
}
