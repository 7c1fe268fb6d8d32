//! Finite-bit transmission of real coefficients.
//!
//! Wire format for a value `x` under signal-to-noise `n` and approximation
//! order `d`:
//!
//! ```text
//! |x| <  sqrt(n):  [presence=1][sign][int: w_int bits][frac: w_frac bits]
//! |x| >= sqrt(n):  [0]                                  (decodes to 0.0)
//! ```
//!
//! with `w_int = ceil(log2(n)/2)`, `w_frac = floor(d * log2(n))`, sign bit 1
//! for nonnegative `x`, and magnitude `floor(|x| * 2^w_frac)` written
//! most-significant bit first. Decoding reads the grid point
//! `sign * magnitude / 2^w_frac`, so the in-range reconstruction error is
//! below `2^-w_frac <= 2 * n^-d` and every message is at most
//! `2 + w_int + w_frac` bits. The two framing bits are counted by the
//! ledger.

use std::fmt;

use crate::error::{Error, Result};

/// Quantizer geometry: noise level `n` and approximation order `d`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EncoderConfig {
    n: u64,
    d: f64,
    w_int: u32,
    w_frac: u32,
}

impl EncoderConfig {
    pub fn new(n: u64, d: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParam(format!("n = {n} must be at least 2")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::InvalidParam(format!(
                "approximation order d = {d} must be positive"
            )));
        }
        let log2n = (n as f64).log2();
        let w_int = (log2n / 2.0).ceil() as u32;
        let w_frac = (d * log2n).floor() as u32;
        if w_int + w_frac > 63 {
            return Err(Error::InvalidParam(format!(
                "magnitude field {w_int}+{w_frac} bits exceeds 63"
            )));
        }
        Ok(EncoderConfig { n, d, w_int, w_frac })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn approx_order(&self) -> f64 {
        self.d
    }

    pub fn w_int(&self) -> u32 {
        self.w_int
    }

    pub fn w_frac(&self) -> u32 {
        self.w_frac
    }

    /// Longest possible message: framing plus the magnitude field.
    pub fn max_message_bits(&self) -> u64 {
        2 + self.w_int as u64 + self.w_frac as u64
    }
}

/// One transmitted message, most significant magnitude bit first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMessage {
    bits: Vec<bool>,
}

impl BitMessage {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitMessage { bits }
    }

    pub fn len(&self) -> u64 {
        self.bits.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }
}

impl fmt::Display for BitMessage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.bits {
            write!(f, "{}", if *b { '1' } else { '0' })?;
        }
        Ok(())
    }
}

/// Encodes a single value. Values at or beyond `sqrt(n)` collapse to the
/// one-bit absent message.
pub fn encode_value(x: f64, cfg: &EncoderConfig) -> Result<BitMessage> {
    if !x.is_finite() {
        return Err(Error::NonFinite("value to encode".into()));
    }
    let sqrt_n = (cfg.n as f64).sqrt();
    if x.abs() >= sqrt_n {
        return Ok(BitMessage { bits: vec![false] });
    }
    let width = (cfg.w_int + cfg.w_frac) as usize;
    let mut bits = Vec::with_capacity(2 + width);
    bits.push(true);
    bits.push(!x.is_sign_negative());
    let scaled = (x.abs() * (2.0f64).powi(cfg.w_frac as i32)).floor();
    // |x| < sqrt(n) = 2^(log2(n)/2) guarantees the magnitude fits the field.
    let q = scaled as u64;
    for i in (0..width).rev() {
        bits.push((q >> i) & 1 == 1);
    }
    Ok(BitMessage { bits })
}

/// Decodes a message produced by [`encode_value`] under the same config.
pub fn decode_value(msg: &BitMessage, cfg: &EncoderConfig) -> Result<f64> {
    let bits = &msg.bits;
    if bits.len() == 1 {
        if bits[0] {
            return Err(Error::Malformed("presence bit set on a 1-bit message".into()));
        }
        return Ok(0.0);
    }
    let width = (cfg.w_int + cfg.w_frac) as usize;
    if bits.len() != 2 + width {
        return Err(Error::Malformed(format!(
            "message of {} bits, expected 1 or {}",
            bits.len(),
            2 + width
        )));
    }
    if !bits[0] {
        return Err(Error::Malformed("presence bit clear on a full message".into()));
    }
    let mut q: u64 = 0;
    for b in &bits[2..] {
        q = (q << 1) | u64::from(*b);
    }
    let mag = q as f64 / (2.0f64).powi(cfg.w_frac as i32);
    Ok(if bits[1] { mag } else { -mag })
}

/// Per-machine bit accounting with an optional hard cap.
#[derive(Clone, Debug)]
pub struct BudgetLedger {
    used: Vec<u64>,
    cap: Option<f64>,
}

impl BudgetLedger {
    /// `cap` is the per-machine bit ceiling; `None` disables enforcement.
    pub fn new(machines: usize, cap: Option<f64>) -> Self {
        BudgetLedger {
            used: vec![0; machines],
            cap,
        }
    }

    /// Records a message against `machine`, failing without recording if the
    /// cap would be crossed.
    pub fn record(&mut self, machine: usize, msg: &BitMessage) -> Result<()> {
        let attempted = self.used[machine] + msg.len();
        if let Some(cap) = self.cap {
            if attempted as f64 > cap {
                return Err(Error::BudgetExceeded {
                    machine,
                    attempted,
                    cap,
                });
            }
        }
        self.used[machine] = attempted;
        Ok(())
    }

    pub fn machines(&self) -> usize {
        self.used.len()
    }

    pub fn bits(&self, machine: usize) -> u64 {
        self.used[machine]
    }

    pub fn per_machine(&self) -> &[u64] {
        &self.used
    }

    pub fn max_bits(&self) -> u64 {
        self.used.iter().copied().max().unwrap_or(0)
    }

    pub fn total_bits(&self) -> u64 {
        self.used.iter().sum()
    }

    pub fn cap(&self) -> Option<f64> {
        self.cap
    }
}
