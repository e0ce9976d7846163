//! The converter block: a sample-and-hold latch followed by an 8-bit
//! encoder over a fixed 0-5 V range.

use crate::error::{Error, Result};
use crate::exec::{self, Execution};

pub const V_REF: f64 = 5.0;
pub const BITS: u32 = 8;
pub const LEVELS: u32 = 1 << BITS;
/// One code step, 5/256 V.
pub const LSB: f64 = V_REF / LEVELS as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdcConfig {
    sample_period_ticks: u64,
    conversion_ticks: u64,
}

impl AdcConfig {
    pub fn new(sample_period_ticks: u64, conversion_ticks: u64) -> Result<Self> {
        if conversion_ticks < 1 {
            return Err(Error::invalid("conversion_ticks", "must be >= 1"));
        }
        if sample_period_ticks < conversion_ticks {
            return Err(Error::invalid(
                "sample_period_ticks",
                format!("must be >= conversion_ticks ({conversion_ticks}), got {sample_period_ticks}"),
            ));
        }
        Ok(Self {
            sample_period_ticks,
            conversion_ticks,
        })
    }

    pub fn sample_period_ticks(&self) -> u64 {
        self.sample_period_ticks
    }

    pub fn conversion_ticks(&self) -> u64 {
        self.conversion_ticks
    }

    pub fn is_sample_instant(&self, tick: u64) -> bool {
        tick.is_multiple_of(self.sample_period_ticks)
    }
}

/// A converted sample, tagged with the tick at which the hold latched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AdcCode {
    pub code: u8,
    pub sample_tick: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantized {
    pub code: u8,
    /// Input fell outside [0, V_REF] and was clamped.
    pub saturated: bool,
}

/// `min(floor(clamp(v, 0, 5) * 256 / 5), 255)`.
pub fn quantize(v: f64) -> Quantized {
    if v.is_nan() {
        return Quantized {
            code: 0,
            saturated: true,
        };
    }
    let saturated = !(0.0..=V_REF).contains(&v);
    let scaled = (v.clamp(0.0, V_REF) * LEVELS as f64 / V_REF).floor();
    Quantized {
        code: scaled.min((LEVELS - 1) as f64) as u8,
        saturated,
    }
}

/// Mid-rise reconstruction, `(code + 0.5) * 5 / 256`.
pub fn reconstruct(code: u8) -> f64 {
    (code as f64 + 0.5) * V_REF / LEVELS as f64
}

pub fn quantize_batch(voltages: &[f64], exec: Execution) -> Vec<Quantized> {
    exec::map(voltages, exec, |&v| quantize(v))
}

/// The "pattern" stage: latches the input at sample instants and holds it.
#[derive(Debug, Clone, Default)]
pub struct SampleHold {
    held: Option<(f64, u64)>,
}

impl SampleHold {
    pub fn new() -> Self {
        Self::default()
    }

    /// Latches `v` at `tick`, which must be a sample instant of `cfg`.
    pub fn sample(&mut self, v: f64, tick: u64, cfg: &AdcConfig) -> Result<f64> {
        if !cfg.is_sample_instant(tick) {
            return Err(Error::NotSampleInstant {
                tick,
                period: cfg.sample_period_ticks,
            });
        }
        self.held = Some((v, tick));
        Ok(v)
    }

    pub fn held(&self) -> Option<f64> {
        self.held.map(|(v, _)| v)
    }

    pub fn latched_at(&self) -> Option<u64> {
        self.held.map(|(_, t)| t)
    }
}
