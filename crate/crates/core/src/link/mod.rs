//! Read-out of converted codes over the multiplexed parallel-port lines.
//!
//! Each 8-bit code travels as two nibbles on the four data lines, low nibble
//! first, paced by a four-phase handshake between the host's SEL strobe and
//! the device's ACK line. BUSY marks a conversion in progress and P.END is
//! raised together with the second ACK of a sample.
//!
//! Per sample, the host drives four edges after its initial request:
//!
//! | device state | lines driven by device   | waits for            |
//! |--------------|--------------------------|----------------------|
//! | `Idle`       | all low                  | SEL high at a sample instant |
//! | `Converting` | BUSY                     | `conversion_ticks`   |
//! | `LowReady`   | ACK, data = low nibble   | SEL low              |
//! | `LowWait`    | -                        | SEL high             |
//! | `HighReady`  | ACK, P.END, data = high  | SEL low              |
//! | `HighWait`   | -                        | SEL high (receipt)   |
//!
//! The host's SEL rise out of `HighWait` confirms receipt and doubles as the
//! request for the next sample. In the four waiting states the device gives
//! up after `timeout_ticks` without the expected edge, clears its outputs and
//! counts the sample as dropped. The host shares the timeout constant and
//! discards a partial transfer when its own next edge would arrive late, so
//! both sides always agree on whether a sample was delivered.

mod conformance;
mod device;
mod host;

pub use conformance::{
    check_clean, check_stall, line_stats, run_transfers, suite, CaseReport, LineStats, LinkRun, LinkTiming, Stall,
    StallPoint, STALL_TIMING,
};
pub use device::{device_step, DeviceEvents, DeviceFsm, DeviceState};
pub use host::{host_step, HostEvents, HostFsm, HostState, Violation};

use crate::error::{Error, Result};

/// Instantaneous logic levels on the port.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Hash)]
pub struct LineStates {
    /// Host request strobe.
    pub sel: bool,
    pub busy: bool,
    pub ack: bool,
    /// Second half of a sample; only meaningful while `ack` is high.
    pub p_end: bool,
    /// The four multiplexed data lines, `0..=15`.
    pub data: u8,
}

impl LineStates {
    pub fn is_consistent(&self) -> bool {
        self.data <= 0x0f && (!self.p_end || self.ack)
    }
}

/// Splits a code into `(low, high)` nibbles. Low goes out first.
pub fn split_code(code: u8) -> (u8, u8) {
    (code & 0x0f, code >> 4)
}

pub fn join_halves(low: u8, high: u8) -> Result<u8> {
    if low > 0x0f {
        return Err(Error::NibbleOutOfRange(low));
    }
    if high > 0x0f {
        return Err(Error::NibbleOutOfRange(high));
    }
    Ok(high << 4 | low)
}
