//! Trace-level invariant scan. Every check reads only the recorded columns
//! plus the chain's displacement per pulse.

use std::fmt;

use crate::compensator::Mode;
use crate::sim::TraceRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Invariant {
    GapConsistency,
    WearMonotone,
    HolderMonotone,
    TransducerRange,
    BrakeInterlock,
    PulseAccounting,
    PulseOutsideCompensating,
    BrakeMode,
    DisplayMirror,
    LineConsistency,
    DataStableUnderAck,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantViolation {
    pub tick: u64,
    pub invariant: Invariant,
    pub detail: String,
}

impl fmt::Display for InvariantViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tick {}: {:?}: {}", self.tick, self.invariant, self.detail)
    }
}

/// Scans the whole trace. `delta` is the holder advance per pulse.
pub fn scan(trace: &[TraceRecord], delta: f64) -> Vec<InvariantViolation> {
    let mut out = Vec::new();
    let mut bad = |tick, invariant, detail: String| {
        out.push(InvariantViolation { tick, invariant, detail });
    };
    let mut shown: Option<u8> = None;
    let holder0 = trace.first().map_or(0.0, |r| r.holder_pos);

    for (i, r) in trace.iter().enumerate() {
        let expect_gap = (r.wear_depth - r.holder_pos).max(0.0);
        if r.gap != expect_gap {
            bad(r.tick, Invariant::GapConsistency, format!("gap {} != {}", r.gap, expect_gap));
        }
        if !(0.0..=5.0).contains(&r.transducer_v) {
            bad(r.tick, Invariant::TransducerRange, format!("{} V", r.transducer_v));
        }
        if r.pulse && r.mode != Mode::Compensating {
            bad(r.tick, Invariant::PulseOutsideCompensating, format!("{:?}", r.mode));
        }
        match r.mode {
            Mode::LockedIdle if !r.brake_engaged => {
                bad(r.tick, Invariant::BrakeMode, "locked with brake released".into())
            }
            Mode::Compensating if r.brake_engaged => {
                bad(r.tick, Invariant::BrakeMode, "compensating with brake engaged".into())
            }
            _ => {}
        }
        if r.data > 15 || (r.p_end && !r.ack) {
            bad(r.tick, Invariant::LineConsistency, format!("data {} p_end {} ack {}", r.data, r.p_end, r.ack));
        }
        if let Some(c) = r.adc_code {
            shown = Some(c);
        }
        if let Some(c) = shown {
            if r.leds != c {
                bad(r.tick, Invariant::DisplayMirror, format!("leds {} != latest code {}", r.leds, c));
            }
        }

        let Some(prev) = i.checked_sub(1).map(|j| &trace[j]) else {
            continue;
        };
        if r.wear_depth < prev.wear_depth {
            bad(r.tick, Invariant::WearMonotone, format!("{} < {}", r.wear_depth, prev.wear_depth));
        }
        if r.holder_pos < prev.holder_pos {
            bad(r.tick, Invariant::HolderMonotone, format!("{} < {}", r.holder_pos, prev.holder_pos));
        }
        if r.holder_pos != prev.holder_pos && (r.brake_engaged || prev.brake_engaged) {
            bad(r.tick, Invariant::BrakeInterlock, "holder moved under an engaged brake".into());
        }
        // motion from a pulse lands one tick later
        let expect_holder = holder0 + prev.pulses_emitted as f64 * delta;
        if r.holder_pos != expect_holder {
            bad(
                r.tick,
                Invariant::PulseAccounting,
                format!("holder {} != {} pulses * delta", r.holder_pos, prev.pulses_emitted),
            );
        }
        if r.ack && prev.ack && r.data != prev.data {
            bad(r.tick, Invariant::DataStableUnderAck, format!("{} -> {}", prev.data, r.data));
        }
    }
    out
}
