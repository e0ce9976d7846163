//! Link-only driver: feeds a fixed list of codes through the device and
//! host FSMs and records the line levels of every tick. Used by the
//! `conformance` CLI command and the link test suites.

use super::{DeviceFsm, DeviceState, HostFsm, HostState, LineStates};
use crate::adc::AdcCode;
use crate::error::Result;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkTiming {
    pub sample_period_ticks: u64,
    pub conversion_ticks: u64,
    pub timeout_ticks: u64,
}

impl Default for LinkTiming {
    fn default() -> Self {
        Self {
            sample_period_ticks: 1,
            conversion_ticks: 1,
            timeout_ticks: 8,
        }
    }
}

/// The four host edges of a transfer, after its initial request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StallPoint {
    /// SEL fall acknowledging the low nibble.
    ReleaseLow,
    /// SEL rise requesting the high nibble.
    RequestHigh,
    /// SEL fall acknowledging the high nibble.
    ReleaseHigh,
    /// SEL rise confirming receipt.
    Confirm,
}

impl StallPoint {
    pub const ALL: [StallPoint; 4] = [
        StallPoint::ReleaseLow,
        StallPoint::RequestHigh,
        StallPoint::ReleaseHigh,
        StallPoint::Confirm,
    ];

    fn matches(self, host: HostState, sel: bool) -> bool {
        match self {
            StallPoint::ReleaseLow => host == HostState::AwaitLow,
            StallPoint::RequestHigh => host == HostState::AwaitHigh && !sel,
            StallPoint::ReleaseHigh => host == HostState::AwaitHigh && sel,
            StallPoint::Confirm => host == HostState::Done,
        }
    }
}

/// A host that freezes once: during transfer number `transfer` (0-based,
/// counted by codes received so far), when it is about to make the edge
/// named by `point`, it instead holds SEL for `ticks` ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stall {
    pub point: StallPoint,
    pub transfer: usize,
    pub ticks: u64,
}

#[derive(Debug, Clone)]
pub struct LinkRun {
    pub lines: Vec<LineStates>,
    /// Device state at the end of each tick.
    pub device_states: Vec<DeviceState>,
    pub completed: Vec<AdcCode>,
    pub dropped: Vec<AdcCode>,
    pub device: DeviceFsm,
    pub host: HostFsm,
    /// Whether the stall (if any) actually triggered.
    pub stalled: bool,
}

impl LinkRun {
    pub fn received_codes(&self) -> Vec<u8> {
        self.host.received().iter().map(|&(_, c)| c).collect()
    }
}

/// Transfers `codes` in order, offering the next one at every sample instant.
///
/// Stops once every code has been offered and both sides are back at rest,
/// or after a generous tick budget.
pub fn run_transfers(codes: &[u8], timing: LinkTiming, stall: Option<Stall>) -> Result<LinkRun> {
    let mut device = DeviceFsm::new(timing.conversion_ticks, timing.timeout_ticks)?;
    let mut host = HostFsm::new(timing.timeout_ticks)?;
    let period = timing.sample_period_ticks.max(1);
    let per_code = period + timing.conversion_ticks + 4 * timing.timeout_ticks + 8;
    let budget = (codes.len() as u64 + 2) * per_code + stall.map_or(0, |s| s.ticks);

    let mut lines = LineStates::default();
    let mut out = LinkRun {
        lines: Vec::new(),
        device_states: Vec::new(),
        completed: Vec::new(),
        dropped: Vec::new(),
        device: device.clone(),
        host: host.clone(),
        stalled: false,
    };
    let mut next = 0usize;
    let mut frozen_until: Option<u64> = None;

    for tick in 0..budget {
        let sample = (tick % period == 0)
            .then(|| codes.get(next))
            .flatten()
            .map(|&code| AdcCode { code, sample_tick: tick });
        let ev = device.step(&mut lines, sample);
        if ev.started.is_some() {
            next += 1;
        }
        out.completed.extend(ev.completed);
        out.dropped.extend(ev.dropped);

        let frozen = match frozen_until {
            Some(until) => tick < until,
            None => match stall {
                Some(s) if host.received().len() == s.transfer && s.point.matches(host.state(), lines.sel) => {
                    // would the host move SEL this tick?
                    let mut probe = host.clone();
                    let mut probe_lines = lines;
                    probe.step(&mut probe_lines, tick);
                    if probe_lines.sel != lines.sel {
                        frozen_until = Some(tick + s.ticks);
                        out.stalled = true;
                        true
                    } else {
                        false
                    }
                }
                _ => false,
            },
        };
        if !frozen {
            host.step(&mut lines, tick);
        }
        out.lines.push(lines);
        out.device_states.push(device.state());

        let resting = device.state() == DeviceState::Idle
            && matches!(host.state(), HostState::AwaitLow | HostState::Request);
        if next == codes.len() && resting && frozen_until.is_none_or(|u| tick >= u) {
            break;
        }
    }
    out.device = device;
    out.host = host;
    Ok(out)
}

/// Edge counts and data-stability scan over a line trace.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LineStats {
    pub ack_pulses: u64,
    pub p_end_pulses: u64,
    /// Ticks where DATA changed while ACK stayed high.
    pub unstable_under_ack: u64,
}

pub fn line_stats(lines: &[LineStates]) -> LineStats {
    let mut stats = LineStats::default();
    let mut prev = LineStates::default();
    for &l in lines {
        stats.ack_pulses += u64::from(l.ack && !prev.ack);
        stats.p_end_pulses += u64::from(l.p_end && !prev.p_end);
        stats.unstable_under_ack += u64::from(l.ack && prev.ack && l.data != prev.data);
        prev = l;
    }
    stats
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseReport {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Lossless in-order transfer of `codes`, with the edge-count and stability
/// checks.
pub fn check_clean(name: &str, codes: &[u8], timing: LinkTiming) -> Result<CaseReport> {
    let run = run_transfers(codes, timing, None)?;
    let received = run.received_codes();
    let stats = line_stats(&run.lines);
    let n = received.len() as u64;
    let passed = received == codes
        && run.dropped.is_empty()
        && run.host.violations() == 0
        && stats.ack_pulses == 2 * n
        && stats.p_end_pulses == n
        && stats.unstable_under_ack == 0;
    Ok(CaseReport {
        name: name.to_owned(),
        passed,
        detail: format!(
            "sent {} received {} dropped {} violations {} ack {} p_end {} unstable {}",
            codes.len(),
            n,
            run.dropped.len(),
            run.host.violations(),
            stats.ack_pulses,
            stats.p_end_pulses,
            stats.unstable_under_ack
        ),
    })
}

/// Timing used for stall cases: a sample period long enough that one stall
/// can cost at most one sample.
pub const STALL_TIMING: LinkTiming = LinkTiming {
    sample_period_ticks: 64,
    conversion_ticks: 2,
    timeout_ticks: 8,
};

/// Stalls the host at `point` during transfer 2 of 8 for timeout + 2 ticks.
/// Passes when exactly that sample is dropped, the device is idle on the
/// drop tick, and every other code arrives in order with no violations.
pub fn check_stall(point: StallPoint) -> Result<CaseReport> {
    let codes: Vec<u8> = (0..8u8).map(|i| 0x11u8.wrapping_mul(i + 3)).collect();
    let stall = Stall {
        point,
        transfer: 2,
        ticks: STALL_TIMING.timeout_ticks + 2,
    };
    let run = run_transfers(&codes, STALL_TIMING, Some(stall))?;
    let mut expected = codes.clone();
    expected.remove(2);
    let received = run.received_codes();

    // every return to Idle must leave the device's outputs released
    let mut idle_after_drop = true;
    let mut prev = DeviceState::Idle;
    for (tick, &state) in run.device_states.iter().enumerate() {
        if prev != DeviceState::Idle && state == DeviceState::Idle {
            let l = run.lines[tick];
            idle_after_drop &= !(l.busy || l.ack || l.p_end);
        }
        prev = state;
    }
    let drops = run.dropped.len();
    idle_after_drop &= run.device.state() == DeviceState::Idle;

    let passed = run.stalled
        && drops == 1
        && run.dropped[0].code == codes[2]
        && received == expected
        && run.host.violations() == 0
        && idle_after_drop;
    Ok(CaseReport {
        name: format!("stall {point:?}"),
        passed,
        detail: format!(
            "stalled {} dropped {} received {}/{} violations {} abandoned {}",
            run.stalled,
            drops,
            received.len(),
            expected.len(),
            run.host.violations(),
            run.host.abandoned()
        ),
    })
}

/// All 256 codes, `random_count` seeded random codes, and one stall per
/// handshake phase.
pub fn suite(seed: u64, random_count: usize) -> Result<Vec<CaseReport>> {
    let all: Vec<u8> = (0..=255).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random: Vec<u8> = (0..random_count).map(|_| rng.gen()).collect();
    let mut reports = vec![
        check_clean("exhaustive 256", &all, LinkTiming::default())?,
        check_clean(&format!("random {random_count} (seed {seed})"), &random, LinkTiming::default())?,
    ];
    for point in StallPoint::ALL {
        reports.push(check_stall(point)?);
    }
    Ok(reports)
}
