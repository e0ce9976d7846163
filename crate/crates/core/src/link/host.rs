use super::{join_halves, LineStates};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum HostState {
    /// SEL low, about to request (or resynchronising after an abort).
    Request,
    /// SEL high, waiting for the low nibble.
    AwaitLow,
    /// Low nibble latched; releasing, then requesting the high nibble.
    AwaitHigh,
    /// Both nibbles latched; waiting for ACK/P.END to fall before confirming.
    Done,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Violation {
    /// ACK seen while the host had no request outstanding.
    AckWithoutSel,
    /// P.END asserted together with the first nibble.
    PEndOnFirstHalf,
    /// Second ACK arrived without P.END.
    MissingPEnd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Request { resync: bool },
    AwaitLow,
    AwaitHigh { low: u8, raised: bool },
    Done { code: u8 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct HostEvents {
    pub received: Option<(u64, u8)>,
    pub violation: Option<Violation>,
    /// A partial transfer was given up because the host's next edge would
    /// have reached the device after its timeout.
    pub abandoned: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HostFsm {
    phase: Phase,
    timeout_ticks: u64,
    /// Tick of the host's last SEL edge inside a transfer.
    last_edge: u64,
    received: Vec<(u64, u8)>,
    violations: u64,
    abandoned: u64,
}

impl HostFsm {
    pub fn new(timeout_ticks: u64) -> Result<Self> {
        if timeout_ticks < 1 {
            return Err(Error::invalid("timeout_ticks", "must be >= 1"));
        }
        Ok(Self {
            phase: Phase::Request { resync: false },
            timeout_ticks,
            last_edge: 0,
            received: Vec::new(),
            violations: 0,
            abandoned: 0,
        })
    }

    pub fn state(&self) -> HostState {
        match self.phase {
            Phase::Request { .. } => HostState::Request,
            Phase::AwaitLow => HostState::AwaitLow,
            Phase::AwaitHigh { .. } => HostState::AwaitHigh,
            Phase::Done { .. } => HostState::Done,
        }
    }

    /// Low nibble latched in the current transfer, if any.
    pub fn low_nibble(&self) -> Option<u8> {
        match self.phase {
            Phase::AwaitHigh { low, .. } => Some(low),
            Phase::Done { code } => Some(code & 0x0f),
            _ => None,
        }
    }

    /// `(tick, code)` pairs in receipt order.
    pub fn received(&self) -> &[(u64, u8)] {
        &self.received
    }

    pub fn violations(&self) -> u64 {
        self.violations
    }

    pub fn abandoned(&self) -> u64 {
        self.abandoned
    }

    /// Last tick at which the host's next edge still reaches the device in
    /// time. The device sees an edge one tick after the host makes it and
    /// started waiting one tick after `last_edge`.
    fn deadline(&self) -> u64 {
        self.last_edge + self.timeout_ticks
    }

    /// Advances one tick: reads the device-driven lines, drives SEL.
    pub fn step(&mut self, lines: &mut LineStates, tick: u64) -> HostEvents {
        let mut ev = HostEvents::default();
        match self.phase {
            Phase::Request { resync } => {
                if lines.ack || lines.p_end {
                    if !resync {
                        self.violate(lines, Violation::AckWithoutSel, &mut ev);
                    }
                } else {
                    lines.sel = true;
                    self.phase = Phase::AwaitLow;
                }
            }
            Phase::AwaitLow => {
                if lines.ack && lines.p_end {
                    self.violate(lines, Violation::PEndOnFirstHalf, &mut ev);
                } else if lines.ack {
                    self.edge(lines, false, tick);
                    self.phase = Phase::AwaitHigh {
                        low: lines.data & 0x0f,
                        raised: false,
                    };
                }
            }
            Phase::AwaitHigh { low, raised } => {
                if tick > self.deadline() {
                    self.abandon(lines, &mut ev);
                } else if !raised {
                    if !lines.ack {
                        self.edge(lines, true, tick);
                        self.phase = Phase::AwaitHigh { low, raised: true };
                    }
                } else if lines.ack && lines.p_end {
                    let code = join_halves(low, lines.data & 0x0f).expect("masked nibbles");
                    self.edge(lines, false, tick);
                    self.phase = Phase::Done { code };
                } else if lines.ack {
                    self.violate(lines, Violation::MissingPEnd, &mut ev);
                }
            }
            Phase::Done { code } => {
                if tick > self.deadline() {
                    self.abandon(lines, &mut ev);
                } else if !lines.ack && !lines.p_end {
                    // confirming receipt is also the next request
                    self.received.push((tick, code));
                    ev.received = Some((tick, code));
                    self.edge(lines, true, tick);
                    self.phase = Phase::AwaitLow;
                }
            }
        }
        ev
    }

    fn edge(&mut self, lines: &mut LineStates, sel: bool, tick: u64) {
        lines.sel = sel;
        self.last_edge = tick;
    }

    fn violate(&mut self, lines: &mut LineStates, v: Violation, ev: &mut HostEvents) {
        self.violations += 1;
        ev.violation = Some(v);
        lines.sel = false;
        self.phase = Phase::Request { resync: true };
    }

    fn abandon(&mut self, lines: &mut LineStates, ev: &mut HostEvents) {
        self.abandoned += 1;
        ev.abandoned = true;
        // By now the device has dropped the sample and gone idle. A SEL that
        // is still high stands as a fresh request (the device may already be
        // converting for it); dropping it here would read as an ACK release.
        self.phase = if lines.sel {
            Phase::AwaitLow
        } else {
            Phase::Request { resync: true }
        };
    }
}

/// Value-semantics form of [`HostFsm::step`].
pub fn host_step(fsm: &HostFsm, lines: &LineStates, tick: u64) -> (HostFsm, LineStates, HostEvents) {
    let mut fsm = fsm.clone();
    let mut lines = *lines;
    let ev = fsm.step(&mut lines, tick);
    (fsm, lines, ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dev(ack: bool, p_end: bool, data: u8) -> LineStates {
        LineStates {
            ack,
            p_end,
            data,
            ..Default::default()
        }
    }

    /// Feeds device-side line levels; SEL is whatever the host drove last.
    fn feed(host: &mut HostFsm, seq: &[LineStates]) -> Vec<(bool, HostEvents)> {
        let mut sel = false;
        seq.iter()
            .enumerate()
            .map(|(t, d)| {
                let mut lines = LineStates { sel, ..*d };
                let ev = host.step(&mut lines, t as u64);
                sel = lines.sel;
                (sel, ev)
            })
            .collect()
    }

    #[test]
    fn nominal_receive() {
        let mut h = HostFsm::new(8).unwrap();
        let seq = [
            dev(false, false, 0), // raise SEL
            dev(false, false, 0), // converting
            dev(true, false, 0x5),
            dev(false, false, 0x5),
            dev(true, true, 0xa),
            dev(false, false, 0xa),
        ];
        let out = feed(&mut h, &seq);
        let sels: Vec<bool> = out.iter().map(|o| o.0).collect();
        assert_eq!(sels, [true, true, false, true, false, true]);
        assert_eq!(out[5].1.received, Some((5, 0xa5)));
        assert_eq!(h.received(), &[(5, 0xa5)]);
        assert_eq!(h.state(), HostState::AwaitLow);
    }

    #[test]
    fn p_end_on_first_half_is_a_violation() {
        let mut h = HostFsm::new(8).unwrap();
        let out = feed(&mut h, &[dev(false, false, 0), dev(true, true, 3)]);
        assert_eq!(out[1].1.violation, Some(Violation::PEndOnFirstHalf));
        assert!(!out[1].0);
        assert!(h.received().is_empty());
        assert_eq!(h.violations(), 1);
        assert_eq!(h.state(), HostState::Request);
    }

    #[test]
    fn ack_without_request_is_a_violation_once() {
        let mut h = HostFsm::new(8).unwrap();
        let out = feed(&mut h, &[dev(true, false, 1); 5]);
        assert_eq!(out[0].1.violation, Some(Violation::AckWithoutSel));
        assert_eq!(h.violations(), 1);
        assert!(out.iter().all(|o| !o.0));
    }

    #[test]
    fn missing_p_end_on_second_half() {
        let mut h = HostFsm::new(8).unwrap();
        let seq = [
            dev(false, false, 0),
            dev(true, false, 1),
            dev(false, false, 1),
            dev(true, false, 2),
        ];
        let out = feed(&mut h, &seq);
        assert_eq!(out[3].1.violation, Some(Violation::MissingPEnd));
        assert!(h.received().is_empty());
    }

    #[test]
    fn idle_lines_forever() {
        let mut h = HostFsm::new(8).unwrap();
        feed(&mut h, &[LineStates::default(); 1000]);
        assert!(matches!(h.state(), HostState::Request | HostState::AwaitLow));
        assert!(h.received().is_empty());
        assert_eq!(h.violations(), 0);
    }

    #[test]
    fn late_confirmation_is_discarded() {
        let mut h = HostFsm::new(3).unwrap();
        let mut seq = vec![
            dev(false, false, 0),
            dev(true, false, 1),
            dev(false, false, 1),
            dev(true, true, 2), // tick 3: host drops SEL, deadline = 6
        ];
        // ACK stays up past the deadline
        seq.extend([dev(true, true, 2); 4]);
        let out = feed(&mut h, &seq);
        assert!(out[7].1.abandoned);
        assert!(h.received().is_empty());
        assert_eq!(h.abandoned(), 1);
    }
}
