use super::{split_code, LineStates};
use crate::adc::AdcCode;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeviceState {
    Idle,
    Converting,
    LowReady,
    LowWait,
    HighReady,
    HighWait,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Idle,
    Converting { code: AdcCode, remaining: u64 },
    LowReady(AdcCode),
    LowWait(AdcCode),
    HighReady(AdcCode),
    HighWait(AdcCode),
}

/// What happened on the device side during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeviceEvents {
    pub started: Option<AdcCode>,
    /// Conversion finished; the code is now on the lines (low nibble).
    pub completed: Option<AdcCode>,
    pub dropped: Option<AdcCode>,
    /// Host confirmed receipt.
    pub delivered: Option<AdcCode>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceFsm {
    phase: Phase,
    conversion_ticks: u64,
    timeout_ticks: u64,
    waited: u64,
    started: u64,
    delivered: u64,
    dropped: u64,
}

impl DeviceFsm {
    pub fn new(conversion_ticks: u64, timeout_ticks: u64) -> Result<Self> {
        if conversion_ticks < 1 {
            return Err(Error::invalid("conversion_ticks", "must be >= 1"));
        }
        if timeout_ticks < 1 {
            return Err(Error::invalid("timeout_ticks", "must be >= 1"));
        }
        Ok(Self {
            phase: Phase::Idle,
            conversion_ticks,
            timeout_ticks,
            waited: 0,
            started: 0,
            delivered: 0,
            dropped: 0,
        })
    }

    pub fn state(&self) -> DeviceState {
        match self.phase {
            Phase::Idle => DeviceState::Idle,
            Phase::Converting { .. } => DeviceState::Converting,
            Phase::LowReady(_) => DeviceState::LowReady,
            Phase::LowWait(_) => DeviceState::LowWait,
            Phase::HighReady(_) => DeviceState::HighReady,
            Phase::HighWait(_) => DeviceState::HighWait,
        }
    }

    pub fn pending_code(&self) -> Option<AdcCode> {
        match self.phase {
            Phase::Idle => None,
            Phase::Converting { code, .. }
            | Phase::LowReady(code)
            | Phase::LowWait(code)
            | Phase::HighReady(code)
            | Phase::HighWait(code) => Some(code),
        }
    }

    pub fn timeout_ticks(&self) -> u64 {
        self.timeout_ticks
    }

    pub fn conversions_started(&self) -> u64 {
        self.started
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    /// Advances one tick. `sample` is the code the converter would produce if
    /// a conversion started now; it is `Some` only at sample instants.
    ///
    /// Reads `lines.sel` and drives every other line.
    pub fn step(&mut self, lines: &mut LineStates, sample: Option<AdcCode>) -> DeviceEvents {
        let mut ev = DeviceEvents::default();
        let sel = lines.sel;
        match self.phase {
            Phase::Idle => {
                if let (true, Some(code)) = (sel, sample) {
                    self.started += 1;
                    ev.started = Some(code);
                    self.phase = Phase::Converting {
                        code,
                        remaining: self.conversion_ticks,
                    };
                    lines.busy = true;
                }
            }
            Phase::Converting { code, remaining } => {
                let remaining = remaining - 1;
                if remaining == 0 {
                    lines.busy = false;
                    lines.data = split_code(code.code).0;
                    lines.ack = true;
                    ev.completed = Some(code);
                    self.enter(Phase::LowReady(code));
                } else {
                    self.phase = Phase::Converting { code, remaining };
                }
            }
            Phase::LowReady(code) => {
                if !sel {
                    lines.ack = false;
                    self.enter(Phase::LowWait(code));
                } else {
                    self.wait(lines, &mut ev);
                }
            }
            Phase::LowWait(code) => {
                if sel {
                    lines.data = split_code(code.code).1;
                    lines.ack = true;
                    lines.p_end = true;
                    self.enter(Phase::HighReady(code));
                } else {
                    self.wait(lines, &mut ev);
                }
            }
            Phase::HighReady(code) => {
                if !sel {
                    lines.ack = false;
                    lines.p_end = false;
                    self.enter(Phase::HighWait(code));
                } else {
                    self.wait(lines, &mut ev);
                }
            }
            Phase::HighWait(code) => {
                if sel {
                    self.delivered += 1;
                    ev.delivered = Some(code);
                    self.phase = Phase::Idle;
                } else {
                    self.wait(lines, &mut ev);
                }
            }
        }
        ev
    }

    fn enter(&mut self, phase: Phase) {
        self.phase = phase;
        self.waited = 0;
    }

    fn wait(&mut self, lines: &mut LineStates, ev: &mut DeviceEvents) {
        self.waited += 1;
        if self.waited >= self.timeout_ticks {
            ev.dropped = self.pending_code();
            self.dropped += 1;
            lines.busy = false;
            lines.ack = false;
            lines.p_end = false;
            lines.data = 0;
            self.enter(Phase::Idle);
        }
    }
}

/// Value-semantics form of [`DeviceFsm::step`].
pub fn device_step(
    fsm: &DeviceFsm,
    lines: &LineStates,
    sample: Option<AdcCode>,
) -> (DeviceFsm, LineStates, DeviceEvents) {
    let mut fsm = fsm.clone();
    let mut lines = *lines;
    let ev = fsm.step(&mut lines, sample);
    (fsm, lines, ev)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(c: u8) -> AdcCode {
        AdcCode {
            code: c,
            sample_tick: 0,
        }
    }

    /// Drives the device with a scripted SEL level per tick.
    fn script(fsm: &mut DeviceFsm, sels: &[bool], sample: AdcCode) -> Vec<(LineStates, DeviceEvents)> {
        let mut lines = LineStates::default();
        sels.iter()
            .map(|&s| {
                lines.sel = s;
                let ev = fsm.step(&mut lines, Some(sample));
                (lines, ev)
            })
            .collect()
    }

    #[test]
    fn idle_without_request_stays_idle() {
        let mut d = DeviceFsm::new(2, 5).unwrap();
        let out = script(&mut d, &[false; 20], code(7));
        assert!(out.iter().all(|(l, e)| *l == LineStates::default() && *e == DeviceEvents::default()));
        assert_eq!(d.state(), DeviceState::Idle);
        assert_eq!(d.pending_code(), None);
    }

    #[test]
    fn nominal_sequence() {
        let mut d = DeviceFsm::new(2, 5).unwrap();
        //              conv   conv   lowR   lowW   highR  highW  idle
        let sels = [true, true, true, false, true, false, true];
        let out = script(&mut d, &sels, code(0xa5));
        let busy: Vec<bool> = out.iter().map(|(l, _)| l.busy).collect();
        assert_eq!(busy, [true, true, false, false, false, false, false]);
        assert_eq!(out[0].1.started, Some(code(0xa5)));
        assert_eq!(out[2].1.completed, Some(code(0xa5)));
        assert!(out[2].0.ack && !out[2].0.p_end && out[2].0.data == 0x5);
        assert!(!out[3].0.ack);
        assert!(out[4].0.ack && out[4].0.p_end && out[4].0.data == 0xa);
        assert!(!out[5].0.ack && !out[5].0.p_end);
        assert_eq!(out[6].1.delivered, Some(code(0xa5)));
        assert_eq!(d.state(), DeviceState::Idle);
        assert_eq!((d.conversions_started(), d.delivered(), d.dropped()), (1, 1, 0));
    }

    #[test]
    fn pending_code_present_outside_idle() {
        let mut d = DeviceFsm::new(1, 50).unwrap();
        let mut lines = LineStates { sel: true, ..Default::default() };
        for s in [true, true, false, true, false, true] {
            lines.sel = s;
            d.step(&mut lines, Some(code(3)));
            assert_eq!(d.pending_code().is_some(), d.state() != DeviceState::Idle);
            assert_eq!(lines.busy, d.state() == DeviceState::Converting);
        }
    }

    #[test]
    fn timeout_in_each_waiting_state() {
        // Prefixes reach LowReady, LowWait, HighReady, HighWait respectively;
        // the final SEL level is then held.
        let prefixes: [&[bool]; 4] = [
            &[true, true],
            &[true, true, false],
            &[true, true, false, true],
            &[true, true, false, true, false],
        ];
        let expect = [
            DeviceState::LowReady,
            DeviceState::LowWait,
            DeviceState::HighReady,
            DeviceState::HighWait,
        ];
        for (prefix, state) in prefixes.iter().zip(expect) {
            let mut d = DeviceFsm::new(1, 4).unwrap();
            let mut lines = LineStates::default();
            for &s in prefix.iter() {
                lines.sel = s;
                d.step(&mut lines, Some(code(0x3c)));
            }
            assert_eq!(d.state(), state);
            let hold = *prefix.last().unwrap();
            let mut drops = vec![];
            for i in 0..4 {
                lines.sel = hold;
                // no new samples while stalled
                let ev = d.step(&mut lines, None);
                if ev.dropped.is_some() {
                    drops.push(i);
                }
            }
            assert_eq!(drops, vec![3], "state {state:?}");
            assert_eq!(d.dropped(), 1);
            assert_eq!(d.state(), DeviceState::Idle);
            assert_eq!(lines, LineStates { sel: hold, ..Default::default() });
        }
    }

    #[test]
    fn converting_ignores_sel() {
        let mut d = DeviceFsm::new(3, 2).unwrap();
        let out = script(&mut d, &[true, false, false, false], code(1));
        assert_eq!(out.iter().filter(|(l, _)| l.busy).count(), 3);
        assert_eq!(out[3].1.completed, Some(code(1)));
    }

    #[test]
    fn rejects_zero_parameters() {
        assert!(DeviceFsm::new(0, 1).is_err());
        assert!(DeviceFsm::new(1, 0).is_err());
    }
}
