//! Wear compensation chain: threshold detector on the amplified transducer
//! signal, adjustable pulse generator, electromagnet/ratchet/worm/screw drive
//! of the holder, and the pneumatic brake interlock.

use crate::error::{Error, Result};

/// Amplifier plus two-threshold detector. Thresholds are in amplified volts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    gain: f64,
    v_on: f64,
    v_off: f64,
}

impl DetectorConfig {
    pub fn new(gain: f64, v_on: f64, v_off: f64) -> Result<Self> {
        if !(gain.is_finite() && gain > 0.0) {
            return Err(Error::invalid("gain", format!("must be > 0, got {gain}")));
        }
        if !(v_on.is_finite() && v_off.is_finite()) {
            return Err(Error::invalid("v_on", "thresholds must be finite"));
        }
        if v_on >= v_off {
            return Err(Error::invalid("v_on", format!("must be below v_off ({v_off}), got {v_on}")));
        }
        Ok(Self { gain, v_on, v_off })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn v_on(&self) -> f64 {
        self.v_on
    }

    pub fn v_off(&self) -> f64 {
        self.v_off
    }
}

/// Low amplified signal means the edge has receded from the transducer.
pub fn detector_step(transducer_v: f64, cfg: &DetectorConfig, prev_active: bool) -> bool {
    let amplified = cfg.gain * transducer_v;
    if amplified <= cfg.v_on {
        true
    } else if amplified >= cfg.v_off {
        false
    } else {
        prev_active
    }
}

/// Arm stroke -> ratchet wheel -> worm -> lead screw.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActuatorChain {
    /// Teeth advanced on the ratchet wheel per electromagnet stroke.
    pub teeth_per_pulse: u32,
    pub wheel_teeth: u32,
    /// Wheel turns per screw turn.
    pub worm_ratio: u32,
    /// µm of holder travel per screw turn.
    pub screw_pitch: f64,
}

impl ActuatorChain {
    pub fn new(teeth_per_pulse: u32, wheel_teeth: u32, worm_ratio: u32, screw_pitch: f64) -> Result<Self> {
        if teeth_per_pulse < 1 {
            return Err(Error::invalid("teeth_per_pulse", "must be >= 1"));
        }
        if wheel_teeth < 2 {
            return Err(Error::invalid("wheel_teeth", "must be >= 2"));
        }
        if worm_ratio < 1 {
            return Err(Error::invalid("worm_ratio", "must be >= 1"));
        }
        if !(screw_pitch.is_finite() && screw_pitch > 0.0) {
            return Err(Error::invalid("screw_pitch", format!("must be > 0, got {screw_pitch}")));
        }
        Ok(Self {
            teeth_per_pulse,
            wheel_teeth,
            worm_ratio,
            screw_pitch,
        })
    }
}

/// Holder advance per pulse: `pitch * k / (Z * N)` µm.
pub fn displacement_per_pulse(chain: &ActuatorChain) -> f64 {
    chain.screw_pitch * chain.teeth_per_pulse as f64 / (chain.wheel_teeth as f64 * chain.worm_ratio as f64)
}

/// Pulse frequency whose mean holder speed equals `wear_rate` (µm/s).
pub fn required_frequency(wear_rate: f64, chain: &ActuatorChain) -> Result<f64> {
    if !(wear_rate > 0.0) {
        return Err(Error::NonPositiveRate(wear_rate));
    }
    Ok(wear_rate / displacement_per_pulse(chain))
}

/// Free-running pulse source, counted in whole simulator ticks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseGenerator {
    frequency: f64,
    period_ticks: u64,
    phase_ticks: u64,
}

impl PulseGenerator {
    /// The tick rate must exceed `frequency` so that at most one pulse falls
    /// in any tick. The period is rounded to whole ticks.
    pub fn new(frequency: f64, tick_seconds: f64) -> Result<Self> {
        if !(frequency.is_finite() && frequency > 0.0) {
            return Err(Error::invalid("frequency", format!("must be > 0, got {frequency}")));
        }
        if !(tick_seconds > 0.0) {
            return Err(Error::invalid("tick_seconds", "must be > 0"));
        }
        let tick_rate = 1.0 / tick_seconds;
        if tick_rate <= frequency {
            return Err(Error::invalid(
                "frequency",
                format!("{frequency} Hz is not below the tick rate {tick_rate} Hz"),
            ));
        }
        let period_ticks = (tick_rate / frequency).round().max(1.0) as u64;
        Ok(Self {
            frequency,
            period_ticks,
            phase_ticks: 0,
        })
    }

    pub fn frequency(&self) -> f64 {
        self.frequency
    }

    pub fn period_ticks(&self) -> u64 {
        self.period_ticks
    }

    /// Re-arms so the next tick fires.
    pub fn restart(&mut self) {
        self.phase_ticks = 0;
    }

    pub fn tick(&mut self) -> bool {
        if self.phase_ticks == 0 {
            self.phase_ticks = self.period_ticks - 1;
            true
        } else {
            self.phase_ticks -= 1;
            false
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BrakeState {
    pub engaged: bool,
    pub engage_delay_ticks: u64,
    pub release_delay_ticks: u64,
}

impl BrakeState {
    pub fn new(engage_delay_ticks: u64, release_delay_ticks: u64) -> Self {
        Self {
            engaged: true,
            engage_delay_ticks,
            release_delay_ticks,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    LockedIdle,
    Releasing,
    Compensating,
    Engaging,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::LockedIdle => "LOCKED_IDLE",
            Mode::Releasing => "RELEASING",
            Mode::Compensating => "COMPENSATING",
            Mode::Engaging => "ENGAGING",
        }
    }

    pub fn ordinal(self) -> u8 {
        self as u8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BrakeCommand {
    #[default]
    None,
    Release,
    Engage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CompensatorOutput {
    pub pulse: bool,
    pub brake_command: BrakeCommand,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompensatorFsm {
    mode: Mode,
    pulses_emitted: u64,
    generator: PulseGenerator,
    brake: BrakeState,
    ticks_in_mode: u64,
}

impl CompensatorFsm {
    pub fn new(generator: PulseGenerator, brake: BrakeState) -> Self {
        Self {
            mode: Mode::LockedIdle,
            pulses_emitted: 0,
            generator,
            brake: BrakeState { engaged: true, ..brake },
            ticks_in_mode: 0,
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn pulses_emitted(&self) -> u64 {
        self.pulses_emitted
    }

    pub fn brake(&self) -> &BrakeState {
        &self.brake
    }

    pub fn generator(&self) -> &PulseGenerator {
        &self.generator
    }

    fn enter(&mut self, mode: Mode) {
        self.mode = mode;
        self.ticks_in_mode = 0;
    }

    /// One tick of mode sequencing. Delays are counted in ticks spent in the
    /// transitional mode; a zero delay still occupies one tick.
    pub fn step(&mut self, detector_active: bool) -> CompensatorOutput {
        let mut out = CompensatorOutput::default();
        match self.mode {
            Mode::LockedIdle => {
                if detector_active {
                    out.brake_command = BrakeCommand::Release;
                    self.enter(Mode::Releasing);
                }
            }
            Mode::Releasing => {
                self.ticks_in_mode += 1;
                if self.ticks_in_mode >= self.brake.release_delay_ticks.max(1) {
                    self.brake.engaged = false;
                    if detector_active {
                        self.enter(Mode::Compensating);
                        self.generator.restart();
                        out.pulse = self.fire();
                    } else {
                        out.brake_command = BrakeCommand::Engage;
                        self.enter(Mode::Engaging);
                    }
                }
            }
            Mode::Compensating => {
                if detector_active {
                    out.pulse = self.fire();
                } else {
                    out.brake_command = BrakeCommand::Engage;
                    self.enter(Mode::Engaging);
                }
            }
            Mode::Engaging => {
                self.ticks_in_mode += 1;
                if self.ticks_in_mode >= self.brake.engage_delay_ticks.max(1) {
                    self.brake.engaged = true;
                    self.enter(Mode::LockedIdle);
                }
            }
        }
        out
    }

    fn fire(&mut self) -> bool {
        let pulse = self.generator.tick();
        if pulse {
            self.pulses_emitted += 1;
        }
        pulse
    }
}

/// Value-semantics form of [`CompensatorFsm::step`].
pub fn compensator_step(fsm: &CompensatorFsm, detector_active: bool) -> (CompensatorFsm, CompensatorOutput) {
    let mut fsm = fsm.clone();
    let out = fsm.step(detector_active);
    (fsm, out)
}
