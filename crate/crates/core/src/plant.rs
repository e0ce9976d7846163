//! Physical side of the compensation loop: the receding tool edge, the
//! radially movable holder, and the contact transducer riding on the edge.
//!
//! Lengths are in µm, time in s, voltages in V.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Full-scale limit of the transducer output.
pub const V_MAX: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub enum WearLaw {
    /// Constant recession speed in µm/s.
    Constant { rate: f64 },
    /// Piecewise-constant speed: each `(time, rate)` pair holds from its time
    /// until the next breakpoint. Wear depth is piecewise linear in time.
    Piecewise { breakpoints: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WearModel {
    law: WearLaw,
    noise_amplitude: f64,
    rng_seed: u64,
}

impl WearModel {
    pub fn constant(rate: f64) -> Result<Self> {
        if !(rate.is_finite() && rate >= 0.0) {
            return Err(Error::invalid("rate", format!("must be finite and >= 0, got {rate}")));
        }
        Ok(Self {
            law: WearLaw::Constant { rate },
            noise_amplitude: 0.0,
            rng_seed: 0,
        })
    }

    pub fn piecewise(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(t0, _)) = breakpoints.first() else {
            return Err(Error::invalid("breakpoints", "at least one breakpoint is required"));
        };
        if t0 != 0.0 {
            return Err(Error::invalid("breakpoints", format!("first breakpoint must be at t = 0, got {t0}")));
        }
        for (i, &(t, rate)) in breakpoints.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::invalid("breakpoints", format!("breakpoint {i} has non-finite time")));
            }
            if !(rate.is_finite() && rate >= 0.0) {
                return Err(Error::invalid("breakpoints", format!("breakpoint {i} has rate {rate}, must be >= 0")));
            }
            if i > 0 && t <= breakpoints[i - 1].0 {
                return Err(Error::invalid("breakpoints", "breakpoint times must be strictly increasing"));
            }
        }
        Ok(Self {
            law: WearLaw::Piecewise { breakpoints },
            noise_amplitude: 0.0,
            rng_seed: 0,
        })
    }

    /// Uniform additive noise of ±`amplitude` µm on the sensed gap.
    pub fn with_noise(mut self, amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid("noise_amplitude", format!("must be >= 0, got {amplitude}")));
        }
        self.noise_amplitude = amplitude;
        self.rng_seed = seed;
        Ok(self)
    }

    pub fn law(&self) -> &WearLaw {
        &self.law
    }

    pub fn noise_amplitude(&self) -> f64 {
        self.noise_amplitude
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    /// Wear speed in effect at time `t`.
    pub fn rate_at(&self, t: f64) -> f64 {
        match &self.law {
            WearLaw::Constant { rate } => *rate,
            WearLaw::Piecewise { breakpoints } => breakpoints
                .iter()
                .take_while(|(bt, _)| *bt <= t)
                .last()
                .map_or(0.0, |&(_, r)| r),
        }
    }

    /// Exact wear accumulated over `[t, t + dt]`.
    pub fn wear_over(&self, t: f64, dt: f64) -> f64 {
        match &self.law {
            WearLaw::Constant { rate } => rate * dt,
            WearLaw::Piecewise { breakpoints } => {
                let end = t + dt;
                let mut total = 0.0;
                let mut cursor = t;
                let mut remaining = dt;
                for (i, &(start, rate)) in breakpoints.iter().enumerate() {
                    let seg_end = breakpoints.get(i + 1).map_or(f64::INFINITY, |b| b.0);
                    if seg_end <= cursor || start >= end {
                        continue;
                    }
                    if seg_end >= end {
                        // interval tail lies inside this segment
                        total += rate * remaining;
                        break;
                    }
                    let span = seg_end - cursor;
                    total += rate * span;
                    remaining -= span;
                    cursor = seg_end;
                }
                total
            }
        }
    }
}

/// Static transfer law of the contact transducer: linear in gap, clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransducerModel {
    v_contact: f64,
    sensitivity: f64,
    v_floor: f64,
}

impl TransducerModel {
    pub fn new(v_contact: f64, sensitivity: f64, v_floor: f64) -> Result<Self> {
        if !(v_contact > 0.0 && v_contact <= V_MAX) {
            return Err(Error::invalid("v_contact", format!("must lie in (0, 5], got {v_contact}")));
        }
        if !(sensitivity.is_finite() && sensitivity > 0.0) {
            return Err(Error::invalid("sensitivity", format!("must be > 0, got {sensitivity}")));
        }
        if !(v_floor >= 0.0) {
            return Err(Error::invalid("v_floor", format!("must be >= 0, got {v_floor}")));
        }
        if v_floor >= v_contact {
            return Err(Error::invalid("v_floor", format!("must be below v_contact ({v_contact}), got {v_floor}")));
        }
        Ok(Self {
            v_contact,
            sensitivity,
            v_floor,
        })
    }

    pub fn v_contact(&self) -> f64 {
        self.v_contact
    }

    pub fn sensitivity(&self) -> f64 {
        self.sensitivity
    }

    pub fn v_floor(&self) -> f64 {
        self.v_floor
    }

    /// Gap that produces `v` on the active (unclamped) range of the law.
    pub fn gap_for_voltage(&self, v: f64) -> f64 {
        (self.v_contact - v) / self.sensitivity
    }
}

/// Output voltage for a given gap (µm).
pub fn transducer_voltage(gap: f64, model: &TransducerModel) -> f64 {
    (model.v_contact - model.sensitivity * gap).clamp(model.v_floor, V_MAX)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantState {
    pub t: f64,
    pub wear_depth: f64,
    pub holder_pos: f64,
    pub gap: f64,
    pub transducer_v: f64,
}

impl PlantState {
    /// Fresh tool at t = 0, holder at its origin, transducer in contact.
    pub fn initial(transducer: &TransducerModel) -> Self {
        Self {
            t: 0.0,
            wear_depth: 0.0,
            holder_pos: 0.0,
            gap: 0.0,
            transducer_v: transducer_voltage(0.0, transducer),
        }
    }
}

fn gap_of(wear_depth: f64, holder_pos: f64) -> f64 {
    (wear_depth - holder_pos).max(0.0)
}

/// Advances time by `dt` and integrates wear. The transducer reading is left
/// as-is; [`Plant::sense`] refreshes it after all geometry updates of a tick.
pub fn advance_wear(state: &PlantState, model: &WearModel, dt: f64) -> PlantState {
    debug_assert!(dt > 0.0);
    let wear_depth = state.wear_depth + model.wear_over(state.t, dt);
    PlantState {
        t: state.t + dt,
        wear_depth,
        gap: gap_of(wear_depth, state.holder_pos),
        ..*state
    }
}

/// Moves the holder forward by `delta` µm. The holder never retracts.
pub fn apply_holder_motion(state: &PlantState, delta: f64) -> Result<PlantState> {
    if !(delta >= 0.0) {
        return Err(Error::NegativeMotion(delta));
    }
    let holder_pos = state.holder_pos + delta;
    Ok(PlantState {
        holder_pos,
        gap: gap_of(state.wear_depth, holder_pos),
        ..*state
    })
}

/// The plant with its models and the seeded noise source for the gap sensor.
#[derive(Debug, Clone)]
pub struct Plant {
    wear: WearModel,
    transducer: TransducerModel,
    rng: ChaCha8Rng,
    state: PlantState,
}

impl Plant {
    pub fn new(wear: WearModel, transducer: TransducerModel) -> Self {
        let rng = ChaCha8Rng::seed_from_u64(wear.rng_seed);
        let mut plant = Self {
            state: PlantState::initial(&transducer),
            wear,
            transducer,
            rng,
        };
        plant.sense();
        plant
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn transducer(&self) -> &TransducerModel {
        &self.transducer
    }

    /// Moves the holder to `target` µm from its origin.
    ///
    /// The step is computed as `target - holder_pos`, so a holder that only
    /// ever advances to `n * delta` lands on that product bit-exactly.
    pub fn move_holder_to(&mut self, target: f64) -> Result<()> {
        let delta = target - self.state.holder_pos;
        self.state = apply_holder_motion(&self.state, delta)?;
        Ok(())
    }

    pub fn advance(&mut self, dt: f64) {
        self.state = advance_wear(&self.state, &self.wear, dt);
    }

    /// Refreshes the transducer reading from the current gap.
    pub fn sense(&mut self) {
        let a = self.wear.noise_amplitude;
        let sensed = if a > 0.0 {
            (self.state.gap + self.rng.gen_range(-a..=a)).max(0.0)
        } else {
            self.state.gap
        };
        self.state.transducer_v = transducer_voltage(sensed, &self.transducer);
    }
}
