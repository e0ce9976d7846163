//! The global tick loop.
//!
//! Order within tick `k`:
//! 1. (k > 0) apply the holder motion ordered by last tick's pulse, then
//!    integrate wear over one tick;
//! 2. refresh the transducer reading;
//! 3. converter input and sample-and-hold (at sample instants);
//! 4. device FSM, then host FSM, on the shared lines;
//! 5. display update on conversion completion;
//! 6. detector and compensator; a pulse moves the holder at tick k + 1.

use crate::adc::{self, AdcCode, SampleHold};
use crate::compensator::{detector_step, displacement_per_pulse, CompensatorFsm, Mode};
use crate::display::{update_display, DisplayState};
use crate::link::{DeviceFsm, HostFsm, LineStates};
use crate::plant::Plant;
use crate::scenario::{DetectorSource, Scenario};

/// Observable state at the end of one tick.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub tick: u64,
    pub t: f64,
    pub wear_depth: f64,
    pub holder_pos: f64,
    pub gap: f64,
    pub transducer_v: f64,
    pub held_v: f64,
    /// Code whose conversion completed this tick.
    pub adc_code: Option<u8>,
    pub saturation: bool,
    pub sel: bool,
    pub busy: bool,
    pub ack: bool,
    pub p_end: bool,
    pub data: u8,
    /// LED bits as an integer, bit 0 = LED 0.
    pub leds: u8,
    pub mode: Mode,
    pub pulse: bool,
    pub brake_engaged: bool,
    pub pulses_emitted: u64,
    pub dropped_samples: u64,
    pub violations: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunSummary {
    pub delivered_samples: u64,
    pub dropped_samples: u64,
    pub violations: u64,
    pub max_gap: f64,
    pub final_gap: f64,
    /// Mean |reconstruct(code) - held input| over delivered samples, volts.
    pub mean_abs_acquisition_error: f64,
    pub max_abs_acquisition_error: f64,
    pub pulses_emitted: u64,
    pub conversions_started: u64,
    /// Started but neither delivered nor dropped when the run ended (0 or 1).
    pub in_flight: u64,
}

#[derive(Debug, Clone, Copy)]
struct InFlight {
    code: AdcCode,
    held_v: f64,
    saturated: bool,
}

pub fn run(scenario: &Scenario) -> (Vec<TraceRecord>, RunSummary) {
    let dt = scenario.tick_seconds;
    let delta = displacement_per_pulse(&scenario.chain);
    let mut plant = Plant::new(scenario.wear.clone(), scenario.transducer);
    let mut hold = SampleHold::new();
    let mut device = DeviceFsm::new(scenario.adc.conversion_ticks(), scenario.link_timeout_ticks)
        .expect("validated scenario");
    let mut host = HostFsm::new(scenario.link_timeout_ticks).expect("validated scenario");
    let mut comp = CompensatorFsm::new(scenario.pulse, scenario.brake);
    let mut lines = LineStates::default();
    let mut display = DisplayState::default();

    let mut trace = Vec::with_capacity(scenario.duration_ticks as usize);
    let mut in_flight: Option<InFlight> = None;
    let mut pending_sample: Option<InFlight> = None;
    let mut last_completed: Option<u8> = None;
    let mut detector_active = false;
    let mut applied_pulses = 0u64;
    let mut pulse_pending = false;
    let mut err_sum = 0.0;
    let mut err_max: f64 = 0.0;
    let mut max_gap: f64 = 0.0;

    for tick in 0..scenario.duration_ticks {
        if tick > 0 {
            if pulse_pending {
                applied_pulses += 1;
                plant
                    .move_holder_to(applied_pulses as f64 * delta)
                    .expect("holder only advances");
            }
            plant.advance(dt);
        }
        plant.sense();
        let ps = *plant.state();
        let t = tick as f64 * dt;

        let v_in = scenario.input.voltage(t, ps.transducer_v);
        let sample = if scenario.adc.is_sample_instant(tick) {
            let held = hold.sample(v_in, tick, &scenario.adc).expect("sample instant");
            let q = adc::quantize(held);
            let s = InFlight {
                code: AdcCode {
                    code: q.code,
                    sample_tick: tick,
                },
                held_v: held,
                saturated: q.saturated,
            };
            pending_sample = Some(s);
            Some(s.code)
        } else {
            None
        };

        let dev = device.step(&mut lines, sample);
        if dev.started.is_some() {
            in_flight = pending_sample;
        }
        let mut completed = None;
        if let Some(code) = dev.completed {
            completed = in_flight.filter(|f| f.code == code);
            last_completed = Some(code.code);
            display = update_display(code, tick);
        }
        if dev.dropped.is_some() {
            in_flight = None;
        }
        let hev = host.step(&mut lines, tick);
        if let Some((_, code)) = hev.received {
            let f = in_flight.expect("host receives only the sample in flight");
            debug_assert_eq!(f.code.code, code);
            let err = (adc::reconstruct(code) - f.held_v).abs();
            err_sum += err;
            err_max = err_max.max(err);
        }
        if dev.delivered.is_some() {
            in_flight = None;
        }

        let sensed = match scenario.detector_source {
            DetectorSource::Analog => Some(ps.transducer_v),
            DetectorSource::Adc => last_completed.map(adc::reconstruct),
        };
        if let Some(v) = sensed {
            detector_active = detector_step(v, &scenario.detector, detector_active);
        }
        let out = comp.step(detector_active);
        pulse_pending = out.pulse;

        max_gap = max_gap.max(ps.gap);
        trace.push(TraceRecord {
            tick,
            t,
            wear_depth: ps.wear_depth,
            holder_pos: ps.holder_pos,
            gap: ps.gap,
            transducer_v: ps.transducer_v,
            held_v: hold.held().unwrap_or(0.0),
            adc_code: completed.map(|f| f.code.code),
            saturation: completed.is_some_and(|f| f.saturated),
            sel: lines.sel,
            busy: lines.busy,
            ack: lines.ack,
            p_end: lines.p_end,
            data: lines.data,
            leds: display.value(),
            mode: comp.mode(),
            pulse: out.pulse,
            brake_engaged: comp.brake().engaged,
            pulses_emitted: comp.pulses_emitted(),
            dropped_samples: device.dropped(),
            violations: host.violations(),
        });
    }

    let delivered = host.received().len() as u64;
    let started = device.conversions_started();
    let summary = RunSummary {
        delivered_samples: delivered,
        dropped_samples: device.dropped(),
        violations: host.violations(),
        max_gap,
        final_gap: trace.last().map_or(0.0, |r| r.gap),
        mean_abs_acquisition_error: if delivered > 0 { err_sum / delivered as f64 } else { 0.0 },
        max_abs_acquisition_error: err_max,
        pulses_emitted: comp.pulses_emitted(),
        conversions_started: started,
        in_flight: started - delivered - device.dropped(),
    };
    (trace, summary)
}
