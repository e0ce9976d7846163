use proptest::prelude::*;

use wearsim::adc::{self, quantize, quantize_batch, reconstruct, LSB};
use wearsim::check::{self, Invariant};
use wearsim::compensator::{
    detector_step, displacement_per_pulse, required_frequency, ActuatorChain, BrakeState, CompensatorFsm,
    DetectorConfig, Mode, PulseGenerator,
};
use wearsim::display::update_display;
use wearsim::exec::Execution;
use wearsim::plant::{advance_wear, apply_holder_motion, transducer_voltage, PlantState, TransducerModel, WearModel};
use wearsim::scenario::Scenario;
use wearsim::sim;

fn transducer() -> impl Strategy<Value = TransducerModel> {
    (1.0f64..5.0, 0.1f64..10.0, 0.0f64..1.0)
        .prop_filter_map("floor below contact", |(vc, s, f)| TransducerModel::new(vc, s, f * vc * 0.5).ok())
}

proptest! {
    #[test]
    fn quantizer_is_monotone(a in -1.0f64..6.0, b in -1.0f64..6.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(quantize(lo).code <= quantize(hi).code);
    }

    #[test]
    fn reconstruction_is_within_half_an_lsb(v in 0.0f64..5.0) {
        prop_assert!((reconstruct(quantize(v).code) - v).abs() <= LSB / 2.0);
    }

    #[test]
    fn saturation_flags_out_of_range_inputs(v in -10.0f64..10.0) {
        let q = quantize(v);
        prop_assert_eq!(q.saturated, !(0.0..=5.0).contains(&v));
        if v <= 0.0 { prop_assert_eq!(q.code, 0); }
        if v >= 5.0 { prop_assert_eq!(q.code, 255); }
    }

    #[test]
    fn every_code_round_trips(code in any::<u8>()) {
        prop_assert_eq!(quantize(reconstruct(code)).code, code);
        let d = update_display(adc::AdcCode { code, sample_tick: 0 }, 7);
        prop_assert_eq!(d.value(), code);
        prop_assert_eq!(d.last_update_tick, Some(7));
        let rendered: String = (0..8).rev().map(|i| if code >> i & 1 == 1 { '1' } else { '0' }).collect();
        prop_assert_eq!(d.render(), rendered);
    }

    #[test]
    fn batch_quantization_is_order_preserving(vs in prop::collection::vec(-1.0f64..6.0, 0..500)) {
        let seq = quantize_batch(&vs, Execution::Sequential);
        let par = quantize_batch(&vs, Execution::Parallel);
        prop_assert_eq!(&seq, &par);
        prop_assert_eq!(seq, vs.iter().map(|&v| quantize(v)).collect::<Vec<_>>());
    }

    #[test]
    fn transducer_is_monotone_and_bounded(m in transducer(), g1 in 0.0f64..100.0, g2 in 0.0f64..100.0) {
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let (v_lo, v_hi) = (transducer_voltage(lo, &m), transducer_voltage(hi, &m));
        prop_assert!(v_hi <= v_lo);
        prop_assert!((m.v_floor()..=5.0).contains(&v_lo));
        prop_assert!((m.v_floor()..=5.0).contains(&v_hi));
    }

    #[test]
    fn gap_tracks_wear_and_holder(
        rate in 0.0f64..1.0,
        steps in prop::collection::vec((0.001f64..0.1, 0.0f64..0.5), 1..100),
    ) {
        let wear = WearModel::constant(rate).unwrap();
        let m = TransducerModel::new(4.0, 1.0, 0.0).unwrap();
        let mut s = PlantState::initial(&m);
        for (dt, motion) in steps {
            let before = s;
            s = advance_wear(&s, &wear, dt);
            prop_assert!(s.wear_depth >= before.wear_depth);
            prop_assert_eq!(s.gap, (s.wear_depth - s.holder_pos).max(0.0));
            s = apply_holder_motion(&s, motion).unwrap();
            prop_assert!(s.holder_pos >= before.holder_pos);
            prop_assert_eq!(s.gap, (s.wear_depth - s.holder_pos).max(0.0));
        }
        prop_assert!(apply_holder_motion(&s, -1e-9).is_err());
    }

    #[test]
    fn piecewise_wear_integrates_exactly(
        r0 in 0.0f64..1.0, r1 in 0.0f64..1.0, t1 in 0.5f64..50.0,
        t in 0.0f64..100.0, dt in 0.001f64..10.0,
    ) {
        let w = WearModel::piecewise(vec![(0.0, r0), (t1, r1)]).unwrap();
        // integral of the step function over [t, t + dt]
        let before = (t1 - t).clamp(0.0, dt);
        let expected = r0 * before + r1 * (dt - before);
        prop_assert!((w.wear_over(t, dt) - expected).abs() <= 1e-12 * (1.0 + expected));
    }

    #[test]
    fn chain_step_follows_the_kinematic_ratio(
        k in 1u32..5, z in 5u32..200, n in 1u32..100, pitch in 1.0f64..10_000.0, rate in 1e-4f64..10.0,
    ) {
        prop_assume!(k < z);
        let chain = ActuatorChain::new(k, z, n, pitch).unwrap();
        let delta = displacement_per_pulse(&chain);
        // one full wheel turn, then 1/N of a screw turn
        let wheel_turn = f64::from(k) / f64::from(z);
        let oracle = pitch * wheel_turn / f64::from(n);
        prop_assert!((delta - oracle).abs() <= 1e-12 * oracle);
        let f = required_frequency(rate, &chain).unwrap();
        prop_assert!((f * delta - rate).abs() <= 1e-12 * rate);
    }

    #[test]
    fn detector_never_chatters_inside_the_band(
        v_on in 1.0f64..3.0, band in 0.01f64..1.0, gain in 0.5f64..2.0,
        signal in prop::collection::vec(0.0f64..5.0, 1..300),
    ) {
        let cfg = DetectorConfig::new(gain, v_on, v_on + band).unwrap();
        let mut active = false;
        for v in signal {
            let next = detector_step(v, &cfg, active);
            let a = gain * v;
            if a <= v_on { prop_assert!(next); }
            else if a >= v_on + band { prop_assert!(!next); }
            else { prop_assert_eq!(next, active); }
            active = next;
        }
    }

    #[test]
    fn pulse_generator_fires_on_its_period(freq in 0.01f64..50.0, ticks in 1usize..5000) {
        let mut g = PulseGenerator::new(freq, 0.01).unwrap();
        let p = g.period_ticks();
        prop_assert_eq!(p, (100.0 / freq).round() as u64);
        for i in 0..ticks {
            prop_assert_eq!(g.tick(), (i as u64).is_multiple_of(p));
        }
    }

    #[test]
    fn compensator_modes_respect_the_brake(
        detector in prop::collection::vec(any::<bool>(), 1..400),
        engage in 0u64..6, release in 0u64..6, period in 2u64..10,
    ) {
        let gen = PulseGenerator::new(100.0 / period as f64, 0.01).unwrap();
        let mut fsm = CompensatorFsm::new(gen, BrakeState::new(engage, release));
        let mut prev = fsm.mode();
        let mut pulses = 0;
        for active in detector {
            let out = fsm.step(active);
            let mode = fsm.mode();
            pulses += u64::from(out.pulse);
            prop_assert_eq!(fsm.pulses_emitted(), pulses);
            if out.pulse { prop_assert_eq!(mode, Mode::Compensating); }
            match mode {
                Mode::LockedIdle | Mode::Releasing => prop_assert!(fsm.brake().engaged),
                Mode::Compensating | Mode::Engaging => prop_assert!(!fsm.brake().engaged),
            }
            // the cycle order is fixed
            let allowed = match prev {
                Mode::LockedIdle => [Mode::LockedIdle, Mode::Releasing],
                Mode::Releasing => [Mode::Compensating, Mode::Engaging],
                Mode::Compensating => [Mode::Compensating, Mode::Engaging],
                Mode::Engaging => [Mode::Engaging, Mode::LockedIdle],
            };
            prop_assert!(allowed.contains(&mode) || mode == prev, "{prev:?} -> {mode:?}");
            prev = mode;
        }
    }
}

#[test]
fn the_scanner_flags_a_tampered_trace() {
    let s = Scenario::load(include_str!("../../../scenarios/compensation.scn")).unwrap();
    let delta = displacement_per_pulse(&s.chain);
    let (mut records, _) = sim::run(&s);
    records.truncate(20_000);
    assert!(check::scan(&records, delta).is_empty());

    // nudge the holder while the brake is on
    let i = records.iter().position(|r| r.brake_engaged && r.tick > 10).unwrap();
    let mut moved = records.clone();
    for r in &mut moved[i..] {
        r.holder_pos += 0.001;
        r.gap = (r.wear_depth - r.holder_pos).max(0.0);
    }
    let found: Vec<Invariant> = check::scan(&moved, delta).into_iter().map(|v| v.invariant).collect();
    assert!(found.contains(&Invariant::BrakeInterlock), "{found:?}");

    let mut leds = records.clone();
    leds[5000].leds ^= 1;
    let found: Vec<Invariant> = check::scan(&leds, delta).into_iter().map(|v| v.invariant).collect();
    assert_eq!(found, [Invariant::DisplayMirror]);

    let mut gap = records;
    gap[100].gap += 1.0;
    assert!(check::scan(&gap, delta).iter().any(|v| v.invariant == Invariant::GapConsistency && v.tick == 100));
}
