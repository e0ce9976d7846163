//! CSV trace persistence. One row per tick, LF line endings, floats with
//! 9 significant digits.

use std::io::{self, Write};

use crate::display::DisplayState;
use crate::sim::TraceRecord;

pub const COLUMNS: [&str; 21] = [
    "tick",
    "t",
    "wear_depth",
    "holder_pos",
    "gap",
    "transducer_v",
    "held_v",
    "adc_code",
    "saturation",
    "sel",
    "busy",
    "ack",
    "p_end",
    "data",
    "leds",
    "mode",
    "pulse",
    "brake_engaged",
    "pulses_emitted",
    "dropped_samples",
    "violations",
];

/// Formats like C's `%.{digits}g`: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_owned();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let digits = digits.max(1);
    // exponent after rounding to `digits` significant digits
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn flag(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

pub fn write_header<W: Write>(w: &mut W) -> io::Result<()> {
    writeln!(w, "{}", COLUMNS.join(","))
}

pub fn write_record<W: Write>(w: &mut W, r: &TraceRecord) -> io::Result<()> {
    let g = |x: f64| format_sig(x, 9);
    let leds = DisplayState {
        leds: std::array::from_fn(|i| r.leds >> i & 1 == 1),
        last_update_tick: None,
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.tick,
        g(r.t),
        g(r.wear_depth),
        g(r.holder_pos),
        g(r.gap),
        g(r.transducer_v),
        g(r.held_v),
        r.adc_code.map(|c| c.to_string()).unwrap_or_default(),
        flag(r.saturation),
        flag(r.sel),
        flag(r.busy),
        flag(r.ack),
        flag(r.p_end),
        r.data,
        leds.render(),
        r.mode.as_str(),
        flag(r.pulse),
        flag(r.brake_engaged),
        r.pulses_emitted,
        r.dropped_samples,
        r.violations,
    )
}

pub fn write_csv<W: Write>(w: &mut W, trace: &[TraceRecord]) -> io::Result<()> {
    write_header(w)?;
    for r in trace {
        write_record(w, r)?;
    }
    Ok(())
}

pub fn to_csv_bytes(trace: &[TraceRecord]) -> Vec<u8> {
    let mut buf = Vec::with_capacity(trace.len() * 96);
    write_csv(&mut buf, trace).expect("writing to memory");
    buf
}
