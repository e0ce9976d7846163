//! Human-readable run reports and per-column SVG plots.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::sim::{RunSummary, TraceRecord};
use crate::trace::COLUMNS;

pub fn summary_text(name: &str, s: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "scenario: {name}");
    let _ = writeln!(out, "  conversions_started        {}", s.conversions_started);
    let _ = writeln!(out, "  delivered_samples          {}", s.delivered_samples);
    let _ = writeln!(out, "  dropped_samples            {}", s.dropped_samples);
    let _ = writeln!(out, "  in_flight                  {}", s.in_flight);
    let _ = writeln!(out, "  violations                 {}", s.violations);
    let _ = writeln!(out, "  mean_abs_acquisition_error {:.9} V", s.mean_abs_acquisition_error);
    let _ = writeln!(out, "  max_abs_acquisition_error  {:.9} V", s.max_abs_acquisition_error);
    let _ = writeln!(out, "  max_gap                    {:.9} um", s.max_gap);
    let _ = writeln!(out, "  final_gap                  {:.9} um", s.final_gap);
    let _ = writeln!(out, "  pulses_emitted             {}", s.pulses_emitted);
    out
}

/// Numeric view of one trace column. `leds` reads as its integer value,
/// `mode` as its ordinal; ticks without a completed code read as `None`.
pub fn column(trace: &[TraceRecord], name: &str) -> Result<Vec<Option<f64>>> {
    if !COLUMNS.contains(&name) {
        return Err(Error::UnknownColumn(name.to_owned()));
    }
    let b = |x: bool| Some(f64::from(u8::from(x)));
    Ok(trace
        .iter()
        .map(|r| match name {
            "tick" => Some(r.tick as f64),
            "t" => Some(r.t),
            "wear_depth" => Some(r.wear_depth),
            "holder_pos" => Some(r.holder_pos),
            "gap" => Some(r.gap),
            "transducer_v" => Some(r.transducer_v),
            "held_v" => Some(r.held_v),
            "adc_code" => r.adc_code.map(f64::from),
            "saturation" => b(r.saturation),
            "sel" => b(r.sel),
            "busy" => b(r.busy),
            "ack" => b(r.ack),
            "p_end" => b(r.p_end),
            "data" => Some(f64::from(r.data)),
            "leds" => Some(f64::from(r.leds)),
            "mode" => Some(f64::from(r.mode.ordinal())),
            "pulse" => b(r.pulse),
            "brake_engaged" => b(r.brake_engaged),
            "pulses_emitted" => Some(r.pulses_emitted as f64),
            "dropped_samples" => Some(r.dropped_samples as f64),
            "violations" => Some(r.violations as f64),
            _ => unreachable!("checked against COLUMNS"),
        })
        .collect())
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 300.0;
const MARGIN: f64 = 40.0;
const MAX_POINTS: usize = 4000;

/// Line plot of `name` against time.
pub fn plot_svg(trace: &[TraceRecord], name: &str) -> Result<String> {
    let ys = column(trace, name)?;
    let mut pts: Vec<(f64, f64)> = trace.iter().zip(&ys).filter_map(|(r, y)| y.map(|y| (r.t, y))).collect();
    if pts.len() > MAX_POINTS {
        // keep each bucket's extremes so spikes survive
        let bucket = pts.len().div_ceil(MAX_POINTS / 2);
        pts = pts
            .chunks(bucket)
            .flat_map(|c| {
                let lo = c.iter().copied().fold(c[0], |a, p| if p.1 < a.1 { p } else { a });
                let hi = c.iter().copied().fold(c[0], |a, p| if p.1 > a.1 { p } else { a });
                if lo.0 <= hi.0 {
                    [lo, hi]
                } else {
                    [hi, lo]
                }
            })
            .collect();
    }
    let (x0, x1) = bounds(pts.iter().map(|p| p.0));
    let (y0, y1) = bounds(pts.iter().map(|p| p.1));
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (WIDTH - 2.0 * MARGIN);
    let sy = |y: f64| HEIGHT - MARGIN - (y - y0) / (y1 - y0) * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r##"<rect x="{MARGIN}" y="{MARGIN}" width="{}" height="{}" fill="none" stroke="#999"/>"##,
        WIDTH - 2.0 * MARGIN,
        HEIGHT - 2.0 * MARGIN
    );
    let _ = writeln!(svg, r#"<text x="{MARGIN}" y="24" font-family="monospace" font-size="14">{name}</text>"#);
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}" font-family="monospace" font-size="10">{y1:.4}</text>"#,
        MARGIN + 4.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="4" y="{}" font-family="monospace" font-size="10">{y0:.4}</text>"#,
        HEIGHT - MARGIN
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="monospace" font-size="10" text-anchor="end">t = {x1:.3} s</text>"#,
        WIDTH - MARGIN,
        HEIGHT - 12.0
    );
    let points: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
    let _ = writeln!(
        svg,
        r##"<polyline fill="none" stroke="#1f77b4" stroke-width="1" points="{}"/>"##,
        points.join(" ")
    );
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn bounds(it: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = it.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi - lo < 1e-12 {
        (lo - 0.5, hi + 0.5)
    } else {
        (lo, hi)
    }
}

/// Writes `<column>.svg` into `dir` for each requested column. All names are
/// checked before anything is written.
pub fn write_plots(trace: &[TraceRecord], columns: &[String], dir: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let svgs = columns
        .iter()
        .map(|c| plot_svg(trace, c).map(|svg| (c, svg)))
        .collect::<Result<Vec<_>>>()?;
    svgs.into_iter()
        .map(|(c, svg)| {
            let path = dir.join(format!("{c}.svg"));
            std::fs::write(&path, svg)?;
            Ok(path)
        })
        .collect()
}

#[derive(Debug, thiserror::Error)]
pub enum PlotError {
    #[error(transparent)]
    Column(#[from] Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}
