//! Stacked line charts of trajectory channels as a standalone SVG document.
//!
//! Output depends only on the input values (fixed layout, fixed number
//! formatting), so identical runs give identical bytes.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::Record;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Channel {
    #[serde(rename = "x")]
    X,
    #[serde(rename = "pi_F")]
    PiF,
    #[serde(rename = "pi_E")]
    PiE,
    #[serde(rename = "N")]
    N,
    #[serde(rename = "Pi")]
    Pi,
}

impl Channel {
    pub const ALL: [Channel; 5] = [
        Channel::X,
        Channel::PiF,
        Channel::PiE,
        Channel::N,
        Channel::Pi,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Channel::X => "x",
            Channel::PiF => "pi_F",
            Channel::PiE => "pi_E",
            Channel::N => "N",
            Channel::Pi => "Pi",
        }
    }

    pub fn parse(name: &str) -> Result<Channel> {
        Channel::ALL
            .into_iter()
            .find(|c| c.label() == name)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown channel {name:?}")))
    }

    fn value(self, r: &Record<f64>) -> f64 {
        match self {
            Channel::X => r.x,
            Channel::PiF => r.pi_f,
            Channel::PiE => r.pi_e,
            Channel::N => r.n,
            Channel::Pi => r.pi_total,
        }
    }

    fn colour(self) -> &'static str {
        match self {
            Channel::X => "#1f77b4",
            Channel::PiF => "#d62728",
            Channel::PiE => "#2ca02c",
            Channel::N => "#9467bd",
            Channel::Pi => "#ff7f0e",
        }
    }
}

const WIDTH: f64 = 760.0;
const PANEL_HEIGHT: f64 = 170.0;
const LEFT: f64 = 84.0;
const RIGHT: f64 = 24.0;
const TOP: f64 = 28.0;
const BOTTOM: f64 = 34.0;
const TICKS: usize = 5;

fn px(v: f64) -> String {
    let s = format!("{v:.2}");
    if s == "-0.00" {
        "0.00".to_string()
    } else {
        s
    }
}

/// Finite range of the values, widened when degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            (lo.min(v), hi.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let span = hi - lo;
    if span <= 1e-12 * lo.abs().max(hi.abs()).max(1e-300) {
        let pad = if lo == 0.0 { 1.0 } else { 0.1 * lo.abs() };
        (lo - pad, hi + pad)
    } else {
        (lo, hi)
    }
}

/// Step from {1, 2, 5} x 10^k giving about `TICKS` intervals over the span.
fn tick_step(lo: f64, hi: f64) -> f64 {
    let raw = (hi - lo) / (TICKS - 1) as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let unit = raw / mag;
    let nice = if unit <= 1.0 {
        1.0
    } else if unit <= 2.0 {
        2.0
    } else if unit <= 5.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn ticks(lo: f64, hi: f64) -> (Vec<f64>, f64) {
    let step = tick_step(lo, hi);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), step)
}

fn tick_label(v: f64, step: f64) -> String {
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    if v != 0.0 && (v.abs() >= 1e6 || step < 1e-4) {
        return format!("{v:.2e}");
    }
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    format!("{v:.decimals$}")
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// One panel per channel, stacked top to bottom, sharing the time axis.
pub fn emit_svg(records: &[Record<f64>], channels: &[Channel], title: &str) -> Result<String> {
    if records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if channels.is_empty() {
        return Err(Error::InvalidConfig(
            "at least one channel is required".into(),
        ));
    }
    let panel_total = TOP + PANEL_HEIGHT + BOTTOM;
    let height = 30.0 + panel_total * channels.len() as f64;
    let plot_w = WIDTH - LEFT - RIGHT;
    let (t_lo, t_hi) = range(records.iter().map(|r| r.t));
    let (t_ticks, t_step) = ticks(t_lo, t_hi);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="11">"#,
        w = px(WIDTH),
        h = px(height)
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="20" font-size="14" text-anchor="middle">{}</text>"#,
        px(WIDTH / 2.0),
        escape(title)
    );

    for (k, &ch) in channels.iter().enumerate() {
        let top = 30.0 + panel_total * k as f64 + TOP;
        let bottom = top + PANEL_HEIGHT;
        let (v_lo, v_hi) = range(records.iter().map(|r| ch.value(r)));
        let sx = |t: f64| LEFT + (t - t_lo) / (t_hi - t_lo) * plot_w;
        let sy = |v: f64| bottom - (v - v_lo) / (v_hi - v_lo) * PANEL_HEIGHT;

        let _ = writeln!(svg, r#"<g class="panel" data-channel="{}">"#, ch.label());
        let _ = writeln!(
            svg,
            r##"<rect x="{}" y="{}" width="{}" height="{}" fill="none" stroke="#444"/>"##,
            px(LEFT),
            px(top),
            px(plot_w),
            px(PANEL_HEIGHT)
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12">{}</text>"#,
            px(LEFT),
            px(top - 8.0),
            ch.label()
        );

        let (v_ticks, v_step) = ticks(v_lo, v_hi);
        for v in v_ticks {
            let y = px(sy(v));
            let _ = writeln!(
                svg,
                r##"<line x1="{a}" y1="{y}" x2="{b}" y2="{y}" stroke="#bbb" stroke-width="0.5"/><text x="{c}" y="{y}" dy="4" text-anchor="end">{label}</text>"##,
                a = px(LEFT - 4.0),
                b = px(LEFT + plot_w),
                c = px(LEFT - 6.0),
                label = tick_label(v, v_step)
            );
        }
        for &t in &t_ticks {
            let x = px(sx(t));
            let _ = writeln!(
                svg,
                r##"<line x1="{x}" y1="{a}" x2="{x}" y2="{b}" stroke="#444"/><text x="{x}" y="{c}" text-anchor="middle">{label}</text>"##,
                a = px(bottom),
                b = px(bottom + 4.0),
                c = px(bottom + 16.0),
                label = tick_label(t, t_step)
            );
        }
        if k + 1 == channels.len() {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="middle">t</text>"#,
                px(LEFT + plot_w / 2.0),
                px(bottom + 30.0)
            );
        }

        let points: Vec<(f64, f64)> = records
            .iter()
            .map(|r| (r.t, ch.value(r)))
            .filter(|(t, v)| t.is_finite() && v.is_finite())
            .collect();
        if points.len() == 1 {
            let (t, v) = points[0];
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3" fill="{}"/>"#,
                px(sx(t)),
                px(sy(v)),
                ch.colour()
            );
        } else if points.len() > 1 {
            let mut path = String::new();
            for (i, (t, v)) in points.iter().enumerate() {
                if i > 0 {
                    path.push(' ');
                }
                let _ = write!(path, "{},{}", px(sx(*t)), px(sy(*v)));
            }
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{}" stroke-width="1.2" points="{}"/>"#,
                ch.colour(),
                path
            );
        }
        let _ = writeln!(svg, "</g>");
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
