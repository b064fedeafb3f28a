//! CSV and SVG rendering.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Result;

/// Formats like C's `%g`: six significant digits, trailing zeros removed.
pub fn fmt_g(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let mantissa = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{mantissa}e{sign}{:02}", exp.abs());
    }
    trim_zeros(&format!("{x:.*}", (5 - exp) as usize)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Empty field for missing values.
pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_g).unwrap_or_default()
}

/// RFC-4180 CSV with an optional leading `#` comment line.
pub fn csv_string(comment: Option<&str>, header: &[&str], rows: &[Vec<String>]) -> Result<String> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let body = String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("csv output is utf-8");
    Ok(match comment {
        Some(c) => format!("# {c}\r\n{body}"),
        None => body,
    })
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

/// One marker of a panel: `x`, `log10 ψ̂`, and the log10 CI ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotPoint {
    pub x: f64,
    pub y: f64,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub points: Vec<PlotPoint>,
}

const PANEL_W: f64 = 320.0;
const PANEL_H: f64 = 260.0;
const MARGIN_L: f64 = 58.0;
const MARGIN_R: f64 = 14.0;
const MARGIN_T: f64 = 30.0;
const MARGIN_B: f64 = 40.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn nice_range(lo: f64, hi: f64) -> (f64, f64) {
    if !(lo.is_finite() && hi.is_finite()) {
        return (-1.0, 0.0);
    }
    if hi - lo < 1e-9 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.08 * (hi - lo);
    (lo - pad, hi + pad)
}

/// Scatter panels side by side; the y axis carries `log10 ψ̂`.
pub fn render_svg(panels: &[Panel], x_label: &str, y_label: &str) -> String {
    let width = PANEL_W * panels.len().max(1) as f64;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{PANEL_H}" viewBox="0 0 {width} {PANEL_H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{PANEL_H}" fill="white"/>"#);
    for (idx, panel) in panels.iter().enumerate() {
        render_panel(&mut s, panel, idx as f64 * PANEL_W, x_label, y_label);
    }
    s.push_str("</svg>\n");
    s
}

fn render_panel(s: &mut String, panel: &Panel, x0: f64, x_label: &str, y_label: &str) {
    let pts = &panel.points;
    let (xmin, xmax) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), p| (a.min(p.x), b.max(p.x)));
    let (xmin, xmax) = if xmin.is_finite() { (xmin - 0.5, xmax + 0.5) } else { (0.0, 1.0) };
    let ys = pts.iter().flat_map(|p| [Some(p.y), p.lo, p.hi]).flatten().filter(|y| y.is_finite());
    let (ylo, yhi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), y| (a.min(y), b.max(y)));
    let (ymin, ymax) = nice_range(ylo, yhi);

    let left = x0 + MARGIN_L;
    let right = x0 + PANEL_W - MARGIN_R;
    let top = MARGIN_T;
    let bottom = PANEL_H - MARGIN_B;
    let sx = |x: f64| left + (x - xmin) / (xmax - xmin) * (right - left);
    let sy = |y: f64| bottom - (y.clamp(ymin, ymax) - ymin) / (ymax - ymin) * (bottom - top);

    let _ = writeln!(s, r#"<g class="panel">"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        (left + right) / 2.0,
        escape(&panel.title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#,
        right - left,
        bottom - top
    );
    for i in 0..=4 {
        let y = ymin + (ymax - ymin) * i as f64 / 4.0;
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 4.0,
            sy(y) + 4.0,
            escape(&fmt_tick(y))
        );
    }
    let mut xs: Vec<f64> = pts.iter().map(|p| p.x).collect();
    xs.dedup();
    for x in xs {
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{x}</text>"#, sx(x), bottom + 14.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        PANEL_H - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text transform="translate({:.1},{:.1}) rotate(-90)" text-anchor="middle">{}</text>"#,
        x0 + 14.0,
        (top + bottom) / 2.0,
        escape(y_label)
    );
    for p in pts {
        if !p.y.is_finite() {
            continue;
        }
        let x = sx(p.x);
        // a missing lower end means the interval reaches zero
        let lo = sy(p.lo.unwrap_or(f64::NEG_INFINITY));
        let hi = sy(p.hi.unwrap_or(p.y));
        let _ = writeln!(
            s,
            r#"<g class="whisker"><line x1="{x:.2}" y1="{lo:.2}" x2="{x:.2}" y2="{hi:.2}" stroke="black"/><circle class="ci" cx="{x:.2}" cy="{lo:.2}" r="2" fill="black"/><circle class="ci" cx="{x:.2}" cy="{hi:.2}" r="2" fill="black"/></g>"#
        );
        let _ = writeln!(
            s,
            r#"<circle class="point" cx="{x:.2}" cy="{:.2}" r="4" fill="none" stroke="black"/>"#,
            sy(p.y)
        );
    }
    s.push_str("</g>\n");
}

pub(crate) fn fmt_tick(y: f64) -> String {
    let t = format!("{y:.3}");
    let t = trim_zeros(&t);
    if t == "-0" { "0".into() } else { t.into() }
}
