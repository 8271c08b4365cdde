//! CSV and SVG emission. CSV is the canonical record; SVG is rendered from
//! the same series and never read back.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

/// Writes `header` and `rows` as CSV. Floats use the shortest round-trip
/// representation, so identical values give identical bytes.
pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()
}

pub fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_text(path: &Path, text: &str) -> io::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)
}

/// One named polyline for [`write_svg`].
pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [[f64; 2]],
    pub closed: bool,
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Self-contained SVG line/contour plot. `equal_axes` keeps the aspect ratio
/// of the data, for contours.
pub fn write_svg(path: &Path, title: &str, series: &[Series], equal_axes: bool) -> io::Result<()> {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in pts {
        x0 = x0.min(p[0]);
        x1 = x1.max(p[0]);
        y0 = y0.min(p[1]);
        y1 = y1.max(p[1]);
    }
    if !(x0.is_finite() && y0.is_finite()) {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 <= 0.0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let (w, h, pad) = (640.0, 480.0, 48.0);
    let (mut sx, mut sy) = ((w - 2.0 * pad) / (x1 - x0), (h - 2.0 * pad) / (y1 - y0));
    if equal_axes {
        sx = sx.min(sy);
        sy = sx;
    }
    let map = |p: &[f64; 2]| (pad + (p[0] - x0) * sx, h - pad - (p[1] - y0) * sy);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{pad}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let (ax0, ay0) = map(&[x0, y0]);
    let (ax1, ay1) = map(&[x1, y1]);
    let _ = writeln!(
        s,
        r##"<rect x="{ax0:.2}" y="{ay1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="#888"/>"##,
        ax1 - ax0,
        ay0 - ay1
    );
    for (label, x, y, anchor) in [
        (format!("{x0:.3}"), ax0, ay0 + 16.0, "start"),
        (format!("{x1:.3}"), ax1, ay0 + 16.0, "end"),
        (format!("{y0:.3}"), ax0 - 4.0, ay0, "end"),
        (format!("{y1:.3}"), ax0 - 4.0, ay1 + 10.0, "end"),
    ] {
        let _ = writeln!(s, r#"<text x="{x:.2}" y="{y:.2}" font-family="sans-serif" font-size="10" text-anchor="{anchor}">{label}</text>"#);
    }
    for (k, ser) in series.iter().enumerate() {
        if ser.points.is_empty() {
            continue;
        }
        let color = COLORS[k % COLORS.len()];
        let mut d = String::new();
        for (i, p) in ser.points.iter().enumerate() {
            let (x, y) = map(p);
            let _ = write!(d, "{}{x:.2},{y:.2} ", if i == 0 { "M" } else { "L" });
        }
        if ser.closed {
            d.push('Z');
        }
        let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.2"/>"#, d.trim_end());
        if !ser.label.is_empty() {
            let _ = writeln!(
                s,
                r#"<text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11" fill="{color}">{}</text>"#,
                w - pad - 120.0,
                40.0 + 14.0 * k as f64,
                escape(ser.label)
            );
        }
    }
    s.push_str("</svg>\n");
    write_text(path, &s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
