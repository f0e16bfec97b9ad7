//! Minimal self-contained SVG charts: line plots with optional error bars and
//! paneled bar charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 420.0;
const MARGIN: f64 = 60.0;
const COLOURS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub struct Series {
    pub name: String,
    /// (x, y, half-width of the error bar)
    pub points: Vec<(f64, f64, f64)>,
    /// Draw markers only, without connecting lines.
    pub scatter: bool,
}

impl Series {
    pub fn line(name: impl Into<String>, points: Vec<(f64, f64, f64)>) -> Self {
        Series { name: name.into(), points, scatter: false }
    }

    pub fn scatter(name: impl Into<String>, points: Vec<(f64, f64, f64)>) -> Self {
        Series { name: name.into(), points, scatter: true }
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn range(vals: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vals.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn num(v: f64) -> String {
    if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

/// Line chart; `diagonal` adds the y = x reference (for QQ plots).
pub fn line_chart(title: &str, xlabel: &str, ylabel: &str, series: &[Series], diagonal: bool) -> String {
    let (x0, x1) = range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = range(series.iter().flat_map(|s| s.points.iter().flat_map(|p| [p.1 - p.2, p.1 + p.2])));
    let (y0, y1) = if diagonal { (y0.min(x0), y1.max(x1)) } else { (y0, y1) };
    let (x0, x1) = if diagonal { (y0, y1) } else { (x0, x1) };
    let sx = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let sy = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="12">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, esc(title));
    axes(&mut s, (x0, x1), (y0, y1), &sx, &sy, xlabel, ylabel);
    if diagonal {
        let _ = writeln!(
            s,
            r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#999" stroke-dasharray="4 3"/>"##,
            sx(x0),
            sy(x0),
            sx(x1),
            sy(x1)
        );
    }
    for (k, ser) in series.iter().enumerate() {
        let c = COLOURS[k % COLOURS.len()];
        let pts: Vec<&(f64, f64, f64)> = ser.points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).collect();
        if !ser.scatter && pts.len() > 1 {
            let path: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", sx(p.0), sy(p.1))).collect();
            let _ = writeln!(s, r#"<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        }
        for p in &pts {
            if p.2 > 0.0 {
                let _ = writeln!(
                    s,
                    r#"<line x1="{x:.1}" y1="{:.1}" x2="{x:.1}" y2="{:.1}" stroke="{c}"/>"#,
                    sy(p.1 - p.2),
                    sy(p.1 + p.2),
                    x = sx(p.0)
                );
            }
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{c}"/>"#, sx(p.0), sy(p.1));
        }
        let ly = MARGIN + 16.0 * k as f64;
        let _ = writeln!(s, r#"<rect x="{}" y="{}" width="10" height="10" fill="{c}"/>"#, W - MARGIN - 150.0, ly - 9.0);
        let _ = writeln!(s, r#"<text x="{}" y="{ly}">{}</text>"#, W - MARGIN - 135.0, esc(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn axes(
    s: &mut String,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    sx: &dyn Fn(f64) -> f64,
    sy: &dyn Fn(f64) -> f64,
    xlabel: &str,
    ylabel: &str,
) {
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{m}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = H - MARGIN,
        r = W - MARGIN
    );
    for i in 0..=4 {
        let xv = x0 + (x1 - x0) * i as f64 / 4.0;
        let yv = y0 + (y1 - y0) * i as f64 / 4.0;
        let _ = writeln!(s, r#"<text x="{:.1}" y="{}" text-anchor="middle">{}</text>"#, sx(xv), H - MARGIN + 16.0, num(xv));
        let _ = writeln!(s, r#"<text x="{}" y="{:.1}" text-anchor="end">{}</text>"#, MARGIN - 4.0, sy(yv) + 4.0, num(yv));
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, W / 2.0, H - 14.0, esc(xlabel));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        esc(ylabel)
    );
}

/// One panel of a bar chart: bars (label, value, error half-width).
pub struct Panel {
    pub title: String,
    pub bars: Vec<(String, f64, f64)>,
}

/// Panels laid out on a grid with `cols` columns; bars share one y scale.
pub fn panel_bars(title: &str, panels: &[Panel], cols: usize) -> String {
    let cols = cols.max(1);
    let rows = panels.len().div_ceil(cols).max(1);
    let (pw, ph) = (240.0, 180.0);
    let (tw, th) = (pw * cols as f64, ph * rows as f64 + 40.0);
    let (_, ymax) = range(panels.iter().flat_map(|p| p.bars.iter().map(|b| b.1 + b.2)).chain([0.0]));
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{tw}" height="{th}" font-family="sans-serif" font-size="10">"#);
    let _ = writeln!(s, r#"<rect width="{tw}" height="{th}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, tw / 2.0, esc(title));
    for (i, p) in panels.iter().enumerate() {
        let ox = pw * (i % cols) as f64;
        let oy = 40.0 + ph * (i / cols) as f64;
        let base = oy + ph - 30.0;
        let top = oy + 20.0;
        let sy = |v: f64| base - v / ymax * (base - top);
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, ox + pw / 2.0, oy + 12.0, esc(&p.title));
        let _ = writeln!(s, r#"<line x1="{}" y1="{base}" x2="{}" y2="{base}" stroke="black"/>"#, ox + 20.0, ox + pw - 10.0);
        let n = p.bars.len().max(1) as f64;
        let bw = (pw - 40.0) / n;
        for (k, (label, v, e)) in p.bars.iter().enumerate() {
            let x = ox + 25.0 + bw * k as f64;
            let c = COLOURS[k % COLOURS.len()];
            let _ = writeln!(
                s,
                r#"<rect x="{x:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="{c}"/>"#,
                sy(v.max(0.0)),
                bw * 0.7,
                (base - sy(v.max(0.0))).max(0.0)
            );
            let cx = x + bw * 0.35;
            if *e > 0.0 {
                let _ = writeln!(s, r#"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="black"/>"#, sy(v - e), sy(v + e));
            }
            let _ = writeln!(s, r#"<text x="{cx:.1}" y="{}" text-anchor="middle">{}</text>"#, base + 12.0, esc(label));
            let _ = writeln!(s, r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, sy(v.max(0.0)) - 3.0, num(*v));
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let l = line_chart("t<1>", "l", "p", &[Series::line("a", vec![(0.0, 1.0, 0.1), (1.0, 0.5, 0.0)])], false);
        assert!(l.starts_with("<svg") && l.trim_end().ends_with("</svg>"));
        assert!(l.contains("t&lt;1&gt;") && l.contains("polyline"));
        let p = panel_bars("x", &[Panel { title: "g".into(), bars: vec![("emp".into(), 0.4, 0.01)] }], 3);
        assert_eq!(p.matches("<rect").count(), 2);
    }
}
