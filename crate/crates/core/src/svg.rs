//! Minimal deterministic SVG charts. Coordinates are printed with two
//! decimals so identical inputs give byte-identical documents.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::artifact::Provenance;

const W: f64 = 720.0;
const H: f64 = 420.0;
const LEFT: f64 = 70.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn header(out: &mut String, prov: &Provenance, title: &str, height: f64) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" viewBox="0 0 {W} {height}" font-family="sans-serif" font-size="12">"#
    );
    out.push_str(&prov.xml_comment());
    let _ = writeln!(out, r#"<rect width="{W}" height="{height}" fill="white"/>"#);
    let _ = writeln!(out, r#"<text x="{:.2}" y="22" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
}

/// Finite [lo, hi] padded so that a flat range still has height.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in values.filter(|v| v.is_finite()) {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
    height: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x0) / (self.x1 - self.x0) * (W - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        self.height - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (self.height - TOP - BOTTOM)
    }

    fn axes(&self, out: &mut String, x_label: &str, y_label: &str, x_ticks: bool) {
        let (bx, by) = (LEFT, self.height - BOTTOM);
        let _ = writeln!(
            out,
            r##"<path d="M{bx:.2},{TOP:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" stroke="#333" fill="none"/>"##,
            W - RIGHT
        );
        for i in 0..=4 {
            let v = self.y0 + (self.y1 - self.y0) * i as f64 / 4.0;
            let y = self.py(v);
            let _ = writeln!(
                out,
                r##"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="#333"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
                bx - 4.0,
                bx - 6.0,
                y + 4.0,
                tick(v)
            );
            if x_ticks {
                let xv = self.x0 + (self.x1 - self.x0) * i as f64 / 4.0;
                let x = self.px(xv);
                let _ = writeln!(
                    out,
                    r##"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="#333"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
                    by + 4.0,
                    by + 17.0,
                    tick(xv)
                );
            }
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            LEFT + (W - LEFT - RIGHT) / 2.0,
            self.height - 12.0,
            escape(x_label)
        );
        let _ = writeln!(
            out,
            r#"<text x="16" y="{:.2}" text-anchor="middle" transform="rotate(-90 16 {:.2})">{}</text>"#,
            self.height / 2.0,
            self.height / 2.0,
            escape(y_label)
        );
    }
}

fn tick(v: f64) -> String {
    let a = v.abs();
    if a != 0.0 && !(1e-2..1e5).contains(&a) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}").trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn legend(out: &mut String, names: &[String]) {
    for (i, name) in names.iter().enumerate() {
        let y = TOP + 10.0 + 18.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="12" height="12" fill="{}"/><text x="{:.2}" y="{:.2}">{}</text>"#,
            W - RIGHT + 14.0,
            y - 10.0,
            PALETTE[i % PALETTE.len()],
            W - RIGHT + 32.0,
            y,
            escape(name)
        );
    }
}

/// One polyline per named series of (x, y) points.
pub fn line_chart(
    title: &str,
    x_label: &str,
    y_label: &str,
    series: &[(String, Vec<(f64, f64)>)],
    prov: &Provenance,
) -> String {
    let (x0, x1) = span(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)));
    let (y0, y1) = span(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)));
    let f = Frame { x0, x1, y0, y1, height: H };
    let mut out = String::new();
    header(&mut out, prov, title, H);
    f.axes(&mut out, x_label, y_label, true);
    for (i, (_, pts)) in series.iter().enumerate() {
        let mut d = String::new();
        for (j, (x, y)) in pts.iter().filter(|p| p.0.is_finite() && p.1.is_finite()).enumerate() {
            let _ = write!(d, "{}{:.2},{:.2} ", if j == 0 { "M" } else { "L" }, f.px(*x), f.py(*y));
        }
        let _ = writeln!(
            out,
            r#"<path d="{}" stroke="{}" stroke-width="1.6" fill="none"/>"#,
            d.trim_end(),
            PALETTE[i % PALETTE.len()]
        );
    }
    legend(&mut out, &series.iter().map(|s| s.0.clone()).collect::<Vec<_>>());
    out.push_str("</svg>\n");
    out
}

/// `values[g][s]` is the bar for group `g`, series `s`. Non-finite bars are
/// skipped.
pub fn grouped_bars(
    title: &str,
    y_label: &str,
    groups: &[String],
    series_names: &[String],
    values: &[Vec<f64>],
    prov: &Provenance,
) -> String {
    let (_, hi) = span(values.iter().flatten().copied().chain([0.0]));
    let f = Frame { x0: 0.0, x1: groups.len().max(1) as f64, y0: 0.0, y1: hi * 1.05, height: H };
    let mut out = String::new();
    header(&mut out, prov, title, H);
    f.axes(&mut out, "", y_label, false);
    let slot = f.px(1.0) - f.px(0.0);
    let bar = slot * 0.8 / series_names.len().max(1) as f64;
    for (g, name) in groups.iter().enumerate() {
        let x_start = f.px(g as f64) + slot * 0.1;
        for (s, v) in values.get(g).into_iter().flatten().enumerate() {
            if !v.is_finite() {
                continue;
            }
            let top = f.py(v.max(0.0));
            let _ = writeln!(
                out,
                r#"<rect x="{:.2}" y="{top:.2}" width="{:.2}" height="{:.2}" fill="{}"><title>{} {}: {}</title></rect>"#,
                x_start + bar * s as f64,
                bar,
                f.py(0.0) - top,
                PALETTE[s % PALETTE.len()],
                escape(name),
                escape(series_names.get(s).map_or("", |n| n.as_str())),
                tick(*v)
            );
        }
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            f.px(g as f64 + 0.5),
            H - BOTTOM + 17.0,
            escape(name)
        );
    }
    legend(&mut out, series_names);
    out.push_str("</svg>\n");
    out
}

/// A point in a strip plot: row index, horizontal value, and colour value
/// in [0, 1] (blue low, red high).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripPoint {
    pub row: usize,
    pub value: f64,
    pub shade: f64,
}

/// Beeswarm-style strip plot with seeded vertical jitter.
pub fn strip_plot(title: &str, x_label: &str, rows: &[String], points: &[StripPoint], seed: u64, prov: &Provenance) -> String {
    let height = TOP + BOTTOM + 50.0 * rows.len().max(1) as f64;
    let (lo, hi) = span(points.iter().map(|p| p.value).chain([0.0]));
    let f = Frame { x0: lo, x1: hi, y0: 0.0, y1: rows.len().max(1) as f64, height };
    let mut out = String::new();
    header(&mut out, prov, title, height);
    let by = height - BOTTOM;
    let _ = writeln!(
        out,
        r##"<path d="M{LEFT:.2},{by:.2} L{:.2},{by:.2}" stroke="#333" fill="none"/>"##,
        W - RIGHT
    );
    let zx = f.px(0.0);
    let _ = writeln!(out, r##"<line x1="{zx:.2}" y1="{TOP:.2}" x2="{zx:.2}" y2="{by:.2}" stroke="#999" stroke-dasharray="4 3"/>"##);
    for i in 0..=4 {
        let v = lo + (hi - lo) * i as f64 / 4.0;
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#, f.px(v), by + 17.0, tick(v));
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + (W - LEFT - RIGHT) / 2.0,
        height - 12.0,
        escape(x_label)
    );
    for (r, name) in rows.iter().enumerate() {
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#, LEFT - 6.0, f.py(r as f64 + 0.5) + 4.0, escape(name));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for p in points {
        let jitter: f64 = rng.random_range(-0.35..0.35);
        if !p.value.is_finite() {
            continue;
        }
        let s = p.shade.clamp(0.0, 1.0);
        let red = (40.0 + 200.0 * s).round() as u8;
        let blue = (240.0 - 200.0 * s).round() as u8;
        let _ = writeln!(
            out,
            r##"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="#{red:02x}30{blue:02x}" fill-opacity="0.75"/>"##,
            f.px(p.value),
            f.py(p.row as f64 + 0.5 + jitter)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed_and_stable() {
        let prov = Provenance::default();
        let s = vec![("a".to_string(), vec![(0.0, 1.0), (1.0, 3.0)])];
        let svg = line_chart("t", "x", "y", &s, &prov);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("<!--"));
        assert_eq!(svg, line_chart("t", "x", "y", &s, &prov));

        let bars = grouped_bars("b", "mape", &["S1".into()], &["ridge".into()], &[vec![2.5]], &prov);
        assert_eq!(bars.matches("<rect x").count(), 2);
    }

    #[test]
    fn strip_plot_jitter_is_seeded() {
        let prov = Provenance::default();
        let pts: Vec<StripPoint> = (0..20).map(|i| StripPoint { row: i % 2, value: i as f64, shade: 0.5 }).collect();
        let rows = vec!["G".to_string(), "A".to_string()];
        let a = strip_plot("s", "v", &rows, &pts, 7, &prov);
        assert_eq!(a, strip_plot("s", "v", &rows, &pts, 7, &prov));
        assert_ne!(a, strip_plot("s", "v", &rows, &pts, 8, &prov));
        assert_eq!(a.matches("<circle").count(), 20);
    }

    #[test]
    fn flat_ranges_do_not_divide_by_zero() {
        let prov = Provenance::default();
        let s = vec![("flat".to_string(), vec![(0.0, 0.0), (1.0, 0.0)])];
        assert!(!line_chart("t", "x", "y", &s, &prov).contains("NaN"));
    }
}
