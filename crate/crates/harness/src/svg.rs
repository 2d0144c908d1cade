//! Hand-written SVG: the field with a planned path, and box plots.

use std::fmt::Write as _;

use icenav_core::field::IceField;
use icenav_core::geometry::Vec2;
use icenav_core::lattice::Path;
use icenav_core::occupancy::rasterize;
use icenav_core::NavContext;

use crate::stats::Summary;

const PX_PER_M: f64 = 20.0;
const MARGIN: f64 = 10.0;

pub fn escape(text: &str) -> String {
    let mut s = String::with_capacity(text.len());
    for ch in text.chars() {
        match ch {
            '&' => s.push_str("&amp;"),
            '<' => s.push_str("&lt;"),
            '>' => s.push_str("&gt;"),
            '"' => s.push_str("&quot;"),
            '\'' => s.push_str("&apos;"),
            c => s.push(c),
        }
    }
    s
}

struct Frame {
    length: f64,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        MARGIN + x * PX_PER_M
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.length - y) * PX_PER_M
    }

    fn points(&self, pts: &[Vec2]) -> String {
        let mut s = String::new();
        for (i, p) in pts.iter().enumerate() {
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{:.2},{:.2}", self.x(p.x), self.y(p.y));
        }
        s
    }
}

/// Channel outline, goal line, floes, and optionally the rasterised
/// occupancy underneath and the ship along `path`. North (+y) is up.
pub fn render_svg(ctx: &NavContext, field: &IceField, path: Option<&Path>, occupancy_overlay: bool) -> String {
    let ch = field.channel();
    let frame = Frame { length: ch.length };
    let (w, h) = (ch.width * PX_PER_M + 2.0 * MARGIN, ch.length * PX_PER_M + 2.0 * MARGIN);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#);
    let _ = writeln!(
        s,
        r##"<rect id="channel" x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="#0b3d5c" stroke="#000000" stroke-width="1"/>"##,
        frame.x(0.0),
        frame.y(ch.length),
        ch.width * PX_PER_M,
        ch.length * PX_PER_M
    );
    if occupancy_overlay {
        let grid = rasterize(field, &ctx.spec);
        let spec = grid.spec();
        let size = spec.cell_size * PX_PER_M;
        let _ = writeln!(s, r##"<g id="occupancy" fill="#ff8c00">"##);
        for r in 0..grid.rows() {
            for c in 0..grid.cols() {
                let v = grid.get(r, c);
                if v > 0.0 {
                    let _ = writeln!(
                        s,
                        r#"<rect x="{:.2}" y="{:.2}" width="{size:.2}" height="{size:.2}" fill-opacity="{v:.3}"/>"#,
                        frame.x(spec.x_edge(c)),
                        frame.y(spec.y_edge(r + 1)),
                    );
                }
            }
        }
        let _ = writeln!(s, "</g>");
    }
    let _ = writeln!(
        s,
        r##"<line id="goal" x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="#2ecc40" stroke-width="2"/>"##,
        frame.x(0.0),
        frame.y(ch.goal_y),
        frame.x(ch.width),
        frame.y(ch.goal_y)
    );
    if !field.floes().is_empty() {
        let _ = writeln!(s, r##"<g id="floes" fill="#f4f8fb" fill-opacity="0.85" stroke="#7f9fb5" stroke-width="0.5">"##);
        for f in field.floes() {
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.points(&f.vertices()));
        }
        let _ = writeln!(s, "</g>");
    }
    if let Some(path) = path {
        let cs = &ctx.control_set;
        let mut trace = vec![cs.position(&path.start)];
        for (pose, &id) in path.poses.iter().zip(&path.primitives) {
            let base = cs.position(pose);
            trace.extend(cs.primitive(id).samples.iter().skip(1).map(|p| base + Vec2::new(p.x, p.y)));
        }
        let _ = writeln!(s, r##"<g id="ship" fill="#d62728" fill-opacity="0.35" stroke="#d62728" stroke-width="0.5">"##);
        for pose in &path.poses {
            let outline = ctx.ship.posed(cs.position(pose), cs.yaw(pose.heading));
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.points(&outline));
        }
        let _ = writeln!(s, "</g>");
        let _ = writeln!(s, r##"<polyline id="path" points="{}" fill="none" stroke="#d62728" stroke-width="1.5"/>"##, frame.points(&trace));
    }
    s.push_str("</svg>\n");
    s
}

/// One box per group in each panel: whiskers at min and max, box from the
/// first to the third quartile, a bar at the median.
pub fn box_plot_svg(title: &str, panels: &[(String, Vec<(String, Summary)>)]) -> String {
    const PW: f64 = 240.0;
    const PH: f64 = 300.0;
    const TOP: f64 = 40.0;
    const PLOT_H: f64 = 200.0;
    let width = PW * panels.len().max(1) as f64;
    let height = PH + TOP;
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0}" height="{height:.0}" viewBox="0 0 {width:.0} {height:.0}" font-family="sans-serif" font-size="11">"#);
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{}</text>"#, escape(title));
    for (k, (metric, groups)) in panels.iter().enumerate() {
        let x0 = k as f64 * PW;
        let y0 = TOP + 20.0;
        let lo = groups.iter().map(|g| g.1.min).fold(f64::INFINITY, f64::min);
        let hi = groups.iter().map(|g| g.1.max).fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if !lo.is_finite() { (0.0, 1.0) } else if hi > lo { (lo, hi) } else { (lo - 0.5, lo + 0.5) };
        let y = |v: f64| y0 + PLOT_H * (1.0 - (v - lo) / (hi - lo));
        let _ = writeln!(s, r#"<g id="panel-{k}">"#);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" font-size="12">{}</text>"#, x0 + 50.0, TOP + 8.0, escape(metric));
        let _ = writeln!(s, r##"<line x1="{0:.1}" y1="{1:.1}" x2="{0:.1}" y2="{2:.1}" stroke="#000000"/>"##, x0 + 45.0, y0, y0 + PLOT_H);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 + 42.0, y0 + 4.0, fmt_tick(hi));
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#, x0 + 42.0, y0 + PLOT_H + 4.0, fmt_tick(lo));
        let slot = (PW - 60.0) / groups.len().max(1) as f64;
        for (g, (label, sm)) in groups.iter().enumerate() {
            let cx = x0 + 55.0 + slot * (g as f64 + 0.5);
            let half = (slot * 0.3).min(25.0);
            let _ = writeln!(s, r##"<line x1="{cx:.1}" y1="{:.1}" x2="{cx:.1}" y2="{:.1}" stroke="#333333"/>"##, y(sm.max), y(sm.min));
            let _ = writeln!(
                s,
                r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#9ecae1" stroke="#333333"/>"##,
                cx - half,
                y(sm.q3),
                2.0 * half,
                (y(sm.q1) - y(sm.q3)).max(0.5)
            );
            let _ = writeln!(s, r##"<line x1="{:.1}" y1="{2:.1}" x2="{:.1}" y2="{2:.1}" stroke="#d62728" stroke-width="2"/>"##, cx - half, cx + half, y(sm.median));
            let _ = writeln!(
                s,
                r#"<text x="{cx:.1}" y="{:.1}" text-anchor="middle" transform="rotate(30 {cx:.1} {:.1})">{}</text>"#,
                y0 + PLOT_H + 16.0,
                y0 + PLOT_H + 16.0,
                escape(label)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    s
}

fn fmt_tick(v: f64) -> String {
    if v != 0.0 && (v.abs() >= 1e4 || v.abs() < 1e-2) {
        format!("{v:.2e}")
    } else {
        format!("{v:.2}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn escapes_markup() {
        assert_eq!(escape("a<b & 'c'"), "a&lt;b &amp; &apos;c&apos;");
    }

    #[test]
    fn tick_labels() {
        assert_eq!(fmt_tick(0.0), "0.00");
        assert_eq!(fmt_tick(12.345), "12.35");
        assert_eq!(fmt_tick(123456.0), "1.23e5");
    }
}
