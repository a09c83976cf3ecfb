//! Text output helpers: fixed float formatting and a minimal SVG writer.

use std::fmt::Write as _;

use crate::scalar::Real;
use crate::vec2::Vec2;

/// Formats with 17 significant digits so CSV output round-trips and diffs cleanly.
pub fn fmt_real<T: Real>(x: T) -> String {
    let x = x.as_f64();
    if x.is_finite() {
        format!("{:.16e}", x)
    } else if x.is_nan() {
        "nan".to_string()
    } else if x > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

/// Polylines and markers drawn into an auto-fitted viewBox.
#[derive(Debug, Default, Clone)]
pub struct SvgPlot {
    lines: Vec<(Vec<[f64; 2]>, bool, String)>,
    dots: Vec<([f64; 2], String)>,
}

const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf",
];

impl SvgPlot {
    pub fn new() -> Self {
        Self::default()
    }

    /// Colour `k` of a small repeating palette.
    pub fn palette(k: usize) -> &'static str {
        PALETTE[k % PALETTE.len()]
    }

    pub fn polyline<T: Real>(
        &mut self,
        points: &[Vec2<T>],
        closed: bool,
        colour: &str,
    ) -> &mut Self {
        let pts = points
            .iter()
            .map(|p| [p.x.as_f64(), p.y.as_f64()])
            .collect();
        self.lines.push((pts, closed, colour.to_string()));
        self
    }

    pub fn dot<T: Real>(&mut self, p: Vec2<T>, colour: &str) -> &mut Self {
        self.dots
            .push(([p.x.as_f64(), p.y.as_f64()], colour.to_string()));
        self
    }

    fn bounds(&self) -> [f64; 4] {
        let mut b = [
            f64::INFINITY,
            f64::INFINITY,
            f64::NEG_INFINITY,
            f64::NEG_INFINITY,
        ];
        let all = self
            .lines
            .iter()
            .flat_map(|(p, _, _)| p.iter())
            .chain(self.dots.iter().map(|(p, _)| p));
        for p in all.filter(|p| p[0].is_finite() && p[1].is_finite()) {
            b[0] = b[0].min(p[0]);
            b[1] = b[1].min(p[1]);
            b[2] = b[2].max(p[0]);
            b[3] = b[3].max(p[1]);
        }
        if !b[0].is_finite() {
            return [-1.0, -1.0, 1.0, 1.0];
        }
        b
    }

    /// Renders the document. The y axis points up.
    pub fn render(&self) -> String {
        let [x0, y0, x1, y1] = self.bounds();
        let span = (x1 - x0).max(y1 - y0).max(1e-12);
        let pad = 0.05 * span;
        let (vx, vy, w, h) = (
            x0 - pad,
            -(y1 + pad),
            x1 - x0 + 2.0 * pad,
            y1 - y0 + 2.0 * pad,
        );
        let stroke = span / 400.0;
        let mut out = String::new();
        let _ = writeln!(
            out,
            r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="{vx:.6} {vy:.6} {w:.6} {h:.6}" width="640" height="{:.0}">"#,
            640.0 * h / w
        );
        // axes through the origin when visible
        if x0 - pad < 0.0 && x1 + pad > 0.0 {
            let _ = writeln!(
                out,
                r##"<line x1="0" y1="{:.6}" x2="0" y2="{:.6}" stroke="#bbbbbb" stroke-width="{stroke:.6}"/>"##,
                vy,
                vy + h
            );
        }
        if y0 - pad < 0.0 && y1 + pad > 0.0 {
            let _ = writeln!(
                out,
                r##"<line x1="{:.6}" y1="0" x2="{:.6}" y2="0" stroke="#bbbbbb" stroke-width="{stroke:.6}"/>"##,
                vx,
                vx + w
            );
        }
        for (pts, closed, colour) in &self.lines {
            let tag = if *closed { "polygon" } else { "polyline" };
            let _ = write!(
                out,
                r#"<{tag} fill="none" stroke="{colour}" stroke-width="{stroke:.6}" points=""#
            );
            for p in pts {
                let _ = write!(out, "{:.6},{:.6} ", p[0], -p[1]);
            }
            let _ = writeln!(out, r#""/>"#);
        }
        for (p, colour) in &self.dots {
            let _ = writeln!(
                out,
                r#"<circle cx="{:.6}" cy="{:.6}" r="{:.6}" fill="{colour}"/>"#,
                p[0],
                -p[1],
                2.0 * stroke
            );
        }
        out.push_str("</svg>\n");
        out
    }
}
