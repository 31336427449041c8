//! Deterministic SVG pictures of planar skeletons.
//!
//! Each cell is one `<polygon>`, each edge one `<line>`, each vertex one
//! `<circle>` and each overlaid root one `<path>` cross, so element counts can
//! be read off the [`Skeleton2D`].

use std::fmt::Write;

use expskel_core::geometry::Rect;
use expskel_core::skeleton::Skeleton2D;
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    /// Length of the longer canvas side in pixels.
    pub size: f64,
    pub cell_fill: &'static str,
    pub edge_stroke: &'static str,
    pub vertex_fill: &'static str,
    pub root_stroke: &'static str,
}

impl Default for SvgStyle {
    fn default() -> Self {
        SvgStyle {
            size: 600.0,
            cell_fill: "#eef2f7",
            edge_stroke: "#1f3b73",
            vertex_fill: "#c0392b",
            root_stroke: "#117a39",
        }
    }
}

/// `(X, Y) = ((x - x0)·s, (y1 - y)·s)` with `s = size / max(width, height)`.
struct Transform {
    x0: f64,
    y1: f64,
    s: f64,
}

impl Transform {
    fn new(w: &Rect, size: f64) -> Self {
        let extent = w.width().max(w.height());
        let s = if extent > 0.0 && extent.is_finite() { size / extent } else { 1.0 };
        Transform { x0: w.x0, y1: w.y1, s }
    }

    fn map(&self, z: Complex64) -> (String, String) {
        (num((z.re - self.x0) * self.s), num((self.y1 - z.im) * self.s))
    }
}

/// Fixed three-decimal output with negative zero folded to zero.
fn num(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".to_string()
    } else {
        s
    }
}

pub fn render_svg(sk: &Skeleton2D, roots: &[Complex64], style: &SvgStyle) -> String {
    let w = &sk.window;
    let mut out = String::new();
    if w.is_empty() {
        let sz = num(style.size);
        let _ = writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{sz}" height="{sz}" viewBox="0 0 {sz} {sz}">"#);
        out.push_str("<desc>empty window</desc>\n</svg>\n");
        return out;
    }
    let t = Transform::new(w, style.size);
    let (width, height) = (num(w.width() * t.s), num(w.height() * t.s));
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">"#
    );
    let _ = writeln!(
        out,
        "<desc>X = (x - {}) * {}, Y = ({} - y) * {}</desc>",
        num(t.x0),
        num(t.s),
        num(t.y1),
        num(t.s)
    );
    out.push_str(&format!(r#"<g fill="{}" stroke="none">"#, style.cell_fill));
    out.push('\n');
    for c in &sk.cells {
        let pts: Vec<String> = c
            .polygon
            .iter()
            .map(|&z| {
                let (x, y) = t.map(z);
                format!("{x},{y}")
            })
            .collect();
        let _ = writeln!(out, r#"<polygon points="{}"/>"#, pts.join(" "));
    }
    out.push_str("</g>\n");
    out.push_str(&format!(r#"<g stroke="{}" stroke-width="2">"#, style.edge_stroke));
    out.push('\n');
    for e in &sk.edges {
        let ((x1, y1), (x2, y2)) = (t.map(e.start), t.map(e.end));
        let _ = writeln!(out, r#"<line x1="{x1}" y1="{y1}" x2="{x2}" y2="{y2}"/>"#);
    }
    out.push_str("</g>\n");
    out.push_str(&format!(r#"<g fill="{}">"#, style.vertex_fill));
    out.push('\n');
    for v in &sk.vertices {
        let (x, y) = t.map(v.point);
        let _ = writeln!(out, r#"<circle cx="{x}" cy="{y}" r="4"/>"#);
    }
    out.push_str("</g>\n");
    out.push_str(&format!(r#"<g stroke="{}" stroke-width="1.5" fill="none">"#, style.root_stroke));
    out.push('\n');
    let arm = 5.0;
    for &z in roots {
        let cx = (z.re - t.x0) * t.s;
        let cy = (t.y1 - z.im) * t.s;
        let _ = writeln!(
            out,
            r#"<path d="M{} {} L{} {} M{} {} L{} {}"/>"#,
            num(cx - arm),
            num(cy - arm),
            num(cx + arm),
            num(cy + arm),
            num(cx - arm),
            num(cy + arm),
            num(cx + arm),
            num(cy - arm)
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
