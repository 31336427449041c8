//! Planar helpers: axis-aligned windows, convex polygons, segments.

use alloc::vec::Vec;

use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

/// Axis-aligned box `[x0,x1]×[y0,y1]` in ℂ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        Rect { x0, y0, x1, y1 }
    }

    /// Smallest box containing `points`.
    pub fn bounding(points: &[Complex64]) -> Self {
        let mut r = Rect::new(f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            r.x0 = r.x0.min(p.re);
            r.y0 = r.y0.min(p.im);
            r.x1 = r.x1.max(p.re);
            r.y1 = r.y1.max(p.im);
        }
        r
    }

    /// Whether the boxes overlap after growing both by `tol`.
    pub fn touches(&self, o: &Rect, tol: f64) -> bool {
        self.x0 <= o.x1 + tol && o.x0 <= self.x1 + tol && self.y0 <= o.y1 + tol && o.y0 <= self.y1 + tol
    }

    /// Square `[-r,r]²`.
    pub fn centered(r: f64) -> Self {
        Rect::new(-r, -r, r, r)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn is_empty(&self) -> bool {
        !(self.x1 > self.x0 && self.y1 > self.y0)
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }

    pub fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1))
    }

    pub fn contains(&self, z: Complex64) -> bool {
        z.re >= self.x0 && z.re <= self.x1 && z.im >= self.y0 && z.im <= self.y1
    }

    /// Distance from an interior point to the boundary (negative outside).
    pub fn inner_distance(&self, z: Complex64) -> f64 {
        (z.re - self.x0).min(self.x1 - z.re).min(z.im - self.y0).min(self.y1 - z.im)
    }

    pub fn expand(&self, d: f64) -> Rect {
        Rect::new(self.x0 - d, self.y0 - d, self.x1 + d, self.y1 + d)
    }

    /// Counter-clockwise corners starting at `(x0,y0)`.
    pub fn corners(&self) -> [Complex64; 4] {
        [
            Complex64::new(self.x0, self.y0),
            Complex64::new(self.x1, self.y0),
            Complex64::new(self.x1, self.y1),
            Complex64::new(self.x0, self.y1),
        ]
    }

    /// Regular `nx × ny` grid of cell centres.
    pub fn grid(&self, nx: usize, ny: usize) -> impl Iterator<Item = Complex64> + '_ {
        let hx = self.width() / nx as f64;
        let hy = self.height() / ny as f64;
        (0..ny).flat_map(move |j| {
            (0..nx).map(move |i| {
                Complex64::new(self.x0 + (i as f64 + 0.5) * hx, self.y0 + (j as f64 + 0.5) * hy)
            })
        })
    }
}

/// Keeps the part of a convex polygon where `a x + b y + c >= -tol`.
pub fn clip_halfplane(poly: &[Complex64], a: f64, b: f64, c: f64, tol: f64) -> Vec<Complex64> {
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    if n == 0 {
        return out;
    }
    let value = |p: Complex64| a * p.re + b * p.im + c;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let (vp, vq) = (value(p), value(q));
        let p_in = vp >= -tol;
        let q_in = vq >= -tol;
        if p_in {
            out.push(p);
        }
        if p_in != q_in && (vp - vq).abs() > 0.0 {
            let t = vp / (vp - vq);
            if t > 0.0 && t < 1.0 {
                out.push(p + (q - p) * t);
            }
        }
    }
    out
}

/// Signed shoelace area.
pub fn polygon_area(poly: &[Complex64]) -> f64 {
    let n = poly.len();
    let mut s = 0.0;
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        s += p.re * q.im - q.re * p.im;
    }
    0.5 * s
}

pub fn polygon_centroid(poly: &[Complex64]) -> Complex64 {
    let n = poly.len();
    let a = polygon_area(poly);
    if n == 0 {
        return Complex64::new(0.0, 0.0);
    }
    if a.abs() < 1e-300 {
        let s: Complex64 = poly.iter().sum();
        return s / n as f64;
    }
    let mut c = Complex64::new(0.0, 0.0);
    for k in 0..n {
        let p = poly[k];
        let q = poly[(k + 1) % n];
        let cross = p.re * q.im - q.re * p.im;
        c += (p + q) * cross;
    }
    c / (6.0 * a)
}

/// Distance from `z` to the segment `[a, b]`.
pub fn segment_distance(z: Complex64, a: Complex64, b: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (z - a).norm();
    }
    let t = ((z - a) * d.conj()).re / len2;
    let t = t.clamp(0.0, 1.0);
    (z - (a + d * t)).norm()
}

/// Removes consecutive near-duplicate vertices of a polygon.
pub fn dedup_polygon(poly: Vec<Complex64>, tol: f64) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().is_none_or(|q| (p - q).norm() > tol) {
            out.push(p);
        }
    }
    while out.len() > 1 && (out[0] - out[out.len() - 1]).norm() <= tol {
        out.pop();
    }
    out
}

/// Simpson quadrature of `f` on `[0, 1]`, refined adaptively.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, tol: f64) -> f64 {
    fn step<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    // Split first so that narrow features are not skipped by the first sample.
    let pieces = 8;
    let mut total = 0.0;
    for k in 0..pieces {
        let a = k as f64 / pieces as f64;
        let b = (k + 1) as f64 / pieces as f64;
        let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += step(f, a, b, fa, fm, fb, whole, tol / pieces as f64, 40);
    }
    total
}
