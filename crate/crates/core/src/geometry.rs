//! Closed-form ray tests against the two solids the world is made of: the
//! upright human cylinder and the capsules around robot links.
//!
//! Every ray query returns the first boundary crossing at `t > 0`: the entry
//! point when the ray starts outside the solid, the exit point when it starts
//! inside.

use nalgebra::Vector3;

/// Parameter interval `[t_in, t_out]` along a ray.
type Span = (f64, f64);

/// Upright cylinder standing on the floor-aligned axis through `(cx, cy)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalCylinder {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    pub z_min: f64,
    pub z_max: f64,
}

/// All points within `radius` of the segment `a`–`b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Capsule {
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
    pub radius: f64,
}

fn first_crossing(span: Option<Span>) -> Option<f64> {
    let (t_in, t_out) = span?;
    if t_in > t_out {
        return None;
    }
    if t_in > 0.0 {
        Some(t_in)
    } else if t_out > 0.0 {
        Some(t_out)
    } else {
        None
    }
}

fn intersect(a: Option<Span>, b: Option<Span>) -> Option<Span> {
    let (a0, a1) = a?;
    let (b0, b1) = b?;
    let lo = a0.max(b0);
    let hi = a1.min(b1);
    (lo <= hi).then_some((lo, hi))
}

/// Values of `t` with `lo <= s0 + t * ds <= hi`.
fn slab(s0: f64, ds: f64, lo: f64, hi: f64) -> Option<Span> {
    if ds == 0.0 {
        return (lo..=hi).contains(&s0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let t0 = (lo - s0) / ds;
    let t1 = (hi - s0) / ds;
    Some((t0.min(t1), t0.max(t1)))
}

/// Roots of `a t² + b t + c <= 0` for `a >= 0`.
fn quadratic_span(a: f64, b: f64, c: f64) -> Option<Span> {
    if a <= f64::EPSILON * 1e-3 {
        // Ray parallel to the surface generator: inside everywhere or nowhere.
        return (c <= 0.0).then_some((f64::NEG_INFINITY, f64::INFINITY));
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    // Numerically stable root pair.
    let q = if b >= 0.0 { -0.5 * (b + sq) } else { -0.5 * (b - sq) };
    let (r0, r1) = if q == 0.0 { (0.0, 0.0) } else { (q / a, c / q) };
    Some((r0.min(r1), r0.max(r1)))
}

fn sphere_span(origin: &Vector3<f64>, dir: &Vector3<f64>, center: &Vector3<f64>, radius: f64) -> Option<Span> {
    let oc = origin - center;
    quadratic_span(dir.dot(dir), 2.0 * oc.dot(dir), oc.dot(&oc) - radius * radius)
}

impl VerticalCylinder {
    fn span(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Span> {
        let ox = origin.x - self.cx;
        let oy = origin.y - self.cy;
        let side = quadratic_span(
            dir.x * dir.x + dir.y * dir.y,
            2.0 * (ox * dir.x + oy * dir.y),
            ox * ox + oy * oy - self.radius * self.radius,
        );
        intersect(side, slab(origin.z, dir.z, self.z_min, self.z_max))
    }

    pub fn ray(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        first_crossing(self.span(origin, dir))
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        let dx = p.x - self.cx;
        let dy = p.y - self.cy;
        dx * dx + dy * dy <= self.radius * self.radius && p.z >= self.z_min && p.z <= self.z_max
    }

    /// Distance from `p` to the cylinder's boundary surface.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        let rho = (p.x - self.cx).hypot(p.y - self.cy);
        let dr = rho - self.radius;
        let dz = (self.z_min - p.z).max(p.z - self.z_max);
        if dr <= 0.0 && dz <= 0.0 {
            (-dr).min(-dz)
        } else {
            dr.max(0.0).hypot(dz.max(0.0))
        }
    }
}

impl Capsule {
    pub fn new(a: Vector3<f64>, b: Vector3<f64>, radius: f64) -> Self {
        Self { a, b, radius }
    }

    fn span(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Span> {
        let axis = self.b - self.a;
        let len = axis.norm();
        let mut parts = vec![
            sphere_span(origin, dir, &self.a, self.radius),
            sphere_span(origin, dir, &self.b, self.radius),
        ];
        if len > 0.0 {
            let u = axis / len;
            let oa = origin - self.a;
            let o_perp = oa - oa.dot(&u) * u;
            let d_perp = dir - dir.dot(&u) * u;
            let side = quadratic_span(
                d_perp.dot(&d_perp),
                2.0 * o_perp.dot(&d_perp),
                o_perp.dot(&o_perp) - self.radius * self.radius,
            );
            parts.push(intersect(side, slab(oa.dot(&u), dir.dot(&u), 0.0, len)));
        }
        // A capsule is convex, so the union of its pieces along a line is one
        // interval.
        parts
            .into_iter()
            .flatten()
            .reduce(|(a0, a1), (b0, b1)| (a0.min(b0), a1.max(b1)))
    }

    pub fn ray(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        first_crossing(self.span(origin, dir))
    }

    pub fn distance_to_axis(&self, p: &Vector3<f64>) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 {
            ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        (p - (self.a + t * ab)).norm()
    }

    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.distance_to_axis(p) <= self.radius
    }

    /// Strictly interior points, excluding the surface shell of width `tol`.
    pub fn contains_strictly(&self, p: &Vector3<f64>, tol: f64) -> bool {
        self.distance_to_axis(p) < self.radius - tol
    }
}
