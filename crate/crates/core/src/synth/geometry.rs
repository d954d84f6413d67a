//! Orthographic cameras and analytic surfaces.

use super::spec::{HeightFunction, SurfaceSpec, ViewSpec};

pub type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn add_scaled(a: Vec3, t: f64, d: Vec3) -> Vec3 {
    [a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]
}

pub(crate) fn normalize(v: Vec3) -> Vec3 {
    let n = dot(v, v).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

pub(crate) fn distance(a: Vec3, b: Vec3) -> f64 {
    let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    dot(d, d).sqrt()
}

/// Orthographic camera over a `width × height` grid of square pixels.
#[derive(Clone, Debug)]
pub struct Camera {
    /// World-to-camera rotation, rows are the camera axes in world frame.
    rot: [Vec3; 3],
    width: usize,
    height: usize,
    pixel: f64,
    /// Distance from the image plane to the origin along the view axis.
    depth: f64,
}

impl Camera {
    /// `half_extent` is half the imaged width along the longer image side.
    pub fn new(view: &ViewSpec, width: usize, height: usize, half_extent: f64) -> Camera {
        let (sy, cy) = view.yaw_deg.to_radians().sin_cos();
        let (sp, cp) = view.pitch_deg.to_radians().sin_cos();
        // Rx(pitch) · Ry(yaw)
        let ry = [[cy, 0.0, sy], [0.0, 1.0, 0.0], [-sy, 0.0, cy]];
        let rx = [[1.0, 0.0, 0.0], [0.0, cp, -sp], [0.0, sp, cp]];
        let mut rot = [[0.0; 3]; 3];
        for (i, row) in rot.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (0..3).map(|k| rx[i][k] * ry[k][j]).sum();
            }
        }
        Camera {
            rot,
            width,
            height,
            pixel: 2.0 * half_extent / width.max(height) as f64,
            depth: 10.0 * half_extent,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Ray direction in world frame (camera −z).
    pub fn direction(&self) -> Vec3 {
        [-self.rot[2][0], -self.rot[2][1], -self.rot[2][2]]
    }

    fn to_world(&self, c: Vec3) -> Vec3 {
        let r = &self.rot;
        [
            r[0][0] * c[0] + r[1][0] * c[1] + r[2][0] * c[2],
            r[0][1] * c[0] + r[1][1] * c[1] + r[2][1] * c[2],
            r[0][2] * c[0] + r[1][2] * c[1] + r[2][2] * c[2],
        ]
    }

    fn to_camera(&self, x: Vec3) -> Vec3 {
        [dot(self.rot[0], x), dot(self.rot[1], x), dot(self.rot[2], x)]
    }

    /// Image-plane coordinates `(u, v)` of a pixel centre.
    pub fn pixel_center(&self, row: usize, col: usize) -> (f64, f64) {
        let ex = self.pixel * self.width as f64 / 2.0;
        let ey = self.pixel * self.height as f64 / 2.0;
        (-ex + (col as f64 + 0.5) * self.pixel, ey - (row as f64 + 0.5) * self.pixel)
    }

    /// Continuous `(row, col)` of the projection of `x`; pixel centres sit
    /// at integer values.
    pub fn project(&self, x: Vec3) -> (f64, f64) {
        let c = self.to_camera(x);
        let ex = self.pixel * self.width as f64 / 2.0;
        let ey = self.pixel * self.height as f64 / 2.0;
        ((ey - c[1]) / self.pixel - 0.5, (c[0] + ex) / self.pixel - 0.5)
    }

    /// Ray origin for image-plane coordinates `(u, v)`.
    pub fn ray_origin(&self, u: f64, v: f64) -> Vec3 {
        self.to_world([u, v, self.depth])
    }

    /// First surface point along the ray through `x`'s image position.
    pub fn cast_through(&self, surface: &Surface, x: Vec3) -> Option<Vec3> {
        let c = self.to_camera(x);
        surface.intersect(self.ray_origin(c[0], c[1]), self.direction())
    }

    /// `x` is the first hit of its own ray and faces the camera.
    pub fn sees(&self, surface: &Surface, x: Vec3, tol: f64) -> bool {
        let facing = dot(surface.normal(x), self.direction()) < 0.0;
        facing && self.cast_through(surface, x).is_some_and(|y| distance(x, y) <= tol)
    }
}

/// Analytic surface built from a [`SurfaceSpec`].
#[derive(Clone, Debug)]
pub enum Surface {
    Sphere { radius: f64 },
    Height { f: HeightFunction, a: f64, s: f64 },
}

/// Bisection steps refining a height-field crossing.
const BISECTIONS: usize = 200;

impl Surface {
    pub fn from_spec(spec: &SurfaceSpec) -> Surface {
        match *spec {
            SurfaceSpec::Sphere { radius } => Surface::Sphere { radius },
            SurfaceSpec::HeightField {
                function,
                amplitude,
                scale,
            } => Surface::Height {
                f: function,
                a: amplitude,
                s: scale,
            },
        }
    }

    /// Radius of a ball centred at the origin containing the surface.
    pub fn bounding_radius(&self) -> f64 {
        match *self {
            Surface::Sphere { radius } => radius,
            Surface::Height { a, .. } => (2.0 + a * a).sqrt(),
        }
    }

    /// Coordinates scaled into about `[-1, 1]³`, used by albedo maps.
    pub fn normalized(&self, x: Vec3) -> Vec3 {
        match *self {
            Surface::Sphere { radius } => [x[0] / radius, x[1] / radius, x[2] / radius],
            Surface::Height { a, .. } => {
                let z = if a != 0.0 { x[2] / a.abs() } else { 0.0 };
                [x[0], x[1], z]
            }
        }
    }

    fn height(f: HeightFunction, a: f64, s: f64, x: f64, y: f64) -> (f64, f64, f64) {
        match f {
            HeightFunction::GaussianBump => {
                let e = (-(x * x + y * y) / (2.0 * s * s)).exp();
                let h = a * e;
                (h, -h * x / (s * s), -h * y / (s * s))
            }
            HeightFunction::Ripple => {
                let k = std::f64::consts::PI / s;
                let (sx, cx) = (k * x).sin_cos();
                let (sy, cy) = (k * y).sin_cos();
                (a * cx * cy, -a * k * sx * cy, -a * k * cx * sy)
            }
        }
    }

    /// Outward unit normal at a surface point.
    pub fn normal(&self, x: Vec3) -> Vec3 {
        match *self {
            Surface::Sphere { .. } => normalize(x),
            Surface::Height { f, a, s } => {
                let (_, hx, hy) = Self::height(f, a, s, x[0], x[1]);
                normalize([-hx, -hy, 1.0])
            }
        }
    }

    /// First intersection of the ray `o + t d`, `t > 0`, `d` unit.
    pub fn intersect(&self, o: Vec3, d: Vec3) -> Option<Vec3> {
        match *self {
            Surface::Sphere { radius } => {
                let b = dot(o, d);
                let c = dot(o, o) - radius * radius;
                let disc = b * b - c;
                if disc < 0.0 {
                    return None;
                }
                let t = -b - disc.sqrt();
                (t > 0.0).then(|| add_scaled(o, t, d))
            }
            Surface::Height { f, a, s } => self.march(o, d, f, a, s),
        }
    }

    fn march(&self, o: Vec3, d: Vec3, f: HeightFunction, a: f64, s: f64) -> Option<Vec3> {
        // Clip the ray to the slab |x|, |y| <= 1.
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for k in 0..2 {
            if d[k].abs() < 1e-15 {
                if o[k].abs() > 1.0 {
                    return None;
                }
            } else {
                let (a0, a1) = ((-1.0 - o[k]) / d[k], (1.0 - o[k]) / d[k]);
                t0 = t0.max(a0.min(a1));
                t1 = t1.min(a0.max(a1));
            }
        }
        // ...and to the box |z| <= |a| + margin.
        let zmax = a.abs() + 1e-6;
        if d[2].abs() < 1e-15 {
            if o[2].abs() > zmax {
                return None;
            }
        } else {
            let (a0, a1) = ((-zmax - o[2]) / d[2], (zmax - o[2]) / d[2]);
            t0 = t0.max(a0.min(a1));
            t1 = t1.min(a0.max(a1));
        }
        if !(t0 < t1) {
            return None;
        }
        let gap = |t: f64| {
            let p = add_scaled(o, t, d);
            p[2] - Self::height(f, a, s, p[0], p[1]).0
        };
        // The ray must enter the patch from above.
        if gap(t0) < 0.0 {
            return None;
        }
        let steps = 512;
        let dt = (t1 - t0) / steps as f64;
        let mut prev = t0;
        for k in 1..=steps {
            let t = if k == steps { t1 } else { t0 + k as f64 * dt };
            if gap(t) <= 0.0 {
                let (mut lo, mut hi) = (prev, t);
                for _ in 0..BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if gap(mid) > 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                return Some(add_scaled(o, hi, d));
            }
            prev = t;
        }
        None
    }
}
