use super::{skew, CameraModel, Pose};
use crate::error::{degenerate, Result};
use crate::lsd::LineSegment2D;
use nalgebra::{Matrix4, Point3, Vector3, Vector4};

/// Space line in Plücker coordinates. `n = p x d` for any point `p` on the
/// line, so `n` is the normal of the plane through the line and the origin
/// scaled by the line's distance from it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PluckerLine {
    pub n: Vector3<f64>,
    pub d: Vector3<f64>,
}

/// Relative tolerance of the Plücker constraint `n . d = 0`.
pub const ORTHOGONALITY_TOL: f64 = 1e-9;

impl PluckerLine {
    /// Validated constructor: `d` nonzero and `n . d = 0` within tolerance.
    pub fn new(n: Vector3<f64>, d: Vector3<f64>) -> Result<Self> {
        let line = Self { n, d };
        if !(d.norm() > 0.0) {
            return Err(degenerate("Plücker direction is zero"));
        }
        if line.orthogonality_residual() > ORTHOGONALITY_TOL * (n.norm() * d.norm() + 1.0) {
            return Err(degenerate(format!("Plücker constraint violated: n.d = {:e}", n.dot(&d))));
        }
        Ok(line)
    }

    /// Line through two distinct points, directed from `p` to `q`.
    pub fn from_points(p: &Point3<f64>, q: &Point3<f64>) -> Result<Self> {
        let d = q - p;
        if !(d.norm() > 0.0) {
            return Err(degenerate("coincident points do not define a line"));
        }
        Ok(Self { n: p.coords.cross(&d), d })
    }

    pub fn orthogonality_residual(&self) -> f64 {
        self.n.dot(&self.d).abs()
    }

    /// Zero direction: the line lies at infinity.
    pub fn is_at_infinity(&self) -> bool {
        self.d.norm() == 0.0
    }

    /// Scaled to `|n|^2 + |d|^2 = 1`.
    pub fn normalized(&self) -> Self {
        let s = (self.n.norm_squared() + self.d.norm_squared()).sqrt();
        Self { n: self.n / s, d: self.d / s }
    }

    /// Normalized with the sign fixed so the largest-magnitude coordinate is positive.
    pub fn canonical(&self) -> Self {
        let l = self.normalized();
        let v = l.to_vector6();
        let k = v.iamax();
        if v[k] < 0.0 {
            Self { n: -l.n, d: -l.d }
        } else {
            l
        }
    }

    pub fn to_vector6(&self) -> nalgebra::Vector6<f64> {
        nalgebra::Vector6::new(self.n.x, self.n.y, self.n.z, self.d.x, self.d.y, self.d.z)
    }

    /// Foot of the perpendicular from the origin.
    pub fn closest_point(&self) -> Point3<f64> {
        Point3::from(self.d.cross(&self.n) / self.d.norm_squared())
    }

    /// Euclidean distance from `p` to the line.
    pub fn distance_to(&self, p: &Point3<f64>) -> f64 {
        (p.coords.cross(&self.d) - self.n).norm() / self.d.norm()
    }

    /// Same homogeneous line up to a nonzero scale of either sign.
    pub fn same_line(&self, other: &PluckerLine, tol: f64) -> bool {
        let a = self.canonical().to_vector6();
        let b = other.canonical().to_vector6();
        (a - b).norm() <= tol
    }
}

/// Homogeneous plane `a x + b y + c z + w = 0`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Plane {
    pub coeffs: Vector4<f64>,
}

impl Plane {
    pub fn new(coeffs: Vector4<f64>) -> Self {
        Self { coeffs }
    }

    /// Plane with the given normal through `p`.
    pub fn from_normal_point(normal: &Vector3<f64>, p: &Point3<f64>) -> Self {
        Self::new(Vector4::new(normal.x, normal.y, normal.z, -normal.dot(&p.coords)))
    }

    pub fn normal(&self) -> Vector3<f64> {
        self.coeffs.xyz()
    }

    /// Signed algebraic value at `p`; a Euclidean distance when the normal has unit length.
    pub fn eval(&self, p: &Point3<f64>) -> f64 {
        self.normal().dot(&p.coords) + self.coeffs.w
    }
}

/// Plane through the camera center and the observed image segment, in world
/// coordinates. `pose_wc` maps camera coordinates to world coordinates.
pub fn plane_from_observation(pose_wc: &Pose, seg: &LineSegment2D, cam: &CameraModel) -> Result<Plane> {
    let r1 = cam.backproject(&seg.p1);
    let r2 = cam.backproject(&seg.p2);
    let normal_c = r1.cross(&r2);
    if normal_c.norm() <= 1e-12 * r1.norm() * r2.norm() {
        return Err(degenerate("segment endpoints back-project to the same ray"));
    }
    let normal_w = (pose_wc.rotation * normal_c).normalize();
    Ok(Plane::from_normal_point(&normal_w, &Point3::from(pose_wc.translation)))
}

/// Intersection line of two planes from the dual Plücker matrix `pi1 pi2^T - pi2 pi1^T`.
pub fn triangulate_dual_plucker(pi1: &Plane, pi2: &Plane) -> Result<PluckerLine> {
    let (a, b) = (pi1.normal(), pi2.normal());
    if a.norm() == 0.0 || b.norm() == 0.0 {
        return Err(degenerate("plane has a zero normal"));
    }
    if a.normalize().cross(&b.normalize()).norm() < 1e-8 {
        return Err(degenerate("planes are parallel"));
    }
    let l: Matrix4<f64> = pi1.coeffs * pi2.coeffs.transpose() - pi2.coeffs * pi1.coeffs.transpose();
    let d = Vector3::new(l[(2, 1)], l[(0, 2)], l[(1, 0)]);
    let n = Vector3::new(l[(0, 3)], l[(1, 3)], l[(2, 3)]);
    Ok(PluckerLine { n, d })
}

/// Expresses a line given in the source frame of `t` in its target frame:
/// `n' = R n + [t]x R d`, `d' = R d`.
pub fn transform_line(line: &PluckerLine, t: &Pose) -> PluckerLine {
    let rn = t.rotation * line.n;
    let rd = t.rotation * line.d;
    PluckerLine { n: rn + skew(&t.translation) * rd, d: rd }
}
