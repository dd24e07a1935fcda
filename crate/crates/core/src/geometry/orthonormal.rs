use super::{skew, PluckerLine};
use crate::error::{degenerate, Result};
use nalgebra::{Matrix2, Matrix3, Rotation3, Vector3, Vector4};

/// Minimal four-parameter line: `U` in SO(3) and `W` in SO(2), with `W` stored as
/// its angle. Columns of `U` are the unit normal, the unit direction and their
/// cross product; `(cos theta, sin theta)` is proportional to `(|n|, |d|)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthonormalLine {
    pub u: Rotation3<f64>,
    pub theta: f64,
}

impl OrthonormalLine {
    pub fn w(&self) -> Matrix2<f64> {
        let (s, c) = self.theta.sin_cos();
        Matrix2::new(c, -s, s, c)
    }

    /// `(w1, w2) = (cos theta, sin theta)`.
    pub fn weights(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    /// Four-vector `(log U, theta)`.
    pub fn to_vector4(&self) -> Vector4<f64> {
        let v = self.u.scaled_axis();
        Vector4::new(v.x, v.y, v.z, self.theta)
    }

    pub fn from_vector4(v: &Vector4<f64>) -> Self {
        Self { u: Rotation3::from_scaled_axis(v.xyz()), theta: v.w }
    }

    /// Largest deviation from `U^T U = I` and `det U = 1`.
    pub fn orthonormality_error(&self) -> f64 {
        let u = self.u.matrix();
        let e = (u.transpose() * u - Matrix3::identity()).abs().max();
        e.max((u.determinant() - 1.0).abs())
    }
}

/// Closed-form orthonormal representation. Lines through the origin (`n = 0`)
/// have no normal direction and are rejected.
pub fn to_orthonormal(line: &PluckerLine) -> Result<OrthonormalLine> {
    let (nn, dn) = (line.n.norm(), line.d.norm());
    if !(dn > 0.0) {
        return Err(degenerate("line direction is zero"));
    }
    if !(nn > 1e-12 * dn) {
        return Err(degenerate("line passes through the origin (n = 0)"));
    }
    let u1 = line.n / nn;
    let d = line.d - u1 * u1.dot(&line.d);
    let u2 = d.normalize();
    let u3 = u1.cross(&u2);
    let u = Rotation3::from_matrix_unchecked(Matrix3::from_columns(&[u1, u2, u3]));
    Ok(OrthonormalLine { u, theta: dn.atan2(nn) })
}

/// Plücker coordinates `(w1 u1, w2 u2)` with unit norm. `theta = 0` gives a
/// zero direction (a line at infinity); consumers reject it.
pub fn from_orthonormal(o: &OrthonormalLine) -> PluckerLine {
    let (w1, w2) = o.weights();
    let u = o.u.matrix();
    PluckerLine { n: u.column(0) * w1, d: u.column(1) * w2 }
}

/// Manifold update `U <- U Exp(dv)`, `theta <- theta + dtheta` for `delta = (dv, dtheta)`.
pub fn update_orthonormal(o: &OrthonormalLine, delta: &Vector4<f64>) -> OrthonormalLine {
    let u = o.u * Rotation3::from_scaled_axis(delta.xyz());
    // Renormalize to keep rounding drift out of long optimizations.
    let u = Rotation3::from_matrix_unchecked(orthonormalize(u.matrix()));
    OrthonormalLine { u, theta: o.theta + delta.w }
}

/// First-order update `U (I + [dv]x)`, `W (I + [dtheta]x)`, unprojected.
pub fn first_order_update(o: &OrthonormalLine, delta: &Vector4<f64>) -> (Matrix3<f64>, Matrix2<f64>) {
    let u = o.u.matrix() * (Matrix3::identity() + skew(&delta.xyz()));
    let w = o.w() * Matrix2::new(1.0, -delta.w, delta.w, 1.0);
    (u, w)
}

fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let c0: Vector3<f64> = m.column(0).normalize();
    let c1: Vector3<f64> = (m.column(1) - c0 * c0.dot(&m.column(1))).normalize();
    Matrix3::from_columns(&[c0, c1, c0.cross(&c1)])
}
