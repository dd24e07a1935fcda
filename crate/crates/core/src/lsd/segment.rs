use nalgebra::{Point2, Vector2};
use std::f64::consts::PI;

/// A detected or synthetic 2D line segment in original-image pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment2D {
    pub p1: Point2<f64>,
    pub p2: Point2<f64>,
    pub length: f64,
    /// Undirected angle of `p2 - p1`, folded into `(-pi/2, pi/2]`.
    pub angle: f64,
    /// Pyramid layer the segment was detected on (0 for synthetic input).
    pub layer: usize,
}

/// Folds an angle into `(-pi/2, pi/2]`.
pub fn fold_angle(a: f64) -> f64 {
    let mut a = a.rem_euclid(PI);
    if a > PI / 2.0 {
        a -= PI;
    }
    a
}

/// Difference between two undirected angles, in `[0, pi/2]`.
pub fn undirected_angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

impl LineSegment2D {
    pub fn new(p1: Point2<f64>, p2: Point2<f64>) -> Self {
        let d = p2 - p1;
        Self { p1, p2, length: d.norm(), angle: fold_angle(d.y.atan2(d.x)), layer: 0 }
    }

    pub fn from_coords(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(Point2::new(x1, y1), Point2::new(x2, y2))
    }

    pub fn with_layer(mut self, layer: usize) -> Self {
        self.layer = layer;
        self
    }

    pub fn midpoint(&self) -> Point2<f64> {
        nalgebra::center(&self.p1, &self.p2)
    }

    /// Unit direction from `p1` to `p2`.
    pub fn direction(&self) -> Vector2<f64> {
        (self.p2 - self.p1) / self.length
    }

    /// Same segment with endpoints swapped.
    pub fn reversed(&self) -> Self {
        Self { p1: self.p2, p2: self.p1, ..*self }
    }

    /// Perpendicular distance from `p` to the infinite supporting line.
    pub fn line_distance(&self, p: &Point2<f64>) -> f64 {
        let d = self.direction();
        let v = p - self.p1;
        (v.x * d.y - v.y * d.x).abs()
    }

    /// Homogeneous line coefficients `(a, b, c)` with `a^2 + b^2 = 1`.
    pub fn homogeneous(&self) -> nalgebra::Vector3<f64> {
        let a = nalgebra::Vector3::new(self.p1.x, self.p1.y, 1.0);
        let b = nalgebra::Vector3::new(self.p2.x, self.p2.y, 1.0);
        let l = a.cross(&b);
        l / l.x.hypot(l.y)
    }
}

/// `x1,y1,x2,y2,length,angle` with a header row; angle in radians.
pub fn segments_csv(segments: &[LineSegment2D]) -> String {
    let mut out = String::from("x1,y1,x2,y2,length,angle\n");
    for s in segments {
        out.push_str(&format!("{},{},{},{},{},{}\n", s.p1.x, s.p1.y, s.p2.x, s.p2.y, s.length, s.angle));
    }
    out
}
