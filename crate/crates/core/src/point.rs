//! Small plane-geometry primitives shared across the crate.

use std::ops::{Add, Mul, Neg, Sub};

/// A point (or vector) in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub fn dist(self, other: Point) -> f64 {
        (self - other).norm()
    }

    /// Counterclockwise rotation by `angle` radians about the origin.
    pub fn rotate(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Unit vector in the same direction. Panics on the zero vector.
    pub fn normalized(self) -> Point {
        let n = self.norm();
        assert!(n > 0.0, "cannot normalize the zero vector");
        Point::new(self.x / n, self.y / n)
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// A real symmetric 2x2 matrix, used for the matrix-valued contrast.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymMat2 {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl SymMat2 {
    pub const ZERO: SymMat2 = SymMat2 { xx: 0.0, xy: 0.0, yy: 0.0 };

    pub fn diagonal(xx: f64, yy: f64) -> Self {
        SymMat2 { xx, xy: 0.0, yy }
    }

    pub fn is_zero(&self) -> bool {
        self.xx == 0.0 && self.xy == 0.0 && self.yy == 0.0
    }

    pub fn apply(&self, v: Point) -> Point {
        Point::new(self.xx * v.x + self.xy * v.y, self.xy * v.x + self.yy * v.y)
    }

    /// Smallest eigenvalue (exact closed form for the symmetric 2x2 case).
    pub fn eig_min(&self) -> f64 {
        let mean = 0.5 * (self.xx + self.yy);
        let disc = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        mean - disc
    }
}
