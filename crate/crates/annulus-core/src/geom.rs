use serde::{Deserialize, Serialize};

/// A point of the annulus with `x ∈ [0,1)`, `y ∈ [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

/// A point of the universal cover `ℝ × [0,1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LiftPoint {
    pub x: f64,
    pub y: f64,
}

impl Point {
    /// Normalises `x` into `[0,1)`; `y` is clamped to `[0,1]`.
    pub fn new(x: f64, y: f64) -> Self {
        Self { x: x.rem_euclid(1.0) % 1.0, y: y.clamp(0.0, 1.0) }
    }

    /// The lift with `x ∈ [0,1)`.
    pub fn lift(self) -> LiftPoint {
        LiftPoint { x: self.x, y: self.y }
    }
}

impl LiftPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn project(self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Deck transformation `T^k(x,y) = (x+k, y)`.
    pub fn deck(self, k: i64) -> Self {
        Self { x: self.x + k as f64, y: self.y }
    }

    /// Reflection `J(x,y) = (−x, y)`.
    pub fn reflect(self) -> Self {
        Self { x: -self.x, y: self.y }
    }

    pub fn dist(self, o: LiftPoint) -> f64 {
        (self.x - o.x).hypot(self.y - o.y)
    }

    /// Annulus distance between the projections.
    pub fn annulus_dist(self, o: LiftPoint) -> f64 {
        circle_norm(self.x - o.x).hypot(self.y - o.y)
    }
}

/// `‖x‖_{ℝ/ℤ} = d(x, ℤ) ∈ [0, 1/2]`.
pub fn circle_norm(x: f64) -> f64 {
    (x - x.round()).abs()
}

/// Representative of `x` mod 1 in `[−1/2, 1/2)`.
pub fn wrap_signed(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

pub fn annulus_distance(p: Point, q: Point) -> f64 {
    circle_norm(p.x - q.x).hypot(p.y - q.y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_norm_examples() {
        assert_eq!(circle_norm(0.5), 0.5);
        assert!((circle_norm(3.2) - 0.2).abs() < 1e-15);
        assert!((circle_norm(-0.1) - 0.1).abs() < 1e-15);
        assert_eq!(circle_norm(7.0), 0.0);
    }

    #[test]
    fn distance_examples() {
        let o = Point::new(0.0, 0.0);
        assert_eq!(annulus_distance(o, o), 0.0);
        assert!((annulus_distance(o, Point::new(0.9, 0.0)) - 0.1).abs() < 1e-15);
        assert!((annulus_distance(o, Point::new(0.5, 1.0)) - 1.25f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn normalisation() {
        let p = Point::new(-0.25, 0.3);
        assert_eq!(p.x, 0.75);
        assert!(Point::new(-1e-18, 0.0).x < 1.0);
        assert_eq!(LiftPoint::new(0.2, 0.1).deck(3).x, 3.2);
        assert_eq!(LiftPoint::new(0.2, 0.1).reflect().x, -0.2);
        assert_eq!(wrap_signed(0.75), -0.25);
        assert_eq!(wrap_signed(0.25), 0.25);
    }
}
