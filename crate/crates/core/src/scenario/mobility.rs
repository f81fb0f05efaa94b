use std::f64::consts::PI;

use crate::geom::Point;
use crate::kernel::{RandomStream, SimTime};

/// Circular sink path around a randomly drawn centre.
#[derive(Debug, Clone, PartialEq)]
pub struct SinkTrajectory {
    pub center: Point,
    pub radius: f64,
    pub angular_speed: f64,
    pub update_period: SimTime,
    pub side: f64,
}

impl SinkTrajectory {
    /// Radius `side * radius_fraction`, one revolution per `duration`.
    pub fn random(side: f64, radius_fraction: f64, duration: SimTime, update_period: SimTime, rng: &mut RandomStream) -> Self {
        let center = Point::new(rng.uniform() * side, rng.uniform() * side);
        Self {
            center,
            radius: side * radius_fraction,
            angular_speed: 2.0 * PI / duration,
            update_period,
            side,
        }
    }

    /// Position at time `t`, clipped into the deployment square.
    pub fn position(&self, t: SimTime) -> Point {
        let angle = self.angular_speed * t;
        Point::new(
            self.center.x + self.radius * angle.cos(),
            self.center.y + self.radius * angle.sin(),
        )
        .clipped(self.side)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn traj() -> SinkTrajectory {
        SinkTrajectory {
            center: Point::new(70.0, 70.0),
            radius: 35.0,
            angular_speed: 2.0 * PI / 100.0,
            update_period: 1.0,
            side: 140.0,
        }
    }

    #[test]
    fn starts_east_of_centre() {
        assert_eq!(traj().position(0.0), Point::new(105.0, 70.0));
    }

    #[test]
    fn half_period_is_opposite() {
        let t = traj();
        let p = t.position(PI / t.angular_speed);
        assert!((p.x - 35.0).abs() < 1e-9 && (p.y - 70.0).abs() < 1e-9);
    }

    #[test]
    fn clipped_to_square() {
        let t = SinkTrajectory {
            center: Point::new(130.0, 5.0),
            ..traj()
        };
        let p = t.position(0.0);
        assert_eq!(p, Point::new(140.0, 5.0));
        let q = t.position(75.0);
        assert_eq!(q.y, 0.0);
    }
}
