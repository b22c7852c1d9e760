use std::f64::consts::TAU;

use crate::sim::RngStream;

/// 2-D random walk inside a reflective disc centred on the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    pub position: [f64; 2],
    pub speed_mps: f64,
    /// Heading in radians.
    pub direction: f64,
    pub bounds_radius_m: f64,
    pub epoch_s: f64,
    /// Time left before the heading is redrawn.
    pub until_turn_s: f64,
}

impl MobilityState {
    pub fn stationary(position: [f64; 2]) -> Self {
        MobilityState {
            position,
            speed_mps: 0.0,
            direction: 0.0,
            bounds_radius_m: f64::INFINITY,
            epoch_s: f64::INFINITY,
            until_turn_s: f64::INFINITY,
        }
    }

    pub fn random_walk(position: [f64; 2], speed_mps: f64, epoch_s: f64, bounds_radius_m: f64, rng: &mut RngStream) -> Self {
        MobilityState {
            position,
            speed_mps,
            direction: rng.uniform() * TAU,
            bounds_radius_m,
            epoch_s,
            until_turn_s: epoch_s,
        }
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.position[0] - p[0]).hypot(self.position[1] - p[1])
    }
}

/// Advances the walk by `dt`. The heading is redrawn uniformly at each epoch
/// boundary; the disc wall reflects specularly.
pub fn walk_step(state: &MobilityState, dt: f64, rng: &mut RngStream) -> MobilityState {
    debug_assert!(dt > 0.0);
    let mut s = state.clone();
    if s.speed_mps == 0.0 {
        return s;
    }
    s.until_turn_s -= dt;
    if s.until_turn_s <= 1e-12 {
        s.direction = rng.uniform() * TAU;
        s.until_turn_s += s.epoch_s;
    }
    let r = s.bounds_radius_m;
    let [mut x, mut y] = s.position;
    let (mut ux, mut uy) = (s.direction.cos(), s.direction.sin());
    let mut left = s.speed_mps * dt;
    for _ in 0..16 {
        // distance along the heading to the wall: |p + t u| = r
        let b = x * ux + y * uy;
        let c = x * x + y * y - r * r;
        let t_exit = -b + (b * b - c).max(0.0).sqrt();
        if left <= t_exit {
            x += left * ux;
            y += left * uy;
            break;
        }
        x += t_exit * ux;
        y += t_exit * uy;
        left -= t_exit;
        let norm = x.hypot(y);
        let (nx, ny) = (x / norm, y / norm);
        let dot = ux * nx + uy * ny;
        ux -= 2.0 * dot * nx;
        uy -= 2.0 * dot * ny;
    }
    let norm = x.hypot(y);
    if norm > r {
        x *= r / norm;
        y *= r / norm;
    }
    s.position = [x, y];
    s.direction = uy.atan2(ux).rem_euclid(TAU);
    s
}
