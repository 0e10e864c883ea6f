use rand::Rng;

use super::params::SimParams;

/// Largest speed that keeps the follower collision-free behind a leader
/// moving at `v_leader` with `gap` meters of net headroom:
///
/// `v_safe = v_l + (gap − v_l·τ) / (τ + v̄/b)`, `v̄ = (v_l + v_f)/2`,
///
/// clamped below at zero. The result is deliberately not capped above;
/// [`update_speed`] applies the speed limit.
pub fn safe_speed(v_follower: f64, v_leader: f64, gap: f64, params: &SimParams) -> f64 {
    let tau = params.reaction_time;
    let mean_speed = 0.5 * (v_leader + v_follower);
    let v = v_leader + (gap - v_leader * tau) / (tau + mean_speed / params.decel);
    v.max(0.0)
}

/// One car-following speed update: accelerate toward `v_max`, cap by the
/// safe speed, then subtract the random imperfection term `σ·a·η` with
/// `η ~ U[0,1]`. With `σ = 0` the update is deterministic and the
/// generator is left untouched.
pub fn update_speed<R: Rng>(
    speed: f64,
    leader_speed: f64,
    gap: f64,
    params: &SimParams,
    rng: &mut R,
) -> f64 {
    let desired = (speed + params.accel * params.time_step)
        .min(params.v_max)
        .min(safe_speed(speed, leader_speed, gap, params));
    let slowdown = if params.driver_imperfection > 0.0 {
        params.driver_imperfection * params.accel * rng.random::<f64>()
    } else {
        0.0
    };
    (desired - slowdown).max(0.0)
}

#[cfg(test)]
mod tests {
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn params() -> SimParams {
        SimParams::default()
    }

    #[test]
    fn zero_gap_stationary_leader_forces_zero() {
        assert_eq!(safe_speed(10.0, 0.0, 0.0, &params()), 0.0);
    }

    #[test]
    fn safe_speed_hand_evaluated() {
        // v_l + (gap − v_l·τ)/(τ + v̄/b) = 5 + 15/(1 + 7.5/4.5)
        assert_relative_eq!(
            safe_speed(10.0, 5.0, 20.0, &params()),
            10.625,
            epsilon = 1e-12
        );
    }

    #[test]
    fn safe_speed_is_unclamped_above() {
        // Both at rest, huge gap: gap/(τ + 0) = 100.
        assert_relative_eq!(
            safe_speed(0.0, 0.0, 100.0, &params()),
            100.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn update_accelerates_from_rest_on_free_road() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = update_speed(0.0, params().v_max, f64::INFINITY, &params(), &mut rng);
        assert_relative_eq!(v, 2.6, epsilon = 1e-12);
    }

    #[test]
    fn update_caps_at_v_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let v = update_speed(13.42, params().v_max, f64::INFINITY, &params(), &mut rng);
        assert_relative_eq!(v, 13.42, epsilon = 1e-12);
    }

    #[test]
    fn update_stops_behind_stationary_leader_at_zero_gap() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(update_speed(5.0, 0.0, 0.0, &params(), &mut rng), 0.0);
    }

    #[test]
    fn sigma_zero_leaves_rng_untouched() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = a.clone();
        update_speed(3.0, 2.0, 10.0, &params(), &mut a);
        assert_eq!(a.random::<u64>(), b.random::<u64>());
    }

    #[test]
    fn sigma_slowdown_stays_nonnegative() {
        let mut p = params();
        p.driver_imperfection = 1.0;
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let v = update_speed(0.0, 0.0, 0.2, &p, &mut rng);
            assert!(v >= 0.0);
        }
    }
}
