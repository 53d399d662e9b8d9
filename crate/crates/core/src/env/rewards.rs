//! Shaped reward terms. Each task state contributes at most one shaping term
//! per step; the collision penalty can join any of them. All distance inputs
//! arrive normalized (corner/line distances by `d_norm`, drop height by
//! `h_norm`), angles in degrees.

use super::collision::Contact;
use super::config::RewardConfig;
use crate::Scalar;

/// Per-step reward split by source. `total` is always the sum of the four
/// component fields.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardBreakdown {
    /// Approach shaping while maneuvering the grasped object (q = 1).
    pub approach: Scalar,
    /// One-off release bonus on the q 1 -> 2 transition.
    pub release: Scalar,
    /// Retract shaping after release (q = 2).
    pub retract: Scalar,
    /// Collision penalty, any task state.
    pub collision: Scalar,
    pub total: Scalar,
}

impl RewardBreakdown {
    pub fn new(approach: Scalar, release: Scalar, retract: Scalar, collision: Scalar) -> Self {
        RewardBreakdown {
            approach,
            release,
            retract,
            collision,
            total: approach + release + retract + collision,
        }
    }
}

/// Dense penalty while approaching: normalized corner and line distances plus
/// the orientation error, all pushed toward zero.
pub fn approach_reward(cfg: &RewardConfig, d_c: Scalar, d_l: Scalar, theta_err_deg: Scalar) -> Scalar {
    -cfg.alpha_n * (d_c + d_l) - cfg.alpha_theta * theta_err_deg.abs() / 180.0
}

/// One-off bonus when the gripper opens. Closeness terms saturate through
/// tanh; a vacuous constraint (no placed neighbor, no bordered line) enters
/// as distance 0 and therefore contributes its full bonus.
pub fn release_reward(cfg: &RewardConfig, d_c: Scalar, d_l: Scalar, d_drop: Scalar) -> Scalar {
    cfg.alpha_c * (1.0 - (cfg.beta_c * d_c).tanh()) + cfg.alpha_l * (1.0 - (cfg.beta_l * d_l).tanh())
        - cfg.alpha_d * d_drop
}

/// Retract shaping: penalizes movement of the released object and the
/// remaining distance to the retract goal. Inputs in mm.
pub fn retract_reward(cfg: &RewardConfig, object_moved_mm: Scalar, goal_distance_mm: Scalar) -> Scalar {
    -cfg.alpha_m * object_moved_mm / cfg.d_norm - cfg.alpha_g * goal_distance_mm / cfg.d_norm
}

/// Collision penalty. Contact classes are mutually exclusive with priority
/// placing-object > gripper-object > gripper-table when several fire at once.
pub fn collision_penalty(cfg: &RewardConfig, contacts: &[Contact]) -> Scalar {
    if contacts.iter().any(|c| matches!(c, Contact::PlacingObject { .. })) {
        -cfg.alpha_col_o
    } else if contacts.iter().any(|c| matches!(c, Contact::Gripper { .. })) {
        -cfg.alpha_col_r
    } else if contacts.contains(&Contact::Table) {
        -cfg.alpha_col_t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> RewardConfig {
        RewardConfig::default()
    }

    #[test]
    fn approach_hand_values() {
        assert!((approach_reward(&cfg(), 0.02, 0.0, 0.0) - (-0.002)).abs() < 1e-12);
        assert_eq!(approach_reward(&cfg(), 0.0, 0.0, 0.0), 0.0);
        assert!((approach_reward(&cfg(), 0.0, 0.0, 90.0) - (-0.05)).abs() < 1e-12);
        assert!((approach_reward(&cfg(), 0.0, 0.0, -90.0) - (-0.05)).abs() < 1e-12);
    }

    #[test]
    fn release_hand_values() {
        // Perfect release: both closeness bonuses in full, no drop penalty.
        assert_eq!(release_reward(&cfg(), 0.0, 0.0, 0.0), 9.0);
        let r = release_reward(&cfg(), 0.02, 0.0, 0.0);
        let expected = 3.0 * (1.0 - (0.06_f64).tanh()) + 6.0;
        assert!((r - expected).abs() < 1e-12);
        assert!((r - 8.8202).abs() < 5e-5);
        // Full-height drop subtracts alpha_d.
        assert_eq!(
            release_reward(&cfg(), 0.0, 0.0, 1.0),
            9.0 - 0.5
        );
    }

    #[test]
    fn retract_hand_values() {
        assert_eq!(retract_reward(&cfg(), 0.0, 0.0), 0.0);
        assert!((retract_reward(&cfg(), 0.0, 100.0) - (-0.01)).abs() < 1e-12);
        assert!((retract_reward(&cfg(), 10.0, 100.0) - (-0.015)).abs() < 1e-12);
    }

    #[test]
    fn collision_priority_and_exclusivity() {
        let c = cfg();
        assert_eq!(collision_penalty(&c, &[]), 0.0);
        assert_eq!(collision_penalty(&c, &[Contact::Table]), -1.0);
        assert_eq!(collision_penalty(&c, &[Contact::Gripper { other: 3 }]), -2.0);
        assert_eq!(
            collision_penalty(&c, &[Contact::PlacingObject { other: 1 }]),
            -2.0
        );
        // Highest-priority class wins; penalties never stack.
        let all = [
            Contact::Table,
            Contact::Gripper { other: 2 },
            Contact::PlacingObject { other: 1 },
        ];
        assert_eq!(collision_penalty(&c, &all), -c.alpha_col_o);
        let rt = [Contact::Table, Contact::Gripper { other: 2 }];
        assert_eq!(collision_penalty(&c, &rt), -c.alpha_col_r);
    }

    #[test]
    fn breakdown_total_is_component_sum() {
        let b = RewardBreakdown::new(-0.1, 0.0, 0.0, -2.0);
        assert_eq!(b.total, -2.1);
    }
}
