//! Environment configuration: reward scaling factors, gripper geometry,
//! workspace bounds and the start-state curriculum.

use serde::{Deserialize, Serialize};

use super::EnvError;
use crate::Scalar;

/// Scaling factors for the shaped reward terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    /// Weight of the normalized corner and line distances while approaching.
    pub alpha_n: Scalar,
    /// Weight of the normalized orientation error while approaching.
    pub alpha_theta: Scalar,
    /// Release bonus scale for corner closeness.
    pub alpha_c: Scalar,
    /// Release bonus scale for line closeness.
    pub alpha_l: Scalar,
    /// Sharpness of the corner closeness bonus.
    pub beta_c: Scalar,
    /// Sharpness of the line closeness bonus.
    pub beta_l: Scalar,
    /// Penalty scale for the drop height at release.
    pub alpha_d: Scalar,
    /// Penalty scale for post-release movement of the placed object.
    pub alpha_m: Scalar,
    /// Penalty scale for the distance to the retract goal.
    pub alpha_g: Scalar,
    /// Collision penalty: placing object against a table object.
    pub alpha_col_o: Scalar,
    /// Collision penalty: gripper against a table object.
    pub alpha_col_r: Scalar,
    /// Collision penalty: gripper against the table surface.
    pub alpha_col_t: Scalar,
    /// Distance normalization scale in mm for reward and observation terms.
    pub d_norm: Scalar,
    /// When false, reference lines vanish: line observations and line
    /// distances are zero everywhere (ablation switch).
    pub use_reference_lines: bool,
}

impl Default for RewardConfig {
    fn default() -> Self {
        RewardConfig {
            alpha_n: 0.1,
            alpha_theta: 0.1,
            alpha_c: 3.0,
            alpha_l: 6.0,
            beta_c: 3.0,
            beta_l: 3.0,
            alpha_d: 0.5,
            alpha_m: 0.5,
            alpha_g: 0.1,
            alpha_col_o: 2.0,
            alpha_col_r: 2.0,
            alpha_col_t: 1.0,
            d_norm: 1000.0,
            use_reference_lines: true,
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        let weights = [
            self.alpha_n,
            self.alpha_theta,
            self.alpha_c,
            self.alpha_l,
            self.beta_c,
            self.beta_l,
            self.alpha_d,
            self.alpha_m,
            self.alpha_g,
            self.alpha_col_o,
            self.alpha_col_r,
            self.alpha_col_t,
        ];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(EnvError::Config("reward weights must be finite and >= 0".into()));
        }
        if !(self.d_norm.is_finite() && self.d_norm > 0.0) {
            return Err(EnvError::Config("d_norm must be positive".into()));
        }
        Ok(())
    }
}

/// Two-finger parallel gripper abstraction. The fingers are modeled as two
/// rectangular footprints whose outer faces sit at `opening_width / 2` on
/// either side of the tool center point, extending inward by `finger_width`
/// and spanning `finger_depth` across. Vertically the fingers cover
/// `[z - finger_length, z]` for EE height z; a grasped object hangs with its
/// top plane `palm_clearance` below the EE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GripperModel {
    pub finger_width: Scalar,
    pub finger_depth: Scalar,
    pub opening_width: Scalar,
    pub palm_clearance: Scalar,
    pub finger_length: Scalar,
    /// Depth of the palm housing footprint bridging the two fingers, used
    /// when projecting the whole gripper onto the table plane.
    pub palm_strip_depth: Scalar,
}

impl Default for GripperModel {
    fn default() -> Self {
        GripperModel {
            finger_width: 20.0,
            finger_depth: 40.0,
            opening_width: 85.0,
            palm_clearance: 10.0,
            finger_length: 25.0,
            palm_strip_depth: 30.0,
        }
    }
}

impl GripperModel {
    pub fn validate(&self) -> Result<(), EnvError> {
        let dims = [
            self.finger_width,
            self.finger_depth,
            self.opening_width,
            self.palm_clearance,
            self.finger_length,
            self.palm_strip_depth,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(EnvError::Config("gripper dimensions must be positive".into()));
        }
        if self.opening_width < 2.0 * self.finger_width {
            return Err(EnvError::Config("fingers overlap: opening_width < 2 * finger_width".into()));
        }
        Ok(())
    }

    /// EE height at which a grasped object of the given height rests on the
    /// table. Downward motion saturates here while the gripper is closed.
    pub fn seated_ee_z(&self, object_height: Scalar) -> Scalar {
        self.palm_clearance + object_height
    }
}

/// Start-state difficulty schedule. Level 0 spawns the EE a small clearance
/// above the seated pose at the target; the last level spawns it high above
/// the assembly center. Retract height scales alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CurriculumConfig {
    pub levels: u32,
    /// Start clearance above the seated EE height at the first / last level, mm.
    pub start_clearance_first: Scalar,
    pub start_clearance_last: Scalar,
    /// Absolute retract goal height at the first / last level, mm.
    pub retract_z_first: Scalar,
    pub retract_z_last: Scalar,
    /// Evaluation success rate that must be exceeded (strictly) to promote.
    pub promotion_threshold: Scalar,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        CurriculumConfig {
            levels: 22,
            start_clearance_first: 30.0,
            // A quarter of an 850 mm arm reach above the assembly.
            start_clearance_last: 212.5,
            retract_z_first: 30.0,
            retract_z_last: 80.0,
            promotion_threshold: 0.8,
        }
    }
}

/// Interpolated parameters of one curriculum level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurriculumLevel {
    /// Interpolation fraction in [0, 1]: 0 at level 0, 1 at the last level.
    pub fraction: Scalar,
    pub start_clearance: Scalar,
    pub retract_z: Scalar,
}

impl CurriculumConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.levels < 2 {
            return Err(EnvError::Config("curriculum needs at least 2 levels".into()));
        }
        let dims = [
            self.start_clearance_first,
            self.start_clearance_last,
            self.retract_z_first,
            self.retract_z_last,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(EnvError::Config("curriculum heights must be positive".into()));
        }
        if !(self.promotion_threshold > 0.0 && self.promotion_threshold < 1.0) {
            return Err(EnvError::Config("promotion threshold must lie in (0, 1)".into()));
        }
        Ok(())
    }

    pub fn max_level(&self) -> u32 {
        self.levels - 1
    }

    /// Linear interpolation of level parameters; `level` is clamped to range.
    pub fn level_params(&self, level: u32) -> CurriculumLevel {
        let t = Scalar::from(level.min(self.max_level())) / Scalar::from(self.max_level());
        CurriculumLevel {
            fraction: t,
            start_clearance: lerp(self.start_clearance_first, self.start_clearance_last, t),
            retract_z: lerp(self.retract_z_first, self.retract_z_last, t),
        }
    }

    /// Advances one level when the evaluation success rate strictly exceeds
    /// the threshold; saturates at the last level.
    pub fn update_level(&self, level: u32, success_rate: Scalar) -> u32 {
        if success_rate > self.promotion_threshold {
            (level + 1).min(self.max_level())
        } else {
            level
        }
    }
}

fn lerp(a: Scalar, b: Scalar, t: Scalar) -> Scalar {
    a + (b - a) * t
}

/// Full environment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EnvConfig {
    pub reward: RewardConfig,
    pub gripper: GripperModel,
    pub curriculum: CurriculumConfig,
    /// Maximum EE translation per step, mm.
    pub delta_max: Scalar,
    /// Maximum EE rotation per step, degrees.
    pub theta_max: Scalar,
    /// Maximum episode length in steps.
    pub n_ep: u32,
    /// Retract success tolerance around the goal, mm.
    pub eps_retract: Scalar,
    /// Drop height normalization scale, mm.
    pub h_norm: Scalar,
    /// Horizontal workspace half-extent around the layout center, mm.
    pub workspace_half_xy: Scalar,
    /// Workspace ceiling, mm (floor is the table at z = 0).
    pub workspace_z_max: Scalar,
}

impl Default for EnvConfig {
    fn default() -> Self {
        EnvConfig {
            reward: RewardConfig::default(),
            gripper: GripperModel::default(),
            curriculum: CurriculumConfig::default(),
            delta_max: 10.0,
            theta_max: 3.0,
            n_ep: 50,
            eps_retract: 5.0,
            h_norm: 100.0,
            workspace_half_xy: 500.0,
            workspace_z_max: 300.0,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.reward.validate()?;
        self.gripper.validate()?;
        self.curriculum.validate()?;
        let dims = [
            self.delta_max,
            self.theta_max,
            self.eps_retract,
            self.h_norm,
            self.workspace_half_xy,
            self.workspace_z_max,
        ];
        if dims.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return Err(EnvError::Config("environment scales must be positive".into()));
        }
        if self.n_ep == 0 {
            return Err(EnvError::Config("n_ep must be positive".into()));
        }
        if self.curriculum.retract_z_last >= self.workspace_z_max {
            return Err(EnvError::Config("retract height exceeds the workspace ceiling".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        EnvConfig::default().validate().unwrap();
    }

    #[test]
    fn level_interpolation_endpoints_and_midpoint() {
        let c = CurriculumConfig::default();
        let first = c.level_params(0);
        assert_eq!(first.start_clearance, 30.0);
        assert_eq!(first.retract_z, 30.0);
        let last = c.level_params(21);
        assert_eq!(last.start_clearance, 212.5);
        assert_eq!(last.retract_z, 80.0);
        // Levels interpolate linearly over 20 intermediate steps.
        let mid = c.level_params(7);
        let t = 7.0 / 21.0;
        assert!((mid.start_clearance - (30.0 + (212.5 - 30.0) * t)).abs() < 1e-12);
        assert!((mid.retract_z - (30.0 + 50.0 * t)).abs() < 1e-12);
        // Out-of-range levels clamp.
        assert_eq!(c.level_params(99), c.level_params(21));
    }

    #[test]
    fn promotion_is_strict_and_capped() {
        let c = CurriculumConfig::default();
        assert_eq!(c.update_level(0, 0.85), 1);
        assert_eq!(c.update_level(0, 0.8), 0);
        assert_eq!(c.update_level(21, 0.9), 21);
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut cfg = EnvConfig::default();
        cfg.reward.alpha_c = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = EnvConfig::default();
        cfg.gripper.opening_width = 30.0;
        assert!(cfg.validate().is_err(), "fingers would overlap");

        let mut cfg = EnvConfig::default();
        cfg.curriculum.promotion_threshold = 1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = EnvConfig::default();
        cfg.n_ep = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = EnvConfig::default();
        let json = serde_json::to_string_pretty(&cfg).unwrap();
        let back: EnvConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(cfg, back);
        // Partial documents fill in defaults.
        let partial: EnvConfig = serde_json::from_str("{\"n_ep\": 10}").unwrap();
        assert_eq!(partial.n_ep, 10);
        assert_eq!(partial.reward, RewardConfig::default());
    }
}
