//! Batch evaluation: run one agent over a set of layouts, score every
//! assembly, and aggregate the scores into a report plus flat files.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::SquashedGaussianPolicy;
use crate::baselines::{
    bl1_plan, bl2_plan, execute_plan, grasp_yaws, Bl1Params, Bl2Params, PlanMethod,
};
use crate::dataset::Layout;
use crate::env::{Action, EnvConfig, PlacementEnv, ResetScenario};
use crate::Scalar;

use super::{
    metric_angle_diff, metric_bb_increase, metric_bb_increase_centroids, metric_collision_rate,
    metric_mean_object_distance, AgentTag, AssemblyResult, CollisionEvent, EvalError,
};

/// Sample mean and sample standard deviation (n - 1; zero below two values).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: Scalar,
    pub std: Scalar,
}

impl Summary {
    pub fn of(values: &[Scalar]) -> Summary {
        let n = values.len();
        if n == 0 {
            return Summary { mean: 0.0, std: 0.0 };
        }
        let mean = values.iter().sum::<Scalar>() / n as Scalar;
        let std = if n < 2 {
            0.0
        } else {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<Scalar>() / (n - 1) as Scalar)
                .sqrt()
        };
        Summary { mean, std }
    }
}

/// Scores of one layout's assembly.
#[derive(Debug, Clone, PartialEq)]
pub struct LayoutRow {
    pub layout_seed: u64,
    /// Placement episodes attempted (one per sequence fragment).
    pub episodes: usize,
    pub bb_increase_pct: Scalar,
    /// None when the placed set's layout centroids are collinear.
    pub bb_increase_centroids_pct: Option<Scalar>,
    pub mean_dist_mm: Scalar,
    pub angle_diff_deg: Scalar,
    pub collision_rate_pct: Scalar,
    /// Scale step the scaling baseline settled on.
    pub plan_k: Option<u32>,
    /// Total shift iterations the footprint baseline spent.
    pub plan_shifts: Option<u64>,
}

/// Aggregated scores over every layout of a suite run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub layouts: usize,
    pub bb_increase_pct: Summary,
    /// Present only when every layout produced the centroid variant.
    pub bb_increase_centroids_pct: Option<Summary>,
    pub mean_dist_mm: Summary,
    pub angle_diff_deg: Summary,
    /// Mean and spread of the per-layout collision percentages.
    pub collision_rate_pct: Summary,
    /// Collision percentage pooled over every placement episode of the run.
    pub pooled_collision_rate_pct: Scalar,
}

/// Which agent assembles the layouts.
pub enum AgentSource<'a> {
    /// Teleports every fragment to its layout pose; scores the metric floor.
    Oracle,
    Bl1(Bl1Params),
    Bl2(Bl2Params),
    /// Greedy rollouts of a trained policy; `lines: false` runs the ablation
    /// with the reference-line observations and rewards disabled.
    Policy { policy: &'a SquashedGaussianPolicy, lines: bool },
}

impl AgentSource<'_> {
    pub fn tag(&self) -> AgentTag {
        match self {
            AgentSource::Oracle => AgentTag::Oracle,
            AgentSource::Bl1(_) => AgentTag::Bl1,
            AgentSource::Bl2(_) => AgentTag::Bl2,
            AgentSource::Policy { lines: true, .. } => AgentTag::Our,
            AgentSource::Policy { lines: false, .. } => AgentTag::NoLines,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SuiteOptions {
    pub env: EnvConfig,
    /// Base seed for baseline grasp yaws and policy spawn scenarios.
    pub seed: u64,
    /// Curriculum level for policy spawns; None means the hardest level.
    pub level: Option<u32>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { env: EnvConfig::default(), seed: 0, level: None }
    }
}

/// Everything a suite run produced: raw assemblies, per-layout scores, and
/// the aggregate report.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteOutcome {
    pub tag: AgentTag,
    pub rows: Vec<LayoutRow>,
    pub results: Vec<AssemblyResult>,
    pub report: MetricReport,
}

fn oracle_result(layout: &Layout) -> AssemblyResult {
    AssemblyResult {
        layout_seed: layout.config.seed,
        tag: AgentTag::Oracle,
        placed: layout.fragments.iter().map(|f| (f.id, f.layout_pose)).collect(),
        collisions: vec![],
        success: layout.fragments.iter().map(|f| (f.id, true)).collect(),
    }
}

/// Assembles one layout fragment by fragment with greedy policy actions.
/// Each episode spawns exactly like training at the given level, except that
/// the table holds the policy's own placements instead of the layout poses,
/// so placement errors compound the way they would on a real run. If the
/// step budget runs out while the object is still grasped, the last action
/// is forced to open so the episode always ends with the fragment either on
/// the table or excused by a contact.
fn rollout_policy(
    policy: &SquashedGaussianPolicy,
    layout: &Arc<Layout>,
    config: EnvConfig,
    level: Option<u32>,
    seed: u64,
    tag: AgentTag,
) -> Result<AssemblyResult, EvalError> {
    let mut env = PlacementEnv::new(layout.clone(), config)?;
    let level = level.unwrap_or_else(|| env.config().curriculum.max_level());
    let params = env.config().curriculum.level_params(level);
    let center = env.workspace_center();
    let n_ep = env.config().n_ep;

    let mut placed = BTreeMap::new();
    let mut collisions = Vec::new();
    let mut success = BTreeMap::new();

    for (idx, &id) in layout.sequence.iter().enumerate() {
        let fragment = layout.fragment(id).expect("validated layout");
        // Same draw order as a training reset: object yaw, then EE yaw.
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(idx as u64));
        let theta_place = rng.gen_range(-90.0..=90.0);
        let theta_ee = rng.gen_range(-90.0..=90.0);
        let place = fragment.layout_pose.translation();
        let t = params.fraction;
        let seat = env.config().gripper.seated_ee_z(fragment.height);

        let mut obs = env.reset_with(ResetScenario {
            placing_id: id,
            table_poses: placed.clone(),
            ee_x: place.x + (center.x - place.x) * t,
            ee_y: place.y + (center.y - place.y) * t,
            ee_z: seat + params.start_clearance,
            theta_ee,
            theta_place,
            retract_z: params.retract_z,
        })?;

        let mut episode_success = false;
        for step in 0..n_ep {
            let a = policy.mean_action(&obs);
            let mut action = Action::from_array([a[0], a[1], a[2], a[3], a[4]]);
            if step + 1 == n_ep && env.q() == Some(1) {
                action.open_cmd = 1.0;
            }
            let out = env.step(action)?;
            for contact in &out.info.contacts {
                collisions.push(CollisionEvent { fragment: id, contact: *contact });
            }
            obs = out.observation;
            if out.done {
                episode_success = out.info.success;
                break;
            }
        }

        if let Some(pose) = env.table_poses().and_then(|t| t.get(&id)) {
            placed.insert(id, *pose);
        }
        success.insert(id, episode_success);
    }

    Ok(AssemblyResult { layout_seed: layout.config.seed, tag, placed, collisions, success })
}

fn score_layout(
    result: &AssemblyResult,
    layout: &Layout,
    plan_k: Option<u32>,
    plan_shifts: Option<u64>,
) -> Result<LayoutRow, EvalError> {
    let centroids = match metric_bb_increase_centroids(result, layout) {
        Ok(v) => Some(v),
        Err(EvalError::DegenerateReference) => None,
        Err(e) => return Err(e),
    };
    let row = LayoutRow {
        layout_seed: result.layout_seed,
        episodes: result.success.len(),
        bb_increase_pct: metric_bb_increase(result, layout)?,
        bb_increase_centroids_pct: centroids,
        mean_dist_mm: metric_mean_object_distance(result, layout)?,
        angle_diff_deg: metric_angle_diff(result, layout)?,
        collision_rate_pct: metric_collision_rate(std::slice::from_ref(result))?,
        plan_k,
        plan_shifts,
    };
    debug_assert!((0.0..=100.0).contains(&row.collision_rate_pct));
    debug_assert!(row.bb_increase_pct >= -100.0);
    Ok(row)
}

fn aggregate(rows: &[LayoutRow], results: &[AssemblyResult]) -> Result<MetricReport, EvalError> {
    let column = |f: fn(&LayoutRow) -> Scalar| rows.iter().map(f).collect::<Vec<_>>();
    let centroid_values: Vec<Scalar> =
        rows.iter().filter_map(|r| r.bb_increase_centroids_pct).collect();
    Ok(MetricReport {
        layouts: rows.len(),
        bb_increase_pct: Summary::of(&column(|r| r.bb_increase_pct)),
        bb_increase_centroids_pct: (centroid_values.len() == rows.len())
            .then(|| Summary::of(&centroid_values)),
        mean_dist_mm: Summary::of(&column(|r| r.mean_dist_mm)),
        angle_diff_deg: Summary::of(&column(|r| r.angle_diff_deg)),
        collision_rate_pct: Summary::of(&column(|r| r.collision_rate_pct)),
        pooled_collision_rate_pct: metric_collision_rate(results)?,
    })
}

/// Runs one agent over every layout and scores the assemblies. Baseline
/// grasp yaws and policy spawns derive from `opts.seed` plus the layout
/// index, so a rerun with the same inputs reproduces the outcome bit for
/// bit.
pub fn evaluate_suite(
    source: &AgentSource<'_>,
    layouts: &[Arc<Layout>],
    opts: &SuiteOptions,
) -> Result<SuiteOutcome, EvalError> {
    if layouts.is_empty() {
        return Err(EvalError::NoLayouts);
    }
    let tag = source.tag();
    let mut rows = Vec::with_capacity(layouts.len());
    let mut results = Vec::with_capacity(layouts.len());

    for (li, layout) in layouts.iter().enumerate() {
        let layout_seed = opts.seed.wrapping_add((li as u64) << 20);
        let (result, plan_k, plan_shifts) = match source {
            AgentSource::Oracle => (oracle_result(layout), None, None),
            AgentSource::Bl1(params) => {
                let yaws = grasp_yaws(layout, layout_seed);
                let plan = bl1_plan(layout, &opts.env, &yaws, params)?;
                let k = match plan.method {
                    PlanMethod::Scaling { k, .. } => Some(k),
                    _ => None,
                };
                (execute_plan(layout, &opts.env, &plan, tag)?, k, None)
            }
            AgentSource::Bl2(params) => {
                let yaws = grasp_yaws(layout, layout_seed);
                let plan = bl2_plan(layout, &opts.env.gripper, &yaws, params)?;
                let shifts = match &plan.method {
                    PlanMethod::FootprintShift { shift_iterations } => {
                        Some(shift_iterations.iter().map(|&s| u64::from(s)).sum())
                    }
                    _ => None,
                };
                (execute_plan(layout, &opts.env, &plan, tag)?, None, shifts)
            }
            AgentSource::Policy { policy, lines } => {
                let mut config = opts.env.clone();
                config.reward.use_reference_lines = *lines;
                (rollout_policy(policy, layout, config, opts.level, layout_seed, tag)?, None, None)
            }
        };
        result.validate(layout)?;
        rows.push(score_layout(&result, layout, plan_k, plan_shifts)?);
        results.push(result);
    }

    let report = aggregate(&rows, &results)?;
    Ok(SuiteOutcome { tag, rows, results, report })
}

/// Writes the per-layout scores as CSV. Floats print with the shortest
/// round-trip representation, so recomputing the report from this file
/// reproduces it exactly.
pub fn write_layout_rows(path: &Path, tag: AgentTag, rows: &[LayoutRow]) -> Result<(), EvalError> {
    let mut out = String::from(
        "layout_seed,agent,episodes,bb_increase_pct,bb_increase_centroids_pct,\
         mean_dist_mm,angle_diff_deg,collision_rate_pct,plan\n",
    );
    for r in rows {
        let centroids =
            r.bb_increase_centroids_pct.map(|v| v.to_string()).unwrap_or_default();
        let plan = match (r.plan_k, r.plan_shifts) {
            (Some(k), _) => format!("k={k}"),
            (None, Some(s)) => format!("shifts={s}"),
            (None, None) => String::new(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.layout_seed,
            tag,
            r.episodes,
            r.bb_increase_pct,
            centroids,
            r.mean_dist_mm,
            r.angle_diff_deg,
            r.collision_rate_pct,
            plan,
        ));
    }
    write_file(path, out.as_bytes())
}

#[derive(Serialize)]
struct SummaryFile<'a> {
    version: u32,
    agent: &'a str,
    report: &'a MetricReport,
}

/// Writes the aggregate report as pretty JSON with a version field.
pub fn write_summary(path: &Path, tag: AgentTag, report: &MetricReport) -> Result<(), EvalError> {
    let file = SummaryFile { version: 1, agent: tag.label(), report };
    let body = serde_json::to_string_pretty(&file)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    write_file(path, format!("{body}\n").as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), EvalError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| EvalError::Io(format!("{}: {e}", dir.display())))?;
        }
    }
    let mut f = std::fs::File::create(path)
        .map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))?;
    f.write_all(bytes).map_err(|e| EvalError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::fixtures::two_square_layout;
    use crate::dataset::{generate_layout_series, GeneratorConfig};
    use approx::assert_abs_diff_eq;

    fn layouts(n: usize) -> Vec<Arc<Layout>> {
        generate_layout_series(&GeneratorConfig::default(), n)
            .unwrap()
            .into_iter()
            .map(Arc::new)
            .collect()
    }

    #[test]
    fn oracle_scores_the_floor_on_every_layout() {
        let layouts = layouts(3);
        let outcome =
            evaluate_suite(&AgentSource::Oracle, &layouts, &SuiteOptions::default()).unwrap();
        assert_eq!(outcome.tag, AgentTag::Oracle);
        assert_eq!(outcome.rows.len(), 3);
        for (row, layout) in outcome.rows.iter().zip(&layouts) {
            assert_eq!(row.episodes, layout.sequence.len());
            assert_eq!(row.bb_increase_pct, 0.0);
            assert_eq!(row.bb_increase_centroids_pct, Some(0.0));
            assert_eq!(row.mean_dist_mm, 0.0);
            assert_eq!(row.angle_diff_deg, 0.0);
            assert_eq!(row.collision_rate_pct, 0.0);
        }
        assert_eq!(outcome.report.pooled_collision_rate_pct, 0.0);
        assert_eq!(outcome.report.bb_increase_pct, Summary { mean: 0.0, std: 0.0 });
    }

    #[test]
    fn scaling_baseline_rows_follow_the_closed_forms() {
        let layouts = layouts(2);
        let opts = SuiteOptions::default();
        let outcome =
            evaluate_suite(&AgentSource::Bl1(Bl1Params::default()), &layouts, &opts).unwrap();

        for (row, layout) in outcome.rows.iter().zip(&layouts) {
            let k = row.plan_k.expect("scaling plan records k") as Scalar;
            let s = 1.0 + 0.1 * k;
            let bb = row.bb_increase_centroids_pct.expect("generated layouts are 2d");
            let bb_law = (s * s - 1.0) * 100.0;
            assert!((bb - bb_law).abs() <= 1e-6 * bb_law.abs(), "bb {bb} vs {bb_law}");

            let dist_law = (s - 1.0) * layout.mean_nearest_centroid_distance();
            assert!(
                (row.mean_dist_mm - dist_law).abs() <= 1e-6 * dist_law.abs(),
                "dist {} vs {dist_law}",
                row.mean_dist_mm
            );

            assert_eq!(row.angle_diff_deg, 0.0);
            assert_eq!(row.collision_rate_pct, 0.0);
            // The vertex box grows, but less than the centroid box.
            assert!(row.bb_increase_pct > 0.0 && row.bb_increase_pct < bb);
        }
        for result in &outcome.results {
            assert!(result.collision_free() && result.all_successful());
        }
    }

    #[test]
    fn footprint_baseline_places_everything_cleanly() {
        let layouts = layouts(2);
        let outcome = evaluate_suite(
            &AgentSource::Bl2(Bl2Params::default()),
            &layouts,
            &SuiteOptions::default(),
        )
        .unwrap();
        assert_eq!(outcome.report.pooled_collision_rate_pct, 0.0);
        for (row, result) in outcome.rows.iter().zip(&outcome.results) {
            assert!(row.plan_shifts.is_some());
            assert!(row.mean_dist_mm >= 0.0);
            assert!(result.all_successful());
        }
    }

    #[test]
    fn policy_rollouts_cover_every_fragment_and_repeat_exactly() {
        let layout = Arc::new(two_square_layout());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let policy = SquashedGaussianPolicy::new(crate::env::OBS_LEN, 5, &[16, 16], &mut rng);
        let opts = SuiteOptions { seed: 9, level: Some(0), ..SuiteOptions::default() };
        let source = AgentSource::Policy { policy: &policy, lines: true };

        let a = evaluate_suite(&source, std::slice::from_ref(&layout), &opts).unwrap();
        assert_eq!(a.tag, AgentTag::Our);
        assert_eq!(a.rows.len(), 1);
        assert_eq!(a.rows[0].episodes, 2);
        a.results[0].validate(&layout).unwrap();

        let b = evaluate_suite(&source, std::slice::from_ref(&layout), &opts).unwrap();
        assert_eq!(a.rows, b.rows);
        assert_eq!(a.results, b.results);
        assert_eq!(a.report, b.report);

        let no_lines = AgentSource::Policy { policy: &policy, lines: false };
        let c = evaluate_suite(&no_lines, std::slice::from_ref(&layout), &opts).unwrap();
        assert_eq!(c.tag, AgentTag::NoLines);
    }

    #[test]
    fn report_recomputes_from_the_rows() {
        let layouts = layouts(3);
        let outcome = evaluate_suite(
            &AgentSource::Bl1(Bl1Params::default()),
            &layouts,
            &SuiteOptions::default(),
        )
        .unwrap();
        let bb: Vec<Scalar> = outcome.rows.iter().map(|r| r.bb_increase_pct).collect();
        let again = Summary::of(&bb);
        assert_abs_diff_eq!(again.mean, outcome.report.bb_increase_pct.mean, epsilon = 1e-12);
        assert_abs_diff_eq!(again.std, outcome.report.bb_increase_pct.std, epsilon = 1e-12);

        // Pooled collisions weight rows by episode count.
        let total: usize = outcome.rows.iter().map(|r| r.episodes).sum();
        let pooled: Scalar = outcome
            .rows
            .iter()
            .map(|r| r.collision_rate_pct * r.episodes as Scalar)
            .sum::<Scalar>()
            / total as Scalar;
        assert_abs_diff_eq!(pooled, outcome.report.pooled_collision_rate_pct, epsilon = 1e-12);
    }

    #[test]
    fn flat_files_are_deterministic_and_recompute_the_report() {
        let layouts = layouts(2);
        let outcome = evaluate_suite(
            &AgentSource::Bl1(Bl1Params::default()),
            &layouts,
            &SuiteOptions::default(),
        )
        .unwrap();

        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("bl1_layouts.csv");
        let json_path = dir.path().join("bl1_summary.json");
        write_layout_rows(&csv_path, outcome.tag, &outcome.rows).unwrap();
        write_summary(&json_path, outcome.tag, &outcome.report).unwrap();

        let csv = std::fs::read_to_string(&csv_path).unwrap();
        let mut lines = csv.lines();
        let header = lines.next().unwrap();
        assert!(header.starts_with("layout_seed,agent,"));
        let mut bb = Vec::new();
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[1], "BL1");
            assert!(fields[8].starts_with("k="));
            bb.push(fields[3].parse::<Scalar>().unwrap());
        }
        // Shortest round-trip floats reproduce the report exactly.
        let again = Summary::of(&bb);
        assert_eq!(again.mean, outcome.report.bb_increase_pct.mean);
        assert_eq!(again.std, outcome.report.bb_increase_pct.std);

        let parsed: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
        assert_eq!(parsed["version"], 1);
        assert_eq!(parsed["agent"], "BL1");
        assert_eq!(parsed["report"]["layouts"], 2);

        write_layout_rows(&csv_path, outcome.tag, &outcome.rows).unwrap();
        assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), csv);
    }

    #[test]
    fn empty_layout_lists_are_rejected() {
        let err = evaluate_suite(&AgentSource::Oracle, &[], &SuiteOptions::default());
        assert!(matches!(err, Err(EvalError::NoLayouts)));
    }
}
