//! The five subcommands. Each validates its inputs up front, echoes the
//! effective config into the output directory, does the work, and prints a
//! one-line summary to stdout.

use std::path::Path;

use compact_place_core::agent::{load_checkpoint, train, AgentError, TrainerOptions};
use compact_place_core::baselines::{bl1_plan, bl2_plan, grasp_yaws, PlanMethod};
use compact_place_core::dataset::{generate_layout_series, layout_to_json, load_layout, Layout};
use compact_place_core::eval::{
    evaluate_suite, write_layout_rows, write_summary, AgentSource, EvalError, SuiteOptions,
};

use crate::config::AppConfig;
use crate::files::{self, Manifest, PlanFile, ResultFile, MANIFEST_VERSION, PLAN_VERSION};
use crate::parallel::parallel_map;
use crate::render::{render_svg, Scene};
use crate::{BaselineKind, CliError, EvalAgent};

/// Per-layout seed stream, shared by `baseline` and `eval` so a standalone
/// plan file matches what the evaluation suite executes internally.
fn layout_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add((index as u64) << 20)
}

fn agent_error(e: AgentError) -> CliError {
    match e {
        AgentError::Config(m) => CliError::Usage(format!("invalid training config: {m}")),
        AgentError::Checkpoint(m) => CliError::Data(format!("checkpoint: {m}")),
        AgentError::Io(m) => CliError::Runtime(format!("io: {m}")),
        other => CliError::Runtime(other.to_string()),
    }
}

fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Io(m) => CliError::Runtime(m),
        EvalError::NoLayouts => CliError::Usage("the layout list is empty".into()),
        other => CliError::Data(other.to_string()),
    }
}

pub fn cmd_gen(cfg: &AppConfig, out: &Path, n: usize) -> Result<(), CliError> {
    cfg.echo(out)?;
    let mut names = Vec::with_capacity(n);
    if n > 0 {
        let layouts = generate_layout_series(&cfg.generator, n).map_err(files::dataset_error)?;
        for (i, layout) in layouts.iter().enumerate() {
            let name = format!("layout_{i:03}.json");
            files::write_text(&out.join(&name), &layout_to_json(layout))?;
            names.push(name);
        }
    }
    let manifest = Manifest { version: MANIFEST_VERSION, layouts: names };
    files::write_json(&out.join("manifest.json"), &manifest)?;
    println!("gen: {n} layouts -> {}", out.display());
    Ok(())
}

pub fn cmd_train(
    cfg: &AppConfig,
    layouts: &Path,
    out: &Path,
    steps: Option<u64>,
    resume: Option<&Path>,
    verbose: bool,
) -> Result<(), CliError> {
    let arcs = files::load_layouts(layouts)?;
    if let Some(path) = resume {
        if !path.is_file() {
            return Err(CliError::Runtime(format!("checkpoint not found: {}", path.display())));
        }
    }
    cfg.echo(out)?;
    let mut tcfg = cfg.train.clone();
    if let Some(steps) = steps {
        tcfg.total_steps = steps;
    }
    let opts = TrainerOptions {
        log_csv: Some(out.join("train_log.csv")),
        checkpoint_path: Some(out.join("checkpoint.json")),
        stop_at_level: None,
        resume_from: resume.map(Path::to_path_buf),
    };
    let (_, report) = train(&arcs, &cfg.env, &tcfg, &opts).map_err(agent_error)?;
    if verbose {
        for p in &report.evals {
            eprintln!(
                "eval @ step {}: success {:.2}, return {:.2}, level {}",
                p.step, p.success_rate, p.mean_return, p.level
            );
        }
    }
    println!(
        "train: {} steps, {} episodes, final level {} -> {}",
        report.steps,
        report.episodes,
        report.final_level,
        out.display()
    );
    Ok(())
}

fn baseline_label(which: BaselineKind) -> &'static str {
    match which {
        BaselineKind::Bl1 => "BL1",
        BaselineKind::Bl2 => "BL2",
    }
}

fn plan_note(method: &PlanMethod) -> String {
    match method {
        PlanMethod::Scaling { k, scale } => format!("k={k}, scale={scale:.4}"),
        PlanMethod::FootprintShift { shift_iterations } => {
            let total: u64 = shift_iterations.iter().map(|&s| u64::from(s)).sum();
            format!("shifts={total}")
        }
        PlanMethod::Direct => "direct".into(),
    }
}

pub fn cmd_baseline(
    cfg: &AppConfig,
    which: BaselineKind,
    layouts: &Path,
    out: &Path,
    verbose: bool,
) -> Result<(), CliError> {
    let arcs = files::load_layouts(layouts)?;
    if arcs.is_empty() {
        return Err(CliError::Usage("the layout list is empty".into()));
    }
    cfg.echo(out)?;
    let base = cfg.train.seed;
    // Planning is independent per layout; writes happen afterwards in order.
    let plans: Vec<Result<PlanFile, String>> = parallel_map(&arcs, |i, layout| {
        let yaws = grasp_yaws(layout, layout_seed(base, i));
        let planned = match which {
            BaselineKind::Bl1 => bl1_plan(layout, &cfg.env, &yaws, &cfg.bl1),
            BaselineKind::Bl2 => bl2_plan(layout, &cfg.env.gripper, &yaws, &cfg.bl2),
        };
        planned
            .map(|plan| PlanFile {
                version: PLAN_VERSION,
                agent: baseline_label(which).to_string(),
                layout_seed: layout.config.seed,
                plan,
            })
            .map_err(|e| e.to_string())
    });
    let mut failures = 0usize;
    for (i, (entry, layout)) in plans.iter().zip(&arcs).enumerate() {
        match entry {
            Ok(file) => {
                files::write_json(&out.join(format!("plan_{i:03}.json")), file)?;
                if verbose {
                    eprintln!(
                        "layout {i} (seed {}): {}",
                        layout.config.seed,
                        plan_note(&file.plan.method)
                    );
                }
            }
            Err(msg) => {
                failures += 1;
                eprintln!("layout {i} (seed {}): {msg}", layout.config.seed);
            }
        }
    }
    if failures > 0 {
        return Err(CliError::Runtime(format!(
            "{failures} of {} layouts failed to plan",
            arcs.len()
        )));
    }
    println!("baseline {}: {} plans -> {}", baseline_label(which), arcs.len(), out.display());
    Ok(())
}

pub fn cmd_eval(
    cfg: &AppConfig,
    agent: EvalAgent,
    layouts: &Path,
    out: &Path,
    checkpoint: Option<&Path>,
    no_reference_lines: bool,
    verbose: bool,
) -> Result<(), CliError> {
    if no_reference_lines && agent != EvalAgent::Policy {
        return Err(CliError::Usage("--no-reference-lines only applies to --agent policy".into()));
    }
    let arcs = files::load_layouts(layouts)?;
    // Resolve the checkpoint before the suite runs so a bad path fails fast.
    let loaded = match (agent, checkpoint) {
        (EvalAgent::Policy, Some(path)) => Some(load_checkpoint(path).map_err(agent_error)?),
        (EvalAgent::Policy, None) => {
            return Err(CliError::Usage("--agent policy needs --checkpoint".into()))
        }
        _ => None,
    };
    cfg.echo(out)?;
    let source = match (&loaded, agent) {
        (_, EvalAgent::Oracle) => AgentSource::Oracle,
        (_, EvalAgent::Bl1) => AgentSource::Bl1(cfg.bl1),
        (_, EvalAgent::Bl2) => AgentSource::Bl2(cfg.bl2),
        (Some(ckpt), EvalAgent::Policy) => {
            AgentSource::Policy { policy: &ckpt.learner.policy, lines: !no_reference_lines }
        }
        (None, EvalAgent::Policy) => unreachable!("checkpoint resolved above"),
    };
    let opts = SuiteOptions { env: cfg.env.clone(), seed: cfg.train.seed, level: None };
    let outcome = evaluate_suite(&source, &arcs, &opts).map_err(eval_error)?;

    let stem = outcome.tag.label().to_lowercase();
    write_layout_rows(&out.join(format!("{stem}_layouts.csv")), outcome.tag, &outcome.rows)
        .map_err(eval_error)?;
    write_summary(&out.join(format!("{stem}_summary.json")), outcome.tag, &outcome.report)
        .map_err(eval_error)?;
    for (i, result) in outcome.results.iter().enumerate() {
        let file = ResultFile::from_result(result);
        files::write_json(&out.join(format!("{stem}_result_{i:03}.json")), &file)?;
    }
    if verbose {
        for (i, row) in outcome.rows.iter().enumerate() {
            eprintln!(
                "layout {i} (seed {}): bb {:.2}%, dist {:.2}mm, angle {:.2}deg, \
                 collisions {:.2}%",
                row.layout_seed,
                row.bb_increase_pct,
                row.mean_dist_mm,
                row.angle_diff_deg,
                row.collision_rate_pct
            );
        }
    }
    let r = &outcome.report;
    println!("eval {}: {} layouts -> {}", outcome.tag.label(), r.layouts, out.display());
    println!("  bb increase     {:.2} +/- {:.2} %", r.bb_increase_pct.mean, r.bb_increase_pct.std);
    println!("  mean distance   {:.2} +/- {:.2} mm", r.mean_dist_mm.mean, r.mean_dist_mm.std);
    println!("  angle diff      {:.2} +/- {:.2} deg", r.angle_diff_deg.mean, r.angle_diff_deg.std);
    println!("  collision rate  {:.2} % pooled", r.pooled_collision_rate_pct);
    Ok(())
}

pub fn cmd_render(
    cfg: &AppConfig,
    layout_path: &Path,
    result: Option<&Path>,
    plan: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let layout: Layout = load_layout(layout_path).map_err(|e| files::layout_error(layout_path, e))?;
    let result_file: Option<ResultFile> = result.map(files::read_json).transpose()?;
    let plan_file: Option<PlanFile> = plan.map(files::read_json).transpose()?;
    let overlays = [
        result_file.as_ref().map(|r| ("result", r.layout_seed)),
        plan_file.as_ref().map(|p| ("plan", p.layout_seed)),
    ];
    for (name, seed) in overlays.into_iter().flatten() {
        if seed != layout.config.seed {
            return Err(CliError::Data(format!(
                "{name} was produced for layout seed {seed}, not {}",
                layout.config.seed
            )));
        }
    }
    let scene = Scene {
        layout: &layout,
        result: result_file.as_ref(),
        plan: plan_file.as_ref(),
        gripper: &cfg.env.gripper,
    };
    let svg = render_svg(&scene)?;
    files::write_text(out, &svg)?;
    println!("render: {}", out.display());
    Ok(())
}
