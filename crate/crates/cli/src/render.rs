//! Deterministic top-down SVG drawings. Fragments are the only `<polygon>`
//! elements (one per fragment), so a parse of the file counts the assembly;
//! reference lines, corner markers, and footprint outlines use other shapes.

use compact_place_core::baselines::gripper_footprint;
use compact_place_core::dataset::Layout;
use compact_place_core::env::GripperModel;
use compact_place_core::{Point2, Pose2, Scalar};

use crate::files::{PlanFile, ResultFile};
use crate::CliError;

const MARGIN: Scalar = 15.0;
const FILLS: [&str; 8] =
    ["#9ecae1", "#a1d99b", "#fdae6b", "#bcbddc", "#fc9272", "#c7e9c0", "#fee391", "#d9d9d9"];

/// What to draw: the layout alone, optionally replaced by executed poses,
/// optionally overlaid with planned gripper footprints.
pub struct Scene<'a> {
    pub layout: &'a Layout,
    pub result: Option<&'a ResultFile>,
    pub plan: Option<&'a PlanFile>,
    pub gripper: &'a GripperModel,
}

struct Drawn {
    /// (fragment polygon world vertices, fill, collided, ghost)
    fragments: Vec<(Vec<Point2>, &'static str, bool, bool)>,
    corner_dots: Vec<Point2>,
    footprints: Vec<Vec<Point2>>,
}

fn fmt(v: Scalar) -> String {
    let s = format!("{v:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn build(scene: &Scene) -> Result<Drawn, CliError> {
    let layout = scene.layout;
    let collided: Vec<u32> =
        scene.result.map(|r| r.collided_fragments()).unwrap_or_default();
    let pose_of = |id: u32| -> Option<Pose2> {
        match scene.result {
            Some(r) => r.placed.get(&id).map(|p| Pose2::new(p.x, p.y, p.theta)),
            None => layout.fragment(id).map(|f| f.layout_pose),
        }
    };

    let mut fragments = Vec::with_capacity(layout.fragments.len());
    for f in &layout.fragments {
        let fill = FILLS[f.id as usize % FILLS.len()];
        let hit = collided.contains(&f.id);
        // A fragment its episode never released shows as a ghost outline at
        // the layout pose.
        let (pose, ghost) = match pose_of(f.id) {
            Some(p) => (p, false),
            None => (f.layout_pose, true),
        };
        fragments.push((f.shape.world_vertices(&pose), fill, hit, ghost));
    }

    let mut corner_dots = Vec::new();
    for (&(a, _b), pairs) in &layout.corners {
        if let Some(pose) = pose_of(a) {
            for pair in pairs {
                corner_dots.push(pose.apply(pair.on_a));
            }
        }
    }

    let mut footprints = Vec::new();
    if let Some(plan) = scene.plan {
        for p in &plan.plan.placements {
            let fragment = layout
                .fragment(p.id)
                .ok_or_else(|| CliError::Data(format!("plan names unknown fragment {}", p.id)))?;
            let hull = gripper_footprint(&fragment.shape, p.grasp_yaw, scene.gripper, 0.0)
                .map_err(|e| CliError::Data(format!("footprint for fragment {}: {e}", p.id)))?;
            footprints.push(hull.world_vertices(&p.target));
        }
    }

    Ok(Drawn { fragments, corner_dots, footprints })
}

/// Renders the scene; equal scenes give byte-identical output.
pub fn render_svg(scene: &Scene) -> Result<String, CliError> {
    let drawn = build(scene)?;

    // The reference lines sit on x = 0 and y = 0, so the origin is in view.
    let mut lo = Point2::new(0.0, 0.0);
    let mut hi = Point2::new(0.0, 0.0);
    let mut grow = |p: &Point2| {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    };
    for (poly, ..) in &drawn.fragments {
        poly.iter().for_each(&mut grow);
    }
    drawn.corner_dots.iter().for_each(&mut grow);
    for poly in &drawn.footprints {
        poly.iter().for_each(&mut grow);
    }

    let w = hi.x - lo.x + 2.0 * MARGIN;
    let h = hi.y - lo.y + 2.0 * MARGIN;
    // SVG y grows downward; flip so the layout reads like the plots.
    let map = |p: &Point2| (p.x - lo.x + MARGIN, hi.y - p.y + MARGIN);
    let points = |poly: &[Point2]| {
        poly.iter()
            .map(|p| {
                let (x, y) = map(p);
                format!("{},{}", fmt(x), fmt(y))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };

    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {} {}\" \
         width=\"{}\" height=\"{}\">\n",
        fmt(w),
        fmt(h),
        fmt(2.0 * w),
        fmt(2.0 * h)
    ));

    // Reference lines along y = 0 (horizontal) and x = 0 (vertical).
    let (x0, y0) = map(&Point2::new(0.0, 0.0));
    svg.push_str(&format!(
        "  <line x1=\"0\" y1=\"{y}\" x2=\"{w}\" y2=\"{y}\" stroke=\"#777\" \
         stroke-width=\"0.6\" stroke-dasharray=\"6 3\"/>\n",
        y = fmt(y0),
        w = fmt(w)
    ));
    svg.push_str(&format!(
        "  <line x1=\"{x}\" y1=\"0\" x2=\"{x}\" y2=\"{h}\" stroke=\"#777\" \
         stroke-width=\"0.6\" stroke-dasharray=\"6 3\"/>\n",
        x = fmt(x0),
        h = fmt(h)
    ));

    for poly in &drawn.footprints {
        let mut d = String::new();
        for (i, p) in poly.iter().enumerate() {
            let (x, y) = map(p);
            d.push_str(&format!("{}{} {}", if i == 0 { "M" } else { "L" }, fmt(x), fmt(y)));
        }
        d.push('Z');
        svg.push_str(&format!(
            "  <path d=\"{d}\" fill=\"none\" stroke=\"#3182bd\" stroke-width=\"0.5\" \
             stroke-dasharray=\"2 2\"/>\n"
        ));
    }

    for (poly, fill, hit, ghost) in &drawn.fragments {
        let fill_attr = if *ghost { "none" } else { fill };
        let stroke = if *hit {
            "stroke=\"#c0392b\" stroke-width=\"1.6\" stroke-dasharray=\"4 2\""
        } else {
            "stroke=\"#333\" stroke-width=\"0.7\""
        };
        svg.push_str(&format!(
            "  <polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.85\" {}/>\n",
            points(poly),
            fill_attr,
            stroke
        ));
    }

    for dot in &drawn.corner_dots {
        let (x, y) = map(dot);
        svg.push_str(&format!(
            "  <circle cx=\"{}\" cy=\"{}\" r=\"1.4\" fill=\"#222\"/>\n",
            fmt(x),
            fmt(y)
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}
