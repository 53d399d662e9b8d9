//! Crossing-cut layout generation: straight lines run across the whole slab
//! and split every fragment they cross. Degenerate attempts (slivers, crowded
//! neighbourhoods, unreachable fragments) reject the attempt and regenerate
//! from a derived seed.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::sequence::extract_sequence;
use super::{
    CornerPair, DatasetError, Fragment, FragmentId, GeneratorConfig, Layout, LineFlags,
    MAX_GENERATION_ATTEMPTS, MAX_NEIGHBORS,
};
use crate::geom::{
    corresponding_corners, shared_edge_segments, ConvexPolygon as GenericPolygon, EPS_ADJACENT,
};
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

/// Infinite cutting line through `point` along unit `dir`.
#[derive(Debug, Clone, Copy)]
pub struct CutLine {
    pub point: Point2,
    pub dir: Point2,
}

/// Vertices closer to the cut line than this (mm) lie on it.
const EPS_SIDE: Scalar = 1e-9;

/// Splits a posed convex polygon by an infinite line. Returns the (left,
/// right) pieces relative to the line direction, each recentered on its own
/// centroid with an axis-aligned pose (rotation baked into the vertices). A
/// line that misses the polygon returns the input on its side and `None` on
/// the other.
pub fn cut_polygon(
    poly: &ConvexPolygon,
    pose: &Pose2,
    line: &CutLine,
) -> Result<(Option<(ConvexPolygon, Pose2)>, Option<(ConvexPolygon, Pose2)>), DatasetError> {
    let world = poly.world_vertices(pose);
    let (left, right) = split_vertices(&world, line);
    match (left, right) {
        (Some(l), Some(r)) => Ok((Some(recenter(l)?), Some(recenter(r)?))),
        (Some(_), None) => Ok((Some((poly.clone(), *pose)), None)),
        (None, Some(_)) => Ok((None, Some((poly.clone(), *pose)))),
        (None, None) => Err(DatasetError::Validation("cut produced no pieces".into())),
    }
}

fn recenter(world: Vec<Point2>) -> Result<(ConvexPolygon, Pose2), DatasetError> {
    let (shape, centroid) = GenericPolygon::recentered(world)?;
    Ok((shape, Pose2::new(centroid.x, centroid.y, 0.0)))
}

/// Splits a world-frame convex vertex loop by a line; either side may vanish.
/// Shared chord vertices appear in both pieces.
fn split_vertices(world: &[Point2], line: &CutLine) -> (Option<Vec<Point2>>, Option<Vec<Point2>>) {
    let side = |p: Point2| line.dir.cross(p - line.point);
    let n = world.len();
    let mut left: Vec<Point2> = Vec::with_capacity(n + 2);
    let mut right: Vec<Point2> = Vec::with_capacity(n + 2);
    for i in 0..n {
        let a = world[i];
        let b = world[(i + 1) % n];
        let (sa, sb) = (side(a), side(b));
        if sa >= -EPS_SIDE {
            left.push(a);
        }
        if sa <= EPS_SIDE {
            right.push(a);
        }
        // Strict sign change: record the chord crossing on both sides.
        if (sa > EPS_SIDE && sb < -EPS_SIDE) || (sa < -EPS_SIDE && sb > EPS_SIDE) {
            let t = sa / (sa - sb);
            let p = a + (b - a) * t;
            left.push(p);
            right.push(p);
        }
    }
    (clean_piece(left), clean_piece(right))
}

/// Drops near-duplicate consecutive vertices and rejects degenerate slivers.
fn clean_piece(verts: Vec<Point2>) -> Option<Vec<Point2>> {
    let eps = 1e-7;
    let mut kept: Vec<Point2> = Vec::with_capacity(verts.len());
    for v in verts {
        if kept.last().is_none_or(|&l| l.distance(v) > eps) {
            kept.push(v);
        }
    }
    while kept.len() >= 2 && kept[0].distance(*kept.last().unwrap()) <= eps {
        kept.pop();
    }
    if kept.len() < 3 {
        return None;
    }
    let mut area2 = 0.0;
    for i in 0..kept.len() {
        area2 += kept[i].cross(kept[(i + 1) % kept.len()]);
    }
    if area2 / 2.0 <= 1e-6 {
        return None;
    }
    Some(kept)
}

/// Deterministic seed for a regeneration attempt.
fn derive_seed(seed: u64, attempt: u32) -> u64 {
    seed.wrapping_add((attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

enum Rejection {
    MinArea { area: Scalar },
    Degenerate { detail: String },
    TooManyNeighbors { id: FragmentId, count: usize },
    Unreachable { id: FragmentId },
}

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Rejection::MinArea { area } => write!(f, "fragment area {area:.3} below minimum"),
            Rejection::Degenerate { detail } => write!(f, "degenerate cut piece: {detail}"),
            Rejection::TooManyNeighbors { id, count } => {
                write!(f, "fragment {id} has {count} neighbours")
            }
            Rejection::Unreachable { id } => {
                write!(f, "fragment {id} unreachable under sequence constraint")
            }
        }
    }
}

/// Generates a layout deterministically from the config seed, regenerating
/// with derived seeds while attempts get rejected.
pub fn generate_layout(config: &GeneratorConfig) -> Result<Layout, DatasetError> {
    config.validate()?;
    let mut last = String::from("no attempt made");
    for attempt in 0..MAX_GENERATION_ATTEMPTS {
        let seed = derive_seed(config.seed, attempt);
        match try_generate(config, seed) {
            Ok(Ok(layout)) => {
                layout.validate()?;
                return Ok(layout);
            }
            Ok(Err(reject)) => last = reject.to_string(),
            Err(e) => return Err(e),
        }
    }
    Err(DatasetError::TooManyRejections {
        attempts: MAX_GENERATION_ATTEMPTS,
        last,
    })
}

/// Collects `n` layouts by scanning base seeds `config.seed, config.seed+1, ...`
/// and skipping seeds whose attempt budget runs out. Roughly a third of seeds
/// fail under the default config (crossing cuts shed slivers easily), so every
/// batch consumer shares this deterministic skip rule.
pub fn generate_layout_series(
    config: &GeneratorConfig,
    n: usize,
) -> Result<Vec<Layout>, DatasetError> {
    config.validate()?;
    if n == 0 {
        return Err(DatasetError::Config("series length must be positive".into()));
    }
    let budget = 50 * n as u64 + 50;
    let mut layouts = Vec::with_capacity(n);
    let mut last = String::new();
    for offset in 0..budget {
        let cfg = GeneratorConfig { seed: config.seed.wrapping_add(offset), ..config.clone() };
        match generate_layout(&cfg) {
            Ok(layout) => layouts.push(layout),
            Err(DatasetError::TooManyRejections { last: l, .. }) => last = l,
            Err(e) => return Err(e),
        }
        if layouts.len() == n {
            return Ok(layouts);
        }
    }
    Err(DatasetError::TooManyRejections {
        attempts: MAX_GENERATION_ATTEMPTS,
        last: format!("exhausted {budget} base seeds collecting {n} layouts; {last}"),
    })
}

#[allow(clippy::type_complexity)]
fn try_generate(
    config: &GeneratorConfig,
    seed: u64,
) -> Result<Result<Layout, Rejection>, DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (config.global_width, config.global_height);
    let mut pieces: Vec<Vec<Point2>> = vec![vec![
        Point2::new(0.0, 0.0),
        Point2::new(w, 0.0),
        Point2::new(w, h),
        Point2::new(0.0, h),
    ]];

    for _ in 0..config.n_cuts {
        let point = Point2::new(rng.gen_range(0.0..w), rng.gen_range(0.0..h));
        let phi: Scalar = rng.gen_range(0.0..std::f64::consts::PI);
        let line = CutLine { point, dir: Point2::new(phi.cos(), phi.sin()) };
        let mut next: Vec<Vec<Point2>> = Vec::with_capacity(pieces.len() + 4);
        for piece in &pieces {
            let (left, right) = split_vertices(piece, &line);
            if let Some(l) = left {
                next.push(l);
            }
            if let Some(r) = right {
                next.push(r);
            }
        }
        pieces = next;
    }

    // Fragment shapes and poses; slab frame already has its minimum at (0,0).
    let mut fragments: Vec<Fragment> = Vec::with_capacity(pieces.len());
    for (idx, piece) in pieces.iter().enumerate() {
        let (shape, centroid) = match GenericPolygon::recentered(piece.clone()) {
            Ok(pair) => pair,
            // Near-grazing cuts can leave slivers that fail strict convexity;
            // that is a property of the random cut set, so resample.
            Err(e) => return Ok(Err(Rejection::Degenerate { detail: e.to_string() })),
        };
        let area = shape.area();
        if area < config.min_fragment_area {
            return Ok(Err(Rejection::MinArea { area }));
        }
        fragments.push(Fragment {
            id: idx as FragmentId,
            shape,
            layout_pose: Pose2::new(centroid.x, centroid.y, 0.0),
            mass: 0.0,
            height: config.height,
        });
    }
    let total: Scalar = fragments.iter().map(|f| f.shape.area()).sum();
    let slab = w * h;
    if (total - slab).abs() > 1e-9 * slab {
        return Err(DatasetError::Validation(format!(
            "cut pieces lose area: {total} vs slab {slab}"
        )));
    }
    for f in &mut fragments {
        f.mass = f.mass_for_density(config.density);
    }

    // Adjacency and corresponding corners from shared edges at layout poses.
    let mut adjacency: Vec<(FragmentId, FragmentId)> = Vec::new();
    let mut corners: BTreeMap<(FragmentId, FragmentId), [CornerPair; 2]> = BTreeMap::new();
    for i in 0..fragments.len() {
        for j in (i + 1)..fragments.len() {
            let (a, b) = (&fragments[i], &fragments[j]);
            let segs =
                shared_edge_segments(&a.shape, &a.layout_pose, &b.shape, &b.layout_pose, EPS_ADJACENT);
            if segs.is_empty() {
                continue;
            }
            let (c1, c2) = corresponding_corners(&segs)?;
            adjacency.push((a.id, b.id));
            corners.insert(
                (a.id, b.id),
                [
                    CornerPair {
                        on_a: a.layout_pose.inverse_apply(c1),
                        on_b: b.layout_pose.inverse_apply(c1),
                    },
                    CornerPair {
                        on_a: a.layout_pose.inverse_apply(c2),
                        on_b: b.layout_pose.inverse_apply(c2),
                    },
                ],
            );
        }
    }
    for f in &fragments {
        let count = adjacency
            .iter()
            .filter(|&&(x, y)| x == f.id || y == f.id)
            .count();
        if count > MAX_NEIGHBORS {
            return Ok(Err(Rejection::TooManyNeighbors { id: f.id, count }));
        }
    }

    let line_flags = compute_line_flags(&fragments);

    let sequence = extract_sequence(
        &fragments,
        config.window_height,
        config.window_step,
    )?;

    // Every later fragment needs an earlier neighbour or a reference line.
    for (k, &id) in sequence.iter().enumerate().skip(1) {
        let earlier = &sequence[..k];
        let has_neighbor = adjacency.iter().any(|&(a, b)| {
            (a == id && earlier.contains(&b)) || (b == id && earlier.contains(&a))
        });
        if !has_neighbor && !line_flags[&id].borders_any() {
            return Ok(Err(Rejection::Unreachable { id }));
        }
    }

    Ok(Ok(Layout {
        config: config.clone(),
        fragments,
        adjacency,
        corners,
        line_flags,
        sequence,
    }))
}

/// Flags fragments whose vertices lie on the slab's minimum edges and stores
/// up to two extreme on-line vertices per line, in the fragment's local frame.
fn compute_line_flags(fragments: &[Fragment]) -> BTreeMap<FragmentId, LineFlags> {
    let mut out = BTreeMap::new();
    for f in fragments {
        let world = f.shape.world_vertices(&f.layout_pose);
        let on_lx: Vec<Point2> = world.iter().copied().filter(|v| v.y.abs() <= EPS_ADJACENT).collect();
        let on_ly: Vec<Point2> = world.iter().copied().filter(|v| v.x.abs() <= EPS_ADJACENT).collect();
        let pick = |mut pts: Vec<Point2>, along_x: bool| -> Vec<Point2> {
            if pts.len() > 1 {
                pts.sort_by(|a, b| if along_x { a.lex_cmp(*b) } else { Point2::new(a.y, a.x).lex_cmp(Point2::new(b.y, b.x)) });
                pts = vec![pts[0], pts[pts.len() - 1]];
            }
            pts.into_iter().map(|p| f.layout_pose.inverse_apply(p)).collect()
        };
        out.insert(
            f.id,
            LineFlags {
                lx: !on_lx.is_empty(),
                ly: !on_ly.is_empty(),
                lx_anchors: pick(on_lx, true),
                ly_anchors: pick(on_ly, false),
            },
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom;

    fn centered_square(side: Scalar) -> ConvexPolygon {
        ConvexPolygon::axis_aligned_rect(Point2::new(0.0, 0.0), side, side).unwrap()
    }

    #[test]
    fn symmetric_cut_halves_square() {
        let sq = centered_square(100.0);
        let pose = Pose2::new(50.0, 50.0, 0.0);
        let line = CutLine { point: Point2::new(50.0, 0.0), dir: Point2::new(0.0, 1.0) };
        let (left, right) = cut_polygon(&sq, &pose, &line).unwrap();
        let (l, lp) = left.unwrap();
        let (r, rp) = right.unwrap();
        assert!((l.area() - 5000.0).abs() < 1e-9);
        assert!((r.area() - 5000.0).abs() < 1e-9);
        // Line direction +y: left side is x < 50.
        assert!(lp.x < 50.0 && rp.x > 50.0);
        assert!((l.area() + r.area() - 10_000.0).abs() < 1e-9);
    }

    #[test]
    fn missing_line_returns_input() {
        let sq = centered_square(100.0);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        let line = CutLine { point: Point2::new(500.0, 0.0), dir: Point2::new(0.0, 1.0) };
        let (left, right) = cut_polygon(&sq, &pose, &line).unwrap();
        let (l, lp) = left.unwrap();
        assert!(right.is_none());
        assert_eq!(l, sq);
        assert_eq!(lp, pose);
    }

    #[test]
    fn grazing_cut_through_vertex_keeps_area() {
        let sq = centered_square(100.0);
        let pose = Pose2::new(0.0, 0.0, 0.0);
        // Diagonal through two opposite vertices.
        let line = CutLine {
            point: Point2::new(-50.0, -50.0),
            dir: Point2::new(1.0, 1.0).normalized().unwrap(),
        };
        let (left, right) = cut_polygon(&sq, &pose, &line).unwrap();
        let total: Scalar = [left, right]
            .into_iter()
            .flatten()
            .map(|(p, _)| p.area())
            .sum();
        assert!((total - 10_000.0).abs() < 1e-6);
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GeneratorConfig { seed: 7, ..GeneratorConfig::default() };
        let a = generate_layout(&config).unwrap();
        let b = generate_layout(&config).unwrap();
        assert_eq!(a.sequence, b.sequence);
        assert_eq!(a.fragments.len(), b.fragments.len());
        for (fa, fb) in a.fragments.iter().zip(&b.fragments) {
            assert_eq!(fa.shape.vertices(), fb.shape.vertices());
            assert_eq!(fa.layout_pose, fb.layout_pose);
        }
    }

    #[test]
    fn different_seeds_differ() {
        let a = generate_layout(&GeneratorConfig { seed: 5, ..GeneratorConfig::default() }).unwrap();
        let b = generate_layout(&GeneratorConfig { seed: 7, ..GeneratorConfig::default() }).unwrap();
        let pa: Vec<_> = a.fragments.iter().map(|f| f.layout_pose).collect();
        let pb: Vec<_> = b.fragments.iter().map(|f| f.layout_pose).collect();
        assert_ne!(pa, pb);
    }

    #[test]
    fn generated_layout_passes_validation_and_conserves_area() {
        for seed in [0, 13, 21] {
            let config = GeneratorConfig { seed, ..GeneratorConfig::default() };
            let layout = generate_layout(&config).unwrap();
            layout.validate().unwrap();
            let total: Scalar = layout.fragments.iter().map(|f| f.shape.area()).sum();
            assert!((total - 300.0 * 300.0).abs() < 1e-6 * 300.0 * 300.0);
            // Frame note: bounding-box minimum on the reference lines.
            let (lo, _) = layout.bounding_box().unwrap();
            assert!(lo.x.abs() < 1e-9 && lo.y.abs() < 1e-9);
        }
    }

    #[test]
    fn masses_match_density_and_thickness() {
        let layout = generate_layout(&GeneratorConfig::default()).unwrap();
        for f in &layout.fragments {
            let expected = f.shape.area() * 20.0 * 1e-9 * 2000.0;
            assert!((f.mass - expected).abs() <= 1e-9 * expected.max(1.0));
        }
        let total: Scalar = layout.fragments.iter().map(|f| f.mass).sum();
        // 300 x 300 x 20 mm slab at 2000 kg/m^3 weighs 3.6 kg.
        assert!((total - 3.6).abs() < 1e-9);
    }

    #[test]
    fn anchors_lie_on_reference_lines() {
        let layout = generate_layout(&GeneratorConfig { seed: 5, ..Default::default() }).unwrap();
        let mut flagged = 0;
        for f in &layout.fragments {
            let flags = &layout.line_flags[&f.id];
            for a in &flags.lx_anchors {
                let w = f.layout_pose.apply(*a);
                assert!(w.y.abs() <= geom::EPS_ADJACENT + 1e-9);
                flagged += 1;
            }
            for a in &flags.ly_anchors {
                let w = f.layout_pose.apply(*a);
                assert!(w.x.abs() <= geom::EPS_ADJACENT + 1e-9);
            }
            assert!(flags.lx_anchors.len() <= 2 && flags.ly_anchors.len() <= 2);
            assert_eq!(flags.lx, !flags.lx_anchors.is_empty());
        }
        assert!(flagged > 0, "some fragment must border the bottom line");
    }

    #[test]
    fn series_skips_failing_seeds_deterministically() {
        // Base seeds 1..=4 all run out of attempts; the series steps past them.
        let config = GeneratorConfig { seed: 1, ..Default::default() };
        assert!(generate_layout(&config).is_err());
        let series = generate_layout_series(&config, 3).unwrap();
        let seeds: Vec<u64> = series.iter().map(|l| l.config.seed).collect();
        assert_eq!(seeds, vec![5, 6, 7]);
        let again = generate_layout_series(&config, 3).unwrap();
        assert_eq!(series, again);
    }

    #[test]
    fn corner_pairs_coincide_in_world_frame() {
        let layout = generate_layout(&GeneratorConfig { seed: 10, ..Default::default() }).unwrap();
        for (&(a, b), pairs) in &layout.corners {
            let fa = layout.fragment(a).unwrap();
            let fb = layout.fragment(b).unwrap();
            for pair in pairs {
                let wa = fa.layout_pose.apply(pair.on_a);
                let wb = fb.layout_pose.apply(pair.on_b);
                assert!(wa.distance(wb) <= 2.0 * EPS_ADJACENT);
            }
            // The two corners of a pair are distinct points.
            let w0 = fa.layout_pose.apply(pairs[0].on_a);
            let w1 = fa.layout_pose.apply(pairs[1].on_a);
            assert!(w0.distance(w1) > 1e-6);
        }
    }
}
