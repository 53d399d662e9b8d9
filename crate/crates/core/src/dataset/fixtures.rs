//! Hand-built layouts with closed-form geometry. Their corner pairs and
//! anchors are written down directly, which makes them suitable as ground
//! truth for reward arithmetic and as tiny training scenes.

use std::collections::BTreeMap;

use super::{CornerPair, Fragment, GeneratorConfig, Layout, LineFlags};
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

fn centered_square(side: Scalar) -> ConvexPolygon {
    let h = side / 2.0;
    ConvexPolygon::new(vec![
        Point2::new(-h, -h),
        Point2::new(h, -h),
        Point2::new(h, h),
        Point2::new(-h, h),
    ])
    .expect("square is convex")
}

/// Two 100 mm squares side by side on the reference corner: fragment 0 covers
/// [0,100]^2, fragment 1 covers [100,200] x [0,100]. They share the edge
/// x = 100 with corner pairs at (100,0) and (100,100); fragment 0 borders
/// both reference lines, fragment 1 only the bottom one.
pub fn two_square_layout() -> Layout {
    let side = 100.0;
    let height = 20.0;
    let density = 2000.0;
    let config = GeneratorConfig {
        global_width: 200.0,
        global_height: 100.0,
        n_cuts: 1,
        density,
        height,
        min_fragment_area: 900.0,
        seed: 0,
        window_height: 100.0,
        window_step: 50.0,
    };
    let shape = centered_square(side);
    let mass = side * side * height * 1e-9 * density;
    let fragments = vec![
        Fragment {
            id: 0,
            shape: shape.clone(),
            layout_pose: Pose2::new(50.0, 50.0, 0.0),
            mass,
            height,
        },
        Fragment {
            id: 1,
            shape,
            layout_pose: Pose2::new(150.0, 50.0, 0.0),
            mass,
            height,
        },
    ];
    let mut corners = BTreeMap::new();
    corners.insert(
        (0, 1),
        [
            CornerPair {
                on_a: Point2::new(50.0, -50.0),
                on_b: Point2::new(-50.0, -50.0),
            },
            CornerPair {
                on_a: Point2::new(50.0, 50.0),
                on_b: Point2::new(-50.0, 50.0),
            },
        ],
    );
    let mut line_flags = BTreeMap::new();
    line_flags.insert(
        0,
        LineFlags {
            lx: true,
            ly: true,
            lx_anchors: vec![Point2::new(-50.0, -50.0), Point2::new(50.0, -50.0)],
            ly_anchors: vec![Point2::new(-50.0, -50.0), Point2::new(-50.0, 50.0)],
        },
    );
    line_flags.insert(
        1,
        LineFlags {
            lx: true,
            ly: false,
            lx_anchors: vec![Point2::new(-50.0, -50.0), Point2::new(50.0, -50.0)],
            ly_anchors: vec![],
        },
    );
    let layout = Layout {
        config,
        fragments,
        adjacency: vec![(0, 1)],
        corners,
        line_flags,
        sequence: vec![0, 1],
    };
    layout.validate().expect("fixture invariants hold");
    layout
}

/// Row of `n` equal squares along the bottom reference line. With
/// `spacing == side` consecutive squares share an edge and become neighbors;
/// larger spacings leave gaps (every square still borders the bottom line,
/// which keeps any placement order feasible).
pub fn square_row_layout(n: usize, side: Scalar, spacing: Scalar) -> Layout {
    assert!(n >= 1 && side > 0.0 && spacing >= side, "squares must not overlap");
    let height = 20.0;
    let density = 2000.0;
    let config = GeneratorConfig {
        global_width: spacing * n as Scalar,
        global_height: side,
        n_cuts: 1,
        density,
        height,
        min_fragment_area: 1.0,
        seed: 0,
        window_height: side,
        window_step: side / 2.0,
    };
    let shape = centered_square(side);
    let mass = side * side * height * 1e-9 * density;
    let h = side / 2.0;
    let fragments: Vec<Fragment> = (0..n)
        .map(|i| Fragment {
            id: i as u32,
            shape: shape.clone(),
            layout_pose: Pose2::new(h + spacing * i as Scalar, h, 0.0),
            mass,
            height,
        })
        .collect();
    let touching = spacing == side;
    let mut adjacency = Vec::new();
    let mut corners = BTreeMap::new();
    if touching {
        for i in 0..n.saturating_sub(1) {
            let pair = (i as u32, i as u32 + 1);
            adjacency.push(pair);
            corners.insert(
                pair,
                [
                    CornerPair { on_a: Point2::new(h, -h), on_b: Point2::new(-h, -h) },
                    CornerPair { on_a: Point2::new(h, h), on_b: Point2::new(-h, h) },
                ],
            );
        }
    }
    let mut line_flags = BTreeMap::new();
    for i in 0..n {
        line_flags.insert(
            i as u32,
            LineFlags {
                lx: true,
                ly: i == 0,
                lx_anchors: vec![Point2::new(-h, -h), Point2::new(h, -h)],
                ly_anchors: if i == 0 {
                    vec![Point2::new(-h, -h), Point2::new(-h, h)]
                } else {
                    vec![]
                },
            },
        );
    }
    let layout = Layout {
        config,
        fragments,
        adjacency,
        corners,
        line_flags,
        sequence: (0..n as u32).collect(),
    };
    layout.validate().expect("fixture invariants hold");
    layout
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_valid_and_touching() {
        let layout = two_square_layout();
        assert_eq!(layout.fragments.len(), 2);
        assert_eq!(layout.neighbors(0), vec![1]);
        let (lo, hi) = layout.bounding_box().unwrap();
        assert_eq!((lo.x, lo.y), (0.0, 0.0));
        assert_eq!((hi.x, hi.y), (200.0, 100.0));
        // Corner pairs coincide in the world frame.
        let [p0, p1] = layout.corner_pairs(0, 1).unwrap();
        let f0 = layout.fragment(0).unwrap();
        let f1 = layout.fragment(1).unwrap();
        assert_eq!(f0.layout_pose.apply(p0.on_a), f1.layout_pose.apply(p0.on_b));
        assert_eq!(f0.layout_pose.apply(p1.on_a), f1.layout_pose.apply(p1.on_b));
    }

    #[test]
    fn square_row_matches_the_two_square_footprint() {
        let row = square_row_layout(2, 100.0, 100.0);
        let two = two_square_layout();
        assert_eq!(row.adjacency, two.adjacency);
        for (a, b) in row.fragments.iter().zip(&two.fragments) {
            assert_eq!(a.layout_pose, b.layout_pose);
            assert_eq!(a.mass, b.mass);
        }
        // Gapped rows skip adjacency but stay placeable via the bottom line.
        let gapped = square_row_layout(3, 50.0, 52.0);
        assert!(gapped.adjacency.is_empty());
        let (lo, hi) = gapped.bounding_box().unwrap();
        assert_eq!((lo.x, lo.y), (0.0, 0.0));
        assert_eq!((hi.x, hi.y), (154.0, 50.0));
    }
}
