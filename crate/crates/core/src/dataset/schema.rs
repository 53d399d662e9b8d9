//! Versioned JSON persistence for layouts. Serialization is deterministic
//! (sorted maps, serde_json's shortest round-trip float form), so equal
//! layouts produce byte-identical files.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    CornerPair, DatasetError, Fragment, FragmentId, GeneratorConfig, Layout, LineFlags,
};
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct LayoutFile {
    version: u32,
    config: GeneratorConfig,
    fragments: Vec<FragmentRecord>,
    adjacency: Vec<(FragmentId, FragmentId)>,
    /// Key "a-b" with a < b; value: two corner pairs [[on_a, on_b]; 2].
    corners: BTreeMap<String, Vec<[[Scalar; 2]; 2]>>,
    line_flags: BTreeMap<String, LineFlagsRecord>,
    sequence: Vec<FragmentId>,
}

#[derive(Serialize, Deserialize)]
struct FragmentRecord {
    id: FragmentId,
    vertices: Vec<[Scalar; 2]>,
    pose: PoseRecord,
    mass: Scalar,
    height: Scalar,
}

#[derive(Serialize, Deserialize)]
struct PoseRecord {
    x: Scalar,
    y: Scalar,
    theta: Scalar,
}

#[derive(Serialize, Deserialize)]
struct LineFlagsRecord {
    lx: bool,
    ly: bool,
    anchors: AnchorsRecord,
}

#[derive(Serialize, Deserialize)]
struct AnchorsRecord {
    lx: Vec<[Scalar; 2]>,
    ly: Vec<[Scalar; 2]>,
}

fn pt(p: Point2) -> [Scalar; 2] {
    [p.x, p.y]
}

fn un_pt(p: [Scalar; 2]) -> Result<Point2, DatasetError> {
    Point2::finite(p[0], p[1]).map_err(DatasetError::Geometry)
}

/// Serializes a layout to the versioned JSON document.
pub fn layout_to_json(layout: &Layout) -> String {
    let file = LayoutFile {
        version: SCHEMA_VERSION,
        config: layout.config.clone(),
        fragments: layout
            .fragments
            .iter()
            .map(|f| FragmentRecord {
                id: f.id,
                vertices: f.shape.vertices().iter().copied().map(pt).collect(),
                pose: PoseRecord {
                    x: f.layout_pose.x,
                    y: f.layout_pose.y,
                    theta: f.layout_pose.theta,
                },
                mass: f.mass,
                height: f.height,
            })
            .collect(),
        adjacency: layout.adjacency.clone(),
        corners: layout
            .corners
            .iter()
            .map(|(&(a, b), pairs)| {
                (
                    format!("{a}-{b}"),
                    pairs.iter().map(|p| [pt(p.on_a), pt(p.on_b)]).collect(),
                )
            })
            .collect(),
        line_flags: layout
            .line_flags
            .iter()
            .map(|(id, flags)| {
                (
                    id.to_string(),
                    LineFlagsRecord {
                        lx: flags.lx,
                        ly: flags.ly,
                        anchors: AnchorsRecord {
                            lx: flags.lx_anchors.iter().copied().map(pt).collect(),
                            ly: flags.ly_anchors.iter().copied().map(pt).collect(),
                        },
                    },
                )
            })
            .collect(),
        sequence: layout.sequence.clone(),
    };
    serde_json::to_string_pretty(&file).expect("layout serializes") + "\n"
}

/// Parses and fully validates a layout document.
pub fn layout_from_json(json: &str) -> Result<Layout, DatasetError> {
    let file: LayoutFile =
        serde_json::from_str(json).map_err(|e| DatasetError::Schema(e.to_string()))?;
    if file.version != SCHEMA_VERSION {
        return Err(DatasetError::UnsupportedVersion(file.version));
    }
    let mut fragments = Vec::with_capacity(file.fragments.len());
    for rec in file.fragments {
        let verts = rec
            .vertices
            .into_iter()
            .map(un_pt)
            .collect::<Result<Vec<_>, _>>()?;
        let shape = ConvexPolygon::new(verts)?;
        fragments.push(Fragment {
            id: rec.id,
            shape,
            layout_pose: Pose2::new(rec.pose.x, rec.pose.y, rec.pose.theta),
            mass: rec.mass,
            height: rec.height,
        });
    }
    let mut corners = BTreeMap::new();
    for (key, pairs) in file.corners {
        let (a, b) = parse_pair_key(&key)?;
        if pairs.len() != 2 {
            return Err(DatasetError::Validation(format!(
                "corner entry {key} must hold exactly 2 pairs, got {}",
                pairs.len()
            )));
        }
        let mk = |p: [[Scalar; 2]; 2]| -> Result<CornerPair, DatasetError> {
            Ok(CornerPair { on_a: un_pt(p[0])?, on_b: un_pt(p[1])? })
        };
        corners.insert((a, b), [mk(pairs[0])?, mk(pairs[1])?]);
    }
    let mut line_flags = BTreeMap::new();
    for (key, rec) in file.line_flags {
        let id: FragmentId = key
            .parse()
            .map_err(|_| DatasetError::Validation(format!("bad line_flags key {key:?}")))?;
        line_flags.insert(
            id,
            LineFlags {
                lx: rec.lx,
                ly: rec.ly,
                lx_anchors: rec.anchors.lx.into_iter().map(un_pt).collect::<Result<_, _>>()?,
                ly_anchors: rec.anchors.ly.into_iter().map(un_pt).collect::<Result<_, _>>()?,
            },
        );
    }
    let layout = Layout {
        config: file.config,
        fragments,
        adjacency: file.adjacency,
        corners,
        line_flags,
        sequence: file.sequence,
    };
    layout.validate()?;
    Ok(layout)
}

fn parse_pair_key(key: &str) -> Result<(FragmentId, FragmentId), DatasetError> {
    let bad = || DatasetError::Validation(format!("bad corner key {key:?}, expected \"a-b\""));
    let (a, b) = key.split_once('-').ok_or_else(bad)?;
    let a: FragmentId = a.parse().map_err(|_| bad())?;
    let b: FragmentId = b.parse().map_err(|_| bad())?;
    Ok((a, b))
}

pub fn save_layout(path: &Path, layout: &Layout) -> Result<(), DatasetError> {
    std::fs::write(path, layout_to_json(layout))
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))
}

pub fn load_layout(path: &Path) -> Result<Layout, DatasetError> {
    let json = std::fs::read_to_string(path)
        .map_err(|e| DatasetError::Io(format!("{}: {e}", path.display())))?;
    layout_from_json(&json)
}
