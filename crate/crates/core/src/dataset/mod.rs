//! Synthetic fragment layouts: a rectangular slab is shattered by straight
//! cuts that run across the whole arrangement, then fragments are sequenced
//! by a snake-pattern window sweep and annotated with neighbour corners and
//! reference-line flags.

mod generator;
mod schema;
mod sequence;

pub mod fixtures;

pub use generator::{cut_polygon, generate_layout, generate_layout_series, CutLine};
pub use schema::{layout_from_json, layout_to_json, load_layout, save_layout, SCHEMA_VERSION};
pub use sequence::extract_sequence;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geom::{self, GeomError};
use crate::{ConvexPolygon, Point2, Pose2, Scalar};

/// Fragments may have at most this many layout neighbours (observation
/// capacity of the placement environment).
pub const MAX_NEIGHBORS: usize = 6;

/// Layout attempts regenerated before giving up.
pub const MAX_GENERATION_ATTEMPTS: u32 = 100;

pub type FragmentId = u32;

/// mm^3 to m^3, for mass from density in kg/m^3.
const MM3_TO_M3: Scalar = 1e-9;

#[derive(Debug, Clone, thiserror::Error)]
pub enum DatasetError {
    #[error("geometry error: {0}")]
    Geometry(#[from] GeomError),
    #[error("invalid generator config: {0}")]
    Config(String),
    #[error("layout generation failed after {attempts} attempts; last rejection: {last}")]
    TooManyRejections { attempts: u32, last: String },
    #[error("layout file i/o failed: {0}")]
    Io(String),
    #[error("layout file is not valid JSON: {0}")]
    Schema(String),
    #[error("unsupported layout schema version {0}, expected {SCHEMA_VERSION}")]
    UnsupportedVersion(u32),
    #[error("fragments {a} and {b} overlap by {depth:.6} mm")]
    OverlappingFragments { a: FragmentId, b: FragmentId, depth: f64 },
    #[error("fragment {id}: stored mass {stored} differs from area*height*density {computed}")]
    MassMismatch { id: FragmentId, stored: f64, computed: f64 },
    #[error("fragment {id} has {count} neighbours, at most {MAX_NEIGHBORS} supported")]
    TooManyNeighbors { id: FragmentId, count: usize },
    #[error("sequence is not a permutation of fragment ids")]
    SequenceNotPermutation,
    #[error("fragment {id} has no earlier-sequenced neighbour and borders no reference line")]
    UnreachableInSequence { id: FragmentId },
    #[error("layout validation failed: {0}")]
    Validation(String),
}

/// Generator parameters. Lengths in mm, density in kg/m^3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeneratorConfig {
    pub global_width: Scalar,
    pub global_height: Scalar,
    pub n_cuts: u32,
    pub density: Scalar,
    pub height: Scalar,
    pub min_fragment_area: Scalar,
    pub seed: u64,
    /// Vertical extent of the sequencing window (also its width).
    pub window_height: Scalar,
    /// Horizontal stride of the sequencing window within a row.
    pub window_step: Scalar,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        let global_height = 300.0;
        let window_height = global_height / 3.0;
        Self {
            global_width: 300.0,
            global_height,
            n_cuts: 6,
            density: 2000.0,
            height: 20.0,
            min_fragment_area: 900.0,
            seed: 0,
            window_height,
            window_step: window_height / 2.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let positive = [
            ("global_width", self.global_width),
            ("global_height", self.global_height),
            ("density", self.density),
            ("height", self.height),
            ("window_height", self.window_height),
            ("window_step", self.window_step),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DatasetError::Config(format!("{name} must be finite and positive, got {v}")));
            }
        }
        if self.n_cuts == 0 {
            return Err(DatasetError::Config("n_cuts must be at least 1".into()));
        }
        if !(self.min_fragment_area.is_finite() && self.min_fragment_area >= 0.0) {
            return Err(DatasetError::Config(format!(
                "min_fragment_area must be finite and non-negative, got {}",
                self.min_fragment_area
            )));
        }
        if self.min_fragment_area >= self.global_width * self.global_height {
            return Err(DatasetError::Config(
                "min_fragment_area must be smaller than the slab area".into(),
            ));
        }
        Ok(())
    }
}

/// One convex fragment. The shape's local origin is its area centroid; the
/// layout pose places that centroid (theta = 0 for generated layouts).
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub id: FragmentId,
    pub shape: ConvexPolygon,
    pub layout_pose: Pose2,
    /// kg, equals area * height * density (with mm^3 -> m^3 conversion).
    pub mass: Scalar,
    /// Slab thickness in mm.
    pub height: Scalar,
}

impl Fragment {
    /// Mass implied by the shape and a material density in kg/m^3.
    pub fn mass_for_density(&self, density: Scalar) -> Scalar {
        self.shape.area() * self.height * MM3_TO_M3 * density
    }
}

/// A matched corner: the same world point at layout poses, expressed in the
/// local frames of the two fragments of an adjacency pair (lower id first).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CornerPair {
    pub on_a: Point2,
    pub on_b: Point2,
}

/// Reference-line annotations for one fragment. Anchors are stored in the
/// fragment's local frame, at most two per line (the on-line vertices with
/// extreme coordinate along the line).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LineFlags {
    pub lx: bool,
    pub ly: bool,
    pub lx_anchors: Vec<Point2>,
    pub ly_anchors: Vec<Point2>,
}

impl LineFlags {
    pub fn borders_any(&self) -> bool {
        self.lx || self.ly
    }
}

/// A complete layout in its own frame: the bounding box minimum sits at the
/// origin, so the workspace reference lines are y = 0 (l_x) and x = 0 (l_y).
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub config: GeneratorConfig,
    pub fragments: Vec<Fragment>,
    /// Unordered neighbour pairs, stored (low, high), sorted.
    pub adjacency: Vec<(FragmentId, FragmentId)>,
    /// Exactly two corresponding corners per adjacency pair.
    pub corners: BTreeMap<(FragmentId, FragmentId), [CornerPair; 2]>,
    pub line_flags: BTreeMap<FragmentId, LineFlags>,
    /// Placement order; a permutation of fragment ids.
    pub sequence: Vec<FragmentId>,
}

impl Layout {
    pub fn fragment(&self, id: FragmentId) -> Option<&Fragment> {
        self.fragments.iter().find(|f| f.id == id)
    }

    pub fn neighbors(&self, id: FragmentId) -> Vec<FragmentId> {
        let mut out: Vec<FragmentId> = self
            .adjacency
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }

    /// Corner pairs for (id, other), oriented so `on_a` lives in `id`'s frame.
    pub fn corner_pairs(&self, id: FragmentId, other: FragmentId) -> Option<[CornerPair; 2]> {
        let key = (id.min(other), id.max(other));
        let pairs = self.corners.get(&key)?;
        if id < other {
            Some(*pairs)
        } else {
            Some([
                CornerPair { on_a: pairs[0].on_b, on_b: pairs[0].on_a },
                CornerPair { on_a: pairs[1].on_b, on_b: pairs[1].on_a },
            ])
        }
    }

    pub fn bounding_box(&self) -> Result<(Point2, Point2), GeomError> {
        geom::bounding_box(self.fragments.iter().map(|f| (&f.shape, &f.layout_pose)))
    }

    /// Area-weighted centroid of the assembly at layout poses. Fragment
    /// shapes are centroid-centered, so each pose translation is the world
    /// centroid of that fragment.
    pub fn area_centroid(&self) -> Point2 {
        let mut acc = Point2::new(0.0, 0.0);
        let mut total = 0.0;
        for f in &self.fragments {
            let a = f.shape.area();
            acc = acc + f.layout_pose.translation() * a;
            total += a;
        }
        if total > 0.0 {
            acc * (1.0 / total)
        } else {
            acc
        }
    }

    /// Mean nearest-neighbour centroid distance at layout poses.
    pub fn mean_nearest_centroid_distance(&self) -> Scalar {
        let n = self.fragments.len();
        if n < 2 {
            return 0.0;
        }
        let mut acc = 0.0;
        for f in &self.fragments {
            let p = f.layout_pose.translation();
            let nearest = self
                .fragments
                .iter()
                .filter(|o| o.id != f.id)
                .map(|o| p.distance(o.layout_pose.translation()))
                .fold(Scalar::INFINITY, Scalar::min);
            acc += nearest;
        }
        acc / n as Scalar
    }

    /// Checks every layout invariant; errors name the offending fragments.
    pub fn validate(&self) -> Result<(), DatasetError> {
        self.config.validate()?;
        if self.fragments.is_empty() {
            return Err(DatasetError::Validation("layout has no fragments".into()));
        }
        for (idx, f) in self.fragments.iter().enumerate() {
            if f.id as usize != idx {
                return Err(DatasetError::Validation(format!(
                    "fragment ids must be dense and ordered; index {idx} holds id {}",
                    f.id
                )));
            }
            if !f.shape.is_centered(1e-6) {
                return Err(DatasetError::Validation(format!(
                    "fragment {} shape centroid is off-origin",
                    f.id
                )));
            }
            if !(f.layout_pose.x.is_finite() && f.layout_pose.y.is_finite()) {
                return Err(DatasetError::Validation(format!("fragment {} pose not finite", f.id)));
            }
            let computed = f.shape.area() * f.height * MM3_TO_M3 * self.config.density;
            if (f.mass - computed).abs() > 1e-9 * computed.max(1.0) {
                return Err(DatasetError::MassMismatch {
                    id: f.id,
                    stored: f.mass,
                    computed,
                });
            }
        }
        for (i, a) in self.fragments.iter().enumerate() {
            for b in &self.fragments[i + 1..] {
                let depth = geom::penetration_depth(&a.shape, &a.layout_pose, &b.shape, &b.layout_pose);
                if depth > geom::EPS_TOUCH {
                    return Err(DatasetError::OverlappingFragments {
                        a: a.id,
                        b: b.id,
                        depth,
                    });
                }
            }
        }
        let n = self.fragments.len();
        for &(a, b) in &self.adjacency {
            if a >= b || b as usize >= n {
                return Err(DatasetError::Validation(format!("bad adjacency pair ({a}, {b})")));
            }
            if !self.corners.contains_key(&(a, b)) {
                return Err(DatasetError::Validation(format!(
                    "adjacency pair ({a}, {b}) has no corner entry"
                )));
            }
        }
        if self.corners.len() != self.adjacency.len() {
            return Err(DatasetError::Validation(
                "corner entries do not match adjacency pairs".into(),
            ));
        }
        for f in &self.fragments {
            let count = self.neighbors(f.id).len();
            if count > MAX_NEIGHBORS {
                return Err(DatasetError::TooManyNeighbors { id: f.id, count });
            }
            if !self.line_flags.contains_key(&f.id) {
                return Err(DatasetError::Validation(format!(
                    "fragment {} has no line flags entry",
                    f.id
                )));
            }
        }
        let mut seen = vec![false; n];
        for &id in &self.sequence {
            if id as usize >= n || seen[id as usize] {
                return Err(DatasetError::SequenceNotPermutation);
            }
            seen[id as usize] = true;
        }
        if self.sequence.len() != n {
            return Err(DatasetError::SequenceNotPermutation);
        }
        for (k, &id) in self.sequence.iter().enumerate().skip(1) {
            let earlier = &self.sequence[..k];
            let reachable = self
                .neighbors(id)
                .iter()
                .any(|nb| earlier.contains(nb))
                || self.line_flags[&id].borders_any();
            if !reachable {
                return Err(DatasetError::UnreachableInSequence { id });
            }
        }
        Ok(())
    }
}
