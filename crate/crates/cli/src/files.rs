//! Artifact formats around the core layout schema: layout manifests, plan
//! exports, and assembly-result exports. Everything is versioned JSON with
//! sorted keys, so identical inputs produce identical bytes.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use compact_place_core::baselines::PlacementPlan;
use compact_place_core::dataset::{load_layout, DatasetError, FragmentId, Layout};
use compact_place_core::eval::AssemblyResult;
use compact_place_core::Scalar;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub const MANIFEST_VERSION: u32 = 1;
pub const PLAN_VERSION: u32 = 1;
pub const RESULT_VERSION: u32 = 1;

/// Index of the layout files a `gen` run produced, relative to its own
/// directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub layouts: Vec<String>,
}

/// A baseline plan for one layout.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    pub agent: String,
    pub layout_seed: u64,
    pub plan: PlacementPlan,
}

/// An executed assembly for one layout. Contacts are stored as their display
/// strings; the renderer only needs the fragment ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub version: u32,
    pub agent: String,
    pub layout_seed: u64,
    pub placed: BTreeMap<FragmentId, PoseRecord>,
    pub collisions: Vec<CollisionRecord>,
    pub success: BTreeMap<FragmentId, bool>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PoseRecord {
    pub x: Scalar,
    pub y: Scalar,
    pub theta: Scalar,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub fragment: FragmentId,
    pub contact: String,
}

impl ResultFile {
    pub fn from_result(result: &AssemblyResult) -> ResultFile {
        ResultFile {
            version: RESULT_VERSION,
            agent: result.tag.label().to_string(),
            layout_seed: result.layout_seed,
            placed: result
                .placed
                .iter()
                .map(|(&id, p)| (id, PoseRecord { x: p.x, y: p.y, theta: p.theta }))
                .collect(),
            collisions: result
                .collisions
                .iter()
                .map(|c| CollisionRecord { fragment: c.fragment, contact: c.contact.to_string() })
                .collect(),
            success: result.success.clone(),
        }
    }

    /// Fragments that triggered a contact, deduplicated.
    pub fn collided_fragments(&self) -> Vec<FragmentId> {
        let mut ids: Vec<FragmentId> = self.collisions.iter().map(|c| c.fragment).collect();
        ids.sort_unstable();
        ids.dedup();
        ids
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)
                .map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        }
    }
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    write_text(path, &format!("{body}\n"))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// Dataset failures outside any particular file, like generator errors.
pub fn dataset_error(e: DatasetError) -> CliError {
    match &e {
        DatasetError::Io(_) => CliError::Runtime(e.to_string()),
        DatasetError::Config(_) => CliError::Usage(e.to_string()),
        _ => CliError::Data(e.to_string()),
    }
}

pub fn layout_error(path: &Path, e: DatasetError) -> CliError {
    let msg = format!("{}: {e}", path.display());
    match e {
        DatasetError::Io(_) => CliError::Runtime(msg),
        DatasetError::Config(_) => CliError::Usage(msg),
        _ => CliError::Data(msg),
    }
}

fn load_one(path: &Path) -> Result<Arc<Layout>, CliError> {
    load_layout(path).map(Arc::new).map_err(|e| layout_error(path, e))
}

/// Loads layouts from a directory holding `manifest.json`, from a manifest
/// file, or from a single layout file. Manifest order is preserved.
pub fn load_layouts(spec: &Path) -> Result<Vec<Arc<Layout>>, CliError> {
    let manifest_path = if spec.is_dir() { spec.join("manifest.json") } else { spec.to_path_buf() };
    let text = std::fs::read_to_string(&manifest_path)
        .map_err(|e| CliError::Runtime(format!("{}: {e}", manifest_path.display())))?;

    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    if value.get("layouts").is_none() {
        // Not a manifest: treat the file as one layout document.
        return Ok(vec![load_one(&manifest_path)?]);
    }

    let manifest: Manifest = serde_json::from_value(value)
        .map_err(|e| CliError::Data(format!("{}: {e}", manifest_path.display())))?;
    if manifest.version != MANIFEST_VERSION {
        return Err(CliError::Data(format!(
            "{}: unsupported manifest version {}",
            manifest_path.display(),
            manifest.version
        )));
    }
    let base = manifest_path.parent().unwrap_or(Path::new(""));
    manifest.layouts.iter().map(|rel| load_one(&base.join(rel))).collect()
}
