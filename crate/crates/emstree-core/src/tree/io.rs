//! Versioned JSON persistence for trees and ensembles.
//!
//! ```json
//! { "kind": "ensemble",
//!   "schema_version": 1,
//!   "features": [{"name": "T_in", "lower": 10.0, "upper": 35.0}],
//!   "channels": [{"action": {"name": "u", "kind": "discrete", "values": [0.0, 0.5, 1.0]},
//!                 "tree": {"nodes": [{"kind": "leaf", "action": 0.5, "visits": 12}]}}] }
//! ```
//!
//! A single tree uses `"kind": "tree"` with `features`, `action` and `tree`
//! at the top level. Nodes are stored breadth-first from the root at index
//! 0; split nodes carry `feature`, `threshold`, `left` and `right`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ActionSpec, Channel, DecisionTree, FeatureSpec, TreeEnsemble};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum TreeIoError {
    #[error("unsupported schema version {found} (expected {SCHEMA_VERSION})")]
    SchemaVersion { found: u32 },
    #[error("document holds a {found}, expected a {expected}")]
    Kind {
        expected: &'static str,
        found: &'static str,
    },
    #[error("document is not a consistent tree: {0}")]
    Inconsistent(&'static str),
    #[error("malformed document: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Deserialize)]
struct VersionProbe {
    schema_version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Body {
    Tree {
        schema_version: u32,
        features: Vec<FeatureSpec>,
        action: ActionSpec,
        tree: DecisionTree,
    },
    Ensemble {
        schema_version: u32,
        features: Vec<FeatureSpec>,
        channels: Vec<Channel>,
    },
}

impl Body {
    fn kind(&self) -> &'static str {
        match self {
            Body::Tree { .. } => "tree",
            Body::Ensemble { .. } => "ensemble",
        }
    }
}

fn parse(text: &str) -> Result<Body, TreeIoError> {
    let probe: VersionProbe = serde_json::from_str(text)?;
    if probe.schema_version != SCHEMA_VERSION {
        return Err(TreeIoError::SchemaVersion {
            found: probe.schema_version,
        });
    }
    Ok(serde_json::from_str(text)?)
}

fn write(path: &Path, body: Body) -> Result<(), TreeIoError> {
    let mut text = serde_json::to_string_pretty(&body)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn ensemble_to_json(ensemble: &TreeEnsemble) -> Result<String, TreeIoError> {
    let body = Body::Ensemble {
        schema_version: SCHEMA_VERSION,
        features: ensemble.features.clone(),
        channels: ensemble.channels.clone(),
    };
    Ok(serde_json::to_string_pretty(&body)? + "\n")
}

pub fn ensemble_from_json(text: &str) -> Result<TreeEnsemble, TreeIoError> {
    match parse(text)? {
        Body::Ensemble {
            features, channels, ..
        } => {
            let ens = TreeEnsemble { features, channels };
            if !ens.is_consistent() {
                return Err(TreeIoError::Inconsistent(
                    "feature index, threshold or leaf action out of range, or malformed node arena",
                ));
            }
            Ok(ens)
        }
        other => Err(TreeIoError::Kind {
            expected: "ensemble",
            found: other.kind(),
        }),
    }
}

pub fn save_ensemble(ensemble: &TreeEnsemble, path: &Path) -> Result<(), TreeIoError> {
    fs::write(path, ensemble_to_json(ensemble)?)?;
    Ok(())
}

pub fn load_ensemble(path: &Path) -> Result<TreeEnsemble, TreeIoError> {
    ensemble_from_json(&fs::read_to_string(path)?)
}

pub fn save_tree(
    tree: &DecisionTree,
    features: &[FeatureSpec],
    action: &ActionSpec,
    path: &Path,
) -> Result<(), TreeIoError> {
    write(
        path,
        Body::Tree {
            schema_version: SCHEMA_VERSION,
            features: features.to_vec(),
            action: action.clone(),
            tree: tree.clone(),
        },
    )
}

pub fn load_tree(path: &Path) -> Result<(DecisionTree, Vec<FeatureSpec>, ActionSpec), TreeIoError> {
    match parse(&fs::read_to_string(path)?)? {
        Body::Tree {
            features,
            action,
            tree,
            ..
        } => {
            if features.iter().any(|f| f.validate().is_err())
                || action.validate().is_err()
                || !tree.is_consistent_with(&features, &action)
            {
                return Err(TreeIoError::Inconsistent(
                    "feature index, threshold or leaf action out of range, or malformed node arena",
                ));
            }
            Ok((tree, features, action))
        }
        other => Err(TreeIoError::Kind {
            expected: "tree",
            found: other.kind(),
        }),
    }
}
