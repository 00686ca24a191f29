//! Navigation model files (JSON, `"schema": 1`) and the bundled models.
//!
//! ```json
//! {
//!   "schema": 1,
//!   "name": "tiny",
//!   "nodes": ["Home", "List"],
//!   "home": "Home",
//!   "state": { "variables": { "pages": 0 }, "collections": { "items": [] } },
//!   "edges": [
//!     { "id": "open", "source": "Home", "dest": "List", "method": "open",
//!       "effects": [["set", "pages", ["+", ["var", "pages"], 1]]] },
//!     { "id": "add", "source": "List", "dest": "List", "method": "add",
//!       "params": [{ "name": "n", "domain": { "int_range": [0, 9] } }],
//!       "effects": [["insert", "items"]] },
//!     { "id": "show", "source": "List", "dest": "Home", "method": "show",
//!       "params": [{ "name": "id", "domain": { "ref_collection": "items" } }],
//!       "guard": ["in", ["arg", "id"], "items"] }
//!   ]
//! }
//! ```
//!
//! Guards and effects are prefix arrays. Guards: `true`, `false`, `and`,
//! `or`, `not`, `==`, `!=`, `<`, `<=`, `>`, `>=`, `in <expr> <collection>`,
//! `nonempty <collection>`. Expressions: literals, `var`, `arg`,
//! `len <collection>`, `+`, `-`. Effects: `set <var> <expr>`,
//! `insert <collection>` (next auto-increment id),
//! `insert_value <collection> <expr>`, `remove <collection> <expr>`,
//! `clear <collection>`.

use std::fs;
use std::path::{Path, PathBuf};

use artq_core::nav::{ModelDocument, NavigationModel};

use crate::error::CliError;

/// Parses and validates a model document.
pub fn parse_model(text: &str, origin: &str) -> Result<NavigationModel, CliError> {
    let doc: ModelDocument = serde_json::from_str(text).map_err(|e| CliError::Schema {
        origin: origin.to_string(),
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    NavigationModel::from_document(&doc).map_err(|source| CliError::Semantic {
        origin: origin.to_string(),
        source,
    })
}

pub fn load_model(path: &Path) -> Result<NavigationModel, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut model = parse_model(&text, &path.display().to_string())?;
    if model.name.is_empty() {
        model.name = model_stem(path);
    }
    Ok(model)
}

fn model_stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Model files named by `spec`: the word `bundled`, a bundled model name,
/// a `.json` file, or a directory of `.json` files (sorted by name).
pub fn resolve_models(spec: &str) -> Vec<(String, Result<NavigationModel, CliError>)> {
    if spec == "bundled" {
        return BUNDLED.iter().map(|(name, _)| (name.to_string(), bundled(name))).collect();
    }
    if BUNDLED.iter().any(|(name, _)| *name == spec) {
        return vec![(spec.to_string(), bundled(spec))];
    }
    let path = PathBuf::from(spec);
    if path.is_dir() {
        let entries = match fs::read_dir(&path) {
            Ok(e) => e,
            Err(e) => return vec![(spec.to_string(), Err(CliError::io(&path, e)))],
        };
        let mut files: Vec<PathBuf> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        files.sort();
        return files.iter().map(|p| (model_stem(p), load_model(p))).collect();
    }
    vec![(model_stem(&path), load_model(&path))]
}

/// Bundled models, from low to high complexity.
pub const BUNDLED: &[(&str, &str)] = &[
    ("star", include_str!("../models/star.json")),
    ("petclinic-like", include_str!("../models/petclinic-like.json")),
    ("bookshelf", include_str!("../models/bookshelf.json")),
    ("webshop", include_str!("../models/webshop.json")),
    ("helpdesk", include_str!("../models/helpdesk.json")),
    ("vault", include_str!("../models/vault.json")),
];

pub fn bundled(name: &str) -> Result<NavigationModel, CliError> {
    let (_, text) = BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| CliError::Config(format!("no bundled model named `{name}`")))?;
    parse_model(text, name)
}
