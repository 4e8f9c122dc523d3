use std::path::Path;
use std::sync::Arc;

use super::{load_model, Family, ModelError, RobotModel};

const BUILTIN_DOCUMENTS: [(&str, &str); 10] = [
    ("cartesian_ppp", include_str!("../../models/cartesian_ppp.json")),
    ("cylindrical_rpp", include_str!("../../models/cylindrical_rpp.json")),
    ("spherical_rrp", include_str!("../../models/spherical_rrp.json")),
    ("scara_rrp", include_str!("../../models/scara_rrp.json")),
    ("articulated_rrr", include_str!("../../models/articulated_rrr.json")),
    ("wyvernclaws4", include_str!("../../models/wyvernclaws4.json")),
    ("wyvernclaws5", include_str!("../../models/wyvernclaws5.json")),
    ("cartesian_sxyxc", include_str!("../../models/cartesian_sxyxc.json")),
    ("cartesian_hxylx", include_str!("../../models/cartesian_hxylx.json")),
    ("scara_ykx1000", include_str!("../../models/scara_ykx1000.json")),
];

/// The reference model of each structure family. The remaining catalog
/// entries are stand-ins for specific commercial or hobby arms.
pub const REFERENCE_MODELS: [(Family, &str); 5] = [
    (Family::Cartesian, "cartesian_ppp"),
    (Family::Cylindrical, "cylindrical_rpp"),
    (Family::Spherical, "spherical_rrp"),
    (Family::Scara, "scara_rrp"),
    (Family::Articulated, "articulated_rrr"),
];

/// Every built-in model, parsed from the bundled fixture documents.
pub fn builtin_catalog() -> Vec<RobotModel> {
    BUILTIN_DOCUMENTS
        .iter()
        .map(|(name, doc)| {
            let model = load_model(doc).unwrap_or_else(|e| panic!("built-in model {name} is invalid: {e}"));
            assert_eq!(model.name(), *name);
            model
        })
        .collect()
}

/// Named set of models: the built-ins plus anything loaded at runtime.
#[derive(Debug, Clone)]
pub struct Catalog {
    models: Vec<Arc<RobotModel>>,
}

impl Default for Catalog {
    fn default() -> Self {
        Self::builtin()
    }
}

impl Catalog {
    pub fn builtin() -> Self {
        Catalog {
            models: builtin_catalog().into_iter().map(Arc::new).collect(),
        }
    }

    pub fn empty() -> Self {
        Catalog { models: Vec::new() }
    }

    pub fn get(&self, name: &str) -> Result<Arc<RobotModel>, ModelError> {
        self.models
            .iter()
            .find(|m| m.name() == name)
            .cloned()
            .ok_or_else(|| ModelError::UnknownModel(name.to_string()))
    }

    pub fn models(&self) -> &[Arc<RobotModel>] {
        &self.models
    }

    /// Adds a model, replacing any existing one with the same name.
    pub fn insert(&mut self, model: RobotModel) {
        match self.models.iter().position(|m| m.name() == model.name()) {
            Some(i) => self.models[i] = Arc::new(model),
            None => self.models.push(Arc::new(model)),
        }
    }

    /// Loads every `*.json` file in `dir`, in file-name order.
    pub fn load_dir(&mut self, dir: &Path) -> Result<usize, ModelError> {
        let entries = std::fs::read_dir(dir).map_err(|e| ModelError::Parse(format!("{}: {e}", dir.display())))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
            .collect();
        paths.sort();
        for path in &paths {
            let text = std::fs::read_to_string(path).map_err(|e| ModelError::Parse(format!("{}: {e}", path.display())))?;
            let model = load_model(&text).map_err(|e| match e {
                ModelError::Parse(m) => ModelError::Parse(format!("{}: {m}", path.display())),
                ModelError::Invalid { field, message } => ModelError::Invalid {
                    field: format!("{}: {field}", path.display()),
                    message,
                },
                other => other,
            })?;
            self.insert(model);
        }
        Ok(paths.len())
    }
}
