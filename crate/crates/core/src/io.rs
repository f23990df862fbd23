//! Configuration files.
//!
//! ```json
//! {
//!   "cell": {"omega1": 1.0, "omega2": [0.0, 1.0]},
//!   "radius": 0.1,
//!   "centers": [[0.0, 0.0], [0.25, -0.1]],
//!   "meta": {"seed": 42, "generator": "rsa", "nu": 0.0628}
//! }
//! ```
//!
//! All floats are written with 17 significant digits so that a configuration
//! read back is bit-identical to the one written.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::format::F17;
use crate::geometry::DiskConfiguration;
use crate::lattice::Cell;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigMeta {
    pub seed: Option<u64>,
    pub generator: String,
    pub nu: F17,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConfigFile {
    pub cell: Cell,
    pub radius: F17,
    pub centers: Vec<[F17; 2]>,
    pub meta: ConfigMeta,
}

impl ConfigFile {
    pub fn from_config(config: &DiskConfiguration, seed: Option<u64>, generator: &str) -> Self {
        ConfigFile {
            cell: config.cell().clone(),
            radius: F17(config.radius()),
            centers: config.centers().iter().map(|z| [F17(z.re), F17(z.im)]).collect(),
            meta: ConfigMeta {
                seed,
                generator: generator.to_string(),
                nu: F17(config.concentration()),
            },
        }
    }

    /// Validated configuration described by the file.
    pub fn to_config(&self) -> Result<DiskConfiguration> {
        let centers = self.centers.iter().map(|[x, y]| Complex64::new(x.0, y.0)).collect();
        DiskConfiguration::new(self.cell.clone(), centers, self.radius.0)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

pub fn write_config(path: &Path, config: &DiskConfiguration, seed: Option<u64>, generator: &str) -> Result<()> {
    let file = ConfigFile::from_config(config, seed, generator);
    fs::write(path, file.to_json()? + "\n")?;
    Ok(())
}

pub fn read_config_file(path: &Path) -> Result<ConfigFile> {
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_config(path: &Path) -> Result<DiskConfiguration> {
    read_config_file(path)?.to_config()
}
