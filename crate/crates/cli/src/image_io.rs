//! Images on disk: flat little-endian `f64` data plus a JSON sidecar with the
//! shape, and CSV export for plotting.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use proxnest::ImageVector;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const DTYPE: &str = "float64_le";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub shape: [usize; 2],
    pub dtype: String,
}

/// `image.bin` → `image.json`
pub fn sidecar_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("json")
}

pub fn write_image(path: &Path, image: &ImageVector) -> CliResult<()> {
    let mut bytes = Vec::with_capacity(8 * image.len());
    for v in image.as_slice() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| CliError::io(format!("writing {}", path.display()), e))?;
    let sidecar = Sidecar {
        shape: [image.rows(), image.cols()],
        dtype: DTYPE.to_string(),
    };
    let meta = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar).expect("sidecar serialises");
    fs::write(&meta, text).map_err(|e| CliError::io(format!("writing {}", meta.display()), e))
}

pub fn read_image(path: &Path) -> CliResult<ImageVector> {
    let meta = sidecar_path(path);
    let text = fs::read_to_string(&meta)
        .map_err(|e| CliError::io(format!("reading {}", meta.display()), e))?;
    let sidecar: Sidecar = serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: meta.clone(),
        source,
    })?;
    if sidecar.dtype != DTYPE {
        return Err(CliError::Config(format!(
            "unsupported image dtype {:?}, expected {DTYPE}",
            sidecar.dtype
        )));
    }
    let bytes = fs::read(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let [rows, cols] = sidecar.shape;
    if bytes.len() != 8 * rows * cols {
        return Err(CliError::Config(format!(
            "{} holds {} bytes, expected {} for shape {rows}x{cols}",
            path.display(),
            bytes.len(),
            8 * rows * cols
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    Ok(ImageVector::new(data, (rows, cols))?)
}

/// One image row per line.
pub fn write_csv(path: &Path, image: &ImageVector) -> CliResult<()> {
    let mut out = String::new();
    for row in image.as_slice().chunks(image.cols()) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
    f.write_all(out.as_bytes())
        .map_err(|e| CliError::io(format!("writing {}", path.display()), e))
}
