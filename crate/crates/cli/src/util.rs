//! Shared filesystem helpers for the commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use irforge_core::codec::ImageFormat;

use crate::CliError;

/// Sorted list of files with a recognized image extension, non-recursive.
pub fn list_image_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::usage(format!("{}: {e}", dir.display())))?;
        let path = entry.path();
        if path.is_file() && ImageFormat::from_path(&path).is_ok() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

/// Maps filename stem to path. Duplicate stems keep the sorted-first file
/// and report the rest through `on_duplicate`.
pub fn stem_index(
    files: &[PathBuf],
    mut on_duplicate: impl FnMut(&Path),
) -> BTreeMap<String, PathBuf> {
    let mut index = BTreeMap::new();
    for path in files {
        let Some(stem) = path.file_stem().map(|s| s.to_string_lossy().into_owned()) else {
            continue;
        };
        match index.entry(stem) {
            std::collections::btree_map::Entry::Occupied(_) => on_duplicate(path),
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(path.clone());
            }
        }
    }
    index
}
