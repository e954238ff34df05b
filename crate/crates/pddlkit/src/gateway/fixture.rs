use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use pddlkit_core::llm::ReplayModel;

#[derive(Debug, thiserror::Error)]
pub enum FixtureError {
    #[error("cannot read fixture store {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("fixture store {0} holds no `.txt` files")]
    Empty(PathBuf),
}

/// Loads every `<key>.txt` below `dir`; the key is the relative path with
/// `/` separators and without the extension.
pub fn load_fixture_dir(dir: &Path) -> Result<ReplayModel, FixtureError> {
    let mut store = ReplayModel::new();
    walk(dir, dir, &mut store)?;
    if store.is_empty() {
        return Err(FixtureError::Empty(dir.to_path_buf()));
    }
    Ok(store)
}

fn walk(base: &Path, dir: &Path, store: &mut ReplayModel) -> Result<(), FixtureError> {
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| FixtureError::Io { path, source }
    };
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.is_dir() {
            walk(base, &path, store)?;
        } else if path.extension().is_some_and(|e| e == "txt") {
            let rel = path
                .strip_prefix(base)
                .expect("below base")
                .with_extension("");
            let key: Vec<String> = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            let text = fs::read_to_string(&path).map_err(io_err(&path))?;
            store.insert(key.join("/"), text);
        }
    }
    Ok(())
}
