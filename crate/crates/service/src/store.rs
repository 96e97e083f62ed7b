//! Append-only event logs, one line-delimited file per session.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;
use tutor_core::session::{parse_log, write_log, InteractionEvent};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}, line {line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
}

#[derive(Clone, Debug)]
pub struct LogStore {
    dir: PathBuf,
}

impl LogStore {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| StoreError::Io { path: dir.clone(), source })?;
        Ok(LogStore { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path_for(&self, session: &str) -> PathBuf {
        self.dir.join(format!("{session}.jsonl"))
    }

    /// Appends and flushes. An empty slice is a no-op.
    pub fn append(&self, session: &str, events: &[InteractionEvent]) -> Result<(), StoreError> {
        if events.is_empty() {
            return Ok(());
        }
        let path = self.path_for(session);
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err)?;
        f.write_all(write_log(events).as_bytes()).map_err(io_err)?;
        f.sync_data().map_err(io_err)
    }

    /// Replaces a session's file with exactly `events`.
    pub fn write_all(&self, session: &str, events: &[InteractionEvent]) -> Result<(), StoreError> {
        let path = self.path_for(session);
        let io_err = |source| StoreError::Io { path: path.clone(), source };
        let mut f = File::create(&path).map_err(io_err)?;
        f.write_all(write_log(events).as_bytes()).map_err(io_err)
    }

    /// Every log in the directory, ordered by file name.
    pub fn load_all(&self) -> Result<Vec<(String, Vec<InteractionEvent>)>, StoreError> {
        load_dir(&self.dir)
    }
}

pub fn load_file(path: &Path) -> Result<Vec<InteractionEvent>, StoreError> {
    let text = fs::read_to_string(path).map_err(|source| StoreError::Io { path: path.into(), source })?;
    parse_log(&text).map_err(|(line, source)| StoreError::Parse { path: path.into(), line, source })
}

/// Reads every `*.jsonl` file in `dir`, ordered by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<(String, Vec<InteractionEvent>)>, StoreError> {
    let io_err = |source| StoreError::Io { path: dir.into(), source };
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_err)?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_err)?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            load_file(&p).map(|events| (stem, events))
        })
        .collect()
}
