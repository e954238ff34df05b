use std::fs::{File, OpenOptions};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use pddlkit_core::llm::{Completion, CompletionRequest, LlmError, Usage};

/// One line of the ledger.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub seq: u64,
    pub key: String,
    pub prompt: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub usage: Option<Usage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unix_ms: Option<u128>,
}

struct Inner {
    seq: u64,
    out: BufWriter<File>,
}

/// Append-only JSONL log of requests and responses.
pub struct Ledger {
    path: PathBuf,
    timestamps: bool,
    inner: Mutex<Inner>,
}

impl Ledger {
    /// Truncates `path`. With `timestamps` off the file is a pure function
    /// of the exchanges, which fixture runs rely on.
    pub fn create(path: &Path, timestamps: bool) -> io::Result<Self> {
        let file = OpenOptions::new()
            .create(true)
            .write(true)
            .truncate(true)
            .open(path)?;
        Ok(Ledger {
            path: path.to_path_buf(),
            timestamps,
            inner: Mutex::new(Inner {
                seq: 0,
                out: BufWriter::new(file),
            }),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn record(
        &self,
        req: &CompletionRequest,
        result: &Result<Completion, LlmError>,
    ) -> io::Result<()> {
        let mut inner = self.inner.lock().unwrap_or_else(|p| p.into_inner());
        inner.seq += 1;
        let (backend, response, usage, error) = match result {
            Ok(c) => (
                Some(c.backend.clone()),
                Some(c.text.clone()),
                Some(c.usage),
                None,
            ),
            Err(e) => (None, None, None, Some(e.to_string())),
        };
        let entry = LedgerEntry {
            seq: inner.seq,
            key: req.key.clone(),
            prompt: req.prompt.clone(),
            backend,
            response,
            usage,
            error,
            unix_ms: self.timestamps.then(|| {
                SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map_or(0, |d| d.as_millis())
            }),
        };
        serde_json::to_writer(&mut inner.out, &entry)?;
        inner.out.write_all(b"\n")?;
        inner.out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_are_numbered_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ledger.jsonl");
        let l = Ledger::create(&path, false).unwrap();
        let req = CompletionRequest::new("k", "p");
        l.record(&req, &Err(LlmError::MissingFixture { key: "k".into() }))
            .unwrap();
        l.record(
            &req,
            &Ok(Completion {
                text: "t".into(),
                usage: Usage::default(),
                backend: "fixture:k".into(),
            }),
        )
        .unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let entries: Vec<LedgerEntry> = text
            .lines()
            .map(|l| serde_json::from_str(l).unwrap())
            .collect();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[1].seq, 2);
        assert!(entries[0].error.is_some());
        assert!(!text.contains("unix_ms"));
    }
}
