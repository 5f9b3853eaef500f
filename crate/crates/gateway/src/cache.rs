//! Request fingerprints and the content-addressed transcript cache.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use rulegen_core::model::TaskKind;

use crate::provider::{DecodingParams, Usage};
use crate::GatewayError;

/// Hex SHA-256 over everything that can change a response: provider, model,
/// template (id and text), the rendered prompt (which embeds the dataset)
/// and the decoding parameters.
pub fn fingerprint(
    provider: &str,
    model: &str,
    template_id: &str,
    template_body: &str,
    prompt: &str,
    decoding: &DecodingParams,
) -> String {
    // Length-prefixed fields, so no two field splits hash alike.
    let decoding = serde_json::to_string(&(
        decoding.temperature,
        decoding.top_p,
        decoding.max_tokens,
        decoding.seed,
    ))
    .expect("params serialize");
    let mut h = Sha256::new();
    for field in [provider, model, template_id, template_body, prompt, decoding.as_str()] {
        h.update((field.len() as u64).to_le_bytes());
        h.update(field.as_bytes());
    }
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub request_fingerprint: String,
    pub model_id: String,
    pub model: String,
    pub provider: String,
    pub template_id: String,
    pub task_kind: TaskKind,
    pub prompt: String,
    pub raw_response: String,
    pub decoding: DecodingParams,
    #[serde(default)]
    pub usage: Option<Usage>,
    /// Seconds since the Unix epoch when the response arrived.
    pub timestamp: u64,
    /// Transient failures retried before this response.
    #[serde(default)]
    pub retries: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub writes: u64,
}

/// Transcripts stored as `<dir>/<first two hex digits>/<fingerprint>.json`.
#[derive(Debug)]
pub struct TranscriptCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
    hits: AtomicU64,
    misses: AtomicU64,
    writes: AtomicU64,
}

impl TranscriptCache {
    pub fn new(dir: impl Into<PathBuf>) -> TranscriptCache {
        TranscriptCache {
            dir: dir.into(),
            write_lock: Mutex::new(()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
            writes: AtomicU64::new(0),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, fp: &str) -> PathBuf {
        self.dir.join(&fp[..2.min(fp.len())]).join(format!("{fp}.json"))
    }

    /// Looks up a transcript without touching the statistics.
    pub fn peek(&self, fp: &str) -> Result<Option<Transcript>, GatewayError> {
        let path = self.path(fp);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(GatewayError::Cache(format!("{}: {e}", path.display()))),
        };
        match serde_json::from_str::<Transcript>(&text) {
            Ok(t) if t.request_fingerprint == fp => Ok(Some(t)),
            // A torn or foreign file is treated as absent and overwritten later.
            _ => {
                log::warn!("ignoring unreadable cache entry {}", path.display());
                Ok(None)
            }
        }
    }

    pub fn get(&self, fp: &str) -> Result<Option<Transcript>, GatewayError> {
        let t = self.peek(fp)?;
        let counter = if t.is_some() { &self.hits } else { &self.misses };
        counter.fetch_add(1, Ordering::Relaxed);
        Ok(t)
    }

    /// Writes are serialized and atomic: a temporary file renamed into place.
    pub fn put(&self, t: &Transcript) -> Result<(), GatewayError> {
        let io = |e: std::io::Error| GatewayError::Cache(e.to_string());
        let path = self.path(&t.request_fingerprint);
        let _guard = self.write_lock.lock().unwrap();
        fs::create_dir_all(path.parent().unwrap()).map_err(io)?;
        let tmp = path.with_extension(format!("json.tmp{}", std::process::id()));
        let text = serde_json::to_string_pretty(t).expect("transcript serializes");
        fs::write(&tmp, text).map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        self.writes.fetch_add(1, Ordering::Relaxed);
        Ok(())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            writes: self.writes.load(Ordering::Relaxed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fp(prompt: &str, d: &DecodingParams) -> String {
        fingerprint("mock", "m", "t", "body", prompt, d)
    }

    #[test]
    fn every_field_matters() {
        let d = DecodingParams::default();
        let base = fp("p", &d);
        assert_eq!(base, fp("p", &d));
        assert_eq!(base.len(), 64);
        assert_ne!(base, fingerprint("mock2", "m", "t", "body", "p", &d));
        assert_ne!(base, fingerprint("mock", "m2", "t", "body", "p", &d));
        assert_ne!(base, fingerprint("mock", "m", "t2", "body", "p", &d));
        assert_ne!(base, fingerprint("mock", "m", "t", "body2", "p", &d));
        assert_ne!(base, fp("p2", &d));
        assert_ne!(base, fp("p", &DecodingParams { temperature: Some(0.0), ..d.clone() }));
        assert_ne!(base, fp("p", &DecodingParams { seed: Some(1), ..d }));
        // Field boundaries are unambiguous.
        assert_ne!(
            fingerprint("ab", "c", "t", "b", "p", &DecodingParams::default()),
            fingerprint("a", "bc", "t", "b", "p", &DecodingParams::default())
        );
    }
}
