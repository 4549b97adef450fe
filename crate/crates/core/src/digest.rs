//! Short content digests used to tie results to their data and settings.

use alloc::string::String;
use core::fmt::Write;

use sha2::{Digest, Sha256};

/// Incremental SHA-256 over typed fields, rendered as 16 hex characters.
#[derive(Default)]
pub struct Digester(Sha256);

impl Digester {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn str(&mut self, s: &str) -> &mut Self {
        self.0.update((s.len() as u64).to_le_bytes());
        self.0.update(s.as_bytes());
        self
    }

    pub fn f64s(&mut self, values: &[f64]) -> &mut Self {
        self.0.update((values.len() as u64).to_le_bytes());
        for v in values {
            self.0.update(v.to_bits().to_le_bytes());
        }
        self
    }

    pub fn finish(&mut self) -> String {
        let bytes = core::mem::take(&mut self.0).finalize();
        let mut out = String::with_capacity(16);
        for b in bytes.iter().take(8) {
            let _ = write!(out, "{b:02x}");
        }
        out
    }
}
