//! Streaming JSONL ingestion.
//!
//! One document per line: `{"id", "text", "language"}` plus optional
//! `style`, `source`, `metadata`. Lines that fail to parse (or carry an
//! empty id or an unsupported language) are skipped and counted, never
//! fatal; a stream where malformed lines outnumber valid ones is rejected
//! afterwards as a wrong-file guard. Memory stays bounded: one line at a
//! time.

use std::fs::File;
use std::io::{BufRead, BufReader, Lines, Read};
use std::path::Path;

use crate::document::Document;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub valid: u64,
    pub malformed: u64,
}

impl IngestStats {
    /// Wrong-file guard: more malformed than valid lines.
    pub fn check_malformed_majority(&self) -> Result<()> {
        if self.malformed > self.valid {
            return Err(Error::input(format!(
                "{} of {} lines malformed; refusing to treat this as a corpus",
                self.malformed,
                self.malformed + self.valid
            )));
        }
        Ok(())
    }
}

pub struct JsonlReader<R: Read> {
    lines: Lines<BufReader<R>>,
    label: String,
    lineno: u64,
    stats: IngestStats,
    io_failed: bool,
}

impl JsonlReader<File> {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| {
            Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
        })?;
        Ok(JsonlReader::new(file, &path.display().to_string()))
    }
}

impl<R: Read> JsonlReader<R> {
    pub fn new(input: R, label: &str) -> Self {
        JsonlReader {
            lines: BufReader::new(input).lines(),
            label: label.to_string(),
            lineno: 0,
            stats: IngestStats::default(),
            io_failed: false,
        }
    }

    pub fn stats(&self) -> IngestStats {
        self.stats
    }

    fn parse(&mut self, line: &str) -> Result<Document> {
        match serde_json::from_str::<Document>(line) {
            Ok(mut doc) if !doc.id.is_empty() => {
                doc.normalize_nfc();
                self.stats.valid += 1;
                Ok(doc)
            }
            Ok(_) => {
                self.stats.malformed += 1;
                let msg = format!("{}:{}: document id is empty", self.label, self.lineno);
                log::warn!("{msg}; skipped");
                Err(Error::format(msg))
            }
            Err(e) => {
                self.stats.malformed += 1;
                let msg = format!("{}:{}: {e}", self.label, self.lineno);
                log::warn!("malformed line skipped: {msg}");
                Err(Error::format(msg))
            }
        }
    }
}

/// Yields `Ok(document)` per valid line and `Err(Format)` per malformed
/// line (already counted); an I/O failure yields one `Err(Io)` and ends
/// the stream.
impl<R: Read> Iterator for JsonlReader<R> {
    type Item = Result<Document>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.io_failed {
            return None;
        }
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => {
                    self.io_failed = true;
                    return Some(Err(Error::Io(e)));
                }
            };
            self.lineno += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&line));
        }
    }
}

/// Convenience: read a whole JSONL corpus into memory, skipping malformed
/// lines and applying the malformed-majority guard.
pub fn read_jsonl_corpus(path: &Path) -> Result<(Vec<Document>, IngestStats)> {
    let mut reader = JsonlReader::open(path)?;
    let mut docs = Vec::new();
    for item in &mut reader {
        match item {
            Ok(doc) => docs.push(doc),
            Err(Error::Format(_)) => {}
            Err(fatal) => return Err(fatal),
        }
    }
    let stats = reader.stats();
    stats.check_malformed_majority()?;
    Ok((docs, stats))
}
