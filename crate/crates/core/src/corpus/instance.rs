use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Label used for instances that express none of the known relations.
pub const NOTA: &str = "NOTA";

/// Half-open token interval `[start, end)`. Serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span(pub usize, pub usize);

impl Span {
    pub fn start(&self) -> usize {
        self.0
    }

    pub fn end(&self) -> usize {
        self.1
    }

    pub fn len(&self) -> usize {
        self.1.saturating_sub(self.0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, i: usize) -> bool {
        self.0 <= i && i < self.1
    }

    fn overlaps(&self, other: &Span) -> bool {
        self.0 < other.1 && other.0 < self.1
    }
}

/// A tokenized sentence with a designated head and tail entity.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationInstance {
    pub tokens: Vec<String>,
    pub head: Span,
    pub tail: Span,
    pub relation: String,
    /// Token indices on the dependency path between the entity pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dep_path: Option<Vec<usize>>,
}

impl RelationInstance {
    pub fn new(tokens: Vec<String>, head: Span, tail: Span, relation: impl Into<String>) -> Self {
        Self {
            tokens,
            head,
            tail,
            relation: relation.into(),
            dep_path: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn is_nota(&self) -> bool {
        self.relation == NOTA
    }

    /// True if token `i` belongs to either entity mention.
    pub fn in_entity(&self, i: usize) -> bool {
        self.head.contains(i) || self.tail.contains(i)
    }

    /// Checks span bounds, span overlap, and dependency-path bounds.
    pub fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        for (name, span) in [("head", self.head), ("tail", self.tail)] {
            if span.is_empty() || span.end() > n {
                return Err(Error::Validation(format!(
                    "{name} span [{}, {}) out of bounds for {n} tokens",
                    span.start(),
                    span.end()
                )));
            }
        }
        if self.head.overlaps(&self.tail) {
            return Err(Error::Validation(format!(
                "head span {:?} overlaps tail span {:?}",
                self.head, self.tail
            )));
        }
        if let Some(path) = &self.dep_path {
            if let Some(&bad) = path.iter().find(|&&i| i >= n) {
                return Err(Error::Validation(format!(
                    "dep_path index {bad} out of bounds for {n} tokens"
                )));
            }
        }
        Ok(())
    }
}

/// Reads one instance per line. Blank lines are skipped.
pub fn load_jsonl(path: impl AsRef<Path>) -> Result<Vec<RelationInstance>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (idx, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            path: path.display().to_string(),
            line: idx + 1,
            message,
        };
        let inst: RelationInstance =
            serde_json::from_str(&line).map_err(|e| parse_err(e.to_string()))?;
        inst.validate().map_err(|e| parse_err(e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}

pub fn write_jsonl(path: impl AsRef<Path>, instances: &[RelationInstance]) -> Result<()> {
    write_records(path, instances)
}

/// Writes any serializable records as JSON lines.
pub fn write_records<T: Serialize>(path: impl AsRef<Path>, records: &[T]) -> Result<()> {
    let path = path.as_ref();
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, r)?;
        buf.push(b'\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&buf).map_err(|e| Error::io(path, e))
}
