//! Text inputs: frequency tables (TSV), vocabularies (JSON) and gold labels.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::{HubError, Result};

/// Corpus token counts. Ids missing from the table count as zero.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FrequencyTable {
    counts: BTreeMap<usize, u64>,
    total: u64,
}

impl FrequencyTable {
    pub fn from_counts(entries: impl IntoIterator<Item = (usize, u64)>) -> Result<Self> {
        let mut counts = BTreeMap::new();
        let mut total = 0u64;
        for (id, c) in entries {
            if counts.insert(id, c).is_some() {
                return Err(HubError::Data(format!("duplicate token id {id}")));
            }
            total = total
                .checked_add(c)
                .ok_or_else(|| HubError::Data("frequency total overflows u64".into()))?;
        }
        Ok(Self { counts, total })
    }

    pub fn count(&self, id: usize) -> u64 {
        self.counts.get(&id).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.counts.iter().map(|(&id, &c)| (id, c))
    }

    /// Checks that every id is a row of a vocabulary of `size` tokens.
    pub fn check_vocab_size(&self, size: usize) -> Result<()> {
        match self.counts.keys().next_back() {
            Some(&id) if id >= size => Err(HubError::Data(format!(
                "frequency table id {id} outside vocabulary of size {size}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Parses `<id>\t<count>` lines. A final newline is optional.
pub fn parse_frequency_table(text: &str) -> Result<FrequencyTable> {
    let mut counts = BTreeMap::new();
    let mut total = 0u64;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let err = |message: String| HubError::Parse {
            line: line_no,
            message,
        };
        let (id, count) = line
            .split_once('\t')
            .ok_or_else(|| err(format!("expected `<id>\\t<count>`, got {line:?}")))?;
        let id: usize = id
            .parse()
            .map_err(|_| err(format!("bad token id {id:?}")))?;
        let count: i128 = count
            .parse()
            .map_err(|_| err(format!("bad count {count:?}")))?;
        if count < 0 {
            return Err(err(format!("negative count {count}")));
        }
        let count = u64::try_from(count).map_err(|_| err(format!("count {count} too large")))?;
        if counts.insert(id, count).is_some() {
            return Err(err(format!("duplicate token id {id}")));
        }
        total = total
            .checked_add(count)
            .ok_or_else(|| err("frequency total overflows u64".into()))?;
    }
    Ok(FrequencyTable { counts, total })
}

pub fn read_frequency_table(path: impl AsRef<Path>) -> Result<FrequencyTable> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HubError::io(path, e))?;
    parse_frequency_table(&text)
}

/// Token strings indexed by unembedding row.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
}

impl Vocabulary {
    pub fn new(tokens: Vec<String>) -> Self {
        Self { tokens }
    }

    pub fn parse(json: &str) -> Result<Self> {
        let tokens: Vec<String> = serde_json::from_str(json).map_err(|e| HubError::Parse {
            line: e.line(),
            message: format!("vocabulary must be a JSON array of strings: {e}"),
        })?;
        Ok(Self { tokens })
    }

    pub fn get(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

pub fn read_vocabulary(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HubError::io(path, e))?;
    Vocabulary::parse(&text)
}

/// One decimal token id per line.
pub fn parse_gold_labels(text: &str) -> Result<Vec<usize>> {
    text.lines()
        .enumerate()
        .map(|(idx, line)| {
            line.trim().parse().map_err(|_| HubError::Parse {
                line: idx + 1,
                message: format!("bad token id {line:?}"),
            })
        })
        .collect()
}

pub fn read_gold_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| HubError::io(path, e))?;
    parse_gold_labels(&text)
}
