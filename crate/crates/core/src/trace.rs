//! Conversation traces: domain types plus JSON Lines ingestion.
//!
//! One conversation per line:
//!
//! ```json
//! {"id": "c1", "category": "WRT", "rounds": [{"query": "...", "answer": "...", "query_tokens": 12, "answer_tokens": 80}]}
//! ```
//!
//! `category` and the token counts are optional. Token counts found in a file
//! are ignored on ingest; they are always recomputed with
//! [`count_tokens`](crate::text::count_tokens) so results never depend on an
//! upstream tokenizer.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::count_tokens;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("conversation {id:?} has no rounds")]
    EmptyRounds { id: String },
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
    #[error("corpus is empty")]
    EmptyCorpus,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    /// 1-based position inside the conversation.
    pub index: u32,
    pub query_text: String,
    pub answer_text: String,
    pub query_tokens: u64,
    pub answer_tokens: u64,
}

impl Round {
    pub fn new(index: u32, query: impl Into<String>, answer: impl Into<String>) -> Self {
        let query_text = query.into();
        let answer_text = answer.into();
        Self {
            index,
            query_tokens: count_tokens(&query_text),
            answer_tokens: count_tokens(&answer_text),
            query_text,
            answer_text,
        }
    }

    /// Tokens of the query and answer together.
    pub fn pair_tokens(&self) -> u64 {
        self.query_tokens + self.answer_tokens
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Conversation {
    pub id: String,
    pub category: Option<String>,
    pub rounds: Vec<Round>,
}

impl Conversation {
    /// Builds a conversation from `(query, answer)` pairs, numbering rounds
    /// from 1 and counting tokens.
    pub fn new<I, Q, A>(id: impl Into<String>, category: Option<String>, pairs: I) -> Result<Self, TraceError>
    where
        I: IntoIterator<Item = (Q, A)>,
        Q: Into<String>,
        A: Into<String>,
    {
        let id = id.into();
        let rounds: Vec<Round> = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (q, a))| Round::new(i as u32 + 1, q, a))
            .collect();
        if rounds.is_empty() {
            return Err(TraceError::EmptyRounds { id });
        }
        Ok(Self { id, category, rounds })
    }

    /// Round by 1-based index.
    pub fn round(&self, index: u32) -> Option<&Round> {
        index
            .checked_sub(1)
            .and_then(|i| self.rounds.get(i as usize))
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TraceCorpus {
    conversations: Vec<Conversation>,
    max_rounds: usize,
}

impl TraceCorpus {
    pub fn new(conversations: Vec<Conversation>) -> Self {
        let max_rounds = conversations.iter().map(Conversation::len).max().unwrap_or(0);
        Self {
            conversations,
            max_rounds,
        }
    }

    pub fn conversations(&self) -> &[Conversation] {
        &self.conversations
    }

    pub fn into_conversations(self) -> Vec<Conversation> {
        self.conversations
    }

    pub fn max_rounds(&self) -> usize {
        self.max_rounds
    }

    pub fn len(&self) -> usize {
        self.conversations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conversations.is_empty()
    }

    pub fn total_queries(&self) -> usize {
        self.conversations.iter().map(Conversation::len).sum()
    }

    pub fn mean_rounds(&self) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.total_queries() as f64 / self.len() as f64
    }

    /// A new corpus holding the conversations at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> TraceCorpus {
        TraceCorpus::new(indices.iter().map(|&i| self.conversations[i].clone()).collect())
    }
}

#[derive(Serialize, Deserialize)]
struct RoundRecord {
    query: String,
    answer: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query_tokens: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    answer_tokens: Option<u64>,
}

#[derive(Serialize, Deserialize)]
struct ConversationRecord {
    id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    category: Option<String>,
    rounds: Vec<RoundRecord>,
}

/// Parses one JSONL line into a conversation. `line_no` is 1-based and only
/// used for error messages.
pub fn parse_conversation(line: &str, line_no: usize) -> Result<Conversation, TraceError> {
    let record: ConversationRecord = serde_json::from_str(line).map_err(|e| TraceError::Parse {
        line: line_no,
        message: e.to_string(),
    })?;
    Conversation::new(
        record.id,
        record.category,
        record.rounds.into_iter().map(|r| (r.query, r.answer)),
    )
}

/// Reads a JSONL corpus. Blank lines are skipped.
pub fn read_corpus(reader: impl BufRead) -> Result<TraceCorpus, TraceError> {
    let mut conversations = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        conversations.push(parse_conversation(&line, i + 1)?);
    }
    Ok(TraceCorpus::new(conversations))
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<TraceCorpus, TraceError> {
    read_corpus(BufReader::new(File::open(path)?))
}

/// Serializes one conversation as a single JSON line (no trailing newline).
pub fn conversation_to_json(conv: &Conversation) -> String {
    let record = ConversationRecord {
        id: conv.id.clone(),
        category: conv.category.clone(),
        rounds: conv
            .rounds
            .iter()
            .map(|r| RoundRecord {
                query: r.query_text.clone(),
                answer: r.answer_text.clone(),
                query_tokens: Some(r.query_tokens),
                answer_tokens: Some(r.answer_tokens),
            })
            .collect(),
    };
    serde_json::to_string(&record).expect("conversation records always serialize")
}

pub fn write_corpus(corpus: &TraceCorpus, mut writer: impl Write) -> std::io::Result<()> {
    for conv in corpus.conversations() {
        writer.write_all(conversation_to_json(conv).as_bytes())?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &TraceCorpus, path: impl AsRef<Path>) -> std::io::Result<()> {
    write_corpus(corpus, BufWriter::new(File::create(path)?))
}
