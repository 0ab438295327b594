//! Authenticated public channel, modelled as an append-only in-memory log.
//!
//! Everything here is visible to Eve. Messages carry indices, parities of
//! index sets and hash seeds, never key bit values.

use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Message {
    /// Bob announces the slots where he reached a decision.
    SiftIndices(Vec<usize>),
    /// Seed of the permutation used in a reconciliation pass.
    ShuffleSeed { pass: u32, seed: u64 },
    /// Alice's parity over `[start, end)` of the permuted key in `pass`.
    Parity { pass: u32, start: usize, end: usize, value: bool },
    /// Alice's parity over a seeded random subset (confirmation round).
    SubsetParity { round: u32, seed: u64, value: bool },
    /// Toeplitz hash seed, packed bits as lowercase hex.
    ToeplitzSeed { bits: usize, hex: String },
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::SiftIndices(_) => "sift_indices",
            Message::ShuffleSeed { .. } => "shuffle_seed",
            Message::Parity { .. } => "parity",
            Message::SubsetParity { .. } => "subset_parity",
            Message::ToeplitzSeed { .. } => "toeplitz_seed",
        }
    }

    fn payload(&self) -> String {
        match self {
            Message::SiftIndices(idx) => {
                let mut s = String::with_capacity(idx.len() * 7);
                for (n, i) in idx.iter().enumerate() {
                    if n > 0 {
                        s.push(' ');
                    }
                    let _ = write!(s, "{i}");
                }
                s
            }
            Message::ShuffleSeed { pass, seed } => format!("pass={pass} seed={seed}"),
            Message::Parity { pass, start, end, value } => {
                format!("pass={pass} range={start}..{end} parity={}", u8::from(*value))
            }
            Message::SubsetParity { round, seed, value } => {
                format!("round={round} seed={seed} parity={}", u8::from(*value))
            }
            Message::ToeplitzSeed { bits, hex } => format!("bits={bits} seed={hex}"),
        }
    }

    /// Whether the message discloses one bit of parity information about
    /// the key.
    pub fn is_parity_disclosure(&self) -> bool {
        matches!(self, Message::Parity { .. } | Message::SubsetParity { .. })
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PublicLog {
    messages: Vec<Message>,
}

impl PublicLog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, msg: Message) {
        self.messages.push(msg);
    }

    pub fn messages(&self) -> &[Message] {
        &self.messages
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    pub fn parity_disclosures(&self) -> usize {
        self.messages.iter().filter(|m| m.is_parity_disclosure()).count()
    }

    /// Writes `type,payload` records, one per line, after a header.
    pub fn write_records<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "type,payload")?;
        for m in &self.messages {
            writeln!(out, "{},{}", m.kind(), m.payload())?;
        }
        Ok(())
    }
}
