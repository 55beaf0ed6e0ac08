//! Newline-delimited JSON commit log: one committed transaction per line.

use std::io::{self, BufRead, Write};

use thiserror::Error;

use super::transaction::Transaction;

#[derive(Debug, Error)]
pub enum LogError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
    #[error("line {line}: expected transaction {expected}, found {found}")]
    OutOfOrder {
        line: usize,
        expected: u64,
        found: u64,
    },
}

pub fn write_commit_log<'a, W, I>(mut out: W, transactions: I) -> Result<(), LogError>
where
    W: Write,
    I: IntoIterator<Item = &'a Transaction>,
{
    for tx in transactions {
        serde_json::to_writer(&mut out, tx).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_commit_log<R: BufRead>(input: R) -> Result<Vec<Transaction>, LogError> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tx: Transaction = serde_json::from_str(&line).map_err(|source| LogError::Parse {
            line: i + 1,
            source,
        })?;
        let expected = out.len() as u64;
        if tx.id != expected {
            return Err(LogError::OutOfOrder {
                line: i + 1,
                expected,
                found: tx.id,
            });
        }
        out.push(tx);
    }
    Ok(out)
}
