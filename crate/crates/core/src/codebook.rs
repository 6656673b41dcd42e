//! Hadamard codebooks for the per-slot space-time code.
//!
//! Each side gets `2^b` columns of `(1/√2)·H_M`: the transmissive side draws
//! from the first `2^b` columns and the reflective side from the last `2^b`.
//! Every entry has magnitude `1/√2`, so a transmissive/reflective pair splits
//! each pulse's energy evenly between the two half-spaces.

use std::fmt::Write as _;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::HalfSpace;

/// Message-index → Hadamard-column enumeration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnOrder {
    /// Both sides enumerate their columns left to right.
    Natural,
    /// Transmissive side enumerates right to left, reflective left to right.
    #[default]
    ReversedTr,
}

impl ColumnOrder {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnOrder::Natural => "natural",
            ColumnOrder::ReversedTr => "reversed_tr",
        }
    }
}

pub(crate) fn check_power_of_two(what: &'static str, value: usize) -> Result<()> {
    if value.is_power_of_two() {
        Ok(())
    } else {
        Err(Error::NotPowerOfTwo { what, value })
    }
}

/// Sylvester-Hadamard matrix of order `n`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hadamard {
    n: usize,
    entries: Vec<i8>,
}

impl Hadamard {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.n + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = i8> + '_ {
        (0..self.n).map(move |r| self.get(r, col))
    }
}

pub fn hadamard(n: usize) -> Result<Hadamard> {
    check_power_of_two("Hadamard order", n)?;
    let mut entries = vec![1i8];
    let mut m = 1;
    while m < n {
        let mut next = vec![0i8; 4 * m * m];
        for r in 0..m {
            for c in 0..m {
                let v = entries[r * m + c];
                next[r * 2 * m + c] = v;
                next[r * 2 * m + c + m] = v;
                next[(r + m) * 2 * m + c] = v;
                next[(r + m) * 2 * m + c + m] = -v;
            }
        }
        entries = next;
        m *= 2;
    }
    Ok(Hadamard { n, entries })
}

/// Natural binary labeling, MSB first.
pub fn index_to_bits(index: usize, bits: u32) -> Vec<u8> {
    (0..bits).rev().map(|k| ((index >> k) & 1) as u8).collect()
}

pub fn bits_to_index(bits: &[u8]) -> usize {
    bits.iter().fold(0, |acc, &b| (acc << 1) | (b & 1) as usize)
}

/// One side's set of `2^b` orthogonal length-`M` codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    side: HalfSpace,
    slot_pulses: usize,
    bits: u32,
    /// Hadamard column used for each message index.
    columns: Vec<usize>,
    codewords: Vec<Vec<f64>>,
}

impl Codebook {
    fn from_columns(side: HalfSpace, h: &Hadamard, bits: u32, columns: Vec<usize>) -> Self {
        let codewords = columns
            .iter()
            .map(|&c| h.column(c).map(|v| FRAC_1_SQRT_2 * v as f64).collect())
            .collect();
        Self {
            side,
            slot_pulses: h.order(),
            bits,
            columns,
            codewords,
        }
    }

    pub fn side(&self) -> HalfSpace {
        self.side
    }

    /// Pulses per slot, `M`.
    pub fn slot_pulses(&self) -> usize {
        self.slot_pulses
    }

    /// Bits per slot, `b`.
    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword(&self, index: usize) -> &[f64] {
        &self.codewords[index]
    }

    pub fn codewords(&self) -> &[Vec<f64>] {
        &self.codewords
    }

    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    pub fn bits_of(&self, index: usize) -> Vec<u8> {
        index_to_bits(index, self.bits)
    }

    /// Plain-text dump: one codeword per line, entries space separated.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for cw in &self.codewords {
            let line: Vec<String> = cw.iter().map(|v| format!("{v:?}")).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }

    /// Parses a dump produced by [`Codebook::to_text`].
    ///
    /// Every row must be a scaled Sylvester-Hadamard column of the row
    /// length; the codebook's enumeration is taken from the row order.
    pub fn from_text(side: HalfSpace, text: &str) -> Result<Codebook> {
        let err = |message: String| Error::Parse {
            what: "codebook dump",
            message,
        };
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let row = line
                .split_whitespace()
                .map(|tok| tok.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(format!("line {}: {e}", lineno + 1)))?;
            rows.push(row);
        }
        let Some(first) = rows.first() else {
            return Err(err("no codewords".into()));
        };
        let m = first.len();
        if !m.is_power_of_two() || !(2..=1 << 16).contains(&m) {
            return Err(err(format!("codeword length {m} is not a power of two in [2, 65536]")));
        }
        if !rows.len().is_power_of_two() || 2 * rows.len() > m {
            return Err(err(format!("{} codewords do not fit a slot of {m} pulses", rows.len())));
        }
        let h = hadamard(m)?;
        let mut columns = Vec::with_capacity(rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(err(format!("codeword {i} has length {}, expected {m}", row.len())));
            }
            let signs: Option<Vec<i8>> = row
                .iter()
                .map(|&v| {
                    if (v - FRAC_1_SQRT_2).abs() < 1e-9 {
                        Some(1)
                    } else if (v + FRAC_1_SQRT_2).abs() < 1e-9 {
                        Some(-1)
                    } else {
                        None
                    }
                })
                .collect();
            let signs = signs.ok_or_else(|| err(format!("codeword {i} has entries other than ±1/√2")))?;
            let col = (0..m)
                .find(|&c| h.column(c).eq(signs.iter().copied()))
                .ok_or_else(|| err(format!("codeword {i} is not a Hadamard column")))?;
            if columns.contains(&col) {
                return Err(err(format!("codeword {i} repeats Hadamard column {col}")));
            }
            columns.push(col);
        }
        let bits = rows.len().trailing_zeros();
        Ok(Codebook::from_columns(side, &h, bits, columns))
    }
}

/// The transmissive and reflective codebooks for one `(M, b)` pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CodebookPair {
    pub transmissive: Codebook,
    pub reflective: Codebook,
}

impl CodebookPair {
    pub fn side(&self, side: HalfSpace) -> &Codebook {
        match side {
            HalfSpace::Transmissive => &self.transmissive,
            HalfSpace::Reflective => &self.reflective,
        }
    }
}

pub fn build_codebooks(slot_pulses: usize, bits: u32, order: ColumnOrder) -> Result<CodebookPair> {
    check_power_of_two("slot length M", slot_pulses)?;
    let size = 1usize
        .checked_shl(bits)
        .filter(|s| s.checked_mul(2).is_some_and(|d| d <= slot_pulses))
        .ok_or_else(|| {
            Error::InvalidCode(format!("2^(b+1) > M for M = {slot_pulses}, b = {bits}"))
        })?;
    let h = hadamard(slot_pulses)?;
    let mut tr: Vec<usize> = (0..size).collect();
    let re: Vec<usize> = (slot_pulses - size..slot_pulses).collect();
    if order == ColumnOrder::ReversedTr {
        tr.reverse();
    }
    Ok(CodebookPair {
        transmissive: Codebook::from_columns(HalfSpace::Transmissive, &h, bits, tr),
        reflective: Codebook::from_columns(HalfSpace::Reflective, &h, bits, re),
    })
}

/// A full-CPI code sequence built from per-slot codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct CodeSequence {
    values: Vec<f64>,
    slot_pulses: usize,
    messages: Vec<usize>,
}

impl CodeSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn slot_pulses(&self) -> usize {
        self.slot_pulses
    }

    pub fn messages(&self) -> &[usize] {
        &self.messages
    }

    pub fn energy(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }
}

/// Concatenates codeword `messages[k]` into slot `k` of a length-`P` sequence.
pub fn assemble_code_sequence(book: &Codebook, messages: &[usize], cpi_pulses: usize) -> Result<CodeSequence> {
    let m = book.slot_pulses();
    if cpi_pulses == 0 || !cpi_pulses.is_multiple_of(m) {
        return Err(Error::InvalidCode(format!(
            "CPI length {cpi_pulses} is not a multiple of the slot length {m}"
        )));
    }
    if messages.len() != cpi_pulses / m {
        return Err(Error::LengthMismatch {
            expected: cpi_pulses / m,
            got: messages.len(),
        });
    }
    let mut values = Vec::with_capacity(cpi_pulses);
    for &msg in messages {
        if msg >= book.len() {
            return Err(Error::InvalidCode(format!(
                "message index {msg} out of range for a {}-word codebook",
                book.len()
            )));
        }
        values.extend_from_slice(book.codeword(msg));
    }
    Ok(CodeSequence {
        values,
        slot_pulses: m,
        messages: messages.to_vec(),
    })
}

/// Transmissive and reflective code sequences over one CPI.
#[derive(Debug, Clone, PartialEq)]
pub struct CodePair {
    pub transmissive: CodeSequence,
    pub reflective: CodeSequence,
}

impl CodePair {
    pub fn side(&self, side: HalfSpace) -> &CodeSequence {
        match side {
            HalfSpace::Transmissive => &self.transmissive,
            HalfSpace::Reflective => &self.reflective,
        }
    }

    pub fn cpi_pulses(&self) -> usize {
        self.transmissive.len()
    }

    pub fn assemble(books: &CodebookPair, tr_messages: &[usize], re_messages: &[usize], cpi_pulses: usize) -> Result<Self> {
        Ok(Self {
            transmissive: assemble_code_sequence(&books.transmissive, tr_messages, cpi_pulses)?,
            reflective: assemble_code_sequence(&books.reflective, re_messages, cpi_pulses)?,
        })
    }
}

/// Radar-only codes: first and last column of `(1/√2)·H_P`.
pub fn radar_only_codes(cpi_pulses: usize) -> Result<CodePair> {
    check_power_of_two("CPI length P", cpi_pulses)?;
    if cpi_pulses < 2 {
        return Err(Error::InvalidCode("radar-only codes need P ≥ 2".into()));
    }
    let books = build_codebooks(cpi_pulses, 0, ColumnOrder::Natural)?;
    CodePair::assemble(&books, &[0], &[0], cpi_pulses)
}
