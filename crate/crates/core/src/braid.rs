//! Artin and spherical braid words.
//!
//! Generator `i` is the Artin generator σ_i exchanging strand positions `i`
//! and `i+1`. Spherical braids share the letters; the extra relation δ_n = 1
//! is only used by the heuristic [`spherical_normalize`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::word::{free_reduce, GroupWord, Letter, WordError};

/// Default handle-reduction budget, in handle reductions.
pub const DEFAULT_HANDLE_BUDGET: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BraidError {
    #[error("braid index out of range: i={i}, n={n}")]
    IndexOutOfRange { i: usize, n: usize },
    #[error("a braid needs at least 2 strands, got {0}")]
    TooFewStrands(usize),
    #[error("word alphabet {alphabet} does not match {strands} strands")]
    StrandMismatch { alphabet: usize, strands: usize },
    #[error("braid is not pure")]
    NotPure,
    #[error("handle reduction exceeded its budget of {budget} steps")]
    BudgetExceeded { budget: u64, partial: BraidWord },
    #[error(transparent)]
    Word(#[from] WordError),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BraidWord {
    strands: usize,
    word: GroupWord,
}

impl BraidWord {
    pub fn new(strands: usize, word: GroupWord) -> Result<Self, BraidError> {
        if strands < 2 {
            return Err(BraidError::TooFewStrands(strands));
        }
        if word.alphabet_size() != strands - 1 {
            return Err(BraidError::StrandMismatch { alphabet: word.alphabet_size(), strands });
        }
        Ok(BraidWord { strands, word })
    }

    pub fn from_signed(strands: usize, signed: &[i64]) -> Result<Self, BraidError> {
        if strands < 2 {
            return Err(BraidError::TooFewStrands(strands));
        }
        BraidWord::new(strands, GroupWord::from_signed(strands - 1, signed)?)
    }

    pub fn identity(strands: usize) -> Result<Self, BraidError> {
        BraidWord::from_signed(strands, &[])
    }

    pub fn strands(&self) -> usize {
        self.strands
    }

    pub fn word(&self) -> &GroupWord {
        &self.word
    }

    pub fn into_word(self) -> GroupWord {
        self.word
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    pub fn compose(&self, other: &BraidWord) -> Result<BraidWord, BraidError> {
        if self.strands != other.strands {
            return Err(BraidError::StrandMismatch { alphabet: other.strands - 1, strands: self.strands });
        }
        Ok(BraidWord { strands: self.strands, word: crate::word::compose(&self.word, &other.word)? })
    }

    pub fn inverse(&self) -> BraidWord {
        BraidWord { strands: self.strands, word: crate::word::inverse(&self.word) }
    }

    /// Text dump: `n=<strands> sphere=0` header and the signed letters.
    pub fn to_text(&self) -> String {
        format!("n={} sphere=0\n{}\n", self.strands, self.word.letters_text())
    }
}

/// A braid read in B_n(S²).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphericalBraidWord {
    braid: BraidWord,
}

impl SphericalBraidWord {
    pub fn new(braid: BraidWord) -> Self {
        SphericalBraidWord { braid }
    }

    pub fn braid(&self) -> &BraidWord {
        &self.braid
    }

    pub fn strands(&self) -> usize {
        self.braid.strands
    }

    pub fn to_text(&self) -> String {
        format!("n={} sphere=1\n{}\n", self.braid.strands, self.braid.word.letters_text())
    }
}

/// Parses a braid dump; returns the braid and the sphere flag.
pub fn parse_braid_text(text: &str) -> Result<(BraidWord, bool), BraidError> {
    let header_line = text
        .lines()
        .map(str::trim)
        .find(|l| !l.is_empty() && !l.starts_with('#'))
        .ok_or_else(|| WordError::Parse("missing header".into()))?;
    let header = crate::word::parse_header(header_line)?;
    let get = |key: &str| header.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let strands: usize = get("n")
        .ok_or_else(|| WordError::Parse("header lacks n=<strands>".into()))?
        .parse()
        .map_err(|e: std::num::ParseIntError| WordError::Parse(e.to_string()))?;
    let sphere = matches!(get("sphere").as_deref(), Some("1"));
    let mut signed = Vec::new();
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).skip(1) {
        for tok in line.split_whitespace() {
            signed.push(tok.parse::<i64>().map_err(|e| WordError::Parse(format!("{tok}: {e}")))?);
        }
    }
    Ok((BraidWord::from_signed(strands, &signed)?, sphere))
}

/// η_{i,n} = σ_{i-1}…σ_2 σ_1² σ_2…σ_{i-1}: strand `i` encircles strands `1..i-1`.
pub fn make_eta(i: usize, n: usize) -> Result<BraidWord, BraidError> {
    if n < 2 || i < 2 || i > n {
        return Err(BraidError::IndexOutOfRange { i, n });
    }
    let mut signed: Vec<i64> = (1..i as i64).rev().collect();
    signed.extend(1..i as i64);
    BraidWord::from_signed(n, &signed)
}

/// δ_n = σ_1…σ_{n-2} σ_{n-1}² σ_{n-2}…σ_1, trivial in B_n(S²).
pub fn make_delta(n: usize) -> Result<BraidWord, BraidError> {
    if n < 2 {
        return Err(BraidError::TooFewStrands(n));
    }
    let mut signed: Vec<i64> = (1..n as i64).collect();
    signed.extend((1..n as i64).rev());
    BraidWord::from_signed(n, &signed)
}

/// Permutation induced on strand positions.
///
/// `perm[k]` is the final position of the strand that starts at position `k`
/// (0-based).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &p)| i == p)
    }
}

pub fn braid_permutation(b: &BraidWord) -> Permutation {
    // strand_at[pos] = starting position of the strand currently at `pos`
    let mut strand_at: Vec<usize> = (0..b.strands).collect();
    for l in b.word.letters() {
        let i = l.index() as usize - 1;
        strand_at.swap(i, i + 1);
    }
    let mut perm = vec![0; b.strands];
    for (pos, &strand) in strand_at.iter().enumerate() {
        perm[strand] = pos;
    }
    Permutation(perm)
}

/// Symmetric pairwise linking numbers of a pure braid, strands labelled by
/// starting position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkingMatrix {
    n: usize,
    entries: Vec<i64>,
}

impl LinkingMatrix {
    pub fn zeros(n: usize) -> Self {
        LinkingMatrix { n, entries: vec![0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    /// Entry for strands `i`, `j` (1-based, as in lk_{ij}).
    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.entries[(i - 1) * self.n + (j - 1)]
    }

    pub fn add(&self, other: &LinkingMatrix) -> LinkingMatrix {
        assert_eq!(self.n, other.n);
        LinkingMatrix { n: self.n, entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect() }
    }
}

/// Linking numbers by strand following: each σ_i^{±1} is a signed crossing
/// between the two strands it exchanges.
pub fn linking_matrix(b: &BraidWord) -> Result<LinkingMatrix, BraidError> {
    let n = b.strands;
    let mut strand_at: Vec<usize> = (0..n).collect();
    let mut crossings = vec![0i64; n * n];
    for l in b.word.letters() {
        let i = l.index() as usize - 1;
        let (s, t) = (strand_at[i], strand_at[i + 1]);
        crossings[s * n + t] += l.sign() as i64;
        crossings[t * n + s] += l.sign() as i64;
        strand_at.swap(i, i + 1);
    }
    if strand_at.iter().enumerate().any(|(p, &s)| p != s) {
        return Err(BraidError::NotPure);
    }
    debug_assert!(crossings.iter().all(|c| c % 2 == 0));
    Ok(LinkingMatrix { n, entries: crossings.into_iter().map(|c| c / 2).collect() })
}

/// Outcome of [`handle_reduce_with_budget`].
#[derive(Clone, Debug, PartialEq)]
pub struct HandleReduction {
    pub braid: BraidWord,
    pub steps: u64,
}

pub fn handle_reduce(b: &BraidWord) -> Result<BraidWord, BraidError> {
    handle_reduce_with_budget(b, DEFAULT_HANDLE_BUDGET).map(|r| r.braid)
}

/// Dehornoy handle reduction. Always reduces the handle whose right end
/// comes first; such a handle has no handle inside it, so it is permitted.
pub fn handle_reduce_with_budget(b: &BraidWord, budget: u64) -> Result<HandleReduction, BraidError> {
    let mut letters = free_reduce(&b.word).into_letters();
    let mut steps = 0u64;
    while let Some((start, end)) = first_handle(&letters) {
        if steps >= budget {
            let partial = BraidWord { strands: b.strands, word: GroupWord::from_letters_unchecked(b.strands - 1, letters) };
            return Err(BraidError::BudgetExceeded { budget, partial });
        }
        steps += 1;
        let i = letters[start].index();
        let e = letters[start].sign();
        let mut replaced = Vec::with_capacity(letters.len() + 2 * (end - start));
        replaced.extend_from_slice(&letters[..start]);
        for &l in &letters[start + 1..end] {
            if l.index() == i + 1 {
                replaced.push(signed_letter(i + 1, -e));
                replaced.push(signed_letter(i, l.sign()));
                replaced.push(signed_letter(i + 1, e));
            } else {
                replaced.push(l);
            }
        }
        replaced.extend_from_slice(&letters[end + 1..]);
        letters = replaced;
    }
    Ok(HandleReduction { braid: BraidWord { strands: b.strands, word: GroupWord::from_letters_unchecked(b.strands - 1, letters) }, steps })
}

fn signed_letter(index: u32, sign: i32) -> Letter {
    if sign > 0 {
        Letter::pos(index)
    } else {
        Letter::neg(index)
    }
}

/// Locates the σ_i-handle `σ_i^e u σ_i^{-e}` (u free of σ_i, σ_{i-1}) whose
/// right end is leftmost.
fn first_handle(letters: &[Letter]) -> Option<(usize, usize)> {
    let max_index = letters.iter().map(|l| l.index() as usize).max().unwrap_or(0);
    let mut last: Vec<Option<usize>> = vec![None; max_index + 2];
    for (j, &l) in letters.iter().enumerate() {
        let i = l.index() as usize;
        if let Some(p) = last[i] {
            let blocked = i >= 2 && last[i - 1].is_some_and(|q| q > p);
            if !blocked && letters[p].is_inverse_of(l) {
                return Some((p, j));
            }
        }
        last[i] = Some(j);
    }
    None
}

/// Deletes literal occurrences of δ_n and δ_n⁻¹, freely reducing after each
/// deletion. Not a normal form.
pub fn spherical_normalize(b: &SphericalBraidWord) -> SphericalBraidWord {
    let n = b.strands();
    let delta = make_delta(n).expect("strand count already validated").into_word().into_letters();
    let delta_inv: Vec<Letter> = delta.iter().rev().map(|l| l.inverse()).collect();
    let mut letters = free_reduce(b.braid.word()).into_letters();
    loop {
        let hit = find_subword(&letters, &delta).or_else(|| find_subword(&letters, &delta_inv));
        match hit {
            Some(pos) => {
                letters.drain(pos..pos + delta.len());
                letters = free_reduce(&GroupWord::from_letters_unchecked(n - 1, letters)).into_letters();
            }
            None => break,
        }
    }
    SphericalBraidWord { braid: BraidWord { strands: n, word: GroupWord::from_letters_unchecked(n - 1, letters) } }
}

fn find_subword(hay: &[Letter], needle: &[Letter]) -> Option<usize> {
    if needle.is_empty() || needle.len() > hay.len() {
        return None;
    }
    hay.windows(needle.len()).position(|w| w == needle)
}
