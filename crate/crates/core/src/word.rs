//! Signed words over a finite alphabet.
//!
//! A [`GroupWord`] is the common carrier for Artin braids, surface-group
//! loops and modular-group elements. Letters are `(generator, sign)` pairs
//! with generators numbered from 1; the empty word is the identity.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum WordError {
    #[error("alphabet mismatch: {0} vs {1}")]
    AlphabetMismatch(usize, usize),
    #[error("generator {index} outside alphabet of size {alphabet}")]
    LetterOutOfRange { index: u32, alphabet: usize },
    #[error("generator index must be at least 1")]
    ZeroGenerator,
    #[error("malformed word text: {0}")]
    Parse(String),
}

/// One generator raised to `+1` or `-1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Letter {
    index: u32,
    positive: bool,
}

impl Letter {
    pub fn new(index: u32, sign: i32) -> Result<Self, WordError> {
        if index == 0 {
            return Err(WordError::ZeroGenerator);
        }
        Ok(Letter { index, positive: sign >= 0 })
    }

    /// Shorthand used by the algebra modules; panics on index 0.
    pub const fn pos(index: u32) -> Self {
        assert!(index >= 1);
        Letter { index, positive: true }
    }

    pub const fn neg(index: u32) -> Self {
        assert!(index >= 1);
        Letter { index, positive: false }
    }

    /// Parses the signed-integer encoding (`3` is σ3, `-3` its inverse).
    pub fn from_signed(v: i64) -> Result<Self, WordError> {
        if v == 0 {
            return Err(WordError::ZeroGenerator);
        }
        Ok(Letter { index: v.unsigned_abs() as u32, positive: v > 0 })
    }

    pub fn index(self) -> u32 {
        self.index
    }

    pub fn sign(self) -> i32 {
        if self.positive {
            1
        } else {
            -1
        }
    }

    pub fn is_positive(self) -> bool {
        self.positive
    }

    pub fn inverse(self) -> Self {
        Letter { index: self.index, positive: !self.positive }
    }

    pub fn is_inverse_of(self, other: Letter) -> bool {
        self.index == other.index && self.positive != other.positive
    }

    pub fn to_signed(self) -> i64 {
        self.index as i64 * self.sign() as i64
    }
}

/// A word over generators `1..=alphabet_size` and their inverses.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupWord {
    alphabet_size: usize,
    letters: Vec<Letter>,
}

impl GroupWord {
    pub fn new(alphabet_size: usize, letters: Vec<Letter>) -> Result<Self, WordError> {
        for l in &letters {
            if l.index as usize > alphabet_size {
                return Err(WordError::LetterOutOfRange { index: l.index, alphabet: alphabet_size });
            }
        }
        Ok(GroupWord { alphabet_size, letters })
    }

    pub fn empty(alphabet_size: usize) -> Self {
        GroupWord { alphabet_size, letters: Vec::new() }
    }

    /// Builds a word from the signed-integer encoding.
    pub fn from_signed(alphabet_size: usize, signed: &[i64]) -> Result<Self, WordError> {
        let letters = signed.iter().map(|&v| Letter::from_signed(v)).collect::<Result<Vec<_>, _>>()?;
        GroupWord::new(alphabet_size, letters)
    }

    pub(crate) fn from_letters_unchecked(alphabet_size: usize, letters: Vec<Letter>) -> Self {
        debug_assert!(letters.iter().all(|l| l.index as usize <= alphabet_size));
        GroupWord { alphabet_size, letters }
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn into_letters(self) -> Vec<Letter> {
        self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn to_signed(&self) -> Vec<i64> {
        self.letters.iter().map(|l| l.to_signed()).collect()
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| !w[0].is_inverse_of(w[1]))
    }

    /// Appends `other` letter by letter, cancelling as it goes.
    pub fn push_reduced(&mut self, letter: Letter) {
        match self.letters.last() {
            Some(&top) if top.is_inverse_of(letter) => {
                self.letters.pop();
            }
            _ => self.letters.push(letter),
        }
    }

    pub fn power(&self, k: i64) -> GroupWord {
        let base = if k < 0 { inverse(self) } else { self.clone() };
        let mut out = GroupWord::empty(self.alphabet_size);
        for _ in 0..k.unsigned_abs() {
            for &l in base.letters() {
                out.push_reduced(l);
            }
        }
        out
    }

    /// Sum of letter signs.
    pub fn exponent_sum(&self) -> i64 {
        self.letters.iter().map(|l| l.sign() as i64).sum()
    }

    /// Writes the two-line text format: `n=<alphabet>` then signed letters.
    pub fn to_text(&self) -> String {
        format!("n={}\n{}\n", self.alphabet_size, self.letters_text())
    }

    pub fn letters_text(&self) -> String {
        self.letters.iter().map(|l| l.to_signed().to_string()).collect::<Vec<_>>().join(" ")
    }

    /// Parses the text format written by [`GroupWord::to_text`]. Extra
    /// `key=value` tokens on the header line are ignored here.
    pub fn parse_text(text: &str) -> Result<Self, WordError> {
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| WordError::Parse("missing header".into()))?;
        let header = parse_header(header)?;
        let alphabet = header
            .iter()
            .find(|(k, _)| k == "n")
            .map(|(_, v)| v.parse::<usize>())
            .ok_or_else(|| WordError::Parse("header lacks n=<alphabet_size>".into()))?
            .map_err(|e| WordError::Parse(e.to_string()))?;
        let mut signed = Vec::new();
        for line in lines {
            for tok in line.split_whitespace() {
                signed.push(tok.parse::<i64>().map_err(|e| WordError::Parse(format!("{tok}: {e}")))?);
            }
        }
        GroupWord::from_signed(alphabet, &signed)
    }
}

/// Splits a header line such as `n=4 sphere=1` into key/value pairs.
pub fn parse_header(line: &str) -> Result<Vec<(String, String)>, WordError> {
    line.split_whitespace()
        .map(|tok| {
            tok.split_once('=')
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .ok_or_else(|| WordError::Parse(format!("bad header token {tok}")))
        })
        .collect()
}

impl fmt::Display for GroupWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return write!(f, "1");
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| if l.positive { format!("s{}", l.index) } else { format!("s{}^-1", l.index) })
            .collect();
        write!(f, "{}", parts.join(" "))
    }
}

impl FromStr for GroupWord {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GroupWord::parse_text(s)
    }
}

fn check_alphabets(u: &GroupWord, v: &GroupWord) -> Result<(), WordError> {
    if u.alphabet_size != v.alphabet_size {
        return Err(WordError::AlphabetMismatch(u.alphabet_size, v.alphabet_size));
    }
    Ok(())
}

/// Free reduction in one stack pass.
pub fn free_reduce(w: &GroupWord) -> GroupWord {
    let mut out = GroupWord::empty(w.alphabet_size);
    out.letters.reserve(w.letters.len());
    for &l in &w.letters {
        out.push_reduced(l);
    }
    out
}

/// Freely reduced product `u·v`.
pub fn compose(u: &GroupWord, v: &GroupWord) -> Result<GroupWord, WordError> {
    check_alphabets(u, v)?;
    let mut out = free_reduce(u);
    for &l in &v.letters {
        out.push_reduced(l);
    }
    Ok(out)
}

pub fn inverse(w: &GroupWord) -> GroupWord {
    GroupWord {
        alphabet_size: w.alphabet_size,
        letters: w.letters.iter().rev().map(|l| l.inverse()).collect(),
    }
}

/// Freely reduced `g·w·g⁻¹`.
pub fn conjugate(w: &GroupWord, g: &GroupWord) -> Result<GroupWord, WordError> {
    check_alphabets(w, g)?;
    let gw = compose(g, w)?;
    compose(&gw, &inverse(g))
}

/// Splits a freely reduced word as `conjugator · core · conjugator⁻¹` with a
/// cyclically reduced core.
pub fn cyclically_reduce(w: &GroupWord) -> (GroupWord, GroupWord) {
    let letters = &w.letters;
    let mut lo = 0;
    let mut hi = letters.len();
    while hi >= lo + 2 && letters[lo].is_inverse_of(letters[hi - 1]) {
        lo += 1;
        hi -= 1;
    }
    let core = GroupWord { alphabet_size: w.alphabet_size, letters: letters[lo..hi].to_vec() };
    let conj = GroupWord { alphabet_size: w.alphabet_size, letters: letters[..lo].to_vec() };
    (core, conj)
}

/// True when `a` is a cyclic rotation of `b`.
pub fn is_cyclic_rotation(a: &[Letter], b: &[Letter]) -> bool {
    if a.len() != b.len() {
        return false;
    }
    if a.is_empty() {
        return true;
    }
    (0..a.len()).any(|r| a.iter().cycle().skip(r).take(a.len()).eq(b.iter()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(n: usize, s: &[i64]) -> GroupWord {
        GroupWord::from_signed(n, s).unwrap()
    }

    // Independent stack-free oracle: repeatedly delete the first cancelling pair.
    fn reduce_by_rescanning(s: &[i64]) -> Vec<i64> {
        let mut v = s.to_vec();
        loop {
            match (0..v.len().saturating_sub(1)).find(|&i| v[i] == -v[i + 1]) {
                Some(i) => {
                    v.drain(i..i + 2);
                }
                None => return v,
            }
        }
    }

    #[test]
    fn free_reduce_examples() {
        assert!(free_reduce(&w(3, &[1, -1])).is_empty());
        assert_eq!(free_reduce(&w(3, &[1, 2, -2, 1])).to_signed(), vec![1, 1]);
        let input = [2, 1, -1, -2, 3];
        let expected = reduce_by_rescanning(&input);
        assert_eq!(expected, vec![3]);
        assert_eq!(free_reduce(&w(3, &input)).to_signed(), expected);
    }

    #[test]
    fn compose_examples() {
        assert!(compose(&w(3, &[1]), &w(3, &[-1])).unwrap().is_empty());
        assert_eq!(compose(&w(3, &[1]), &w(3, &[])).unwrap().to_signed(), vec![1]);
        let expected = reduce_by_rescanning(&[1, 2, -2, 3]);
        assert_eq!(compose(&w(3, &[1, 2]), &w(3, &[-2, 3])).unwrap().to_signed(), expected);
        assert_eq!(expected, vec![1, 3]);
        assert_eq!(compose(&w(3, &[1]), &w(2, &[1])), Err(WordError::AlphabetMismatch(3, 2)));
    }

    #[test]
    fn inverse_examples() {
        assert_eq!(inverse(&w(2, &[1, 2])).to_signed(), vec![-2, -1]);
        assert!(inverse(&w(2, &[])).is_empty());
        assert_eq!(inverse(&w(2, &[1, 1])).to_signed(), vec![-1, -1]);
    }

    #[test]
    fn conjugate_examples() {
        assert_eq!(conjugate(&w(2, &[1]), &w(2, &[])).unwrap().to_signed(), vec![1]);
        assert!(conjugate(&w(2, &[]), &w(2, &[2])).unwrap().is_empty());
        assert_eq!(conjugate(&w(2, &[1]), &w(2, &[2])).unwrap().to_signed(), vec![2, 1, -2]);
    }

    #[test]
    fn cyclic_reduction_examples() {
        let (core, conj) = cyclically_reduce(&w(2, &[1, 2, -1]));
        assert_eq!((core.to_signed(), conj.to_signed()), (vec![2], vec![1]));
        let (core, conj) = cyclically_reduce(&w(2, &[1, 2]));
        assert_eq!((core.to_signed(), conj.to_signed()), (vec![1, 2], vec![]));
        // peel one layer: 1 1 2 -1 = (1)(1 2)(1)^-1
        let (core, conj) = cyclically_reduce(&w(2, &[1, 1, 2, -1]));
        assert_eq!((core.to_signed(), conj.to_signed()), (vec![1, 2], vec![1]));
        let rebuilt = conjugate(&core, &conj).unwrap();
        assert_eq!(rebuilt.to_signed(), vec![1, 1, 2, -1]);
    }

    #[test]
    fn text_format() {
        let word = w(3, &[1, 2, -1]);
        assert_eq!(word.to_text(), "n=3\n1 2 -1\n");
        assert_eq!(GroupWord::parse_text(&word.to_text()).unwrap(), word);
        assert_eq!(GroupWord::parse_text("n=2 sphere=1\n\n").unwrap(), w(2, &[]));
        assert!(GroupWord::parse_text("n=2\n3").is_err());
        assert!(GroupWord::parse_text("1 2").is_err());
        assert!(Letter::from_signed(0).is_err());
    }
}
