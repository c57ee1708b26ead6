//! Closed orientable surface groups ⟨a_1,b_1,…,a_g,b_g | Π[a_i,b_i]⟩ and
//! Dehn's algorithm.
//!
//! Generator `2i−1` is a_i and generator `2i` is b_i.

use serde::{Deserialize, Serialize};

use super::QmError;
use crate::word::{free_reduce, GroupWord, Letter};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SurfaceGroupWord {
    genus: usize,
    word: GroupWord,
}

impl SurfaceGroupWord {
    pub fn new(genus: usize, word: GroupWord) -> Result<Self, QmError> {
        if genus < 2 {
            return Err(QmError::Domain(format!("surface genus must be at least 2, got {genus}")));
        }
        if word.alphabet_size() != 2 * genus {
            return Err(QmError::Domain(format!("alphabet {} is not 2g = {}", word.alphabet_size(), 2 * genus)));
        }
        Ok(SurfaceGroupWord { genus, word })
    }

    pub fn from_signed(genus: usize, signed: &[i64]) -> Result<Self, QmError> {
        SurfaceGroupWord::new(genus, GroupWord::from_signed(2 * genus, signed)?)
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn word(&self) -> &GroupWord {
        &self.word
    }

    pub fn into_word(self) -> GroupWord {
        self.word
    }
}

pub fn a(i: u32) -> Letter {
    Letter::pos(2 * i - 1)
}

pub fn b(i: u32) -> Letter {
    Letter::pos(2 * i)
}

/// a_1 b_1 a_1⁻¹ b_1⁻¹ ⋯ a_g b_g a_g⁻¹ b_g⁻¹.
pub fn relator(genus: usize) -> Vec<Letter> {
    (1..=genus as u32).flat_map(|i| [a(i), b(i), a(i).inverse(), b(i).inverse()]).collect()
}

/// Every cyclic rotation of the relator and of its inverse.
#[derive(Clone, Debug)]
pub struct Symmetrization {
    genus: usize,
    rotations: Vec<Vec<Letter>>,
}

impl Symmetrization {
    pub fn new(genus: usize) -> Self {
        let r = relator(genus);
        let r_inv: Vec<Letter> = r.iter().rev().map(|l| l.inverse()).collect();
        let mut rotations = Vec::with_capacity(2 * r.len());
        for base in [&r, &r_inv] {
            for k in 0..base.len() {
                rotations.push(base[k..].iter().chain(&base[..k]).copied().collect());
            }
        }
        Symmetrization { genus, rotations }
    }

    pub fn genus(&self) -> usize {
        self.genus
    }

    pub fn rotations(&self) -> &[Vec<Letter>] {
        &self.rotations
    }

    /// Length of a "more than half" piece: 2g+1.
    pub fn threshold(&self) -> usize {
        2 * self.genus + 1
    }

    /// If `piece` (of threshold length) starts some rotation, the shorter
    /// complementary word equal to it.
    fn complement(&self, piece: &[Letter]) -> Option<Vec<Letter>> {
        let t = piece.len();
        self.rotations
            .iter()
            .find(|rot| rot[..t] == *piece)
            .map(|rot| rot[t..].iter().rev().map(|l| l.inverse()).collect())
    }
}

/// Dehn reduction: any subword longer than half a relator rotation is
/// replaced by the inverse of the remaining part. Output is freely reduced
/// and contains no such subword; empty exactly for the identity.
pub fn dehn_reduce(w: &SurfaceGroupWord) -> SurfaceGroupWord {
    let sym = Symmetrization::new(w.genus);
    SurfaceGroupWord { genus: w.genus, word: dehn_reduce_with(&sym, &w.word) }
}

pub fn dehn_reduce_with(sym: &Symmetrization, w: &GroupWord) -> GroupWord {
    let t = sym.threshold();
    let mut stack: Vec<Letter> = Vec::with_capacity(w.len());
    // pending letters are consumed from the back
    let mut pending: Vec<Letter> = w.letters().iter().rev().copied().collect();
    while let Some(l) = pending.pop() {
        if stack.last().is_some_and(|top| top.is_inverse_of(l)) {
            stack.pop();
            continue;
        }
        stack.push(l);
        if stack.len() >= t {
            if let Some(replacement) = sym.complement(&stack[stack.len() - t..]) {
                stack.truncate(stack.len() - t);
                pending.extend(replacement.into_iter().rev());
            }
        }
    }
    GroupWord::new(w.alphabet_size(), stack).expect("letters come from the input alphabet")
}

/// Reduces a conjugate of `w` until no cyclic subword is longer than half a
/// relator and the word is cyclically freely reduced. Returns the core;
/// conjugacy invariants are read from it.
pub fn cyclic_dehn_reduce_with(sym: &Symmetrization, w: &GroupWord) -> GroupWord {
    let t = sym.threshold();
    let mut cur = dehn_reduce_with(sym, w);
    loop {
        let (core, _) = crate::word::cyclically_reduce(&cur);
        cur = core;
        let n = cur.len();
        if n < 2 {
            return cur;
        }
        // look for a relator piece wrapping around the end
        let letters = cur.letters();
        let wrap = (n.saturating_sub(t - 1)..n).find(|&start| {
            if start + t <= n || t > n {
                return false;
            }
            let piece: Vec<Letter> = letters[start..].iter().chain(&letters[..start + t - n]).copied().collect();
            sym.complement(&piece).is_some()
        });
        match wrap {
            Some(start) => {
                let rotated: Vec<Letter> = letters[start..].iter().chain(&letters[..start]).copied().collect();
                cur = dehn_reduce_with(sym, &GroupWord::new(cur.alphabet_size(), rotated).expect("same alphabet"));
            }
            None => return cur,
        }
    }
}

pub fn cyclic_dehn_reduce(w: &SurfaceGroupWord) -> SurfaceGroupWord {
    let sym = Symmetrization::new(w.genus);
    SurfaceGroupWord { genus: w.genus, word: cyclic_dehn_reduce_with(&sym, &w.word) }
}

/// Longest subword (cyclically, if `cyclic`) that is a piece of a relator
/// rotation. Used by tests to confirm Dehn-reducedness.
pub fn longest_relator_piece(sym: &Symmetrization, w: &[Letter], cyclic: bool) -> usize {
    let n = w.len();
    let mut best = 0;
    let starts = if cyclic { n } else { n.max(1) };
    for s in 0..starts {
        for rot in sym.rotations() {
            let max_len = if cyclic { n.min(rot.len()) } else { (n - s).min(rot.len()) };
            let len = (0..max_len).take_while(|&k| w[(s + k) % n.max(1)] == rot[k]).count();
            best = best.max(len);
        }
    }
    best
}

pub fn compose_surface(u: &SurfaceGroupWord, v: &SurfaceGroupWord) -> Result<SurfaceGroupWord, QmError> {
    if u.genus != v.genus {
        return Err(QmError::Domain("genus mismatch".into()));
    }
    let cat = crate::word::compose(&u.word, &v.word)?;
    Ok(dehn_reduce(&SurfaceGroupWord { genus: u.genus, word: free_reduce(&cat) }))
}
