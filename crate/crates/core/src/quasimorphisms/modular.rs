//! PSL(2,Z) as 2×2 integer matrices and as Z/2 ∗ Z/3 words.
//!
//! Words use a two-letter alphabet: generator 1 is S (order 2, always
//! written with sign +1), generator 2 is R (order 3), with R⁻¹ standing for
//! R². As matrices S = (0,−1;1,0) and R = (0,−1;1,1), so that
//! T = (1,1;0,1) = −S·R and U = (1,0;−1,1) = −R·S.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::QmError;
use crate::braid::BraidWord;
use crate::word::{GroupWord, Letter};

pub const S: Letter = Letter::pos(1);
pub const R: Letter = Letter::pos(2);
pub const R2: Letter = Letter::neg(2);

/// A determinant-one integer matrix, read up to overall sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModularElement {
    pub a: i128,
    pub b: i128,
    pub c: i128,
    pub d: i128,
}

impl ModularElement {
    pub fn new(a: i128, b: i128, c: i128, d: i128) -> Result<Self, QmError> {
        let det = a.checked_mul(d).zip(b.checked_mul(c)).and_then(|(x, y)| x.checked_sub(y));
        match det {
            Some(1) => Ok(ModularElement { a, b, c, d }),
            Some(det) => Err(QmError::Determinant(det)),
            None => Err(QmError::Overflow),
        }
    }

    pub const IDENTITY: ModularElement = ModularElement { a: 1, b: 0, c: 0, d: 1 };
    pub const S: ModularElement = ModularElement { a: 0, b: -1, c: 1, d: 0 };
    pub const R: ModularElement = ModularElement { a: 0, b: -1, c: 1, d: 1 };
    pub const T: ModularElement = ModularElement { a: 1, b: 1, c: 0, d: 1 };
    pub const U: ModularElement = ModularElement { a: 1, b: 0, c: -1, d: 1 };

    pub fn mul(&self, o: &ModularElement) -> Result<ModularElement, QmError> {
        let dot = |x: i128, y: i128, z: i128, w: i128| {
            x.checked_mul(y).zip(z.checked_mul(w)).and_then(|(p, q)| p.checked_add(q)).ok_or(QmError::Overflow)
        };
        Ok(ModularElement {
            a: dot(self.a, o.a, self.b, o.c)?,
            b: dot(self.a, o.b, self.b, o.d)?,
            c: dot(self.c, o.a, self.d, o.c)?,
            d: dot(self.c, o.b, self.d, o.d)?,
        })
    }

    pub fn inverse(&self) -> ModularElement {
        ModularElement { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    pub fn pow(&self, k: i64) -> Result<ModularElement, QmError> {
        let base = if k < 0 { self.inverse() } else { *self };
        let mut acc = ModularElement::IDENTITY;
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base)?;
        }
        Ok(acc)
    }

    pub fn trace(&self) -> i128 {
        self.a + self.d
    }

    /// Equality in PSL(2,Z).
    pub fn projectively_eq(&self, o: &ModularElement) -> bool {
        self == o || (self.a == -o.a && self.b == -o.b && self.c == -o.c && self.d == -o.d)
    }

    pub fn is_projective_identity(&self) -> bool {
        self.projectively_eq(&ModularElement::IDENTITY)
    }
}

/// σ1 ↦ T, σ2 ↦ U.
pub fn b3_to_modular(b: &BraidWord) -> Result<ModularElement, QmError> {
    if b.strands() != 3 {
        return Err(QmError::Domain(format!("B_3 expected, got {} strands", b.strands())));
    }
    b.word().letters().iter().try_fold(ModularElement::IDENTITY, |acc, l| {
        let g = if l.index() == 1 { ModularElement::T } else { ModularElement::U };
        acc.mul(&if l.is_positive() { g } else { g.inverse() })
    })
}

/// Dedekind sum s(h, k) for k ≥ 1, by reciprocity.
pub fn dedekind_sum(h: i128, k: i128) -> BigRational {
    assert!(k >= 1, "dedekind_sum needs k >= 1");
    let mut h = h.rem_euclid(k);
    let mut k = k;
    let mut sign = 1i32;
    let mut acc = BigRational::zero();
    let twelve = BigRational::from_integer(BigInt::from(12));
    // s(h,k) = -s(k,h) + (h/k + k/h + 1/(hk))/12 - 1/4 for coprime h, k ≥ 1
    while h != 0 {
        debug_assert_eq!(h.gcd(&k), 1);
        let (bh, bk) = (BigInt::from(h), BigInt::from(k));
        let term = (BigRational::new(bh.clone(), bk.clone())
            + BigRational::new(bk.clone(), bh.clone())
            + BigRational::new(BigInt::one(), bh * bk))
            / &twelve
            - BigRational::new(BigInt::one(), BigInt::from(4));
        if sign > 0 {
            acc += term;
        } else {
            acc -= term;
        }
        sign = -sign;
        let next = k.rem_euclid(h);
        k = h;
        h = next;
    }
    acc
}

/// The homogeneous Rademacher function: Φ(A) − 3·sign(c(a+d)), with Φ the
/// Dedekind-sum expression of the eta multiplier, on parabolic and
/// hyperbolic elements; zero on elliptic ones, where the classical formula
/// gives ±2 and is not homogeneous.
pub fn rademacher(m: &ModularElement) -> Result<i64, QmError> {
    ModularElement::new(m.a, m.b, m.c, m.d)?;
    if m.trace().abs() < 2 {
        return Ok(0);
    }
    let phi = if m.c == 0 {
        BigRational::new(BigInt::from(m.b), BigInt::from(m.d))
    } else {
        let s = dedekind_sum(m.d, m.c.abs());
        let sc = BigRational::from_integer(BigInt::from(m.c.signum()));
        BigRational::new(BigInt::from(m.a + m.d), BigInt::from(m.c))
            - BigRational::from_integer(BigInt::from(12)) * sc * s
    };
    let correction = 3 * (m.c.signum() * (m.a + m.d).signum());
    let psi = phi - BigRational::from_integer(BigInt::from(correction));
    if !psi.is_integer() {
        return Err(QmError::Internal(format!("non-integral Rademacher value {psi}")));
    }
    psi.to_integer().to_i64().ok_or(QmError::Overflow)
}

/// Pushes a letter onto a Z/2 ∗ Z/3 normal form, merging and cancelling.
pub fn psl_push(out: &mut Vec<Letter>, l: Letter) {
    let l = if l.index() == 1 { S } else { l };
    match out.last().copied() {
        Some(top) if top.index() == 1 && l.index() == 1 => {
            out.pop();
        }
        Some(top) if top.index() == 2 && l.index() == 2 => {
            out.pop();
            let e = (r_exponent(top) + r_exponent(l)) % 3;
            if e == 1 {
                out.push(R);
            } else if e == 2 {
                out.push(R2);
            }
        }
        _ => out.push(l),
    }
}

fn r_exponent(l: Letter) -> u32 {
    if l.is_positive() {
        1
    } else {
        2
    }
}

/// Normal form of an arbitrary S/R word.
pub fn psl_reduce(w: &GroupWord) -> GroupWord {
    let mut out = Vec::with_capacity(w.len());
    for &l in w.letters() {
        psl_push(&mut out, l);
    }
    GroupWord::new(2, out).expect("letters in the two-letter alphabet")
}

pub fn psl_inverse(w: &GroupWord) -> GroupWord {
    psl_reduce(&crate::word::inverse(w))
}

/// Splits a normal form into `conjugator · core · conjugator⁻¹` with a core
/// whose cyclic rotations are all normal forms.
pub fn psl_cyclic_core(w: &GroupWord) -> GroupWord {
    let mut core: std::collections::VecDeque<Letter> = psl_reduce(w).into_letters().into();
    while core.len() >= 2 {
        let first = core[0];
        let last = core[core.len() - 1];
        if first.index() != last.index() {
            break;
        }
        core.pop_back();
        core.pop_front();
        if first.index() == 2 {
            let e = (r_exponent(first) + r_exponent(last)) % 3;
            if e == 1 {
                core.push_front(R);
            } else if e == 2 {
                core.push_front(R2);
            }
        }
    }
    GroupWord::new(2, core.into_iter().collect()).expect("two-letter alphabet")
}

/// Substitutes σ1 → S R, σ2 → R S (and inverses) and reduces.
pub fn braid_to_psl(b: &BraidWord) -> Result<GroupWord, QmError> {
    if b.strands() != 3 {
        return Err(QmError::Domain(format!("B_3 expected, got {} strands", b.strands())));
    }
    let mut out = Vec::with_capacity(2 * b.len());
    for l in b.word().letters() {
        let pair = match (l.index(), l.is_positive()) {
            (1, true) => [S, R],
            (2, true) => [R, S],
            (1, false) => [R2, S],
            _ => [S, R2],
        };
        for p in pair {
            psl_push(&mut out, p);
        }
    }
    Ok(GroupWord::new(2, out).expect("two-letter alphabet"))
}

/// Multiplies an S/R word out.
pub fn psl_word_to_matrix(w: &GroupWord) -> Result<ModularElement, QmError> {
    w.letters().iter().try_fold(ModularElement::IDENTITY, |acc, l| match (l.index(), l.is_positive()) {
        (1, _) => acc.mul(&ModularElement::S),
        (_, true) => acc.mul(&ModularElement::R),
        (_, false) => acc.mul(&ModularElement::R.inverse()),
    })
}

/// Normal form by continued-fraction reduction of the first column:
/// M = T^q · S · M′ with |a′| < |c|, until M′ is upper triangular.
pub fn modular_normal_form(m: &ModularElement) -> Result<GroupWord, QmError> {
    ModularElement::new(m.a, m.b, m.c, m.d)?;
    let mut cur = *m;
    let mut out = Vec::new();
    let push_t = |out: &mut Vec<Letter>, q: i128| {
        let (first, second) = if q > 0 { (S, R) } else { (R2, S) };
        for _ in 0..q.unsigned_abs() {
            psl_push(out, first);
            psl_push(out, second);
        }
    };
    while cur.c != 0 {
        let q = Integer::div_floor(&cur.a, &cur.c);
        let shift = |x: i128, y: i128| q.checked_mul(y).and_then(|qy| x.checked_sub(qy)).ok_or(QmError::Overflow);
        let shifted = ModularElement { a: shift(cur.a, cur.c)?, b: shift(cur.b, cur.d)?, c: cur.c, d: cur.d };
        push_t(&mut out, q);
        psl_push(&mut out, S);
        // S⁻¹ = −S, and the sign is irrelevant in PSL
        cur = ModularElement::S.inverse().mul(&shifted)?;
    }
    // cur = ±(1, t; 0, 1)
    push_t(&mut out, cur.b * cur.d);
    Ok(GroupWord::new(2, out).expect("two-letter alphabet"))
}

/// Homogeneous Rademacher value read off a word: R-count minus R²-count of
/// the cyclic core, and zero on elliptic (core length ≤ 1) elements.
pub fn rademacher_word(w: &GroupWord) -> i64 {
    let core = psl_cyclic_core(w);
    if core.len() < 2 {
        return 0;
    }
    core.letters()
        .iter()
        .filter(|l| l.index() == 2)
        .map(|l| if l.is_positive() { 1 } else { -1 })
        .sum()
}
