//! Linear combinations of quasimorphisms vanishing on prescribed elements.

use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DomainTag, QmError, Quasimorphism, Q};
use crate::word::GroupWord;

/// Seed for the probe words that reject combinations vanishing everywhere.
pub const PROBE_SEED: u64 = 0x5eed_0f_9e0be;
pub const PROBE_COUNT: usize = 64;

/// Null space of a rational matrix (rows × cols) via reduced row echelon
/// form, one basis vector per free column.
pub fn null_space(matrix: &[Vec<Q>], cols: usize) -> Vec<Vec<Q>> {
    let mut m: Vec<Vec<Q>> = matrix.to_vec();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(p) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else { continue };
        m.swap(row, p);
        let inv = m[row][col].recip();
        for x in m[row].iter_mut() {
            *x *= inv;
        }
        for r in 0..m.len() {
            if r != row && !m[r][col].is_zero() {
                let factor = m[r][col];
                for c in 0..cols {
                    let delta = factor * m[row][c];
                    m[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    (0..cols)
        .filter(|c| !pivots.contains(c))
        .map(|free| {
            let mut v = vec![Q::zero(); cols];
            v[free] = Q::one();
            for (r, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[r][free];
            }
            primitive_integer(v)
        })
        .collect()
}

/// Rescales a rational vector to coprime integers with positive leading entry.
fn primitive_integer(v: Vec<Q>) -> Vec<Q> {
    let lcm = v.iter().fold(1i128, |acc, x| acc.lcm(x.denom()));
    let ints: Vec<i128> = v.iter().map(|x| (x * Q::from_integer(lcm)).to_integer()).collect();
    let gcd = ints.iter().fold(0i128, |acc, x| acc.gcd(x)).max(1);
    let sign = ints.iter().find(|x| **x != 0).map_or(1, |x| x.signum());
    ints.into_iter().map(|x| Q::from_integer(sign * x / gcd)).collect()
}

/// Random probe words for a domain; braid probes are pure so that linking
/// numbers are defined on them.
pub fn probe_words(domain: DomainTag, count: usize, seed: u64) -> Vec<GroupWord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alphabet = match domain {
        DomainTag::ArtinBraid(3) => 2,
        d => d.alphabet_size(),
    } as i64;
    let random_word = |rng: &mut ChaCha8Rng, len: usize| -> Vec<i64> {
        (0..len).map(|_| rng.random_range(1..=alphabet) * if rng.random_bool(0.5) { 1 } else { -1 }).collect()
    };
    (0..count)
        .map(|_| {
            let signed = match domain {
                DomainTag::ArtinBraid(_) | DomainTag::SphericalBraid(_) => {
                    let mut acc = Vec::new();
                    for _ in 0..rng.random_range(1..=3) {
                        let len = rng.random_range(0..=6);
                        let g = random_word(&mut rng, len);
                        let i = rng.random_range(1..=alphabet);
                        let e = if rng.random_bool(0.5) { 1 } else { -1 };
                        acc.extend_from_slice(&g);
                        acc.extend([e * i, e * i]);
                        acc.extend(g.iter().rev().map(|l| -l));
                    }
                    acc
                }
                _ => {
                    let len = rng.random_range(1..=24);
                    random_word(&mut rng, len)
                }
            };
            GroupWord::from_signed(alphabet as usize, &signed).expect("letters drawn from the alphabet")
        })
        .collect()
}

/// A combination of `family` vanishing on every target, or `None` when
/// every null-space direction also vanishes on the probe set.
pub fn vanishing_combination(family: &[Quasimorphism], targets: &[GroupWord]) -> Result<Option<Quasimorphism>, QmError> {
    let domain = family.first().map(|q| q.domain()).ok_or_else(|| QmError::Domain("empty family".into()))?;
    vanishing_combination_with_probes(family, targets, &probe_words(domain, PROBE_COUNT, PROBE_SEED))
}

pub fn vanishing_combination_with_probes(
    family: &[Quasimorphism],
    targets: &[GroupWord],
    probes: &[GroupWord],
) -> Result<Option<Quasimorphism>, QmError> {
    let domain = family.first().map(|q| q.domain()).ok_or_else(|| QmError::Domain("empty family".into()))?;
    if family.iter().any(|q| q.domain() != domain) {
        return Err(QmError::Domain("family members have different domains".into()));
    }
    if let Some(q) = family.iter().find(|q| !q.is_homogeneous()) {
        return Err(QmError::NotHomogeneous(q.name().to_string()));
    }
    if targets.is_empty() {
        return Err(QmError::Domain("no targets".into()));
    }
    let matrix = targets
        .iter()
        .map(|t| family.iter().map(|q| q.evaluate(t)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let probe_values = probes
        .iter()
        .map(|p| family.iter().map(|q| q.evaluate(p)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    for v in null_space(&matrix, family.len()) {
        let nonzero_somewhere = probe_values
            .iter()
            .any(|row| !row.iter().zip(&v).fold(Q::zero(), |acc, (x, c)| acc + x * c).is_zero());
        if nonzero_somewhere {
            let terms = v.into_iter().zip(family.iter().cloned()).filter(|(c, _)| !c.is_zero()).collect();
            return Quasimorphism::combination(terms).map(Some);
        }
    }
    Ok(None)
}
