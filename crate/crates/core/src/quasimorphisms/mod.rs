//! Quasimorphism evaluators on braid, modular and surface-group words.
//!
//! Values are exact rationals. Evaluators normalize their input themselves
//! (free reduction, Z/2 ∗ Z/3 normal form, or Dehn reduction), so callers
//! may pass raw traced words.

pub mod brooks;
pub mod combination;
pub mod modular;
pub mod surface;

use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::braid::{linking_matrix, BraidError, BraidWord};
use crate::word::{compose, GroupWord, Letter, WordError};
use surface::Symmetrization;

pub use combination::{vanishing_combination, vanishing_combination_with_probes};

/// Exact quasimorphism values.
pub type Q = Ratio<i128>;

/// Declared defect of the Rademacher function on PSL(2,Z).
pub const RADEMACHER_DEFECT: i128 = 6;
/// Declared defect of a non-overlapping counting quasimorphism.
pub const BROOKS_DEFECT: i128 = 3;
/// Declared defect of its homogenization (twice the raw bound).
pub const BROOKS_HOMOGENEOUS_DEFECT: i128 = 6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QmError {
    #[error("determinant is {0}, expected 1")]
    Determinant(i128),
    #[error("integer overflow in matrix arithmetic")]
    Overflow,
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid pattern: {0}")]
    Pattern(String),
    #[error("defect bound unknown for {0}")]
    UnknownDefect(String),
    #[error("quasimorphism {0} is not homogeneous")]
    NotHomogeneous(String),
    #[error("unknown quasimorphism name: {0}")]
    UnknownName(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Braid(#[from] BraidError),
}

/// The group an evaluator is defined on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DomainTag {
    ArtinBraid(usize),
    SphericalBraid(usize),
    SurfaceGroup(usize),
    Psl2z,
}

impl DomainTag {
    pub fn alphabet_size(self) -> usize {
        match self {
            DomainTag::ArtinBraid(n) | DomainTag::SphericalBraid(n) => n - 1,
            DomainTag::SurfaceGroup(g) => 2 * g,
            DomainTag::Psl2z => 2,
        }
    }
}

impl fmt::Display for DomainTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DomainTag::ArtinBraid(n) => write!(f, "artin_braid({n})"),
            DomainTag::SphericalBraid(n) => write!(f, "spherical_braid({n})"),
            DomainTag::SurfaceGroup(g) => write!(f, "surface_group({g})"),
            DomainTag::Psl2z => write!(f, "psl2z"),
        }
    }
}

#[derive(Clone, Debug)]
pub enum Evaluator {
    ExponentSum,
    /// Signed count of one generator.
    GeneratorSum(u32),
    Linking { i: usize, j: usize },
    /// On B_3 the word is first pushed to PSL(2,Z).
    Rademacher,
    Brooks { pattern: Vec<Letter>, inverse: Vec<Letter>, dehn: Option<Arc<Symmetrization>> },
    Combination(Vec<(Q, Quasimorphism)>),
}

#[derive(Clone, Debug)]
pub struct Quasimorphism {
    name: String,
    evaluator: Evaluator,
    defect_bound: Option<Q>,
    homogeneous: bool,
    domain: DomainTag,
}

impl Quasimorphism {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn evaluator(&self) -> &Evaluator {
        &self.evaluator
    }

    pub fn defect_bound(&self) -> Option<Q> {
        self.defect_bound
    }

    pub fn is_homogeneous(&self) -> bool {
        self.homogeneous
    }

    pub fn domain(&self) -> DomainTag {
        self.domain
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn exponent_sum(domain: DomainTag) -> Result<Self, QmError> {
        if let DomainTag::SphericalBraid(_) | DomainTag::Psl2z = domain {
            return Err(QmError::Domain(format!("exponent sum is not defined on {domain}")));
        }
        Ok(Quasimorphism {
            name: "expsum".into(),
            evaluator: Evaluator::ExponentSum,
            defect_bound: Some(Q::zero()),
            homogeneous: true,
            domain,
        })
    }

    pub fn generator_sum(domain: DomainTag, index: u32) -> Result<Self, QmError> {
        match domain {
            DomainTag::SurfaceGroup(g) if index >= 1 && index as usize <= 2 * g => Ok(Quasimorphism {
                name: format!("gensum:{index}"),
                evaluator: Evaluator::GeneratorSum(index),
                defect_bound: Some(Q::zero()),
                homogeneous: true,
                domain,
            }),
            DomainTag::ArtinBraid(n) if index >= 1 && (index as usize) < n => Ok(Quasimorphism {
                name: format!("gensum:{index}"),
                evaluator: Evaluator::GeneratorSum(index),
                // not a homomorphism on B_n; only used as a raw count
                defect_bound: None,
                homogeneous: false,
                domain,
            }),
            _ => Err(QmError::Domain(format!("generator {index} on {domain}"))),
        }
    }

    /// lk_{ij} on pure braids; a homomorphism.
    pub fn linking(n: usize, i: usize, j: usize) -> Result<Self, QmError> {
        if i == j || i < 1 || j < 1 || i > n || j > n {
            return Err(QmError::Domain(format!("linking pair ({i},{j}) on {n} strands")));
        }
        Ok(Quasimorphism {
            name: format!("lk:{i},{j}"),
            evaluator: Evaluator::Linking { i, j },
            defect_bound: Some(Q::zero()),
            homogeneous: true,
            domain: DomainTag::ArtinBraid(n),
        })
    }

    /// The Rademacher function, on PSL(2,Z) or pulled back to B_3.
    pub fn rademacher(domain: DomainTag) -> Result<Self, QmError> {
        if !matches!(domain, DomainTag::Psl2z | DomainTag::ArtinBraid(3)) {
            return Err(QmError::Domain(format!("Rademacher needs psl2z or artin_braid(3), got {domain}")));
        }
        Ok(Quasimorphism {
            name: "rademacher".into(),
            evaluator: Evaluator::Rademacher,
            defect_bound: Some(Q::from_integer(RADEMACHER_DEFECT)),
            homogeneous: true,
            domain,
        })
    }

    /// Counting quasimorphism for `pattern`, written in the normal-form
    /// alphabet of the domain (S/R letters for psl2z and artin_braid(3)).
    pub fn brooks(pattern: &GroupWord, domain: DomainTag) -> Result<Self, QmError> {
        let (normalized, inverse, dehn) = match domain {
            DomainTag::Psl2z | DomainTag::ArtinBraid(3) => {
                if pattern.alphabet_size() != 2 {
                    return Err(QmError::Pattern("PSL patterns use the two-letter S/R alphabet".into()));
                }
                (modular::psl_reduce(pattern), modular::psl_inverse(pattern), None)
            }
            DomainTag::SurfaceGroup(g) => {
                if pattern.alphabet_size() != 2 * g {
                    return Err(QmError::Pattern(format!("pattern alphabet must be {}", 2 * g)));
                }
                let sym = Arc::new(Symmetrization::new(g));
                let reduced = surface::dehn_reduce_with(&sym, pattern);
                (reduced, crate::word::inverse(pattern), Some(sym))
            }
            _ => return Err(QmError::Domain(format!("no normal form for counting on {domain}"))),
        };
        if pattern.is_empty() {
            return Err(QmError::Pattern("empty pattern".into()));
        }
        if normalized != *pattern {
            return Err(QmError::Pattern(format!("pattern {pattern} is not in normal form")));
        }
        if is_proper_power(pattern.letters()) {
            return Err(QmError::Pattern(format!("pattern {pattern} is a proper power")));
        }
        Ok(Quasimorphism {
            name: format!("brooks-raw:{}", pattern_text(pattern)),
            evaluator: Evaluator::Brooks { pattern: pattern.letters().to_vec(), inverse: inverse.into_letters(), dehn },
            defect_bound: Some(Q::from_integer(BROOKS_DEFECT)),
            homogeneous: false,
            domain,
        })
    }

    /// Homogenized counting: occurrence density on the cyclic core.
    pub fn homogenized(mut self) -> Result<Self, QmError> {
        match self.evaluator {
            Evaluator::Brooks { .. } if !self.homogeneous => {
                self.homogeneous = true;
                self.defect_bound = Some(Q::from_integer(BROOKS_HOMOGENEOUS_DEFECT));
                self.name = self.name.replacen("brooks-raw:", "brooks:", 1);
                Ok(self)
            }
            _ if self.homogeneous => Ok(self),
            _ => Err(QmError::NotHomogeneous(self.name)),
        }
    }

    /// Registry lookup: `rademacher`, `expsum`, `lk:i,j`, `gensum:i`,
    /// `brooks:<letters>` (homogenized) and `brooks-raw:<letters>`.
    pub fn from_name(name: &str, domain: DomainTag) -> Result<Self, QmError> {
        let letters = |spec: &str| -> Result<GroupWord, QmError> {
            let signed = spec
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<i64>().map_err(|e| QmError::Pattern(format!("{t}: {e}"))))
                .collect::<Result<Vec<_>, _>>()?;
            let alphabet = match domain {
                DomainTag::ArtinBraid(3) => 2,
                d => d.alphabet_size(),
            };
            Ok(GroupWord::from_signed(alphabet, &signed)?)
        };
        match name.split_once(':') {
            None if name == "rademacher" => Quasimorphism::rademacher(domain),
            None if name == "expsum" => Quasimorphism::exponent_sum(domain),
            Some(("brooks", spec)) => Quasimorphism::brooks(&letters(spec)?, domain)?.homogenized(),
            Some(("brooks-raw", spec)) => Quasimorphism::brooks(&letters(spec)?, domain),
            Some(("gensum", spec)) => {
                let i = spec.trim().parse().map_err(|_| QmError::UnknownName(name.into()))?;
                Quasimorphism::generator_sum(domain, i)
            }
            Some(("lk", spec)) => {
                let (i, j) = spec.split_once(',').ok_or_else(|| QmError::UnknownName(name.into()))?;
                let parse = |s: &str| s.trim().parse::<usize>().map_err(|_| QmError::UnknownName(name.into()));
                match domain {
                    DomainTag::ArtinBraid(n) => Quasimorphism::linking(n, parse(i)?, parse(j)?),
                    _ => Err(QmError::Domain(format!("linking numbers need an Artin braid domain, got {domain}"))),
                }
            }
            _ => Err(QmError::UnknownName(name.into())),
        }
    }

    /// Linear combination; all members must share the domain.
    pub fn combination(terms: Vec<(Q, Quasimorphism)>) -> Result<Self, QmError> {
        let first = terms.first().ok_or_else(|| QmError::Domain("empty combination".into()))?;
        let domain = first.1.domain;
        if terms.iter().any(|(_, q)| q.domain != domain) {
            return Err(QmError::Domain("combination members have different domains".into()));
        }
        let defect_bound = terms
            .iter()
            .map(|(c, q)| q.defect_bound.map(|d| c.abs() * d))
            .sum::<Option<Q>>();
        let homogeneous = terms.iter().all(|(_, q)| q.homogeneous);
        let name = terms
            .iter()
            .filter(|(c, _)| !c.is_zero())
            .map(|(c, q)| format!("({c})*{}", q.name))
            .collect::<Vec<_>>()
            .join(" + ");
        Ok(Quasimorphism {
            name: if name.is_empty() { "zero".into() } else { name },
            evaluator: Evaluator::Combination(terms),
            defect_bound,
            homogeneous,
            domain,
        })
    }

    pub fn evaluate(&self, w: &GroupWord) -> Result<Q, QmError> {
        let expected = self.domain.alphabet_size();
        if w.alphabet_size() != expected {
            return Err(QmError::Domain(format!("word alphabet {} on {}", w.alphabet_size(), self.domain)));
        }
        match &self.evaluator {
            Evaluator::ExponentSum => Ok(Q::from_integer(w.exponent_sum() as i128)),
            Evaluator::GeneratorSum(i) => Ok(Q::from_integer(
                w.letters().iter().filter(|l| l.index() == *i).map(|l| l.sign() as i128).sum(),
            )),
            Evaluator::Linking { i, j } => {
                let DomainTag::ArtinBraid(n) = self.domain else { unreachable!("linking is built on artin braids") };
                let lk = linking_matrix(&BraidWord::new(n, w.clone())?)?;
                Ok(Q::from_integer(lk.get(*i, *j) as i128))
            }
            Evaluator::Rademacher => Ok(Q::from_integer(modular::rademacher_word(&self.psl_word(w)?) as i128)),
            Evaluator::Brooks { pattern, inverse, dehn } => match dehn {
                // Dehn reduction is not canonical and need not commute with
                // inversion, so the count is antisymmetrized explicitly.
                Some(sym) => {
                    let reduce = |x: &GroupWord| {
                        if self.homogeneous {
                            surface::cyclic_dehn_reduce_with(sym, x)
                        } else {
                            surface::dehn_reduce_with(sym, x)
                        }
                    };
                    let forward = self.count(reduce(w).letters(), pattern, inverse);
                    let backward = self.count(reduce(&crate::word::inverse(w)).letters(), pattern, inverse);
                    Ok((forward - backward) / Q::from_integer(2))
                }
                None => {
                    let normal =
                        if self.homogeneous { modular::psl_cyclic_core(&self.psl_word(w)?) } else { self.psl_word(w)? };
                    Ok(self.count(normal.letters(), pattern, inverse))
                }
            },
            Evaluator::Combination(terms) => {
                terms.iter().try_fold(Q::zero(), |acc, (c, q)| Ok(acc + *c * q.evaluate(w)?))
            }
        }
    }

    /// Floating-point value, for estimators.
    pub fn evaluate_f64(&self, w: &GroupWord) -> Result<f64, QmError> {
        let v = self.evaluate(w)?;
        Ok(*v.numer() as f64 / *v.denom() as f64)
    }

    fn count(&self, letters: &[Letter], pattern: &[Letter], inverse: &[Letter]) -> Q {
        if self.homogeneous {
            brooks::cyclic_density(letters, pattern) - brooks::cyclic_density(letters, inverse)
        } else {
            Q::from_integer(brooks::count_disjoint(letters, pattern) - brooks::count_disjoint(letters, inverse))
        }
    }

    fn psl_word(&self, w: &GroupWord) -> Result<GroupWord, QmError> {
        match self.domain {
            DomainTag::ArtinBraid(3) => modular::braid_to_psl(&BraidWord::new(3, w.clone())?),
            DomainTag::Psl2z => Ok(modular::psl_reduce(w)),
            d => Err(QmError::Domain(format!("no PSL(2,Z) image for {d}"))),
        }
    }
}

impl fmt::Display for Quasimorphism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} on {}", self.name, self.domain)
    }
}

fn pattern_text(w: &GroupWord) -> String {
    w.to_signed().iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
}

fn is_proper_power(p: &[Letter]) -> bool {
    let n = p.len();
    (1..n).filter(|d| n % d == 0).any(|d| (d..n).all(|k| p[k] == p[k - d]))
}

/// `q(w^k)/k` together with the bound `D/k` on its distance to the
/// homogenization.
pub fn homogenize(q: &Quasimorphism, w: &GroupWord, k_max: u32) -> Result<(Q, Q), QmError> {
    assert!(k_max >= 1, "k_max must be at least 1");
    let d = q.defect_bound.ok_or_else(|| QmError::UnknownDefect(q.name.clone()))?;
    let k = Q::from_integer(k_max as i128);
    let value = q.evaluate(&w.power(k_max as i64))? / k;
    Ok((value, d / k))
}

/// Largest observed |q(uv) − q(u) − q(v)|: a lower bound on the defect.
pub fn defect_estimate(
    q: &Quasimorphism,
    mut sampler: impl FnMut() -> GroupWord,
    trials: usize,
) -> Result<Q, QmError> {
    let mut worst = Q::zero();
    for _ in 0..trials {
        let u = sampler();
        let v = sampler();
        let uv = compose(&u, &v)?;
        let gap = (q.evaluate(&uv)? - q.evaluate(&u)? - q.evaluate(&v)?).abs();
        if gap > worst {
            worst = gap;
        }
    }
    Ok(worst)
}
