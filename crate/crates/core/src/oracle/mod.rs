//! Brute-force ground truth for small instances.
//!
//! Every constraint is expanded over the spectator qubits into rows of a
//! `2^n`-column linear system; satisfiability is nonzero nullity of that
//! system. Global basis index: qubit 0 is the most significant bit.

mod spectrum;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use crate::field::{projector_from_span, EchelonBasis, Field, FieldError, Scalar};
use crate::instance::{conj_vec, KSatInstance, QSatInstance};

pub use spectrum::{min_eigenvalue_float, FLOAT_LIMIT};

/// Largest qubit count the exact oracle accepts by default.
pub const EXACT_LIMIT: usize = 12;

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("{n} qubits exceeds the {mode} limit of {limit}")]
    Limit { n: usize, limit: usize, mode: &'static str },
    #[error("state has length {got}, expected {expected}")]
    StateLength { got: usize, expected: usize },
    #[error("the zero vector is not a state")]
    ZeroState,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Sat { nullity: usize },
    Unsat,
}

impl Decision {
    pub fn is_sat(self) -> bool {
        matches!(self, Decision::Sat { .. })
    }

    pub fn nullity(self) -> usize {
        match self {
            Decision::Sat { nullity } => nullity,
            Decision::Unsat => 0,
        }
    }
}

/// One local constraint: covectors on `support`, local index big-endian in support order.
#[derive(Debug, Clone)]
pub struct LocalTerm {
    pub support: Vec<usize>,
    pub covectors: Vec<Vec<Scalar>>,
}

/// The full linear system of an instance, rows generated on demand.
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    n: usize,
    terms: Vec<LocalTerm>,
}

/// Anything that can be expanded into a [`ConstraintSystem`].
pub trait Constraints {
    fn constraint_system(&self) -> ConstraintSystem;
}

impl Constraints for QSatInstance {
    fn constraint_system(&self) -> ConstraintSystem {
        let mut terms: Vec<LocalTerm> = self
            .pairs()
            .map(|p| {
                let (a, b) = p.qubits();
                LocalTerm {
                    support: vec![a, b],
                    covectors: p.covectors(),
                }
            })
            .collect();
        terms.extend(self.units().map(|u| LocalTerm {
            support: vec![u.qubit()],
            covectors: u.span().to_vec(),
        }));
        ConstraintSystem { n: self.n(), terms }
    }
}

impl Constraints for KSatInstance {
    fn constraint_system(&self) -> ConstraintSystem {
        ConstraintSystem {
            n: self.n(),
            terms: self
                .terms()
                .iter()
                .map(|t| LocalTerm {
                    support: t.support.clone(),
                    covectors: t.span.iter().map(|v| conj_vec(v)).collect(),
                })
                .collect(),
        }
    }
}

impl Constraints for ConstraintSystem {
    fn constraint_system(&self) -> ConstraintSystem {
        self.clone()
    }
}

impl ConstraintSystem {
    pub fn new(n: usize, terms: Vec<LocalTerm>) -> Self {
        ConstraintSystem { n, terms }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[LocalTerm] {
        &self.terms
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// `Σ_terms span · 2^{n - |support|}`.
    pub fn row_count(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.covectors.len() << (self.n - t.support.len()))
            .sum()
    }

    /// Global basis indices of a term for one spectator setting, in local order.
    fn local_indices(&self, support: &[usize], base: usize) -> Vec<usize> {
        let w = support.len();
        (0..1usize << w)
            .map(|l| {
                let mut idx = base;
                for (j, &q) in support.iter().enumerate() {
                    if (l >> (w - 1 - j)) & 1 == 1 {
                        idx |= 1 << (self.n - 1 - q);
                    }
                }
                idx
            })
            .collect()
    }

    fn spectator_bases(&self, support: &[usize]) -> impl Iterator<Item = usize> {
        let mask: usize = support.iter().map(|&q| 1usize << (self.n - 1 - q)).sum();
        (0..1usize << self.n).filter(move |x| x & mask == 0)
    }

    /// Calls `f` with every row, sparse as `(column, value)` pairs. Stops when
    /// `f` returns `false`.
    pub fn for_each_row(&self, mut f: impl FnMut(&[(usize, Scalar)]) -> bool) {
        for t in &self.terms {
            for base in self.spectator_bases(&t.support) {
                let idx = self.local_indices(&t.support, base);
                for cov in &t.covectors {
                    let row: Vec<(usize, Scalar)> = idx
                        .iter()
                        .zip(cov)
                        .filter(|(_, z)| !z.is_zero())
                        .map(|(&i, z)| (i, z.clone()))
                        .collect();
                    if !f(&row) {
                        return;
                    }
                }
            }
        }
    }

    /// Row space in echelon form; stops early once it is everything.
    pub fn row_space(&self) -> EchelonBasis<Scalar> {
        let dim = self.dim();
        let mut basis = EchelonBasis::new(dim);
        self.for_each_row(|row| {
            let mut v = vec![Scalar::zero(); dim];
            for (i, z) in row {
                v[*i] = z.clone();
            }
            basis.insert(v);
            !basis.is_full()
        });
        basis
    }
}

fn check_limit(n: usize, limit: usize) -> Result<(), OracleError> {
    if n > limit {
        return Err(OracleError::Limit {
            n,
            limit,
            mode: "exact",
        });
    }
    Ok(())
}

/// Exact decision with the default qubit limit.
pub fn brute_satisfiable(inst: &impl Constraints) -> Result<Decision, OracleError> {
    brute_satisfiable_with_limit(inst, EXACT_LIMIT)
}

pub fn brute_satisfiable_with_limit(inst: &impl Constraints, limit: usize) -> Result<Decision, OracleError> {
    let sys = inst.constraint_system();
    check_limit(sys.n, limit)?;
    let nullity = sys.dim() - sys.row_space().rank();
    Ok(if nullity == 0 {
        Decision::Unsat
    } else {
        Decision::Sat { nullity }
    })
}

/// Exact basis of the satisfying subspace.
pub fn satisfying_subspace(inst: &impl Constraints) -> Result<Vec<Vec<Scalar>>, OracleError> {
    let sys = inst.constraint_system();
    check_limit(sys.n, EXACT_LIMIT)?;
    let rows = sys.row_space();
    if rows.is_full() {
        return Ok(Vec::new());
    }
    Ok(rows.kernel())
}

fn check_state(sys: &ConstraintSystem, psi: &[Scalar]) -> Result<(), OracleError> {
    if psi.len() != sys.dim() {
        return Err(OracleError::StateLength {
            got: psi.len(),
            expected: sys.dim(),
        });
    }
    if psi.iter().all(Zero::is_zero) {
        return Err(OracleError::ZeroState);
    }
    Ok(())
}

/// Whether every constraint row contracts to exactly zero against `psi`.
pub fn verify_state(inst: &impl Constraints, psi: &[Scalar]) -> Result<bool, OracleError> {
    let sys = inst.constraint_system();
    check_state(&sys, psi)?;
    let mut ok = true;
    sys.for_each_row(|row| {
        let mut acc = Scalar::zero();
        for (i, z) in row {
            acc.add_mul(z, &psi[*i]);
        }
        ok = acc.is_zero();
        ok
    });
    Ok(ok)
}

/// `Σ_S ⟨ψ|Π_S|ψ⟩ / ⟨ψ|ψ⟩`, exact.
pub fn energy(inst: &impl Constraints, psi: &[Scalar]) -> Result<BigRational, OracleError> {
    let sys = inst.constraint_system();
    check_state(&sys, psi)?;
    let mut total = Scalar::zero();
    for t in &sys.terms {
        let kets: Vec<Vec<Scalar>> = t.covectors.iter().map(|v| conj_vec(v)).collect();
        let p = projector_from_span(&kets)?;
        for base in sys.spectator_bases(&t.support) {
            let idx = sys.local_indices(&t.support, base);
            let local: Vec<Scalar> = idx.iter().map(|&i| psi[i].clone()).collect();
            if local.iter().all(Zero::is_zero) {
                continue;
            }
            let pl = p.apply(&local);
            total = total.add_ref(&crate::field::inner(&local, &pl));
        }
    }
    let norm = crate::field::inner(psi, psi);
    debug_assert!(total.im.is_zero());
    Ok(&total.re / &norm.re)
}
