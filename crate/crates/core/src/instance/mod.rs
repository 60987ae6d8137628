//! Quantum k-SAT instances.
//!
//! Pair constraints are stored as spanning sets of 2×2 tensors `φ` that are
//! contracted directly against the state: `Σ φ_{α_a α_b} ψ_{…α_a…α_b…} = 0`.
//! The forbidden two-qubit ket is the entrywise conjugate of `φ`.

mod format;
pub mod random;

use std::collections::BTreeMap;

use num_traits::Zero;
use thiserror::Error;

use crate::field::{EchelonBasis, FieldError, Matrix, Scalar};
use crate::Mat;

pub use format::{parse_instance, parse_ksat, write_instance, write_ksat, KSatFile};

#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{location}: {message}")]
    Invalid { location: String, message: String },
    #[error(transparent)]
    Field(#[from] FieldError),
}

impl InstanceError {
    pub(crate) fn invalid(location: impl Into<String>, message: impl Into<String>) -> Self {
        InstanceError::Invalid {
            location: location.into(),
            message: message.into(),
        }
    }
}

/// Outcome of adding a constraint tensor or covector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Insertion {
    /// Zero, or already in the stored span.
    Unchanged,
    /// The span grew; carries the new rank.
    Extended(usize),
}

/// Forbidden subspace on an unordered qubit pair, stored with `a < b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairConstraint {
    a: usize,
    b: usize,
    span: Vec<Mat>,
}

impl PairConstraint {
    pub fn qubits(&self) -> (usize, usize) {
        (self.a, self.b)
    }

    /// Spanning tensors indexed `(α_a, α_b)` with `a < b`.
    pub fn span(&self) -> &[Mat] {
        &self.span
    }

    pub fn rank(&self) -> usize {
        self.span.len()
    }

    /// Tensors with `first` as the row index: `φ^{(b,a)}_{β,α} = φ^{(a,b)}_{α,β}`.
    pub fn oriented(&self, first: usize) -> Vec<Mat> {
        if first == self.a {
            self.span.clone()
        } else {
            debug_assert_eq!(first, self.b);
            self.span.iter().map(Matrix::transpose).collect()
        }
    }

    /// Flattened covectors on the pair space, index `2·α_a + α_b`.
    pub fn covectors(&self) -> Vec<Vec<Scalar>> {
        self.span.iter().map(|t| t.as_slice().to_vec()).collect()
    }
}

/// Forbidden directions on a single qubit, as covectors.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitConstraint {
    qubit: usize,
    span: Vec<Vec<Scalar>>,
}

impl UnitConstraint {
    pub fn qubit(&self) -> usize {
        self.qubit
    }

    pub fn span(&self) -> &[Vec<Scalar>] {
        &self.span
    }

    pub fn rank(&self) -> usize {
        self.span.len()
    }
}

/// A quantum 2-SAT instance on qubits `0..n`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QSatInstance {
    n: usize,
    pairs: BTreeMap<(usize, usize), PairConstraint>,
    units: BTreeMap<usize, UnitConstraint>,
}

fn extend_span(span: &mut Vec<Vec<Scalar>>, v: Vec<Scalar>) -> Insertion {
    let mut basis = EchelonBasis::new(v.len());
    for s in span.iter() {
        basis.insert(s.clone());
    }
    if basis.insert(v.clone()) {
        span.push(v);
        Insertion::Extended(span.len())
    } else {
        Insertion::Unchanged
    }
}

impl QSatInstance {
    pub fn new(n: usize) -> Self {
        QSatInstance {
            n,
            ..Default::default()
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn check_qubit(&self, q: usize) -> Result<(), InstanceError> {
        if q >= self.n {
            return Err(InstanceError::invalid(
                format!("qubit {q}"),
                format!("index out of range for n = {}", self.n),
            ));
        }
        Ok(())
    }

    /// Adds `t` (indexed `(α_a, α_b)`) to the span on `{a, b}`.
    pub fn insert_tensor(&mut self, a: usize, b: usize, t: Mat) -> Result<Insertion, InstanceError> {
        self.check_qubit(a)?;
        self.check_qubit(b)?;
        if a == b {
            return Err(InstanceError::invalid(
                format!("pair ({a}, {b})"),
                "a pair constraint needs two distinct qubits",
            ));
        }
        if t.rows() != 2 || t.cols() != 2 {
            return Err(FieldError::Shape(format!("constraint tensor is {}x{}", t.rows(), t.cols())).into());
        }
        if t.is_zero() {
            return Ok(Insertion::Unchanged);
        }
        let (lo, hi, t) = if a < b { (a, b, t) } else { (b, a, t.transpose()) };
        let entry = self.pairs.entry((lo, hi)).or_insert_with(|| PairConstraint {
            a: lo,
            b: hi,
            span: Vec::new(),
        });
        let mut flat: Vec<Vec<Scalar>> = entry.covectors();
        let res = extend_span(&mut flat, t.as_slice().to_vec());
        if res != Insertion::Unchanged {
            entry.span.push(t);
        }
        Ok(res)
    }

    /// Adds a forbidden covector on qubit `q`.
    pub fn insert_unit(&mut self, q: usize, v: Vec<Scalar>) -> Result<Insertion, InstanceError> {
        self.check_qubit(q)?;
        if v.len() != 2 {
            return Err(FieldError::Shape(format!("unit covector of length {}", v.len())).into());
        }
        if v.iter().all(Zero::is_zero) {
            return Ok(Insertion::Unchanged);
        }
        let entry = self.units.entry(q).or_insert_with(|| UnitConstraint {
            qubit: q,
            span: Vec::new(),
        });
        Ok(extend_span(&mut entry.span, v))
    }

    /// Rank `r_{a,b}` of the forbidden subspace; 0 when absent.
    pub fn constraint_rank(&self, a: usize, b: usize) -> usize {
        self.pair(a, b).map_or(0, PairConstraint::rank)
    }

    pub fn pair(&self, a: usize, b: usize) -> Option<&PairConstraint> {
        self.pairs.get(&(a.min(b), a.max(b)))
    }

    /// Spanning tensors on `{a, b}` with `a` as the row index.
    pub fn tensors(&self, a: usize, b: usize) -> Vec<Mat> {
        self.pair(a, b).map(|p| p.oriented(a)).unwrap_or_default()
    }

    pub fn unit(&self, q: usize) -> Option<&UnitConstraint> {
        self.units.get(&q)
    }

    pub fn pairs(&self) -> impl Iterator<Item = &PairConstraint> {
        self.pairs.values()
    }

    pub fn units(&self) -> impl Iterator<Item = &UnitConstraint> {
        self.units.values()
    }

    pub fn has_units(&self) -> bool {
        !self.units.is_empty()
    }

    /// Copies a constraint under a label map that preserves order.
    pub(crate) fn put_pair(&mut self, a: usize, b: usize, span: Vec<Mat>) {
        debug_assert!(a < b && b < self.n);
        self.pairs.insert((a, b), PairConstraint { a, b, span });
    }

    pub(crate) fn put_unit(&mut self, q: usize, span: Vec<Vec<Scalar>>) {
        debug_assert!(q < self.n);
        self.units.insert(q, UnitConstraint { qubit: q, span });
    }

    pub fn remove_pair(&mut self, a: usize, b: usize) -> Option<PairConstraint> {
        self.pairs.remove(&(a.min(b), a.max(b)))
    }

    pub fn remove_unit(&mut self, q: usize) -> Option<UnitConstraint> {
        self.units.remove(&q)
    }

    /// Edges of the constraint graph `G`, i.e. pairs with a nonzero span.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs.keys().copied()
    }

    /// Neighbour lists of the constraint graph.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for (a, b) in self.edges() {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    pub fn max_rank(&self) -> usize {
        self.pairs.values().map(PairConstraint::rank).max().unwrap_or(0)
    }

    /// Largest pair rank ≤ 1 and no unit constraints.
    pub fn is_homogeneous(&self) -> bool {
        self.units.is_empty() && self.max_rank() <= 1
    }
}

/// One term of a k-local instance: kets spanning the range of `Π_S`.
#[derive(Debug, Clone, PartialEq)]
pub struct KTerm {
    pub support: Vec<usize>,
    pub span: Vec<Vec<Scalar>>,
}

impl KTerm {
    pub fn rank(&self) -> usize {
        self.span.len()
    }
}

/// A quantum k-SAT instance. Basis order inside a term is lexicographic in
/// support order, lowest support index most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct KSatInstance {
    n: usize,
    k: usize,
    terms: Vec<KTerm>,
}

impl KSatInstance {
    pub fn new(n: usize, k: usize) -> Self {
        KSatInstance {
            n,
            k,
            terms: Vec::new(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn terms(&self) -> &[KTerm] {
        &self.terms
    }

    /// Adds a term with a sorted support. Dependent and zero kets are dropped.
    pub fn push_term(&mut self, support: Vec<usize>, span: Vec<Vec<Scalar>>) -> Result<(), InstanceError> {
        let loc = || format!("term {}", self.terms.len());
        if support.len() > self.k {
            return Err(InstanceError::invalid(
                loc(),
                format!("support of size {} exceeds k = {}", support.len(), self.k),
            ));
        }
        if support.windows(2).any(|w| w[0] >= w[1]) {
            return Err(InstanceError::invalid(loc(), "support must be strictly increasing"));
        }
        if let Some(&q) = support.iter().find(|&&q| q >= self.n) {
            return Err(InstanceError::invalid(
                loc(),
                format!("qubit {q} out of range for n = {}", self.n),
            ));
        }
        let dim = 1usize << support.len();
        let mut basis = EchelonBasis::new(dim);
        let mut kept = Vec::new();
        for v in span {
            if v.len() != dim {
                return Err(InstanceError::invalid(
                    loc(),
                    format!("vector of length {} for a {}-qubit support", v.len(), support.len()),
                ));
            }
            if basis.insert(v.clone()) {
                kept.push(v);
            }
        }
        if kept.is_empty() {
            return Err(InstanceError::invalid(loc(), "term has an all-zero span"));
        }
        self.terms.push(KTerm { support, span: kept });
        Ok(())
    }

    /// Like [`push_term`](Self::push_term) but for kets whose axes follow an
    /// arbitrary qubit order; the kets are permuted into sorted order.
    pub fn push_term_unsorted(&mut self, qubits: &[usize], span: Vec<Vec<Scalar>>) -> Result<(), InstanceError> {
        let mut order: Vec<usize> = (0..qubits.len()).collect();
        order.sort_by_key(|&i| qubits[i]);
        let support: Vec<usize> = order.iter().map(|&i| qubits[i]).collect();
        let span = span.iter().map(|v| permute_axes(v, &order)).collect();
        self.push_term(support, span)
    }

    /// Terms with identical support merged by span union.
    pub fn merged(&self) -> KSatInstance {
        let mut by_support: BTreeMap<Vec<usize>, Vec<Vec<Scalar>>> = BTreeMap::new();
        let mut order = Vec::new();
        for t in &self.terms {
            let e = by_support.entry(t.support.clone()).or_insert_with(|| {
                order.push(t.support.clone());
                Vec::new()
            });
            e.extend(t.span.iter().cloned());
        }
        let mut out = KSatInstance::new(self.n, self.k);
        for s in order {
            let span = by_support.remove(&s).expect("support recorded");
            out.push_term(s, span).expect("merged spans stay valid");
        }
        out
    }

    /// Lifts a 2-SAT instance: pair tensors become conjugated kets.
    pub fn from_qsat(inst: &QSatInstance) -> KSatInstance {
        let mut out = KSatInstance::new(inst.n(), 2);
        for p in inst.pairs() {
            let (a, b) = p.qubits();
            let kets = p.covectors().iter().map(|v| conj_vec(v)).collect();
            out.push_term(vec![a, b], kets)
                .expect("pair constraints are valid terms");
        }
        for u in inst.units() {
            let kets = u.span().iter().map(|v| conj_vec(v)).collect();
            out.push_term(vec![u.qubit()], kets)
                .expect("unit constraints are valid terms");
        }
        out
    }
}

pub(crate) fn conj_vec(v: &[Scalar]) -> Vec<Scalar> {
    use crate::field::Field;
    v.iter().map(Field::conj).collect()
}

/// Reorders the axes of a `2^w` vector: output axis `j` is input axis `order[j]`.
pub fn permute_axes(v: &[Scalar], order: &[usize]) -> Vec<Scalar> {
    let w = order.len();
    debug_assert_eq!(v.len(), 1 << w);
    let mut out = vec![Scalar::zero(); v.len()];
    for (src, z) in v.iter().enumerate() {
        let mut dst = 0;
        for (j, &axis) in order.iter().enumerate() {
            let bit = (src >> (w - 1 - axis)) & 1;
            dst |= bit << (w - 1 - j);
        }
        out[dst] = z.clone();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{epsilon, int, scalar};

    fn basis_tensor(i: usize, j: usize) -> Mat {
        let mut m = Mat::zeros(2, 2);
        m.set(i, j, int(1));
        m
    }

    #[test]
    fn ranks_of_simple_spans() {
        let mut inst = QSatInstance::new(3);
        assert_eq!(inst.constraint_rank(0, 1), 0);
        inst.insert_tensor(0, 1, epsilon()).unwrap();
        assert_eq!(inst.constraint_rank(0, 1), 1);
        inst.insert_tensor(1, 2, basis_tensor(0, 0)).unwrap();
        assert_eq!(
            inst.insert_tensor(1, 2, basis_tensor(1, 1)).unwrap(),
            Insertion::Extended(2)
        );
        assert_eq!(inst.constraint_rank(2, 1), 2);
    }

    #[test]
    fn dependent_insertions_are_dropped() {
        let mut inst = QSatInstance::new(2);
        inst.insert_tensor(0, 1, epsilon()).unwrap();
        let twice = epsilon::<Scalar>().scale(&int(2));
        assert_eq!(inst.insert_tensor(0, 1, twice).unwrap(), Insertion::Unchanged);
        assert_eq!(
            inst.insert_tensor(0, 1, Mat::zeros(2, 2)).unwrap(),
            Insertion::Unchanged
        );
        let other = Matrix::from_2x2(int(1), scalar(1, 2, 1, 1), int(0), int(3));
        assert_eq!(inst.insert_tensor(0, 1, other).unwrap(), Insertion::Extended(2));
        assert_eq!(inst.constraint_rank(0, 1), 2);
    }

    #[test]
    fn full_rank_pair() {
        let mut inst = QSatInstance::new(2);
        for (i, j) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
            inst.insert_tensor(0, 1, basis_tensor(i, j)).unwrap();
        }
        assert_eq!(inst.constraint_rank(0, 1), 4);
    }

    #[test]
    fn orientation_convention() {
        let mut inst = QSatInstance::new(3);
        let t = basis_tensor(0, 1);
        inst.insert_tensor(2, 0, t.clone()).unwrap();
        // stored as (0, 2) with the transpose
        assert_eq!(inst.pair(0, 2).unwrap().span()[0], basis_tensor(1, 0));
        assert_eq!(inst.tensors(2, 0)[0], t);
        assert_eq!(
            inst.insert_tensor(0, 2, basis_tensor(1, 0)).unwrap(),
            Insertion::Unchanged
        );
    }

    #[test]
    fn rejects_bad_indices() {
        let mut inst = QSatInstance::new(2);
        assert!(inst.insert_tensor(0, 2, epsilon()).is_err());
        assert!(inst.insert_tensor(1, 1, epsilon()).is_err());
        assert!(inst.insert_unit(5, vec![int(1), int(0)]).is_err());
    }

    #[test]
    fn ksat_term_validation() {
        let mut k = KSatInstance::new(4, 2);
        assert!(k.push_term(vec![0, 1, 2], vec![vec![int(1); 8]]).is_err());
        assert!(k.push_term(vec![1, 0], vec![vec![int(1); 4]]).is_err());
        assert!(k.push_term(vec![0, 1], vec![vec![int(1); 2]]).is_err());
        assert!(k.push_term(vec![0, 1], vec![vec![int(0); 4]]).is_err());
        k.push_term(vec![0, 3], vec![vec![int(1); 4], vec![int(2); 4]]).unwrap();
        assert_eq!(k.terms()[0].rank(), 1);
    }

    #[test]
    fn axis_permutation() {
        // |q0 q1 q2> = |0 1 1> stored in order (2, 0, 1) -> axis values (1, 0, 1)
        let mut v = vec![int(0); 8];
        v[0b101] = int(1);
        let mut k = KSatInstance::new(3, 3);
        k.push_term_unsorted(&[2, 0, 1], vec![v]).unwrap();
        let t = &k.terms()[0];
        assert_eq!(t.support, vec![0, 1, 2]);
        assert_eq!(t.span[0][0b011], int(1));
    }
}
