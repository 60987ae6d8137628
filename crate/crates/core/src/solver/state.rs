//! Satisfying states kept as tensor products of small factors.
//!
//! Rank-2 merges can entangle the qubits they expand, so a reconstructed
//! state is a product of factors, each a dense vector over a few qubits.

use num_traits::Zero;

use super::SolverError;
use crate::field::{kron_vec, normalize_projective, Field, Scalar};
use crate::instance::QSatInstance;

/// Amplitudes over `qubits`, the first listed qubit being the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct Factor {
    pub qubits: Vec<usize>,
    pub amplitudes: Vec<Scalar>,
}

impl Factor {
    pub fn single(q: usize, state: Vec<Scalar>) -> Self {
        Factor {
            qubits: vec![q],
            amplitudes: state,
        }
    }

    fn width(&self) -> usize {
        self.qubits.len()
    }

    fn bit(&self, index: usize, axis: usize) -> usize {
        (index >> (self.width() - 1 - axis)) & 1
    }

    fn axis_of(&self, q: usize) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    /// Slices at `axis = 0` and `axis = 1`, each over the remaining axes in order.
    fn slices(&self, axis: usize) -> [Vec<Scalar>; 2] {
        let mut s = [Vec::new(), Vec::new()];
        for (i, z) in self.amplitudes.iter().enumerate() {
            s[self.bit(i, axis)].push(z.clone());
        }
        s
    }

    /// Peels off every qubit that is in a product with the rest.
    pub(crate) fn split(mut self) -> Vec<Factor> {
        let mut out = Vec::new();
        let mut axis = 0;
        while self.width() > 1 && axis < self.width() {
            let [s0, s1] = self.slices(axis);
            let Some(j) = s0.iter().zip(&s1).position(|(x, y)| !x.is_zero() || !y.is_zero()) else {
                axis += 1;
                continue;
            };
            let rest = if s0[j].is_zero() { &s1 } else { &s0 };
            let (c0, c1) = (s0[j].div_ref(&rest[j]), s1[j].div_ref(&rest[j]));
            let separable = rest
                .iter()
                .zip(s0.iter().zip(&s1))
                .all(|(r, (x, y))| *x == c0.mul_ref(r) && *y == c1.mul_ref(r));
            if !separable {
                axis += 1;
                continue;
            }
            let mut single = vec![c0, c1];
            normalize_projective(&mut single);
            out.push(Factor::single(self.qubits[axis], single));
            let mut amps = rest.clone();
            normalize_projective(&mut amps);
            self.qubits.remove(axis);
            self.amplitudes = amps;
        }
        out.push(self);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FactoredState {
    n: usize,
    factors: Vec<Factor>,
}

impl FactoredState {
    pub fn product(states: Vec<Vec<Scalar>>) -> Self {
        FactoredState {
            n: states.len(),
            factors: states
                .into_iter()
                .enumerate()
                .map(|(q, s)| Factor::single(q, s))
                .collect(),
        }
    }

    /// Checks that the factors partition `0..n` and have matching lengths.
    pub fn from_factors(n: usize, factors: Vec<Factor>) -> Result<Self, SolverError> {
        let mut seen = vec![false; n];
        for f in &factors {
            if f.amplitudes.len() != 1 << f.width() || f.amplitudes.iter().all(Zero::is_zero) {
                return Err(SolverError::Contract(format!("malformed factor on {:?}", f.qubits)));
            }
            for &q in &f.qubits {
                if q >= n || std::mem::replace(&mut seen[q], true) {
                    return Err(SolverError::Contract(format!("qubit {q} repeated or out of range")));
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(SolverError::Contract("factors do not cover every qubit".into()));
        }
        Ok(FactoredState { n, factors })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn is_product(&self) -> bool {
        self.factors.iter().all(|f| f.width() == 1)
    }

    /// One state per qubit, when every factor is a single qubit.
    pub fn product_states(&self) -> Option<Vec<Vec<Scalar>>> {
        if !self.is_product() {
            return None;
        }
        let mut out = vec![Vec::new(); self.n];
        for f in &self.factors {
            out[f.qubits[0]] = f.amplitudes.clone();
        }
        Some(out)
    }

    /// Full `2^n` amplitude vector, qubit 0 most significant.
    pub fn to_dense(&self) -> Vec<Scalar> {
        let mut qubits = Vec::new();
        let mut amps = vec![Scalar::from_i64(1)];
        for f in &self.factors {
            qubits.extend_from_slice(&f.qubits);
            amps = kron_vec(&amps, &f.amplitudes);
        }
        // axis j of `amps` is qubit `qubits[j]`; move it to axis `qubits[j]`
        let mut order = vec![0; self.n];
        for (j, &q) in qubits.iter().enumerate() {
            order[q] = j;
        }
        crate::instance::permute_axes(&amps, &order)
    }

    fn locate(&self, q: usize) -> (usize, usize) {
        for (i, f) in self.factors.iter().enumerate() {
            if let Some(ax) = f.axis_of(q) {
                return (i, ax);
            }
        }
        panic!("qubit {q} not in any factor")
    }

    /// Exact check that every pair tensor and unit covector of `inst` vanishes
    /// on this state, without forming the dense vector.
    pub fn annihilates(&self, inst: &QSatInstance) -> bool {
        if inst.n() != self.n {
            return false;
        }
        for u in inst.units() {
            let (fi, ax) = self.locate(u.qubit());
            let [s0, s1] = self.factors[fi].slices(ax);
            for v in u.span() {
                if s0
                    .iter()
                    .zip(&s1)
                    .any(|(x, y)| !v[0].mul_ref(x).add_ref(&v[1].mul_ref(y)).is_zero())
                {
                    return false;
                }
            }
        }
        for p in inst.pairs() {
            let (a, b) = p.qubits();
            let (fa, xa) = self.locate(a);
            let (fb, xb) = self.locate(b);
            for t in p.span() {
                let ok = if fa == fb {
                    self.pair_in_factor(&self.factors[fa], xa, xb, t.as_slice())
                } else {
                    pair_across(&self.factors[fa].slices(xa), &self.factors[fb].slices(xb), t.as_slice())
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }

    fn pair_in_factor(&self, f: &Factor, xa: usize, xb: usize, t: &[Scalar]) -> bool {
        let w = f.width();
        let mut acc = vec![Scalar::zero(); 1 << (w - 2)];
        for (i, z) in f.amplitudes.iter().enumerate() {
            let coeff = &t[2 * f.bit(i, xa) + f.bit(i, xb)];
            if coeff.is_zero() || z.is_zero() {
                continue;
            }
            let mut rest = 0;
            for ax in 0..w {
                if ax != xa && ax != xb {
                    rest = (rest << 1) | f.bit(i, ax);
                }
            }
            acc[rest].add_mul(coeff, z);
        }
        acc.iter().all(Zero::is_zero)
    }

    /// Replays one step backwards.
    pub(crate) fn undo(&mut self, step: &super::ReductionStep) -> Result<(), SolverError> {
        use super::ReductionStep::*;
        match step {
            Relabel { map } => {
                if map.iter().flatten().count() != self.n {
                    return Err(SolverError::Contract("relabel size does not match the state".into()));
                }
                let mut back = vec![0; self.n];
                for (old, new) in map.iter().enumerate() {
                    if let Some(new) = new {
                        back[*new] = old;
                    }
                }
                for f in &mut self.factors {
                    f.qubits.iter_mut().for_each(|q| *q = back[*q]);
                }
                self.n = map.len();
            }
            UnitFix { qubit, state } => {
                self.factors.push(Factor::single(*qubit, state.clone()));
            }
            Rank3Eliminate { a, b, kept } => {
                let f = Factor {
                    qubits: vec![*a, *b],
                    amplitudes: kept.clone(),
                };
                self.factors.extend(f.split());
            }
            Rank2Merge { a, b, basis, .. } => {
                let Some(fi) = self.factors.iter().position(|f| f.axis_of(*a).is_some()) else {
                    return Err(SolverError::Contract(format!("merged qubit {a} has no factor")));
                };
                let f = self.factors.swap_remove(fi);
                let expanded = expand(&f, *a, *b, basis);
                self.factors.extend(expanded.split());
            }
        }
        Ok(())
    }

    pub(crate) fn check_covers(&self) -> Result<(), SolverError> {
        Self::from_factors(self.n, self.factors.clone()).map(|_| ())
    }
}

/// `Σ_{αβ} t_{αβ} A_α ⊗ B_β = 0` for slices `A` of one factor and `B` of another.
fn pair_across(sa: &[Vec<Scalar>; 2], sb: &[Vec<Scalar>; 2], t: &[Scalar]) -> bool {
    // C_β = Σ_α t_{αβ} A_α, then Σ_β C_β ⊗ B_β
    let c: Vec<Vec<Scalar>> = (0..2)
        .map(|beta| {
            (0..sa[0].len())
                .map(|i| t[beta].mul_ref(&sa[0][i]).add_ref(&t[2 + beta].mul_ref(&sa[1][i])))
                .collect()
        })
        .collect();
    for i in 0..sa[0].len() {
        for j in 0..sb[0].len() {
            if !c[0][i]
                .mul_ref(&sb[0][j])
                .add_ref(&c[1][i].mul_ref(&sb[1][j]))
                .is_zero()
            {
                return false;
            }
        }
    }
    true
}

/// Replaces axis `a` (a logical qubit) by the pair `(a, b)` through `v_γ`.
fn expand(f: &Factor, a: usize, b: usize, basis: &[Vec<Scalar>; 2]) -> Factor {
    let p = f.axis_of(a).expect("logical qubit present");
    let w = f.width();
    let mut qubits = f.qubits.clone();
    qubits.insert(p + 1, b);
    let mut amps = vec![Scalar::zero(); 1 << (w + 1)];
    for (old, z) in f.amplitudes.iter().enumerate() {
        if z.is_zero() {
            continue;
        }
        let gamma = f.bit(old, p);
        let high = old >> (w - p);
        let low = old & ((1 << (w - 1 - p)) - 1);
        for (k, v) in basis[gamma].iter().enumerate() {
            if v.is_zero() {
                continue;
            }
            let new = (((high << 2) | k) << (w - 1 - p)) | low;
            amps[new].add_mul(z, v);
        }
    }
    Factor {
        qubits,
        amplitudes: amps,
    }
}
