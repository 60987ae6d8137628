//! Closure of homogeneous instances and the product assignment on a complete set.

use std::collections::{BTreeSet, HashMap, VecDeque};

use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::Zero;

use super::SolverError;
use crate::field::{normalize_projective, Field, Matrix, Scalar};
use crate::instance::QSatInstance;
use crate::Mat;

/// `ω = φ ε θ`, i.e. `ω_{ij} = φ_{i0} θ_{1j} − φ_{i1} θ_{0j}`.
pub fn combine_constraints(phi: &Mat, theta: &Mat) -> Mat {
    let f = |i, j| phi.get(i, j);
    let t = |i, j| theta.get(i, j);
    let w = |i, j| f(i, 0).mul_ref(t(1, j)).sub_ref(&f(i, 1).mul_ref(t(0, j)));
    Matrix::from_2x2(w(0, 0), w(0, 1), w(1, 0), w(1, 1))
}

/// Outcome of one closure round.
#[derive(Debug, Clone, PartialEq)]
pub enum Closure {
    /// The returned instance is a complete set of rank-1 constraints.
    Complete(QSatInstance),
    /// A generated tensor raised the rank of `pair` to 2.
    RankEscalated(QSatInstance, (usize, usize)),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureOutcome {
    pub closure: Closure,
    /// Calls to the combination rule during the worklist phase.
    pub attempts: u64,
    pub new_edges: usize,
}

/// Gaussian integer; closure tensors are kept primitive so no fractions appear.
type GInt = Complex<BigInt>;
type Tensor = [GInt; 4];

fn to_gint(m: &Mat) -> Tensor {
    let mut v = m.as_slice().to_vec();
    normalize_projective(&mut v);
    let g = |z: &Scalar| Complex::new(z.re.to_integer(), z.im.to_integer());
    [g(&v[0]), g(&v[1]), g(&v[2]), g(&v[3])]
}

fn to_mat(t: &Tensor) -> Mat {
    let s = |z: &GInt| Complex::new(BigRational::from(z.re.clone()), BigRational::from(z.im.clone()));
    Matrix::from_2x2(s(&t[0]), s(&t[1]), s(&t[2]), s(&t[3]))
}

fn is_zero(t: &Tensor) -> bool {
    t.iter().all(Zero::is_zero)
}

/// All 2×2 minors vanish.
fn proportional(x: &Tensor, y: &Tensor) -> bool {
    for i in 0..4 {
        for j in i + 1..4 {
            if &x[i] * &y[j] != &x[j] * &y[i] {
                return false;
            }
        }
    }
    true
}

/// Single-tensor view of a homogeneous instance with adjacency sets.
struct Graph {
    adj: Vec<BTreeSet<usize>>,
    tensors: HashMap<(usize, usize), Tensor>,
}

impl Graph {
    fn new(inst: &QSatInstance) -> Self {
        let mut adj = vec![BTreeSet::new(); inst.n()];
        let mut tensors = HashMap::new();
        for p in inst.pairs() {
            let (a, b) = p.qubits();
            adj[a].insert(b);
            adj[b].insert(a);
            tensors.insert((a, b), to_gint(&p.span()[0]));
        }
        Graph { adj, tensors }
    }

    /// Entry `(i, j)` of `φ^{(x,y)}`, row index on `x`.
    fn entry(t: &Tensor, flipped: bool, i: usize, j: usize) -> &GInt {
        if flipped {
            &t[2 * j + i]
        } else {
            &t[2 * i + j]
        }
    }

    fn oriented(&self, x: usize, y: usize) -> (&Tensor, bool) {
        (&self.tensors[&(x.min(y), x.max(y))], x > y)
    }

    /// `φ^{(x,mid)} ε φ^{(mid,y)}`, row index on `x`.
    fn combine(&self, x: usize, mid: usize, y: usize) -> Tensor {
        let (f, ff) = self.oriented(x, mid);
        let (t, tf) = self.oriented(mid, y);
        let w = |i, j| {
            Graph::entry(f, ff, i, 0) * Graph::entry(t, tf, 1, j)
                - Graph::entry(f, ff, i, 1) * Graph::entry(t, tf, 0, j)
        };
        [w(0, 0), w(0, 1), w(1, 0), w(1, 1)]
    }

    fn get(&self, x: usize, y: usize) -> Mat {
        let m = to_mat(&self.tensors[&(x.min(y), x.max(y))]);
        if x < y {
            m
        } else {
            m.transpose()
        }
    }

    /// Every `ω` on an existing edge is proportional to the stored tensor, and
    /// vanishes on a non-edge.
    fn is_complete(&self) -> bool {
        for mid in 0..self.adj.len() {
            let nbrs: Vec<usize> = self.adj[mid].iter().copied().collect();
            for (i, &x) in nbrs.iter().enumerate() {
                for &y in &nbrs[i + 1..] {
                    let omega = self.combine(x, mid, y);
                    let ok = match self.tensors.get(&(x, y)) {
                        Some(phi) => proportional(phi, &omega),
                        None => is_zero(&omega),
                    };
                    if !ok {
                        return false;
                    }
                }
            }
        }
        true
    }
}

fn check_homogeneous(inst: &QSatInstance) -> Result<(), SolverError> {
    if !inst.is_homogeneous() {
        return Err(SolverError::Contract(
            "closure needs pair ranks at most 1 and no unit constraints".into(),
        ));
    }
    Ok(())
}

/// True when the homogeneous instance is closed under [`combine_constraints`].
pub fn is_complete(inst: &QSatInstance) -> bool {
    inst.is_homogeneous() && Graph::new(inst).is_complete()
}

/// Saturates a homogeneous instance with generated constraints.
///
/// Edges are processed FIFO; each popped edge `(a, b)` is combined with every
/// other edge at `a` and at `b`. A generated tensor that is independent of an
/// existing one ends the round with [`Closure::RankEscalated`].
pub fn close_homogeneous(inst: &QSatInstance) -> Result<ClosureOutcome, SolverError> {
    check_homogeneous(inst)?;
    let mut g = Graph::new(inst);
    let mut out = inst.clone();
    let mut queue: VecDeque<(usize, usize)> = inst.edges().collect();
    let mut attempts = 0u64;
    let mut new_edges = 0;
    while let Some((a, b)) = queue.pop_front() {
        for (end, mid) in [(a, b), (b, a)] {
            let nbrs: Vec<usize> = g.adj[mid].iter().copied().filter(|&c| c != end).collect();
            for c in nbrs {
                attempts += 1;
                let omega = g.combine(end, mid, c);
                if is_zero(&omega) {
                    continue;
                }
                let key = (end.min(c), end.max(c));
                let omega = if end < c {
                    omega
                } else {
                    [omega[0].clone(), omega[2].clone(), omega[1].clone(), omega[3].clone()]
                };
                if let Some(phi) = g.tensors.get(&key) {
                    if !proportional(phi, &omega) {
                        out.insert_tensor(key.0, key.1, to_mat(&omega))?;
                        return Ok(ClosureOutcome {
                            closure: Closure::RankEscalated(out, key),
                            attempts,
                            new_edges,
                        });
                    }
                    continue;
                }
                let m = to_mat(&omega);
                let omega = to_gint(&m);
                out.insert_tensor(key.0, key.1, to_mat(&omega))?;
                g.tensors.insert(key, omega);
                g.adj[key.0].insert(key.1);
                g.adj[key.1].insert(key.0);
                queue.push_back(key);
                new_edges += 1;
            }
        }
    }
    if !g.is_complete() {
        return Err(SolverError::Contract("closure finished without a complete set".into()));
    }
    Ok(ClosureOutcome {
        closure: Closure::Complete(out),
        attempts,
        new_edges,
    })
}

/// `k`-th root candidate: `(1,0), (0,1), (1,1), (1,2), …`.
fn candidate(k: usize) -> Vec<Scalar> {
    match k {
        0 => vec![Scalar::from_i64(1), Scalar::zero()],
        1 => vec![Scalar::zero(), Scalar::from_i64(1)],
        _ => vec![Scalar::from_i64(1), Scalar::from_i64(k as i64 - 1)],
    }
}

/// `ψ^{(a)} = ε (φ^{(r,a)})ᵀ ψ^{(r)}`, with `φ^{(r,a)}` row-indexed by `r`.
fn propagate(phi_ra: &Mat, psi: &[Scalar]) -> Vec<Scalar> {
    // (φᵀ ψ)_j = Σ_i φ_{ij} ψ_i; then ε (x0, x1) = (x1, −x0)
    let x: Vec<Scalar> = (0..2)
        .map(|j| {
            phi_ra
                .get(0, j)
                .mul_ref(&psi[0])
                .add_ref(&phi_ra.get(1, j).mul_ref(&psi[1]))
        })
        .collect();
    vec![x[1].clone(), -x[0].clone()]
}

/// One-qubit states annihilating every tensor of a complete homogeneous instance.
pub fn product_assignment(inst: &QSatInstance) -> Result<Vec<Vec<Scalar>>, SolverError> {
    check_homogeneous(inst)?;
    let g = Graph::new(inst);
    if !g.is_complete() {
        return Err(SolverError::Contract("instance is not a complete set".into()));
    }
    Ok(assign(&g))
}

pub(crate) fn assign_complete(inst: &QSatInstance) -> Vec<Vec<Scalar>> {
    assign(&Graph::new(inst))
}

/// Greedy sweep: the lowest unassigned vertex is a root, its unassigned
/// neighbours follow from it, and the rest is again a complete set.
fn assign(g: &Graph) -> Vec<Vec<Scalar>> {
    let n = g.adj.len();
    let mut states: Vec<Option<Vec<Scalar>>> = vec![None; n];
    for r in 0..n {
        if states[r].is_some() {
            continue;
        }
        let close: Vec<usize> = g.adj[r].iter().copied().filter(|&a| states[a].is_none()).collect();
        let tensors: Vec<Mat> = close.iter().map(|&a| g.get(r, a)).collect();
        let mut k = 0;
        let (root, images) = loop {
            let psi = candidate(k);
            let images: Vec<Vec<Scalar>> = tensors.iter().map(|t| propagate(t, &psi)).collect();
            if images.iter().all(|v| v.iter().any(|z| !z.is_zero())) {
                break (psi, images);
            }
            k += 1;
        };
        states[r] = Some(root);
        for (a, mut v) in close.into_iter().zip(images) {
            normalize_projective(&mut v);
            states[a] = Some(v);
        }
    }
    states.into_iter().map(|s| s.expect("every vertex assigned")).collect()
}
