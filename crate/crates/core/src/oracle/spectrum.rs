//! Double-precision smallest eigenvalue of `Σ_S Π_S ⊗ I`.
//!
//! Small systems go through a dense Hermitian eigensolver; larger ones use
//! restarted Lanczos with full reorthogonalization on a matrix-free operator.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Constraints, OracleError};
use crate::field::{projector_from_span, to_complex64};
use crate::instance::conj_vec;

/// Largest qubit count accepted by the float path.
pub const FLOAT_LIMIT: usize = 16;
const DENSE_LIMIT: usize = 1 << 10;
const RESIDUAL_TOL: f64 = 1e-9;

struct LocalProjector {
    /// Global indices per spectator setting, in local order.
    blocks: Vec<Vec<usize>>,
    p: Vec<Complex64>,
    d: usize,
}

struct Operator {
    dim: usize,
    terms: Vec<LocalProjector>,
}

impl Operator {
    fn apply(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
        for t in &self.terms {
            for idx in &t.blocks {
                for (r, &gi) in idx.iter().enumerate() {
                    let row = &t.p[r * t.d..(r + 1) * t.d];
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (c, &gj) in idx.iter().enumerate() {
                        acc += row[c] * x[gj];
                    }
                    y[gi] += acc;
                }
            }
        }
    }

    fn dense(&self) -> DMatrix<Complex64> {
        let mut h = DMatrix::zeros(self.dim, self.dim);
        for t in &self.terms {
            for idx in &t.blocks {
                for (r, &gi) in idx.iter().enumerate() {
                    for (c, &gj) in idx.iter().enumerate() {
                        h[(gi, gj)] += t.p[r * t.d + c];
                    }
                }
            }
        }
        h
    }
}

fn build_operator(inst: &impl Constraints) -> Result<Operator, OracleError> {
    let sys = inst.constraint_system();
    if sys.n() > FLOAT_LIMIT {
        return Err(OracleError::Limit {
            n: sys.n(),
            limit: FLOAT_LIMIT,
            mode: "float",
        });
    }
    let mut terms = Vec::new();
    for t in sys.terms() {
        let kets: Vec<_> = t.covectors.iter().map(|v| conj_vec(v)).collect();
        let p = projector_from_span(&kets)?;
        let blocks = sys
            .spectator_bases(&t.support)
            .map(|base| sys.local_indices(&t.support, base))
            .collect();
        terms.push(LocalProjector {
            blocks,
            d: p.rows(),
            p: p.as_slice().iter().map(to_complex64).collect(),
        });
    }
    Ok(Operator { dim: sys.dim(), terms })
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn inner(u: &[Complex64], v: &[Complex64]) -> Complex64 {
    u.iter().zip(v).map(|(a, b)| a.conj() * b).sum()
}

/// Smallest eigenvalue of the instance Hamiltonian, residual below `1e-9`.
pub fn min_eigenvalue_float(inst: &impl Constraints) -> Result<f64, OracleError> {
    let op = build_operator(inst)?;
    if op.dim <= DENSE_LIMIT {
        let eig = SymmetricEigen::new(op.dense());
        return Ok(eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min));
    }
    Ok(lanczos_min(&op))
}

fn lanczos_min(op: &Operator) -> f64 {
    let dim = op.dim;
    let krylov = dim.min(120);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut start: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let mut best = f64::INFINITY;
    let mut w = vec![Complex64::new(0.0, 0.0); dim];
    for _restart in 0..200 {
        let s = norm(&start);
        let mut basis: Vec<Vec<Complex64>> = vec![start.iter().map(|z| z / s).collect()];
        let mut alpha = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        for j in 0..krylov {
            op.apply(&basis[j], &mut w);
            let a = inner(&basis[j], &w).re;
            alpha.push(a);
            // two passes of Gram-Schmidt against the whole basis
            for _ in 0..2 {
                for v in &basis {
                    let c = inner(v, &w);
                    for (wi, vi) in w.iter_mut().zip(v) {
                        *wi -= c * vi;
                    }
                }
            }
            let b = norm(&w);
            if b < 1e-12 || j + 1 == krylov {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|z| z / b).collect());
        }
        let m = alpha.len();
        let mut t = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            t[(i, i)] = alpha[i];
            if i + 1 < m {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (k, theta) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty tridiagonal");
        let y: DVector<f64> = eig.eigenvectors.column(k).into();
        let mut ritz = vec![Complex64::new(0.0, 0.0); dim];
        for (yi, v) in y.iter().zip(&basis) {
            for (r, vi) in ritz.iter_mut().zip(v) {
                *r += vi * *yi;
            }
        }
        op.apply(&ritz, &mut w);
        let res: f64 = w
            .iter()
            .zip(&ritz)
            .map(|(hx, x)| (hx - x * theta).norm_sqr())
            .sum::<f64>()
            .sqrt();
        best = best.min(theta);
        if res <= RESIDUAL_TOL || m < krylov {
            return theta;
        }
        start = ritz;
    }
    best
}
