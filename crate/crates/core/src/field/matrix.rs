use super::{inner, Field, FieldError};

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> Matrix<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self, FieldError> {
        if data.len() != rows * cols {
            return Err(FieldError::Shape(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self, FieldError> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(FieldError::Shape("ragged rows".into()));
        }
        Ok(Matrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    /// Fixed-size convenience for 2×2 tensors.
    pub fn from_2x2(a: T, b: T, c: T, d: T) -> Self {
        Matrix {
            rows: 2,
            cols: 2,
            data: vec![a, b, c, d],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.cols + j] = v;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self.get(i, j).clone()).collect()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(T::is_zero)
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j).clone());
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        let mut t = self.transpose();
        for z in &mut t.data {
            *z = z.conj();
        }
        t
    }

    pub fn scale(&self, k: &T) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.mul_ref(k)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a.add_ref(b))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, FieldError> {
        self.zip_with(other, |a, b| a.sub_ref(b))
    }

    fn zip_with(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Result<Self, FieldError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(FieldError::Shape(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| f(a, b)).collect(),
        })
    }

    pub fn mul(&self, other: &Self) -> Result<Self, FieldError> {
        mat_mul(self, other)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[T]) -> Vec<T> {
        assert_eq!(v.len(), self.cols, "vector length must match column count");
        (0..self.rows)
            .map(|i| {
                let mut acc = T::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    acc.add_mul(a, b);
                }
                acc
            })
            .collect()
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let rows = self.rows * other.rows;
        let cols = self.cols * other.cols;
        let mut m = Self::zeros(rows, cols);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                if a.is_zero() {
                    continue;
                }
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        m.set(i * other.rows + k, j * other.cols + l, a.mul_ref(other.get(k, l)));
                    }
                }
            }
        }
        m
    }

    /// Reduced row echelon form and pivot columns. Pivots are the first
    /// nonzero entry found in each column scan; no tolerance is involved.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, r * m.cols + j);
                }
            }
            let inv = T::one().div_ref(m.get(r, c));
            for j in c..m.cols {
                let v = m.get(r, j).mul_ref(&inv);
                m.set(r, j, v);
            }
            for i in 0..m.rows {
                if i == r || m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).clone();
                for j in c..m.cols {
                    let sub = f.mul_ref(m.get(r, j));
                    let v = m.get(i, j).sub_ref(&sub);
                    m.set(i, j, v);
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }
}

/// Exact product `A·B`.
pub fn mat_mul<T: Field>(a: &Matrix<T>, b: &Matrix<T>) -> Result<Matrix<T>, FieldError> {
    if a.cols != b.rows {
        return Err(FieldError::Shape(format!(
            "cannot multiply {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut m: Matrix<T> = Matrix::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        for k in 0..a.cols {
            let x = a.get(i, k);
            if x.is_zero() {
                continue;
            }
            for j in 0..b.cols {
                let idx = i * b.cols + j;
                m.data[idx].add_mul(x, b.get(k, j));
            }
        }
    }
    Ok(m)
}

/// Basis of `{v : M·v = 0}`, one vector per free column of the RREF.
pub fn nullspace<T: Field>(m: &Matrix<T>) -> Vec<Vec<T>> {
    let (r, pivots) = m.rref();
    let free: Vec<usize> = (0..m.cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![T::zero(); m.cols];
            v[f] = T::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -r.get(row, f).clone();
            }
            v
        })
        .collect()
}

/// Rank of a family of equal-length vectors.
pub fn rank_of<T: Field>(vectors: &[Vec<T>]) -> usize {
    let Some(first) = vectors.first() else {
        return 0;
    };
    let mut basis = EchelonBasis::new(first.len());
    for v in vectors {
        basis.insert(v.clone());
    }
    basis.rank()
}

/// Whether `v` lies in the linear span of `span`. The zero vector always does.
pub fn is_in_span<T: Field>(v: &[T], span: &[Vec<T>]) -> bool {
    let mut basis = EchelonBasis::new(v.len());
    for s in span {
        basis.insert(s.clone());
    }
    basis.contains(v)
}

/// Orthogonal projector onto `span(vectors)` via unnormalized Gram–Schmidt:
/// `P = Σ w w† / ⟨w, w⟩`.
pub fn projector_from_span<T: Field>(vectors: &[Vec<T>]) -> Result<Matrix<T>, FieldError> {
    let dim = vectors
        .first()
        .map(Vec::len)
        .ok_or(FieldError::Degenerate("empty spanning set"))?;
    if vectors.iter().any(|v| v.len() != dim) {
        return Err(FieldError::Shape("spanning vectors differ in length".into()));
    }
    let mut ortho: Vec<(Vec<T>, T)> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for (u, uu) in &ortho {
            let c = inner(u, v).div_ref(uu);
            for (wi, ui) in w.iter_mut().zip(u) {
                wi.sub_mul(&c, ui);
            }
        }
        if w.iter().all(T::is_zero) {
            continue;
        }
        let ww = inner(&w, &w);
        ortho.push((w, ww));
    }
    if ortho.is_empty() {
        return Err(FieldError::Degenerate("spanning set is all zero"));
    }
    let mut p: Matrix<T> = Matrix::zeros(dim, dim);
    for (w, ww) in &ortho {
        for i in 0..dim {
            if w[i].is_zero() {
                continue;
            }
            let wi = w[i].div_ref(ww);
            for j in 0..dim {
                p.data[i * dim + j].add_mul(&wi, &w[j].conj());
            }
        }
    }
    Ok(p)
}

/// The antisymmetric 2×2 tensor `[[0, 1], [-1, 0]]`.
pub fn epsilon<T: Field>() -> Matrix<T> {
    Matrix::from_2x2(T::zero(), T::one(), -T::one(), T::zero())
}

/// Incrementally built row-echelon basis.
///
/// Each stored row has a distinct pivot (its first nonzero entry, scaled to
/// one) and is zero at the pivots of all rows stored before it. Rows are kept
/// sparse since constraint rows start out with only a handful of entries.
#[derive(Clone, Debug)]
pub struct EchelonBasis<T> {
    dim: usize,
    rows: Vec<(usize, Vec<(usize, T)>)>,
    pivot_of: Vec<bool>,
}

impl<T: Field> EchelonBasis<T> {
    pub fn new(dim: usize) -> Self {
        EchelonBasis {
            dim,
            rows: Vec::new(),
            pivot_of: vec![false; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.dim
    }

    fn reduce(&self, v: &mut [T]) {
        for (p, row) in &self.rows {
            if v[*p].is_zero() {
                continue;
            }
            let f = v[*p].clone();
            for (j, x) in row {
                v[*j].sub_mul(&f, x);
            }
        }
    }

    pub fn contains(&self, v: &[T]) -> bool {
        assert_eq!(v.len(), self.dim);
        let mut w = v.to_vec();
        self.reduce(&mut w);
        w.iter().all(T::is_zero)
    }

    /// Adds `v` if it is independent of the stored rows; returns whether it was.
    pub fn insert(&mut self, mut v: Vec<T>) -> bool {
        assert_eq!(v.len(), self.dim);
        self.reduce(&mut v);
        let Some(p) = v.iter().position(|z| !z.is_zero()) else {
            return false;
        };
        let inv = T::one().div_ref(&v[p]);
        let row: Vec<(usize, T)> = v
            .into_iter()
            .enumerate()
            .skip(p)
            .filter(|(_, z)| !z.is_zero())
            .map(|(j, z)| (j, z.mul_ref(&inv)))
            .collect();
        self.pivot_of[p] = true;
        self.rows.push((p, row));
        true
    }

    /// Basis of the orthogonal complement under the bilinear pairing, i.e. all
    /// `x` with `Σ_j row_j x_j = 0` for every stored row.
    pub fn kernel(&self) -> Vec<Vec<T>> {
        let dense: Vec<Vec<T>> = self
            .rows
            .iter()
            .map(|(_, row)| {
                let mut d = vec![T::zero(); self.dim];
                for (j, x) in row {
                    d[*j] = x.clone();
                }
                d
            })
            .collect();
        if dense.is_empty() {
            return (0..self.dim)
                .map(|i| {
                    let mut e = vec![T::zero(); self.dim];
                    e[i] = T::one();
                    e
                })
                .collect();
        }
        let m = Matrix::from_rows(dense).expect("rows share the basis dimension");
        nullspace(&m)
    }

    pub fn pivot_columns(&self) -> impl Iterator<Item = usize> + '_ {
        self.pivot_of.iter().enumerate().filter(|(_, &p)| p).map(|(i, _)| i)
    }
}
