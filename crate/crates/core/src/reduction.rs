//! Circuit-to-4-SAT compiler.
//!
//! A verifier circuit `U = U_L ⋯ U_1` on `N = n_in + n_wit` computational
//! qubits is turned into a k-local instance on `2L + N` qubits whose
//! satisfying states are the history states of accepted witnesses. Clock
//! particle `j` (0-based) lives on qubits `2j, 2j+1` with
//! `u = 00, a1 = 01, a2 = 10, d = 11`; computational qubit `q` is `2L + q`.

use std::fmt;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{from_sc, nullspace, real_part, to_sc, Field, FieldError, Matrix, Sc, Scalar};
use crate::instance::{InstanceError, KSatInstance};
use crate::Mat;

#[derive(Debug, Error)]
pub enum ReductionError {
    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid circuit: {0}")]
    Invalid(String),
    #[error("gate {gate} is not unitary")]
    NotUnitary { gate: usize },
    #[error("gate {gate} acts on {arity} qubits, giving a {}-local term; k = {k} allows at most {}-qubit gates", arity + 2, k - 2)]
    Arity { gate: usize, arity: usize, k: usize },
    #[error("{0}")]
    Contract(String),
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    /// Computational qubits; the first is the most significant index of `matrix`.
    pub qubits: Vec<usize>,
    pub matrix: Mat,
}

impl Gate {
    pub fn arity(&self) -> usize {
        self.qubits.len()
    }
}

/// `U = U_L ⋯ U_1`. Qubits `0..n_in` start in `|0⟩`, `n_in..N` hold the witness.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_in: usize,
    n_wit: usize,
    out: Vec<usize>,
    gates: Vec<Gate>,
}

fn is_unitary(m: &Mat) -> bool {
    m.adjoint().mul(m).is_ok_and(|p| p == Matrix::identity(m.rows()))
}

impl Circuit {
    pub fn new(n_in: usize, n_wit: usize, out: Vec<usize>, gates: Vec<Gate>) -> Result<Self, ReductionError> {
        let n = n_in + n_wit;
        if gates.is_empty() {
            return Err(ReductionError::Invalid("a circuit needs at least one gate".into()));
        }
        let mut seen = vec![false; n];
        for &q in &out {
            if q >= n || std::mem::replace(&mut seen[q], true) {
                return Err(ReductionError::Invalid(format!(
                    "output qubit {q} repeated or out of range"
                )));
            }
        }
        for (i, g) in gates.iter().enumerate() {
            let w = g.arity();
            if !(1..=3).contains(&w) {
                return Err(ReductionError::Invalid(format!("gate {i} acts on {w} qubits")));
            }
            let mut used = g.qubits.clone();
            used.sort_unstable();
            used.dedup();
            if used.len() != w || used.iter().any(|&q| q >= n) {
                return Err(ReductionError::Invalid(format!(
                    "gate {i} qubits {:?} repeated or out of range",
                    g.qubits
                )));
            }
            if g.matrix.rows() != 1 << w || g.matrix.cols() != 1 << w {
                return Err(ReductionError::Invalid(format!(
                    "gate {i} matrix is {}x{}, expected {2}x{2}",
                    g.matrix.rows(),
                    g.matrix.cols(),
                    1 << w
                )));
            }
            if !is_unitary(&g.matrix) {
                return Err(ReductionError::NotUnitary { gate: i });
            }
        }
        Ok(Circuit {
            n_in,
            n_wit,
            out,
            gates,
        })
    }

    pub fn n_in(&self) -> usize {
        self.n_in
    }

    pub fn n_wit(&self) -> usize {
        self.n_wit
    }

    /// Computational register size `N`.
    pub fn n(&self) -> usize {
        self.n_in + self.n_wit
    }

    /// Circuit length `L`.
    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn out(&self) -> &[usize] {
        &self.out
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CircuitFile {
    n_in: usize,
    n_wit: usize,
    out: Vec<usize>,
    gates: Vec<GateEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GateEntry {
    qubits: Vec<usize>,
    matrix: Vec<Vec<Sc>>,
}

/// `{"n_in", "n_wit", "out": [...], "gates": [{"qubits": [...], "matrix": [[s, ...], ...]}]}`.
pub fn parse_circuit(text: &str) -> Result<Circuit, ReductionError> {
    let file: CircuitFile = serde_json::from_str(text).map_err(|e| ReductionError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let gates = file
        .gates
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let rows = g.matrix.into_iter().map(from_sc).collect();
            let matrix = Matrix::from_rows(rows).map_err(|e| ReductionError::Invalid(format!("gate {i}: {e}")))?;
            Ok(Gate {
                qubits: g.qubits,
                matrix,
            })
        })
        .collect::<Result<_, ReductionError>>()?;
    Circuit::new(file.n_in, file.n_wit, file.out, gates)
}

pub fn write_circuit(c: &Circuit) -> String {
    let file = CircuitFile {
        n_in: c.n_in,
        n_wit: c.n_wit,
        out: c.out.clone(),
        gates: c
            .gates
            .iter()
            .map(|g| GateEntry {
                qubits: g.qubits.clone(),
                matrix: g.matrix.to_rows().iter().map(|r| to_sc(r)).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("circuit serializes");
    s.push('\n');
    s
}

/// State of one clock particle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Clock {
    Unborn,
    Active1,
    Active2,
    Dead,
}

impl Clock {
    pub const ALL: [Clock; 4] = [Clock::Unborn, Clock::Active1, Clock::Active2, Clock::Dead];

    /// Two-qubit basis index: `u = 0, a1 = 1, a2 = 2, d = 3`.
    pub fn code(self) -> usize {
        match self {
            Clock::Unborn => 0,
            Clock::Active1 => 1,
            Clock::Active2 => 2,
            Clock::Dead => 3,
        }
    }

    pub fn from_code(c: usize) -> Clock {
        Clock::ALL[c]
    }

    pub fn is_active(self) -> bool {
        matches!(self, Clock::Active1 | Clock::Active2)
    }
}

impl fmt::Display for Clock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clock::Unborn => "u",
            Clock::Active1 => "a1",
            Clock::Active2 => "a2",
            Clock::Dead => "d",
        })
    }
}

/// Index of a clock configuration in the `4^L` basis, particle 0 most significant.
pub fn clock_index(state: &[Clock]) -> usize {
    state.iter().fold(0, |acc, c| 4 * acc + c.code())
}

pub fn clock_from_index(mut idx: usize, l: usize) -> Vec<Clock> {
    let mut out = vec![Clock::Unborn; l];
    for j in (0..l).rev() {
        out[j] = Clock::from_code(idx % 4);
        idx /= 4;
    }
    out
}

/// `C_1, C_1', …, C_L, C_L'` where `C_j = d^{j-1} a1 u^{L-j}` and `C_j'` has `a2`.
pub fn legal_clock_states(l: usize) -> Result<Vec<Vec<Clock>>, ReductionError> {
    if l == 0 {
        return Err(ReductionError::Contract("clock needs at least one particle".into()));
    }
    let mut out = Vec::with_capacity(2 * l);
    for j in 0..l {
        for a in [Clock::Active1, Clock::Active2] {
            let mut s = vec![Clock::Dead; j];
            s.push(a);
            s.resize(l, Clock::Unborn);
            out.push(s);
        }
    }
    Ok(out)
}

/// The six clock rules, checked literally on one configuration.
pub fn obeys_clock_rules(s: &[Clock]) -> bool {
    let l = s.len();
    let first_ok = s[0].is_active() || s[0] == Clock::Dead;
    let last_ok = s[l - 1].is_active() || s[l - 1] == Clock::Unborn;
    let one_active = s.iter().filter(|c| c.is_active()).count() <= 1;
    let dead_prefix = (0..l).all(|j| s[j] != Clock::Dead || s[..j].iter().all(|&c| c == Clock::Dead));
    let unborn_suffix = (0..l).all(|j| s[j] != Clock::Unborn || s[j + 1..].iter().all(|&c| c == Clock::Unborn));
    let dead_successor =
        (0..l.saturating_sub(1)).all(|j| s[j] != Clock::Dead || s[j + 1] == Clock::Dead || s[j + 1].is_active());
    first_ok && last_ok && one_active && dead_prefix && unborn_suffix && dead_successor
}

/// Which part of `H` a term belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    /// Clock rule 1 through 6.
    Clock(u8),
    Init,
    Prop,
    PropLink,
    Out,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Emitted {
    pub instance: KSatInstance,
    pub families: Vec<Family>,
    pub labels: Vec<String>,
    pub l: usize,
    pub n: usize,
}

impl Emitted {
    /// The terms whose family passes `keep`, same qubit count and `k`.
    pub fn select(&self, keep: impl Fn(Family) -> bool) -> KSatInstance {
        let mut out = KSatInstance::new(self.instance.n(), self.instance.k());
        for (t, f) in self.instance.terms().iter().zip(&self.families) {
            if keep(*f) {
                out.push_term(t.support.clone(), t.span.clone())
                    .expect("emitted terms are valid");
            }
        }
        out
    }

    pub fn header(&self) -> Value {
        json!({
            "L": self.l,
            "N": self.n,
            "clock_qubits": "particle j (0-based) -> qubits 2j, 2j+1",
            "computational_offset": 2 * self.l,
            "encoding": {"u": "00", "a1": "01", "a2": "10", "d": "11"},
            "terms": self.labels,
        })
    }
}

struct Emitter {
    inst: KSatInstance,
    families: Vec<Family>,
    labels: Vec<String>,
}

impl Emitter {
    fn push(
        &mut self,
        family: Family,
        label: String,
        qubits: &[usize],
        span: Vec<Vec<Scalar>>,
    ) -> Result<(), ReductionError> {
        self.inst.push_term_unsorted(qubits, span)?;
        self.families.push(family);
        self.labels.push(label);
        Ok(())
    }
}

fn unit(dim: usize, i: usize) -> Vec<Scalar> {
    let mut v = vec![Scalar::zero(); dim];
    v[i] = Scalar::one();
    v
}

fn particle(j: usize) -> [usize; 2] {
    [2 * j, 2 * j + 1]
}

/// Kets `|x⟩_j ⊗ |y⟩_k` for every listed `x`, `y`.
fn pair_kets(xs: &[Clock], ys: &[Clock]) -> Vec<Vec<Scalar>> {
    xs.iter()
        .flat_map(|x| ys.iter().map(move |y| unit(16, 4 * x.code() + y.code())))
        .collect()
}

/// Clock-only terms on `2L` qubits, rules 1 to 6 in order.
pub fn emit_clock(l: usize) -> Result<Emitted, ReductionError> {
    let mut e = Emitter {
        inst: KSatInstance::new(2 * l, 4),
        families: Vec::new(),
        labels: Vec::new(),
    };
    clock_terms(&mut e, l)?;
    Ok(Emitted {
        instance: e.inst,
        families: e.families,
        labels: e.labels,
        l,
        n: 0,
    })
}

fn clock_terms(e: &mut Emitter, l: usize) -> Result<(), ReductionError> {
    use Clock::*;
    if l == 0 {
        return Err(ReductionError::Contract("clock needs at least one particle".into()));
    }
    e.push(
        Family::Clock(1),
        "clock1[1]".into(),
        &particle(0),
        vec![unit(4, Unborn.code())],
    )?;
    e.push(
        Family::Clock(2),
        format!("clock2[{l}]"),
        &particle(l - 1),
        vec![unit(4, Dead.code())],
    )?;
    let pairs: Vec<(usize, usize)> = (0..l).flat_map(|j| (j + 1..l).map(move |k| (j, k))).collect();
    let families: [(u8, &[Clock], &[Clock]); 3] = [
        (3, &[Active1, Active2], &[Active1, Active2]),
        (4, &[Active1, Active2, Unborn], &[Dead]),
        (5, &[Unborn], &[Active1, Active2, Dead]),
    ];
    for (rule, xs, ys) in families {
        for &(j, k) in &pairs {
            let q = [particle(j), particle(k)].concat();
            e.push(
                Family::Clock(rule),
                format!("clock{rule}[{},{}]", j + 1, k + 1),
                &q,
                pair_kets(xs, ys),
            )?;
        }
    }
    for j in 0..l.saturating_sub(1) {
        let q = [particle(j), particle(j + 1)].concat();
        e.push(
            Family::Clock(6),
            format!("clock6[{},{}]", j + 1, j + 2),
            &q,
            pair_kets(&[Dead], &[Unborn]),
        )?;
    }
    Ok(())
}

/// `H_init + H_clock + H_prop + H_out` as a `k`-local instance (`k ≥ 4`).
/// Gates on `w` qubits give `(2 + w)`-local propagation terms, so three-qubit
/// gates need `k = 5`.
pub fn emit_hamiltonian(c: &Circuit, k: usize) -> Result<Emitted, ReductionError> {
    use Clock::*;
    if k < 4 {
        return Err(ReductionError::Contract(format!("k = {k}: clock terms need k ≥ 4")));
    }
    for (i, g) in c.gates.iter().enumerate() {
        if g.arity() + 2 > k {
            return Err(ReductionError::Arity {
                gate: i,
                arity: g.arity(),
                k,
            });
        }
    }
    let l = c.len();
    let comp = |q: usize| 2 * l + q;
    let mut e = Emitter {
        inst: KSatInstance::new(2 * l + c.n(), k),
        families: Vec::new(),
        labels: Vec::new(),
    };
    clock_terms(&mut e, l)?;
    for b in 0..c.n_in {
        let q = [particle(0).as_slice(), &[comp(b)]].concat();
        e.push(
            Family::Init,
            format!("init[{b}]"),
            &q,
            vec![unit(8, 2 * Active1.code() + 1)],
        )?;
    }
    for (t, g) in c.gates.iter().enumerate() {
        let w = g.arity();
        let dim = 1 << w;
        let q: Vec<usize> = particle(t)
            .into_iter()
            .chain(g.qubits.iter().map(|&x| comp(x)))
            .collect();
        let span = (0..dim)
            .map(|v| {
                let mut ket = vec![Scalar::zero(); 4 * dim];
                ket[Active1.code() * dim + v] = Scalar::one();
                for r in 0..dim {
                    ket[Active2.code() * dim + r] = -g.matrix.get(r, v).clone();
                }
                ket
            })
            .collect();
        e.push(Family::Prop, format!("prop[{}]", t + 1), &q, span)?;
    }
    for t in 0..l - 1 {
        let q = [particle(t), particle(t + 1)].concat();
        let mut ket = unit(16, 4 * Active2.code() + Unborn.code());
        ket[4 * Dead.code() + Active1.code()] = -Scalar::one();
        e.push(Family::PropLink, format!("prop'[{},{}]", t + 1, t + 2), &q, vec![ket])?;
    }
    for &b in &c.out {
        let q = [particle(l - 1).as_slice(), &[comp(b)]].concat();
        e.push(
            Family::Out,
            format!("out[{b}]"),
            &q,
            vec![unit(8, 2 * Active2.code() + 1)],
        )?;
    }
    Ok(Emitted {
        instance: e.inst,
        families: e.families,
        labels: e.labels,
        l,
        n: c.n(),
    })
}

/// `U` restricted to its qubits, applied to an `N`-qubit vector.
pub fn apply_gate(psi: &[Scalar], n: usize, g: &Gate) -> Vec<Scalar> {
    let w = g.arity();
    let shifts: Vec<usize> = g.qubits.iter().map(|&q| n - 1 - q).collect();
    let mask: usize = shifts.iter().map(|s| 1 << s).sum();
    let mut out = vec![Scalar::zero(); psi.len()];
    for (idx, amp) in psi.iter().enumerate() {
        if amp.is_zero() {
            continue;
        }
        let col = shifts.iter().fold(0, |acc, s| (acc << 1) | (idx >> s & 1));
        let base = idx & !mask;
        for row in 0..1 << w {
            let u = g.matrix.get(row, col);
            if u.is_zero() {
                continue;
            }
            let mut target = base;
            for (i, s) in shifts.iter().enumerate() {
                target |= (row >> (w - 1 - i) & 1) << s;
            }
            out[target].add_mul(u, amp);
        }
    }
    out
}

/// Largest `2L + N` for which dense history states are built.
pub const HISTORY_LIMIT: usize = 20;

fn initial_state(c: &Circuit, psi_wit: &[Scalar]) -> Result<Vec<Scalar>, ReductionError> {
    if psi_wit.len() != 1 << c.n_wit {
        return Err(ReductionError::Contract(format!(
            "witness has {} amplitudes, expected {}",
            psi_wit.len(),
            1 << c.n_wit
        )));
    }
    if psi_wit.iter().all(Zero::is_zero) {
        return Err(ReductionError::Contract("witness state is zero".into()));
    }
    let mut q0 = vec![Scalar::zero(); 1 << c.n()];
    q0[..psi_wit.len()].clone_from_slice(psi_wit);
    Ok(q0)
}

/// `|Q_0⟩, …, |Q_L⟩` with `|Q_0⟩ = |0…0⟩ ⊗ |ψ_wit⟩`.
pub fn trajectory(c: &Circuit, psi_wit: &[Scalar]) -> Result<Vec<Vec<Scalar>>, ReductionError> {
    let mut states = vec![initial_state(c, psi_wit)?];
    for g in &c.gates {
        let next = apply_gate(states.last().expect("nonempty"), c.n(), g);
        states.push(next);
    }
    Ok(states)
}

/// Dense `Σ_t |C_t⟩|Q_{t-1}⟩ + |C_t'⟩|Q_t⟩` on `2L + N` qubits, clock first.
pub fn history_state(c: &Circuit, psi_wit: &[Scalar]) -> Result<Vec<Scalar>, ReductionError> {
    let total = 2 * c.len() + c.n();
    if total > HISTORY_LIMIT {
        return Err(ReductionError::Contract(format!(
            "history state on {total} qubits exceeds the dense limit {HISTORY_LIMIT}"
        )));
    }
    let qs = trajectory(c, psi_wit)?;
    let clocks = legal_clock_states(c.len())?;
    let comp_dim = 1 << c.n();
    let mut omega = vec![Scalar::zero(); 1 << total];
    for (i, clock) in clocks.iter().enumerate() {
        // C_t pairs with Q_{t-1}, C_t' with Q_t
        let q = &qs[i.div_ceil(2)];
        let base = clock_index(clock) * comp_dim;
        for (x, amp) in q.iter().enumerate() {
            omega[base + x] = omega[base + x].add_ref(amp);
        }
    }
    Ok(omega)
}

fn norm_sqr(v: &[Scalar]) -> BigRational {
    v.iter()
        .fold(BigRational::zero(), |acc, z| acc + real_part(&z.abs_sqr()))
}

/// Probability that every output qubit reads 0, as an exact rational.
pub fn acceptance_probability(c: &Circuit, psi_wit: &[Scalar]) -> Result<BigRational, ReductionError> {
    let fin = trajectory(c, psi_wit)?.pop().expect("nonempty");
    let n = c.n();
    let out_mask: usize = c.out.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let accepted: Vec<Scalar> = fin
        .iter()
        .enumerate()
        .filter(|(i, _)| i & out_mask == 0)
        .map(|(_, z)| z.clone())
        .collect();
    Ok(norm_sqr(&accepted) / norm_sqr(psi_wit))
}

/// Basis of the witnesses accepted with probability 1.
pub fn accepting_witnesses(c: &Circuit) -> Result<Vec<Vec<Scalar>>, ReductionError> {
    let n = c.n();
    let out_mask: usize = c.out.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let wdim = 1 << c.n_wit;
    // column i: rejected amplitudes of U|0, e_i⟩
    let mut rows = vec![vec![Scalar::zero(); wdim]; 1 << n];
    for i in 0..wdim {
        let mut e = vec![Scalar::zero(); wdim];
        e[i] = Scalar::one();
        let fin = trajectory(c, &e)?.pop().expect("nonempty");
        for (r, z) in fin.into_iter().enumerate() {
            if r & out_mask != 0 {
                rows[r][i] = z;
            }
        }
    }
    rows.retain(|r| r.iter().any(|z| !z.is_zero()));
    if rows.is_empty() {
        return Ok((0..wdim).map(|i| unit(wdim, i)).collect());
    }
    Ok(nullspace(&Matrix::from_rows(rows)?))
}
