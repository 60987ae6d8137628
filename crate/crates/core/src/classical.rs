//! Classical 2-SAT in linear time through strongly connected components, and
//! the embedding of a 2-CNF as a diagonal quantum 2-SAT instance.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::int;
use crate::instance::QSatInstance;
use crate::Mat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Lit {
    pub var: usize,
    pub negated: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit { var, negated: false }
    }

    pub fn neg(var: usize) -> Self {
        Lit { var, negated: true }
    }

    pub fn not(self) -> Self {
        Lit {
            var: self.var,
            negated: !self.negated,
        }
    }

    /// Vertex of the implication graph: `2·var` for `x`, `2·var + 1` for `¬x`.
    fn index(self) -> usize {
        2 * self.var + self.negated as usize
    }

    pub fn eval(self, x: &[bool]) -> bool {
        x[self.var] != self.negated
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.var as i64 + 1;
        write!(f, "{}", if self.negated { -v } else { v })
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum CnfError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("variable {var} out of range for n = {n}")]
    Range { var: usize, n: usize },
}

/// A 2-CNF formula. Tautologies `l ∨ ¬l` are never stored.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Cnf2 {
    n: usize,
    clauses: Vec<(Lit, Lit)>,
}

impl Cnf2 {
    pub fn new(n: usize) -> Self {
        Cnf2 { n, clauses: Vec::new() }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn clauses(&self) -> &[(Lit, Lit)] {
        &self.clauses
    }

    /// Adds `l ∨ l2`; returns `false` if it was a tautology and got dropped.
    pub fn add_clause(&mut self, l: Lit, l2: Lit) -> Result<bool, CnfError> {
        for v in [l.var, l2.var] {
            if v >= self.n {
                return Err(CnfError::Range { var: v, n: self.n });
            }
        }
        if l2 == l.not() {
            return Ok(false);
        }
        self.clauses.push((l, l2));
        Ok(true)
    }

    pub fn satisfied_by(&self, x: &[bool]) -> bool {
        self.clauses.iter().all(|(a, b)| a.eval(x) || b.eval(x))
    }

    /// Exhaustive search, for testing.
    pub fn brute_force(&self) -> Option<Vec<bool>> {
        assert!(self.n < 32, "enumeration limited to 31 variables");
        (0u64..1 << self.n)
            .map(|bits| (0..self.n).map(|v| bits >> v & 1 == 1).collect::<Vec<_>>())
            .find(|x| self.satisfied_by(x))
    }
}

/// Reads the DIMACS subset: comments `c …`, one `p cnf n m` header, and
/// clause lines of exactly two nonzero literals followed by `0`.
pub fn parse_dimacs(text: &str) -> Result<Cnf2, CnfError> {
    let err = |line: usize, message: String| CnfError::Parse {
        line: line + 1,
        message,
    };
    let mut cnf: Option<Cnf2> = None;
    let mut declared = 0;
    let mut seen = 0;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') || line == "%" {
            continue;
        }
        if let Some(rest) = line.strip_prefix('p') {
            let parts: Vec<&str> = rest.split_whitespace().collect();
            if cnf.is_some() {
                return Err(err(i, "second problem line".into()));
            }
            match parts.as_slice() {
                ["cnf", n, m] => {
                    let n = n.parse().map_err(|_| err(i, format!("bad variable count {n:?}")))?;
                    declared = m.parse().map_err(|_| err(i, format!("bad clause count {m:?}")))?;
                    cnf = Some(Cnf2::new(n));
                }
                _ => return Err(err(i, "expected `p cnf <vars> <clauses>`".into())),
            }
            continue;
        }
        let f = cnf
            .as_mut()
            .ok_or_else(|| err(i, "clause before the problem line".into()))?;
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(i, format!("bad literal {t:?}"))))
            .collect::<Result<_, _>>()?;
        let Some((&0, lits)) = nums.split_last() else {
            return Err(err(i, "clause must end with 0".into()));
        };
        if lits.len() != 2 || lits.contains(&0) {
            return Err(err(i, format!("clause has {} literals, expected 2", lits.len())));
        }
        let lit = |v: i64| -> Result<Lit, CnfError> {
            let var = v.unsigned_abs() as usize - 1;
            if var >= f.n {
                return Err(err(i, format!("variable {} exceeds {}", v.abs(), f.n)));
            }
            Ok(Lit { var, negated: v < 0 })
        };
        let (a, b) = (lit(lits[0])?, lit(lits[1])?);
        f.add_clause(a, b)?;
        seen += 1;
    }
    let f = cnf.ok_or_else(|| err(0, "missing problem line".into()))?;
    if seen != declared {
        return Err(CnfError::Parse {
            line: text.lines().count(),
            message: format!("header declares {declared} clauses, found {seen}"),
        });
    }
    Ok(f)
}

pub fn write_dimacs(f: &Cnf2) -> String {
    let mut s = format!("p cnf {} {}\n", f.n, f.clauses.len());
    for (a, b) in &f.clauses {
        s.push_str(&format!("{a} {b} 0\n"));
    }
    s
}

/// Uniform random clauses over distinct variables, seeded.
pub fn random_cnf(n: usize, m: usize, seed: u64) -> Cnf2 {
    assert!(n >= 2, "need two variables per clause");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = Cnf2::new(n);
    while f.clauses.len() < m {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a == b {
            continue;
        }
        let la = Lit {
            var: a,
            negated: rng.random_bool(0.5),
        };
        let lb = Lit {
            var: b,
            negated: rng.random_bool(0.5),
        };
        f.add_clause(la, lb).expect("variables in range");
    }
    f
}

/// Directed graph on the `2n` literals; `l → l'` whenever a clause reads
/// `l ∨ ¬l'`, so a path `l ⇝ l'` means `l = 0` forces `l' = 0`.
#[derive(Debug, Clone)]
pub struct ImplicationGraph {
    /// CSR layout.
    start: Vec<usize>,
    targets: Vec<usize>,
}

impl ImplicationGraph {
    pub fn new(f: &Cnf2) -> Self {
        let v = 2 * f.n;
        let edges = || {
            f.clauses
                .iter()
                .flat_map(|&(a, b)| [(a.index(), b.not().index()), (b.index(), a.not().index())])
        };
        let mut start = vec![0; v + 1];
        for (s, _) in edges() {
            start[s + 1] += 1;
        }
        for i in 0..v {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut targets = vec![0; start[v]];
        for (s, t) in edges() {
            targets[fill[s]] = t;
            fill[s] += 1;
        }
        ImplicationGraph { start, targets }
    }

    pub fn vertex_count(&self) -> usize {
        self.start.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn successors(&self, v: usize) -> &[usize] {
        &self.targets[self.start[v]..self.start[v + 1]]
    }

    pub fn has_edge(&self, l: Lit, l2: Lit) -> bool {
        self.successors(l.index()).contains(&l2.index())
    }
}

/// Work done by the SCC pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counters {
    pub vertices: usize,
    pub edges: usize,
}

/// SCC id per vertex, numbered in Tarjan completion order (sinks first).
pub fn tarjan_scc(g: &ImplicationGraph) -> (Vec<usize>, usize, Counters) {
    const NONE: usize = usize::MAX;
    let v = g.vertex_count();
    let mut index = vec![NONE; v];
    let mut low = vec![0; v];
    let mut on_stack = vec![false; v];
    let mut comp = vec![NONE; v];
    let mut stack = Vec::new();
    let mut call: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    let mut n_comp = 0;
    let mut counters = Counters::default();
    for root in 0..v {
        if index[root] != NONE {
            continue;
        }
        call.push((root, 0));
        while let Some(&mut (u, ref mut pos)) = call.last_mut() {
            if *pos == 0 {
                index[u] = next;
                low[u] = next;
                next += 1;
                stack.push(u);
                on_stack[u] = true;
                counters.vertices += 1;
            }
            let succ = g.successors(u);
            if let Some(&w) = succ.get(*pos) {
                *pos += 1;
                counters.edges += 1;
                if index[w] == NONE {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[u] = low[u].min(index[w]);
                }
                continue;
            }
            call.pop();
            if let Some(&(parent, _)) = call.last() {
                low[parent] = low[parent].min(low[u]);
            }
            if low[u] == index[u] {
                loop {
                    let w = stack.pop().expect("component root on stack");
                    on_stack[w] = false;
                    comp[w] = n_comp;
                    if w == u {
                        break;
                    }
                }
                n_comp += 1;
            }
        }
    }
    (comp, n_comp, counters)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalResult {
    pub assignment: Option<Vec<bool>>,
    pub counters: Counters,
}

/// Unsat iff some `x` shares a component with `¬x`. Otherwise a literal is
/// true when its component comes before its negation's in topological order.
pub fn solve_classical(f: &Cnf2) -> ClassicalResult {
    let g = ImplicationGraph::new(f);
    let (comp, n_comp, counters) = tarjan_scc(&g);
    let topo = |v: usize| n_comp - 1 - comp[v];
    let mut x = Vec::with_capacity(f.n);
    for var in 0..f.n {
        let (p, q) = (Lit::pos(var).index(), Lit::neg(var).index());
        if comp[p] == comp[q] {
            return ClassicalResult {
                assignment: None,
                counters,
            };
        }
        x.push(topo(p) < topo(q));
    }
    ClassicalResult {
        assignment: Some(x),
        counters,
    }
}

/// Each clause forbids its single falsifying configuration, as a basis
/// covector on the two qubits (a unit covector for `l ∨ l`).
pub fn embed_classical(f: &Cnf2) -> QSatInstance {
    let mut inst = QSatInstance::new(f.n);
    for &(a, b) in &f.clauses {
        let (fa, fb) = (a.negated as usize, b.negated as usize);
        if a.var == b.var {
            let mut v = vec![int(0), int(0)];
            v[fa] = int(1);
            inst.insert_unit(a.var, v).expect("variable in range");
        } else {
            let mut t = Mat::zeros(2, 2);
            t.set(fa, fb, int(1));
            inst.insert_tensor(a.var, b.var, t).expect("variables in range");
        }
    }
    inst
}
