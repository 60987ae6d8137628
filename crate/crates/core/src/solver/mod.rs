//! Polynomial-time quantum 2-SAT.
//!
//! [`solve`] shrinks the instance one step at a time until it is homogeneous:
//! a rank-4 pair is a contradiction, a rank-3 pair fixes two qubits, a rank-2
//! pair fuses two qubits into one, and unit constraints fix single qubits.
//! A homogeneous instance is then closed under `ω = φ ε θ`; either a pair
//! rank grows back to 2 and the loop continues, or the set is complete and a
//! product state satisfies it. The transcript lifts that state back to the
//! original qubits.

mod closure;
mod reduce;
mod state;

use num_traits::Zero;
use serde::Deserialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::field::{from_sc, nullspace, to_sc, FieldError, Matrix, Sc, Scalar};
use crate::instance::{InstanceError, QSatInstance};

pub use closure::{close_homogeneous, combine_constraints, is_complete, product_assignment, Closure, ClosureOutcome};
pub use reduce::{eliminate_rank3, merge_rank2, propagate_units, Reduced};
pub use state::{Factor, FactoredState};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("contract violation: {0}")]
    Contract(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ReductionStep {
    /// `kept` spans the allowed space of the rank-3 pair `(a, b)`.
    Rank3Eliminate {
        a: usize,
        b: usize,
        kept: Vec<Scalar>,
    },
    /// Qubits `a < b` become one logical qubit (label `logical` afterwards)
    /// with basis kets `basis[0]`, `basis[1]` on the pair.
    Rank2Merge {
        a: usize,
        b: usize,
        logical: usize,
        basis: [Vec<Scalar>; 2],
    },
    UnitFix {
        qubit: usize,
        state: Vec<Scalar>,
    },
    /// `map[old]` is the new label, `None` for removed qubits.
    Relabel {
        map: Vec<Option<usize>>,
    },
}

impl ReductionStep {
    pub fn to_json(&self) -> Value {
        match self {
            ReductionStep::Rank3Eliminate { a, b, kept } => {
                json!({"step": "rank3_eliminate", "pair": [a, b], "kept": to_sc(kept)})
            }
            ReductionStep::Rank2Merge { a, b, logical, basis } => json!({
                "step": "rank2_merge",
                "pair": [a, b],
                "logical": logical,
                "basis": [to_sc(&basis[0]), to_sc(&basis[1])],
            }),
            ReductionStep::UnitFix { qubit, state } => {
                json!({"step": "unit_fix", "qubit": qubit, "state": to_sc(state)})
            }
            ReductionStep::Relabel { map } => json!({"step": "relabel", "map": map}),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Transcript {
    pub original_n: usize,
    pub steps: Vec<ReductionStep>,
}

impl Transcript {
    pub fn new(original_n: usize) -> Self {
        Transcript {
            original_n,
            steps: Vec::new(),
        }
    }

    /// Qubit count after replaying every relabelling forward.
    pub fn final_n(&self) -> Result<usize, SolverError> {
        let mut n = self.original_n;
        for s in &self.steps {
            if let ReductionStep::Relabel { map } = s {
                if map.len() != n {
                    return Err(SolverError::Contract(format!(
                        "relabel over {} qubits applied to {n}",
                        map.len()
                    )));
                }
                n = map.iter().flatten().count();
            }
        }
        Ok(n)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "original_n": self.original_n,
            "steps": self.steps.iter().map(ReductionStep::to_json).collect::<Vec<_>>(),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Unsat,
    SatProduct(Vec<Vec<Scalar>>),
    SatState(FactoredState),
}

impl Outcome {
    pub fn is_sat(&self) -> bool {
        !matches!(self, Outcome::Unsat)
    }

    /// The satisfying state as a dense vector, if there is one.
    pub fn dense_state(&self) -> Option<Vec<Scalar>> {
        match self {
            Outcome::Unsat => None,
            Outcome::SatProduct(s) => Some(FactoredState::product(s.clone()).to_dense()),
            Outcome::SatState(f) => Some(f.to_dense()),
        }
    }

    /// Exact check against `inst` that works at any size.
    pub fn annihilates(&self, inst: &QSatInstance) -> bool {
        match self {
            Outcome::Unsat => false,
            Outcome::SatProduct(s) => FactoredState::product(s.clone()).annihilates(inst),
            Outcome::SatState(f) => f.annihilates(inst),
        }
    }

    /// `{"status": "unsat"}`, or `{"status": "sat", "form": "product" | "state", "data": …}`.
    /// Entangled states are written as their factor list.
    pub fn to_json(&self) -> Value {
        match self {
            Outcome::Unsat => json!({"status": "unsat"}),
            Outcome::SatProduct(s) => json!({
                "status": "sat",
                "form": "product",
                "data": s.iter().map(|v| to_sc(v)).collect::<Vec<_>>(),
            }),
            Outcome::SatState(f) => json!({
                "status": "sat",
                "form": "state",
                "data": {
                    "n": f.n(),
                    "factors": f.factors().iter().map(|x| json!({
                        "qubits": x.qubits,
                        "amplitudes": to_sc(&x.amplitudes),
                    })).collect::<Vec<_>>(),
                },
            }),
        }
    }

    /// Inverse of [`Outcome::to_json`].
    pub fn from_json(v: &Value) -> Result<Outcome, SolverError> {
        let bad = |e: serde_json::Error| SolverError::Contract(format!("malformed outcome: {e}"));
        let file: OutcomeFile = serde_json::from_value(v.clone()).map_err(bad)?;
        match (file.status.as_str(), file.form.as_deref(), file.data) {
            ("unsat", None, None) => Ok(Outcome::Unsat),
            ("sat", Some("product"), Some(d)) => {
                let states: Vec<Vec<Sc>> = serde_json::from_value(d).map_err(bad)?;
                if states.iter().any(|s| s.len() != 2 || s.iter().all(|z| z.0.is_zero())) {
                    return Err(SolverError::Contract(
                        "product factors must be nonzero 2-vectors".into(),
                    ));
                }
                Ok(Outcome::SatProduct(states.into_iter().map(from_sc).collect()))
            }
            ("sat", Some("state"), Some(d)) => {
                let st: StateFile = serde_json::from_value(d).map_err(bad)?;
                let factors = st
                    .factors
                    .into_iter()
                    .map(|f| Factor {
                        qubits: f.qubits,
                        amplitudes: from_sc(f.amplitudes),
                    })
                    .collect();
                Ok(Outcome::SatState(FactoredState::from_factors(st.n, factors)?))
            }
            (status, form, _) => Err(SolverError::Contract(format!(
                "unknown outcome status {status:?} with form {form:?}"
            ))),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OutcomeFile {
    status: String,
    #[serde(default)]
    form: Option<String>,
    #[serde(default)]
    data: Option<Value>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StateFile {
    n: usize,
    factors: Vec<FactorEntry>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FactorEntry {
    qubits: Vec<usize>,
    amplitudes: Vec<Sc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveStats {
    /// Steps that removed at least one qubit.
    pub reductions: usize,
    pub closure_rounds: usize,
    pub combine_attempts: u64,
    /// Largest attempt count of a single closure round.
    pub max_round_attempts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub outcome: Outcome,
    pub transcript: Transcript,
    pub stats: SolveStats,
}

/// Lifts a state of the fully reduced instance to the original qubits.
pub fn reconstruct(transcript: &Transcript, reduced: &FactoredState) -> Result<Outcome, SolverError> {
    let final_n = transcript.final_n()?;
    if reduced.n() != final_n {
        return Err(SolverError::Contract(format!(
            "reduced state has {} qubits, transcript ends with {final_n}",
            reduced.n()
        )));
    }
    let mut state = reduced.clone();
    for step in transcript.steps.iter().rev() {
        state.undo(step)?;
    }
    state.check_covers()?;
    Ok(match state.product_states() {
        Some(states) => Outcome::SatProduct(states),
        None => Outcome::SatState(state),
    })
}

/// Direct nullspace for at most two qubits.
fn solve_small(inst: &QSatInstance) -> Option<FactoredState> {
    let n = inst.n();
    if n == 0 {
        return Some(FactoredState::product(Vec::new()));
    }
    let dim = 1 << n;
    let mut rows: Vec<Vec<Scalar>> = inst.pairs().flat_map(|p| p.covectors()).collect();
    for u in inst.units() {
        for v in u.span() {
            for other in 0..dim / 2 {
                let mut r = vec![Scalar::zero(); dim];
                for (s, x) in v.iter().enumerate() {
                    // n == 1: index s; n == 2: qubit 0 is the high bit
                    let idx = match (n, u.qubit()) {
                        (1, _) => s,
                        (_, 0) => 2 * s + other,
                        _ => 2 * other + s,
                    };
                    r[idx] = x.clone();
                }
                rows.push(r);
            }
        }
    }
    let kernel = if rows.is_empty() {
        let mut e0 = vec![Scalar::zero(); dim];
        e0[0] = crate::field::int(1);
        vec![e0]
    } else {
        nullspace(&Matrix::from_rows(rows).expect("rows of equal length"))
    };
    let v = kernel.into_iter().next()?;
    let f = Factor {
        qubits: (0..n).collect(),
        amplitudes: v,
    };
    Some(FactoredState::from_factors(n, f.split()).expect("one factor over all qubits"))
}

fn lowest_pair_with_rank(inst: &QSatInstance, r: usize) -> Option<(usize, usize)> {
    inst.pairs().find(|p| p.rank() == r).map(|p| p.qubits())
}

/// Decides satisfiability of `inst` and returns a satisfying state when one exists.
pub fn solve(inst: &QSatInstance) -> SolveResult {
    let mut cur = inst.clone();
    let mut transcript = Transcript::new(inst.n());
    let mut stats = SolveStats::default();
    let unsat = |transcript, stats| SolveResult {
        outcome: Outcome::Unsat,
        transcript,
        stats,
    };
    let reduced_state = loop {
        if cur.max_rank() == 4 {
            return unsat(transcript, stats);
        }
        if cur.n() <= 2 {
            match solve_small(&cur) {
                Some(s) => break s,
                None => return unsat(transcript, stats),
            }
        }
        let step = if let Some(p) = lowest_pair_with_rank(&cur, 3) {
            Some(eliminate_rank3(&cur, p))
        } else if let Some(p) = lowest_pair_with_rank(&cur, 2) {
            Some(merge_rank2(&cur, p))
        } else if cur.has_units() {
            Some(propagate_units(&cur))
        } else {
            None
        };
        if let Some(step) = step {
            match step.expect("preconditions checked by the dispatcher") {
                Reduced::Unsat => return unsat(transcript, stats),
                Reduced::Instance(next, steps) => {
                    stats.reductions += steps
                        .iter()
                        .filter(|s| matches!(s, ReductionStep::Relabel { .. }))
                        .count();
                    transcript.steps.extend(steps);
                    cur = next;
                }
            }
            continue;
        }
        let round = close_homogeneous(&cur).expect("instance is homogeneous");
        stats.closure_rounds += 1;
        stats.combine_attempts += round.attempts;
        stats.max_round_attempts = stats.max_round_attempts.max(round.attempts);
        match round.closure {
            Closure::RankEscalated(next, _) => cur = next,
            Closure::Complete(done) => break FactoredState::product(closure::assign_complete(&done)),
        }
    };
    let outcome = reconstruct(&transcript, &reduced_state).expect("transcript replays onto the reduced state");
    SolveResult {
        outcome,
        transcript,
        stats,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{epsilon, int};
    use crate::instance::random::{random_instance, RandomSpec};
    use crate::oracle::{brute_satisfiable, satisfying_subspace, verify_state};

    fn e(i: usize) -> crate::Mat {
        let mut m = crate::Mat::zeros(2, 2);
        m.set(i / 2, i % 2, int(1));
        m
    }

    #[test]
    fn full_rank_pair_is_unsat() {
        let mut inst = QSatInstance::new(2);
        for i in 0..4 {
            inst.insert_tensor(0, 1, e(i)).unwrap();
        }
        assert_eq!(solve(&inst).outcome, Outcome::Unsat);
    }

    #[test]
    fn singlet_chain_is_sat() {
        let mut inst = QSatInstance::new(3);
        inst.insert_tensor(0, 1, epsilon()).unwrap();
        inst.insert_tensor(1, 2, epsilon()).unwrap();
        let res = solve(&inst);
        let psi = res.outcome.dense_state().unwrap();
        assert!(verify_state(&inst, &psi).unwrap());
        assert_eq!(satisfying_subspace(&inst).unwrap().len(), 4);
    }

    #[test]
    fn empty_transcript_is_identity() {
        let s = FactoredState::product(vec![vec![int(1), int(2)], vec![int(0), int(1)]]);
        let out = reconstruct(&Transcript::new(2), &s).unwrap();
        assert_eq!(
            out,
            Outcome::SatProduct(vec![vec![int(1), int(2)], vec![int(0), int(1)]])
        );
    }

    #[test]
    fn unit_fix_is_reinserted() {
        let mut t = Transcript::new(3);
        t.steps.push(ReductionStep::UnitFix {
            qubit: 1,
            state: vec![int(0), int(1)],
        });
        t.steps.push(ReductionStep::Relabel {
            map: vec![Some(0), None, Some(1)],
        });
        let s = FactoredState::product(vec![vec![int(1), int(0)], vec![int(1), int(1)]]);
        let out = reconstruct(&t, &s).unwrap();
        assert_eq!(
            out,
            Outcome::SatProduct(vec![vec![int(1), int(0)], vec![int(0), int(1)], vec![int(1), int(1)]])
        );
    }

    #[test]
    fn mismatched_transcript_is_rejected() {
        let mut t = Transcript::new(3);
        t.steps.push(ReductionStep::Relabel {
            map: vec![Some(0), None, Some(1)],
        });
        let s = FactoredState::product(vec![vec![int(1), int(0)]]);
        assert!(matches!(reconstruct(&t, &s), Err(SolverError::Contract(_))));
    }

    #[test]
    fn merged_pair_reconstructs_entangled() {
        // forbid |00>, |11> on (0,1) and push the logical qubit to (1,1) with a
        // unit-free third qubit
        let mut inst = QSatInstance::new(3);
        inst.insert_tensor(0, 1, e(0)).unwrap();
        inst.insert_tensor(0, 1, e(3)).unwrap();
        inst.insert_tensor(1, 2, epsilon()).unwrap();
        let res = solve(&inst);
        assert!(res.outcome.is_sat());
        assert!(verify_state(&inst, &res.outcome.dense_state().unwrap()).unwrap());
        assert!(res.outcome.annihilates(&inst));
    }

    #[test]
    fn decisions_match_brute_force() {
        for seed in 0..400 {
            let n = 2 + (seed as usize % 5);
            let m = seed as usize % (n * (n - 1) / 2 + 1);
            let inst = random_instance(&RandomSpec::new(n, m, seed).with_ranks("uniform".parse().unwrap()));
            let res = solve(&inst);
            assert_eq!(
                res.outcome.is_sat(),
                brute_satisfiable(&inst).unwrap().is_sat(),
                "seed {seed}"
            );
            if let Some(psi) = res.outcome.dense_state() {
                assert!(verify_state(&inst, &psi).unwrap(), "seed {seed}");
                assert!(res.outcome.annihilates(&inst));
            }
        }
    }

    #[test]
    fn json_forms() {
        assert_eq!(Outcome::Unsat.to_json(), serde_json::json!({"status": "unsat"}));
        let p = Outcome::SatProduct(vec![vec![int(1), int(0)]]).to_json();
        assert_eq!(p["form"], "product");
        assert_eq!(p["data"][0][0], serde_json::json!(["1/1", "0/1"]));
        let t = Transcript {
            original_n: 1,
            steps: vec![ReductionStep::Relabel { map: vec![None] }],
        };
        assert_eq!(t.to_json()["steps"][0]["map"], serde_json::json!([null]));
    }

    #[test]
    fn outcome_json_round_trip() {
        let mut inst = QSatInstance::new(3);
        inst.insert_tensor(0, 1, e(0)).unwrap();
        inst.insert_tensor(0, 1, e(3)).unwrap();
        inst.insert_tensor(1, 2, epsilon()).unwrap();
        let single = QSatInstance::new(2);
        for o in [solve(&inst).outcome, solve(&single).outcome, Outcome::Unsat] {
            assert_eq!(Outcome::from_json(&o.to_json()).unwrap(), o);
        }
        let bad = serde_json::json!({"status": "sat", "form": "product", "data": [[["0", "0"], ["0", "0"]]]});
        assert!(Outcome::from_json(&bad).is_err());
    }
}
