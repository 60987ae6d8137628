//! End-to-end acceptance checks, one line of output per criterion.
//!
//! Runs without the libtest harness so the summary lines show up in
//! `cargo test` output; exits nonzero if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qsat_core::classical::{embed_classical, random_cnf, solve_classical};
use qsat_core::field::{epsilon, int, is_in_span, nullspace, rank_of, scalar};
use qsat_core::instance::random::{random_instance, random_tensor, random_vector, RandomSpec};
use qsat_core::instance::{KSatInstance, QSatInstance};
use qsat_core::oracle::{brute_satisfiable, energy, min_eigenvalue_float, satisfying_subspace, verify_state};
use qsat_core::reduction::{
    accepting_witnesses, emit_clock, emit_hamiltonian, history_state, legal_clock_states, Circuit, Clock, Family, Gate,
};
use qsat_core::solver::{
    close_homogeneous, combine_constraints, eliminate_rank3, merge_rank2, product_assignment, propagate_units,
    reconstruct, solve, Closure, Factor, FactoredState, Reduced, ReductionStep, Transcript,
};
use qsat_core::{Mat, Matrix, Scalar};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn nullity<C: qsat_core::oracle::Constraints>(inst: &C) -> usize {
    brute_satisfiable(inst).expect("within oracle limit").nullity()
}

const RANK_MIXES: [&str; 4] = ["uniform", "1:6,2:2,3:1,4:0.25", "1:3,2:3,3:1", "1"];

fn mixed_instance(seed: u64) -> QSatInstance {
    let n = 2 + (seed % 6) as usize;
    let max = n * (n - 1) / 2;
    let pairs = (seed / 6) as usize % (max + 1);
    let spec = RandomSpec::new(n, pairs, seed)
        .with_ranks(RANK_MIXES[(seed / 7) as usize % 4].parse().unwrap())
        .planted(seed % 3 == 0);
    let mut inst = random_instance(&spec);
    if seed % 5 == 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let q = rng.random_range(0..n);
        inst.insert_unit(q, random_vector(&mut rng, 2)).unwrap();
    }
    inst
}

/// Criteria 1 and 2 share one pass over the instances.
fn decisions_and_states() -> (Check, Check) {
    let mut sat = 0;
    let mut verified = 0;
    let mut decision_err = None;
    let mut state_err = None;
    for seed in 0..10_000u64 {
        let inst = mixed_instance(seed);
        let res = solve(&inst);
        let want = brute_satisfiable(&inst).unwrap().is_sat();
        if res.outcome.is_sat() != want && decision_err.is_none() {
            decision_err = Some(format!("seed {seed}: solver {}, oracle {want}", res.outcome.is_sat()));
        }
        if let Some(psi) = res.outcome.dense_state() {
            sat += 1;
            if verify_state(&inst, &psi).unwrap() {
                verified += 1;
            } else if state_err.is_none() {
                state_err = Some(format!("seed {seed}: state not annihilated"));
            }
        }
    }
    let c1 = match decision_err {
        None => Ok(format!(
            "10000/10000 decisions agree ({sat} sat, {} unsat)",
            10_000 - sat
        )),
        Some(e) => Err(e),
    };
    let c2 = match state_err {
        None => Ok(format!("{verified}/{sat} sat outputs annihilated exactly")),
        Some(e) => Err(e),
    };
    (c1, c2)
}

fn singlet_chain() -> Check {
    let mut inst = QSatInstance::new(3);
    inst.insert_tensor(0, 1, epsilon()).unwrap();
    inst.insert_tensor(1, 2, epsilon()).unwrap();
    let out = close_homogeneous(&inst).map_err(|e| e.to_string())?;
    let Closure::Complete(closed) = out.closure else {
        return Err(format!("closure did not complete: {out:?}"));
    };
    let outer = closed.pair(0, 2).ok_or("no constraint generated on (0, 2)")?;
    ensure(outer.rank() == 1, || format!("outer rank {}", outer.rank()))?;
    let singlet = epsilon::<Scalar>().into_vec();
    ensure(is_in_span(outer.span()[0].as_slice(), &[singlet]), || {
        "outer constraint is not the singlet".into()
    })?;
    let k = nullity(&closed);
    ensure(k == 4 && nullity(&inst) == 4, || format!("nullity {k}"))?;
    Ok("outer pair gets the singlet covector, nullity 4".into())
}

fn combination_soundness() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut nonzero = 0;
    for i in 0..1000 {
        let (phi, theta) = (random_tensor(&mut rng), random_tensor(&mut rng));
        let mut joint = QSatInstance::new(3);
        joint.insert_tensor(0, 1, phi.clone()).unwrap();
        joint.insert_tensor(1, 2, theta.clone()).unwrap();
        let omega = combine_constraints(&phi, &theta);
        if omega.is_zero() {
            continue;
        }
        nonzero += 1;
        let mut outer = QSatInstance::new(3);
        outer.insert_tensor(0, 2, omega).unwrap();
        for v in satisfying_subspace(&joint).unwrap() {
            ensure(verify_state(&outer, &v).unwrap(), || {
                format!("pair {i}: ω does not vanish on the joint nullspace")
            })?;
        }
    }
    Ok(format!(
        "1000 pairs, {nonzero} nonzero ω, all vanish on the C^8 nullspace"
    ))
}

fn lowest_pair(inst: &QSatInstance, r: usize) -> Option<(usize, usize)> {
    inst.pairs().find(|p| p.rank() == r).map(|p| p.qubits())
}

/// Lifts a basis of the reduced satisfying space through the step's reconstruction.
fn lift(n: usize, steps: Vec<ReductionStep>, reduced_n: usize, v: Vec<Scalar>) -> Vec<Scalar> {
    let transcript = Transcript { original_n: n, steps };
    let f = Factor {
        qubits: (0..reduced_n).collect(),
        amplitudes: v,
    };
    let state = FactoredState::from_factors(reduced_n, vec![f]).unwrap();
    reconstruct(&transcript, &state).unwrap().dense_state().unwrap()
}

fn step_equivalence() -> Check {
    let mut counts = [0usize; 3];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for seed in 0..1000u64 {
        let n = 3 + (seed % 3) as usize;
        let spec = RandomSpec::new(n, n + (seed % 2) as usize, seed).with_ranks("1:2,2:2,3:2".parse().unwrap());
        let mut inst = random_instance(&spec);
        if seed % 2 == 0 {
            let q = rng.random_range(0..n);
            inst.insert_unit(q, random_vector(&mut rng, 2)).unwrap();
        }
        let want = nullity(&inst);
        let steps = [
            lowest_pair(&inst, 3).map(|p| eliminate_rank3(&inst, p)),
            lowest_pair(&inst, 2).map(|p| merge_rank2(&inst, p)),
            inst.has_units().then(|| propagate_units(&inst)),
        ];
        for (k, step) in steps.into_iter().enumerate() {
            let Some(step) = step else { continue };
            counts[k] += 1;
            match step.map_err(|e| format!("seed {seed}: {e}"))? {
                Reduced::Unsat => ensure(want == 0, || format!("seed {seed} step {k}: unsat but nullity {want}"))?,
                Reduced::Instance(reduced, steps) => {
                    let basis = satisfying_subspace(&reduced).unwrap();
                    ensure(basis.len() == want, || {
                        format!("seed {seed} step {k}: nullity {want} -> {}", basis.len())
                    })?;
                    let lifted: Vec<Vec<Scalar>> = basis
                        .into_iter()
                        .map(|v| lift(n, steps.clone(), reduced.n(), v))
                        .collect();
                    ensure(rank_of(&lifted) == want, || {
                        format!("seed {seed} step {k}: lift loses rank")
                    })?;
                    for v in &lifted {
                        ensure(verify_state(&inst, v).unwrap(), || {
                            format!("seed {seed} step {k}: lift not annihilated")
                        })?;
                    }
                }
            }
        }
    }
    ensure(counts.iter().all(|&c| c >= 100), || format!("too few cases {counts:?}"))?;
    Ok(format!(
        "1000 instances; rank-3 {}, rank-2 {}, unit {} steps keep nullity and lift onto the original",
        counts[0], counts[1], counts[2]
    ))
}

fn complete_sets() -> Check {
    let mut complete = 0;
    for seed in 0..2000u64 {
        let n = 3 + (seed % 5) as usize;
        let pairs = (seed / 5) as usize % (n + 2);
        let spec = RandomSpec::new(n, pairs, seed)
            .with_ranks("1".parse().unwrap())
            .planted(seed % 2 == 0);
        let inst = random_instance(&spec);
        let out = close_homogeneous(&inst).map_err(|e| e.to_string())?;
        let Closure::Complete(closed) = out.closure else {
            continue;
        };
        complete += 1;
        let states = product_assignment(&closed).map_err(|e| format!("seed {seed}: {e}"))?;
        let psi = FactoredState::product(states).to_dense();
        let e = energy(&inst, &psi).unwrap();
        let e2 = energy(&closed, &psi).unwrap();
        ensure(e.is_zero() && e2.is_zero(), || {
            format!("seed {seed}: energy {e}, closed {e2}")
        })?;
    }
    ensure(complete >= 500, || format!("only {complete} complete instances"))?;
    Ok(format!(
        "{complete} complete instances, every product assignment has energy 0"
    ))
}

fn classical() -> Check {
    for seed in 0..1000u64 {
        let n = 2 + (seed % 15) as usize;
        let m = 1 + (seed as usize * 7) % (3 * n);
        let f = random_cnf(n, m, seed);
        let res = solve_classical(&f);
        ensure(res.assignment.is_some() == f.brute_force().is_some(), || {
            format!("seed {seed}: decision differs")
        })?;
        if let Some(x) = &res.assignment {
            ensure(f.satisfied_by(x), || {
                format!("seed {seed}: assignment violates a clause")
            })?;
        }
    }
    let big = random_cnf(100_000, 400_000, 7);
    let t = Instant::now();
    let res = solve_classical(&big);
    let secs = t.elapsed().as_secs_f64();
    ensure(secs < 5.0, || format!("n = 1e5 took {secs:.2} s"))?;
    if let Some(x) = &res.assignment {
        ensure(big.satisfied_by(x), || "large assignment violates a clause".into())?;
    }
    let mut embedded = 0;
    for seed in 0..600u64 {
        let n = 2 + (seed % 5) as usize;
        let f = random_cnf(n, 1 + (seed as usize) % (2 * n + 2), seed + 10_000);
        let classical = solve_classical(&f).assignment.is_some();
        let inst = embed_classical(&f);
        ensure(solve(&inst).outcome.is_sat() == classical, || {
            format!("seed {seed}: embedding differs")
        })?;
        ensure((nullity(&inst) > 0) == classical, || {
            format!("seed {seed}: oracle differs")
        })?;
        embedded += 1;
    }
    Ok(format!(
        "1000 enumerations agree; n=1e5 m=4e5 in {secs:.3} s ({}); {embedded} embeddings agree",
        if res.assignment.is_some() { "sat" } else { "unsat" }
    ))
}

fn clock_soundness() -> Check {
    for l in 1..=6 {
        let clock = emit_clock(l).map_err(|e| e.to_string())?.instance;
        let mut annihilated = Vec::new();
        for s in 0..1usize << (2 * l) {
            let killed = clock.terms().iter().all(|t| {
                let local = t.support.iter().fold(0, |acc, &q| 2 * acc + (s >> (2 * l - 1 - q) & 1));
                t.span.iter().all(|k| k[local].is_zero())
            });
            if killed {
                annihilated.push(s);
            }
        }
        let mut legal: Vec<usize> = legal_clock_states(l)
            .unwrap()
            .iter()
            .map(|c| c.iter().fold(0, |acc, x| 4 * acc + x.code()))
            .collect();
        legal.sort_unstable();
        ensure(annihilated == legal, || {
            format!("L = {l}: {annihilated:?} vs {legal:?}")
        })?;
        if l <= 4 {
            ensure(nullity(&clock) == 2 * l, || format!("L = {l}: oracle nullity differs"))?;
        }
    }
    // the eight L = 4 states written out
    let want: Vec<Vec<Clock>> = [
        "a1 u u u", "a2 u u u", "d a1 u u", "d a2 u u", "d d a1 u", "d d a2 u", "d d d a1", "d d d a2",
    ]
    .iter()
    .map(|s| {
        s.split(' ')
            .map(|x| match x {
                "u" => Clock::Unborn,
                "a1" => Clock::Active1,
                "a2" => Clock::Active2,
                _ => Clock::Dead,
            })
            .collect()
    })
    .collect();
    ensure(legal_clock_states(4).unwrap() == want, || "L = 4 list differs".into())?;
    Ok("annihilated clock basis states equal the legal list for L = 1..6".into())
}

fn g1(q: usize, m: [[i64; 4]; 2]) -> Gate {
    // entries as (re_num, re_den) pairs per row: [[a, b, c, d], ...] means a/b, c/d
    let e = |r: [i64; 4]| [scalar(r[0], r[1], 0, 1), scalar(r[2], r[3], 0, 1)];
    let [r0, r1] = [e(m[0]), e(m[1])];
    Gate {
        qubits: vec![q],
        matrix: Matrix::from_rows(vec![r0.to_vec(), r1.to_vec()]).unwrap(),
    }
}

fn x(q: usize) -> Gate {
    g1(q, [[0, 1, 1, 1], [1, 1, 0, 1]])
}

/// The rotation with cosine 3/5.
fn rot(q: usize) -> Gate {
    g1(q, [[3, 5, -4, 5], [4, 5, 3, 5]])
}

fn phase_s(q: usize) -> Gate {
    let mut m = Mat::identity(2);
    m.set(1, 1, scalar(0, 1, 1, 1));
    Gate {
        qubits: vec![q],
        matrix: m,
    }
}

fn cnot(c: usize, t: usize) -> Gate {
    let mut m = Mat::zeros(4, 4);
    for (r, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
        m.set(r, col, int(1));
    }
    Gate {
        qubits: vec![c, t],
        matrix: m,
    }
}

/// `⟨x|G|y⟩ = U[x_g, y_g] δ(x_rest, y_rest)` over `n` qubits.
fn full_gate(g: &Gate, n: usize) -> Mat {
    let dim = 1 << n;
    let bits = |idx: usize| -> usize { g.qubits.iter().fold(0, |acc, &q| 2 * acc + (idx >> (n - 1 - q) & 1)) };
    let mask: usize = g.qubits.iter().map(|&q| 1 << (n - 1 - q)).sum();
    let mut m = Mat::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & !mask == c & !mask {
                m.set(r, c, g.matrix.get(bits(r), bits(c)).clone());
            }
        }
    }
    m
}

/// `dim{ψ : AP(ψ) = 1}` as the nullity of `I − W† P_0 W`, `W ψ = U |0⟩|ψ⟩`.
fn accepted_dimension(c: &Circuit) -> usize {
    let n = c.n();
    let mut u = Mat::identity(1 << n);
    for g in c.gates() {
        u = full_gate(g, n).mul(&u).unwrap();
    }
    let wdim = 1 << c.n_wit();
    let w = Matrix::from_rows(
        (0..1 << n)
            .map(|r| (0..wdim).map(|i| u.get(r, i).clone()).collect())
            .collect(),
    )
    .unwrap();
    let mut p0 = Mat::zeros(1 << n, 1 << n);
    for r in 0..1 << n {
        if c.out().iter().all(|&q| r >> (n - 1 - q) & 1 == 0) {
            p0.set(r, r, int(1));
        }
    }
    let m = Mat::identity(wdim)
        .sub(&w.adjoint().mul(&p0).unwrap().mul(&w).unwrap())
        .unwrap();
    nullspace(&m).len()
}

fn micro_circuits() -> Vec<(&'static str, Circuit)> {
    vec![
        (
            "rotate then copy",
            Circuit::new(1, 1, vec![0], vec![rot(1), cnot(1, 0)]).unwrap(),
        ),
        (
            "parity of two witnesses",
            Circuit::new(1, 2, vec![0], vec![cnot(1, 0), cnot(2, 0)]).unwrap(),
        ),
        (
            "phase, copy, flip",
            Circuit::new(2, 1, vec![0], vec![phase_s(2), cnot(2, 0), x(1)]).unwrap(),
        ),
        (
            "always rejects",
            Circuit::new(2, 1, vec![0, 1], vec![phase_s(2), cnot(2, 0), x(1)]).unwrap(),
        ),
        (
            "witness only",
            Circuit::new(0, 2, vec![1], vec![rot(0), cnot(0, 1)]).unwrap(),
        ),
    ]
}

fn history_nullity() -> Check {
    let mut lines = Vec::new();
    for (name, c) in micro_circuits() {
        let e = emit_hamiltonian(&c, 4).map_err(|e| e.to_string())?;
        let no_out: KSatInstance = e.select(|f| f != Family::Out);
        let k = nullity(&no_out);
        ensure(k == 1 << c.n_wit(), || {
            format!("{name}: nullity {k} without output terms")
        })?;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let psi = random_vector(&mut rng, 1 << c.n_wit());
        let omega = history_state(&c, &psi).map_err(|e| e.to_string())?;
        ensure(verify_state(&no_out, &omega).unwrap(), || {
            format!("{name}: history state not annihilated")
        })?;
        let with_out = nullity(&e.instance);
        let accepted = accepted_dimension(&c);
        ensure(with_out == accepted, || {
            format!("{name}: nullity {with_out}, accepted dimension {accepted}")
        })?;
        ensure(accepting_witnesses(&c).unwrap().len() == accepted, || {
            format!("{name}: simulators disagree")
        })?;
        lines.push(format!("{name} {k}/{with_out}"));
    }
    Ok(format!("nullity without/with output terms: {}", lines.join(", ")))
}

fn rejecting_gap() -> Check {
    let c = Circuit::new(1, 1, vec![0], vec![x(0), phase_s(1)]).unwrap();
    ensure(accepted_dimension(&c) == 0, || "circuit accepts something".into())?;
    let e = emit_hamiltonian(&c, 4).map_err(|e| e.to_string())?;
    ensure(nullity(&e.instance) == 0, || "exact nullity is not zero".into())?;
    let lam = min_eigenvalue_float(&e.instance).map_err(|e| e.to_string())?;
    ensure(lam > 1e-6, || format!("lambda_min {lam:e}"))?;
    Ok(format!("lambda_min = {lam:.4e} on {} qubits", e.instance.n()))
}

/// Allowed combine attempts per closure round, as a multiple of `n^3`.
const ATTEMPT_CONSTANT: u64 = 1;

fn scaling() -> Check {
    let n = 500u64;
    let mut report = Vec::new();
    let mut worst = 0u64;
    let cases = [
        (250, false, 1),
        (500, false, 2),
        (1000, false, 3),
        (500, true, 4),
        (1500, true, 5),
    ];
    for (pairs, planted, seed) in cases {
        let spec = RandomSpec::new(n as usize, pairs, seed)
            .with_ranks("1".parse().unwrap())
            .planted(planted);
        let inst = random_instance(&spec);
        let t = Instant::now();
        let res = solve(&inst);
        let secs = t.elapsed().as_secs_f64();
        if res.outcome.is_sat() {
            ensure(res.outcome.annihilates(&inst), || {
                format!("m = {pairs}: state not annihilated")
            })?;
        } else {
            ensure(!planted, || format!("m = {pairs}: planted instance reported unsat"))?;
        }
        let s = res.stats;
        ensure(s.max_round_attempts <= ATTEMPT_CONSTANT * n.pow(3), || {
            format!("m = {pairs}: {} attempts in one round", s.max_round_attempts)
        })?;
        worst = worst.max(s.max_round_attempts);
        report.push(format!(
            "m={pairs}{} {} {secs:.2}s",
            if planted { "p" } else { "" },
            if res.outcome.is_sat() { "sat" } else { "unsat" }
        ));
    }
    Ok(format!(
        "{}; max attempts per round {worst} <= {ATTEMPT_CONSTANT}*n^3",
        report.join(", ")
    ))
}

fn run(label: &str, f: impl FnOnce() -> Check) -> bool {
    let t = Instant::now();
    let r = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        Err(format!("panicked: {msg}"))
    });
    report(label, r, t.elapsed().as_secs_f64())
}

fn report(label: &str, r: Check, secs: f64) -> bool {
    match r {
        Ok(detail) => {
            println!("{label}: PASS ({detail}) [{secs:.1}s]");
            true
        }
        Err(detail) => {
            println!("{label}: FAIL ({detail}) [{secs:.1}s]");
            false
        }
    }
}

fn main() -> ExitCode {
    let mut ok = true;
    let t = Instant::now();
    let (c1, c2) = catch_unwind(decisions_and_states).unwrap_or_else(|_| {
        let e = Err("panicked".to_string());
        (e.clone(), e)
    });
    let secs = t.elapsed().as_secs_f64();
    ok &= report("criterion 1 oracle agreement", c1, secs);
    ok &= report("criterion 2 exact assignments", c2, secs);
    ok &= run("criterion 3 singlet chain", singlet_chain);
    ok &= run("criterion 4 combination soundness", combination_soundness);
    ok &= run("criterion 5 step equivalence", step_equivalence);
    ok &= run("criterion 6 complete sets", complete_sets);
    ok &= run("criterion 7 classical 2-SAT", classical);
    ok &= run("criterion 8 clock soundness", clock_soundness);
    ok &= run("criterion 9 history-state nullity", history_nullity);
    ok &= run("criterion 10 rejecting gap", rejecting_gap);
    ok &= run("criterion 11 scaling at n = 500", scaling);
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
