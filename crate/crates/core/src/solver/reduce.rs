//! Size-reducing steps: rank-3 elimination, rank-2 merging, unit propagation.

use num_traits::Zero;

use super::{ReductionStep, SolverError};
use crate::field::{normalize_projective, nullspace, Field, Matrix, Scalar};
use crate::instance::QSatInstance;
use crate::Mat;

/// Result of one reduction: a smaller instance plus transcript steps, or a
/// proof of unsatisfiability.
#[derive(Debug, Clone, PartialEq)]
pub enum Reduced {
    Instance(QSatInstance, Vec<ReductionStep>),
    Unsat,
}

/// Old label to new label after deleting `removed`; survivors keep their order.
pub(crate) fn relabel_map(n: usize, removed: &[usize]) -> Vec<Option<usize>> {
    let mut next = 0;
    (0..n)
        .map(|q| {
            if removed.contains(&q) {
                None
            } else {
                next += 1;
                Some(next - 1)
            }
        })
        .collect()
}

/// Copies every constraint that avoids `touched` into `out` under `map`.
fn pass_through(inst: &QSatInstance, map: &[Option<usize>], out: &mut QSatInstance, touched: &[usize]) {
    for p in inst.pairs() {
        let (x, y) = p.qubits();
        if touched.contains(&x) || touched.contains(&y) {
            continue;
        }
        out.put_pair(map[x].unwrap(), map[y].unwrap(), p.span().to_vec());
    }
    for u in inst.units() {
        if !touched.contains(&u.qubit()) {
            out.put_unit(map[u.qubit()].unwrap(), u.span().to_vec());
        }
    }
}

/// Index into a pair vector `s` (flattened `2·α_first + α_second`).
fn pair_index(q_first: bool, own: usize, partner: usize) -> usize {
    if q_first {
        2 * own + partner
    } else {
        2 * partner + own
    }
}

/// `v_δ = Σ_s χ_{s,δ} s[(s, fixed)]` with the contracted qubit on axis `q_first ? 0 : 1` of `s`.
fn contract_tensor(chi: &Mat, state: &[Scalar], q_first: bool, fixed: usize) -> Vec<Scalar> {
    (0..2)
        .map(|d| {
            let mut acc = Scalar::zero();
            for s in 0..2 {
                acc.add_mul(chi.get(s, d), &state[pair_index(q_first, s, fixed)]);
            }
            acc
        })
        .collect()
}

fn contract_unit(u: &[Scalar], state: &[Scalar], q_first: bool, fixed: usize) -> Scalar {
    let mut acc = Scalar::zero();
    for s in 0..2 {
        acc.add_mul(&u[s], &state[pair_index(q_first, s, fixed)]);
    }
    acc
}

fn insert_unit(out: &mut QSatInstance, q: usize, mut v: Vec<Scalar>) -> Result<(), SolverError> {
    normalize_projective(&mut v);
    out.insert_unit(q, v)?;
    Ok(())
}

fn insert_tensor(out: &mut QSatInstance, a: usize, b: usize, rows: [Vec<Scalar>; 2]) -> Result<(), SolverError> {
    let mut flat: Vec<Scalar> = rows.into_iter().flatten().collect();
    normalize_projective(&mut flat);
    out.insert_tensor(a, b, Matrix::new(2, 2, flat)?)?;
    Ok(())
}

fn checked_pair(
    inst: &QSatInstance,
    pair: (usize, usize),
    rank: usize,
) -> Result<(usize, usize, Vec<Vec<Scalar>>), SolverError> {
    let (a, b) = (pair.0.min(pair.1), pair.0.max(pair.1));
    match inst.pair(a, b) {
        Some(p) if a != b && p.rank() == rank => Ok((a, b, p.covectors())),
        _ => Err(SolverError::Contract(format!(
            "pair ({a}, {b}) has rank {}, expected {rank}",
            inst.constraint_rank(a, b)
        ))),
    }
}

/// Removes a rank-3 pair: its allowed space is one ket `φ`, so every state
/// factors as `φ_{ab} ⊗ Ψ'` and neighbouring constraints contract into units.
pub fn eliminate_rank3(inst: &QSatInstance, pair: (usize, usize)) -> Result<Reduced, SolverError> {
    let (a, b, rows) = checked_pair(inst, pair, 3)?;
    let mut kept = nullspace(&Matrix::from_rows(rows)?)
        .pop()
        .expect("rank 3 leaves one direction");
    normalize_projective(&mut kept);

    for (q, q_first) in [(a, true), (b, false)] {
        if let Some(u) = inst.unit(q) {
            for v in u.span() {
                if (0..2).any(|fixed| !contract_unit(v, &kept, q_first, fixed).is_zero()) {
                    return Ok(Reduced::Unsat);
                }
            }
        }
    }

    let map = relabel_map(inst.n(), &[a, b]);
    let mut out = QSatInstance::new(inst.n() - 2);
    pass_through(inst, &map, &mut out, &[a, b]);
    for p in inst.pairs() {
        let (x, y) = p.qubits();
        for (q, q_first) in [(a, true), (b, false)] {
            if (x == q) == (y == q) || (x, y) == (a, b) {
                continue;
            }
            let d = if x == q { y } else { x };
            for chi in p.oriented(q) {
                for fixed in 0..2 {
                    insert_unit(&mut out, map[d].unwrap(), contract_tensor(&chi, &kept, q_first, fixed))?;
                }
            }
        }
    }
    let steps = vec![
        ReductionStep::Rank3Eliminate { a, b, kept },
        ReductionStep::Relabel { map },
    ];
    Ok(Reduced::Instance(out, steps))
}

/// Replaces a rank-2 pair by one logical qubit spanned by the two allowed kets.
/// The logical qubit takes the place of `a`; `b` disappears.
pub fn merge_rank2(inst: &QSatInstance, pair: (usize, usize)) -> Result<Reduced, SolverError> {
    let (a, b, rows) = checked_pair(inst, pair, 2)?;
    let mut basis = nullspace(&Matrix::from_rows(rows)?);
    debug_assert_eq!(basis.len(), 2);
    basis.iter_mut().for_each(|v| normalize_projective(v));

    let map = relabel_map(inst.n(), &[b]);
    let c = map[a].unwrap();
    let mut out = QSatInstance::new(inst.n() - 1);
    pass_through(inst, &map, &mut out, &[a, b]);
    for p in inst.pairs() {
        let (x, y) = p.qubits();
        for (q, q_first) in [(a, true), (b, false)] {
            if (x == q) == (y == q) || (x, y) == (a, b) {
                continue;
            }
            let g = if x == q { y } else { x };
            for chi in p.oriented(q) {
                for fixed in 0..2 {
                    let rows = [
                        contract_tensor(&chi, &basis[0], q_first, fixed),
                        contract_tensor(&chi, &basis[1], q_first, fixed),
                    ];
                    insert_tensor(&mut out, c, map[g].unwrap(), rows)?;
                }
            }
        }
    }
    for (q, q_first) in [(a, true), (b, false)] {
        if let Some(u) = inst.unit(q) {
            for v in u.span() {
                for fixed in 0..2 {
                    let w = basis.iter().map(|bv| contract_unit(v, bv, q_first, fixed)).collect();
                    insert_unit(&mut out, c, w)?;
                }
            }
        }
    }
    let steps = vec![
        ReductionStep::Rank2Merge {
            a,
            b,
            logical: c,
            basis: [basis[0].clone(), basis[1].clone()],
        },
        ReductionStep::Relabel { map },
    ];
    Ok(Reduced::Instance(out, steps))
}

/// Fixes qubits carrying unit constraints until none are left.
pub fn propagate_units(inst: &QSatInstance) -> Result<Reduced, SolverError> {
    let mut cur = inst.clone();
    let mut steps = Vec::new();
    loop {
        let Some(u) = cur.units().next().cloned() else { break };
        if u.rank() >= 2 {
            return Ok(Reduced::Unsat);
        }
        let q = u.qubit();
        let cov = &u.span()[0];
        let w = vec![cov[1].clone(), -cov[0].clone()];
        let map = relabel_map(cur.n(), &[q]);
        let mut out = QSatInstance::new(cur.n() - 1);
        pass_through(&cur, &map, &mut out, &[q]);
        for p in cur.pairs() {
            let (x, y) = p.qubits();
            if x != q && y != q {
                continue;
            }
            let d = if x == q { y } else { x };
            for chi in p.oriented(q) {
                let v = (0..2)
                    .map(|col| {
                        let mut acc = Scalar::zero();
                        for s in 0..2 {
                            acc.add_mul(chi.get(s, col), &w[s]);
                        }
                        acc
                    })
                    .collect();
                insert_unit(&mut out, map[d].unwrap(), v)?;
            }
        }
        steps.push(ReductionStep::UnitFix { qubit: q, state: w });
        steps.push(ReductionStep::Relabel { map });
        cur = out;
    }
    Ok(Reduced::Instance(cur, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{epsilon, int};
    use crate::instance::random::{random_instance, random_tensor, RandomSpec};
    use crate::oracle::{brute_satisfiable, satisfying_subspace};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(i: usize) -> Vec<Scalar> {
        let mut v = vec![int(0); 4];
        v[i] = int(1);
        v
    }

    fn tensor(v: Vec<Scalar>) -> Mat {
        Matrix::new(2, 2, v).unwrap()
    }

    fn reduced(r: Reduced) -> (QSatInstance, Vec<ReductionStep>) {
        match r {
            Reduced::Instance(i, s) => (i, s),
            Reduced::Unsat => panic!("unexpected unsat"),
        }
    }

    #[test]
    fn rank3_with_product_kept_state() {
        // forbid everything except |01> on (0, 1); a tensor on (0, 2)
        let mut inst = QSatInstance::new(3);
        for i in [0, 2, 3] {
            inst.insert_tensor(0, 1, tensor(e(i))).unwrap();
        }
        let chi = tensor(vec![int(2), int(3), int(5), int(7)]);
        inst.insert_tensor(0, 2, chi).unwrap();
        let (out, steps) = reduced(eliminate_rank3(&inst, (0, 1)).unwrap());
        assert_eq!(out.n(), 1);
        assert_eq!(out.unit(0).unwrap().span(), &[vec![int(2), int(3)]]);
        assert!(matches!(&steps[0], ReductionStep::Rank3Eliminate { kept, .. } if *kept == e(1)));
    }

    #[test]
    fn rank3_without_neighbours_deletes_the_pair() {
        let mut inst = QSatInstance::new(4);
        for i in [0, 1, 2] {
            inst.insert_tensor(1, 2, tensor(e(i))).unwrap();
        }
        inst.insert_tensor(0, 3, epsilon()).unwrap();
        let (out, _) = reduced(eliminate_rank3(&inst, (2, 1)).unwrap());
        let mut want = QSatInstance::new(2);
        want.insert_tensor(0, 1, epsilon()).unwrap();
        assert_eq!(out, want);
    }

    #[test]
    fn wrong_rank_is_a_contract_error() {
        let mut inst = QSatInstance::new(2);
        inst.insert_tensor(0, 1, epsilon()).unwrap();
        assert!(matches!(eliminate_rank3(&inst, (0, 1)), Err(SolverError::Contract(_))));
        assert!(matches!(merge_rank2(&inst, (0, 1)), Err(SolverError::Contract(_))));
    }

    #[test]
    fn merge_basis_of_00_11_span() {
        let mut inst = QSatInstance::new(3);
        inst.insert_tensor(0, 1, tensor(e(0))).unwrap();
        inst.insert_tensor(0, 1, tensor(e(3))).unwrap();
        inst.insert_tensor(0, 2, tensor(e(0))).unwrap();
        let (out, steps) = reduced(merge_rank2(&inst, (0, 1)).unwrap());
        match &steps[0] {
            ReductionStep::Rank2Merge { basis, logical, .. } => {
                assert_eq!(basis, &[e(1), e(2)]);
                assert_eq!(*logical, 0);
            }
            s => panic!("{s:?}"),
        }
        // allowed states before, pushed through the basis, agree with after
        let before = satisfying_subspace(&inst).unwrap().len();
        let after = satisfying_subspace(&out).unwrap().len();
        assert_eq!(before, after);
    }

    #[test]
    fn merge_without_neighbours_adds_nothing() {
        let mut inst = QSatInstance::new(2);
        inst.insert_tensor(0, 1, tensor(e(0))).unwrap();
        inst.insert_tensor(0, 1, tensor(e(3))).unwrap();
        let (out, _) = reduced(merge_rank2(&inst, (0, 1)).unwrap());
        assert_eq!(out, QSatInstance::new(1));
    }

    #[test]
    fn unit_fixes_orthogonal_state() {
        let mut inst = QSatInstance::new(1);
        inst.insert_unit(0, vec![int(1), int(0)]).unwrap();
        let (out, steps) = reduced(propagate_units(&inst).unwrap());
        assert_eq!(out.n(), 0);
        assert_eq!(
            steps[0],
            ReductionStep::UnitFix {
                qubit: 0,
                state: vec![int(0), int(-1)]
            }
        );
    }

    #[test]
    fn full_unit_span_is_unsat() {
        let mut inst = QSatInstance::new(2);
        inst.insert_unit(1, vec![int(1), int(0)]).unwrap();
        inst.insert_unit(1, vec![int(0), int(1)]).unwrap();
        assert_eq!(propagate_units(&inst).unwrap(), Reduced::Unsat);
    }

    #[test]
    fn unit_chain() {
        // q0 forbidden |0>, so fixed to |1>; |11> forbidden on (0, 1) pushes q1 to |0>
        let mut inst = QSatInstance::new(2);
        inst.insert_unit(0, vec![int(1), int(0)]).unwrap();
        inst.insert_tensor(0, 1, tensor(e(3))).unwrap();
        let (out, steps) = reduced(propagate_units(&inst).unwrap());
        assert_eq!(out.n(), 0);
        assert_eq!(
            steps[2],
            ReductionStep::UnitFix {
                qubit: 0,
                state: vec![int(1), int(0)]
            }
        );
    }

    fn pair_with_rank(inst: &QSatInstance, r: usize) -> Option<(usize, usize)> {
        inst.pairs().find(|p| p.rank() == r).map(|p| p.qubits())
    }

    #[test]
    fn steps_preserve_satisfiability() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut seen = [0; 3];
        for seed in 0..300 {
            let spec = RandomSpec::new(4, 4, seed).with_ranks("1:2,2:2,3:2".parse().unwrap());
            let mut inst = random_instance(&spec);
            if seed % 3 == 0 {
                let q = seed as usize % 4;
                let t = random_tensor(&mut rng);
                inst.insert_unit(q, t.row(0).to_vec()).unwrap();
            }
            let want = brute_satisfiable(&inst).unwrap().is_sat();
            let results = [
                pair_with_rank(&inst, 3).map(|p| eliminate_rank3(&inst, p).unwrap()),
                pair_with_rank(&inst, 2).map(|p| merge_rank2(&inst, p).unwrap()),
                Some(propagate_units(&inst).unwrap()),
            ];
            for (k, r) in results.into_iter().enumerate() {
                let Some(r) = r else { continue };
                seen[k] += 1;
                let got = match r {
                    Reduced::Unsat => false,
                    Reduced::Instance(i, _) => brute_satisfiable(&i).unwrap().is_sat(),
                };
                assert_eq!(got, want, "seed {seed}, step {k}");
            }
        }
        assert!(seen.iter().all(|&s| s > 50), "{seen:?}");
    }
}
