//! JSON instance files.
//!
//! 2-SAT: `{"n", "pairs": [{"qubits": [a, b], "tensors": [[[s, s], [s, s]], …]}], "units": [{"qubit", "vectors"}]}`.
//! A pair may give `"projector"` (a 4×4 matrix) instead of `"tensors"`; its
//! range is converted to conjugated covectors.
//!
//! k-SAT: `{"n", "k", "terms": [{"support": […], "span": [[s, …], …]}], "header": …}`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{InstanceError, KSatInstance, QSatInstance};
use crate::field::{from_sc, to_sc, EchelonBasis, Field, Matrix, Sc};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    n: usize,
    #[serde(default)]
    pairs: Vec<PairEntry>,
    #[serde(default)]
    units: Vec<UnitEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PairEntry {
    qubits: [usize; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tensors: Option<Vec<[[Sc; 2]; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    projector: Option<Vec<Vec<Sc>>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct UnitEntry {
    qubit: usize,
    vectors: Vec<[Sc; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermEntry {
    support: Vec<usize>,
    span: Vec<Vec<Sc>>,
}

/// On-disk k-SAT file. `header` carries free-form metadata (the circuit
/// reducer records its clock encoding and term labels there).
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KSatFile {
    pub n: usize,
    pub k: usize,
    terms: Vec<TermEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub header: Option<serde_json::Value>,
}

fn json_err(e: serde_json::Error) -> InstanceError {
    InstanceError::Json {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

pub fn parse_instance(text: &str) -> Result<QSatInstance, InstanceError> {
    let file: InstanceFile = serde_json::from_str(text).map_err(json_err)?;
    let mut inst = QSatInstance::new(file.n);
    let mut seen = BTreeSet::new();
    for (i, entry) in file.pairs.into_iter().enumerate() {
        let loc = format!("pairs[{i}]");
        let [a, b] = entry.qubits;
        if a == b {
            return Err(InstanceError::invalid(loc, "qubits must differ"));
        }
        if a >= file.n || b >= file.n {
            return Err(InstanceError::invalid(
                loc,
                format!("qubit out of range for n = {}", file.n),
            ));
        }
        if !seen.insert((a.min(b), a.max(b))) {
            return Err(InstanceError::invalid(
                loc,
                format!("pair ({a}, {b}) already listed (possibly in the other order)"),
            ));
        }
        let tensors = match (entry.tensors, entry.projector) {
            (Some(ts), None) => ts
                .into_iter()
                .map(|[[p, q], [r, s]]| Matrix::from_2x2(p.0, q.0, r.0, s.0))
                .collect(),
            (None, Some(p)) => tensors_from_projector(p).map_err(|m| InstanceError::invalid(loc.clone(), m))?,
            _ => {
                return Err(InstanceError::invalid(
                    loc,
                    "give exactly one of \"tensors\" or \"projector\"",
                ));
            }
        };
        for t in tensors {
            inst.insert_tensor(a, b, t)?;
        }
    }
    for (i, entry) in file.units.into_iter().enumerate() {
        if entry.qubit >= file.n {
            return Err(InstanceError::invalid(
                format!("units[{i}]"),
                format!("qubit out of range for n = {}", file.n),
            ));
        }
        for [x, y] in entry.vectors {
            inst.insert_unit(entry.qubit, vec![x.0, y.0])?;
        }
    }
    Ok(inst)
}

/// Range basis of a 4×4 projector, each column conjugated into a covector.
fn tensors_from_projector(p: Vec<Vec<Sc>>) -> Result<Vec<crate::Mat>, String> {
    if p.len() != 4 || p.iter().any(|r| r.len() != 4) {
        return Err("projector must be a 4x4 matrix".into());
    }
    let m = Matrix::from_rows(p.into_iter().map(from_sc).collect()).map_err(|e| e.to_string())?;
    let mut basis = EchelonBasis::new(4);
    let mut out = Vec::new();
    for j in 0..4 {
        let col = m.column(j);
        if basis.insert(col.clone()) {
            let cov: Vec<_> = col.iter().map(Field::conj).collect();
            out.push(Matrix::new(2, 2, cov).expect("four entries"));
        }
    }
    Ok(out)
}

/// Canonical text: pairs sorted with `a < b`, tensors as stored, two-space indent.
pub fn write_instance(inst: &QSatInstance) -> String {
    let file = InstanceFile {
        n: inst.n(),
        pairs: inst
            .pairs()
            .map(|p| {
                let (a, b) = p.qubits();
                PairEntry {
                    qubits: [a, b],
                    tensors: Some(
                        p.span()
                            .iter()
                            .map(|t| {
                                let r = t.to_rows();
                                [
                                    [Sc(r[0][0].clone()), Sc(r[0][1].clone())],
                                    [Sc(r[1][0].clone()), Sc(r[1][1].clone())],
                                ]
                            })
                            .collect(),
                    ),
                    projector: None,
                }
            })
            .collect(),
        units: inst
            .units()
            .map(|u| UnitEntry {
                qubit: u.qubit(),
                vectors: u.span().iter().map(|v| [Sc(v[0].clone()), Sc(v[1].clone())]).collect(),
            })
            .collect(),
    };
    let mut s = serde_json::to_string_pretty(&file).expect("instance serializes");
    s.push('\n');
    s
}

pub fn parse_ksat(text: &str) -> Result<(KSatInstance, Option<serde_json::Value>), InstanceError> {
    let file: KSatFile = serde_json::from_str(text).map_err(json_err)?;
    let mut inst = KSatInstance::new(file.n, file.k);
    for t in file.terms {
        inst.push_term(t.support, t.span.into_iter().map(from_sc).collect())?;
    }
    Ok((inst, file.header))
}

pub fn write_ksat(inst: &KSatInstance, header: Option<serde_json::Value>) -> String {
    let file = KSatFile {
        n: inst.n(),
        k: inst.k(),
        terms: inst
            .terms()
            .iter()
            .map(|t| TermEntry {
                support: t.support.clone(),
                span: t.span.iter().map(|v| to_sc(v)).collect(),
            })
            .collect(),
        header,
    };
    let mut s = serde_json::to_string_pretty(&file).expect("k-SAT instance serializes");
    s.push('\n');
    s
}
