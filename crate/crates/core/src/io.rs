//! JSON encodings of pencils and games. Indices are 1-based in files.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{MaxAction, MinAction, StochGame};
use crate::pencil::{Pencil, SymMatrix};
use crate::rational::{format_rational, parse_rational};
use crate::tropical::{parse_sign, Sign, SignedTrop};

#[derive(Serialize, Deserialize)]
struct PencilFile {
    n: usize,
    m: usize,
    #[serde(default)]
    affine: bool,
    matrices: Vec<MatrixFile>,
}

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    entries: Vec<EntryFile>,
}

#[derive(Serialize, Deserialize)]
struct EntryFile {
    i: usize,
    j: usize,
    sign: String,
    val: String,
}

pub fn parse_pencil(text: &str) -> Result<Pencil> {
    let file: PencilFile = serde_json::from_str(text)?;
    if file.matrices.len() != file.n {
        return Err(Error::validation(format!(
            "n = {} but {} matrices are given",
            file.n,
            file.matrices.len()
        )));
    }
    let mut matrices = Vec::with_capacity(file.n);
    for (k, mf) in file.matrices.iter().enumerate() {
        let mut q = SymMatrix::new(file.m);
        let mut seen = std::collections::BTreeSet::new();
        for e in &mf.entries {
            if e.i == 0 || e.j == 0 || e.i > file.m || e.j > file.m {
                return Err(Error::validation(format!(
                    "matrix {}: entry ({}, {}) outside 1..={}",
                    k + 1,
                    e.i,
                    e.j,
                    file.m
                )));
            }
            let (i, j) = (e.i.min(e.j) - 1, e.i.max(e.j) - 1);
            if !seen.insert((i, j)) {
                return Err(Error::validation(format!(
                    "matrix {}: entry ({}, {}) given twice",
                    k + 1,
                    i + 1,
                    j + 1
                )));
            }
            let sign = parse_sign(&e.sign)?;
            let modulus = parse_rational(&e.val)?;
            let value = match sign {
                Sign::Positive => SignedTrop::Pos(modulus),
                Sign::Negative => SignedTrop::Neg(modulus),
                Sign::Zero => SignedTrop::NegInf,
            };
            q.set(i, j, value);
        }
        matrices.push(q);
    }
    Pencil::new(file.m, matrices, file.affine)
}

pub fn pencil_to_json(p: &Pencil) -> String {
    let matrices = p
        .matrices()
        .iter()
        .map(|q| MatrixFile {
            entries: q
                .entries()
                .map(|(i, j, v)| EntryFile {
                    i: i + 1,
                    j: j + 1,
                    sign: if v.is_positive() { "+" } else { "-" }.to_string(),
                    val: format_rational(v.modulus_ref().expect("stored entries are finite")),
                })
                .collect(),
        })
        .collect();
    let file = PencilFile { n: p.n(), m: p.m(), affine: p.is_affine(), matrices };
    serde_json::to_string_pretty(&file).expect("serializable")
}

#[derive(Serialize, Deserialize)]
struct GameFile {
    n: usize,
    m: usize,
    min_actions: Vec<Vec<MinActionFile>>,
    max_actions: Vec<Vec<MaxActionFile>>,
}

#[derive(Serialize, Deserialize)]
struct MinActionFile {
    to: Vec<usize>,
    reward: String,
}

#[derive(Serialize, Deserialize)]
struct MaxActionFile {
    to: usize,
    reward: String,
}

pub fn parse_game(text: &str) -> Result<StochGame> {
    let file: GameFile = serde_json::from_str(text)?;
    if file.min_actions.len() != file.n || file.max_actions.len() != file.m {
        return Err(Error::validation("action lists do not match n and m"));
    }
    let min_actions = file
        .min_actions
        .iter()
        .enumerate()
        .map(|(k, acts)| {
            acts.iter()
                .map(|a| {
                    let reward = parse_rational(&a.reward)?;
                    let bad = || {
                        Error::validation(format!("Min state {}: bad target set {:?}", k + 1, a.to))
                    };
                    match a.to.as_slice() {
                        [i] if (1..=file.m).contains(i) => Ok(MinAction::new(i - 1, i - 1, reward)),
                        [i, j] if (1..=file.m).contains(i) && (1..=file.m).contains(j) => {
                            Ok(MinAction::new(i - 1, j - 1, reward))
                        }
                        _ => Err(bad()),
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let max_actions = file
        .max_actions
        .iter()
        .enumerate()
        .map(|(i, acts)| {
            acts.iter()
                .map(|b| {
                    if b.to == 0 || b.to > file.n {
                        return Err(Error::validation(format!(
                            "Max state {}: target {} outside 1..={}",
                            i + 1,
                            b.to,
                            file.n
                        )));
                    }
                    Ok(MaxAction { to: b.to - 1, reward: parse_rational(&b.reward)? })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    StochGame::new(min_actions, max_actions)
}

pub fn game_to_json(g: &StochGame) -> String {
    let file = GameFile {
        n: g.n(),
        m: g.m(),
        min_actions: g
            .min_actions()
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|a| MinActionFile {
                        to: a.targets().iter().map(|i| i + 1).collect(),
                        reward: format_rational(&a.reward),
                    })
                    .collect()
            })
            .collect(),
        max_actions: g
            .max_actions()
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|b| MaxActionFile { to: b.to + 1, reward: format_rational(&b.reward) })
                    .collect()
            })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("serializable")
}

/// Human-readable description of every file format.
pub const SCHEMAS: &str = r##"Rationals are strings "p/q" or "p"; inputs also accept decimals ("0.75", "1e-8").
Tropical values are such rationals or "-inf". Indices are 1-based.

pencil:
  {"n": int, "m": int, "affine": bool,
   "matrices": [{"entries": [{"i": int, "j": int, "sign": "+"|"-", "val": rational}, ...]}, ...]}
  one matrix per variable, upper triangle (i <= j), omitted entries are -inf;
  with "affine": true, matrix 1 is the constant term.

game:
  {"n": int, "m": int,
   "min_actions": [[{"to": [i] | [i, j], "reward": rational}, ...], ...],   one list per Min state
   "max_actions": [[{"to": k, "reward": rational}, ...], ...]}               one list per Max state

iteration report:
  {"verdict": "feasible"|"infeasible"|"indeterminate", "iterations": int,
   "witness": [value, ...], "epsilon": rational, "strict": bool,
   "last_iterate": [value, ...], "exact_arithmetic": bool, "elapsed_s": float}

certificate:
  {"kind": "feasibility"|"infeasibility", "vector": [value, ...], "lambda": rational, "strict": bool}

game value:
  {"chi": [rational, ...], "eta": [rational, ...], "max_chi": rational,
   "optimal_pair": {"sigma": [action, ...], "tau": [action, ...], "description": [string, ...]},
   "optimal_min_policies": int, "optimal_max_policies": int,
   "saddle_verified": bool, "pairs_evaluated": string}

phase csv:
  n,m,samples,feasible_ratio,indeterminate,mean_iters,mean_time_s

bench csv (optional leading comment lines starting with "#"):
  n,m,samples,mean_time_s,mean_iters,max_iters,feasible,infeasible,indeterminate
"##;
