//! Independent oracles and instance generators shared by the integration
//! tests. Nothing here calls into the solver beyond building its inputs.

#![allow(dead_code)]

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tropsdp_core::rational::{int, ratio};
use tropsdp_core::{ExtReal, MaxAction, MinAction, Pencil, Rational, SignedTrop, StochGame, SymMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Game of the running example typed in by hand, 0-based.
pub fn running_game() -> StochGame {
    let min_actions = vec![
        vec![MinAction::new(0, 1, int(0))],
        vec![MinAction::new(1, 1, int(0))],
        vec![MinAction::new(0, 2, ratio(-3, 4)), MinAction::new(1, 2, int(0))],
    ];
    let max_actions = vec![
        vec![MaxAction { to: 2, reward: int(1) }],
        vec![MaxAction { to: 0, reward: int(-1) }, MaxAction { to: 2, reward: ratio(-5, 4) }],
        vec![MaxAction { to: 1, reward: ratio(9, 4) }],
    ];
    StochGame::new(min_actions, max_actions).unwrap()
}

fn half_grid(rng: &mut ChaCha8Rng, lo: i64, hi: i64) -> Rational {
    ratio(rng.random_range(lo..=hi), 2)
}

/// Metzler pencil with moduli in `{−2, −3/2, …, 2}`. Each diagonal entry is
/// present with probability `density` and has a random sign; off-diagonal
/// entries are negative.
pub fn random_metzler(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Pencil {
    let matrices = (0..n)
        .map(|_| {
            let mut q = SymMatrix::new(m);
            for i in 0..m {
                for j in i..m {
                    if !rng.random_bool(density) {
                        continue;
                    }
                    let v = half_grid(rng, -4, 4);
                    let entry = if i == j && rng.random_bool(0.5) {
                        SignedTrop::Pos(v)
                    } else {
                        SignedTrop::Neg(v)
                    };
                    q.set(i, j, entry);
                }
            }
            q
        })
        .collect();
    Pencil::new(m, matrices, false).unwrap()
}

/// Pencil with arbitrary signs, moduli on the same half-integer grid.
pub fn random_general(rng: &mut ChaCha8Rng, n: usize, m: usize, density: f64) -> Pencil {
    let matrices = (0..n)
        .map(|_| {
            let mut q = SymMatrix::new(m);
            for i in 0..m {
                for j in i..m {
                    if rng.random_bool(density) {
                        let v = half_grid(rng, -4, 4);
                        q.set(i, j, if rng.random_bool(0.5) { SignedTrop::Pos(v) } else { SignedTrop::Neg(v) });
                    }
                }
            }
            q
        })
        .collect();
    Pencil::new(m, matrices, false).unwrap()
}

/// Game with 1 or 2 actions per state and integer rewards from `rewards`.
pub fn random_game(rng: &mut ChaCha8Rng, n: usize, m: usize, rewards: &[i64]) -> StochGame {
    let pick = |rng: &mut ChaCha8Rng| int(rewards[rng.random_range(0..rewards.len())]);
    let min_actions = (0..n)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|_| {
                    let i = rng.random_range(0..m);
                    let j = rng.random_range(0..m);
                    MinAction::new(i, j, pick(rng))
                })
                .collect()
        })
        .collect();
    let max_actions = (0..m)
        .map(|_| {
            (0..rng.random_range(1..=2))
                .map(|_| MaxAction { to: rng.random_range(0..n), reward: pick(rng) })
                .collect()
        })
        .collect();
    StochGame::new(min_actions, max_actions).unwrap()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, p_inf: f64) -> Vec<ExtReal> {
    (0..n)
        .map(|_| {
            if rng.random_bool(p_inf) {
                ExtReal::NegInf
            } else {
                ExtReal::Finite(ratio(rng.random_range(-48..=48), 8))
            }
        })
        .collect()
}

pub fn fin(q: Rational) -> ExtReal {
    ExtReal::Finite(q)
}

pub fn zeros(n: usize) -> Vec<ExtReal> {
    vec![ExtReal::zero(); n]
}

/// Multiplies by `scale` and asserts the result is an integer.
pub fn scaled(q: &Rational, scale: i64) -> i64 {
    let s = q * Rational::from_integer(scale.into());
    assert!(s.is_integer(), "{q} is not on the 1/{scale} grid");
    s.to_integer().to_i64().unwrap()
}

pub fn to_ext(x: &[Option<i64>], scale: i64) -> Vec<ExtReal> {
    x.iter().map(|v| v.map_or(ExtReal::NegInf, |v| fin(ratio(v, scale)))).collect()
}

fn omax(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.max(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

fn oadd(a: Option<i64>, b: Option<i64>) -> Option<i64> {
    Some(a? + b?)
}

fn ge(a: Option<i64>, b: Option<i64>) -> bool {
    match (a, b) {
        (_, None) => true,
        (None, Some(_)) => false,
        (Some(a), Some(b)) => a >= b,
    }
}

/// A pencil with every modulus multiplied by a common scale.
pub struct IntPencil {
    pub m: usize,
    /// `entries[k]` lists `(i, j, positive, modulus)` with `i ≤ j`.
    pub entries: Vec<Vec<(usize, usize, bool, i64)>>,
}

impl IntPencil {
    pub fn new(p: &Pencil, scale: i64) -> Self {
        let entries = p
            .matrices()
            .iter()
            .map(|q| {
                let mut out = Vec::new();
                for i in 0..p.m() {
                    for j in i..p.m() {
                        match q.get(i, j) {
                            SignedTrop::Pos(v) => out.push((i, j, true, scaled(v, scale))),
                            SignedTrop::Neg(v) => out.push((i, j, false, scaled(v, scale))),
                            SignedTrop::NegInf => {}
                        }
                    }
                }
                out
            })
            .collect();
        Self { m: p.m(), entries }
    }

    fn part(&self, i: usize, j: usize, positive: bool, x: &[Option<i64>]) -> Option<i64> {
        let mut best = None;
        for (k, list) in self.entries.iter().enumerate() {
            for &(a, b, pos, v) in list {
                if a == i && b == j && pos == positive {
                    best = omax(best, x[k].map(|xk| xk + v));
                }
            }
        }
        best
    }

    /// The inequalities of the reinforced Metzler spectrahedron, read off
    /// entry by entry; off-diagonal signs are ignored (treated as negative).
    pub fn member_metzler(&self, x: &[Option<i64>], lambda: i64) -> bool {
        let pos: Vec<Option<i64>> = (0..self.m).map(|i| self.part(i, i, true, x)).collect();
        for i in 0..self.m {
            let neg = self.part(i, i, false, x).map(|v| v + lambda);
            if !ge(pos[i], neg) {
                return false;
            }
        }
        for i in 0..self.m {
            for j in i + 1..self.m {
                let off = omax(self.part(i, j, false, x), self.part(i, j, true, x));
                if !ge(oadd(pos[i], pos[j]), off.map(|v| 2 * (v + lambda))) {
                    return false;
                }
            }
        }
        true
    }

    /// Order-1 and order-2 conditions for arbitrary signs, with the
    /// vanishing disjunct on off-diagonal entries.
    pub fn member_general(&self, x: &[Option<i64>]) -> bool {
        let pos: Vec<Option<i64>> = (0..self.m).map(|i| self.part(i, i, true, x)).collect();
        for i in 0..self.m {
            if !ge(pos[i], self.part(i, i, false, x)) {
                return false;
            }
        }
        for i in 0..self.m {
            for j in i + 1..self.m {
                let plus = self.part(i, j, true, x);
                let minus = self.part(i, j, false, x);
                if plus == minus {
                    continue;
                }
                if !ge(oadd(pos[i], pos[j]), omax(plus, minus).map(|v| 2 * v)) {
                    return false;
                }
            }
        }
        true
    }
}

/// A game with every reward multiplied by a common even scale, so that
/// halving sums of even-valued points stays exact.
pub struct IntGame {
    pub min: Vec<Vec<(usize, usize, i64)>>,
    pub max: Vec<Vec<(usize, i64)>>,
}

impl IntGame {
    pub fn new(g: &StochGame, scale: i64) -> Self {
        let min = g
            .min_actions()
            .iter()
            .map(|acts| acts.iter().map(|a| (a.i, a.j, scaled(&a.reward, scale))).collect())
            .collect();
        let max = g
            .max_actions()
            .iter()
            .map(|acts| acts.iter().map(|b| (b.to, scaled(&b.reward, scale))).collect())
            .collect();
        Self { min, max }
    }

    /// `F(x)` by the defining formula. Returns `None` for `−∞`; panics if a
    /// halving is inexact.
    pub fn shapley(&self, x: &[Option<i64>]) -> Vec<Option<i64>> {
        let max_val: Vec<Option<i64>> = self
            .max
            .iter()
            .map(|acts| acts.iter().fold(None, |acc, &(l, r)| omax(acc, x[l].map(|v| v + r))))
            .collect();
        self.min
            .iter()
            .map(|acts| {
                let mut best: Option<i64> = None;
                let mut seen_inf = false;
                for &(i, j, r) in acts {
                    match oadd(max_val[i], max_val[j]) {
                        Some(s) => {
                            assert_eq!(s % 2, 0, "inexact halving");
                            let v = r + s / 2;
                            best = Some(best.map_or(v, |b| b.min(v)));
                        }
                        None => seen_inf = true,
                    }
                }
                if seen_inf {
                    None
                } else {
                    best
                }
            })
            .collect()
    }

    pub fn subharmonic(&self, x: &[Option<i64>]) -> bool {
        x.iter().zip(self.shapley(x)).all(|(a, b)| ge(b, *a))
    }
}

/// Searches points with every nonempty support: the first support
/// coordinate is pinned to 0 and the others range over `values`.
pub fn grid_search(n: usize, values: &[i64], mut pred: impl FnMut(&[Option<i64>]) -> bool) -> Vec<Vec<usize>> {
    let mut found = Vec::new();
    for mask in 1u32..(1 << n) {
        let support: Vec<usize> = (0..n).filter(|k| mask >> k & 1 == 1).collect();
        let free = support.len() - 1;
        let mut idx = vec![0usize; free];
        'points: loop {
            let mut x = vec![None; n];
            x[support[0]] = Some(0);
            for (t, &k) in support[1..].iter().enumerate() {
                x[k] = Some(values[idx[t]]);
            }
            if pred(&x) {
                found.push(support.clone());
                break;
            }
            let mut t = 0;
            loop {
                if t == free {
                    break 'points;
                }
                idx[t] += 1;
                if idx[t] < values.len() {
                    break;
                }
                idx[t] = 0;
                t += 1;
            }
        }
    }
    found
}

pub fn sign_of(q: &Rational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_zero() {
        0
    } else {
        -1
    }
}
