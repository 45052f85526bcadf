//! Markov chains with rewards obtained by fixing both players' policies.
//!
//! States are numbered Min states first (`0..n`) and Max states after them
//! (`n..n+m`), so the transition matrix has the block shape `[[0, U], [V, 0]]`.
//! Everything is computed exactly.

use num_traits::{One, Zero};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::game::{Policy, StochGame};
use crate::linalg;
use crate::rational::{format_rational, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovChain {
    n_min: usize,
    /// Sparse rows: `(target, probability)` with positive probabilities.
    rows: Vec<Vec<(usize, Rational)>>,
    rewards: Vec<Rational>,
}

impl MarkovChain {
    pub fn new(n_min: usize, rows: Vec<Vec<(usize, Rational)>>, rewards: Vec<Rational>) -> Result<Self> {
        let size = rows.len();
        if rewards.len() != size {
            return Err(Error::validation("one reward per state is required"));
        }
        for (u, row) in rows.iter().enumerate() {
            let mut total = Rational::zero();
            for (w, p) in row {
                if *w >= size || *p <= Rational::zero() {
                    return Err(Error::validation(format!("bad transition from state {u}")));
                }
                total += p;
            }
            if !total.is_one() {
                return Err(Error::validation(format!("row {u} sums to {}", format_rational(&total))));
            }
        }
        Ok(Self { n_min, rows, rewards })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn n_min(&self) -> usize {
        self.n_min
    }

    pub fn rewards(&self) -> &[Rational] {
        &self.rewards
    }

    pub fn row(&self, u: usize) -> &[(usize, Rational)] {
        &self.rows[u]
    }

    pub fn probability(&self, u: usize, w: usize) -> Rational {
        self.rows[u].iter().filter(|(t, _)| *t == w).map(|(_, p)| p.clone()).sum()
    }

    /// The Min-to-Max block `U` as a dense `n × m` matrix.
    pub fn u_block(&self) -> Vec<Vec<Rational>> {
        let m = self.len() - self.n_min;
        (0..self.n_min)
            .map(|k| (0..m).map(|i| self.probability(k, self.n_min + i)).collect())
            .collect()
    }

    /// The Max-to-Min block `V` as a dense `m × n` matrix.
    pub fn v_block(&self) -> Vec<Vec<Rational>> {
        (self.n_min..self.len())
            .map(|i| (0..self.n_min).map(|k| self.probability(i, k)).collect())
            .collect()
    }
}

/// The chain followed by the token when Min plays `σ` and Max plays `τ`.
pub fn chain_from_policies(g: &StochGame, policy: &Policy) -> Result<MarkovChain> {
    policy.validate(g)?;
    let n = g.n();
    let half = Rational::new(1.into(), 2.into());
    let mut rows = Vec::with_capacity(n + g.m());
    let mut rewards = Vec::with_capacity(n + g.m());
    for (k, &a) in policy.sigma.iter().enumerate() {
        let act = &g.min_actions()[k][a];
        rows.push(if act.is_singleton() {
            vec![(n + act.i, Rational::one())]
        } else {
            vec![(n + act.i, half.clone()), (n + act.j, half.clone())]
        });
        rewards.push(act.reward.clone());
    }
    for (i, &b) in policy.tau.iter().enumerate() {
        let act = &g.max_actions()[i][b];
        rows.push(vec![(act.to, Rational::one())]);
        rewards.push(act.reward.clone());
    }
    MarkovChain::new(n, rows, rewards)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecurrentClass {
    /// States in increasing order.
    pub states: Vec<usize>,
    /// Stationary distribution on `states`.
    pub stationary: Vec<Rational>,
    pub gain: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChainAnalysis {
    /// Ordered by smallest state.
    pub classes: Vec<RecurrentClass>,
    /// Long-run average reward per step, for every state.
    pub gain: Vec<Rational>,
    /// For each transient state, its absorption probability into each class.
    pub absorption: Vec<(usize, Vec<Rational>)>,
    /// Expected first-return time `θ_u = 1/π_u` on recurrent states.
    pub return_time: Vec<Option<Rational>>,
    /// Expected reward collected before returning, `ξ_u = θ_u g_u`.
    pub pre_return_reward: Vec<Option<Rational>>,
}

impl ChainAnalysis {
    /// The stationary distribution over all states when the chain has a
    /// single recurrent class.
    pub fn stationary_vector(&self, len: usize) -> Option<Vec<Rational>> {
        let [class] = self.classes.as_slice() else {
            return None;
        };
        let mut pi = vec![Rational::zero(); len];
        for (s, p) in class.states.iter().zip(&class.stationary) {
            pi[*s] = p.clone();
        }
        Some(pi)
    }

    pub fn to_json(&self) -> Value {
        let fmt = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
        let opt = |v: &[Option<Rational>]| {
            v.iter().map(|q| q.as_ref().map(format_rational)).collect::<Vec<_>>()
        };
        json!({
            "classes": self.classes.iter().map(|c| json!({
                "states": c.states,
                "stationary": fmt(&c.stationary),
                "gain": format_rational(&c.gain),
            })).collect::<Vec<_>>(),
            "gain": fmt(&self.gain),
            "absorption": self.absorption.iter().map(|(s, psi)| json!({
                "state": s,
                "probabilities": fmt(psi),
            })).collect::<Vec<_>>(),
            "return_time": opt(&self.return_time),
            "pre_return_reward": opt(&self.pre_return_reward),
        })
    }
}

fn recurrent_classes(chain: &MarkovChain) -> Vec<Vec<usize>> {
    let mut graph = DiGraph::<(), ()>::with_capacity(chain.len(), chain.len() * 2);
    let nodes: Vec<_> = (0..chain.len()).map(|_| graph.add_node(())).collect();
    for u in 0..chain.len() {
        for (w, _) in chain.row(u) {
            graph.add_edge(nodes[u], nodes[*w], ());
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut states: Vec<usize> = comp.into_iter().map(|v| v.index()).collect();
            states.sort_unstable();
            states
        })
        .filter(|states| {
            states.iter().all(|&u| chain.row(u).iter().all(|(w, _)| states.binary_search(w).is_ok()))
        })
        .collect();
    classes.sort();
    classes
}

fn stationary(chain: &MarkovChain, states: &[usize]) -> Vec<Rational> {
    let size = states.len();
    let pos = |w: usize| states.binary_search(&w).expect("closed class");
    // Rows of (P_C − I)ᵀ, the last one replaced by the normalization.
    let mut a = vec![vec![Rational::zero(); size]; size];
    for (col, &u) in states.iter().enumerate() {
        a[col][col] -= Rational::one();
        for (w, p) in chain.row(u) {
            a[pos(*w)][col] += p;
        }
    }
    a[size - 1] = vec![Rational::one(); size];
    let mut b = vec![vec![Rational::zero()]; size];
    b[size - 1][0] = Rational::one();
    linalg::solve(a, b)
        .expect("a closed class has a unique stationary distribution")
        .into_iter()
        .map(|mut row| row.swap_remove(0))
        .collect()
}

pub fn analyze(chain: &MarkovChain) -> ChainAnalysis {
    let len = chain.len();
    let class_states = recurrent_classes(chain);
    let mut class_of = vec![None; len];
    for (c, states) in class_states.iter().enumerate() {
        for &s in states {
            class_of[s] = Some(c);
        }
    }
    let classes: Vec<RecurrentClass> = class_states
        .into_iter()
        .map(|states| {
            let pi = stationary(chain, &states);
            let gain = states.iter().zip(&pi).map(|(s, p)| p * &chain.rewards()[*s]).sum();
            RecurrentClass { states, stationary: pi, gain }
        })
        .collect();

    let transient: Vec<usize> = (0..len).filter(|&u| class_of[u].is_none()).collect();
    let mut gain = vec![Rational::zero(); len];
    let mut return_time = vec![None; len];
    let mut pre_return_reward = vec![None; len];
    for class in &classes {
        for (s, p) in class.states.iter().zip(&class.stationary) {
            gain[*s] = class.gain.clone();
            let theta = p.recip();
            pre_return_reward[*s] = Some(&theta * &class.gain);
            return_time[*s] = Some(theta);
        }
    }

    let mut absorption = Vec::with_capacity(transient.len());
    if !transient.is_empty() {
        let t = transient.len();
        let pos = |w: usize| transient.binary_search(&w).ok();
        let mut a = vec![vec![Rational::zero(); t]; t];
        let mut b = vec![vec![Rational::zero(); classes.len()]; t];
        for (r, &u) in transient.iter().enumerate() {
            a[r][r] += Rational::one();
            for (w, p) in chain.row(u) {
                match (pos(*w), class_of[*w]) {
                    (Some(c), _) => a[r][c] -= p,
                    (None, Some(c)) => b[r][c] += p,
                    (None, None) => unreachable!("every state is transient or recurrent"),
                }
            }
        }
        let psi = linalg::solve(a, b).expect("absorption into a closed class is certain");
        for (&u, row) in transient.iter().zip(psi) {
            gain[u] = row.iter().zip(&classes).map(|(q, c)| q * &c.gain).sum();
            absorption.push((u, row));
        }
    }

    ChainAnalysis { classes, gain, absorption, return_time, pre_return_reward }
}
