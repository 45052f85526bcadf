//! Stochastic mean payoff games attached to Metzler pencils.
//!
//! Min states are the variables `[n]` of a pencil and Max states its rows
//! `[m]`. A Min action `{i, j}` moves the token to Max state `i` or `j` with
//! probability ½ each (a singleton `{i}` moves it to `i` surely); a Max action
//! `{k}` moves it back to Min state `k`. Indices are 0-based in the API.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};

use crate::error::{Error, Result};
use crate::exact;
use crate::pencil::{Pencil, SymMatrix};
use crate::rational::{format_rational, Rational};
use crate::tropical::SignedTrop;

/// A Min action. `i == j` encodes the singleton `{i}`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MinAction {
    pub i: usize,
    pub j: usize,
    pub reward: Rational,
}

impl MinAction {
    pub fn new(i: usize, j: usize, reward: Rational) -> Self {
        Self { i: i.min(j), j: i.max(j), reward }
    }

    pub fn is_singleton(&self) -> bool {
        self.i == self.j
    }

    pub fn targets(&self) -> Vec<usize> {
        if self.is_singleton() {
            vec![self.i]
        } else {
            vec![self.i, self.j]
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MaxAction {
    pub to: usize,
    pub reward: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StochGame {
    min_actions: Vec<Vec<MinAction>>,
    max_actions: Vec<Vec<MaxAction>>,
}

impl StochGame {
    /// Validates and canonicalizes: actions are sorted and exact duplicates
    /// dropped.
    pub fn new(
        mut min_actions: Vec<Vec<MinAction>>,
        mut max_actions: Vec<Vec<MaxAction>>,
    ) -> Result<Self> {
        let n = min_actions.len();
        let m = max_actions.len();
        if n == 0 || m == 0 {
            return Err(Error::validation("a game needs at least one Min and one Max state"));
        }
        for (k, actions) in min_actions.iter_mut().enumerate() {
            if actions.is_empty() {
                return Err(Error::validation(format!("Min state {} has no action", k + 1)));
            }
            for a in actions.iter_mut() {
                if a.j >= m {
                    return Err(Error::validation(format!(
                        "Min state {} targets Max state {} of {m}",
                        k + 1,
                        a.j + 1
                    )));
                }
                *a = MinAction::new(a.i, a.j, a.reward.clone());
            }
            actions.sort();
            actions.dedup();
        }
        for (i, actions) in max_actions.iter_mut().enumerate() {
            if actions.is_empty() {
                return Err(Error::validation(format!("Max state {} has no action", i + 1)));
            }
            if let Some(b) = actions.iter().find(|b| b.to >= n) {
                return Err(Error::validation(format!(
                    "Max state {} targets Min state {} of {n}",
                    i + 1,
                    b.to + 1
                )));
            }
            actions.sort();
            actions.dedup();
        }
        Ok(Self { min_actions, max_actions })
    }

    /// Number of Min states.
    pub fn n(&self) -> usize {
        self.min_actions.len()
    }

    /// Number of Max states.
    pub fn m(&self) -> usize {
        self.max_actions.len()
    }

    pub fn min_actions(&self) -> &[Vec<MinAction>] {
        &self.min_actions
    }

    pub fn max_actions(&self) -> &[Vec<MaxAction>] {
        &self.max_actions
    }

    /// Number of policy pairs, saturating.
    pub fn policy_space_size(&self) -> u128 {
        self.min_actions
            .iter()
            .map(|a| a.len() as u128)
            .chain(self.max_actions.iter().map(|b| b.len() as u128))
            .fold(1u128, |acc, c| acc.saturating_mul(c))
    }

    /// Same transitions, every reward set to zero.
    pub fn zero_rewards(&self) -> Self {
        let min_actions = self
            .min_actions
            .iter()
            .map(|acts| {
                acts.iter().map(|a| MinAction::new(a.i, a.j, Rational::zero())).collect()
            })
            .collect();
        let max_actions = self
            .max_actions
            .iter()
            .map(|acts| {
                acts.iter().map(|b| MaxAction { to: b.to, reward: Rational::zero() }).collect()
            })
            .collect();
        Self::new(min_actions, max_actions).expect("same shape")
    }

    /// Every Min reward decreased by `delta`.
    pub fn shift_min_rewards(&self, delta: &Rational) -> Self {
        let min_actions = self
            .min_actions
            .iter()
            .map(|acts| {
                acts.iter().map(|a| MinAction::new(a.i, a.j, &a.reward - delta)).collect()
            })
            .collect();
        Self::new(min_actions, self.max_actions.clone()).expect("same shape")
    }
}

/// A pair of positional policies, as indices into the action lists.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Policy {
    pub sigma: Vec<usize>,
    pub tau: Vec<usize>,
}

impl Policy {
    pub fn validate(&self, g: &StochGame) -> Result<()> {
        validate_sigma(g, &self.sigma)?;
        validate_tau(g, &self.tau)
    }

    /// Human-readable description, one line per state with a choice.
    pub fn describe(&self, g: &StochGame) -> Vec<String> {
        let mut lines = Vec::new();
        for (k, &a) in self.sigma.iter().enumerate() {
            let act = &g.min_actions()[k][a];
            let targets: Vec<String> =
                act.targets().iter().map(|i| format!("Max {}", i + 1)).collect();
            lines.push(format!(
                "Min {} -> {{{}}} reward {}",
                k + 1,
                targets.join(", "),
                format_rational(&act.reward)
            ));
        }
        for (i, &b) in self.tau.iter().enumerate() {
            let act = &g.max_actions()[i][b];
            lines.push(format!(
                "Max {} -> {{Min {}}} reward {}",
                i + 1,
                act.to + 1,
                format_rational(&act.reward)
            ));
        }
        lines
    }
}

pub(crate) fn validate_sigma(g: &StochGame, sigma: &[usize]) -> Result<()> {
    if sigma.len() != g.n() {
        return Err(Error::InvalidPolicy(format!(
            "Min policy has {} entries for {} states",
            sigma.len(),
            g.n()
        )));
    }
    if let Some(k) = (0..g.n()).find(|&k| sigma[k] >= g.min_actions()[k].len()) {
        return Err(Error::InvalidPolicy(format!("Min state {} has no action {}", k + 1, sigma[k] + 1)));
    }
    Ok(())
}

pub(crate) fn validate_tau(g: &StochGame, tau: &[usize]) -> Result<()> {
    if tau.len() != g.m() {
        return Err(Error::InvalidPolicy(format!(
            "Max policy has {} entries for {} states",
            tau.len(),
            g.m()
        )));
    }
    if let Some(i) = (0..g.m()).find(|&i| tau[i] >= g.max_actions()[i].len()) {
        return Err(Error::InvalidPolicy(format!("Max state {} has no action {}", i + 1, tau[i] + 1)));
    }
    Ok(())
}

/// Builds the game of a Metzler pencil: each tropically negative entry
/// `Q⁽ᵏ⁾_ij` is a Min action `{i, j}` of state `k` with reward `−|Q⁽ᵏ⁾_ij|`,
/// each tropically positive diagonal `Q⁽ᵏ⁾_ii` a Max action `{k}` of state `i`
/// with reward `|Q⁽ᵏ⁾_ii|`.
pub fn game_from_pencil(p: &Pencil) -> Result<StochGame> {
    p.ensure_metzler()?;
    let mut min_actions = vec![Vec::new(); p.n()];
    let mut max_actions = vec![Vec::new(); p.m()];
    for (k, q) in p.matrices().iter().enumerate() {
        for (i, j, v) in q.entries() {
            match v {
                SignedTrop::Neg(a) => min_actions[k].push(MinAction::new(i, j, -a)),
                SignedTrop::Pos(a) if i == j => {
                    max_actions[i].push(MaxAction { to: k, reward: a.clone() })
                }
                _ => {}
            }
        }
    }
    if let Some(k) = min_actions.iter().position(Vec::is_empty) {
        return Err(Error::AssumptionViolated(format!(
            "matrix {} has no tropically negative entry (Min state {} has no action)",
            k + 1,
            k + 1
        )));
    }
    if let Some(i) = max_actions.iter().position(Vec::is_empty) {
        return Err(Error::AssumptionViolated(format!(
            "row {} has no tropically positive diagonal entry (Max state {} has no action)",
            i + 1,
            i + 1
        )));
    }
    StochGame::new(min_actions, max_actions)
}

/// The Metzler pencil of a game. When Min state `k` has the singleton `{i}`
/// and Max state `i` the action `{k}`, the diagonal entry is `⊖(−r^a)` if
/// `−r^a > r^b` and `r^b` otherwise. Several Min actions on the same pair
/// keep the smallest reward.
pub fn pencil_from_game(g: &StochGame) -> Pencil {
    let m = g.m();
    let mut matrices: Vec<SymMatrix> = (0..g.n()).map(|_| SymMatrix::new(m)).collect();
    for (k, actions) in g.min_actions().iter().enumerate() {
        for a in actions {
            let modulus = -&a.reward;
            let keep = match matrices[k].get(a.i, a.j) {
                SignedTrop::Neg(old) => &modulus > old,
                _ => true,
            };
            if keep {
                matrices[k].set(a.i, a.j, SignedTrop::Neg(modulus));
            }
        }
    }
    for (i, actions) in g.max_actions().iter().enumerate() {
        for b in actions {
            let q = &mut matrices[b.to];
            let entry = match q.get(i, i) {
                SignedTrop::Neg(minus) if minus > &b.reward => continue,
                SignedTrop::Pos(old) if old >= &b.reward => continue,
                _ => SignedTrop::Pos(b.reward.clone()),
            };
            q.set(i, i, entry);
        }
    }
    Pencil::new(m, matrices, false).expect("game has at least one state of each kind")
}

fn max_reaches(g: &StochGame, i: usize, d: &[bool]) -> bool {
    g.max_actions()[i].iter().any(|b| d[b.to])
}

fn membership_mask(n: usize, d: &[usize]) -> Result<Vec<bool>> {
    if d.is_empty() {
        return Err(Error::validation("a dominion candidate must be nonempty"));
    }
    let mut mask = vec![false; n];
    for &k in d {
        if k >= n {
            return Err(Error::validation(format!("state {} out of range", k + 1)));
        }
        mask[k] = true;
    }
    Ok(mask)
}

/// `D` is a dominion when Max can keep the play inside `D` whatever Min does:
/// every Max state reachable by an action of `D` has an action back into `D`.
pub fn is_dominion(g: &StochGame, d: &[usize]) -> Result<bool> {
    let mask = membership_mask(g.n(), d)?;
    Ok(dominion_mask(g, &mask))
}

fn dominion_mask(g: &StochGame, mask: &[bool]) -> bool {
    (0..g.n()).filter(|&k| mask[k]).all(|k| {
        g.min_actions()[k].iter().all(|a| max_reaches(g, a.i, mask) && max_reaches(g, a.j, mask))
    })
}

/// A subgame together with the original index of each of its states.
#[derive(Clone, Debug)]
pub struct Subgame {
    pub game: StochGame,
    pub min_states: Vec<usize>,
    pub max_states: Vec<usize>,
}

/// The game played on a dominion `D`: Min states `D`, the Max states their
/// actions reach, and only the Max actions leading back into `D`.
pub fn induced_subgame(g: &StochGame, d: &[usize]) -> Result<Subgame> {
    let mask = membership_mask(g.n(), d)?;
    if !dominion_mask(g, &mask) {
        return Err(Error::NotADominion(d.iter().map(|k| k + 1).collect()));
    }
    let min_states: Vec<usize> = (0..g.n()).filter(|&k| mask[k]).collect();
    let reached: BTreeSet<usize> = min_states
        .iter()
        .flat_map(|&k| g.min_actions()[k].iter().flat_map(|a| [a.i, a.j]))
        .collect();
    let max_states: Vec<usize> = reached.into_iter().collect();
    let min_pos = |k: usize| min_states.binary_search(&k).expect("state of D");
    let max_pos = |i: usize| max_states.binary_search(&i).expect("reached state");
    let min_actions = min_states
        .iter()
        .map(|&k| {
            g.min_actions()[k]
                .iter()
                .map(|a| MinAction::new(max_pos(a.i), max_pos(a.j), a.reward.clone()))
                .collect()
        })
        .collect();
    let max_actions = max_states
        .iter()
        .map(|&i| {
            g.max_actions()[i]
                .iter()
                .filter(|b| mask[b.to])
                .map(|b| MaxAction { to: min_pos(b.to), reward: b.reward.clone() })
                .collect()
        })
        .collect();
    Ok(Subgame { game: StochGame::new(min_actions, max_actions)?, min_states, max_states })
}

pub const DEFAULT_DOMINION_CAP: usize = 16;

fn subsets(n: usize, cap: usize) -> Result<impl Iterator<Item = Vec<usize>>> {
    if n > cap {
        return Err(Error::DominionEnumerationTooLarge { n, cap });
    }
    Ok((1u64..(1u64 << n)).map(move |bits| (0..n).filter(|k| bits >> k & 1 == 1).collect()))
}

/// All dominions, in increasing order of their bit mask.
pub fn dominions(g: &StochGame, cap: usize) -> Result<Vec<Vec<usize>>> {
    Ok(subsets(g.n(), cap)?.filter(|d| is_dominion(g, d).expect("nonempty")).collect())
}

/// For every state `k`, the dominions containing `k` with no proper subset
/// that is also a dominion containing `k`. Sorted by bit mask, without
/// repetition.
pub fn minimal_dominions(g: &StochGame, cap: usize) -> Result<Vec<Vec<usize>>> {
    let all = dominions(g, cap)?;
    let sets: Vec<BTreeSet<usize>> = all.iter().map(|d| d.iter().copied().collect()).collect();
    let minimal_for = |s: &BTreeSet<usize>, k: usize| {
        !sets.iter().any(|t| t.len() < s.len() && t.contains(&k) && t.is_subset(s))
    };
    Ok(all
        .iter()
        .zip(&sets)
        .filter(|(_, s)| s.iter().any(|&k| minimal_for(s, k)))
        .map(|(d, _)| d.clone())
        .collect())
}

/// A dominion all of whose states have nonnegative value in the induced
/// subgame.
pub fn is_winning_dominion(g: &StochGame, d: &[usize]) -> Result<bool> {
    if !is_dominion(g, d)? {
        return Ok(false);
    }
    let sub = induced_subgame(g, d)?;
    let value = exact::game_value_bruteforce(&sub.game, exact::DEFAULT_POLICY_CAP)?;
    Ok(value.chi.iter().all(|c| !c.is_negative()))
}

pub fn winning_dominions(g: &StochGame, cap: usize) -> Result<Vec<Vec<usize>>> {
    let mut out = Vec::new();
    for d in subsets(g.n(), cap)? {
        if is_winning_dominion(g, &d)? {
            out.push(d);
        }
    }
    Ok(out)
}
