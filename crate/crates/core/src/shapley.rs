//! Shapley operators and value iteration.
//!
//! `F(x)_k = min_{a ∈ A(k)} r^a_k + ½(M_i(x) + M_j(x))` with
//! `M_i(x) = max_{b ∈ B(i)} r^b_i + x_b`, one Min turn followed by one Max
//! turn. Evaluation is generic over [`Scalar`] so that value iteration can run
//! on `f64` while certificates are rechecked over [`ExtReal`].

use std::time::Instant;

use num_traits::Zero;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::game::{validate_sigma, validate_tau, StochGame};
use crate::pencil::Pencil;
use crate::rational::Rational;
use crate::scalar::Scalar;
use crate::tropical::ExtReal;

/// An order-preserving, additively homogeneous map `𝕋ⁿ → 𝕋ⁿ`.
pub trait Operator<T: Scalar>: Sync {
    fn dim(&self) -> usize;

    fn apply_into(&self, x: &[T], out: &mut [T]);

    fn apply(&self, x: &[T]) -> Vec<T> {
        let mut out = vec![T::neg_inf(); self.dim()];
        self.apply_into(x, &mut out);
        out
    }
}

/// A game with rewards converted to `T` and flat action tables.
#[derive(Clone, Debug)]
pub struct CompiledGame<T> {
    min: Vec<Vec<(usize, usize, T)>>,
    max: Vec<Vec<(usize, T)>>,
}

/// Above this many actions the Min side is evaluated in parallel.
const PARALLEL_ACTIONS: usize = 1 << 16;

impl<T: Scalar> CompiledGame<T> {
    pub fn new(g: &StochGame) -> Self {
        let min = g
            .min_actions()
            .iter()
            .map(|acts| acts.iter().map(|a| (a.i, a.j, T::from_rational(&a.reward))).collect())
            .collect();
        let max = g
            .max_actions()
            .iter()
            .map(|acts| acts.iter().map(|b| (b.to, T::from_rational(&b.reward))).collect())
            .collect();
        Self { min, max }
    }

    fn max_values(&self, x: &[T]) -> Vec<T> {
        self.max
            .iter()
            .map(|acts| {
                acts.iter().fold(T::neg_inf(), |acc, (l, r)| acc.max_with(r.plus(&x[*l])))
            })
            .collect()
    }

    fn min_value(acts: &[(usize, usize, T)], big_m: &[T]) -> T {
        let mut best: Option<T> = None;
        for (i, j, r) in acts {
            let v = if i == j { r.plus(&big_m[*i]) } else { r.plus(&big_m[*i].plus(&big_m[*j]).half()) };
            best = Some(match best {
                Some(b) => b.min_with(v),
                None => v,
            });
        }
        best.expect("every Min state has an action")
    }
}

impl<T: Scalar> Operator<T> for CompiledGame<T> {
    fn dim(&self) -> usize {
        self.min.len()
    }

    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let big_m = self.max_values(x);
        let total: usize = self.min.iter().map(Vec::len).sum();
        if total >= PARALLEL_ACTIONS {
            out.par_iter_mut()
                .zip(&self.min)
                .for_each(|(o, acts)| *o = Self::min_value(acts, &big_m));
        } else {
            for (o, acts) in out.iter_mut().zip(&self.min) {
                *o = Self::min_value(acts, &big_m);
            }
        }
    }
}

fn max_side(g: &StochGame, tau: Option<&[usize]>, x: &[ExtReal]) -> Vec<ExtReal> {
    g.max_actions()
        .iter()
        .enumerate()
        .map(|(i, acts)| match tau {
            Some(t) => {
                let b = &acts[t[i]];
                x[b.to].shifted(&b.reward)
            }
            None => ExtReal::max_of(&acts.iter().map(|b| x[b.to].shifted(&b.reward)).collect::<Vec<_>>()),
        })
        .collect()
}

fn min_side(g: &StochGame, sigma: Option<&[usize]>, big_m: &[ExtReal]) -> Vec<ExtReal> {
    let value = |a: &crate::game::MinAction| {
        let avg = if a.is_singleton() { big_m[a.i].clone() } else { (&big_m[a.i] + &big_m[a.j]).half() };
        avg.shifted(&a.reward)
    };
    g.min_actions()
        .iter()
        .enumerate()
        .map(|(k, acts)| match sigma {
            Some(s) => value(&acts[s[k]]),
            None => acts.iter().map(value).min().expect("nonempty"),
        })
        .collect()
}

fn check_len(g: &StochGame, x: &[ExtReal]) -> Result<()> {
    if x.len() != g.n() {
        return Err(crate::error::Error::validation(format!(
            "vector has {} entries, game has {} Min states",
            x.len(),
            g.n()
        )));
    }
    Ok(())
}

/// `F(x)` in exact arithmetic.
pub fn apply_f(g: &StochGame, x: &[ExtReal]) -> Result<Vec<ExtReal>> {
    check_len(g, x)?;
    Ok(min_side(g, None, &max_side(g, None, x)))
}

/// `F^σ(x)`: Min plays `σ`, Max optimizes.
pub fn apply_f_sigma(g: &StochGame, sigma: &[usize], x: &[ExtReal]) -> Result<Vec<ExtReal>> {
    check_len(g, x)?;
    validate_sigma(g, sigma)?;
    Ok(min_side(g, Some(sigma), &max_side(g, None, x)))
}

/// `F^τ(x)`: Max plays `τ`, Min optimizes.
pub fn apply_f_tau(g: &StochGame, tau: &[usize], x: &[ExtReal]) -> Result<Vec<ExtReal>> {
    check_len(g, x)?;
    validate_tau(g, tau)?;
    Ok(min_side(g, None, &max_side(g, Some(tau), x)))
}

/// `F^{σ,τ}(x)`, the one-turn expected reward plus continuation.
pub fn apply_f_sigma_tau(
    g: &StochGame,
    sigma: &[usize],
    tau: &[usize],
    x: &[ExtReal],
) -> Result<Vec<ExtReal>> {
    check_len(g, x)?;
    validate_sigma(g, sigma)?;
    validate_tau(g, tau)?;
    Ok(min_side(g, Some(sigma), &max_side(g, Some(tau), x)))
}

/// The recession function `F̂(x) = lim γ⁻¹F(γx)`, i.e. `F` with zero rewards.
pub fn recession(g: &StochGame, x: &[ExtReal]) -> Result<Vec<ExtReal>> {
    apply_f(&g.zero_rewards(), x)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Ergodicity {
    /// Every entry of the pencil is finite, so the game value does not depend
    /// on the initial state.
    Guaranteed,
    Unknown,
}

/// Sufficient condition for a constant game value.
pub fn structural_constant_value_check(p: &Pencil) -> Ergodicity {
    if p.all_entries_finite() {
        Ergodicity::Guaranteed
    } else {
        Ergodicity::Unknown
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Feasible,
    Infeasible,
    Indeterminate,
}

/// Result of the value-iteration loop, in the scalar it ran on.
#[derive(Clone, Debug)]
pub struct RawIteration<T> {
    pub verdict: Verdict,
    pub iterations: u64,
    /// Running maximum of the iterates before the last one.
    pub running_max: Vec<T>,
    /// The last iterate `F^ℓ(0)`.
    pub last: Vec<T>,
    pub elapsed_s: f64,
}

/// `u := 0, v := 0; while max u > −ε and min u < ε { v := max(v, u); u := F(u) }`.
pub fn value_iteration<T: Scalar, O: Operator<T>>(op: &O, eps: &T, max_iters: u64) -> RawIteration<T> {
    let start = Instant::now();
    let n = op.dim();
    let neg_eps = eps.negated();
    let mut u = vec![T::zero(); n];
    let mut v = vec![T::zero(); n];
    let mut next = vec![T::neg_inf(); n];
    let mut iterations = 0u64;
    let verdict = loop {
        let hi = u.iter().cloned().reduce(T::max_with).expect("n ≥ 1");
        let lo = u.iter().cloned().reduce(T::min_with).expect("n ≥ 1");
        if hi <= neg_eps {
            break Verdict::Infeasible;
        }
        if lo >= *eps {
            break Verdict::Feasible;
        }
        if iterations >= max_iters {
            break Verdict::Indeterminate;
        }
        for (vk, uk) in v.iter_mut().zip(&u) {
            if uk > vk {
                *vk = uk.clone();
            }
        }
        op.apply_into(&u, &mut next);
        std::mem::swap(&mut u, &mut next);
        iterations += 1;
    };
    RawIteration { verdict, iterations, running_max: v, last: u, elapsed_s: start.elapsed().as_secs_f64() }
}

pub(crate) fn to_ext<T: Scalar>(x: &T) -> ExtReal {
    x.to_ext()
}

/// Options of [`check_feasibility`].
#[derive(Clone, Debug)]
pub struct FeasibilityOptions {
    pub epsilon: Rational,
    pub max_iters: u64,
    /// Run the loop itself in exact rationals.
    pub exact: bool,
}

impl Default for FeasibilityOptions {
    fn default() -> Self {
        Self {
            epsilon: Rational::new(1.into(), 100_000_000.into()),
            max_iters: 1_000_000,
            exact: false,
        }
    }
}

/// Outcome of value iteration on a game, with exact witnesses.
#[derive(Clone, Debug, Serialize)]
pub struct IterationReport {
    pub verdict: Verdict,
    pub iterations: u64,
    /// The running maximum `v` for a feasible verdict, the last iterate
    /// otherwise.
    pub witness: Vec<ExtReal>,
    #[serde(with = "crate::rational::serde_str")]
    pub epsilon: Rational,
    /// `v < F(v)` in every coordinate (feasible verdicts only).
    pub strict: bool,
    pub last_iterate: Vec<ExtReal>,
    /// Whether the loop ran in exact arithmetic, either by request or after
    /// the float witness failed its exact check.
    pub exact_arithmetic: bool,
    pub elapsed_s: f64,
}

/// Value iteration on a game. Feasible witnesses are rechecked exactly; if a
/// float witness fails the check the loop is rerun over rationals.
///
/// The verdicts are sound for every game. Termination is only guaranteed when
/// the value does not depend on the initial state and is nonzero.
pub fn check_feasibility(g: &StochGame, opts: &FeasibilityOptions) -> Result<IterationReport> {
    if opts.epsilon <= Rational::zero() {
        return Err(crate::error::Error::validation("epsilon must be positive"));
    }
    if !opts.exact {
        let op = CompiledGame::<f64>::new(g);
        let eps = crate::rational::to_f64(&opts.epsilon);
        let raw = value_iteration(&op, &eps, opts.max_iters);
        let report = finish_report(g, raw, opts, false)?;
        if report.verdict != Verdict::Feasible || report_holds(g, &report)? {
            return Ok(report);
        }
    }
    let op = CompiledGame::<ExtReal>::new(g);
    let raw = value_iteration(&op, &ExtReal::Finite(opts.epsilon.clone()), opts.max_iters);
    finish_report(g, raw, opts, true)
}

fn report_holds(g: &StochGame, report: &IterationReport) -> Result<bool> {
    let fv = apply_f(g, &report.witness)?;
    Ok(report.witness.iter().zip(&fv).all(|(v, f)| v <= f))
}

fn finish_report<T: Scalar>(
    g: &StochGame,
    raw: RawIteration<T>,
    opts: &FeasibilityOptions,
    exact: bool,
) -> Result<IterationReport> {
    let last: Vec<ExtReal> = raw.last.iter().map(to_ext).collect();
    let witness = match raw.verdict {
        Verdict::Feasible => raw.running_max.iter().map(to_ext).collect(),
        _ => last.clone(),
    };
    let strict = raw.verdict == Verdict::Feasible && {
        let fv = apply_f(g, &witness)?;
        witness.iter().zip(&fv).all(|(v, f)| v < f)
    };
    Ok(IterationReport {
        verdict: raw.verdict,
        iterations: raw.iterations,
        witness,
        epsilon: opts.epsilon.clone(),
        strict,
        last_iterate: last,
        exact_arithmetic: exact,
        elapsed_s: raw.elapsed_s,
    })
}
