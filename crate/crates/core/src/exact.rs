//! Exact game values by exhaustive policy enumeration, and the feasibility
//! questions they decide.

use std::collections::BTreeSet;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::game::{self, MaxAction, MinAction, Policy, StochGame};
use crate::markov::{analyze, chain_from_policies};
use crate::pencil::{homogenize, metzlerize, reduce_preserving_supports, Pencil, Reduction, SupportReduction};
use crate::pipeline::{prepare, Prepared};
use crate::rational::{format_rational, Rational};

pub const DEFAULT_POLICY_CAP: u128 = 1_000_000;

/// Value of a game and a uniformly optimal pair of policies.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GameValue {
    /// Long-run average reward per step from each Min state.
    pub chi: Vec<Rational>,
    /// Growth rate per application of the Shapley operator, `2χ`.
    pub eta: Vec<Rational>,
    pub optimal_pair: Policy,
    /// Every Min policy guaranteeing `χ` from all states at once.
    pub optimal_sigmas: Vec<Vec<usize>>,
    /// Every Max policy guaranteeing `χ` from all states at once.
    pub optimal_taus: Vec<Vec<usize>>,
    pub saddle_verified: bool,
    pub pairs_evaluated: u128,
}

impl GameValue {
    pub fn max_chi(&self) -> &Rational {
        self.chi.iter().max().expect("n ≥ 1")
    }

    pub fn is_constant(&self) -> bool {
        self.chi.windows(2).all(|w| w[0] == w[1])
    }

    pub fn to_json(&self, g: &StochGame) -> Value {
        let fmt = |v: &[Rational]| v.iter().map(format_rational).collect::<Vec<_>>();
        let one_based = |v: &[usize]| v.iter().map(|a| a + 1).collect::<Vec<_>>();
        json!({
            "chi": fmt(&self.chi),
            "eta": fmt(&self.eta),
            "max_chi": format_rational(self.max_chi()),
            "optimal_pair": {
                "sigma": one_based(&self.optimal_pair.sigma),
                "tau": one_based(&self.optimal_pair.tau),
                "description": self.optimal_pair.describe(g),
            },
            "optimal_min_policies": self.optimal_sigmas.len(),
            "optimal_max_policies": self.optimal_taus.len(),
            "saddle_verified": self.saddle_verified,
            "pairs_evaluated": self.pairs_evaluated.to_string(),
        })
    }
}

fn decode(mut index: u64, radices: &[usize]) -> Vec<usize> {
    radices
        .iter()
        .map(|&r| {
            let d = index % r as u64;
            index /= r as u64;
            d as usize
        })
        .collect()
}

fn componentwise(a: &mut [Rational], b: &[Rational], keep_larger: bool) {
    for (x, y) in a.iter_mut().zip(b) {
        if (keep_larger && y > x) || (!keep_larger && y < x) {
            *x = y.clone();
        }
    }
}

struct SigmaSweep {
    /// `max_τ g(σ, τ)` for each σ, in σ order.
    upper: Vec<Vec<Rational>>,
    /// `min_σ g(σ, τ)` over the σ's seen so far, for each τ.
    lower: Vec<Vec<Rational>>,
}

/// `χ_k = min_σ max_τ g_k(σ, τ)` over all positional policies, checked
/// against `max_τ min_σ g_k(σ, τ)`.
pub fn game_value_bruteforce(g: &StochGame, cap: u128) -> Result<GameValue> {
    let size = g.policy_space_size();
    if size > cap {
        return Err(Error::PolicySpaceTooLarge { size, cap });
    }
    let sigma_radices: Vec<usize> = g.min_actions().iter().map(Vec::len).collect();
    let tau_radices: Vec<usize> = g.max_actions().iter().map(Vec::len).collect();
    let n_sigma: u64 = sigma_radices.iter().map(|&r| r as u64).product();
    let n_tau: u64 = tau_radices.iter().map(|&r| r as u64).product();
    let n = g.n();

    let gains = |sigma: &[usize], tau: &[usize]| -> Vec<Rational> {
        let policy = Policy { sigma: sigma.to_vec(), tau: tau.to_vec() };
        let chain = chain_from_policies(g, &policy).expect("enumerated policies are valid");
        let mut gain = analyze(&chain).gain;
        gain.truncate(n);
        gain
    };

    let sweeps: Vec<SigmaSweep> = (0..n_sigma)
        .into_par_iter()
        .map(|s| {
            let sigma = decode(s, &sigma_radices);
            let mut upper: Option<Vec<Rational>> = None;
            let mut per_tau = Vec::with_capacity(n_tau as usize);
            for t in 0..n_tau {
                let gain = gains(&sigma, &decode(t, &tau_radices));
                match &mut upper {
                    Some(u) => componentwise(u, &gain, true),
                    None => upper = Some(gain.clone()),
                }
                per_tau.push(gain);
            }
            SigmaSweep { upper: vec![upper.expect("n_tau ≥ 1")], lower: per_tau }
        })
        .collect();

    let mut upper_by_sigma = Vec::with_capacity(n_sigma as usize);
    let mut lower_by_tau: Vec<Vec<Rational>> = Vec::new();
    for sweep in sweeps {
        upper_by_sigma.extend(sweep.upper);
        if lower_by_tau.is_empty() {
            lower_by_tau = sweep.lower;
        } else {
            for (acc, row) in lower_by_tau.iter_mut().zip(&sweep.lower) {
                componentwise(acc, row, false);
            }
        }
    }

    let mut chi = upper_by_sigma[0].clone();
    for u in &upper_by_sigma[1..] {
        componentwise(&mut chi, u, false);
    }
    let mut lower = lower_by_tau[0].clone();
    for l in &lower_by_tau[1..] {
        componentwise(&mut lower, l, true);
    }
    if chi != lower {
        return Err(Error::SaddleCheckFailed(format!(
            "min-max {:?} differs from max-min {:?}",
            chi.iter().map(format_rational).collect::<Vec<_>>(),
            lower.iter().map(format_rational).collect::<Vec<_>>()
        )));
    }
    let optimal_sigmas: Vec<Vec<usize>> = upper_by_sigma
        .iter()
        .enumerate()
        .filter(|(_, u)| **u == chi)
        .map(|(s, _)| decode(s as u64, &sigma_radices))
        .collect();
    let optimal_taus: Vec<Vec<usize>> = lower_by_tau
        .iter()
        .enumerate()
        .filter(|(_, l)| **l == chi)
        .map(|(t, _)| decode(t as u64, &tau_radices))
        .collect();
    if optimal_sigmas.is_empty() || optimal_taus.is_empty() {
        return Err(Error::SaddleCheckFailed(
            "no policy is optimal from every initial state".into(),
        ));
    }
    let optimal_pair = Policy { sigma: optimal_sigmas[0].clone(), tau: optimal_taus[0].clone() };
    let eta = chi.iter().map(|c| c * Rational::from_integer(2.into())).collect();
    Ok(GameValue {
        chi,
        eta,
        optimal_pair,
        optimal_sigmas,
        optimal_taus,
        saddle_verified: true,
        pairs_evaluated: size,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Trivial,
    Nontrivial,
}

/// The largest `λ` for which the reinforced spectrahedron `𝒮_λ` is
/// nontrivial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Margin {
    Finite(Rational),
    /// A unit-support point lies in `𝒮_λ` for every `λ`.
    Unbounded,
    /// Every variable was eliminated before a game could be built; the
    /// eliminations only hold at `λ ≥ 0`, so no finite margin is reported.
    Unavailable,
}

impl Margin {
    pub fn to_json(&self) -> Value {
        match self {
            Margin::Finite(q) => Value::String(format_rational(q)),
            Margin::Unbounded => Value::String("+inf".into()),
            Margin::Unavailable => Value::Null,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TmsdfpSolution {
    pub status: Status,
    pub margin: Margin,
    pub value: Option<GameValue>,
    pub game: Option<StochGame>,
    /// Original index of each Min state of `game`.
    pub variables: Vec<usize>,
    pub trace: Vec<Reduction>,
}

/// Decides whether the spectrahedron of a Metzler pencil is nontrivial by
/// solving its game exactly. Nontrivial iff `max_k χ_k ≥ 0`; the margin is
/// `2·max_k χ_k`.
pub fn solve_tmsdfp(p: &Pencil, cap: u128) -> Result<TmsdfpSolution> {
    let prep = prepare(p)?;
    Ok(match prep.prepared {
        Prepared::Nontrivial { .. } => TmsdfpSolution {
            status: Status::Nontrivial,
            margin: Margin::Unbounded,
            value: None,
            game: None,
            variables: Vec::new(),
            trace: prep.trace,
        },
        Prepared::Trivial => TmsdfpSolution {
            status: Status::Trivial,
            margin: Margin::Unavailable,
            value: None,
            game: None,
            variables: Vec::new(),
            trace: prep.trace,
        },
        Prepared::Game { reduced, game } => {
            let value = game_value_bruteforce(&game, cap)?;
            let best = value.max_chi().clone();
            let status = if best.is_negative() { Status::Trivial } else { Status::Nontrivial };
            TmsdfpSolution {
                status,
                margin: Margin::Finite(best * Rational::from_integer(2.into())),
                value: Some(value),
                game: Some(game),
                variables: reduced.variables,
                trace: prep.trace,
            }
        }
    })
}

/// Details of an affine feasibility decision.
#[derive(Clone, Debug)]
pub struct AffineOutcome {
    pub feasible: bool,
    /// Winning dominions of the game, as sets of homogenized variables.
    pub winning_dominions: Vec<Vec<usize>>,
}

/// Feasibility of `Q⁽⁰⁾ ⊕ x₁Q⁽¹⁾ ⊕ …`, where matrix 0 of an affine pencil is
/// the constant term: after homogenization, some winning dominion of the game
/// must contain the distinguished state 0.
pub fn affine_feasibility(p: &Pencil, sign_free: &BTreeSet<usize>, cap: usize) -> Result<AffineOutcome> {
    if !p.is_affine() {
        return Err(Error::validation("affine feasibility needs a pencil with the affine flag"));
    }
    let homogenized = homogenize(p, sign_free)?;
    let conic = if homogenized.pencil.is_metzler() {
        homogenized.pencil
    } else {
        metzlerize(&homogenized.pencil).pencil
    };
    let infeasible = AffineOutcome { feasible: false, winning_dominions: Vec::new() };
    match reduce_preserving_supports(&conic)? {
        SupportReduction::AllEliminated => Ok(infeasible),
        SupportReduction::Unconstrained { variables } => Ok(AffineOutcome {
            feasible: variables.contains(&0),
            winning_dominions: vec![variables],
        }),
        SupportReduction::Reduced(reduced) => {
            let Some(zero) = reduced.variables.iter().position(|&k| k == 0) else {
                return Ok(infeasible);
            };
            let padded = padded_game(&reduced.pencil)?;
            let winning = game::winning_dominions(&padded, cap)?;
            let feasible = winning.iter().any(|d| d.contains(&zero));
            let winning_dominions = winning
                .into_iter()
                .map(|d| d.into_iter().map(|k| reduced.variables[k]).collect())
                .collect();
            Ok(AffineOutcome { feasible, winning_dominions })
        }
    }
}

/// The game of a pencil in which some matrices may lack a tropically
/// negative entry. Such a variable is unconstrained; it gets a private Max
/// state and a zero-reward loop, so that `x ≤ F(x)` is unchanged.
fn padded_game(p: &Pencil) -> Result<StochGame> {
    let mut min_actions: Vec<Vec<MinAction>> = vec![Vec::new(); p.n()];
    let mut max_actions: Vec<Vec<MaxAction>> = vec![Vec::new(); p.m()];
    for (k, q) in p.matrices().iter().enumerate() {
        for (i, j, v) in q.entries() {
            if v.is_negative() {
                min_actions[k].push(MinAction::new(i, j, -v.modulus_ref().expect("finite")));
            } else if v.is_positive() && i == j {
                max_actions[i].push(MaxAction { to: k, reward: v.modulus_ref().expect("finite").clone() });
            }
        }
    }
    for k in 0..p.n() {
        if min_actions[k].is_empty() {
            let loop_state = max_actions.len();
            max_actions.push(vec![MaxAction { to: k, reward: Rational::zero() }]);
            min_actions[k].push(MinAction::new(loop_state, loop_state, Rational::zero()));
        }
    }
    if max_actions.iter().any(Vec::is_empty) {
        return Err(Error::AssumptionViolated("a row has no tropically positive diagonal entry".into()));
    }
    StochGame::new(min_actions, max_actions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{dominion_game, running_example};
    use crate::game::{game_from_pencil, pencil_from_game, DEFAULT_DOMINION_CAP};
    use crate::pencil::SymMatrix;
    use crate::rational::{int, ratio};
    use crate::tropical::SignedTrop;

    #[test]
    fn running_example_value() {
        let g = game_from_pencil(&running_example()).unwrap();
        let value = game_value_bruteforce(&g, DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(value.chi, vec![ratio(1, 56); 3]);
        assert_eq!(value.eta, vec![ratio(1, 28); 3]);
        assert_eq!(value.optimal_sigmas, vec![vec![0, 0, 1]]);
        assert_eq!(value.optimal_taus, vec![vec![0, 0, 0]]);
        assert!(value.saddle_verified);
        assert_eq!(value.pairs_evaluated, 4);
    }

    #[test]
    fn single_loop_value() {
        let g = StochGame::new(
            vec![vec![MinAction::new(0, 0, int(3))]],
            vec![vec![MaxAction { to: 0, reward: int(-6) }]],
        )
        .unwrap();
        assert_eq!(game_value_bruteforce(&g, 10).unwrap().chi, vec![ratio(-3, 2)]);
    }

    #[test]
    fn policy_cap() {
        let g = game_from_pencil(&running_example()).unwrap();
        assert!(matches!(
            game_value_bruteforce(&g, 3),
            Err(Error::PolicySpaceTooLarge { size: 4, cap: 3 })
        ));
    }

    #[test]
    fn tmsdfp_on_running_example() {
        let sol = solve_tmsdfp(&running_example(), DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(sol.status, Status::Nontrivial);
        assert_eq!(sol.margin, Margin::Finite(ratio(1, 28)));
    }

    #[test]
    fn tmsdfp_on_negative_game() {
        let g = StochGame::new(
            vec![vec![MinAction::new(0, 1, int(-1))], vec![MinAction::new(1, 1, int(-1))]],
            vec![
                vec![MaxAction { to: 0, reward: int(-1) }],
                vec![MaxAction { to: 1, reward: int(-1) }, MaxAction { to: 0, reward: int(-1) }],
            ],
        )
        .unwrap();
        let sol = solve_tmsdfp(&pencil_from_game(&g), DEFAULT_POLICY_CAP).unwrap();
        assert_eq!(sol.status, Status::Trivial);
        assert_eq!(sol.margin, Margin::Finite(int(-2)));
    }

    fn permuted(p: &Pencil, first: usize) -> Pencil {
        let mut matrices = p.matrices().to_vec();
        matrices.swap(0, first);
        Pencil::new(p.m(), matrices, true).unwrap()
    }

    #[test]
    fn affine_running_example() {
        let p = permuted(&running_example(), 1);
        assert!(affine_feasibility(&p, &BTreeSet::new(), DEFAULT_DOMINION_CAP).unwrap().feasible);
    }

    #[test]
    fn affine_constant_term_alone() {
        let mut q0 = SymMatrix::new(2);
        q0.set(0, 0, SignedTrop::Pos(int(0)));
        q0.set(1, 1, SignedTrop::Pos(int(0)));
        let mut q1 = SymMatrix::new(2);
        q1.set(0, 1, SignedTrop::Neg(int(5)));
        let p = Pencil::new(2, vec![q0, q1], true).unwrap();
        assert!(affine_feasibility(&p, &BTreeSet::new(), DEFAULT_DOMINION_CAP).unwrap().feasible);
    }

    #[test]
    fn affine_dominion_game() {
        let base = pencil_from_game(&dominion_game());
        let verdicts: Vec<bool> = (0..4)
            .map(|k| {
                let p = permuted(&base, k);
                affine_feasibility(&p, &BTreeSet::new(), DEFAULT_DOMINION_CAP).unwrap().feasible
            })
            .collect();
        assert_eq!(verdicts, vec![false, false, true, false]);
    }

    #[test]
    fn affine_requires_flag() {
        assert!(affine_feasibility(&running_example(), &BTreeSet::new(), 16).is_err());
    }
}
