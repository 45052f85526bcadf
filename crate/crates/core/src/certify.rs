//! Certificates of feasibility and infeasibility, checked in exact
//! arithmetic, and the archimedean thresholds of monomial lifts.
//!
//! A feasibility certificate is a nontrivial `v` with `λ + v ≤ F(v)`, i.e. a
//! point of `𝒮_λ`; for `λ > 0` every lift `(t^{v₁}, …, t^{vₙ})` is a point of
//! the nonarchimedean spectrahedron. An infeasibility certificate is a finite
//! `u` with `F(u) ≤ λ + u` and `λ < 0`, which bounds the growth of `F` and
//! rules out any nontrivial subharmonic vector.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::StochGame;
use crate::pencil::{membership_metzler, Pencil, TropPoint};
use crate::pipeline::{prepare, Prepared};
use crate::rational::{format_rational, Rational};
use crate::scalar::Scalar;
use crate::shapley::{
    apply_f, check_feasibility, CompiledGame, FeasibilityOptions, IterationReport, Operator, Verdict,
};
use crate::tropical::ExtReal;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CertificateKind {
    Feasibility,
    Infeasibility,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub kind: CertificateKind,
    pub vector: Vec<ExtReal>,
    #[serde(with = "crate::rational::serde_str")]
    pub lambda: Rational,
    pub strict: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct SubharmonicCheck {
    pub holds: bool,
    /// `λ + v_k < F(v)_k` on every finite coordinate.
    pub strict: bool,
}

/// Exact check of `λ + v ≤ F(v)`.
pub fn verify_subharmonic(g: &StochGame, v: &[ExtReal], lambda: &Rational) -> Result<SubharmonicCheck> {
    let fv = apply_f(g, v)?;
    let mut holds = true;
    let mut strict = true;
    for (x, f) in v.iter().zip(&fv) {
        let lhs = x.shifted(lambda);
        if !lhs.is_finite() {
            continue;
        }
        holds &= lhs <= *f;
        strict &= lhs < *f;
    }
    Ok(SubharmonicCheck { holds, strict: holds && strict })
}

/// Exact check of `F(u) ≤ λ + u` for a finite `u`.
pub fn verify_superharmonic(g: &StochGame, u: &[ExtReal], lambda: &Rational) -> Result<bool> {
    if u.iter().any(|x| !x.is_finite()) {
        return Ok(false);
    }
    let fu = apply_f(g, u)?;
    Ok(fu.iter().zip(u).all(|(f, x)| *f <= x.shifted(lambda)))
}

/// The certificate a value-iteration run implies, if any.
///
/// With `ℓ` iterations and `μ = ε/ℓ`, a feasible run gives
/// `F(v*) ≥ μ + v*` for `v* = max_{j<ℓ} (F^j(0) − jμ)` and an infeasible run
/// gives `F(u*) ≤ u* − μ` for `u* = min_{j<ℓ} (F^j(0) + jμ)`. The iterates are
/// recomputed in the arithmetic of the run and the certificate is checked
/// at `±μ/2`, leaving room for rounding; if that fails the iterates are
/// recomputed exactly.
pub fn certificate_from_report(g: &StochGame, report: &IterationReport) -> Result<Option<Certificate>> {
    let kind = match report.verdict {
        Verdict::Feasible => CertificateKind::Feasibility,
        Verdict::Infeasible => CertificateKind::Infeasibility,
        Verdict::Indeterminate => return Ok(None),
    };
    let steps = report.iterations;
    let mu = &report.epsilon / BigInt::from(steps);
    if !report.exact_arithmetic {
        let cert = orbit_certificate(g, &CompiledGame::<f64>::new(g), kind, steps, &mu)?;
        if cert.is_some() {
            return Ok(cert);
        }
    }
    orbit_certificate(g, &CompiledGame::<ExtReal>::new(g), kind, steps, &mu)
}

fn orbit_certificate<T: Scalar>(
    g: &StochGame,
    op: &CompiledGame<T>,
    kind: CertificateKind,
    steps: u64,
    mu: &Rational,
) -> Result<Option<Certificate>> {
    let feasible = kind == CertificateKind::Feasibility;
    let mut u = vec![T::zero(); g.n()];
    let mut best: Vec<ExtReal> = Vec::new();
    let mut shift = Rational::zero();
    for _ in 0..steps {
        let shifted: Vec<ExtReal> = u
            .iter()
            .map(|x| x.to_ext().shifted(&if feasible { -&shift } else { shift.clone() }))
            .collect();
        if best.is_empty() {
            best = shifted;
        } else {
            for (b, s) in best.iter_mut().zip(shifted) {
                if (feasible && s > *b) || (!feasible && s < *b) {
                    *b = s;
                }
            }
        }
        u = op.apply(&u);
        shift += mu;
    }
    let half_mu = mu / BigInt::from(2);
    let cert = if feasible {
        let check = verify_subharmonic(g, &best, &half_mu)?;
        check.holds.then(|| Certificate {
            kind,
            vector: best,
            lambda: half_mu,
            strict: check.strict,
        })
    } else {
        let lambda = -half_mu;
        verify_superharmonic(g, &best, &lambda)?.then(|| Certificate {
            kind,
            vector: best,
            lambda,
            strict: true,
        })
    };
    Ok(cert)
}

/// A point of `𝒮_λ` for a given `0 < λ` below the game's growth rate,
/// found by value iteration on the game whose Min rewards are lowered by `λ`.
pub fn certificate_at_margin(
    g: &StochGame,
    lambda: &Rational,
    opts: &FeasibilityOptions,
) -> Result<Option<Certificate>> {
    if !lambda.is_positive() {
        return Err(Error::validation("the margin of a feasibility certificate must be positive"));
    }
    let shifted = g.shift_min_rewards(lambda);
    let report = check_feasibility(&shifted, opts)?;
    if report.verdict != Verdict::Feasible {
        return Ok(None);
    }
    let check = verify_subharmonic(g, &report.witness, lambda)?;
    Ok(check.holds.then(|| Certificate {
        kind: CertificateKind::Feasibility,
        vector: report.witness,
        lambda: lambda.clone(),
        strict: check.strict,
    }))
}

pub(crate) fn unit_certificate(vector: Vec<ExtReal>) -> Certificate {
    Certificate { kind: CertificateKind::Feasibility, vector, lambda: Rational::zero(), strict: false }
}

/// All variables are eliminated by normalization; the vector is trivial and
/// the certificate is the elimination itself.
pub(crate) fn elimination_certificate(n: usize) -> Certificate {
    Certificate {
        kind: CertificateKind::Infeasibility,
        vector: TropPoint::trivial(n).0,
        lambda: Rational::zero(),
        strict: false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CertificateCheck {
    pub valid: bool,
    pub strict: bool,
    pub reason: String,
}

impl CertificateCheck {
    fn reject(reason: impl Into<String>) -> Self {
        Self { valid: false, strict: false, reason: reason.into() }
    }

    fn accept(strict: bool, reason: impl Into<String>) -> Self {
        Self { valid: true, strict, reason: reason.into() }
    }
}

/// Checks a certificate stated on the Min states of a game.
pub fn verify_game_certificate(g: &StochGame, cert: &Certificate) -> Result<CertificateCheck> {
    if cert.vector.len() != g.n() {
        return Ok(CertificateCheck::reject("vector length does not match the game"));
    }
    match cert.kind {
        CertificateKind::Feasibility => {
            if cert.lambda.is_negative() {
                return Ok(CertificateCheck::reject("lambda must be nonnegative"));
            }
            if TropPoint(cert.vector.clone()).is_trivial() {
                return Ok(CertificateCheck::reject("the vector is trivial"));
            }
            let check = verify_subharmonic(g, &cert.vector, &cert.lambda)?;
            Ok(if check.holds {
                CertificateCheck::accept(check.strict, "lambda + v <= F(v)")
            } else {
                CertificateCheck::reject("lambda + v <= F(v) fails")
            })
        }
        CertificateKind::Infeasibility => {
            if !cert.lambda.is_negative() {
                return Ok(CertificateCheck::reject("lambda must be negative"));
            }
            Ok(if verify_superharmonic(g, &cert.vector, &cert.lambda)? {
                CertificateCheck::accept(true, "F(u) <= lambda + u")
            } else {
                CertificateCheck::reject("F(u) <= lambda + u fails or u is not finite")
            })
        }
    }
}

/// Checks a certificate stated on the variables of a Metzler pencil.
///
/// The pencil is normalized again; coordinates of eliminated variables must
/// be `−∞` and the rest is checked on the game. Feasibility is additionally
/// checked directly against the pencil's inequalities.
pub fn verify_pencil_certificate(p: &Pencil, cert: &Certificate) -> Result<CertificateCheck> {
    if cert.vector.len() != p.n() {
        return Ok(CertificateCheck::reject("vector length does not match the pencil"));
    }
    let prep = prepare(p)?;
    if cert.kind == CertificateKind::Feasibility {
        if cert.lambda.is_negative() {
            return Ok(CertificateCheck::reject("lambda must be nonnegative"));
        }
        if TropPoint(cert.vector.clone()).is_trivial() {
            return Ok(CertificateCheck::reject("the vector is trivial"));
        }
        if !membership_metzler(p, &cert.vector, &cert.lambda)? {
            return Ok(CertificateCheck::reject("the point violates the pencil inequalities"));
        }
    }
    match prep.prepared {
        Prepared::Nontrivial { .. } => Ok(match cert.kind {
            CertificateKind::Feasibility => {
                CertificateCheck::accept(false, "point satisfies the pencil inequalities")
            }
            CertificateKind::Infeasibility => {
                CertificateCheck::reject("a matrix without negative entries makes the problem feasible")
            }
        }),
        Prepared::Trivial => Ok(match cert.kind {
            CertificateKind::Feasibility => CertificateCheck::reject("normalization eliminates every variable"),
            CertificateKind::Infeasibility => {
                CertificateCheck::accept(false, "normalization eliminates every variable")
            }
        }),
        Prepared::Game { reduced, game } => {
            let kept: Vec<bool> = (0..p.n()).map(|k| reduced.variables.contains(&k)).collect();
            if cert.vector.iter().zip(&kept).any(|(x, keep)| !keep && x.is_finite()) {
                return Ok(CertificateCheck::reject("an eliminated variable is finite"));
            }
            let projected = Certificate {
                vector: reduced.variables.iter().map(|&k| cert.vector[k].clone()).collect(),
                ..cert.clone()
            };
            verify_game_certificate(&game, &projected)
        }
    }
}

/// `t > base^exponent` guarantees a nonempty (λ > 0) or empty (λ < 0)
/// real spectrahedron at parameter `t`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Threshold {
    pub base: u64,
    #[serde(with = "crate::rational::serde_str")]
    pub exponent: Rational,
}

impl Threshold {
    pub fn log10(&self) -> f64 {
        crate::rational::to_f64(&self.exponent) * (self.base as f64).log10()
    }
}

impl std::fmt::Display for Threshold {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "t > {}^({})", self.base, format_rational(&self.exponent))
    }
}

/// `t > (2(m−1)n)^{1/(2|λ| − 2δ)}`, or `t > n^{1/(2|λ| − 2δ)}` for diagonal
/// pencils, where `δ` bounds the deviation of the entries from their
/// leading monomials.
pub fn archimedean_threshold(
    lambda: &Rational,
    delta: &Rational,
    m: usize,
    n: usize,
    diagonal: bool,
) -> Result<Threshold> {
    if lambda.is_zero() {
        return Err(Error::validation("lambda must be nonzero"));
    }
    if delta.is_negative() {
        return Err(Error::validation("delta must be nonnegative"));
    }
    if delta >= &lambda.abs() {
        return Err(Error::DeltaTooLarge {
            delta: format_rational(delta),
            lambda: format_rational(&lambda.abs()),
        });
    }
    if n == 0 {
        return Err(Error::validation("n must be positive"));
    }
    let base = if diagonal {
        n as u64
    } else {
        if m < 2 {
            return Err(Error::validation("m must be at least 2 for a non-diagonal pencil"));
        }
        2 * (m as u64 - 1) * n as u64
    };
    let two = BigInt::from(2);
    let exponent = (lambda.abs() * &two - delta * &two).recip();
    Ok(Threshold { base, exponent })
}

/// The monomial lift `(t^{x₁}, …, t^{xₙ})` of a point of `𝒮_λ`, `λ > 0`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MonomialLift {
    pub exponents: Vec<ExtReal>,
    #[serde(with = "crate::rational::serde_str")]
    pub lambda: Rational,
    pub threshold: Threshold,
}

impl MonomialLift {
    pub fn describe(&self) -> String {
        let coords: Vec<String> = self
            .exponents
            .iter()
            .map(|e| match e {
                ExtReal::NegInf => "0".to_string(),
                ExtReal::Finite(q) => format!("t^({})", format_rational(q)),
            })
            .collect();
        format!("x = ({}) for {}", coords.join(", "), self.threshold)
    }
}

pub fn lift_description(p: &Pencil, x: &[ExtReal], lambda: &Rational) -> Result<MonomialLift> {
    if !lambda.is_positive() {
        return Err(Error::CertificateInvalid("lambda must be positive".into()));
    }
    if TropPoint(x.to_vec()).is_trivial() {
        return Err(Error::CertificateInvalid("the trivial point has no lift".into()));
    }
    if !membership_metzler(p, x, lambda)? {
        return Err(Error::CertificateInvalid(format!(
            "the point is not in the spectrahedron reinforced by {}",
            format_rational(lambda)
        )));
    }
    let diagonal = p.matrices().iter().all(|q| q.entries().all(|(i, j, _)| i == j));
    let threshold = archimedean_threshold(lambda, &Rational::zero(), p.m(), p.n(), diagonal)?;
    Ok(MonomialLift { exponents: x.to_vec(), lambda: lambda.clone(), threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::running_example;
    use crate::game::{game_from_pencil, MaxAction, MinAction};
    use crate::rational::{dyadic, int, ratio};

    fn fin(q: Rational) -> ExtReal {
        ExtReal::Finite(q)
    }

    fn running_game() -> StochGame {
        game_from_pencil(&running_example()).unwrap()
    }

    fn printed_vector() -> Vec<ExtReal> {
        vec![fin(dyadic(1_107_425, 20)), fin(dyadic(42_799, 21)), fin(dyadic(4_729_289, 22))]
    }

    #[test]
    fn printed_vector_is_strictly_subharmonic() {
        let check = verify_subharmonic(&running_game(), &printed_vector(), &Rational::zero()).unwrap();
        assert!(check.holds && check.strict);
    }

    #[test]
    fn bumped_vector_fails() {
        let mut v = printed_vector();
        v[1] = v[1].shifted(&int(1));
        assert!(!verify_subharmonic(&running_game(), &v, &Rational::zero()).unwrap().holds);
    }

    #[test]
    fn negative_game_superharmonic() {
        let g = StochGame::new(
            vec![vec![MinAction::new(0, 0, int(-1))]],
            vec![vec![MaxAction { to: 0, reward: int(-1) }]],
        )
        .unwrap();
        assert!(verify_superharmonic(&g, &[ExtReal::zero()], &int(-2)).unwrap());
        assert!(!verify_superharmonic(&g, &[ExtReal::NegInf], &int(-2)).unwrap());
    }

    #[test]
    fn running_example_has_no_superharmonic_vector() {
        let g = running_game();
        let grid: Vec<ExtReal> = (-16..=16).map(|a| fin(ratio(a, 4))).collect();
        for a in &grid {
            for b in &grid {
                let u = [ExtReal::zero(), a.clone(), b.clone()];
                assert!(!verify_superharmonic(&g, &u, &int(-1)).unwrap());
            }
        }
    }

    #[test]
    fn report_certificates_verify() {
        let g = running_game();
        let report = check_feasibility(&g, &FeasibilityOptions::default()).unwrap();
        let cert = certificate_from_report(&g, &report).unwrap().unwrap();
        assert_eq!(cert.kind, CertificateKind::Feasibility);
        assert!(cert.lambda.is_positive());
        assert!(verify_game_certificate(&g, &cert).unwrap().valid);
    }

    #[test]
    fn certificate_at_positive_margin() {
        let g = running_game();
        let cert = certificate_at_margin(&g, &ratio(1, 56), &FeasibilityOptions::default())
            .unwrap()
            .unwrap();
        assert!(verify_subharmonic(&g, &cert.vector, &ratio(1, 56)).unwrap().holds);
        assert!(certificate_at_margin(&g, &int(0), &FeasibilityOptions::default()).is_err());
    }

    #[test]
    fn threshold_examples() {
        let t = archimedean_threshold(&ratio(1, 56), &int(0), 3, 3, false).unwrap();
        assert_eq!(t, Threshold { base: 12, exponent: int(28) });
        let t = archimedean_threshold(&ratio(1, 2), &int(0), 1, 4, true).unwrap();
        assert_eq!(t, Threshold { base: 4, exponent: int(1) });
        assert!(matches!(
            archimedean_threshold(&ratio(1, 2), &ratio(1, 2), 3, 3, false),
            Err(Error::DeltaTooLarge { .. })
        ));
        assert!(archimedean_threshold(&int(0), &int(0), 3, 3, false).is_err());
        assert!(archimedean_threshold(&int(1), &int(0), 1, 3, false).is_err());
    }

    #[test]
    fn threshold_shrinks_with_lambda() {
        let small = archimedean_threshold(&ratio(1, 10), &int(0), 4, 5, false).unwrap();
        let large = archimedean_threshold(&ratio(1, 2), &int(0), 4, 5, false).unwrap();
        assert!(large.log10() < small.log10());
    }

    #[test]
    fn lift_preconditions() {
        let p = running_example();
        let v = printed_vector();
        let lift = lift_description(&p, &v, &ratio(1, 1_000_000)).unwrap();
        assert_eq!(lift.exponents, v);
        assert!(lift.describe().starts_with("x = (t^(1107425/1048576)"));
        assert!(lift_description(&p, &v, &int(0)).is_err());
        assert!(lift_description(&p, &TropPoint::trivial(3), &int(1)).is_err());
        assert!(lift_description(&p, &v, &int(5)).is_err());
    }
}
