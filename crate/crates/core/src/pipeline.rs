//! From a Metzler pencil to the game that decides it.

use crate::certify::{self, Certificate};
use crate::error::Result;
use crate::game::{game_from_pencil, StochGame};
use crate::pencil::{normalize, NormalizeOutcome, Pencil, ReducedPencil, Reduction, TropPoint};
use crate::shapley::{
    check_feasibility, structural_constant_value_check, Ergodicity, FeasibilityOptions,
    IterationReport, Verdict,
};
use crate::tropical::ExtReal;

#[derive(Clone, Debug)]
pub enum Prepared {
    /// Some matrix has no tropically negative entry.
    Nontrivial { variable: usize },
    /// Every variable was eliminated.
    Trivial,
    Game { reduced: ReducedPencil, game: StochGame },
}

#[derive(Clone, Debug)]
pub struct Preparation {
    pub prepared: Prepared,
    pub trace: Vec<Reduction>,
    pub ergodicity: Ergodicity,
}

pub fn prepare(p: &Pencil) -> Result<Preparation> {
    let normalization = normalize(p)?;
    let (prepared, ergodicity) = match normalization.outcome {
        NormalizeOutcome::Nontrivial { variable } => {
            (Prepared::Nontrivial { variable }, Ergodicity::Unknown)
        }
        NormalizeOutcome::Trivial => (Prepared::Trivial, Ergodicity::Unknown),
        NormalizeOutcome::Reduced(reduced) => {
            let game = game_from_pencil(&reduced.pencil)?;
            let ergodicity = structural_constant_value_check(&reduced.pencil);
            (Prepared::Game { reduced, game }, ergodicity)
        }
    };
    Ok(Preparation { prepared, trace: normalization.trace, ergodicity })
}

/// Value iteration on a pencil, with the witness expressed in the pencil's
/// own variables (eliminated variables are `−∞`).
#[derive(Clone, Debug)]
pub struct PencilCheck {
    pub report: IterationReport,
    pub certificate: Option<Certificate>,
    pub trace: Vec<Reduction>,
    pub ergodicity: Ergodicity,
}

pub fn check_pencil(p: &Pencil, opts: &FeasibilityOptions) -> Result<PencilCheck> {
    let prep = prepare(p)?;
    let n = p.n();
    let (report, certificate) = match &prep.prepared {
        Prepared::Nontrivial { variable } => {
            let mut witness = TropPoint::trivial(n).0;
            witness[*variable] = ExtReal::zero();
            let report = shortcut_report(Verdict::Feasible, witness.clone(), opts);
            let cert = certify::unit_certificate(witness);
            (report, Some(cert))
        }
        Prepared::Trivial => {
            let report = shortcut_report(Verdict::Infeasible, TropPoint::trivial(n).0, opts);
            (report, Some(certify::elimination_certificate(n)))
        }
        Prepared::Game { reduced, game } => {
            let report = check_feasibility(game, opts)?;
            let cert = certify::certificate_from_report(game, &report)?;
            let lift = |v: &[ExtReal]| reduced.lift_point(n, v);
            let cert = cert.map(|c| Certificate { vector: lift(&c.vector), ..c });
            let report = IterationReport {
                witness: lift(&report.witness),
                last_iterate: lift(&report.last_iterate),
                ..report
            };
            (report, cert)
        }
    };
    Ok(PencilCheck { report, certificate, trace: prep.trace, ergodicity: prep.ergodicity })
}

fn shortcut_report(verdict: Verdict, witness: Vec<ExtReal>, opts: &FeasibilityOptions) -> IterationReport {
    IterationReport {
        verdict,
        iterations: 0,
        last_iterate: witness.clone(),
        witness,
        epsilon: opts.epsilon.clone(),
        strict: false,
        exact_arithmetic: true,
        elapsed_s: 0.0,
    }
}
