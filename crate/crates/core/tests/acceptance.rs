//! One line per acceptance criterion. Every criterion is evaluated even if
//! an earlier one fails; the test fails if any of them does.

mod common;

use std::time::Instant;

use common::*;
use rand::Rng;
use tropsdp_core::bench::{gen_random, phase_diagram, run_instance, GenSpec, SweepOptions};
use tropsdp_core::exact::DEFAULT_POLICY_CAP;
use tropsdp_core::game::{minimal_dominions, winning_dominions, DEFAULT_DOMINION_CAP};
use tropsdp_core::io::parse_pencil;
use tropsdp_core::pencil::NormalizeOutcome;
use tropsdp_core::pipeline::check_pencil;
use tropsdp_core::rational::{dyadic, int, ratio};
use tropsdp_core::{
    analyze, apply_f, archimedean_threshold, chain_from_policies, check_feasibility, fixtures::dominion_game,
    game_from_pencil, game_value_bruteforce, membership_general, membership_metzler, metzlerize, normalize,
    verify_subharmonic, ExtReal, FeasibilityOptions, Pencil, Policy, Rational, Verdict,
};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn running_pencil() -> Pencil {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/running.json");
    parse_pencil(&std::fs::read_to_string(path).expect("fixture")).expect("valid fixture")
}

fn game_reconstruction() -> Outcome {
    let p = running_pencil();
    let mut best = f64::INFINITY;
    let mut game = None;
    for _ in 0..5 {
        let start = Instant::now();
        let g = game_from_pencil(&p).map_err(|e| e.to_string())?;
        best = best.min(start.elapsed().as_secs_f64());
        game = Some(g);
    }
    let g = game.unwrap();
    ensure(g == running_game(), || format!("reconstructed game differs: {g:?}"))?;
    let mut rewards: Vec<Rational> = g
        .min_actions()
        .iter()
        .flatten()
        .map(|a| a.reward.clone())
        .chain(g.max_actions().iter().flatten().map(|b| b.reward.clone()))
        .collect();
    rewards.sort();
    let mut expected = vec![ratio(-3, 4), int(0), int(0), int(0), int(1), int(-1), ratio(-5, 4), ratio(9, 4)];
    expected.sort();
    ensure(rewards == expected, || format!("rewards {rewards:?}"))?;
    ensure(best < 1e-3, || format!("took {best:.2e} s"))?;
    Ok(format!("3 Min / 3 Max states, 8 rewards, {:.1} us", best * 1e6))
}

fn markov_oracle() -> Outcome {
    let g = running_game();
    let cases = [(0, [2, 1, 2, 2, 2, 1], 10, ratio(3, 40)), (1, [4, 1, 2, 2, 4, 1], 14, ratio(1, 56))];
    for (min3, weights, den, gain) in cases {
        let chain = chain_from_policies(&g, &Policy { sigma: vec![0, 0, min3], tau: vec![0, 0, 0] })
            .map_err(|e| e.to_string())?;
        let a = analyze(&chain);
        let pi: Vec<Rational> = weights.iter().map(|&w| ratio(w, den)).collect();
        ensure(a.stationary_vector(6) == Some(pi.clone()), || format!("pi = {:?}", a.stationary_vector(6)))?;
        ensure(a.gain.iter().all(|q| *q == gain), || format!("gain = {:?}", a.gain))?;
    }
    Ok("pi = (2,1,2,2,2,1)/10 with gain 3/40; pi' = (4,1,2,2,4,1)/14 with gain 1/56".into())
}

fn exact_value() -> Outcome {
    let v = game_value_bruteforce(&running_game(), DEFAULT_POLICY_CAP).map_err(|e| e.to_string())?;
    ensure(v.max_chi() == &ratio(1, 56), || format!("max chi = {}", v.max_chi()))?;
    ensure(v.saddle_verified, || "saddle check failed".into())?;
    let unique = v.optimal_sigmas == vec![vec![0, 0, 1]] && v.optimal_taus == vec![vec![0, 0, 0]];
    ensure(unique, || format!("optimal policies {:?} / {:?}", v.optimal_sigmas, v.optimal_taus))?;
    Ok("max chi = 1/56, unique pair (Min 3 -> {Max 2, Max 3}, Max 2 -> Min 1)".into())
}

fn value_iteration() -> Outcome {
    let p = running_pencil();
    let out = check_pencil(&p, &FeasibilityOptions::default()).map_err(|e| e.to_string())?;
    let r = &out.report;
    ensure(r.verdict == Verdict::Feasible, || format!("verdict {:?}", r.verdict))?;
    ensure(r.iterations <= 100, || format!("{} iterations", r.iterations))?;
    let g = game_from_pencil(&p).map_err(|e| e.to_string())?;
    let check = verify_subharmonic(&g, &r.witness, &int(0)).map_err(|e| e.to_string())?;
    ensure(check.holds && check.strict, || format!("witness check {check:?}"))?;
    let printed = vec![
        ExtReal::Finite(dyadic(1107425, 20)),
        ExtReal::Finite(dyadic(42799, 21)),
        ExtReal::Finite(dyadic(4729289, 22)),
    ];
    let note = if r.last_iterate == printed { ", last iterate equals the printed vector" } else { "" };
    Ok(format!("feasible in {} iterations, witness strictly subharmonic{note}", r.iterations))
}

fn threshold() -> Outcome {
    let t = archimedean_threshold(&ratio(1, 56), &int(0), 3, 3, false).map_err(|e| e.to_string())?;
    ensure(t.base == 12 && t.exponent == int(28), || t.to_string())?;
    Ok(t.to_string())
}

fn subharmonic_membership() -> Outcome {
    let mut r = rng(1006);
    let (mut pencils, mut points) = (0, 0);
    while pencils < 50 {
        let (n, m) = (r.random_range(1..=6), r.random_range(2..=6));
        let p = random_metzler(&mut r, n, m, 0.6);
        let NormalizeOutcome::Reduced(red) = normalize(&p).map_err(|e| e.to_string())?.outcome else { continue };
        let q = red.pencil;
        let g = game_from_pencil(&q).map_err(|e| e.to_string())?;
        for _ in 0..1000 {
            let x = random_point(&mut r, q.n(), 0.15);
            let lambda = ratio(r.random_range(-16..=16), 8);
            let member = membership_metzler(&q, &x, &lambda).map_err(|e| e.to_string())?;
            let fx = apply_f(&g, &x).map_err(|e| e.to_string())?;
            let sub = x.iter().zip(&fx).all(|(a, b)| &a.shifted(&lambda) <= b);
            ensure(member == sub, || format!("{q:?} at {x:?}, lambda {lambda}"))?;
            points += 1;
        }
        pencils += 1;
    }
    Ok(format!("{pencils} pencils, {points} points, 0 failures"))
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut r = rng(1007);
    let opts = FeasibilityOptions::default();
    let two_eps = &opts.epsilon * int(2);
    let (mut compared, mut skipped) = (0, 0);
    while compared < 200 {
        let spec = GenSpec { n: r.random_range(1..=3), m: r.random_range(2..=3), seed: r.random(), grid: 4 };
        let g = game_from_pencil(&gen_random(&spec).map_err(|e| e.to_string())?.to_pencil()).map_err(|e| e.to_string())?;
        let value = game_value_bruteforce(&g, DEFAULT_POLICY_CAP).map_err(|e| e.to_string())?;
        let chi = value.max_chi().clone();
        if num_traits::Signed::abs(&chi) <= two_eps {
            skipped += 1;
            continue;
        }
        let report = check_feasibility(&g, &opts).map_err(|e| e.to_string())?;
        let expected = if sign_of(&chi) > 0 { Verdict::Feasible } else { Verdict::Infeasible };
        ensure(report.verdict == expected, || format!("{spec:?}: {:?} but max chi = {chi}", report.verdict))?;
        compared += 1;
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("{secs:.1} s"))?;
    Ok(format!("{compared} games agree, {skipped} with |max chi| <= 2 eps skipped, {secs:.1} s"))
}

fn metzlerization() -> Outcome {
    let mut r = rng(1008);
    let mut tested = 0;
    while tested < 100 {
        let (n, m) = (r.random_range(1..=3), r.random_range(2..=3));
        let p = random_general(&mut r, n, m, 0.7);
        if p.is_metzler() {
            continue;
        }
        let lift = metzlerize(&p);
        for _ in 0..10 {
            let x = random_point(&mut r, n, 0.15);
            let w = lift.witness(&p, &x);
            let lhs = membership_general(&p, &x).map_err(|e| e.to_string())?;
            let rhs = membership_metzler(&lift.pencil, &w, &int(0)).map_err(|e| e.to_string())?;
            ensure(lhs == rhs, || format!("{p:?} at {x:?}"))?;
        }
        tested += 1;
    }
    Ok(format!("{tested} non-Metzler pencils x 10 points, 0 failures"))
}

fn dominions() -> Outcome {
    let g = dominion_game();
    let minimal = minimal_dominions(&g, DEFAULT_DOMINION_CAP).map_err(|e| e.to_string())?;
    ensure(minimal == vec![vec![0], vec![2], vec![3], vec![1, 2, 3]], || format!("minimal {minimal:?}"))?;
    let winning = winning_dominions(&g, DEFAULT_DOMINION_CAP).map_err(|e| e.to_string())?;
    ensure(winning == vec![vec![2]], || format!("winning {winning:?}"))?;
    let mut r = rng(1009);
    let values: Vec<i64> = (-48..=48).map(|v| 2 * v).collect();
    let games = 60;
    for _ in 0..games {
        let (n, m) = (r.random_range(1..=3), r.random_range(1..=3));
        let g = random_game(&mut r, n, m, &[-1, 0, 1]);
        let oracle = IntGame::new(&g, 24);
        let supports = grid_search(n, &values, |x| oracle.subharmonic(x));
        let winning = winning_dominions(&g, DEFAULT_DOMINION_CAP).map_err(|e| e.to_string())?;
        ensure(supports == winning, || format!("{g:?}: supports {supports:?}, winning {winning:?}"))?;
    }
    Ok(format!("minimal {{1}},{{3}},{{4}},{{2,3,4}}; winning {{3}}; supports = winning dominions on {games} games"))
}

fn phase_transition() -> Outcome {
    let start = Instant::now();
    let opts = SweepOptions { samples: 10, seed: 2016, max_iters: 100_000, timing: false, ..SweepOptions::default() };
    let ms: Vec<usize> = (2..=40).collect();
    let rows = phase_diagram(&[10], &ms, &opts).map_err(|e| e.to_string())?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.feasible_ratio).collect();
    let crossings = ratios.windows(2).filter(|w| (w[0] >= 0.5) != (w[1] >= 0.5)).count();
    let secs = start.elapsed().as_secs_f64();
    let (first, last) = (ratios[0], *ratios.last().unwrap());
    let summary = format!("ratio {first} at m=2, {last} at m=40, {crossings} crossings of 0.5, {secs:.1} s");
    ensure(first >= 0.9 && last <= 0.1 && crossings <= 2 && secs < 120.0, || summary.clone())?;
    Ok(summary)
}

fn scale_smoke() -> Outcome {
    let inst = gen_random(&GenSpec::new(1000, 100, 7)).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let out = run_instance(&inst, &ratio(1, 100_000_000), 1_000_000, false).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(out.verdict != Verdict::Indeterminate, || "undecided".into())?;
    ensure(secs < 5.0, || format!("{secs:.2} s"))?;
    Ok(format!("{:?} after {} iterations in {secs:.3} s", out.verdict, out.iterations))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 11] = [
        ("running-example game reconstruction", game_reconstruction),
        ("markov oracle", markov_oracle),
        ("exact value", exact_value),
        ("value iteration", value_iteration),
        ("archimedean threshold", threshold),
        ("subharmonicity equals membership", subharmonic_membership),
        ("oracle equivalence", oracle_equivalence),
        ("metzlerization projection", metzlerization),
        ("dominions", dominions),
        ("phase transition", phase_transition),
        ("scale smoke test", scale_smoke),
    ];
    let mut failed = Vec::new();
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                println!("FAIL {:>2} {name}: {detail}", k + 1);
                failed.push(k + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
