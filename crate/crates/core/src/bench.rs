//! Random instances, phase-transition sweeps and timing tables.
//!
//! Instances have tropically positive diagonals and tropically negative
//! off-diagonal entries whose moduli are i.i.d. uniform on the grid
//! `{0, 1/d, …, 1}`. They are kept as integer numerators so that large
//! instances can be iterated on without building a pencil.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pencil::{Pencil, SymMatrix};
use crate::rational::{to_f64, Rational};
use crate::scalar::Scalar;
use crate::shapley::{value_iteration, Operator, Verdict};
use crate::tropical::{ExtReal, SignedTrop};

pub const DEFAULT_GRID: u64 = 1 << 31;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GenSpec {
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    /// Denominator `d` of the modulus grid.
    pub grid: u64,
}

impl GenSpec {
    pub fn new(n: usize, m: usize, seed: u64) -> Self {
        Self { n, m, seed, grid: DEFAULT_GRID }
    }
}

/// A random Metzler pencil in compact form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RandomInstance {
    pub n: usize,
    pub m: usize,
    pub grid: u64,
    /// `diag[k * m + i]` is the numerator of `|Q⁽ᵏ⁾_ii|`.
    diag: Vec<u32>,
    /// `off[k * p + s]` is the numerator of `|Q⁽ᵏ⁾_ij|` for the `s`-th pair
    /// `i < j` in lexicographic order, with `p = m(m−1)/2`.
    off: Vec<u32>,
}

pub fn gen_random(spec: &GenSpec) -> Result<RandomInstance> {
    if spec.n == 0 || spec.m == 0 {
        return Err(Error::validation("n and m must be positive"));
    }
    if spec.grid < 2 || spec.grid > u32::MAX as u64 {
        return Err(Error::validation("the grid denominator must lie in [2, 2^32)"));
    }
    let (n, m) = (spec.n, spec.m);
    let pairs = m * (m - 1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut diag = Vec::with_capacity(n * m);
    let mut off = Vec::with_capacity(n * pairs);
    for _ in 0..n {
        for i in 0..m {
            for j in i..m {
                let v = rng.random_range(0..=spec.grid) as u32;
                if i == j {
                    diag.push(v);
                } else {
                    off.push(v);
                }
            }
        }
    }
    Ok(RandomInstance { n, m, grid: spec.grid, diag, off })
}

impl RandomInstance {
    fn pairs(&self) -> usize {
        self.m * (self.m - 1) / 2
    }

    fn modulus(&self, num: u32) -> Rational {
        Rational::new(num.into(), self.grid.into())
    }

    pub fn to_pencil(&self) -> Pencil {
        let pairs = self.pairs();
        let matrices = (0..self.n)
            .map(|k| {
                let mut q = SymMatrix::new(self.m);
                let mut s = 0;
                for i in 0..self.m {
                    q.set(i, i, SignedTrop::Pos(self.modulus(self.diag[k * self.m + i])));
                    for j in i + 1..self.m {
                        q.set(i, j, SignedTrop::Neg(self.modulus(self.off[k * pairs + s])));
                        s += 1;
                    }
                }
                q
            })
            .collect();
        Pencil::new(self.m, matrices, false).expect("positive sizes")
    }

    /// The Shapley operator of the instance's game, evaluated in `O(nm²)`
    /// without materializing the game. Needs `m ≥ 2` so that every Min state
    /// has an action.
    pub fn operator<T: Scalar>(&self) -> Result<DenseOperator<T>> {
        if self.m < 2 {
            return Err(Error::AssumptionViolated(
                "random instances with m = 1 have no tropically negative entry".into(),
            ));
        }
        let den = self.grid;
        Ok(DenseOperator {
            n: self.n,
            m: self.m,
            diag: self.diag.iter().map(|&v| T::from_grid(v as u64, den)).collect(),
            off: self.off.iter().map(|&v| T::from_grid(v as u64, den).negated()).collect(),
        })
    }
}

/// Shapley operator of a dense random instance; `off` holds the rewards
/// `−|Q⁽ᵏ⁾_ij|` directly.
#[derive(Clone, Debug)]
pub struct DenseOperator<T> {
    n: usize,
    m: usize,
    diag: Vec<T>,
    off: Vec<T>,
}

const PARALLEL_WORK: usize = 1 << 18;

impl<T: Scalar> DenseOperator<T> {
    fn min_value(&self, k: usize, big_m: &[T]) -> T {
        let pairs = self.m * (self.m - 1) / 2;
        let rewards = &self.off[k * pairs..(k + 1) * pairs];
        let mut s = 0;
        let mut best: Option<T> = None;
        for i in 0..self.m {
            for j in i + 1..self.m {
                let v = rewards[s].plus(&big_m[i].plus(&big_m[j]).half());
                s += 1;
                best = Some(match best {
                    Some(b) => b.min_with(v),
                    None => v,
                });
            }
        }
        best.expect("m ≥ 2")
    }
}

impl<T: Scalar> Operator<T> for DenseOperator<T> {
    fn dim(&self) -> usize {
        self.n
    }

    fn apply_into(&self, x: &[T], out: &mut [T]) {
        let mut big_m = vec![T::neg_inf(); self.m];
        for (k, xk) in x.iter().enumerate() {
            let row = &self.diag[k * self.m..(k + 1) * self.m];
            for (mi, d) in big_m.iter_mut().zip(row) {
                let cand = d.plus(xk);
                if cand > *mi {
                    *mi = cand;
                }
            }
        }
        if self.n * self.m * self.m >= PARALLEL_WORK {
            out.par_iter_mut().enumerate().for_each(|(k, o)| *o = self.min_value(k, &big_m));
        } else {
            for (k, o) in out.iter_mut().enumerate() {
                *o = self.min_value(k, &big_m);
            }
        }
    }
}

/// Verdict and cost of value iteration on one random instance.
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub iterations: u64,
    pub seconds: f64,
}

/// Runs value iteration on an instance, in `f64` or exactly.
pub fn run_instance(inst: &RandomInstance, eps: &Rational, max_iters: u64, exact: bool) -> Result<RunOutcome> {
    let raw = if exact {
        let op = inst.operator::<ExtReal>()?;
        let r = value_iteration(&op, &ExtReal::Finite(eps.clone()), max_iters);
        (r.verdict, r.iterations, r.elapsed_s)
    } else {
        let op = inst.operator::<f64>()?;
        let r = value_iteration(&op, &to_f64(eps), max_iters);
        (r.verdict, r.iterations, r.elapsed_s)
    };
    Ok(RunOutcome { verdict: raw.0, iterations: raw.1, seconds: raw.2 })
}

/// A seed for sample `sample` of cell `(n, m)`, independent of the order in
/// which cells are processed.
pub fn sample_seed(master: u64, n: usize, m: usize, sample: usize) -> u64 {
    let mut state = master;
    for word in [n as u64, m as u64, sample as u64] {
        state = splitmix64(state ^ splitmix64(word));
    }
    state
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Debug)]
pub struct SweepOptions {
    pub samples: usize,
    pub epsilon: Rational,
    pub max_iters: u64,
    pub seed: u64,
    pub grid: u64,
    pub exact: bool,
    /// Report wall-clock times; without it the time column is zero and the
    /// output is reproducible byte for byte.
    pub timing: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            samples: 10,
            epsilon: Rational::new(1.into(), 100_000_000.into()),
            max_iters: 1_000_000,
            seed: 0,
            grid: DEFAULT_GRID,
            exact: false,
            timing: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhaseRow {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub feasible_ratio: f64,
    pub indeterminate: usize,
    pub mean_iters: f64,
    pub mean_time_s: f64,
}

pub const PHASE_HEADER: &str = "n,m,samples,feasible_ratio,indeterminate,mean_iters,mean_time_s";

impl PhaseRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.n,
            self.m,
            self.samples,
            self.feasible_ratio,
            self.indeterminate,
            self.mean_iters,
            self.mean_time_s
        )
    }
}

fn cell_outcomes(n: usize, m: usize, opts: &SweepOptions) -> Result<Vec<RunOutcome>> {
    (0..opts.samples)
        .into_par_iter()
        .map(|s| {
            let spec = GenSpec { n, m, seed: sample_seed(opts.seed, n, m, s), grid: opts.grid };
            run_instance(&gen_random(&spec)?, &opts.epsilon, opts.max_iters, opts.exact)
        })
        .collect()
}

/// One row per `(n, m)` cell, `n` outermost.
pub fn phase_diagram(n_list: &[usize], m_list: &[usize], opts: &SweepOptions) -> Result<Vec<PhaseRow>> {
    if opts.samples == 0 {
        return Err(Error::validation("at least one sample per cell is required"));
    }
    let mut rows = Vec::with_capacity(n_list.len() * m_list.len());
    for &n in n_list {
        for &m in m_list {
            let outcomes = cell_outcomes(n, m, opts)?;
            let count = outcomes.len() as f64;
            let feasible = outcomes.iter().filter(|o| o.verdict == Verdict::Feasible).count();
            let indeterminate = outcomes.iter().filter(|o| o.verdict == Verdict::Indeterminate).count();
            let iters: u64 = outcomes.iter().map(|o| o.iterations).sum();
            let time: f64 = outcomes.iter().map(|o| o.seconds).sum();
            rows.push(PhaseRow {
                n,
                m,
                samples: opts.samples,
                feasible_ratio: feasible as f64 / count,
                indeterminate,
                mean_iters: iters as f64 / count,
                mean_time_s: if opts.timing { time / count } else { 0.0 },
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub samples: usize,
    pub mean_time_s: f64,
    pub mean_iters: f64,
    pub max_iters: u64,
    pub feasible: usize,
    pub infeasible: usize,
    pub indeterminate: usize,
}

pub const BENCH_HEADER: &str = "n,m,samples,mean_time_s,mean_iters,max_iters,feasible,infeasible,indeterminate";

impl BenchRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{:.6},{},{},{},{},{}",
            self.n,
            self.m,
            self.samples,
            self.mean_time_s,
            self.mean_iters,
            self.max_iters,
            self.feasible,
            self.infeasible,
            self.indeterminate
        )
    }
}

/// Timing table. Samples run one after the other so that timings are not
/// disturbed; each instance is timed three times and the median kept.
pub fn benchmark(sizes: &[(usize, usize)], opts: &SweepOptions) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::with_capacity(sizes.len());
    for &(n, m) in sizes {
        let mut times = Vec::with_capacity(opts.samples);
        let mut iters = Vec::with_capacity(opts.samples);
        let mut verdicts = Vec::with_capacity(opts.samples);
        for s in 0..opts.samples {
            let spec = GenSpec { n, m, seed: sample_seed(opts.seed, n, m, s), grid: opts.grid };
            let inst = gen_random(&spec)?;
            let mut runs = Vec::with_capacity(3);
            let mut last = None;
            for _ in 0..3 {
                let start = Instant::now();
                let outcome = run_instance(&inst, &opts.epsilon, opts.max_iters, opts.exact)?;
                runs.push(start.elapsed().as_secs_f64());
                last = Some(outcome);
            }
            runs.sort_by(f64::total_cmp);
            let outcome = last.expect("three runs");
            times.push(runs[1]);
            iters.push(outcome.iterations);
            verdicts.push(outcome.verdict);
        }
        let count = opts.samples.max(1) as f64;
        rows.push(BenchRow {
            n,
            m,
            samples: opts.samples,
            mean_time_s: if opts.timing { times.iter().sum::<f64>() / count } else { 0.0 },
            mean_iters: iters.iter().sum::<u64>() as f64 / count,
            max_iters: iters.iter().copied().max().unwrap_or(0),
            feasible: verdicts.iter().filter(|v| **v == Verdict::Feasible).count(),
            infeasible: verdicts.iter().filter(|v| **v == Verdict::Infeasible).count(),
            indeterminate: verdicts.iter().filter(|v| **v == Verdict::Indeterminate).count(),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::game_from_pencil;
    use crate::shapley::{structural_constant_value_check, CompiledGame, Ergodicity};

    #[test]
    fn generation_is_deterministic() {
        let spec = GenSpec::new(4, 3, 7);
        assert_eq!(gen_random(&spec).unwrap(), gen_random(&spec).unwrap());
        assert_ne!(gen_random(&spec).unwrap(), gen_random(&GenSpec::new(4, 3, 8)).unwrap());
    }

    #[test]
    fn generated_pencils_are_dense_metzler() {
        let p = gen_random(&GenSpec { n: 3, m: 4, seed: 1, grid: 8 }).unwrap().to_pencil();
        assert!(p.is_metzler());
        assert_eq!(structural_constant_value_check(&p), Ergodicity::Guaranteed);
        for q in p.matrices() {
            for (i, j, v) in q.entries() {
                assert_eq!(v.is_positive(), i == j);
                let modulus = v.modulus_ref().unwrap();
                assert!(*modulus >= Rational::from_integer(0.into()));
                assert!(*modulus <= Rational::from_integer(1.into()));
            }
        }
    }

    #[test]
    fn dense_operator_matches_game_operator() {
        let inst = gen_random(&GenSpec { n: 5, m: 4, seed: 3, grid: 16 }).unwrap();
        let game = game_from_pencil(&inst.to_pencil()).unwrap();
        let x: Vec<ExtReal> = (0..5).map(|k| ExtReal::from(k as i64 - 2)).collect();
        let dense = inst.operator::<ExtReal>().unwrap().apply(&x);
        let compiled = CompiledGame::<ExtReal>::new(&game).apply(&x);
        assert_eq!(dense, compiled);
    }

    #[test]
    fn single_sample_ratio_is_binary() {
        let opts = SweepOptions { samples: 1, timing: false, ..SweepOptions::default() };
        let rows = phase_diagram(&[3], &[2, 5], &opts).unwrap();
        assert_eq!(rows.len(), 2);
        for row in rows {
            assert!(row.feasible_ratio == 0.0 || row.feasible_ratio == 1.0);
        }
    }

    #[test]
    fn sweeps_are_reproducible() {
        let opts = SweepOptions { samples: 3, timing: false, ..SweepOptions::default() };
        let a = phase_diagram(&[4], &[2, 3, 6], &opts).unwrap();
        let b = phase_diagram(&[4], &[2, 3, 6], &opts).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_size_list() {
        assert!(benchmark(&[], &SweepOptions::default()).unwrap().is_empty());
    }

    #[test]
    fn single_row_needs_two_rows() {
        let inst = gen_random(&GenSpec::new(2, 1, 0)).unwrap();
        assert!(inst.operator::<f64>().is_err());
    }
}
