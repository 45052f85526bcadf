//! Tropical matrix pencils and the tropical spectrahedra they define.
//!
//! A pencil is a list of `n` symmetric `m×m` matrices over [`SignedTrop`].
//! A point `x ∈ (ℚ ∪ {−∞})ⁿ` belongs to the tropical spectrahedron when the
//! tropical minors of order 1 and 2 of `x₁Q⁽¹⁾ ⊕ … ⊕ xₙQ⁽ⁿ⁾` are
//! "nonnegative"; for Metzler pencils this is a pair of max-plus inequality
//! families, reinforced by a margin `λ` in [`membership_metzler`].

use std::collections::BTreeSet;

use num_traits::Zero;

use crate::error::{Error, Result};
use crate::rational::Rational;
use crate::tropical::{ExtReal, SignedTrop, TropPolynomial};

/// Symmetric matrix stored as its upper triangle, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymMatrix {
    order: usize,
    upper: Vec<SignedTrop>,
}

impl SymMatrix {
    pub fn new(order: usize) -> Self {
        Self { order, upper: vec![SignedTrop::NegInf; order * (order + 1) / 2] }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        assert!(j < self.order, "index ({i}, {j}) out of range for order {}", self.order);
        i * (2 * self.order - i + 1) / 2 + (j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> &SignedTrop {
        &self.upper[self.index(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: SignedTrop) {
        let idx = self.index(i, j);
        self.upper[idx] = value;
    }

    /// Entries different from `−∞`, as `(i, j, value)` with `i ≤ j`.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, &SignedTrop)> + '_ {
        (0..self.order)
            .flat_map(move |i| (i..self.order).map(move |j| (i, j)))
            .zip(&self.upper)
            .filter(|(_, v)| !v.is_neg_inf())
            .map(|((i, j), v)| (i, j, v))
    }

    fn first_positive_off_diagonal(&self) -> Option<(usize, usize)> {
        self.entries().find(|(i, j, v)| i != j && v.is_positive()).map(|(i, j, _)| (i, j))
    }

    pub fn is_metzler(&self) -> bool {
        self.first_positive_off_diagonal().is_none()
    }

    fn negated(&self) -> Self {
        Self { order: self.order, upper: self.upper.iter().map(|v| -v).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pencil {
    m: usize,
    matrices: Vec<SymMatrix>,
    affine: bool,
}

impl Pencil {
    pub fn new(m: usize, matrices: Vec<SymMatrix>, affine: bool) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::validation("a pencil needs at least one matrix (n = 0)"));
        }
        if m == 0 {
            return Err(Error::validation("matrices must have order at least 1 (m = 0)"));
        }
        if let Some(k) = matrices.iter().position(|q| q.order() != m) {
            return Err(Error::validation(format!(
                "matrix {} has order {}, expected {m}",
                k + 1,
                matrices[k].order()
            )));
        }
        Ok(Self { m, matrices, affine })
    }

    /// Number of variables (matrices).
    pub fn n(&self) -> usize {
        self.matrices.len()
    }

    /// Order of the matrices.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn is_affine(&self) -> bool {
        self.affine
    }

    pub fn with_affine(mut self, affine: bool) -> Self {
        self.affine = affine;
        self
    }

    pub fn matrices(&self) -> &[SymMatrix] {
        &self.matrices
    }

    pub fn matrix(&self, k: usize) -> &SymMatrix {
        &self.matrices[k]
    }

    pub fn entry(&self, k: usize, i: usize, j: usize) -> &SignedTrop {
        self.matrices[k].get(i, j)
    }

    pub fn is_metzler(&self) -> bool {
        self.matrices.iter().all(SymMatrix::is_metzler)
    }

    pub fn ensure_metzler(&self) -> Result<()> {
        for (k, q) in self.matrices.iter().enumerate() {
            if let Some((i, j)) = q.first_positive_off_diagonal() {
                return Err(Error::NotMetzler { matrix: k + 1, i: i + 1, j: j + 1 });
            }
        }
        Ok(())
    }

    /// True when no entry of any matrix is `−∞`.
    pub fn all_entries_finite(&self) -> bool {
        self.matrices.iter().all(|q| q.upper.iter().all(|v| !v.is_neg_inf()))
    }

    /// `Q_ij⁺(x)`: max over `k` with `Q⁽ᵏ⁾_ij` positive of `|Q⁽ᵏ⁾_ij| + x_k`.
    pub fn pos_part(&self, i: usize, j: usize, x: &[ExtReal]) -> ExtReal {
        self.part(i, j, x, SignedTrop::is_positive)
    }

    /// `Q_ij⁻(x)`, the mirror of [`Pencil::pos_part`].
    pub fn neg_part(&self, i: usize, j: usize, x: &[ExtReal]) -> ExtReal {
        self.part(i, j, x, SignedTrop::is_negative)
    }

    fn part(&self, i: usize, j: usize, x: &[ExtReal], keep: fn(&SignedTrop) -> bool) -> ExtReal {
        let mut best = ExtReal::NegInf;
        for (q, xk) in self.matrices.iter().zip(x) {
            let v = q.get(i, j);
            if !keep(v) {
                continue;
            }
            if let (Some(modulus), ExtReal::Finite(xv)) = (v.modulus_ref(), xk) {
                let cand = ExtReal::Finite(modulus + xv);
                if cand > best {
                    best = cand;
                }
            }
        }
        best
    }

    /// The linear form `Q_ij(X) = Q⁽¹⁾_ij ⊙ X₁ ⊕ … ⊕ Q⁽ⁿ⁾_ij ⊙ Xₙ`.
    pub fn entry_polynomial(&self, i: usize, j: usize) -> TropPolynomial {
        let n = self.n();
        let mut p = TropPolynomial::new(n);
        for k in 0..n {
            let v = self.entry(k, i, j);
            if !v.is_neg_inf() {
                let mut e = vec![0; n];
                e[k] = 1;
                p.add_term(e, v.clone()).expect("one term per monomial");
            }
        }
        p
    }

    fn check_dimension(&self, x: &[ExtReal]) -> Result<()> {
        if x.len() != self.n() {
            return Err(Error::validation(format!(
                "point has {} coordinates, pencil has {} variables",
                x.len(),
                self.n()
            )));
        }
        Ok(())
    }
}

/// A point of `(ℚ ∪ {−∞})ⁿ`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TropPoint(pub Vec<ExtReal>);

impl TropPoint {
    pub fn trivial(n: usize) -> Self {
        Self(vec![ExtReal::NegInf; n])
    }

    pub fn support(&self) -> BTreeSet<usize> {
        self.0.iter().enumerate().filter(|(_, x)| x.is_finite()).map(|(k, _)| k).collect()
    }

    pub fn is_trivial(&self) -> bool {
        self.0.iter().all(|x| !x.is_finite())
    }
}

impl std::ops::Deref for TropPoint {
    type Target = [ExtReal];

    fn deref(&self) -> &[ExtReal] {
        &self.0
    }
}

fn twice(x: &ExtReal) -> ExtReal {
    x + x
}

/// Membership in the reinforced Metzler spectrahedron `𝒮_λ`:
///
/// * `Q_ii⁺(x) ≥ λ + Q_ii⁻(x)` for every `i`;
/// * `Q_ii⁺(x) + Q_jj⁺(x) ≥ 2(λ + Q_ij(x))` for every `i < j`.
pub fn membership_metzler(p: &Pencil, x: &[ExtReal], lambda: &Rational) -> Result<bool> {
    p.ensure_metzler()?;
    p.check_dimension(x)?;
    let diag_pos: Vec<ExtReal> = (0..p.m()).map(|i| p.pos_part(i, i, x)).collect();
    for i in 0..p.m() {
        if diag_pos[i] < p.neg_part(i, i, x).shifted(lambda) {
            return Ok(false);
        }
    }
    for i in 0..p.m() {
        for j in i + 1..p.m() {
            let off = p.neg_part(i, j, x).shifted(lambda);
            if &diag_pos[i] + &diag_pos[j] < twice(&off) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Membership for an arbitrary sign pattern, with the vanishing disjunct
/// `Q_ij⁺(x) = Q_ij⁻(x)` on off-diagonal entries.
pub fn membership_general(p: &Pencil, x: &[ExtReal]) -> Result<bool> {
    p.check_dimension(x)?;
    let diag_pos: Vec<ExtReal> = (0..p.m()).map(|i| p.pos_part(i, i, x)).collect();
    for i in 0..p.m() {
        if diag_pos[i] < p.neg_part(i, i, x) {
            return Ok(false);
        }
    }
    for i in 0..p.m() {
        for j in i + 1..p.m() {
            let plus = p.pos_part(i, j, x);
            let minus = p.neg_part(i, j, x);
            if plus == minus {
                continue;
            }
            let top = plus.max(minus);
            if &diag_pos[i] + &diag_pos[j] < twice(&top) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// A Metzler pencil whose spectrahedron projects onto that of a general one.
///
/// Variables are the original `x₁…xₙ` followed by one slack `y_ij` per pair
/// `i < j` (lexicographic). Rows are laid out in three diagonal blocks:
///
/// 1. an `m×m` block holding the original diagonals on `x` and `⊖0` on
///    `y_ij` at position `(i, j)`; it encodes the order-1 constraints and
///    `Q_ii⁺(x) ⊙ Q_jj⁺(x) ≥ y_ij^{⊙2}`;
/// 2. one `1×1` row per pair for `y_ij ⊕ Q_ij⁺(x) ≥ Q_ij⁻(x)`;
/// 3. one `1×1` row per pair for `y_ij ⊕ Q_ij⁻(x) ≥ Q_ij⁺(x)`.
///
/// The resulting order is `m + m(m−1) = m²`.
#[derive(Clone, Debug)]
pub struct MetzlerLift {
    pub pencil: Pencil,
    pub original_vars: usize,
    /// `(i, j)` of each slack variable, in variable order after `x`.
    pub slack_pairs: Vec<(usize, usize)>,
}

pub fn metzlerize(p: &Pencil) -> MetzlerLift {
    let m = p.m();
    let n = p.n();
    let pairs: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))).collect();
    let order = m + 2 * pairs.len();
    let zero = || Rational::zero();

    let mut matrices = Vec::with_capacity(n + pairs.len());
    for q in p.matrices() {
        let mut out = SymMatrix::new(order);
        for i in 0..m {
            out.set(i, i, q.get(i, i).clone());
        }
        for (s, &(i, j)) in pairs.iter().enumerate() {
            let v = q.get(i, j);
            out.set(m + s, m + s, v.clone());
            out.set(m + pairs.len() + s, m + pairs.len() + s, -v);
        }
        matrices.push(out);
    }
    for (s, &(i, j)) in pairs.iter().enumerate() {
        let mut out = SymMatrix::new(order);
        out.set(i, j, SignedTrop::Neg(zero()));
        out.set(m + s, m + s, SignedTrop::Pos(zero()));
        out.set(m + pairs.len() + s, m + pairs.len() + s, SignedTrop::Pos(zero()));
        matrices.push(out);
    }
    MetzlerLift {
        pencil: Pencil::new(order, matrices, p.is_affine()).expect("valid dimensions"),
        original_vars: n,
        slack_pairs: pairs,
    }
}

impl MetzlerLift {
    /// Slack values built from `x`: `y_ij = −∞` when `Q_ij⁺(x) = Q_ij⁻(x)`,
    /// otherwise `Q_ij⁺(x) ⊕ Q_ij⁻(x)`. Returns the full point `(x, y)`.
    pub fn witness(&self, original: &Pencil, x: &[ExtReal]) -> Vec<ExtReal> {
        let mut point = x.to_vec();
        for &(i, j) in &self.slack_pairs {
            let plus = original.pos_part(i, j, x);
            let minus = original.neg_part(i, j, x);
            point.push(if plus == minus { ExtReal::NegInf } else { plus.max(minus) });
        }
        point
    }

    pub fn project(&self, point: &[ExtReal]) -> Vec<ExtReal> {
        point[..self.original_vars].to_vec()
    }
}

/// One elimination step performed while enforcing the game assumptions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reduction {
    /// Variables with a negative diagonal on a row that has no positive one.
    NegativeDiagonal { row: usize, variables: Vec<usize> },
    /// A row (and column) that is `−∞` in every remaining matrix.
    EmptyRow { row: usize },
    /// Variables with a negative off-diagonal entry on a row that has no
    /// diagonal entry at all.
    UnboundedOffDiagonal { row: usize, variables: Vec<usize> },
}

#[derive(Clone, Debug)]
pub enum NormalizeOutcome {
    /// The spectrahedron contains the unit-support point of `variable`
    /// (original index), whose matrix has no negative entry.
    Nontrivial { variable: usize },
    /// Every variable is forced to `−∞`.
    Trivial,
    Reduced(ReducedPencil),
}

#[derive(Clone, Debug)]
pub struct ReducedPencil {
    pub pencil: Pencil,
    /// Original index of each remaining variable.
    pub variables: Vec<usize>,
    /// Original index of each remaining row.
    pub rows: Vec<usize>,
}

impl ReducedPencil {
    /// Embeds a point of the reduced pencil back into the original variables.
    pub fn lift_point(&self, original_n: usize, x: &[ExtReal]) -> Vec<ExtReal> {
        let mut out = vec![ExtReal::NegInf; original_n];
        for (v, &k) in x.iter().zip(&self.variables) {
            out[k] = v.clone();
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Normalization {
    pub outcome: NormalizeOutcome,
    /// Indices in the trace refer to the original pencil.
    pub trace: Vec<Reduction>,
}

struct ActiveSets {
    vars: Vec<bool>,
    rows: Vec<bool>,
    trace: Vec<Reduction>,
}

impl ActiveSets {
    fn var_indices(&self) -> Vec<usize> {
        (0..self.vars.len()).filter(|&k| self.vars[k]).collect()
    }

    fn row_indices(&self) -> Vec<usize> {
        (0..self.rows.len()).filter(|&i| self.rows[i]).collect()
    }

    fn restrict(&self, p: &Pencil) -> Option<ReducedPencil> {
        let variables = self.var_indices();
        let rows = self.row_indices();
        if variables.is_empty() || rows.is_empty() {
            return None;
        }
        let matrices = variables
            .iter()
            .map(|&k| {
                let mut q = SymMatrix::new(rows.len());
                for (a, &i) in rows.iter().enumerate() {
                    for (b, &j) in rows.iter().enumerate().skip(a) {
                        q.set(a, b, p.entry(k, i, j).clone());
                    }
                }
                q
            })
            .collect();
        let pencil = Pencil::new(rows.len(), matrices, false).expect("nonempty restriction");
        Some(ReducedPencil { pencil, variables, rows })
    }

    fn has_negative(&self, p: &Pencil, k: usize) -> bool {
        p.matrix(k).entries().any(|(i, j, v)| v.is_negative() && self.rows[i] && self.rows[j])
    }
}

/// Applies the three row-level reductions to a fixpoint. When
/// `stop_on_free` is set, a variable whose matrix has no negative entry
/// ends the process.
fn reduce(p: &Pencil, stop_on_free: bool) -> (ActiveSets, Option<usize>) {
    let mut s = ActiveSets { vars: vec![true; p.n()], rows: vec![true; p.m()], trace: Vec::new() };
    'outer: loop {
        if stop_on_free {
            if let Some(k) = s.var_indices().into_iter().find(|&k| !s.has_negative(p, k)) {
                return (s, Some(k));
            }
        }
        if s.var_indices().is_empty() {
            return (s, None);
        }
        for i in s.row_indices() {
            let vars = s.var_indices();
            if vars.iter().any(|&k| p.entry(k, i, i).is_positive()) {
                continue;
            }
            let negative_diag: Vec<usize> =
                vars.iter().copied().filter(|&k| p.entry(k, i, i).is_negative()).collect();
            if !negative_diag.is_empty() {
                for &k in &negative_diag {
                    s.vars[k] = false;
                }
                s.trace.push(Reduction::NegativeDiagonal { row: i, variables: negative_diag });
                continue 'outer;
            }
            let off: Vec<usize> = vars
                .iter()
                .copied()
                .filter(|&k| {
                    s.row_indices().into_iter().any(|j| j != i && !p.entry(k, i, j).is_neg_inf())
                })
                .collect();
            if off.is_empty() {
                s.rows[i] = false;
                s.trace.push(Reduction::EmptyRow { row: i });
            } else {
                for &k in &off {
                    s.vars[k] = false;
                }
                s.trace.push(Reduction::UnboundedOffDiagonal { row: i, variables: off });
            }
            continue 'outer;
        }
        return (s, None);
    }
}

/// Reduces a Metzler pencil to one on which the game construction is defined
/// (every matrix has a negative entry, every row a positive diagonal entry),
/// preserving whether the spectrahedron is trivial.
pub fn normalize(p: &Pencil) -> Result<Normalization> {
    p.ensure_metzler()?;
    let (sets, free) = reduce(p, true);
    let outcome = match free {
        Some(variable) => NormalizeOutcome::Nontrivial { variable },
        None => match sets.restrict(p) {
            Some(reduced) => NormalizeOutcome::Reduced(reduced),
            None => NormalizeOutcome::Trivial,
        },
    };
    Ok(Normalization { outcome, trace: sets.trace })
}

/// Row reductions only. Every eliminated variable is `−∞` on the whole
/// spectrahedron, so the set of supports is preserved; variables without a
/// negative entry are kept. Returns `None` when no variable survives.
pub(crate) fn reduce_preserving_supports(p: &Pencil) -> Result<SupportReduction> {
    p.ensure_metzler()?;
    let (sets, _) = reduce(p, false);
    let variables = sets.var_indices();
    Ok(if variables.is_empty() {
        SupportReduction::AllEliminated
    } else if sets.row_indices().is_empty() {
        SupportReduction::Unconstrained { variables }
    } else {
        SupportReduction::Reduced(sets.restrict(p).expect("nonempty"))
    })
}

pub(crate) enum SupportReduction {
    AllEliminated,
    /// No row survived: every remaining variable is free.
    Unconstrained { variables: Vec<usize> },
    Reduced(ReducedPencil),
}

/// Where a variable of a homogenized pencil comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VarOrigin {
    pub source: usize,
    /// `true` for the `z` copy of a sign-free variable (matrix negated).
    pub negated: bool,
}

#[derive(Clone, Debug)]
pub struct Homogenized {
    pub pencil: Pencil,
    /// Index of the coordinate standing for the affine term, if any.
    pub distinguished: Option<usize>,
    pub origin: Vec<VarOrigin>,
}

/// Rewrites an affine and/or sign-unconstrained problem as a conic one over
/// nonnegative variables. A sign-free `x_k` becomes `y_k − z_k`: its matrix
/// is kept for `y_k` and a negated copy is appended for `z_k`. For an affine
/// pencil, matrix 0 becomes the matrix of the distinguished variable 0.
pub fn homogenize(p: &Pencil, sign_free: &BTreeSet<usize>) -> Result<Homogenized> {
    if let Some(&k) = sign_free.iter().find(|&&k| k >= p.n()) {
        return Err(Error::validation(format!("sign-free variable {} does not exist", k + 1)));
    }
    if p.is_affine() && sign_free.contains(&0) {
        return Err(Error::validation("the affine coordinate cannot be sign-free"));
    }
    let mut matrices = p.matrices().to_vec();
    let mut origin: Vec<VarOrigin> =
        (0..p.n()).map(|source| VarOrigin { source, negated: false }).collect();
    for &k in sign_free {
        matrices.push(p.matrix(k).negated());
        origin.push(VarOrigin { source: k, negated: true });
    }
    Ok(Homogenized {
        pencil: Pencil::new(p.m(), matrices, false)?,
        distinguished: p.is_affine().then_some(0),
        origin,
    })
}
