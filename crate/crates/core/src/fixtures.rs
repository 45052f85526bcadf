//! Small hand-made instances used in tests, benches and documentation.

use crate::game::{MaxAction, MinAction, StochGame};
use crate::pencil::{Pencil, SymMatrix};
use crate::rational::{int, ratio};
use crate::tropical::SignedTrop;

/// Three 3×3 Metzler matrices whose spectrahedron is described by
///
/// ```text
/// max(−1 + x₁, −5/4 + x₃) ≥ x₂
/// max(x₁ + x₃, −1/4 + 2x₃) ≥ 2x₁
/// x₂ ≥ −7/4 + x₃
/// max(5/4 + x₁ + x₂, 1 + x₂ + x₃) ≥ 2x₃
/// ```
pub fn running_example() -> Pencil {
    let mut q1 = SymMatrix::new(3);
    q1.set(0, 1, SignedTrop::Neg(int(0)));
    q1.set(1, 1, SignedTrop::Pos(int(-1)));

    let mut q2 = SymMatrix::new(3);
    q2.set(1, 1, SignedTrop::Neg(int(0)));
    q2.set(2, 2, SignedTrop::Pos(ratio(9, 4)));

    let mut q3 = SymMatrix::new(3);
    q3.set(0, 0, SignedTrop::Pos(int(1)));
    q3.set(0, 2, SignedTrop::Neg(ratio(3, 4)));
    q3.set(1, 1, SignedTrop::Pos(ratio(-5, 4)));
    q3.set(1, 2, SignedTrop::Neg(int(0)));

    Pencil::new(3, vec![q1, q2, q3], false).expect("valid pencil")
}

/// Four Min and three Max states. Its minimal dominions are `{1}`, `{3}`,
/// `{4}` and `{2, 3, 4}` (1-based) and `{3}` is its only winning dominion.
pub fn dominion_game() -> StochGame {
    let min_actions = vec![
        vec![MinAction::new(0, 0, int(0))],
        vec![MinAction::new(1, 2, int(0))],
        vec![MinAction::new(1, 1, int(2))],
        vec![MinAction::new(2, 2, int(0))],
    ];
    let max_actions = vec![
        vec![MaxAction { to: 0, reward: int(-1) }, MaxAction { to: 1, reward: int(0) }],
        vec![MaxAction { to: 2, reward: int(0) }],
        vec![MaxAction { to: 3, reward: int(-1) }],
    ];
    StochGame::new(min_actions, max_actions).expect("valid game")
}
