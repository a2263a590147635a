//! Small named games used across tests, benches and documentation.

use crate::exact::rational::int_matrix;

use super::types::Game;

/// Leader `[[4,1],[2,3]]`, follower `[[0,1],[1,0]]`: maximin 5/2 at (1/4, 3/4), SSE value 3.
pub fn g1() -> Game {
    Game::new(
        int_matrix(&[&[4, 1], &[2, 3]]),
        int_matrix(&[&[0, 1], &[1, 0]]),
    )
    .expect("fixture is well formed")
}

/// A 3×3 game with interior maximin and distinct column maxima.
pub fn g3() -> Game {
    Game::new(
        int_matrix(&[&[6, 1, 2], &[0, 5, 3], &[2, 2, 7]]),
        int_matrix(&[&[1, 0, 2], &[3, 1, 0], &[0, 2, 1]]),
    )
    .expect("fixture is well formed")
}
