//! Fixtures shared by the benchmarks.

use zakharov::evolve::{moving_gaussian, radial_gaussian};
use zakharov::{Grid, WaveState};

/// Radial Gaussian with a coupled density well, `points` nodes on `[0, 12]`.
pub fn radial_state(dim: usize, points: usize) -> WaveState {
    let grid = Grid::radial(dim, 12.0, points).expect("valid radial grid");
    radial_gaussian(grid, 1.5, 1.0, 0.5)
}

/// Moving Gaussian on a `points^dim` periodic box of side 20.
pub fn periodic_state(dim: usize, points: usize) -> WaveState {
    let grid = Grid::periodic(dim, 20.0, points).expect("valid periodic grid");
    let k = vec![0.5; dim];
    moving_gaussian(grid, 1.0, 1.5, &k, &[], 0.5).expect("periodic grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_finite() {
        assert!(radial_state(3, 128).is_finite());
        assert!(periodic_state(2, 32).is_finite());
    }
}
