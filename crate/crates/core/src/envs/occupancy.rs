//! Temporally decaying probabilistic occupancy grid and the swept-volume
//! collision probability used to price motions near dynamic obstacles.

#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    pub dims: (usize, usize, usize),
    cells: Vec<f64>,
    /// Decay rate constant in (0, 1).
    pub gamma_decay: f64,
    /// Decay coefficient scaling the time step in the exponent.
    pub coeff: f64,
}

impl OccupancyGrid {
    pub fn new(dims: (usize, usize, usize), gamma_decay: f64, coeff: f64) -> Self {
        assert!(gamma_decay > 0.0 && gamma_decay < 1.0);
        OccupancyGrid { dims, cells: vec![0.0; dims.0 * dims.1 * dims.2], gamma_decay, coeff }
    }

    fn idx(&self, (x, y, z): (usize, usize, usize)) -> usize {
        debug_assert!(x < self.dims.0 && y < self.dims.1 && z < self.dims.2);
        (z * self.dims.1 + y) * self.dims.0 + x
    }

    pub fn get(&self, cell: (usize, usize, usize)) -> f64 {
        self.cells[self.idx(cell)]
    }

    pub fn set(&mut self, cell: (usize, usize, usize), p: f64) {
        assert!((0.0..=1.0).contains(&p));
        let i = self.idx(cell);
        self.cells[i] = p;
    }

    /// Advances time by `dt`: every occupancy is multiplied by
    /// `gamma_decay^(coeff * dt)`.
    pub fn decay(&mut self, dt: f64) {
        assert!(dt >= 0.0);
        let factor = self.gamma_decay.powf(self.coeff * dt);
        for c in &mut self.cells {
            *c *= factor;
        }
    }

    /// Resets the cells observed occupied in the current frame to 1.
    pub fn observe_occupied(&mut self, cells: &[(usize, usize, usize)]) {
        for &c in cells {
            let i = self.idx(c);
            self.cells[i] = 1.0;
        }
    }

    pub fn max_occupancy(&self) -> f64 {
        self.cells.iter().copied().fold(0.0, f64::max)
    }
}

/// Collision probability of a trajectory: one minus the product, over every
/// time step and every cell swept at that step, of the per-cell free
/// probabilities.
pub fn collision_probability(frames: &[(&OccupancyGrid, &[(usize, usize, usize)])]) -> f64 {
    let mut free = 1.0_f64;
    for (grid, swept) in frames {
        for &cell in swept.iter() {
            free *= 1.0 - grid.get(cell);
        }
    }
    1.0 - free
}

/// Same computation over raw probabilities, for callers that track swept
/// occupancies directly.
pub fn collision_probability_raw(probabilities_per_step: &[Vec<f64>]) -> f64 {
    let mut free = 1.0_f64;
    for step in probabilities_per_step {
        for &p in step {
            free *= 1.0 - p;
        }
    }
    1.0 - free
}
