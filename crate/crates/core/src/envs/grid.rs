//! Stochastic grid world: every move can kill the agent (absorbing `Dead`)
//! or scatter it to a random adjacent cell, with per-cell probabilities.
//! Beliefs are delta functions; the world is fully observed and exercises
//! model learning rather than state estimation.

use crate::belief::{BeliefHandle, EnvError, Environment, SimOutcome};
use crate::detplanner::PlanHeuristic;
use crate::rng::Rng;
use crate::solver::{ExplicitAction, ExplicitMdp};
use crate::symbolic::{AbstractBelief, OpId, Problem, PropId};
use std::collections::HashMap;
use std::fmt::Write as _;
use thiserror::Error;

pub const DIRS: [(&str, i32, i32); 4] = [("n", 0, -1), ("s", 0, 1), ("e", 1, 0), ("w", -1, 0)];

#[derive(Debug, Clone)]
pub struct GridWorld {
    pub width: usize,
    pub height: usize,
    /// Per-cell probability of the absorbing death outcome, row-major.
    pub p_death: Vec<f64>,
    /// Per-cell probability of moving to a uniformly random adjacent cell.
    pub p_random: Vec<f64>,
    pub start: (usize, usize),
    pub goal: (usize, usize),
}

#[derive(Debug, Error)]
pub enum GridSpecError {
    #[error("line {0}: {1}")]
    Parse(usize, String),
    #[error("cell ({0}, {1}) out of bounds")]
    OutOfBounds(usize, usize),
    #[error("cell {0}: p_death + p_random must be at most 1")]
    BadProbabilities(usize),
}

/// Outcome of one movement: a landing cell or death.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellOutcome {
    Cell(usize),
    Dead,
}

impl GridWorld {
    pub fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, cell: usize) -> (usize, usize) {
        (cell % self.width, cell / self.width)
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell_name(&self, cell: usize) -> String {
        let (x, y) = self.coords(cell);
        format!("c{x}-{y}")
    }

    /// Valid neighbors in n, s, e, w order.
    pub fn neighbors(&self, cell: usize) -> Vec<usize> {
        let (x, y) = self.coords(cell);
        let mut out = Vec::with_capacity(4);
        for (_, dx, dy) in DIRS {
            let nx = x as i32 + dx;
            let ny = y as i32 + dy;
            if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
                out.push(self.cell(nx as usize, ny as usize));
            }
        }
        out
    }

    /// The cell a deterministic move from `cell` in direction `dir` reaches;
    /// walls clamp to the current cell.
    pub fn intended(&self, cell: usize, dir: usize) -> usize {
        let (x, y) = self.coords(cell);
        let (_, dx, dy) = DIRS[dir];
        let nx = x as i32 + dx;
        let ny = y as i32 + dy;
        if nx >= 0 && ny >= 0 && (nx as usize) < self.width && (ny as usize) < self.height {
            self.cell(nx as usize, ny as usize)
        } else {
            cell
        }
    }

    /// Samples one movement: death with `p_death`, a uniformly random valid
    /// neighbor with `p_random`, otherwise the intended cell.
    pub fn step(&self, cell: usize, dir: usize, seed: u64) -> CellOutcome {
        let mut rng = Rng::new(seed);
        let u = rng.next_f64();
        if u < self.p_death[cell] {
            return CellOutcome::Dead;
        }
        if u < self.p_death[cell] + self.p_random[cell] {
            let ns = self.neighbors(cell);
            return CellOutcome::Cell(ns[rng.below(ns.len())]);
        }
        CellOutcome::Cell(self.intended(cell, dir))
    }

    /// Exact transition distribution of `step`: `(outcome, probability)`
    /// pairs with distinct outcomes, cells ascending and death last.
    pub fn step_distribution(&self, cell: usize, dir: usize) -> Vec<(CellOutcome, f64)> {
        let pd = self.p_death[cell];
        let pr = self.p_random[cell];
        let ns = self.neighbors(cell);
        let mut mass: HashMap<usize, f64> = HashMap::new();
        for &n in &ns {
            *mass.entry(n).or_insert(0.0) += pr / ns.len() as f64;
        }
        *mass.entry(self.intended(cell, dir)).or_insert(0.0) += 1.0 - pd - pr;
        let mut out: Vec<(CellOutcome, f64)> = mass
            .into_iter()
            .filter(|&(_, p)| p > 0.0)
            .map(|(c, p)| (CellOutcome::Cell(c), p))
            .collect();
        out.sort_by_key(|&(c, _)| match c {
            CellOutcome::Cell(i) => i,
            CellOutcome::Dead => usize::MAX,
        });
        if pd > 0.0 {
            out.push((CellOutcome::Dead, pd));
        }
        out
    }

    /// The exact MDP over cells plus an absorbing dead state (the last
    /// index). The goal cell is terminal.
    pub fn true_mdp(&self, gamma: f64) -> ExplicitMdp {
        let n = self.n_cells();
        let dead = n;
        let goal_cell = self.cell(self.goal.0, self.goal.1);
        let mut actions: Vec<Vec<ExplicitAction>> = vec![Vec::new(); n + 1];
        let mut goal = vec![false; n + 1];
        goal[goal_cell] = true;
        for cell in 0..n {
            if cell == goal_cell {
                continue;
            }
            for dir in 0..4 {
                let outcomes = self
                    .step_distribution(cell, dir)
                    .into_iter()
                    .map(|(o, p)| match o {
                        CellOutcome::Cell(c) => (c, p),
                        CellOutcome::Dead => (dead, p),
                    })
                    .collect();
                actions[cell].push(ExplicitAction { op: None, outcomes });
            }
        }
        ExplicitMdp { actions, goal, gamma }
    }

    /// A random instance: per-cell probabilities drawn uniformly from
    /// `(0, p_max]`, start and goal in opposite corners.
    pub fn random(width: usize, height: usize, p_max: f64, seed: u64) -> GridWorld {
        let mut rng = Rng::new(seed);
        let n = width * height;
        let mut p_death = Vec::with_capacity(n);
        let mut p_random = Vec::with_capacity(n);
        for _ in 0..n {
            p_death.push((1.0 - rng.next_f64()) * p_max);
            p_random.push((1.0 - rng.next_f64()) * p_max);
        }
        let mut w = GridWorld {
            width,
            height,
            p_death,
            p_random,
            start: (0, 0),
            goal: (width - 1, height - 1),
        };
        // keep the endpoints survivable
        let s = w.cell(0, 0);
        let g = w.cell(width - 1, height - 1);
        w.p_death[s] = 0.0;
        w.p_death[g] = 0.0;
        w
    }

    /// Parses the text spec: header `W H`, then `W*H` lines of
    /// `p_death,p_random` (row-major), then `start x y` and `goal x y`.
    pub fn parse(text: &str) -> Result<GridWorld, GridSpecError> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .enumerate()
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let bad = |i: usize, m: &str| GridSpecError::Parse(i + 1, m.to_string());

        let (i, header) = lines.next().ok_or_else(|| bad(0, "missing header"))?;
        let mut it = header.split_whitespace();
        let width: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(i, "bad width"))?;
        let height: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| bad(i, "bad height"))?;

        let n = width * height;
        let mut p_death = Vec::with_capacity(n);
        let mut p_random = Vec::with_capacity(n);
        for k in 0..n {
            let (i, line) = lines.next().ok_or_else(|| bad(k + 1, "missing cell row"))?;
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| bad(i, "expected `p_death,p_random`"))?;
            let pd: f64 = a.trim().parse().map_err(|_| bad(i, "bad p_death"))?;
            let pr: f64 = b.trim().parse().map_err(|_| bad(i, "bad p_random"))?;
            if pd + pr > 1.0 || pd < 0.0 || pr < 0.0 {
                return Err(GridSpecError::BadProbabilities(k));
            }
            p_death.push(pd);
            p_random.push(pr);
        }
        let mut start = None;
        let mut goal = None;
        for (i, line) in lines {
            let mut it = line.split_whitespace();
            let key = it.next().unwrap();
            let x: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(i, "bad x"))?;
            let y: usize = it
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| bad(i, "bad y"))?;
            if x >= width || y >= height {
                return Err(GridSpecError::OutOfBounds(x, y));
            }
            match key {
                "start" => start = Some((x, y)),
                "goal" => goal = Some((x, y)),
                _ => return Err(bad(i, "expected `start` or `goal`")),
            }
        }
        Ok(GridWorld {
            width,
            height,
            p_death,
            p_random,
            start: start.ok_or_else(|| bad(0, "missing start"))?,
            goal: goal.ok_or_else(|| bad(0, "missing goal"))?,
        })
    }

    pub fn to_spec(&self) -> String {
        let mut s = format!("{} {}\n", self.width, self.height);
        for c in 0..self.n_cells() {
            let _ = writeln!(s, "{},{}", self.p_death[c], self.p_random[c]);
        }
        let _ = writeln!(s, "start {} {}", self.start.0, self.start.1);
        let _ = writeln!(s, "goal {} {}", self.goal.0, self.goal.1);
        s
    }

    /// The operator-language domain for this grid: one zero-parameter move
    /// schema per (cell, direction), whose uncertain effects cover the cell
    /// itself, its neighbors and death.
    pub fn domain_text(&self) -> String {
        let mut s = String::new();
        for cell in 0..self.n_cells() {
            let (x, y) = self.coords(cell);
            for (dname, _, _) in DIRS {
                let _ = write!(
                    s,
                    "(:action move-{x}-{y}-{dname} :parameters ()\n \
                     :precondition (and (At @{cn}))\n :effects (and (not (At @{cn})))\n \
                     :ueffects (maybe (At @{cn})",
                    cn = self.cell_name(cell)
                );
                for nb in self.neighbors(cell) {
                    let _ = write!(s, " (At @{})", self.cell_name(nb));
                }
                let _ = writeln!(s, " (Dead)))");
            }
        }
        let _ = writeln!(
            s,
            "(:reward (At @{}))",
            self.cell_name(self.cell(self.goal.0, self.goal.1))
        );
        s
    }
}

const DEAD_STATE: u32 = u32::MAX;

/// [`Environment`] over a [`GridWorld`]; concrete beliefs are point states.
pub struct GridEnv {
    world: GridWorld,
    arena: Vec<u32>,
    cell_of_prop: HashMap<PropId, u32>,
    dead_prop: PropId,
    op_moves: Vec<(u32, usize)>, // op id -> (cell, dir)
    goal_xy: (usize, usize),
}

impl GridEnv {
    pub fn world(&self) -> &GridWorld {
        &self.world
    }

    fn state(&self, b: BeliefHandle) -> Result<u32, EnvError> {
        self.arena
            .get(b.0 as usize)
            .copied()
            .ok_or(EnvError::InvalidHandle(b))
    }
}

/// Grounds the grid domain and binds an environment to it.
pub fn build(world: GridWorld) -> Result<(Problem, GridEnv), EnvError> {
    let domain = crate::symbolic::parse_domain(&world.domain_text())
        .map_err(|e| EnvError::Other(e.to_string()))?;
    let pools = vec![(
        "cell".to_string(),
        (0..world.n_cells()).map(|c| world.cell_name(c)).collect(),
    )];
    let problem =
        Problem::new(domain, &pools).map_err(|e| EnvError::Other(e.to_string()))?;
    let goal_xy = world.goal;
    let mut env = GridEnv {
        world,
        arena: Vec::new(),
        cell_of_prop: HashMap::new(),
        dead_prop: 0,
        op_moves: Vec::new(),
        goal_xy,
    };
    env.prepare(&problem)?;
    Ok((problem, env))
}

impl Environment for GridEnv {
    fn name(&self) -> &str {
        "grid"
    }

    fn type_pools(&self) -> Vec<(String, Vec<String>)> {
        vec![(
            "cell".to_string(),
            (0..self.world.n_cells()).map(|c| self.world.cell_name(c)).collect(),
        )]
    }

    fn prepare(&mut self, problem: &Problem) -> Result<(), EnvError> {
        self.cell_of_prop.clear();
        for cell in 0..self.world.n_cells() {
            let name = self.world.cell_name(cell);
            let p = problem
                .prop_id("At", &[&name])
                .ok_or_else(|| EnvError::Other(format!("missing At({name})")))?;
            self.cell_of_prop.insert(p, cell as u32);
        }
        self.dead_prop = problem
            .prop_id("Dead", &[])
            .ok_or_else(|| EnvError::Other("missing Dead".into()))?;
        self.op_moves.clear();
        for op in &problem.operators {
            // schema names are move-{x}-{y}-{dir}
            let mut parts = op.name.splitn(4, '-');
            let (Some("move"), Some(x), Some(y), Some(d)) =
                (parts.next(), parts.next(), parts.next(), parts.next())
            else {
                return Err(EnvError::UnknownController(op.name.clone()));
            };
            let x: usize = x.parse().map_err(|_| EnvError::UnknownController(op.name.clone()))?;
            let y: usize = y.parse().map_err(|_| EnvError::UnknownController(op.name.clone()))?;
            let dir = DIRS
                .iter()
                .position(|&(n, _, _)| n == d)
                .ok_or_else(|| EnvError::UnknownController(op.name.clone()))?;
            self.op_moves.push((self.world.cell(x, y) as u32, dir));
        }
        Ok(())
    }

    fn initial_belief(&mut self) -> BeliefHandle {
        if self.arena.is_empty() {
            let start = self.world.cell(self.world.start.0, self.world.start.1) as u32;
            self.arena.push(start);
        }
        BeliefHandle(0)
    }

    fn evaluate(&mut self, b: BeliefHandle, prop: PropId) -> Result<bool, EnvError> {
        let state = self.state(b)?;
        if prop == self.dead_prop {
            return Ok(state == DEAD_STATE);
        }
        match self.cell_of_prop.get(&prop) {
            Some(&cell) => Ok(state == cell),
            None => Err(EnvError::UnknownProposition(prop)),
        }
    }

    fn simulate(&mut self, b: BeliefHandle, op: OpId, seed: u64) -> Result<SimOutcome, EnvError> {
        let state = self.state(b)?;
        let &(cell, dir) = self
            .op_moves
            .get(op as usize)
            .ok_or_else(|| EnvError::UnknownController(format!("op {op}")))?;
        if state != cell {
            return Err(EnvError::Other("controller precondition violated".into()));
        }
        let next = match self.world.step(cell as usize, dir, seed) {
            CellOutcome::Cell(c) => c as u32,
            CellOutcome::Dead => DEAD_STATE,
        };
        self.arena.push(next);
        Ok(SimOutcome::new(BeliefHandle(self.arena.len() as u64 - 1)))
    }

    fn plan_heuristic(&self, _problem: &Problem) -> Option<Box<dyn PlanHeuristic>> {
        Some(Box::new(GridHeuristic {
            cell_of_prop: self.cell_of_prop.clone(),
            dead_prop: self.dead_prop,
            width: self.world.width,
            goal: self.goal_xy,
        }))
    }

    fn clone_env(&self) -> Box<dyn Environment> {
        Box::new(GridEnv {
            world: self.world.clone(),
            arena: self.arena.clone(),
            cell_of_prop: self.cell_of_prop.clone(),
            dead_prop: self.dead_prop,
            op_moves: self.op_moves.clone(),
            goal_xy: self.goal_xy,
        })
    }
}

/// Admissible determinized-search heuristic: the Manhattan distance from the
/// nearest believed-at cell to the goal, times a per-step cost lower bound.
struct GridHeuristic {
    cell_of_prop: HashMap<PropId, u32>,
    dead_prop: PropId,
    width: usize,
    goal: (usize, usize),
}

impl PlanHeuristic for GridHeuristic {
    fn h(&self, b: &AbstractBelief, min_edge_cost: f64) -> f64 {
        if b.get(self.dead_prop) {
            return f64::INFINITY;
        }
        let mut best: Option<usize> = None;
        for &p in b.true_props() {
            if let Some(&cell) = self.cell_of_prop.get(&p) {
                let x = cell as usize % self.width;
                let y = cell as usize / self.width;
                let d = x.abs_diff(self.goal.0) + y.abs_diff(self.goal.1);
                best = Some(best.map_or(d, |b: usize| b.min(d)));
            }
        }
        match best {
            Some(d) => d as f64 * min_edge_cost,
            None => 0.0,
        }
    }
}
