//! Safety toy: pick every object from a one-dimensional workspace shared
//! with a wandering human, tracked only through a decaying occupancy grid.
//! Reach trajectories are continuous parameters drawn from a stream, so this
//! environment exercises progressive widening; collisions report the
//! human-proximity proposition back as a learned `ucond`.

use crate::belief::{BeliefHandle, EnvError, Environment, SimOutcome};
use crate::rng::Rng;
use crate::symbolic::{OpId, Problem, PropId};
use std::collections::HashMap;
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct SafetyWorld {
    /// Object positions in the 1-D workspace (cells `0..length`).
    pub objects: Vec<usize>,
    pub length: usize,
    pub gamma_decay: f64,
    pub coeff: f64,
    /// Human-proximity radius for the `HumanClose` proposition.
    pub near_radius: usize,
    pub grasp_success: f64,
}

impl SafetyWorld {
    pub fn standard(n_objects: usize) -> Self {
        let length = 8;
        SafetyWorld {
            objects: (0..n_objects).map(|i| 2 + 2 * i).collect(),
            length: length.max(2 + 2 * n_objects),
            gamma_decay: 0.6,
            coeff: 1.0,
            near_radius: 2,
            grasp_success: 0.9,
        }
    }

    pub fn object_name(i: usize) -> String {
        format!("o{}", i + 1)
    }

    pub fn domain_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "(:types obj traj)");
        let mut preds = String::from("(:predicates (Held ?o - obj) (Collision) (HumanClose)");
        preds.push(')');
        let _ = writeln!(s, "{preds}");
        let _ = writeln!(
            s,
            "(:action pick-obj :parameters (?o - obj ?j - traj)\n \
             :precondition (and (not (Held ?o)) (not (Collision)))\n \
             :effects (and)\n \
             :ueffects (maybe (Held ?o) (Collision)))"
        );
        let _ = writeln!(
            s,
            "(:action wait :parameters ()\n :precondition (and (not (Collision)))\n \
             :effects (and))"
        );
        let mut goal = String::from("(:reward (and");
        for i in 0..self.objects.len() {
            let _ = write!(goal, " (Held @{})", Self::object_name(i));
        }
        goal.push_str(" (not (Collision))))");
        let _ = writeln!(s, "{goal}");
        s
    }
}

#[derive(Debug, Clone)]
struct BeliefState {
    grid: Vec<f64>,
    human: usize,
    held: u32,
    collision: bool,
}

pub struct SafetyEnv {
    world: SafetyWorld,
    arena: Vec<BeliefState>,
    /// Clearance per sampled trajectory entity.
    clearances: HashMap<String, f64>,
    traj_serial: u64,
    held_props: Vec<PropId>,
    collision_prop: PropId,
    human_close_prop: PropId,
    /// op id -> (object index, clearance) or None for wait.
    ops: Vec<Option<(usize, f64)>>,
}

/// Grounds the safety domain (with an empty trajectory pool; progressive
/// widening populates it) and binds the environment.
pub fn build(world: SafetyWorld) -> Result<(Problem, SafetyEnv), EnvError> {
    let domain = crate::symbolic::parse_domain(&world.domain_text())
        .map_err(|e| EnvError::Other(e.to_string()))?;
    let pools = vec![
        (
            "obj".to_string(),
            (0..world.objects.len()).map(SafetyWorld::object_name).collect(),
        ),
        ("traj".to_string(), Vec::new()),
    ];
    let problem = Problem::new(domain, &pools).map_err(|e| EnvError::Other(e.to_string()))?;
    let mut env = SafetyEnv {
        world,
        arena: Vec::new(),
        clearances: HashMap::new(),
        traj_serial: 0,
        held_props: Vec::new(),
        collision_prop: 0,
        human_close_prop: 0,
        ops: Vec::new(),
    };
    env.prepare(&problem)?;
    Ok((problem, env))
}

impl SafetyEnv {
    fn state(&self, b: BeliefHandle) -> Result<&BeliefState, EnvError> {
        self.arena.get(b.0 as usize).ok_or(EnvError::InvalidHandle(b))
    }

    /// Advance the world clock: decay occupancy, move the human one cell
    /// (bouncing walk), and re-observe its cell at probability 1.
    fn tick(&self, s: &mut BeliefState, rng: &mut Rng) {
        let factor = self.world.gamma_decay.powf(self.world.coeff);
        for p in &mut s.grid {
            *p *= factor;
        }
        let dir = if s.human == 0 {
            1
        } else if s.human == self.world.length - 1 {
            -1
        } else if rng.next_f64() < 0.5 {
            1
        } else {
            -1_i64
        };
        s.human = (s.human as i64 + dir) as usize;
        s.grid[s.human] = 1.0;
    }

    fn human_close(&self, s: &BeliefState) -> bool {
        s.grid
            .iter()
            .enumerate()
            .any(|(i, &p)| p >= 0.5 && i <= self.world.near_radius)
    }
}

impl Environment for SafetyEnv {
    fn name(&self) -> &str {
        "safety"
    }

    fn type_pools(&self) -> Vec<(String, Vec<String>)> {
        vec![
            (
                "obj".to_string(),
                (0..self.world.objects.len()).map(SafetyWorld::object_name).collect(),
            ),
            ("traj".to_string(), Vec::new()),
        ]
    }

    fn param_streams(&self) -> Vec<String> {
        vec!["traj".to_string()]
    }

    fn sample_parameter(&mut self, stream: &str, seed: u64) -> Result<String, EnvError> {
        if stream != "traj" {
            return Err(EnvError::StreamExhausted(stream.to_string()));
        }
        let mut rng = Rng::new(seed);
        let name = format!("traj{}", self.traj_serial);
        self.traj_serial += 1;
        // clearance in [0.2, 0.95]: how much of the occupied volume the
        // reach avoids
        let clearance = 0.2 + 0.75 * rng.next_f64();
        self.clearances.insert(name.clone(), clearance);
        Ok(name)
    }

    fn prepare(&mut self, problem: &Problem) -> Result<(), EnvError> {
        let get = |pred: &str, args: &[&str]| {
            problem
                .prop_id(pred, args)
                .ok_or_else(|| EnvError::Other(format!("missing {pred}{args:?}")))
        };
        self.held_props = (0..self.world.objects.len())
            .map(|i| get("Held", &[&SafetyWorld::object_name(i)]))
            .collect::<Result<_, _>>()?;
        self.collision_prop = get("Collision", &[])?;
        self.human_close_prop = get("HumanClose", &[])?;
        self.ops = problem
            .operators
            .iter()
            .map(|op| match op.name.as_str() {
                "wait" => Ok(None),
                "pick-obj" => {
                    let obj = problem.entity_name(op.bindings[0]);
                    let traj = problem.entity_name(op.bindings[1]);
                    let oi = obj
                        .strip_prefix('o')
                        .and_then(|n| n.parse::<usize>().ok())
                        .ok_or_else(|| EnvError::UnknownController(op.name.clone()))?
                        - 1;
                    let clearance = *self
                        .clearances
                        .get(traj)
                        .ok_or_else(|| EnvError::UnknownController(traj.to_string()))?;
                    Ok(Some((oi, clearance)))
                }
                other => Err(EnvError::UnknownController(other.to_string())),
            })
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    fn initial_belief(&mut self) -> BeliefHandle {
        if self.arena.is_empty() {
            let human = self.world.length - 1;
            let mut grid = vec![0.0; self.world.length];
            grid[human] = 1.0;
            self.arena.push(BeliefState { grid, human, held: 0, collision: false });
        }
        BeliefHandle(0)
    }

    fn evaluate(&mut self, b: BeliefHandle, prop: PropId) -> Result<bool, EnvError> {
        let s = self.state(b)?;
        if prop == self.collision_prop {
            return Ok(s.collision);
        }
        if prop == self.human_close_prop {
            return Ok(self.human_close(s));
        }
        match self.held_props.iter().position(|&p| p == prop) {
            Some(i) => Ok(s.held & (1 << i) != 0),
            None => Err(EnvError::UnknownProposition(prop)),
        }
    }

    fn simulate(&mut self, b: BeliefHandle, op: OpId, seed: u64) -> Result<SimOutcome, EnvError> {
        let s = self.state(b)?.clone();
        let mut rng = Rng::new(seed);
        let mut next = s.clone();
        let mut feedback = Vec::new();
        match self.ops.get(op as usize).ok_or_else(|| {
            EnvError::UnknownController(format!("op {op}"))
        })? {
            None => {
                self.tick(&mut next, &mut rng);
            }
            Some((obj, clearance)) => {
                // sweep from the base (cell 0) to the object
                let reach = self.world.objects[*obj];
                let mut free = 1.0_f64;
                for cell in 0..=reach.min(self.world.length - 1) {
                    free *= 1.0 - s.grid[cell] * (1.0 - clearance);
                }
                let p_coll = 1.0 - free;
                let was_close = self.human_close(&s);
                if rng.next_f64() < p_coll {
                    next.collision = true;
                    if was_close {
                        // tell the learner what conditioned this failure
                        feedback.push(self.human_close_prop);
                    }
                } else if rng.next_f64() < self.world.grasp_success {
                    next.held |= 1 << obj;
                }
                self.tick(&mut next, &mut rng);
            }
        }
        self.arena.push(next);
        Ok(SimOutcome {
            next: BeliefHandle(self.arena.len() as u64 - 1),
            ucond_feedback: feedback,
        })
    }

    fn clone_env(&self) -> Box<dyn Environment> {
        Box::new(SafetyEnv {
            world: self.world.clone(),
            arena: self.arena.clone(),
            clearances: self.clearances.clone(),
            traj_serial: self.traj_serial,
            held_props: self.held_props.clone(),
            collision_prop: self.collision_prop,
            human_close_prop: self.human_close_prop,
            ops: self.ops.clone(),
        })
    }
}
