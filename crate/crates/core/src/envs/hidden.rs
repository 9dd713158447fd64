//! Hidden-object search: a target is hidden behind one of several boxes.
//! Looking is cheap but misses the target with some rate; moving a box
//! reveals its contents perfectly but risks an irreversible break on the
//! fragile box. Picking the target succeeds with the believed probability
//! mass at its location.

use crate::belief::{BeliefHandle, EnvError, Environment, SimOutcome};
use crate::rng::Rng;
use crate::symbolic::{OpId, Problem, PropId};
use std::fmt::Write as _;

#[derive(Debug, Clone)]
pub struct HiddenObjectWorld {
    /// Prior probability that the target sits behind each box (occluder
    /// sizes, normalized).
    pub prior: Vec<f64>,
    /// False-negative rate of the look controller.
    pub look_noise: f64,
    /// Index of the box whose removal can break the target.
    pub fragile_box: usize,
    pub break_prob: f64,
    /// Posterior mass required for the pose to count as known.
    pub pose_threshold: f64,
}

impl HiddenObjectWorld {
    pub fn uniform(n_boxes: usize) -> Self {
        HiddenObjectWorld {
            prior: vec![1.0 / n_boxes as f64; n_boxes],
            look_noise: 0.05,
            fragile_box: 0,
            break_prob: 0.1,
            pose_threshold: 0.95,
        }
    }

    pub fn n_boxes(&self) -> usize {
        self.prior.len()
    }

    pub fn box_name(i: usize) -> String {
        format!("box{}", i + 1)
    }

    pub fn domain_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "(:action look :parameters (?b - box)\n \
             :precondition (and (not (Broken)) (not (Holding @die)))\n \
             :effects (and)\n :uconds (and (BVPose @die) (Moved ?b))\n \
             :ueffects (maybe (BVPose @die)))"
        );
        let _ = writeln!(
            s,
            "(:action pick-box :parameters (?b - box)\n \
             :precondition (and (not (Moved ?b)) (not (Broken)) (not (Holding @die)))\n \
             :effects (and (Moved ?b))\n :uconds (and (BVPose @die))\n \
             :ueffects (maybe (BVPose @die) (Broken)))"
        );
        let _ = writeln!(
            s,
            "(:action pick-target :parameters (?t - target)\n \
             :precondition (and (BVPose ?t) (not (Broken)) (not (Holding ?t)))\n \
             :effects (and)\n \
             :ueffects (maybe (Holding ?t) (BVPose ?t)))"
        );
        let _ = writeln!(s, "(:reward (and (Holding @die) (not (Broken))))");
        s
    }
}

/// A concrete belief: exact posterior over target locations plus discrete
/// flags. Values are immutable once created.
#[derive(Debug, Clone)]
struct BeliefState {
    posterior: Vec<f64>,
    moved: u32,
    holding: bool,
    broken: bool,
}

impl BeliefState {
    fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.posterior.len() {
            if self.posterior[i] > self.posterior[best] {
                best = i;
            }
        }
        best
    }

    fn max_mass(&self) -> f64 {
        self.posterior.iter().copied().fold(0.0, f64::max)
    }
}

enum Controller {
    Look(usize),
    PickBox(usize),
    PickTarget,
}

pub struct HiddenObjectEnv {
    world: HiddenObjectWorld,
    arena: Vec<BeliefState>,
    bvpose: PropId,
    holding: PropId,
    broken: PropId,
    moved: Vec<PropId>,
    controllers: Vec<Controller>,
}

/// Grounds the search domain and binds an environment to it.
pub fn build(world: HiddenObjectWorld) -> Result<(Problem, HiddenObjectEnv), EnvError> {
    let domain = crate::symbolic::parse_domain(&world.domain_text())
        .map_err(|e| EnvError::Other(e.to_string()))?;
    let pools = vec![
        ("target".to_string(), vec!["die".to_string()]),
        (
            "box".to_string(),
            (0..world.n_boxes()).map(HiddenObjectWorld::box_name).collect(),
        ),
    ];
    let problem = Problem::new(domain, &pools).map_err(|e| EnvError::Other(e.to_string()))?;
    let mut env = HiddenObjectEnv {
        world,
        arena: Vec::new(),
        bvpose: 0,
        holding: 0,
        broken: 0,
        moved: Vec::new(),
        controllers: Vec::new(),
    };
    env.prepare(&problem)?;
    Ok((problem, env))
}

impl HiddenObjectEnv {
    pub fn world(&self) -> &HiddenObjectWorld {
        &self.world
    }

    fn state(&self, b: BeliefHandle) -> Result<&BeliefState, EnvError> {
        self.arena.get(b.0 as usize).ok_or(EnvError::InvalidHandle(b))
    }

    /// Exposes the posterior for tests.
    pub fn posterior(&self, b: BeliefHandle) -> &[f64] {
        &self.arena[b.0 as usize].posterior
    }

    fn push(&mut self, s: BeliefState) -> BeliefHandle {
        self.arena.push(s);
        BeliefHandle(self.arena.len() as u64 - 1)
    }
}

fn renormalize(posterior: &mut [f64]) {
    let sum: f64 = posterior.iter().sum();
    if sum > 0.0 {
        for p in posterior.iter_mut() {
            *p /= sum;
        }
    }
}

impl Environment for HiddenObjectEnv {
    fn name(&self) -> &str {
        "hidden"
    }

    fn type_pools(&self) -> Vec<(String, Vec<String>)> {
        vec![
            ("target".to_string(), vec!["die".to_string()]),
            (
                "box".to_string(),
                (0..self.world.n_boxes()).map(HiddenObjectWorld::box_name).collect(),
            ),
        ]
    }

    fn prepare(&mut self, problem: &Problem) -> Result<(), EnvError> {
        let get = |pred: &str, args: &[&str]| {
            problem
                .prop_id(pred, args)
                .ok_or_else(|| EnvError::Other(format!("missing {pred}{args:?}")))
        };
        self.bvpose = get("BVPose", &["die"])?;
        self.holding = get("Holding", &["die"])?;
        self.broken = get("Broken", &[])?;
        self.moved = (0..self.world.n_boxes())
            .map(|i| get("Moved", &[&HiddenObjectWorld::box_name(i)]))
            .collect::<Result<_, _>>()?;
        self.controllers = problem
            .operators
            .iter()
            .map(|op| {
                let arg = op.bindings.first().map(|&e| problem.entity_name(e).to_string());
                match op.name.as_str() {
                    "look" | "pick-box" => {
                        let b = arg
                            .as_deref()
                            .and_then(|n| n.strip_prefix("box"))
                            .and_then(|n| n.parse::<usize>().ok())
                            .ok_or_else(|| EnvError::UnknownController(op.name.clone()))?;
                        if op.name == "look" {
                            Ok(Controller::Look(b - 1))
                        } else {
                            Ok(Controller::PickBox(b - 1))
                        }
                    }
                    "pick-target" => Ok(Controller::PickTarget),
                    other => Err(EnvError::UnknownController(other.to_string())),
                }
            })
            .collect::<Result<_, _>>()?;
        Ok(())
    }

    fn initial_belief(&mut self) -> BeliefHandle {
        if self.arena.is_empty() {
            let mut prior = self.world.prior.clone();
            renormalize(&mut prior);
            self.arena.push(BeliefState {
                posterior: prior,
                moved: 0,
                holding: false,
                broken: false,
            });
        }
        BeliefHandle(0)
    }

    fn evaluate(&mut self, b: BeliefHandle, prop: PropId) -> Result<bool, EnvError> {
        let s = self.state(b)?;
        if prop == self.bvpose {
            return Ok(s.max_mass() >= self.world.pose_threshold);
        }
        if prop == self.holding {
            return Ok(s.holding);
        }
        if prop == self.broken {
            return Ok(s.broken);
        }
        match self.moved.iter().position(|&m| m == prop) {
            Some(i) => Ok(s.moved & (1 << i) != 0),
            None => Err(EnvError::UnknownProposition(prop)),
        }
    }

    fn simulate(&mut self, b: BeliefHandle, op: OpId, seed: u64) -> Result<SimOutcome, EnvError> {
        let s = self.state(b)?.clone();
        let mut rng = Rng::new(seed);
        let mut next = s.clone();
        match self
            .controllers
            .get(op as usize)
            .ok_or_else(|| EnvError::UnknownController(format!("op {op}")))?
        {
            Controller::Look(i) => {
                let i = *i;
                // positive sighting happens with p_i * (1 - noise)
                let p_pos = s.posterior[i] * (1.0 - self.world.look_noise);
                if rng.next_f64() < p_pos {
                    next.posterior.iter_mut().for_each(|p| *p = 0.0);
                    next.posterior[i] = 1.0;
                } else {
                    // negative: scale the looked-at box by the miss rate
                    next.posterior[i] *= self.world.look_noise;
                    renormalize(&mut next.posterior);
                }
            }
            Controller::PickBox(i) => {
                let i = *i;
                next.moved |= 1 << i;
                if rng.next_f64() < s.posterior[i] {
                    // the target was behind the box and is now visible
                    next.posterior.iter_mut().for_each(|p| *p = 0.0);
                    next.posterior[i] = 1.0;
                } else {
                    next.posterior[i] = 0.0;
                    renormalize(&mut next.posterior);
                }
                if i == self.world.fragile_box && rng.next_f64() < self.world.break_prob {
                    next.broken = true;
                }
            }
            Controller::PickTarget => {
                let believed = s.argmax();
                if rng.next_f64() < s.posterior[believed] {
                    next.holding = true;
                } else {
                    next.posterior[believed] = 0.0;
                    renormalize(&mut next.posterior);
                }
            }
        }
        let h = self.push(next);
        Ok(SimOutcome::new(h))
    }

    fn clone_env(&self) -> Box<dyn Environment> {
        Box::new(HiddenObjectEnv {
            world: self.world.clone(),
            arena: self.arena.clone(),
            bvpose: self.bvpose,
            holding: self.holding,
            broken: self.broken,
            moved: self.moved.clone(),
            controllers: self
                .controllers
                .iter()
                .map(|c| match c {
                    Controller::Look(i) => Controller::Look(*i),
                    Controller::PickBox(i) => Controller::PickBox(*i),
                    Controller::PickTarget => Controller::PickTarget,
                })
                .collect(),
        })
    }
}

// ---------------------------------------------------------------------------
// Exact value of the toy POMDP
// ---------------------------------------------------------------------------

/// Exact optimal expected discounted return of the toy POMDP, computed by
/// value iteration over the enumerated belief space (posteriors are
/// determined by per-box negative-look counts, reveals and collapses, capped
/// at `look_cap` looks per box). Independent of the planning stack.
pub fn exact_optimal_value(world: &HiddenObjectWorld, gamma: f64, look_cap: u8) -> f64 {
    #[derive(Clone, PartialEq, Eq, Hash)]
    struct Key {
        negs: Vec<u8>,     // negative looks per box (saturating)
        zeroed: u32,       // boxes known empty
        collapsed: Option<usize>,
        moved: u32,
        holding: bool,
        broken: bool,
    }

    fn posterior(world: &HiddenObjectWorld, k: &Key) -> Vec<f64> {
        let n = world.n_boxes();
        let mut p = vec![0.0; n];
        if let Some(i) = k.collapsed {
            p[i] = 1.0;
            return p;
        }
        for i in 0..n {
            if k.zeroed & (1 << i) == 0 {
                p[i] = world.prior[i] * world.look_noise.powi(k.negs[i] as i32);
            }
        }
        let sum: f64 = p.iter().sum();
        if sum > 0.0 {
            p.iter_mut().for_each(|x| *x /= sum);
        }
        p
    }

    use std::collections::HashMap;
    let n = world.n_boxes();
    let start = Key {
        negs: vec![0; n],
        zeroed: 0,
        collapsed: None,
        moved: 0,
        holding: false,
        broken: false,
    };

    // enumerate reachable keys
    let mut states: Vec<Key> = vec![start];
    let mut index: HashMap<Key, usize> = HashMap::new();
    index.insert(states[0].clone(), 0);
    let mut cursor = 0;
    let mut transitions: Vec<Vec<Vec<(usize, f64)>>> = Vec::new();
    let mut goals: Vec<bool> = Vec::new();

    while cursor < states.len() {
        let key = states[cursor].clone();
        let p = posterior(world, &key);
        let goal = key.holding && !key.broken;
        goals.push(goal);
        let mut acts: Vec<Vec<(usize, f64)>> = Vec::new();
        if !goal && !key.broken && !key.holding {
            let mut intern = |states: &mut Vec<Key>, k: Key| -> usize {
                if let Some(&i) = index.get(&k) {
                    return i;
                }
                let i = states.len();
                states.push(k.clone());
                index.insert(k, i);
                i
            };
            // look(i)
            for i in 0..n {
                let p_pos = p[i] * (1.0 - world.look_noise);
                let mut pos_key = key.clone();
                pos_key.collapsed = Some(i);
                let mut neg_key = key.clone();
                if neg_key.collapsed == Some(i) {
                    // still certain; a miss changes nothing
                } else if neg_key.collapsed.is_none() {
                    neg_key.negs[i] = neg_key.negs[i].saturating_add(1).min(look_cap);
                }
                let mut rows = Vec::new();
                if p_pos > 0.0 {
                    rows.push((intern(&mut states, pos_key), p_pos));
                }
                rows.push((intern(&mut states, neg_key), 1.0 - p_pos));
                acts.push(rows);
            }
            // pick-box(i)
            for i in 0..n {
                if key.moved & (1 << i) != 0 {
                    continue;
                }
                let mut reveal = key.clone();
                reveal.moved |= 1 << i;
                reveal.collapsed = Some(i);
                let mut empty = key.clone();
                empty.moved |= 1 << i;
                if empty.collapsed != Some(i) {
                    empty.zeroed |= 1 << i;
                } else {
                    // certain it was there, so "empty" cannot happen
                }
                let branches: Vec<(Key, f64)> = vec![(reveal, p[i]), (empty, 1.0 - p[i])];
                let mut rows = Vec::new();
                for (k2, pk) in branches {
                    if pk <= 0.0 {
                        continue;
                    }
                    if i == world.fragile_box && world.break_prob > 0.0 {
                        let mut broken = k2.clone();
                        broken.broken = true;
                        rows.push((intern(&mut states, broken), pk * world.break_prob));
                        rows.push((intern(&mut states, k2), pk * (1.0 - world.break_prob)));
                    } else {
                        rows.push((intern(&mut states, k2), pk));
                    }
                }
                acts.push(rows);
            }
            // pick-target (pose must be known)
            let pmax = p.iter().copied().fold(0.0, f64::max);
            if pmax >= world.pose_threshold {
                let believed = (0..n).max_by(|&a, &b| p[a].total_cmp(&p[b])).unwrap();
                let mut ok = key.clone();
                ok.holding = true;
                let mut fail = key.clone();
                if fail.collapsed == Some(believed) {
                    fail.collapsed = None;
                }
                fail.zeroed |= 1 << believed;
                fail.negs[believed] = 0;
                let mut rows = vec![(intern(&mut states, ok), pmax)];
                if pmax < 1.0 {
                    rows.push((intern(&mut states, fail), 1.0 - pmax));
                }
                acts.push(rows);
            }
        }
        transitions.push(acts);
        cursor += 1;
    }

    // value iteration
    let mut v = vec![0.0_f64; states.len()];
    for (i, &g) in goals.iter().enumerate() {
        if g {
            v[i] = 1.0;
        }
    }
    loop {
        let mut residual = 0.0_f64;
        for s in 0..states.len() {
            if goals[s] || transitions[s].is_empty() {
                continue;
            }
            let mut best = 0.0_f64;
            for rows in &transitions[s] {
                let q: f64 = rows.iter().map(|&(t, p)| p * v[t]).sum::<f64>() * gamma;
                best = best.max(q);
            }
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual < 1e-12 {
            break;
        }
    }
    v[0]
}
