//! Bundled desk-scale environments: the stochastic grid world, the
//! hidden-object search toy and the occupancy-grid safety toy.

pub mod grid;
pub mod hidden;
pub mod occupancy;
pub mod safety;

pub use grid::{GridEnv, GridWorld};
pub use hidden::{HiddenObjectEnv, HiddenObjectWorld};
pub use occupancy::{collision_probability, collision_probability_raw, OccupancyGrid};
pub use safety::{SafetyEnv, SafetyWorld};

use crate::belief::{EnvError, Environment};
use crate::symbolic::Problem;

/// Builds an environment from a spec string:
/// `grid:<spec-file>`, `grid-rand:<W>x<H>:<p_max>`, `hidden:<n_boxes>` or
/// `safety:<n_objects>`. Randomized families take their instance from
/// `seed`.
pub fn by_spec(spec: &str, seed: u64) -> Result<(Problem, Box<dyn Environment>), EnvError> {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    match kind {
        "grid" => {
            let text = std::fs::read_to_string(rest)
                .map_err(|e| EnvError::Other(format!("cannot read `{rest}`: {e}")))?;
            let world = GridWorld::parse(&text).map_err(|e| EnvError::Other(e.to_string()))?;
            let (problem, env) = grid::build(world)?;
            Ok((problem, Box::new(env)))
        }
        "grid-rand" => {
            let (dims, pmax) = rest.split_once(':').unwrap_or((rest, "0.2"));
            let (w, h) = dims
                .split_once('x')
                .ok_or_else(|| EnvError::Other("expected grid-rand:<W>x<H>[:p_max]".into()))?;
            let w: usize = w.parse().map_err(|_| EnvError::Other("bad width".into()))?;
            let h: usize = h.parse().map_err(|_| EnvError::Other("bad height".into()))?;
            let pmax: f64 = pmax.parse().map_err(|_| EnvError::Other("bad p_max".into()))?;
            let world = GridWorld::random(w, h, pmax, seed);
            let (problem, env) = grid::build(world)?;
            Ok((problem, Box::new(env)))
        }
        "hidden" => {
            let n: usize = if rest.is_empty() {
                3
            } else {
                rest.parse().map_err(|_| EnvError::Other("bad box count".into()))?
            };
            let (problem, env) = hidden::build(HiddenObjectWorld::uniform(n))?;
            Ok((problem, Box::new(env)))
        }
        "safety" => {
            let n: usize = if rest.is_empty() {
                2
            } else {
                rest.parse().map_err(|_| EnvError::Other("bad object count".into()))?
            };
            let (problem, env) = safety::build(SafetyWorld::standard(n))?;
            Ok((problem, Box::new(env)))
        }
        other => Err(EnvError::Other(format!("unknown environment `{other}`"))),
    }
}
