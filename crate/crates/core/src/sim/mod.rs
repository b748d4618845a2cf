//! Crowd simulation: goal selection, global path planning, and local plan
//! adaptation, producing per-timestep world-space agent states.

pub mod grid;
pub mod orca;

use glam::DVec2;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

pub use grid::{plan_global_path, OccupancyGrid};
pub use orca::{adapt_velocity, SPEED_SLACK};

use crate::behavior::SimParams;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("no grid path exists between start and goal")]
    Unreachable,
    #[error("goal region is fully covered by obstacles")]
    NoFreeSpace,
}

/// Axis-aligned rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: DVec2,
    pub max: DVec2,
}

impl Aabb {
    pub fn new(min: DVec2, max: DVec2) -> Self {
        Aabb { min, max }
    }

    pub fn contains(&self, p: DVec2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn size(&self) -> DVec2 {
        self.max - self.min
    }

    pub fn center(&self) -> DVec2 {
        0.5 * (self.min + self.max)
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVec2 {
        DVec2::new(
            rng.gen_range(self.min.x..=self.max.x),
            rng.gen_range(self.min.y..=self.max.y),
        )
    }

    pub fn shrink(&self, margin: f64) -> Aabb {
        Aabb {
            min: self.min + DVec2::splat(margin),
            max: self.max - DVec2::splat(margin),
        }
    }
}

/// Convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvexPolygon {
    pub vertices: Vec<DVec2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<DVec2>) -> Self {
        ConvexPolygon { vertices }
    }

    /// Axis-aligned rectangle as a CCW polygon.
    pub fn rect(min: DVec2, max: DVec2) -> Self {
        ConvexPolygon {
            vertices: vec![
                min,
                DVec2::new(max.x, min.y),
                max,
                DVec2::new(min.x, max.y),
            ],
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = (DVec2, DVec2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn contains(&self, p: DVec2) -> bool {
        self.edges().all(|(a, b)| {
            let e = b - a;
            let r = p - a;
            e.x * r.y - e.y * r.x >= 0.0
        })
    }

    /// Distance from `p` to the polygon; zero inside.
    pub fn distance(&self, p: DVec2) -> f64 {
        if self.contains(p) {
            return 0.0;
        }
        self.edges()
            .map(|(a, b)| {
                let ab = b - a;
                let len_sq = ab.length_squared();
                let t = if len_sq > 0.0 {
                    ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0)
                } else {
                    0.0
                };
                p.distance(a + t * ab)
            })
            .fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub bounds: Aabb,
    pub obstacles: Vec<ConvexPolygon>,
    pub grid_resolution: f64,
}

impl Environment {
    pub fn validate(&self) -> Result<(), String> {
        if self.grid_resolution <= 0.0 {
            return Err("grid_resolution must be positive".into());
        }
        for (i, poly) in self.obstacles.iter().enumerate() {
            if poly.vertices.len() < 3 {
                return Err(format!("obstacle {i} has fewer than 3 vertices"));
            }
            for v in &poly.vertices {
                if !self.bounds.contains(*v) {
                    return Err(format!("obstacle {i} extends outside bounds"));
                }
            }
        }
        Ok(())
    }

    /// Free space at zero inflation: inside bounds and in no obstacle.
    pub fn is_free(&self, p: DVec2) -> bool {
        self.bounds.contains(p) && !self.obstacles.iter().any(|o| o.contains(p))
    }
}

/// How an agent picks its next goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum GoalPolicy {
    FixedPoint(DVec2),
    RegionSample(Aabb),
    WaypointCycle { waypoints: Vec<DVec2>, index: usize },
}

const GOAL_SAMPLE_ATTEMPTS: usize = 10_000;

/// Picks the agent's next goal under its policy. `WaypointCycle` advances
/// to the next waypoint once the agent is within 2 x radius of the current
/// goal; otherwise it keeps the current waypoint.
pub fn select_goal(
    position: DVec2,
    radius: f64,
    current_goal: DVec2,
    env: &Environment,
    policy: &mut GoalPolicy,
    rng: &mut ChaCha8Rng,
) -> Result<DVec2, SimError> {
    match policy {
        GoalPolicy::FixedPoint(p) => {
            if env.is_free(*p) {
                Ok(*p)
            } else {
                Err(SimError::NoFreeSpace)
            }
        }
        GoalPolicy::RegionSample(region) => {
            for _ in 0..GOAL_SAMPLE_ATTEMPTS {
                let p = region.sample(rng);
                if env.is_free(p) {
                    return Ok(p);
                }
            }
            Err(SimError::NoFreeSpace)
        }
        GoalPolicy::WaypointCycle { waypoints, index } => {
            if waypoints.is_empty() {
                return Err(SimError::NoFreeSpace);
            }
            if position.distance(current_goal) <= 2.0 * radius {
                *index = (*index + 1) % waypoints.len();
            }
            let p = waypoints[*index];
            if env.is_free(p) {
                Ok(p)
            } else {
                Err(SimError::NoFreeSpace)
            }
        }
    }
}

/// Per-agent dynamic state.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub position: DVec2,
    pub velocity: DVec2,
    pub goal: DVec2,
    pub params: SimParams,
    pub path: Vec<DVec2>,
    /// Index of the next path vertex to steer toward.
    pub path_cursor: usize,
    pub policy: GoalPolicy,
}

/// Read-only neighbor snapshot used during one step.
#[derive(Debug, Clone, Copy)]
pub struct NeighborView {
    pub id: u32,
    pub position: DVec2,
    pub velocity: DVec2,
    pub radius: f64,
}

/// One agent's sampled positions over time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub agent_id: u32,
    pub samples: Vec<(u64, DVec2)>,
}

/// Full per-frame state log of a simulation run: for every frame, one
/// (position, velocity) per agent, agents in id order.
#[derive(Debug, Clone)]
pub struct TrajectoryLog {
    pub agent_ids: Vec<u32>,
    pub dt: f64,
    pub frames: Vec<Vec<(DVec2, DVec2)>>,
}

impl TrajectoryLog {
    pub fn trajectories(&self) -> Vec<Trajectory> {
        self.agent_ids
            .iter()
            .enumerate()
            .map(|(k, &id)| Trajectory {
                agent_id: id,
                samples: self
                    .frames
                    .iter()
                    .enumerate()
                    .map(|(f, states)| (f as u64, states[k].0))
                    .collect(),
            })
            .collect()
    }
}

/// Simulation world. Single-threaded during stepping; separate worlds are
/// independent.
#[derive(Debug, Clone)]
pub struct World {
    pub env: Environment,
    pub agents: Vec<AgentState>,
    pub time_step: u64,
    rng: ChaCha8Rng,
    grid_cache: HashMap<u64, OccupancyGrid>,
    /// Wall-clock cost of each step in milliseconds.
    pub step_cost_ms: Vec<f64>,
}

impl World {
    /// Builds a world and plans each agent's initial path. Planning errors
    /// propagate here and only here.
    pub fn new(
        env: Environment,
        mut agents: Vec<AgentState>,
        rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        let mut grid_cache = HashMap::new();
        for agent in &mut agents {
            let grid = grid_for(&mut grid_cache, &env, agent.params.radius);
            let path = grid::plan_on_grid(grid, agent.position, agent.goal)?;
            agent.path = path;
            agent.path_cursor = 1;
        }
        Ok(World {
            env,
            agents,
            time_step: 0,
            rng,
            grid_cache,
            step_cost_ms: Vec::new(),
        })
    }

    /// Advances every agent by `dt` seconds.
    pub fn step(&mut self, dt: f64) {
        assert!(dt > 0.0 && dt <= 0.5, "dt must be in (0, 0.5]");
        let start = now();

        let snapshot: Vec<NeighborView> = self
            .agents
            .iter()
            .map(|a| NeighborView {
                id: a.id,
                position: a.position,
                velocity: a.velocity,
                radius: a.params.radius,
            })
            .collect();

        let mut new_velocities = Vec::with_capacity(self.agents.len());
        for idx in 0..self.agents.len() {
            self.refresh_goal_if_arrived(idx);
            let agent = &mut self.agents[idx];
            // Drop path vertices already reached.
            while agent.path_cursor + 1 < agent.path.len()
                && agent.position.distance(agent.path[agent.path_cursor])
                    <= 2.0 * agent.params.radius
            {
                agent.path_cursor += 1;
            }
            let agent = &self.agents[idx];
            let pref = self.preferred_velocity(agent, &snapshot);
            let v = orca::adapt_velocity(
                agent.id,
                agent.position,
                agent.velocity,
                &agent.params,
                pref,
                &snapshot,
                &self.env.obstacles,
                dt,
            );
            new_velocities.push(v);
        }

        let bounds = self.env.bounds;
        for (agent, v) in self.agents.iter_mut().zip(new_velocities) {
            agent.velocity = v;
            agent.position = (agent.position + v * dt).clamp(bounds.min, bounds.max);
        }
        self.time_step += 1;
        self.step_cost_ms.push(elapsed_ms(start));
    }

    /// Runs `frames - 1` steps and logs every frame, including the initial
    /// one.
    pub fn run(&mut self, frames: u64, dt: f64) -> TrajectoryLog {
        let mut log = TrajectoryLog {
            agent_ids: self.agents.iter().map(|a| a.id).collect(),
            dt,
            frames: Vec::with_capacity(frames as usize),
        };
        if frames == 0 {
            return log;
        }
        log.frames
            .push(self.agents.iter().map(|a| (a.position, a.velocity)).collect());
        for _ in 1..frames {
            self.step(dt);
            log.frames
                .push(self.agents.iter().map(|a| (a.position, a.velocity)).collect());
        }
        log
    }

    fn refresh_goal_if_arrived(&mut self, idx: usize) {
        let arrived = {
            let a = &self.agents[idx];
            a.position.distance(a.goal) <= 2.0 * a.params.radius
        };
        if !arrived {
            return;
        }
        // Retry a few times for sampling policies; hold position when no
        // reachable goal turns up.
        for _ in 0..10 {
            let (position, radius, current_goal) = {
                let a = &self.agents[idx];
                (a.position, a.params.radius, a.goal)
            };
            let mut policy = self.agents[idx].policy.clone();
            let goal = match select_goal(
                position,
                radius,
                current_goal,
                &self.env,
                &mut policy,
                &mut self.rng,
            ) {
                Ok(g) => g,
                Err(_) => break,
            };
            self.agents[idx].policy = policy;
            if goal == current_goal {
                return; // fixed-point hold
            }
            let grid = grid_for(&mut self.grid_cache, &self.env, radius);
            match grid::plan_on_grid(grid, position, goal) {
                Ok(path) => {
                    let a = &mut self.agents[idx];
                    a.goal = goal;
                    a.path = path;
                    a.path_cursor = 1;
                    return;
                }
                Err(_) => continue,
            }
        }
        // Mid-run planning failure: exhaust the path and hold.
        let a = &mut self.agents[idx];
        a.path.clear();
        a.path_cursor = 0;
    }

    fn preferred_velocity(&self, agent: &AgentState, snapshot: &[NeighborView]) -> DVec2 {
        if agent.path.is_empty() || agent.path_cursor >= agent.path.len() {
            return DVec2::ZERO;
        }
        if agent.position.distance(agent.goal) <= 2.0 * agent.params.radius {
            return DVec2::ZERO;
        }
        let target = agent.path[agent.path_cursor.min(agent.path.len() - 1)];
        let to_target = target - agent.position;
        let dist = to_target.length();
        if dist < 1e-9 {
            return DVec2::ZERO;
        }
        let pref = to_target / dist * agent.params.pref_speed;
        if self.is_constrained(agent, snapshot) {
            // Deterministic symmetry tie-breaking.
            let angle = ((agent.id % 7) as f64 - 3.0) * 0.002;
            rotate(pref, angle)
        } else {
            pref
        }
    }

    /// True when any neighbor or obstacle edge can constrain this agent.
    fn is_constrained(&self, agent: &AgentState, snapshot: &[NeighborView]) -> bool {
        let nd = agent.params.neighbor_dist;
        snapshot.iter().any(|n| {
            n.id != agent.id && agent.position.distance_squared(n.position) <= nd * nd
        }) || self
            .env
            .obstacles
            .iter()
            .any(|o| o.distance(agent.position) < nd)
    }
}

fn rotate(v: DVec2, angle: f64) -> DVec2 {
    let (s, c) = angle.sin_cos();
    DVec2::new(c * v.x - s * v.y, s * v.x + c * v.y)
}

fn grid_for<'a>(
    cache: &'a mut HashMap<u64, OccupancyGrid>,
    env: &Environment,
    radius: f64,
) -> &'a OccupancyGrid {
    cache
        .entry(radius.to_bits())
        .or_insert_with(|| OccupancyGrid::build(env, radius))
}

#[cfg(not(target_arch = "wasm32"))]
fn now() -> std::time::Instant {
    std::time::Instant::now()
}

#[cfg(not(target_arch = "wasm32"))]
fn elapsed_ms(start: std::time::Instant) -> f64 {
    start.elapsed().as_secs_f64() * 1e3
}

#[cfg(target_arch = "wasm32")]
fn now() {}

#[cfg(target_arch = "wasm32")]
fn elapsed_ms(_start: ()) -> f64 {
    0.0
}
