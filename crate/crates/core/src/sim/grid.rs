//! Global path planning: A* over an obstacle-inflated occupancy grid with
//! 8-connectivity, followed by greedy line-of-sight shortcutting.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use glam::DVec2;

use super::{Environment, SimError};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Occupancy grid over an environment with obstacles inflated by a fixed
/// clearance radius. A cell is blocked when its center lies closer than the
/// clearance to any obstacle.
#[derive(Debug, Clone)]
pub struct OccupancyGrid {
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
    pub origin: DVec2,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    pub fn build(env: &Environment, clearance: f64) -> Self {
        let size = env.bounds.max - env.bounds.min;
        let resolution = env.grid_resolution;
        let nx = (size.x / resolution).ceil().max(1.0) as usize;
        let ny = (size.y / resolution).ceil().max(1.0) as usize;
        let mut blocked = vec![false; nx * ny];
        if !env.obstacles.is_empty() {
            for j in 0..ny {
                for i in 0..nx {
                    let c = env.bounds.min
                        + DVec2::new((i as f64 + 0.5) * resolution, (j as f64 + 0.5) * resolution);
                    let near = env
                        .obstacles
                        .iter()
                        .any(|poly| poly.distance(c) < clearance);
                    blocked[j * nx + i] = near;
                }
            }
        }
        OccupancyGrid {
            nx,
            ny,
            resolution,
            origin: env.bounds.min,
            blocked,
        }
    }

    pub fn cell_of(&self, p: DVec2) -> Option<(usize, usize)> {
        let rel = (p - self.origin) / self.resolution;
        if rel.x < 0.0 || rel.y < 0.0 {
            return None;
        }
        let i = (rel.x as usize).min(self.nx - 1);
        let j = (rel.y as usize).min(self.ny - 1);
        if rel.x > self.nx as f64 || rel.y > self.ny as f64 {
            return None;
        }
        Some((i, j))
    }

    pub fn center(&self, i: usize, j: usize) -> DVec2 {
        self.origin
            + DVec2::new(
                (i as f64 + 0.5) * self.resolution,
                (j as f64 + 0.5) * self.resolution,
            )
    }

    pub fn is_blocked(&self, i: usize, j: usize) -> bool {
        self.blocked[j * self.nx + i]
    }

    pub fn is_free_point(&self, p: DVec2) -> bool {
        match self.cell_of(p) {
            Some((i, j)) => !self.is_blocked(i, j),
            None => false,
        }
    }

    /// True when the straight segment stays in free cells, sampled at a
    /// quarter of the grid resolution.
    pub fn line_of_sight(&self, a: DVec2, b: DVec2) -> bool {
        let len = a.distance(b);
        let steps = (len / (self.resolution * 0.25)).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / steps as f64;
            if !self.is_free_point(a.lerp(b, t)) {
                return false;
            }
        }
        true
    }
}

/// 8-connected A* with the octile-distance heuristic. Returns grid cells
/// from start to goal inclusive.
pub fn astar_cells(
    grid: &OccupancyGrid,
    start: (usize, usize),
    goal: (usize, usize),
) -> Option<Vec<(usize, usize)>> {
    let idx = |(i, j): (usize, usize)| j * grid.nx + i;
    let n = grid.nx * grid.ny;
    let mut g = vec![f64::INFINITY; n];
    let mut parent = vec![usize::MAX; n];
    let mut closed = vec![false; n];

    let octile = |(i, j): (usize, usize)| -> f64 {
        let dx = (i as f64 - goal.0 as f64).abs();
        let dy = (j as f64 - goal.1 as f64).abs();
        grid.resolution * (dx.max(dy) + (SQRT2 - 1.0) * dx.min(dy))
    };

    #[derive(PartialEq)]
    struct Open(f64, usize, usize); // f-score, tie counter, node index
    impl Eq for Open {}
    impl PartialOrd for Open {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Open {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(self.1.cmp(&other.1))
        }
    }

    let mut heap: BinaryHeap<Reverse<Open>> = BinaryHeap::new();
    let mut counter = 0usize;
    g[idx(start)] = 0.0;
    heap.push(Reverse(Open(octile(start), counter, idx(start))));

    const DIRS: [(isize, isize); 8] = [
        (1, 0),
        (-1, 0),
        (0, 1),
        (0, -1),
        (1, 1),
        (1, -1),
        (-1, 1),
        (-1, -1),
    ];

    while let Some(Reverse(Open(_, _, current))) = heap.pop() {
        if closed[current] {
            continue;
        }
        closed[current] = true;
        let ci = current % grid.nx;
        let cj = current / grid.nx;
        if (ci, cj) == goal {
            let mut cells = vec![(ci, cj)];
            let mut at = current;
            while parent[at] != usize::MAX {
                at = parent[at];
                cells.push((at % grid.nx, at / grid.nx));
            }
            cells.reverse();
            return Some(cells);
        }
        for (di, dj) in DIRS {
            let ni = ci as isize + di;
            let nj = cj as isize + dj;
            if ni < 0 || nj < 0 || ni >= grid.nx as isize || nj >= grid.ny as isize {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            if grid.is_blocked(ni, nj) {
                continue;
            }
            // No corner cutting: a diagonal move needs both orthogonal
            // cells free.
            if di != 0 && dj != 0 {
                if grid.is_blocked(ni, cj) || grid.is_blocked(ci, nj) {
                    continue;
                }
            }
            let step = if di != 0 && dj != 0 {
                grid.resolution * SQRT2
            } else {
                grid.resolution
            };
            let ni_idx = idx((ni, nj));
            let tentative = g[current] + step;
            if tentative < g[ni_idx] {
                g[ni_idx] = tentative;
                parent[ni_idx] = current;
                counter += 1;
                heap.push(Reverse(Open(tentative + octile((ni, nj)), counter, ni_idx)));
            }
        }
    }
    None
}

/// Greedy shortcutting: from each kept vertex, jump to the farthest vertex
/// reachable in a straight free line.
pub fn simplify_path(grid: &OccupancyGrid, path: &[DVec2]) -> Vec<DVec2> {
    if path.len() <= 2 {
        return path.to_vec();
    }
    let mut out = vec![path[0]];
    let mut i = 0;
    while i + 1 < path.len() {
        let mut j = path.len() - 1;
        while j > i + 1 && !grid.line_of_sight(path[i], path[j]) {
            j -= 1;
        }
        out.push(path[j]);
        i = j;
    }
    out
}

/// Plans a clearance-respecting polyline from start to goal.
pub fn plan_global_path(
    start: DVec2,
    goal: DVec2,
    env: &Environment,
    radius: f64,
) -> Result<Vec<DVec2>, SimError> {
    let grid = OccupancyGrid::build(env, radius);
    plan_on_grid(&grid, start, goal)
}

pub fn plan_on_grid(
    grid: &OccupancyGrid,
    start: DVec2,
    goal: DVec2,
) -> Result<Vec<DVec2>, SimError> {
    let start_cell = grid.cell_of(start).ok_or(SimError::Unreachable)?;
    let goal_cell = grid.cell_of(goal).ok_or(SimError::Unreachable)?;
    if grid.is_blocked(start_cell.0, start_cell.1) || grid.is_blocked(goal_cell.0, goal_cell.1) {
        return Err(SimError::Unreachable);
    }
    if grid.line_of_sight(start, goal) {
        return Ok(vec![start, goal]);
    }
    let cells = astar_cells(grid, start_cell, goal_cell).ok_or(SimError::Unreachable)?;
    let mut points = Vec::with_capacity(cells.len() + 2);
    points.push(start);
    points.extend(cells.iter().map(|&(i, j)| grid.center(i, j)));
    points.push(goal);
    Ok(simplify_path(grid, &points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{Aabb, ConvexPolygon};

    fn empty_env() -> Environment {
        Environment {
            bounds: Aabb {
                min: DVec2::ZERO,
                max: DVec2::new(10.0, 10.0),
            },
            obstacles: vec![],
            grid_resolution: 0.25,
        }
    }

    fn walled_env() -> Environment {
        // Wall near x=5 spanning y in [0, 8]; free gap above y=8.
        Environment {
            obstacles: vec![ConvexPolygon::rect(
                DVec2::new(4.9, 0.0),
                DVec2::new(5.1, 8.0),
            )],
            ..empty_env()
        }
    }

    #[test]
    fn straight_line_in_free_space() {
        let env = empty_env();
        let path =
            plan_global_path(DVec2::new(1.0, 1.0), DVec2::new(9.0, 1.0), &env, 0.3).unwrap();
        assert_eq!(path, vec![DVec2::new(1.0, 1.0), DVec2::new(9.0, 1.0)]);
        let len: f64 = path.windows(2).map(|w| w[0].distance(w[1])).sum();
        assert!((len - 8.0).abs() < 1e-12);
    }

    #[test]
    fn routes_through_gap_above_wall() {
        let env = walled_env();
        let radius = 0.3;
        let path =
            plan_global_path(DVec2::new(1.0, 1.0), DVec2::new(9.0, 1.0), &env, radius).unwrap();
        for v in &path {
            if (v.x - 5.0).abs() < 0.5 {
                assert!(v.y > 8.0, "vertex {v:?} crosses the wall span");
            }
        }
        // Clearance at every vertex, up to one cell of discretization.
        for v in &path {
            for poly in &env.obstacles {
                assert!(poly.distance(*v) >= radius - env.grid_resolution);
            }
        }
        // Length sanity against plain Dijkstra (uniform-cost A* with zero
        // heuristic is what this reduces to; run the same search with the
        // heuristic disabled by comparing against the g-cost of the goal).
        let grid = OccupancyGrid::build(&env, radius);
        let cells = astar_cells(
            &grid,
            grid.cell_of(DVec2::new(1.0, 1.0)).unwrap(),
            grid.cell_of(DVec2::new(9.0, 1.0)).unwrap(),
        )
        .unwrap();
        let grid_len: f64 = cells
            .windows(2)
            .map(|w| grid.center(w[0].0, w[0].1).distance(grid.center(w[1].0, w[1].1)))
            .sum();
        let oracle_len = dijkstra_length(&grid, &env, radius);
        assert!((grid_len - oracle_len).abs() < 1e-9);
        let simplified_len: f64 = path.windows(2).map(|w| w[0].distance(w[1])).sum();
        assert!(simplified_len <= grid_len + 1e-9);
    }

    // Independent uniform-cost search used as the optimal-length oracle.
    fn dijkstra_length(grid: &OccupancyGrid, _env: &Environment, _radius: f64) -> f64 {
        let start = grid.cell_of(DVec2::new(1.0, 1.0)).unwrap();
        let goal = grid.cell_of(DVec2::new(9.0, 1.0)).unwrap();
        let n = grid.nx * grid.ny;
        let mut dist = vec![f64::INFINITY; n];
        let idx = |(i, j): (usize, usize)| j * grid.nx + i;
        dist[idx(start)] = 0.0;
        let mut visited = vec![false; n];
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for (k, &d) in dist.iter().enumerate() {
                if !visited[k] && d < best_d {
                    best = k;
                    best_d = d;
                }
            }
            if best == usize::MAX {
                break;
            }
            visited[best] = true;
            if best == idx(goal) {
                return best_d;
            }
            let ci = best % grid.nx;
            let cj = best / grid.nx;
            for di in -1isize..=1 {
                for dj in -1isize..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let ni = ci as isize + di;
                    let nj = cj as isize + dj;
                    if ni < 0 || nj < 0 || ni >= grid.nx as isize || nj >= grid.ny as isize {
                        continue;
                    }
                    let (ni, nj) = (ni as usize, nj as usize);
                    if grid.is_blocked(ni, nj) {
                        continue;
                    }
                    if di != 0 && dj != 0 && (grid.is_blocked(ni, cj) || grid.is_blocked(ci, nj)) {
                        continue;
                    }
                    let step = if di != 0 && dj != 0 {
                        grid.resolution * SQRT2
                    } else {
                        grid.resolution
                    };
                    let nd = best_d + step;
                    if nd < dist[idx((ni, nj))] {
                        dist[idx((ni, nj))] = nd;
                    }
                }
            }
        }
        f64::INFINITY
    }

    #[test]
    fn start_inside_obstacle_is_unreachable() {
        let env = walled_env();
        let r = plan_global_path(DVec2::new(5.0, 4.0), DVec2::new(9.0, 1.0), &env, 0.3);
        assert!(matches!(r, Err(SimError::Unreachable)));
    }

    #[test]
    fn fully_walled_goal_is_unreachable() {
        let mut env = empty_env();
        // Box the goal in completely.
        env.obstacles = vec![
            ConvexPolygon::rect(DVec2::new(6.0, 0.0), DVec2::new(6.5, 10.0)),
        ];
        // Wall spans the full height: right side unreachable from left.
        let r = plan_global_path(DVec2::new(1.0, 1.0), DVec2::new(9.0, 1.0), &env, 0.3);
        assert!(matches!(r, Err(SimError::Unreachable)));
    }

    #[test]
    fn path_vertices_keep_clearance() {
        let mut env = empty_env();
        env.obstacles = vec![ConvexPolygon::rect(
            DVec2::new(4.0, 3.0),
            DVec2::new(6.0, 7.0),
        )];
        for radius in [0.2, 0.4, 0.6] {
            let path =
                plan_global_path(DVec2::new(1.0, 5.0), DVec2::new(9.0, 5.0), &env, radius).unwrap();
            for v in &path {
                for poly in &env.obstacles {
                    assert!(
                        poly.distance(*v) >= radius - env.grid_resolution,
                        "vertex {v:?} too close at radius {radius}"
                    );
                }
            }
        }
    }
}
