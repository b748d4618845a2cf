//! Reciprocal velocity-obstacle local plan adaptation.
//!
//! Velocity-space half-plane constraints in the style of the RVO2 library,
//! in f64. Each agent pair splits avoidance responsibility 50/50; static
//! obstacle edges are handled as zero-velocity point constraints with full
//! responsibility. Infeasible constraint sets fall back to the
//! least-penetration linear program.

use glam::DVec2;

use super::{ConvexPolygon, NeighborView};
use crate::behavior::SimParams;

/// Tolerated overshoot of the preferred speed.
pub const SPEED_SLACK: f64 = 0.05;

const EPSILON: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
struct Line {
    point: DVec2,
    direction: DVec2,
}

fn det(a: DVec2, b: DVec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Half-plane constraint from one moving neighbor. `responsibility` is the
/// share of the avoidance taken by this agent (0.5 for reciprocal pairs,
/// 1.0 for non-reacting obstacles).
fn constraint_line(
    position: DVec2,
    velocity: DVec2,
    other_position: DVec2,
    other_velocity: DVec2,
    combined_radius: f64,
    horizon: f64,
    dt: f64,
    responsibility: f64,
) -> Line {
    let relative_position = other_position - position;
    let relative_velocity = velocity - other_velocity;
    let dist_sq = relative_position.length_squared();
    let combined_radius_sq = combined_radius * combined_radius;

    let (direction, u);
    if dist_sq > combined_radius_sq {
        let inv_horizon = 1.0 / horizon;
        // Vector from the cutoff circle center to the relative velocity.
        let w = relative_velocity - inv_horizon * relative_position;
        let w_length_sq = w.length_squared();
        let dot1 = w.dot(relative_position);
        if dot1 < 0.0 && dot1 * dot1 > combined_radius_sq * w_length_sq {
            // Project on the cutoff circle.
            let w_length = w_length_sq.sqrt();
            let unit_w = w / w_length;
            direction = DVec2::new(unit_w.y, -unit_w.x);
            u = (combined_radius * inv_horizon - w_length) * unit_w;
        } else {
            // Project on the nearer leg of the cone.
            let leg = (dist_sq - combined_radius_sq).sqrt();
            if det(relative_position, w) > 0.0 {
                direction = DVec2::new(
                    relative_position.x * leg - relative_position.y * combined_radius,
                    relative_position.x * combined_radius + relative_position.y * leg,
                ) / dist_sq;
            } else {
                direction = -DVec2::new(
                    relative_position.x * leg + relative_position.y * combined_radius,
                    -relative_position.x * combined_radius + relative_position.y * leg,
                ) / dist_sq;
            }
            let dot2 = relative_velocity.dot(direction);
            u = dot2 * direction - relative_velocity;
        }
    } else {
        // Already overlapping: push apart within one time step.
        let inv_time_step = 1.0 / dt;
        let w = relative_velocity - inv_time_step * relative_position;
        let w_length = w.length();
        let unit_w = if w_length > EPSILON {
            w / w_length
        } else {
            // Coincident centers; pick a fixed direction.
            DVec2::X
        };
        direction = DVec2::new(unit_w.y, -unit_w.x);
        u = (combined_radius * inv_time_step - w_length) * unit_w;
    }
    Line {
        point: velocity + responsibility * u,
        direction,
    }
}

/// Solves for the feasible velocity closest to `pref_velocity`.
///
/// Only the nearest `max_neighbors` agents within `neighbor_dist` constrain
/// the result; ties in distance break toward the lower agent id. The
/// returned speed never exceeds `pref_speed * (1 + SPEED_SLACK)`.
pub fn adapt_velocity(
    agent_id: u32,
    position: DVec2,
    velocity: DVec2,
    params: &SimParams,
    pref_velocity: DVec2,
    neighbors: &[NeighborView],
    obstacles: &[ConvexPolygon],
    dt: f64,
) -> DVec2 {
    assert!(dt > 0.0, "dt must be positive");
    let max_speed = params.pref_speed * (1.0 + SPEED_SLACK);

    let mut lines: Vec<Line> = Vec::new();

    // Obstacle constraints first; the least-penetration fallback keeps them
    // hard.
    for poly in obstacles {
        for (a, b) in poly.edges() {
            let q = closest_point_on_segment(position, a, b);
            let d = position.distance(q);
            if d < params.neighbor_dist {
                lines.push(constraint_line(
                    position,
                    velocity,
                    q,
                    DVec2::ZERO,
                    params.radius,
                    params.planning_horizon.min(2.0),
                    dt,
                    1.0,
                ));
            }
        }
    }
    let num_obstacle_lines = lines.len();

    let mut nearby: Vec<(f64, &NeighborView)> = neighbors
        .iter()
        .filter(|n| n.id != agent_id)
        .map(|n| (position.distance_squared(n.position), n))
        .filter(|(d, _)| *d <= params.neighbor_dist * params.neighbor_dist)
        .collect();
    nearby.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.id.cmp(&b.1.id)));
    nearby.truncate(params.max_neighbors as usize);

    for (_, n) in &nearby {
        lines.push(constraint_line(
            position,
            velocity,
            n.position,
            n.velocity,
            params.radius + n.radius,
            params.planning_horizon,
            dt,
            0.5,
        ));
    }

    let mut result = DVec2::ZERO;
    let fail = linear_program2(&lines, max_speed, pref_velocity, false, &mut result);
    if fail < lines.len() {
        linear_program3(&lines, num_obstacle_lines, fail, max_speed, &mut result);
    }
    result
}

fn closest_point_on_segment(p: DVec2, a: DVec2, b: DVec2) -> DVec2 {
    let ab = b - a;
    let len_sq = ab.length_squared();
    if len_sq <= EPSILON {
        return a;
    }
    let t = ((p - a).dot(ab) / len_sq).clamp(0.0, 1.0);
    a + t * ab
}

/// Optimizes along one constraint line, clipped by the speed circle and the
/// earlier constraints. Returns false if the feasible interval is empty.
fn linear_program1(
    lines: &[Line],
    line_no: usize,
    radius: f64,
    opt_velocity: DVec2,
    direction_opt: bool,
    result: &mut DVec2,
) -> bool {
    let line = lines[line_no];
    let dot = line.point.dot(line.direction);
    let discriminant = dot * dot + radius * radius - line.point.length_squared();
    if discriminant < 0.0 {
        return false;
    }
    let sqrt_discriminant = discriminant.sqrt();
    let mut t_left = -dot - sqrt_discriminant;
    let mut t_right = -dot + sqrt_discriminant;

    for prev in lines.iter().take(line_no) {
        let denominator = det(line.direction, prev.direction);
        let numerator = det(prev.direction, line.point - prev.point);
        if denominator.abs() <= EPSILON {
            if numerator < 0.0 {
                return false;
            }
            continue;
        }
        let t = numerator / denominator;
        if denominator >= 0.0 {
            t_right = t_right.min(t);
        } else {
            t_left = t_left.max(t);
        }
        if t_left > t_right {
            return false;
        }
    }

    if direction_opt {
        if opt_velocity.dot(line.direction) > 0.0 {
            *result = line.point + t_right * line.direction;
        } else {
            *result = line.point + t_left * line.direction;
        }
    } else {
        let t = line.direction.dot(opt_velocity - line.point);
        *result = line.point + t.clamp(t_left, t_right) * line.direction;
    }
    true
}

/// Returns the number of lines satisfied; on failure, the index of the
/// first unsatisfiable line.
fn linear_program2(
    lines: &[Line],
    radius: f64,
    opt_velocity: DVec2,
    direction_opt: bool,
    result: &mut DVec2,
) -> usize {
    if direction_opt {
        *result = opt_velocity * radius;
    } else if opt_velocity.length_squared() > radius * radius {
        *result = opt_velocity.normalize() * radius;
    } else {
        *result = opt_velocity;
    }
    for (i, line) in lines.iter().enumerate() {
        if det(line.direction, line.point - *result) > 0.0 {
            let temp = *result;
            if !linear_program1(lines, i, radius, opt_velocity, direction_opt, result) {
                *result = temp;
                return i;
            }
        }
    }
    lines.len()
}

/// Least-penetration fallback: minimizes the maximum violation of the
/// agent constraints while keeping obstacle constraints hard.
fn linear_program3(
    lines: &[Line],
    num_obstacle_lines: usize,
    begin_line: usize,
    radius: f64,
    result: &mut DVec2,
) {
    let mut distance = 0.0;
    for i in begin_line..lines.len() {
        if det(lines[i].direction, lines[i].point - *result) > distance {
            let mut proj_lines: Vec<Line> = lines[..num_obstacle_lines].to_vec();
            for j in num_obstacle_lines..i {
                let denominator = det(lines[i].direction, lines[j].direction);
                let point;
                if denominator.abs() <= EPSILON {
                    if lines[i].direction.dot(lines[j].direction) > 0.0 {
                        continue;
                    }
                    point = 0.5 * (lines[i].point + lines[j].point);
                } else {
                    point = lines[i].point
                        + (det(lines[j].direction, lines[i].point - lines[j].point) / denominator)
                            * lines[i].direction;
                }
                proj_lines.push(Line {
                    point,
                    direction: (lines[j].direction - lines[i].direction).normalize(),
                });
            }
            let temp = *result;
            if linear_program2(
                &proj_lines,
                radius,
                DVec2::new(-lines[i].direction.y, lines[i].direction.x),
                true,
                result,
            ) < proj_lines.len()
            {
                *result = temp;
            }
            distance = det(lines[i].direction, lines[i].point - *result);
        }
    }
}
