//! Inverse pipeline: recover per-agent simulation parameters from observed
//! trajectories by re-simulating short windows, map them through the
//! behavior matrix, and classify whole videos.

use glam::DVec2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::behavior::{
    classify_vector, params_to_behavior, BehaviorClass, BehaviorError, BehaviorVector, ClassTable,
    SimParams, PARAM_MAX, PARAM_MIN,
};
use crate::sim::{adapt_velocity, NeighborView, TrajectoryLog};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("agent {0} has fewer than {MIN_SAMPLES} samples")]
    InsufficientData(u32),
    #[error("no agent in the video has enough samples")]
    NoUsableAgents,
    #[error(transparent)]
    Behavior(#[from] BehaviorError),
}

/// Minimum observed samples per agent for a parameter fit.
pub const MIN_SAMPLES: usize = 10;

/// Re-simulation window length in steps.
const WINDOW: usize = 5;
/// Start-frame stride between windows.
const WINDOW_STRIDE: usize = 5;
/// Frames ahead of the window start used as the goal proxy. Much longer
/// than the window itself, so avoidance detours inside the window are not
/// already encoded in the goal.
const GOAL_LOOKAHEAD: usize = 30;
/// Grid points per parameter axis in one coordinate-descent sweep.
const GRID_POINTS: usize = 7;
/// Full passes of coordinate descent.
const PASSES: usize = 3;
/// Residual spread below which an axis is unidentifiable and defaults to
/// the reference value.
const IDENTIFIABILITY_EPS: f64 = 1e-9;

/// One observed track: positions at every frame, fixed dt.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservedTrack {
    pub agent_id: u32,
    pub positions: Vec<DVec2>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObservedVideo {
    pub dt: f64,
    pub tracks: Vec<ObservedTrack>,
}

impl ObservedVideo {
    pub fn from_log(log: &TrajectoryLog) -> ObservedVideo {
        ObservedVideo {
            dt: log.dt,
            tracks: log
                .agent_ids
                .iter()
                .enumerate()
                .map(|(k, &id)| ObservedTrack {
                    agent_id: id,
                    positions: log.frames.iter().map(|f| f[k].0).collect(),
                })
                .collect(),
        }
    }
}

/// Fitted parameters for one agent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResult {
    pub agent_id: u32,
    pub params: SimParams,
    pub behavior: BehaviorVector,
    /// Mean squared re-simulation error of the accepted fit, m^2.
    pub residual: f64,
    pub samples: usize,
}

/// Whole-video classification with per-agent diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoClassification {
    pub mean_behavior: BehaviorVector,
    /// Nearest class-table entry to the mean vector.
    pub class: BehaviorClass,
    pub table_distance: f64,
    /// Argmax of the mean vector, as a cross-check on the table lookup.
    pub argmax_class: BehaviorClass,
    pub fits: Vec<FitResult>,
}

/// Backward-difference velocities; `v[0]` repeats `v[1]` so indices align
/// with positions.
fn differentiate(positions: &[DVec2], dt: f64) -> Vec<DVec2> {
    let mut v: Vec<DVec2> = std::iter::once(DVec2::ZERO)
        .chain(positions.windows(2).map(|w| (w[1] - w[0]) / dt))
        .collect();
    if v.len() > 1 {
        v[0] = v[1];
    }
    v
}

/// Nearest-rank percentile, q in (0, 1].
fn percentile_nearest_rank(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Mean squared error of re-simulating short windows of `track` with the
/// candidate parameters, against the rest of the video as moving context.
fn window_residual(
    video: &ObservedVideo,
    velocities: &[Vec<DVec2>],
    neighbor_radii: &[f64],
    track_idx: usize,
    params: &SimParams,
) -> f64 {
    let track = &video.tracks[track_idx];
    let n = track.positions.len();
    let dt = video.dt;
    let mut sum = 0.0;
    let mut weight = 0.0;
    let mut t0 = 1;
    while t0 + WINDOW < n {
        let goal = track.positions[(t0 + GOAL_LOOKAHEAD).min(n - 1)];
        let mut pos = track.positions[t0];
        let mut vel = velocities[track_idx][t0];
        for h in 0..WINDOW {
            let frame = t0 + h;
            let neighbors: Vec<NeighborView> = video
                .tracks
                .iter()
                .enumerate()
                .filter(|&(j, other)| j != track_idx && frame < other.positions.len())
                .map(|(j, other)| NeighborView {
                    id: other.agent_id,
                    position: other.positions[frame],
                    velocity: velocities[j][frame],
                    radius: neighbor_radii[j],
                })
                .collect();
            let to_goal = goal - pos;
            let dist = to_goal.length();
            let pref = if dist < 1e-9 {
                DVec2::ZERO
            } else {
                to_goal / dist * params.pref_speed
            };
            vel = adapt_velocity(
                track.agent_id,
                pos,
                vel,
                params,
                pref,
                &neighbors,
                &[],
                dt,
            );
            pos += vel * dt;
            let err = pos.distance_squared(track.positions[frame + 1]);
            // Maneuver-weighted: steps where the observed agent actually
            // turned or braked carry the information about its avoidance
            // parameters; straight stretches fit every candidate alike.
            let observed_dv = (velocities[track_idx][frame + 1]
                - velocities[track_idx][frame])
                .length();
            let w = MANEUVER_WEIGHT_FLOOR + observed_dv;
            sum += w * err;
            weight += w;
        }
        t0 += WINDOW_STRIDE;
    }
    if weight == 0.0 {
        0.0
    } else {
        sum / weight
    }
}

/// Base step weight in the maneuver-weighted residual, m/s.
const MANEUVER_WEIGHT_FLOOR: f64 = 0.02;

/// Half the closest approach to any other agent, when a genuine squeeze
/// happened: the local adaptation holds disc separation at the radius sum
/// at contact, so close encounters reveal the radii directly.
fn encounter_radius(video: &ObservedVideo, track_idx: usize) -> Option<f64> {
    let track = &video.tracks[track_idx];
    let mut min_d = f64::INFINITY;
    for (t, p) in track.positions.iter().enumerate() {
        for (j, other) in video.tracks.iter().enumerate() {
            if j != track_idx && t < other.positions.len() {
                min_d = min_d.min(p.distance(other.positions[t]));
            }
        }
    }
    (min_d <= 2.0 * PARAM_MAX[3])
        .then(|| (min_d / 2.0).clamp(PARAM_MIN[3], PARAM_MAX[3]))
}

fn axis_value(p: &SimParams, axis: usize) -> f64 {
    match axis {
        0 => p.neighbor_dist,
        1 => f64::from(p.max_neighbors),
        2 => p.planning_horizon,
        3 => p.radius,
        _ => p.pref_speed,
    }
}

fn set_axis(p: &mut SimParams, axis: usize, v: f64) {
    match axis {
        0 => p.neighbor_dist = v,
        1 => p.max_neighbors = v.round() as u32,
        2 => p.planning_horizon = v,
        3 => p.radius = v,
        _ => p.pref_speed = v,
    }
}

/// Fits the parameters of one track.
///
/// The preferred speed comes from the 90th-percentile observed speed
/// (nearest rank). The remaining four parameters are found by coordinate
/// descent on the window re-simulation residual; axes whose residual spread
/// stays below [`IDENTIFIABILITY_EPS`] default to the reference values.
pub fn estimate_params(
    video: &ObservedVideo,
    velocities: &[Vec<DVec2>],
    track_idx: usize,
) -> Result<FitResult, ClassifyError> {
    let track = &video.tracks[track_idx];
    let n = track.positions.len();
    if n < MIN_SAMPLES {
        return Err(ClassifyError::InsufficientData(track.agent_id));
    }

    let mut speeds: Vec<f64> = velocities[track_idx][1..]
        .iter()
        .map(|v| v.length())
        .collect();
    speeds.sort_by(f64::total_cmp);
    // The velocity adapter never exceeds the preferred speed by more than
    // its slack factor, and an agent that is ever unconstrained moves at
    // exactly the preferred speed, so the peak observed speed brackets it
    // within [peak / slack, peak]. The percentile is the fallback for
    // agents that never get moving.
    let peak_speed = *speeds.last().expect("MIN_SAMPLES > 1");
    let p90_speed = percentile_nearest_rank(&speeds, 0.9);
    let pref_speed = (peak_speed / 1.05)
        .max(p90_speed)
        .clamp(PARAM_MIN[4], PARAM_MAX[4]);

    let mut current = SimParams {
        pref_speed,
        ..SimParams::REFERENCE
    };
    let reference = SimParams::REFERENCE.to_array();

    // Radius comes from closest encounters when any occurred; otherwise it
    // joins the residual search.
    let neighbor_radii: Vec<f64> = (0..video.tracks.len())
        .map(|j| encounter_radius(video, j).unwrap_or(SimParams::REFERENCE.radius))
        .collect();
    let radius_estimate = encounter_radius(video, track_idx);
    if let Some(r) = radius_estimate {
        current.radius = r;
    }
    // The planning horizon is not recoverable from short re-simulation
    // windows without a strong upward bias (a long-horizon smooth
    // predictor out-scores a phase-mismatched short-horizon one in MSE),
    // so it stays at the reference value.
    let free_axes: &[usize] = if radius_estimate.is_some() {
        &[0, 1]
    } else {
        &[0, 1, 3]
    };

    // A narrow residual search inside the peak-speed bracket settles
    // where in it the preferred speed sits.
    let speed_lo = (peak_speed / 1.05).max(PARAM_MIN[4]).min(PARAM_MAX[4]);
    let speed_hi = peak_speed.clamp(speed_lo, PARAM_MAX[4]);

    for pass in 0..PASSES {
        for &axis in free_axes.iter().chain(&[4usize]) {
            let (range_lo, range_hi) = if axis == 4 {
                (speed_lo, speed_hi)
            } else {
                (PARAM_MIN[axis], PARAM_MAX[axis])
            };
            let full = range_hi - range_lo;
            // Whole range on the first pass, then halved spans around the
            // current value.
            let span = full / 2f64.powi(pass as i32);
            let center = if pass == 0 {
                0.5 * (range_lo + range_hi)
            } else {
                axis_value(&current, axis)
            };
            let lo = (center - span).max(range_lo);
            let hi = (center + span).min(range_hi);
            let mut grid = [(0.0, 0.0); GRID_POINTS];
            let mut best_r = f64::INFINITY;
            let mut worst_r = f64::NEG_INFINITY;
            for (k, slot) in grid.iter_mut().enumerate() {
                let v = lo + (hi - lo) * k as f64 / (GRID_POINTS - 1) as f64;
                let mut cand = current;
                set_axis(&mut cand, axis, v);
                let r = window_residual(video, velocities, &neighbor_radii, track_idx, &cand);
                *slot = (v, r);
                best_r = best_r.min(r);
                worst_r = worst_r.max(r);
            }
            if worst_r - best_r < IDENTIFIABILITY_EPS {
                // Flat over the whole range: unidentifiable, use the
                // direct estimate. Flat over a narrowed later-pass span
                // just means the plateau was entered; keep the value.
                if pass == 0 {
                    set_axis(&mut current, axis, if axis == 4 { pref_speed } else { reference[axis] });
                }
            } else {
                // The residual often plateaus past an interaction range
                // (e.g. distant neighbors never constrain); the midpoint
                // of the near-minimal set beats its smallest element.
                let tol = IDENTIFIABILITY_EPS + 1e-6 * best_r;
                let near: Vec<f64> = grid
                    .iter()
                    .filter(|(_, r)| *r <= best_r + tol)
                    .map(|(v, _)| *v)
                    .collect();
                let mid = 0.5 * (near[0] + near[near.len() - 1]);
                set_axis(&mut current, axis, mid);
            }
        }
    }

    let residual = window_residual(video, velocities, &neighbor_radii, track_idx, &current);
    Ok(FitResult {
        agent_id: track.agent_id,
        params: current,
        behavior: params_to_behavior(current),
        residual,
        samples: n,
    })
}

/// Nearest table entry after re-projecting every entry onto the slice of
/// parameter space the estimator can actually reach: the planning horizon
/// is unidentifiable from trajectories and is pinned at the reference
/// value in every fit, so each entry's horizon is replaced by that same
/// value before comparing. The pinned axis then contributes the same
/// systematic offset to both sides and cannot tilt the class decision.
fn nearest_class_pinned(
    table: &ClassTable,
    b: BehaviorVector,
) -> Result<(BehaviorClass, f64), ClassifyError> {
    let q = b.to_array();
    let mut best: Option<(BehaviorClass, f64)> = None;
    for e in table.entries() {
        let mut p = e.params;
        p.planning_horizon = SimParams::REFERENCE.planning_horizon;
        let v = params_to_behavior(p).to_array();
        let d2: f64 = q.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum();
        if best.map_or(true, |(_, bd)| d2 < bd) {
            best = Some((e.class, d2));
        }
    }
    let (class, d2) = best.ok_or(BehaviorError::EmptyTable)?;
    Ok((class, d2.sqrt()))
}

/// Classifies one video: fit every usable agent, average the behavior
/// vectors, and look the mean up in the class table.
pub fn classify_video(
    video: &ObservedVideo,
    table: &ClassTable,
) -> Result<VideoClassification, ClassifyError> {
    let velocities: Vec<Vec<DVec2>> = video
        .tracks
        .iter()
        .map(|t| differentiate(&t.positions, video.dt))
        .collect();
    let mut fits = Vec::new();
    for i in 0..video.tracks.len() {
        match estimate_params(video, &velocities, i) {
            Ok(f) => fits.push(f),
            Err(ClassifyError::InsufficientData(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    if fits.is_empty() {
        return Err(ClassifyError::NoUsableAgents);
    }
    let mut mean = [0.0; 6];
    for f in &fits {
        let b = f.behavior.to_array();
        for (m, x) in mean.iter_mut().zip(b) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= fits.len() as f64;
    }
    let mean_behavior = BehaviorVector::from_array(mean);
    let (class, table_distance) = nearest_class_pinned(table, mean_behavior)?;
    Ok(VideoClassification {
        mean_behavior,
        class,
        table_distance,
        argmax_class: classify_vector(mean_behavior),
        fits,
    })
}

/// Row-stochastic 6x6 confusion matrix over behavior classes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 6]; 6],
}

impl ConfusionMatrix {
    pub fn from_pairs(pairs: &[(BehaviorClass, BehaviorClass)]) -> ConfusionMatrix {
        let mut counts = [[0u64; 6]; 6];
        for &(truth, pred) in pairs {
            counts[truth.index()][pred.index()] += 1;
        }
        ConfusionMatrix { counts }
    }

    /// Rows normalized to sum to one; all-zero rows stay zero.
    pub fn normalized(&self) -> [[f64; 6]; 6] {
        let mut out = [[0.0; 6]; 6];
        for (r, row) in self.counts.iter().enumerate() {
            let total: u64 = row.iter().sum();
            if total > 0 {
                for (c, &n) in row.iter().enumerate() {
                    out[r][c] = n as f64 / total as f64;
                }
            }
        }
        out
    }

    pub fn diagonal(&self) -> [f64; 6] {
        let n = self.normalized();
        std::array::from_fn(|i| n[i][i])
    }

    pub fn accuracy(&self) -> f64 {
        let total: u64 = self.counts.iter().flatten().sum();
        if total == 0 {
            return 0.0;
        }
        let hits: u64 = (0..6).map(|i| self.counts[i][i]).sum();
        hits as f64 / total as f64
    }

    /// Plain-text table with row labels, for reports.
    pub fn render(&self) -> String {
        let n = self.normalized();
        let mut out = String::from("truth \\ pred  aggr  asse  shy   acti  tens  impu\n");
        for (r, class) in BehaviorClass::ALL.iter().enumerate() {
            out.push_str(&format!("{:<12}", class.name()));
            for c in 0..6 {
                out.push_str(&format!("  {:.2}", n[r][c]));
            }
            out.push('\n');
        }
        out
    }
}

/// Confusion matrix over (true class, classified video) pairs.
pub fn evaluate(
    videos: &[(BehaviorClass, ObservedVideo)],
    table: &ClassTable,
) -> Result<ConfusionMatrix, ClassifyError> {
    #[cfg(feature = "parallel")]
    let results: Vec<Result<(BehaviorClass, BehaviorClass), ClassifyError>> = {
        use rayon::prelude::*;
        videos
            .par_iter()
            .map(|(truth, v)| Ok((*truth, classify_video(v, table)?.class)))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<(BehaviorClass, BehaviorClass), ClassifyError>> = videos
        .iter()
        .map(|(truth, v)| Ok((*truth, classify_video(v, table)?.class)))
        .collect();
    let pairs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    Ok(ConfusionMatrix::from_pairs(&pairs))
}
