//! Delimiter-separated trajectory exchange format.
//!
//! One row per (frame, agent): `frame,agent_id,x,y,vx,vy`, floats with six
//! decimal digits, mandatory header row. The simulator writes it and the
//! classifier reads it.

use glam::DVec2;
use thiserror::Error;

use crate::sim::{Trajectory, TrajectoryLog};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("trajectory file is empty")]
    Empty,
}

pub const TRAJECTORY_HEADER: &str = "frame,agent_id,x,y,vx,vy";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    pub frame: u64,
    pub agent_id: u32,
    pub position: DVec2,
    pub velocity: DVec2,
}

/// Rounds through the on-disk 6-decimal representation, so values computed
/// from a written file match values computed before writing.
pub fn round6(x: f64) -> f64 {
    format!("{x:.6}").parse().expect("formatted float")
}

pub fn write_trajectory_csv(log: &TrajectoryLog) -> String {
    let mut out = String::from(TRAJECTORY_HEADER);
    out.push('\n');
    for (frame, states) in log.frames.iter().enumerate() {
        for (k, &id) in log.agent_ids.iter().enumerate() {
            let (p, v) = states[k];
            out.push_str(&format!(
                "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                frame, id, p.x, p.y, v.x, v.y
            ));
        }
    }
    out
}

pub fn parse_trajectory_csv(text: &str) -> Result<Vec<TrajectoryRow>, IoError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim() == TRAJECTORY_HEADER => {}
        Some((_, header)) => {
            return Err(IoError::Parse {
                line: 1,
                message: format!("expected header {TRAJECTORY_HEADER:?}, found {header:?}"),
            })
        }
        None => return Err(IoError::Empty),
    }
    let mut rows = Vec::new();
    for (i, raw) in lines {
        let line = i + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != 6 {
            return Err(IoError::Parse {
                line,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let num = |idx: usize| -> Result<f64, IoError> {
            fields[idx].trim().parse().map_err(|_| IoError::Parse {
                line,
                message: format!("field {} is not a number: {:?}", idx + 1, fields[idx]),
            })
        };
        let frame: u64 = fields[0].trim().parse().map_err(|_| IoError::Parse {
            line,
            message: format!("bad frame index {:?}", fields[0]),
        })?;
        let agent_id: u32 = fields[1].trim().parse().map_err(|_| IoError::Parse {
            line,
            message: format!("bad agent id {:?}", fields[1]),
        })?;
        rows.push(TrajectoryRow {
            frame,
            agent_id,
            position: DVec2::new(num(2)?, num(3)?),
            velocity: DVec2::new(num(4)?, num(5)?),
        });
    }
    if rows.is_empty() {
        return Err(IoError::Empty);
    }
    Ok(rows)
}

/// Groups rows into per-agent trajectories ordered by frame.
pub fn rows_to_trajectories(rows: &[TrajectoryRow]) -> Vec<Trajectory> {
    let mut ids: Vec<u32> = rows.iter().map(|r| r.agent_id).collect();
    ids.sort_unstable();
    ids.dedup();
    ids.iter()
        .map(|&id| {
            let mut samples: Vec<(u64, DVec2)> = rows
                .iter()
                .filter(|r| r.agent_id == id)
                .map(|r| (r.frame, r.position))
                .collect();
            samples.sort_by_key(|s| s.0);
            Trajectory {
                agent_id: id,
                samples,
            }
        })
        .collect()
}

/// Rebuilds a frame-major log from parsed rows. Rows must cover the same
/// frame set for every agent.
pub fn rows_to_log(rows: &[TrajectoryRow], dt: f64) -> Result<TrajectoryLog, IoError> {
    let mut agent_ids: Vec<u32> = rows.iter().map(|r| r.agent_id).collect();
    agent_ids.sort_unstable();
    agent_ids.dedup();
    let mut frames_idx: Vec<u64> = rows.iter().map(|r| r.frame).collect();
    frames_idx.sort_unstable();
    frames_idx.dedup();
    let id_pos: std::collections::HashMap<u32, usize> = agent_ids
        .iter()
        .enumerate()
        .map(|(i, &id)| (id, i))
        .collect();
    let frame_pos: std::collections::HashMap<u64, usize> = frames_idx
        .iter()
        .enumerate()
        .map(|(i, &f)| (f, i))
        .collect();
    let mut frames = vec![vec![None; agent_ids.len()]; frames_idx.len()];
    for r in rows {
        frames[frame_pos[&r.frame]][id_pos[&r.agent_id]] = Some((r.position, r.velocity));
    }
    let frames: Result<Vec<Vec<(DVec2, DVec2)>>, IoError> = frames
        .into_iter()
        .enumerate()
        .map(|(i, f)| {
            f.into_iter()
                .collect::<Option<Vec<_>>>()
                .ok_or_else(|| IoError::Parse {
                    line: 0,
                    message: format!("frame {} is missing some agents", frames_idx[i]),
                })
        })
        .collect();
    Ok(TrajectoryLog {
        agent_ids,
        dt,
        frames: frames?,
    })
}
