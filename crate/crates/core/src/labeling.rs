//! Ground-truth labels from world-space agent states: screen-space head
//! points, bounding boxes with occlusion-aware visibility, pedestrian
//! counts, and tolerance-zone flow counts.

use glam::{DVec2, DVec3};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

/// Head height of the disc-agent body proxy, meters.
pub const HEAD_HEIGHT: f64 = 1.7;
/// Full body height of the proxy box, meters.
pub const BODY_HEIGHT: f64 = 1.8;

pub const ANNOTATION_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("duplicate agent id {0}")]
    DuplicateAgentId(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ProjectionKind {
    Perspective,
    Orthographic,
}

/// Pinhole (or orthographic) camera: z-up world, position plus yaw/pitch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub position: DVec3,
    pub yaw: f64,
    pub pitch: f64,
    pub focal_px: f64,
    pub image_width: u32,
    pub image_height: u32,
    pub projection: ProjectionKind,
    #[serde(default = "default_ortho_scale")]
    pub ortho_scale: f64,
}

fn default_ortho_scale() -> f64 {
    1.0
}

impl CameraModel {
    pub fn validate(&self) -> Result<(), String> {
        if self.focal_px <= 0.0 {
            return Err("focal_px must be positive".into());
        }
        if self.image_width < 16 || self.image_height < 16 {
            return Err("image dimensions must be at least 16".into());
        }
        if self.pitch.abs() >= std::f64::consts::FRAC_PI_2 {
            return Err("pitch must lie strictly inside (-pi/2, pi/2)".into());
        }
        Ok(())
    }

    /// Right-handed camera basis: forward from yaw/pitch, up close to +z.
    pub fn basis(&self) -> (DVec3, DVec3, DVec3) {
        let (sy, cy) = self.yaw.sin_cos();
        let (sp, cp) = self.pitch.sin_cos();
        let forward = DVec3::new(cp * cy, cp * sy, sp);
        let right = forward.cross(DVec3::Z).normalize();
        let up = right.cross(forward);
        (forward, right, up)
    }
}

/// Result of projecting a world point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Projected {
    /// Sub-pixel image coordinates plus forward distance from the camera.
    Point { u: f64, v: f64, depth: f64 },
    Behind,
}

/// Projects a world point to image coordinates.
pub fn project_point(p: DVec3, cam: &CameraModel) -> Projected {
    let (forward, right, up) = cam.basis();
    let rel = p - cam.position;
    let depth = rel.dot(forward);
    if depth <= 1e-6 {
        return Projected::Behind;
    }
    let x = rel.dot(right);
    let y = rel.dot(up);
    let (u, v) = match cam.projection {
        ProjectionKind::Perspective => (
            cam.image_width as f64 / 2.0 + cam.focal_px * (x / depth),
            cam.image_height as f64 / 2.0 - cam.focal_px * (y / depth),
        ),
        ProjectionKind::Orthographic => (
            cam.image_width as f64 / 2.0 + cam.ortho_scale * x,
            cam.image_height as f64 / 2.0 - cam.ortho_scale * y,
        ),
    };
    Projected::Point { u, v, depth }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadPoint {
    pub agent_id: u32,
    pub u: f64,
    pub v: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundingBox {
    pub agent_id: u32,
    pub u_min: f64,
    pub v_min: f64,
    pub u_max: f64,
    pub v_max: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowSnapshot {
    pub line_id: u32,
    pub in_count: u64,
    pub out_count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameAnnotations {
    pub frame: u64,
    pub head_points: Vec<HeadPoint>,
    pub boxes: Vec<BoundingBox>,
    pub pedestrian_count: u32,
    pub flows: Vec<FlowSnapshot>,
}

/// Annotation file payload: schema version plus one entry per frame.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VideoAnnotations {
    pub schema_version: u32,
    pub frames: Vec<FrameAnnotations>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZoneState {
    Outside,
    InZoneFromNeg,
    InZoneFromPos,
}

/// Counting line with a tolerance zone: only full traversals across the
/// zone increment the counters.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlowLine {
    pub id: u32,
    pub a: DVec2,
    pub b: DVec2,
    pub tolerance_halfwidth: f64,
    pub in_count: u64,
    pub out_count: u64,
    #[serde(default)]
    pub states: BTreeMap<u32, ZoneState>,
}

impl FlowLine {
    pub fn new(id: u32, a: DVec2, b: DVec2, tolerance_halfwidth: f64) -> Self {
        assert!(tolerance_halfwidth > 0.0);
        FlowLine {
            id,
            a,
            b,
            tolerance_halfwidth,
            in_count: 0,
            out_count: 0,
            states: BTreeMap::new(),
        }
    }

    /// Signed distance to the oriented line and position along the segment.
    fn coords(&self, p: DVec2) -> (f64, f64) {
        let e = (self.b - self.a).normalize();
        let n = DVec2::new(e.y, -e.x);
        let rel = p - self.a;
        (rel.dot(n), rel.dot(e))
    }

    fn in_zone(&self, p: DVec2) -> bool {
        let (s, t) = self.coords(p);
        s.abs() <= self.tolerance_halfwidth && t >= 0.0 && t <= self.a.distance(self.b)
    }

    pub fn snapshot(&self) -> FlowSnapshot {
        FlowSnapshot {
            line_id: self.id,
            in_count: self.in_count,
            out_count: self.out_count,
        }
    }
}

/// The `f` sub-interval of a step where `q0 + f (q1 - q0)` lies in
/// `[lo, hi]`; empty intervals come back inverted.
fn linear_range(q0: f64, q1: f64, lo: f64, hi: f64) -> (f64, f64) {
    let d = q1 - q0;
    if d == 0.0 {
        if (lo..=hi).contains(&q0) {
            (f64::NEG_INFINITY, f64::INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        }
    } else {
        let fa = (lo - q0) / d;
        let fb = (hi - q0) / d;
        (fa.min(fb), fa.max(fb))
    }
}

/// Advances the per-agent zone state machine with one movement step per
/// agent: `(agent_id, previous position, current position)`.
///
/// Each step is treated as the continuous segment it traces, so the
/// counts do not depend on how finely a path is sampled: a traversal
/// counts exactly when the agent leaves the zone through the tolerance
/// face opposite its entry side, never when it drifts out past the
/// segment's extent first.
pub fn update_flow(line: &mut FlowLine, moves: &[(u32, DVec2, DVec2)]) {
    let hw = line.tolerance_halfwidth;
    let len = line.a.distance(line.b);
    for &(id, prev, curr) in moves {
        let initial = if line.in_zone(prev) {
            let (s, _) = line.coords(prev);
            if s < 0.0 {
                ZoneState::InZoneFromNeg
            } else {
                ZoneState::InZoneFromPos
            }
        } else {
            ZoneState::Outside
        };
        let state = *line.states.entry(id).or_insert(initial);
        let (s0, t0) = line.coords(prev);
        let (s1, t1) = line.coords(curr);

        // In-zone sub-interval of the step: band and extent constraints
        // are both linear in f, so their intersection is one interval.
        let (band_lo, band_hi) = linear_range(s0, s1, -hw, hw);
        let (ext_lo, ext_hi) = linear_range(t0, t1, 0.0, len);
        let f0 = band_lo.max(ext_lo).max(0.0);
        let f1 = band_hi.min(ext_hi).min(1.0);

        let next = if f0 > f1 {
            ZoneState::Outside
        } else {
            let entry_negative = match state {
                ZoneState::InZoneFromNeg => true,
                ZoneState::InZoneFromPos => false,
                ZoneState::Outside => {
                    let s_entry = s0 + f0 * (s1 - s0);
                    if s_entry != 0.0 {
                        s_entry < 0.0
                    } else {
                        s0 < 0.0
                    }
                }
            };
            if f1 >= 1.0 {
                // Still inside the zone when the step ends.
                if entry_negative {
                    ZoneState::InZoneFromNeg
                } else {
                    ZoneState::InZoneFromPos
                }
            } else {
                // Leaves the zone mid-step; a full traversal requires the
                // band face to bind the exit, not the extent face.
                if band_hi < ext_hi {
                    let leaves_positive = s1 > s0;
                    if entry_negative && leaves_positive {
                        line.in_count += 1;
                    } else if !entry_negative && !leaves_positive {
                        line.out_count += 1;
                    }
                }
                ZoneState::Outside
            }
        };
        line.states.insert(id, next);
    }
}

/// Minimal per-agent state needed for labeling one frame.
#[derive(Debug, Clone, Copy)]
pub struct AgentSnapshot {
    pub id: u32,
    pub position: DVec2,
    pub radius: f64,
}

fn project_box(snap: &AgentSnapshot, cam: &CameraModel) -> Option<(f64, f64, f64, f64)> {
    let r = snap.radius;
    let mut u_min = f64::INFINITY;
    let mut u_max = f64::NEG_INFINITY;
    let mut v_min = f64::INFINITY;
    let mut v_max = f64::NEG_INFINITY;
    for dx in [-r, r] {
        for dy in [-r, r] {
            for z in [0.0, BODY_HEIGHT] {
                let p = DVec3::new(snap.position.x + dx, snap.position.y + dy, z);
                match project_point(p, cam) {
                    Projected::Point { u, v, .. } => {
                        u_min = u_min.min(u);
                        u_max = u_max.max(u);
                        v_min = v_min.min(v);
                        v_max = v_max.max(v);
                    }
                    // A partially-behind box is unbounded in the image.
                    Projected::Behind => return None,
                }
            }
        }
    }
    Some((u_min, v_min, u_max, v_max))
}

/// Labels one frame. `moves` carries (id, previous, current) positions for
/// flow counting; pass an empty slice on the first frame.
pub fn annotate_frame(
    frame: u64,
    agents: &[AgentSnapshot],
    cam: &CameraModel,
    flows: &mut [FlowLine],
    moves: &[(u32, DVec2, DVec2)],
) -> Result<FrameAnnotations, LabelError> {
    {
        let mut seen = std::collections::HashSet::new();
        for a in agents {
            if !seen.insert(a.id) {
                return Err(LabelError::DuplicateAgentId(a.id));
            }
        }
    }
    let w = cam.image_width as f64;
    let h = cam.image_height as f64;

    struct Projection {
        head: Option<(f64, f64, f64)>,
        bbox: Option<(f64, f64, f64, f64)>,
    }
    let projections: Vec<Projection> = agents
        .iter()
        .map(|a| {
            let head_world = DVec3::new(a.position.x, a.position.y, HEAD_HEIGHT);
            let head = match project_point(head_world, cam) {
                Projected::Point { u, v, depth } => Some((u, v, depth)),
                Projected::Behind => None,
            };
            let bbox = project_box(a, cam).and_then(|(u0, v0, u1, v1)| {
                let cu0 = u0.max(0.0);
                let cv0 = v0.max(0.0);
                let cu1 = u1.min(w);
                let cv1 = v1.min(h);
                if cu0 < cu1 && cv0 < cv1 {
                    Some((cu0, cv0, cu1, cv1))
                } else {
                    None
                }
            });
            Projection { head, bbox }
        })
        .collect();

    let mut head_points = Vec::with_capacity(agents.len());
    let mut boxes = Vec::with_capacity(agents.len());
    let mut count = 0u32;
    for (i, a) in agents.iter().enumerate() {
        let p = &projections[i];
        let (hu, hv, on_image, depth) = match p.head {
            Some((u, v, d)) => (u, v, u >= 0.0 && u < w && v >= 0.0 && v < h, d),
            None => (-1.0, -1.0, false, f64::INFINITY),
        };
        // Occluded when a strictly nearer agent's clipped box covers the
        // head pixel.
        let occluded = on_image
            && agents.iter().enumerate().any(|(j, _)| {
                if j == i {
                    return false;
                }
                let q = &projections[j];
                let nearer = match q.head {
                    Some((_, _, d)) => d < depth,
                    None => false,
                };
                nearer
                    && q.bbox.is_some_and(|(u0, v0, u1, v1)| {
                        hu >= u0 && hu <= u1 && hv >= v0 && hv <= v1
                    })
            });
        let visible = on_image && !occluded;
        if visible {
            count += 1;
        }
        head_points.push(HeadPoint {
            agent_id: a.id,
            u: hu,
            v: hv,
            visible,
        });
        boxes.push(match p.bbox {
            Some((u0, v0, u1, v1)) => BoundingBox {
                agent_id: a.id,
                u_min: u0,
                v_min: v0,
                u_max: u1,
                v_max: v1,
                visible: true,
            },
            None => BoundingBox {
                agent_id: a.id,
                u_min: 0.0,
                v_min: 0.0,
                u_max: 0.0,
                v_max: 0.0,
                visible: false,
            },
        });
    }

    let mut flow_snapshots = Vec::with_capacity(flows.len());
    for line in flows.iter_mut() {
        update_flow(line, moves);
        flow_snapshots.push(line.snapshot());
    }

    Ok(FrameAnnotations {
        frame,
        head_points,
        boxes,
        pedestrian_count: count,
        flows: flow_snapshots,
    })
}

/// Annotates a whole run frame by frame, with fresh flow-line state.
pub fn annotate_log(
    frames: &[Vec<AgentSnapshot>],
    cam: &CameraModel,
    flow_defs: &[FlowLine],
) -> Result<VideoAnnotations, LabelError> {
    let mut flows: Vec<FlowLine> = flow_defs.to_vec();
    for f in flows.iter_mut() {
        f.in_count = 0;
        f.out_count = 0;
        f.states.clear();
    }
    let mut out = Vec::with_capacity(frames.len());
    for (k, agents) in frames.iter().enumerate() {
        let moves: Vec<(u32, DVec2, DVec2)> = if k == 0 {
            Vec::new()
        } else {
            let prev = &frames[k - 1];
            agents
                .iter()
                .filter_map(|a| {
                    prev.iter()
                        .find(|p| p.id == a.id)
                        .map(|p| (a.id, p.position, a.position))
                })
                .collect()
        };
        out.push(annotate_frame(k as u64, agents, cam, &mut flows, &moves)?);
    }
    Ok(VideoAnnotations {
        schema_version: ANNOTATION_SCHEMA_VERSION,
        frames: out,
    })
}

/// Bounding boxes of visible agents in delimiter-separated rows.
pub fn boxes_csv(annotations: &VideoAnnotations) -> String {
    let mut out = String::from("frame,agent_id,u_min,v_min,u_max,v_max\n");
    for f in &annotations.frames {
        for b in &f.boxes {
            if b.visible {
                out.push_str(&format!(
                    "{},{},{:.6},{:.6},{:.6},{:.6}\n",
                    f.frame, b.agent_id, b.u_min, b.v_min, b.u_max, b.v_max
                ));
            }
        }
    }
    out
}
