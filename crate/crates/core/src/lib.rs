//! Procedural crowd simulation and labeled-dataset generation.
//!
//! The pipeline has two directions:
//!
//! * forward: sweep scenario axes, simulate crowds with reciprocal
//!   velocity-obstacle avoidance, project agents through a camera, and emit
//!   trajectories, head points, bounding boxes, counts, flow counts, and
//!   schematic frames;
//! * inverse: take observed trajectories, fit per-agent simulation
//!   parameters, map them to behavior-adjective intensities, and classify
//!   the clip into one of six behavior classes.

pub mod behavior;
pub mod classify;
pub mod dataset;
pub mod io;
pub mod kdtree;
pub mod labeling;
pub mod render;
pub mod sim;

pub use behavior::{BehaviorClass, BehaviorVector, ClassTable, SimParams};
pub use labeling::{CameraModel, FrameAnnotations};
pub use sim::{AgentState, Environment, Trajectory, World};
