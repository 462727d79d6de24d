//! Semantic assembly representation for cost-based robot manipulation.
//!
//! A translation model writes a program over a small typed vocabulary
//! (`language`); the program evaluates to a non-negative cost over a
//! point-cloud scene (`costs`); the pose solver finds the gripper motion that
//! minimizes that cost plus motion regularizers (`solver`). Object parts are
//! located by phrase retrieval (`retrieval`), and representations are compared
//! with the generalizability and comprehensibility metrics (`metrics`).
//! `pipeline` strings these together per instruction; `fixtures` holds the
//! synthetic scenes and shipped data.

pub mod costs;
pub mod fixtures;
pub mod geometry;
pub mod language;
pub mod metrics;
pub mod pipeline;
pub mod retrieval;
pub mod solver;
