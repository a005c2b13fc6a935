//! Desk-scale laboratory for quality-critical robotic wiping.
//!
//! The crate bundles the pieces needed to study how reward weights shape the
//! trade-off between in-process wiping quality (contact, normal force) and fast
//! task completion:
//!
//! - [`sim`]: a seedable point-tool wiping simulator over a curved tabletop with
//!   spring-damper contact and domain randomization.
//! - [`reward`]: the per-step reward and its checkpoint-gated (bounded) variant.
//! - [`feasibility`]: closed-form and exact-rational discounted-return analysis of
//!   the terminal reward range that makes the optimal strategy dominant.
//! - [`learner`]: a small clipped-surrogate actor-critic with manual backprop.
//! - [`metrics`]: evaluation reports, IAE, and failure scene summaries.
//! - [`curriculum`]: the inspection/update loop that retunes reward weights through
//!   a pluggable advisor.

pub mod curriculum;
pub mod error;
pub mod feasibility;
pub mod learner;
pub mod metrics;
pub mod reward;
pub mod sim;

pub use error::{Error, Result};
