//! The tracking loops.
//!
//! A tracker owns a process model, the sampler state, every learning
//! iterate, and its random streams; [`Tracker::step`] advances one slot and
//! reports what happened. Three families are provided:
//!
//! - [`CentralTracker`] — a fusion center activates a subset each slot.
//!   [`CentralMode`] picks between the exact-error variant (known process
//!   parameter, price adaptation only) and the learning variants (unknown
//!   parameter; periodic full sensor reads feed error-table and parameter
//!   updates, or a cheaper per-configuration scheme that never reads extra
//!   sensors).
//! - [`DistIidTracker`] — no fusion center: every node runs an identical
//!   sampler from a shared seed, estimates locally, and exchanges estimates
//!   once per slot through learned consensus-gain matrices.
//! - [`KcfTracker`] — Markov-chain tracking where each node runs a
//!   Kalman-consensus filter over belief vectors and the error table is
//!   learned from delayed network-averaged error proxies.
//!
//! Every tracker draws from the same labeled streams in the same per-slot
//! order (sampler, process, one stream per sensor, then any perturbations),
//! so trackers sharing a master seed see identical sample paths — paired
//! comparisons across policies are exact, not just statistical.

mod central;
mod dist_iid;
mod kcf;

pub use central::{CentralMode, CentralParams, CentralTracker};
pub use dist_iid::{consensus_combine, DistIidParams, DistIidTracker};
pub use kcf::{kcf_update, simplex_project, KcfNodeState, KcfParams, KcfTracker};

use crate::Result;

/// What one slot produced, in metric form.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    /// Slot index, starting at 0.
    pub t: u64,
    /// Instantaneous squared estimation error (network-averaged for
    /// distributed trackers).
    pub mse: f64,
    /// `‖B(t)‖₁`, the number of sensors activated by the selection policy.
    pub active: usize,
    /// Activation price λ(t) after this slot's update.
    pub lambda: f64,
    /// Current parameter estimate (empty when the tracker learns none).
    pub theta: Vec<f64>,
    /// Sensors read this slot beyond the selected subset (the size of a
    /// full learning read; 0 on ordinary slots and for trackers that never
    /// read extra sensors).
    pub extra_reads: usize,
    /// Tracker-specific trailing metrics, matching
    /// [`Tracker::extra_columns`] in order and length.
    pub extras: Vec<f64>,
}

/// One slot-stepped tracking loop.
pub trait Tracker {
    /// Number of parameter components reported in [`SlotRecord::theta`].
    fn theta_dim(&self) -> usize;

    /// Labels for the tracker-specific trailing metric columns.
    fn extra_columns(&self) -> Vec<String> {
        Vec::new()
    }

    /// Advances one slot: sample a configuration, observe, estimate, and
    /// run every learning update that fires this slot.
    fn step(&mut self) -> Result<SlotRecord>;
}
