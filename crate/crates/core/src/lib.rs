//! Computational core for RIS-assisted indoor THz downlink networks.
//!
//! The crate is `no_std` (with `alloc`) and covers everything that does not
//! touch the filesystem or threads:
//!
//! * [`topology`]: node placement in role boxes and the directed link graph.
//! * [`channel`]: THz absorption, channel gain, noise and per-link capacity.
//! * [`routing`]: loopless k-shortest downlink paths between BSs and VR users.
//! * [`lp`]: the max-multiplier load-balancing program and a dense simplex.
//!
//! The `std` feature only lifts `#![no_std]`; error types implement
//! `core::error::Error` either way.

#![cfg_attr(not(any(test, feature = "std")), no_std)]

extern crate alloc;

pub mod channel;
pub mod lp;
pub mod routing;
pub mod topology;

pub use channel::{ChannelError, ChannelParams, UsageSets};
pub use lp::{Demand, LpError, LpModel, LpSolution, SolveStatus};
pub use routing::{CandidatePathSet, Path};
pub use topology::{DirectedLink, LinkId, Node, NodeCounts, NodeId, NodeKind, Topology};
