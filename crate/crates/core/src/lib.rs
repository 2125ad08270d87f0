//! Deterministic workbench for learned resource allocation in cloud-native
//! wireless networks.
//!
//! Two studies share one toolkit:
//!
//! * bandwidth allocation across network slices, learned by a twin-critic
//!   actor-critic agent ([`td3`]) in the [`slicing`] environment, with a
//!   water-filling optimum and an even-split baseline;
//! * task offloading across edge servers, learned by a cost-minimising
//!   Q-network ([`dqn`]) in the [`mec`] environment, with an exhaustive
//!   optimum and a random baseline.
//!
//! [`harness`] wires agents to environments, writes JSON-lines metrics and
//! exports CSV plot data.

pub mod dqn;
pub mod error;
pub mod exec;
pub mod harness;
pub mod mec;
pub mod numerics;
pub mod replay;
pub mod seeding;
pub mod slicing;
pub mod td3;
pub mod traffic;

pub use error::{Error, Result};
pub use exec::Execution;
