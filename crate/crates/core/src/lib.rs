//! Explicit-state verification of a fully asynchronous DES circuit.
//!
//! The circuit is a network of small processes that communicate by
//! rendezvous. This crate provides the processes ([`blocks`]), their
//! composition and state-space generation ([`network`]), explicit LTSs and
//! the AUT format ([`lts`]), bisimulation minimization and comparison
//! ([`reduce`]) and the correctness properties ([`checks`]). The functional
//! cipher in [`desfunc`] serves both as the data semantics of the blocks and
//! as the reference the network is checked against.

pub mod blocks;
pub mod checks;
pub mod desfunc;
pub mod error;
pub mod label;
pub mod lts;
pub mod network;
pub mod reduce;

pub use checks::{CheckReport, DeadlockMode, PipelineDepth, Prototype};
pub use blocks::{make_block, BlockId, Process, SemanticsOptions};
pub use desfunc::{des_apply, key_schedule, BitDomain, ShiftSchedule, Word};
pub use error::{Error, Result};
pub use label::{Label, Value};
pub use lts::{Lts, Stats, Transition};
pub use network::{
    compose_incremental, des_composition_plan, des_network, explore, Composition, ExploreOptions,
    Network, PlanStep,
};
pub use reduce::{compare, minimize, simulated_by, Relation};
