//! Exact most-probable-explanation inference for discrete Bayesian networks.
//!
//! The engine works on dense factor tables. A network's conditional tables are
//! sliced by evidence, combined along a binary factoring tree with max-reduction
//! applied as soon as a variable stops appearing elsewhere, and the saved
//! intermediate tables are then reused to enumerate the next most probable
//! explanations one at a time. Subset queries (maximize some variables, sum the
//! rest) run on the same machinery.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line front end live in the companion `mpe` crate.

#![no_std]

extern crate alloc;

pub mod error;
pub mod factor;
pub mod factoring;
pub mod kbest;
pub mod map;
pub mod mpe;
pub mod network;
pub mod oracle;
pub mod random;
pub mod space;

pub use error::{Error, Result};
pub use factor::{Assignment, Factor};
pub use factoring::{FactoringStats, FactoringTree, Plan, Strategy};
pub use kbest::{find_l_mpe, EvalTree, Explanation, KBest};
pub use map::{find_l_map, find_map, find_map_unpruned, relevant_set, MapResult, QueryPartition};
pub use mpe::{find_mpe, verify_assignment, Engine, ExecutionTrace, MpeResult};
pub use network::{Cpt, Evidence, Network, VarId, Variable};
pub use space::Space;
