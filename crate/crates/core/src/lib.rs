//! Mission planning for heterogeneous robot teams from co-safe LTL
//! specifications: automaton construction and pruning, partial-order task
//! mining, branch-and-bound task assignment and a discrete-event executor.

pub mod automaton;
pub mod fixtures;
pub mod ltl;
pub mod model;
pub mod oracle;
pub mod planner;
pub mod poset;
pub mod pruning;
pub mod sim;
