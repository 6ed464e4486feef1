//! Workbench for one-shot and multishot capacities of adversarial networks.
//!
//! The crate models directed acyclic multigraph networks in which an
//! adversary may rewrite the symbols carried by a restricted set of edges,
//! evaluates the resulting set-valued channels, searches for maximum
//! unambiguous codes, and computes cut-set bounds and network reductions.

pub mod bounds;
pub mod catalog;
pub mod channel;
mod clique;
pub mod code;
pub mod net;
pub mod search;
pub mod transfer;
pub mod word;

pub use bounds::{
    BoundMode, BoundReport, BoundValue, BoundWitness, BoundsError, DoubleCutMode,
    TwoLevelProfile,
};
pub use catalog::{
    build_instance, build_network, butterfly_strategy, diamond_strategy, family_c_strategy,
    family_d_strategy, family_e_strategy, mirrored_strategy, verify_strategy,
    verify_strategy_with_limit, vulnerable_edges, CatalogError, ClaimedRate, NetworkKind,
    ReservedSet, Strategy, StrategyReport,
};
pub use code::{CodeError, FnTable, NetworkCode, OuterCode};
pub use net::{
    enumerate_edge_cuts, immediate_predecessors, precedes, validate_network, AdversaryModel,
    Alphabet, Edge, EdgeCut, Instance, Network, NetworkDescription, NetworkError, Scenario,
    Symbol,
};
pub use search::{
    CodeSearchOutcome, CoincidenceReport, ConditionalBound, DistanceRule, EnumerationOptions,
    NetworkCodeSearchOutcome, SearchBudget, SearchError,
};
pub use word::FanOutSet;
