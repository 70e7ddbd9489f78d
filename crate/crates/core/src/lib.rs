//! Universal dynamical systems and extension machinery: injections,
//! Banach operators, symbolic transducers, cover systems, lifts of maps and
//! map families, contractive and hyperspace variants, and invariant towers.

pub mod certificate;
pub mod common;
pub mod contractive;
pub mod covers;
pub mod hyperspace;
pub mod injection;
pub mod lift;
pub mod maps;
pub mod operator;
pub mod pairing;
pub mod rational;
pub mod scenario;
pub mod symbolic;
pub mod tower;

pub use certificate::{Certificate, Format, Status};
pub use common::{common_extension_baire, CommonExtension, MapFamily, Piece};
pub use covers::{Cell, CoverError, CoverSystem, Region, Space};
pub use injection::{embed_injection, PartialInjection, UniversalInjection};
pub use lift::{lift_self_map, LiftError, StrongExtension};
pub use maps::{Builtin, ParamMap, PointMap, SharedFamily, SharedMap};
pub use operator::{BanachModel, RationalMatrix, SparseL1Vector};
pub use rational::{parse_rational, pow2_neg, ratio, Rational};
pub use scenario::{Scenario, ScenarioError};
pub use symbolic::{PrefixTransducer, SymbolicError, SymbolicSpace, Word};
pub use tower::{invariant_refinement_tower, Tower, TowerError};
