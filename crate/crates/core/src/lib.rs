//! Finite-scale engine for forcing posets, names, symmetric systems, and
//! finite-support iterations of symmetric systems.

pub mod condition;
pub mod cli;
pub mod config;
pub mod error;
pub mod forcing;
pub mod formula;
pub mod hf;
pub mod name;
pub mod perm;
pub mod poset;
pub mod report;
pub mod symmetry;

pub use condition::{Condition, Coord, IterCondition, StageTerm};
pub use config::TruncationConfig;
pub use error::{Error, Result};
pub use hf::GroundValue;
pub use name::PName;
pub use perm::{CondPerm, CoordPerm};
pub use poset::{Filter, Poset, PosetKind};
pub mod factor;
pub mod iteration;
pub mod laws;
pub mod load;
pub mod pincus;
