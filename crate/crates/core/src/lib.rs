//! LTL with freeze quantifiers on data words whose positions carry several
//! ordered attributes, nested counter systems, and translations between them.

pub mod dataword;
pub mod hierarchy;
pub mod linearize;
pub mod logic;
pub mod ltl2ncs;
pub mod ncs;
pub mod ncs2ltl;
pub mod order;
pub mod pcp;
pub mod pcs;
pub mod sym;

pub use dataword::{DataValue, DataWord, Letter, PartialValuation, Position};
pub use logic::Formula;
pub use order::{Attr, QuasiOrder};
pub use sym::Sym;
