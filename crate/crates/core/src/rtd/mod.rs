//! Teaching dimension, teaching hierarchy and recursive teaching dimension by
//! exhaustive search, plus difficulty levels of referential-game candidates.

mod levels;
mod teaching;

pub use levels::{game_levels, Level};
pub use teaching::{rtd, teaching_dimension, teaching_hierarchy, teaching_set, ConceptClass, TeachingHierarchy, MAX_CONCEPTS, MAX_DOMAIN};
