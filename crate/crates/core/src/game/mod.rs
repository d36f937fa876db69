//! Instance spaces, referential games and the episode state machine.

mod episode;
mod equivalence;
#[allow(clippy::module_inception)]
mod game;
mod space;

pub use episode::{total_gain, Action, EpisodeState};
pub use equivalence::{apply_equivalence, AttributeMap};
pub use game::{cosine_similarity, sample_game, sample_game_from, Game, DEFAULT_MESSAGE_COST};
pub use space::{Instance, InstanceSpace};
