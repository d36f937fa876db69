//! The teacher: a belief network predicting the student's next belief, a
//! Q-function evaluated on that prediction, and softmax message selection.

mod model;
mod replay;

pub use model::{QTrace, TeacherConfig, TeacherModel, TeacherNet, TrainLosses};
pub use replay::{ReplayBuffer, Transition};
