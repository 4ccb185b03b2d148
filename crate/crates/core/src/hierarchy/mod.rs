//! Hierarchy of quantified games between blind and fully reactive control.

mod eval;
mod game;
mod tree;

pub use eval::{evaluate_game, Context, GameOutcome, GameSolver, GameStats, Slot, Strategy};
pub use game::{traversal_length_check, GameNode, GameString, Token, WalkStep};
pub use tree::{build_decision_tree, verify_tree, Control, DecisionTree, Segment, TreeOutcome};
