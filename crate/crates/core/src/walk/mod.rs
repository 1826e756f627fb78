//! The walk-based front-door estimator.
//!
//! `P(r | do(G))` comes from a first-order random walk over the encoded
//! graph ([`transition`], [`beam`]); `P(L | do(r))` comes from an LSTM path
//! encoder whose prediction is deconfounded against a frozen per-class
//! dictionary of graph representations ([`encode`], [`dictionary`],
//! [`head`]). [`model`] composes the pieces and [`train`] fits them.

pub mod beam;
pub mod dictionary;
pub mod encode;
pub mod head;
pub mod model;
pub mod params;
pub mod train;
pub mod transition;

pub use beam::{beam_search_paths, BeamSet, ReasoningPath};
pub use dictionary::{init_confounder_dictionary, ConfounderDictionary};
pub use model::{compute_losses, forward_causal, Forward, Losses, ModelOutput};
pub use params::{Bound, ModelConfig, ModelParams};
pub use train::{evaluate, train, EvalMetrics, EvalMode, Objective, TrainConfig, TrainedModel};
pub use transition::{edge_scores, path_probability, transition_probs, TransitionMatrix};
