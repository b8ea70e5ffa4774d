//! Adaptive Skip-gram: multi-prototype word embeddings whose number of
//! senses per word is learned online under a truncated stick-breaking
//! (Dirichlet process) prior.
//!
//! The crate covers the full pipeline: corpus ingestion and Huffman coding,
//! stochastic variational training, sense disambiguation and prediction,
//! word-sense-induction metrics and a checksummed binary model format.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod huffman;
pub mod io;
pub mod math;
pub mod model;
pub mod predict;
pub mod softmax;
pub mod train;
pub mod wsi;

pub use corpus::{iter_training_pairs, make_pseudoword_corpus, Merge, PseudoCorpus, PseudoLabel, TrainingPair, Vocabulary};
pub use error::{Error, Result};
pub use huffman::HuffmanCode;
pub use io::{load_model, save_model};
pub use model::{SenseModel, SensePosterior};
pub use predict::{disambiguate, nearest_neighbors, predictive_loglik, Neighbor, Occurrence};
pub use train::{global_step, local_elbo, local_step, train, train_model, TrainingConfig};
pub use wsi::{ari, evaluate_wsi, paired_fscore, v_measure, WsiDataset, WsiReport};
