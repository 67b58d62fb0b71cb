//! Unsupervised word sense induction over pre-trained word embeddings.
//!
//! Senses are induced per word from an ego-graph of its nearest neighbours
//! that has been pruned with anti-edges (pairs of neighbours that point to
//! different senses), then clustered with Chinese Whispers. The resulting
//! inventory drives context-vector disambiguation and max-sim relatedness.
//!
//! Pipeline stages map onto modules:
//!
//! * [`vectorstore`] loads embeddings and answers exact cosine k-NN queries.
//! * [`egograph`] builds the anti-edge filtered ego-graph of a word.
//! * [`whispers`] clusters weighted graphs with Chinese Whispers.
//! * [`inventory`] turns clusters into labelled senses and persists them.
//! * [`disambig`] tokenizes text and picks senses in context.
//! * [`evalbench`] scores word-similarity benchmarks and owns the synthetic fixtures.
//! * [`service`] serves everything over HTTP.

pub mod cli;
pub mod disambig;
pub mod egograph;
pub mod evalbench;
pub mod inventory;
pub mod service;
pub mod vectorstore;
pub mod whispers;

pub use disambig::{DisambiguationResult, SenseModel, Token, Window};
pub use egograph::{AntiEdge, EgoGraph, EgoParams};
pub use inventory::{InductionParams, SenseCluster, SenseInventory};
pub use vectorstore::{EmbeddingMatrix, Neighbor, WordId};
pub use whispers::{Clustering, WeightedGraph};
