//! Unsupervised entity alignment between two knowledge graphs.
//!
//! A probabilistic reasoner propagates equivalence evidence from identical
//! literal values across relations. An embedding model trained on the
//! reasoner's confident pairs then proposes counterparts for what is still
//! unaligned, and the reasoner runs again with those proposals folded in.
//!
//! ```no_run
//! use prase::{ingest, orchestrator};
//!
//! let pair = ingest::load_openea(std::path::Path::new("data/D_W_15K_V1"))?;
//! let out = orchestrator::run(&pair, &orchestrator::PraseConfig::default())
//!     .map_err(|e| e.source)?;
//! println!("{} aligned pairs", out.mappings.len());
//! # Ok::<(), prase::Error>(())
//! ```

pub mod embedding;
pub mod error;
pub mod eval;
pub mod ingest;
pub mod kg;
pub mod orchestrator;
pub mod reasoner;

pub use error::{Error, Result};
pub use kg::{KgBuilder, KnowledgeGraph, NodeId, RelId, Triple};
pub use orchestrator::{run, PraseConfig};
