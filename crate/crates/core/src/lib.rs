//! Multi-resolution community features for node classification.
//!
//! The pipeline runs Louvain at a set of resolutions chosen by an adaptive
//! search, turns every partition into a learned community embedding, and
//! trains a plain MLP on `[X ‖ embeddings]`. Inference needs only the
//! design, never the adjacency.
//!
//! ```
//! use atlas::{community::louvain, synth::{generate, SbmSpec}};
//!
//! let sbm = generate(&SbmSpec { n: 200, blocks: 4, p_in: 0.2, p_out: 0.005, ..Default::default() }).unwrap();
//! let r = louvain(&sbm.graph, 1.0, 7).unwrap();
//! assert!(r.modularity > 0.5);
//! ```

pub mod community;
pub mod error;
pub mod features;
pub mod graph;
pub mod infotheory;
pub mod io;
pub mod model;
pub mod pipeline;
pub mod resolution;
pub mod rng;
pub mod synth;

pub use error::{AtlasError, Result};
