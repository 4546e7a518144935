//! Aspect sentiment quad prediction (ASQP) toolkit: target rendering for
//! the quad, pairwise and overall tasks, order selection, constrained
//! decoding, voting and exact-match scoring.
//!
//! The crate covers everything around the model that does not need a GPU:
//!
//! * [`model`]: quads, element markers and the label/target mapping,
//! * [`dataset`]: `####` data files, canonical JSONL, corpus statistics,
//! * [`augment`]: quad/pairwise/overall instance rendering and sampling,
//! * [`order`]: scoring element orders and selecting the top `k`,
//! * [`loss`]: the balanced and pooled multi-task objectives,
//! * [`decode`]: the constrained-decoding automaton and generator,
//! * [`infer`]: target parsing and threshold voting,
//! * [`eval`]: exact-match precision/recall/F1,
//! * [`pipeline`]: file-level glue used by the `star` binary.
//!
//! Model-dependent steps go through [`order::SequenceScorer`] and
//! [`decode::NextTokenProvider`], so every step can be run with mock
//! providers.
//!
//! ```
//! use star_asqp::augment::{render_quad_instance, OrderTemplate};
//! use star_asqp::infer::parse_target;
//! use star_asqp::model::{Polarity, Quad, Sentence};
//!
//! let s = Sentence::new("s0", "The pizza is delicious.");
//! let quads = vec![Quad::new("pizza", "food quality", "delicious", Polarity::Positive)];
//! let order: OrderTemplate = "OACS".parse().unwrap();
//! let inst = render_quad_instance(&s, &quads, &order).unwrap();
//! assert_eq!(inst.target, "[O] delicious [A] pizza [C] food quality [S] great");
//! assert_eq!(parse_target(&inst.target, &order).quads, quads);
//! ```

pub mod augment;
pub mod config;
pub mod dataset;
pub mod decode;
pub mod error;
pub mod eval;
pub mod infer;
pub mod loss;
pub mod model;
pub mod order;
pub mod pipeline;

pub use error::{Error, Result};
