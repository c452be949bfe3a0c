//! Spatiotemporal term-burstiness mining over geostamped document streams.
//!
//! Two pattern miners share one corpus model:
//!
//! * [`stcomb`] finds *combinatorial* patterns: sets of streams, anywhere on
//!   the map, whose bursty temporal intervals overlap.
//! * [`stlocal`] finds *regional* patterns: rectangles of the map that stay
//!   bursty over a timeframe, maintained online one snapshot at a time.
//!
//! Mined patterns feed a top-k bursty-document search engine ([`search`]).
//! [`synth`] generates corpora with injected ground-truth patterns and
//! [`eval`] scores the miners against them.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod maxseg;
pub mod mds;
pub mod search;
pub mod spatial;
pub mod stcomb;
pub mod stlocal;
pub mod synth;
pub mod temporal;

pub use corpus::{Corpus, CorpusBuilder, Document, GeoPoint, StreamId, StreamMeta, TermId};
pub use error::{Error, Result};
pub use maxseg::{get_max_all, MaxSegState, ScoredSegment};
pub use spatial::{max_rectangle, r_bursty, BaselineModel, Bounds, RScoredRectangle, StreamScore};
pub use stcomb::{extract_patterns, is_eligible, max_clique, CombinatorialPattern};
pub use temporal::{extract_bursty_intervals, temporal_burstiness, TemporalInterval};
pub use stlocal::{RegionKey, SpatiotemporalWindow, TermTracker};
pub use search::{build_index, top_k, AggregateFn, InvertedIndex, PatternIndex, PatternKind, ScoredDocument};
pub use synth::{generate, GeneratorConfig, GeneratorMode, InjectedPattern, SyntheticData};
pub use eval::{jaccard_sim, run_experiment, ExperimentConfig, Method, PatternMatchReport};
