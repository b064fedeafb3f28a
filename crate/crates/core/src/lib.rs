//! Summative ruin probabilities for groups of insurance agents in random
//! bipartite agent–object networks.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`]: risk parameters, safety loadings, proportional loss weights
//!   and the single-object Cramér–Lundberg formula.
//! * [`netgen`]: bipartite stochastic blockmodel sampling and connection
//!   probabilities.
//! * [`ruin`]: the network Pollaczek–Khintchine variable and Monte-Carlo
//!   estimators of the group ruin probability.
//! * [`approx`]: mixture-of-normals approximation of `P(P^Q < 1)` with its
//!   explicit Stein error bound, and the large-`d` phase classifier.
//! * [`pathsim`]: brute-force compound-Poisson path simulation used as an
//!   independent oracle.
//! * [`cli`]: experiment configuration, orchestration and CSV/JSON/SVG output.
//!
//! All random draws come from counter-keyed streams ([`rng`]), and all
//! Monte-Carlo reductions use a fixed chunking ([`stats`]), so results are
//! bit-identical for a given seed regardless of the worker count.

pub mod approx;
pub mod cli;
pub mod error;
pub mod model;
pub mod netgen;
pub mod normal;
pub mod pathsim;
pub mod rng;
pub mod ruin;
pub mod stats;

pub use error::{Error, Result};
