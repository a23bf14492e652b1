//! Spikepath simulates a population of spiking "neurons" that compute all
//! shortest paths between a source and a target node using nothing but
//! timed messages.
//!
//! Each node runs a small timed state machine and exchanges two kinds of
//! messages: local excitatory (`E`) messages that travel along graph edges,
//! and inhibitory (`I`) messages that can be broadcast network-wide. Target
//! nodes start out *tagged*. A tagged node processes faster and answers an
//! incoming `E` with an `I`/`E` echo that arrives back at the sender sooner
//! than an untagged node's echo possibly could. A node that observes such an
//! early echo after its own spike becomes tagged itself, so the tagged state
//! crawls backwards from target to source, one graph hop per forward wave.
//! Once the source is tagged, a final readout wave activates exactly the
//! tagged chain, which equals the set of nodes on shortest paths.
//!
//! Crate layout:
//!
//! - [`network`] — spatial environments, annulus-connected random networks,
//!   and exact BFS shortest-path oracles used for verification.
//! - [`protocol`] — the per-neuron timed state machine, message kinds, and
//!   the predictive tagging condition.
//! - [`engine`] — deterministic discrete-event scheduler, iteration loop,
//!   convergence detection, and readout extraction.
//! - [`analysis`] — temporal gradient fields, isochrone contours, oracle
//!   comparison reports, and the per-iteration induction audit.

pub mod analysis;
pub mod engine;
pub mod jsonutil;
pub mod network;
pub mod protocol;
