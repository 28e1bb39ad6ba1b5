//! Unbeatable consensus and set-consensus protocols for the synchronous
//! crash-failure model, together with the machinery to check them: a
//! lock-step simulator over explicit adversaries, the epistemic predicates
//! (hidden paths, hidden capacity, knowledge tests) the decision rules are
//! built from, a brute-force semantic oracle that certifies those predicates,
//! a domination search that certifies unbeatability at desk scale, and a
//! compact wire codec that reproduces full-information decisions in
//! `O(n log n)` bits per process pair.
//!
//! Start from the `examples/` directory: each example is a runnable tour of
//! one capability. The `unbeatable` binary exposes the same operations as
//! subcommands for scripting.
//!
//! A run is fixed by an [`model::Adversary`] — an input vector plus a crash
//! pattern — and a decision rule; everything else is derived. The decision
//! rules live in [`protocols`], task properties in [`sim`], exhaustive
//! certification in [`search`] and [`oracle`], and the wire format in
//! [`codec`].

pub mod cli;
pub mod codec;
pub mod knowledge;
pub mod model;
pub mod oracle;
pub mod protocols;
pub mod search;
pub mod sim;
