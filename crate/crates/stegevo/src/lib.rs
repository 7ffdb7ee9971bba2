//! Minimum-distortion image steganography toolkit with an evolutionary,
//! LLM-guided search for new embedding cost functions.
//!
//! The crate is organized in layers:
//!
//! - [`image`] / [`map`]: 8-bit grayscale rasters, extended-real maps,
//!   mirror-padded 2D convolution and correlation, kernel constructors,
//!   and PGM file I/O.
//! - [`cost`]: the six built-in cost functions (WOW, HILL, SUNIWARD and
//!   their evolved variants), each mapping a cover image to a pair of
//!   per-pixel `+1`/`-1` embedding costs.
//! - [`embed`]: the payload-limited sender — Gibbs change probabilities,
//!   ternary payload entropy, the lambda solver, and a deterministic
//!   embedding simulator.
//! - [`dsl`]: a small sandboxed pipeline language in which candidate cost
//!   functions exist as text, with a parser, canonical printer, and a
//!   resource-limited interpreter.
//! - [`steganalysis`]: desk-scale cover/stego detectors (truncated
//!   difference co-occurrence features + a regularized linear
//!   discriminant), detection-error evaluation, and scoring pipelines.
//! - [`evolve`]: the two-stage evolutionary engine — clustered program
//!   database, temperature-softmax sampling, prompt construction,
//!   pluggable LLM providers, accurate evaluation with promotion and
//!   pool augmentation, multi-rate validation, and a replayable journal.
//!
//! Most capabilities are demonstrated by a runnable example under
//! `examples/`; the `stegevo` binary exposes the same operations as CLI
//! subcommands.

pub mod cost;
pub mod dsl;
pub mod embed;
pub mod evolve;
pub mod image;
pub mod map;
mod par;
pub mod prng;
pub mod steganalysis;
pub mod synth;
