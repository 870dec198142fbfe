//! Doctest anchor for the guide in `book/`: every Rust snippet in the
//! chapters compiles and runs under `cargo test --doc`, keeping the book and
//! the library honest with each other.

#[doc = include_str!("../../../book/src/introduction.md")]
mod introduction {}

#[doc = include_str!("../../../book/src/filter.md")]
mod filter {}

#[doc = include_str!("../../../book/src/adaptive-noise.md")]
mod adaptive_noise {}

#[doc = include_str!("../../../book/src/loop-closure.md")]
mod loop_closure {}

#[doc = include_str!("../../../book/src/fitting.md")]
mod fitting {}

#[doc = include_str!("../../../book/src/synthetic.md")]
mod synthetic {}

#[doc = include_str!("../../../book/src/cli.md")]
mod cli {}

#[doc = include_str!("../../../book/src/wire-protocol.md")]
mod wire_protocol {}
