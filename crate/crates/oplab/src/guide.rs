// mdbook renders the guide under book/ but cannot execute its Rust
// snippets as tests. Including each chapter as module documentation makes
// `cargo test --doc` compile and run every code block, so the book can
// never drift from the library. One module per chapter keeps doctest
// failures attributable to a file. Links between chapters point at the
// sibling markdown files; rustdoc renders them as plain relative links,
// which is harmless.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/models.md")]
pub mod models {}

#[doc = include_str!("../../../book/src/operators.md")]
pub mod operators {}

#[doc = include_str!("../../../book/src/rates.md")]
pub mod rates {}

#[doc = include_str!("../../../book/src/stability.md")]
pub mod stability {}

#[doc = include_str!("../../../book/src/epochs.md")]
pub mod epochs {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}

#[doc = include_str!("../../../book/src/escape.md")]
pub mod escape {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli {}
