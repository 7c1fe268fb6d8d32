//! The narrative guide, one module per chapter.
//!
//! Each module's documentation *is* the corresponding chapter of the
//! rendered guide under `book/` (build it with `mdbook build book`). Keeping
//! the chapters mounted here means every code block in the guide compiles
//! and runs under `cargo test --doc`, so prose and library cannot drift
//! apart.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/coefficients.md")]
pub mod coefficients {}

#[doc = include_str!("../../../book/src/bit-channel.md")]
pub mod bit_channel {}

#[doc = include_str!("../../../book/src/simulating.md")]
pub mod simulating {}

#[doc = include_str!("../../../book/src/estimators.md")]
pub mod estimators {}

#[doc = include_str!("../../../book/src/smoothness-test.md")]
pub mod smoothness_test {}

#[doc = include_str!("../../../book/src/adaptation.md")]
pub mod adaptation {}

#[doc = include_str!("../../../book/src/hard-instances.md")]
pub mod hard_instances {}

#[doc = include_str!("../../../book/src/experiments.md")]
pub mod experiments {}
