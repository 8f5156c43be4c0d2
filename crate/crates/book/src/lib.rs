//! The chapters of the guide in `book/`, one module each, so `cargo test`
//! runs their code blocks.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/ideas.md")]
pub mod ideas {}
#[doc = include_str!("../../../book/src/plots.md")]
pub mod plots {}
#[doc = include_str!("../../../book/src/lead-sheets.md")]
pub mod lead_sheets {}
#[doc = include_str!("../../../book/src/composing.md")]
pub mod composing {}
#[doc = include_str!("../../../book/src/flow.md")]
pub mod flow {}
#[doc = include_str!("../../../book/src/lyrics.md")]
pub mod lyrics {}
#[doc = include_str!("../../../book/src/analytics.md")]
pub mod analytics {}
#[doc = include_str!("../../../book/src/service.md")]
pub mod service {}
