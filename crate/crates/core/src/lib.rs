//! Emotion-weighted ethical reasoning for service robots.
//!
//! A language model reasons through a dilemma as a logical and an emotional
//! entity and merges the two under an emotion weight coefficient. This
//! crate builds the prompts, talks to providers (or replays recorded
//! answers), parses the XML reasoning documents, maps decisions onto
//! scenario labels and runs the statistics. The guide under `book/` walks
//! through each part.

pub mod cli;
pub mod extract;
pub mod gateway;
pub mod harness;
pub mod prompt;
pub mod reasoning;
pub mod stats;

// Guide chapters, compiled as doctests.
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/introduction.md")]
mod guide_introduction {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/reasoning-format.md")]
mod guide_reasoning_format {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/prompting.md")]
mod guide_prompting {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/providers.md")]
mod guide_providers {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/decisions.md")]
mod guide_decisions {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/evaluation.md")]
mod guide_evaluation {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/statistics.md")]
mod guide_statistics {}
#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide_cli {}
