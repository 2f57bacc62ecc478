//! Song-level workflows on top of the core model: fetching media, timing
//! lyrics, the preprocessing chain, the per-line chat, playback, analytics
//! and persistence.

pub mod analytics;
pub mod annotation;
pub mod app;
pub mod chat;
pub mod clients;
pub mod pipeline;
pub mod playback;
pub mod prompts;
pub mod records;
pub mod store;
pub mod synth;
pub mod timing;
