//! Live trials: one human streaming positions from a browser, simulated
//! participants and an optional avatar, all owned by a single session loop.

mod config;
mod engine;
mod protocol;
mod server;

pub use config::{Condition, SessionConfig};
pub use engine::{
    Ball, BallKind, FrameDebug, SessionEngine, SessionFrame, TrialReport, GUARD_BAND,
};
pub use protocol::{ClientMessage, ServerMessage};
pub use server::{router, start, RunningServer, ServerConfig};
