use serde::{Deserialize, Serialize};

use super::config::Condition;
use super::engine::{SessionFrame, TrialReport};

/// Messages a browser client sends over the session socket.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ClientMessage {
    Hello {
        #[serde(default)]
        name: Option<String>,
    },
    /// `t` in ms on the client's clock, `x` in normalized screen units.
    Input { t: f64, x: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ServerMessage {
    Config {
        condition: Condition,
        balls: Vec<String>,
        /// Ball driven by this client.
        you: String,
        frame_rate: f64,
        trial_length: f64,
    },
    Frame(SessionFrame),
    End {
        report: TrialReport,
    },
    Error {
        category: String,
        message: String,
    },
}
