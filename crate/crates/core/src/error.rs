use std::path::PathBuf;

use crate::model::{RelayId, StationId, UserId};

/// A bandwidth floor that an instance cannot honour.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FloorViolation {
    #[error("{relays} relays need {needed} Hz of backhaul band but only {available} Hz exist")]
    Relays {
        relays: usize,
        needed: f64,
        available: f64,
    },
    #[error("{users} gNB users need {needed} Hz but the gNB access band is {available} Hz")]
    GnbUsers {
        users: usize,
        needed: f64,
        available: f64,
    },
    #[error("relay {relay} serves {users} users needing {needed} Hz but its band is {available} Hz")]
    RelayUsers {
        relay: RelayId,
        users: usize,
        needed: f64,
        available: f64,
    },
    #[error("{users} users need {needed} Hz but the band is {available} Hz")]
    Station {
        users: usize,
        needed: f64,
        available: f64,
    },
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("infeasible instance: {0}")]
    InfeasibleInstance(FloorViolation),

    #[error("infeasible instance at gNB {gnb}: {violation}")]
    InfeasibleGnb {
        gnb: StationId,
        violation: FloorViolation,
    },

    #[error("malformed instance: {0}")]
    InvalidInstance(String),

    #[error("allocation does not match the instance: {0}")]
    MismatchedIds(String),

    #[error("instance too large for the grid oracle: {relays} relays, {users} users")]
    TooLarge { relays: usize, users: usize },

    #[error("user {0} has no serving-link SINR")]
    MissingSinr(UserId),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for both flavours of floor violation.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            Error::InfeasibleInstance(_) | Error::InfeasibleGnb { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
