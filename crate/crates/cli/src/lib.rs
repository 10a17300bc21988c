//! Scenario-driven front end for `wavepacket-core`: TOML configuration,
//! the trajectory/snapshots/density/pulse/verify commands and their
//! byte-stable CSV/JSON output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};

/// Environment variable overriding the oracle sample seed.
pub const SEED_ENV: &str = "WPL_SEED";

/// `WPL_SEED` if set, else the config's seed, else the library default.
pub fn resolve_seed(env: Option<&str>, configured: Option<u64>) -> CliResult<u64> {
    match env {
        Some(s) => s
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got {s:?}"))),
        None => Ok(configured.unwrap_or(wavepacket_core::oracle::DEFAULT_SEED)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some("7"), Some(3)).unwrap(), 7);
        assert_eq!(resolve_seed(None, Some(3)).unwrap(), 3);
        assert_eq!(resolve_seed(None, None).unwrap(), wavepacket_core::oracle::DEFAULT_SEED);
        assert!(resolve_seed(Some("x"), None).is_err());
    }
}
