//! Size caps for exhaustive scans, overridable through `LUTENSOR_CAPS`.
//!
//! The variable holds comma-separated `key=value` pairs, for example
//! `LUTENSOR_CAPS="perm=8,eta=8,mc=10000000"`.

use crate::error::{Error, Result};
use std::sync::OnceLock;

pub const ENV_VAR: &str = "LUTENSOR_CAPS";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Caps {
    /// Largest degree accepted by canonicalization and class enumeration.
    pub perm: usize,
    /// Largest ground set for partition enumeration.
    pub partition: usize,
    /// Largest degree for exhaustive pairing scans.
    pub eta: usize,
    /// Largest degree for Weingarten functions.
    pub weingarten: usize,
    /// Largest dense tensor (entry count) the Monte Carlo layer may allocate.
    pub mc_entries: u64,
    /// Largest number of tuples an enumeration may visit.
    pub tuples: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            perm: 8,
            partition: 7,
            eta: 8,
            weingarten: 8,
            mc_entries: 10_000_000,
            tuples: 50_000_000,
        }
    }
}

impl Caps {
    pub fn parse(spec: &str) -> Result<Caps> {
        let mut caps = Caps::default();
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("cap entry `{item}` lacks `=`")))?;
            let value: u64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("cap value `{value}` is not an integer")))?;
            match key.trim() {
                "perm" => caps.perm = value as usize,
                "partition" => caps.partition = value as usize,
                "eta" => caps.eta = value as usize,
                "weingarten" => caps.weingarten = value as usize,
                "mc" => caps.mc_entries = value,
                "tuples" => caps.tuples = value,
                other => return Err(Error::Parse(format!("unknown cap `{other}`"))),
            }
        }
        Ok(caps)
    }
}

static CAPS: OnceLock<Caps> = OnceLock::new();

/// Process-wide caps; read once from the environment.
pub fn caps() -> Caps {
    *CAPS.get_or_init(|| match std::env::var(ENV_VAR) {
        Ok(spec) => Caps::parse(&spec).unwrap_or_default(),
        Err(_) => Caps::default(),
    })
}

pub(crate) fn check(what: &'static str, value: u64, cap: u64) -> Result<()> {
    if value > cap {
        Err(Error::Budget { what, value, cap })
    } else {
        Ok(())
    }
}
