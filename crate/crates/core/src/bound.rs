//! Global cap on enumeration sizes.
//!
//! Every exhaustive enumeration estimates (or counts) its search space and
//! fails with [`Error::SearchSpaceTooLarge`] instead of truncating.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{Error, Result};

pub const DEFAULT_MAX_ENUM: u64 = 1_000_000;

static MAX_ENUM: AtomicU64 = AtomicU64::new(DEFAULT_MAX_ENUM);

pub fn max_enum() -> u64 {
    MAX_ENUM.load(Ordering::Relaxed)
}

pub fn set_max_enum(n: u64) {
    MAX_ENUM.store(n, Ordering::Relaxed);
}

/// Fails if `estimate` exceeds the bound. `estimate` is an upper bound on
/// the number of candidates an enumeration would visit.
pub fn guard(what: &str, estimate: f64) -> Result<()> {
    let bound = max_enum();
    if estimate > bound as f64 {
        return Err(too_large(what, estimate));
    }
    Ok(())
}

pub(crate) fn too_large(what: &str, estimate: f64) -> Error {
    let estimate =
        if estimate.is_finite() && estimate < 1e18 { format!("{}", estimate as u64) } else { format!("{estimate:e}") };
    Error::SearchSpaceTooLarge { what: what.to_string(), estimate, bound: max_enum() }
}

/// `base^exp` as f64, saturating to infinity.
pub fn pow_estimate(base: usize, exp: usize) -> f64 {
    (base as f64).powi(exp.min(i32::MAX as usize) as i32)
}

/// Running counter that trips once more than the bound have been produced.
pub struct Counter<'a> {
    what: &'a str,
    count: u64,
    bound: u64,
}

impl<'a> Counter<'a> {
    pub fn new(what: &'a str) -> Self {
        Counter { what, count: 0, bound: max_enum() }
    }

    pub fn tick(&mut self) -> Result<()> {
        self.count += 1;
        if self.count > self.bound {
            return Err(too_large(self.what, self.count as f64));
        }
        Ok(())
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}
