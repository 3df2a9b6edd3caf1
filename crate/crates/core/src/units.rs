//! Unit conventions.
//!
//! Configuration files carry energies in GHz (cyclic). Internally every
//! energy is an angular frequency in rad/ns so that `exp(-i E t)` needs no
//! further factors with `t` in ns. [`ghz`] is the only place the factor 2π
//! enters; [`to_ghz`] undoes it for reporting.

use std::f64::consts::TAU;

/// GHz → rad/ns.
#[inline]
pub fn ghz(value: f64) -> f64 {
    value * TAU
}

/// rad/ns → GHz.
#[inline]
pub fn to_ghz(value: f64) -> f64 {
    value / TAU
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        assert_eq!(to_ghz(ghz(0.25)), 0.25);
        assert!((ghz(1.0) - TAU).abs() < 1e-15);
    }
}
