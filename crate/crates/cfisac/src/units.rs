//! Power and gain unit conversions.
//!
//! All computation elsewhere in the crate is in linear units (Watts for
//! powers, dimensionless linear gains). dBm and dB appear only at config
//! parsing and report formatting, through these helpers.

/// Converts a power in dBm to Watts: `10^((x - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power in Watts to dBm: `10 log10(x) + 30`.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Converts a gain in dB to a linear factor: `10^(x / 10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear gain factor to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversions() {
        assert_eq!(dbm_to_watts(30.0), 1.0);
        assert_eq!(dbm_to_watts(0.0), 1e-3);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-26);
        assert!((dbm_to_watts(20.0) - 0.1).abs() < 1e-16);
    }

    #[test]
    fn db_conversions() {
        assert!((db_to_linear(-30.0) - 1e-3).abs() < 1e-18);
        assert_eq!(db_to_linear(0.0), 1.0);
        assert!((linear_to_db(db_to_linear(7.3)) - 7.3).abs() < 1e-12);
    }

    #[test]
    fn round_trips() {
        for &x in &[1e-11, 1e-3, 0.1, 1.0, 31.7] {
            assert!((dbm_to_watts(watts_to_dbm(x)) - x).abs() / x < 1e-12);
        }
    }
}
