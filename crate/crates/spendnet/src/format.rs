//! Text formatting helpers shared by the CLI and the CSV writers.

/// Formats a float in scientific notation with 17 significant digits, enough
/// for an exact `f64` round trip. All machine-readable output in this crate
/// goes through here so files are reproducible byte for byte.
pub fn float17(v: f64) -> String {
    format!("{v:.16e}")
}
