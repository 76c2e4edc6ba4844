//! Serialization: JSON configs in, CSV trajectories and SVG charts out.

pub mod config;
pub mod csv;
pub mod svg;

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    ryu::Buffer::new().format(v).to_string()
}
