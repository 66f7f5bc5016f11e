//! Frequency grids, PSD containers, example channel generators and
//! Welch PSD estimation.
//!
//! PSDs are one-sided, linear scale, in power per Hz. Every integral over a
//! grid is a midpoint Riemann sum `Δ·Σ g(f_k)`.

mod channels;
mod grid;
pub mod io;
mod psd;
mod welch;

pub use channels::{wireless_channel, wireline_channel, WirelessParams, WirelineParams};
pub use grid::FrequencyGrid;
pub use psd::{db, ChannelSpec, Psd, DB_FLOOR};
pub use welch::{estimate_psd, estimate_psd_with, Window};
