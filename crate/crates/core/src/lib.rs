//! Power-constrained quantization-noise shaping for ADCs.
//!
//! Given a channel described by its signal and noise power spectral densities,
//! this crate computes the quantization-noise PSD that minimizes the
//! information lost in conversion under a fixed ADC power budget, checks it
//! against an independent numerical optimizer, realizes it with a delta-sigma
//! noise transfer function and plans time/frequency interleaved multi-ADC
//! configurations.
//!
//! All numerics are generic over the scalar type through [`Real`]; the
//! `*64` / `*32` aliases below fix the common precisions.
//!
//! ```
//! use qshape::{FrequencyGrid, Psd, PowerBudget, optimal_sq, power_of_sq};
//!
//! let grid = FrequencyGrid::<f64>::new(0.0, 1.0, 8).unwrap();
//! let noise = Psd::from_fn(&grid, |f| 1e-6 * (1.0 + 10.0 * f));
//! let budget = PowerBudget::new(1e4).unwrap();
//! let shaped = optimal_sq(&noise, budget).unwrap();
//! let p = power_of_sq(&shaped.sq_opt).unwrap();
//! assert!((p.value() / 1e4 - 1.0).abs() < 1e-12);
//! ```

// `!(x > 0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod deltasigma;
mod error;
pub mod fixtures;
pub mod kv;
pub mod multichannel;
mod optim;
mod scalar;
pub mod shaping;
pub mod spectral;

pub use capacity::{
    bits_from_sq, capacity_after, capacity_before, info_loss, power_of_bits, power_of_sq,
    sq_from_bits, BitProfile, PowerBudget,
};
pub use deltasigma::{
    design_ntf, loop_from_ntf, measured_vs_predicted, ntf_from_loop, ntf_quant_psd,
    realization_report, simulate, simulate_with, stf_from_loop, ModulatorConfig, NtfDesign,
    QuantizerModel, RationalTf, RealizationReport, SimulationTrace, TrackingReport,
};
pub use error::{Error, Result};
pub use multichannel::{
    partition_constrained, partition_equal_power, per_band_shaping, time_interleave_psd,
    PartitionMode, PartitionPlan,
};
pub use scalar::Real;
pub use shaping::{
    optimal_sq, optimal_sq_numerical, verify_shaping, NumericalShaping, SearchConfig,
    ShapingResult, VerificationReport,
};
pub use spectral::{estimate_psd, ChannelSpec, FrequencyGrid, Psd};

pub type FrequencyGrid64 = FrequencyGrid<f64>;
pub type FrequencyGrid32 = FrequencyGrid<f32>;
pub type Psd64 = Psd<f64>;
pub type Psd32 = Psd<f32>;
pub type ChannelSpec64 = ChannelSpec<f64>;
pub type ChannelSpec32 = ChannelSpec<f32>;
pub type PowerBudget64 = PowerBudget<f64>;
pub type PowerBudget32 = PowerBudget<f32>;
pub type BitProfile64 = BitProfile<f64>;
pub type BitProfile32 = BitProfile<f32>;
pub type ShapingResult64 = ShapingResult<f64>;
pub type ShapingResult32 = ShapingResult<f32>;
pub type RationalTf64 = RationalTf<f64>;
pub type RationalTf32 = RationalTf<f32>;
pub type ModulatorConfig64 = ModulatorConfig<f64>;
pub type PartitionPlan64 = PartitionPlan<f64>;
pub type PartitionPlan32 = PartitionPlan<f32>;
