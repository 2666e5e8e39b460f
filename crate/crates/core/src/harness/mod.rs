//! Experiment orchestration: SNR sweeps over detector variants, BER and
//! post-ECC failure-rate measurement, gains, and CSV/SVG reports.
//!
//! Every random draw comes from a ChaCha8 stream seeded by
//! [`crate::rng::derive_seed`] from the master seed and labels for the SNR
//! point, trial and channel group, so results do not depend on scheduling.

mod config;
mod pipeline;
mod report;
mod sweep;

pub use config::{
    DetectorKind, EccSettings, EdcKind, ExperimentConfig, FrontEndSettings, StopRule,
    VariantSpec, WhitenerSource, WindowSettings, SCHEMA_VERSION,
};
pub use pipeline::{
    design_front_end, groups, read_sector, Detection, Detector, Equalized, Group, Sector, Tally,
};
pub use report::{
    ber_csv, cfr_csv, emit_ber_report, emit_cfr_report, series, svg_plot, weights_csv, Series,
    BER_HEADER, CFR_HEADER, WEIGHTS_HEADER,
};
pub use sweep::{
    ber_curves, cfr_curves, crossing_snr, gain_db, run_ber_sweep, run_cfr_sweep, BerPoint,
    CfrPoint, MIN_ERROR_BLOCKS,
};
