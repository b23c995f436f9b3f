//! Weighted estimate scans, oracle comparison, the `C^{1,1}` probe and run
//! persistence.

pub mod compare;
pub mod estimates;
pub mod run;

pub use compare::{c11_probe, oracle_compare, CompareReport, ProbeReport};
pub use estimates::{
    estimate_report, estimate_scan, estimate_scan_fields, hessian_near_singularity, verdict,
    Estimate, EstimateReport, EstimateScan, EstimateVerdict, QVariant, ScanInput, Verdict,
    DEFAULT_LADDER, MIN_MASK_CELLS, NEAR_RADIUS, UNIFORM_FACTOR,
};
pub use run::{
    preset_oracle, run, sha256_hex, verdict_rows, verify_manifest, RunConfig, RunManifest,
    RunStatus, SolveRecord, VerdictRow,
};
