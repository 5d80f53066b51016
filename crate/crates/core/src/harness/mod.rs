//! Configuration, parameter sweeps, figure presets and CSV/JSON output.

mod config;
mod output;
mod presets;
mod sweep;

pub use config::{
    load_config, log_spaced, recommended_fock_dim, validate_config, Integrator, MachineKind,
    PhysicsConfig, ProblemConfig, SweepConfig, SweepGrid, AUTO_MAGNUS_DIM, DEFAULT_MAGNUS_STEP,
    MAX_AUTO_TOTAL_DIM,
};
pub use output::{
    grid_csv, manifest_path, time_series_csv, write_manifest, write_sweep, write_time_series,
    Manifest, TruncationReport, GRID_COLUMNS,
};
pub use presets::{
    dominant_parity, fig2_params, fig2_spec, fig2_targets, fig2a_record, fig2b_record, fig2b_spec,
    fig3a_config, fig3c_config, run_preset, Preset, PresetOptions, FIDELITY_PHI_MINUS,
    FIDELITY_PHI_PLUS, FIDELITY_PSI_PLUS, FIDELITY_VACUUM, FIG2B_LOSS, FIG2_COUPLING,
    FIG2_DETUNING, FIG2_DIM, FIG2_DURATION, FIG2_EPSILON_MAX, FIG2_KERR, FIG2_SAMPLES, PARITY,
};
pub use sweep::{
    ground_state, qubit_initial_state, run_sweep, SweepCell, SweepResult, LEAKAGE_LIMIT,
};
