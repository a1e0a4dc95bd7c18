//! Off-the-grid velocity estimation from 1-bit Doppler radar measurements.
//!
//! The crate simulates a continuous-wave Doppler radar observing `K` moving
//! targets, measures the demodulated signal at full resolution or through a
//! (dithered) 1-bit quantizer, and recovers gains and continuous velocities
//! with quantized continuous orthogonal matching pursuit (QCOMP): greedy
//! grid selection over Taylor interpolant dictionaries followed by an
//! off-grid correction.
//!
//! ```
//! use qcomp::{build_dictionary, qcomp, synthesize, Complex64, InterpolationScheme,
//!             MeasurementChannel, RadarConfig, Scene, SolverProblem, Target};
//!
//! let radar = RadarConfig::normalized(64).unwrap();
//! let scene = Scene::new(vec![Target::new(&radar, Complex64::new(1.0, 0.0), 0.1234)]).unwrap();
//! let y = synthesize(&radar, &scene);
//! let dict = build_dictionary(&radar, 320, InterpolationScheme::Taylor1).unwrap();
//! let problem = SolverProblem::new(y, MeasurementChannel::FullResolution, &dict, 1).unwrap();
//! let (estimates, _trace) = qcomp(&problem).unwrap();
//! assert!((estimates[0].velocity - 0.1234).abs() < 0.01 * radar.resolution());
//! ```

pub mod dictionary;
pub mod error;
pub mod evaluation;
pub mod harness;
pub mod quantization;
pub mod signal;
pub mod solver;

pub use dictionary::{build_dictionary, interpolate_atom, mapping, Grid, InterpolatedDictionary, InterpolationScheme};
pub use error::{QcompError, Result};
pub use evaluation::{
    aggregate, normalized_error, pair_estimates, residue_metric, torus_distance, MetricsSummary, Pairing, TrialOutcome,
};
pub use harness::{
    emit, parse_rows, run_sweep, run_trial, run_trial_on_scene, write_rows, ChannelKind, ExperimentConfig,
    OutputFormat, ResultRow, TrialContext,
};
pub use quantization::{apply_channel, choose_delta, draw_dither, quantize, Dither, MeasurementChannel};
pub use signal::{sample_scene, steering_atom, synthesize, ComplexSignal, RadarConfig, Scene, Target};
pub use solver::{correct, least_squares, qcomp, select_bin, update_residue, Estimate, SolverProblem, SolverTrace};

pub use num_complex::Complex64;
