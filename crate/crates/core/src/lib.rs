//! Blind ptychographic phase retrieval with a generalized relaxed
//! set-projection iteration.
//!
//! The iterate is the set of exit waves, one per scan position. Each step
//! applies a relaxed Fourier-modulus ("divide") projection, a relaxed
//! probe/object consistency ("concur") projection, and a relaxed blend with
//! the previous iterate. The three relaxations reproduce divide-and-concur,
//! averaged reflections / Douglas-Rachford, solvent flipping, RAAR, RRR and
//! the relaxed Douglas-Rachford family as presets.
//!
//! Modules:
//! - [`field`]: complex fields and the centered unitary DFT
//! - [`toygeom`]: exact circle projections for checking the operator algebra
//! - [`simulate`]: phantom, probes, scan raster, forward model
//! - [`projections`]: divide / concur projections and least-squares updates
//! - [`engine`]: presets, the generalized step, run loops, comparison
//! - [`metrics`]: data error and ambiguity-aligned object NRMSE
//! - [`bundleio`]: dataset bundles, trace CSV, PGM renders

pub mod bundleio;
pub mod engine;
pub mod error;
pub mod field;
pub mod metrics;
mod par;
pub mod projections;
pub mod simulate;
pub mod toygeom;

pub use engine::{
    abc_step, compare, preset_params, run, sp_run, AlgoParams, ErrorTrace, Preset, Relaxations,
};
pub use error::{Error, Result};
pub use field::{dft2_centered, idft2_centered, ComplexField};
pub use metrics::{data_error, object_nrmse, MetricRegion};
pub use projections::ExitWaveSet;
pub use simulate::{DiffractionStack, GroundTruth, ProbeObjectPair, ScanGeometry};

pub use num_complex::Complex64;
