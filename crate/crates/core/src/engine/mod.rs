//! The generalized relaxed-projection iteration and its run loop.
//!
//! One step maps the exit-wave iterate `x` to
//! `a * P_C^b(P_D^c x) + (1 - a) * x`: a relaxed divide (Fourier modulus)
//! projection, then a relaxed concur (probe/object consistency)
//! projection, then a relaxed blend with the previous iterate.

mod preset;
mod sp;

use std::time::Instant;

pub use preset::{preset_params, Preset, Relaxations, DEFAULT_BETA};
pub use sp::sp_run;

use crate::error::{Error, Result};
use crate::metrics::{data_error, object_nrmse, MetricRegion};
use crate::par;
use crate::projections::{
    concur_project, divide_project, ConcurSettings, ExitWaveSet, DEFAULT_EPS_FRAC, DEFAULT_REG_FRAC,
};
use crate::simulate::{DiffractionStack, GroundTruth, ProbeObjectPair, ScanGeometry};
use crate::toygeom::SweepOrder;

#[derive(Clone, Debug, PartialEq)]
pub struct AlgoParams {
    pub preset: Preset,
    pub iters: usize,
    pub inner_iters: usize,
    pub eps_frac: f64,
    pub reg_frac: f64,
    pub renorm: bool,
    pub seed: u64,
    pub sp_order: SweepOrder,
    pub sp_alpha_obj: f64,
    pub sp_alpha_probe: f64,
    /// Wall-clock time per iteration is recorded only when set; traces are
    /// otherwise a pure function of the inputs.
    pub record_timing: bool,
}

impl Default for AlgoParams {
    fn default() -> Self {
        Self {
            preset: Preset::Raar(DEFAULT_BETA),
            iters: 300,
            inner_iters: 1,
            eps_frac: DEFAULT_EPS_FRAC,
            reg_frac: DEFAULT_REG_FRAC,
            renorm: true,
            seed: 0,
            sp_order: SweepOrder::Fixed,
            sp_alpha_obj: 1.0,
            sp_alpha_probe: 1.0,
            record_timing: false,
        }
    }
}

impl AlgoParams {
    pub fn with_preset(preset: Preset) -> Self {
        Self {
            preset,
            ..Self::default()
        }
    }

    pub fn relaxations(&self) -> Relaxations {
        self.preset.relaxations()
    }

    pub fn concur_settings(&self) -> ConcurSettings {
        ConcurSettings {
            inner_iters: self.inner_iters,
            reg_frac: self.reg_frac,
            renorm: self.renorm,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::invalid("iters must be at least 1"));
        }
        if self.inner_iters == 0 {
            return Err(Error::invalid("inner_iters must be at least 1"));
        }
        if !self.relaxations().is_finite() {
            return Err(Error::invalid(format!(
                "non-finite relaxations {:?}",
                self.relaxations()
            )));
        }
        if let Some(p) = self.preset.parameter() {
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::invalid(format!(
                    "{} parameter {p} outside (0, 1]",
                    self.preset.name()
                )));
            }
        }
        for (name, v) in [
            ("eps_frac", self.eps_frac),
            ("reg_frac", self.reg_frac),
            ("sp_alpha_obj", self.sp_alpha_obj),
            ("sp_alpha_probe", self.sp_alpha_probe),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TraceRecord {
    pub iteration: usize,
    pub data_error: f64,
    pub object_nrmse: Option<f64>,
    pub elapsed_ms: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorTrace {
    pub records: Vec<TraceRecord>,
}

impl ErrorTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_nrmse(&self) -> Option<f64> {
        self.last().and_then(|r| r.object_nrmse)
    }
}

#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub pair: ProbeObjectPair,
    pub trace: ErrorTrace,
}

/// One generalized step. Returns the next iterate and the pair fitted by the
/// concur projection.
pub fn abc_step(
    x: &ExitWaveSet,
    data: &DiffractionStack,
    geom: &ScanGeometry,
    pair_seed: &ProbeObjectPair,
    params: &AlgoParams,
) -> Result<(ExitWaveSet, ProbeObjectPair)> {
    let relax = params.relaxations();
    let y = divide_project(x, data, relax.c, params.eps_frac)?;
    let (z, pair) = concur_project(&y, geom, pair_seed, relax.b, params.concur_settings())?;
    Ok((x.relax_towards(&z, relax.a), pair))
}

pub(crate) struct Evaluator<'a> {
    pub data: &'a DiffractionStack,
    pub truth: Option<&'a GroundTruth>,
    pub region: &'a MetricRegion,
    pub started: Option<Instant>,
}

impl Evaluator<'_> {
    pub fn record(
        &self,
        iteration: usize,
        x: &ExitWaveSet,
        pair: &ProbeObjectPair,
    ) -> Result<TraceRecord> {
        let data_error = if x.is_finite() {
            data_error(x, self.data)?
        } else {
            f64::NAN
        };
        let object_nrmse = match self.truth {
            Some(t) if pair.object.is_finite() => {
                Some(object_nrmse(&pair.object, &t.object, self.region)?)
            }
            Some(_) => Some(f64::NAN),
            None => None,
        };
        Ok(TraceRecord {
            iteration,
            data_error,
            object_nrmse,
            elapsed_ms: self.started.map(|t| t.elapsed().as_secs_f64() * 1e3),
        })
    }
}

pub(crate) fn check_inputs(
    data: &DiffractionStack,
    geom: &ScanGeometry,
    init: &ProbeObjectPair,
    params: &AlgoParams,
    truth: Option<&GroundTruth>,
    region: &MetricRegion,
) -> Result<()> {
    params.validate()?;
    init.check(geom)?;
    if data.count() != geom.len() || data.size() != geom.probe_size() {
        return Err(Error::invalid(format!(
            "{} patterns of {} px against {} positions with probe size {}",
            data.count(),
            data.size(),
            geom.len(),
            geom.probe_size()
        )));
    }
    if let Some(t) = truth {
        t.check(geom)?;
        region.check(t.object.dims())?;
    }
    Ok(())
}

/// Full reconstruction: forms the initial exit waves from `init`, then
/// iterates [`abc_step`] `params.iters` times, recording one trace entry per
/// iteration. The returned pair is the one from the last concur projection.
pub fn run(
    data: &DiffractionStack,
    geom: &ScanGeometry,
    init: &ProbeObjectPair,
    params: &AlgoParams,
    truth: Option<&GroundTruth>,
    region: &MetricRegion,
) -> Result<Reconstruction> {
    check_inputs(data, geom, init, params, truth, region)?;
    let eval = Evaluator {
        data,
        truth,
        region,
        started: params.record_timing.then(Instant::now),
    };
    let mut x = ExitWaveSet::from_pair(init, geom)?;
    let mut pair = init.clone();
    let mut trace = ErrorTrace::default();
    for k in 1..=params.iters {
        let (next, fitted) = abc_step(&x, data, geom, &pair, params)?;
        x = next;
        pair = fitted;
        trace.records.push(eval.record(k, &x, &pair)?);
        if !(x.is_finite() && pair.is_finite()) {
            return Err(Error::Diverged {
                iteration: k,
                trace: Box::new(trace),
            });
        }
    }
    Ok(Reconstruction { pair, trace })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    Diverged { iteration: usize },
}

impl RunStatus {
    pub fn label(&self) -> &'static str {
        match self {
            RunStatus::Completed => "ok",
            RunStatus::Diverged { .. } => "diverged",
        }
    }
}

#[derive(Clone, Debug)]
pub struct CompareEntry {
    pub preset: Preset,
    pub trace: ErrorTrace,
    pub status: RunStatus,
}

/// Runs every preset from the same initial pair with otherwise identical
/// parameters. A diverging preset is reported with its truncated trace and
/// does not stop the others.
pub fn compare(
    data: &DiffractionStack,
    geom: &ScanGeometry,
    init: &ProbeObjectPair,
    presets: &[Preset],
    base: &AlgoParams,
    truth: Option<&GroundTruth>,
    region: &MetricRegion,
) -> Result<Vec<CompareEntry>> {
    if presets.is_empty() {
        return Err(Error::invalid("compare needs at least one preset"));
    }
    let outcomes = par::map(presets, |_, &preset| {
        let params = AlgoParams {
            preset,
            ..base.clone()
        };
        run(data, geom, init, &params, truth, region)
    });
    presets
        .iter()
        .zip(outcomes)
        .map(|(&preset, outcome)| match outcome {
            Ok(rec) => Ok(CompareEntry {
                preset,
                trace: rec.trace,
                status: RunStatus::Completed,
            }),
            Err(Error::Diverged { iteration, trace }) => Ok(CompareEntry {
                preset,
                trace: *trace,
                status: RunStatus::Diverged { iteration },
            }),
            Err(e) => Err(e),
        })
        .collect()
}
