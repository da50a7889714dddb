//! Ground truth, scan geometry and far-field diffraction data.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::field::{dft2_centered, ComplexField};
use crate::par;

/// Probe-window offsets (top-left corners) in the object frame.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ScanGeometry {
    positions: Vec<(usize, usize)>,
    probe_size: usize,
    object_size: usize,
}

impl ScanGeometry {
    pub fn new(
        positions: Vec<(usize, usize)>,
        probe_size: usize,
        object_size: usize,
    ) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::invalid("scan needs at least one position"));
        }
        if probe_size == 0 || probe_size > object_size {
            return Err(Error::invalid(format!(
                "probe size {probe_size} must be in 1..={object_size}"
            )));
        }
        if let Some(&(r, c)) = positions
            .iter()
            .find(|&&(r, c)| r + probe_size > object_size || c + probe_size > object_size)
        {
            return Err(Error::invalid(format!(
                "window at ({r}, {c}) of size {probe_size} leaves the {object_size}x{object_size} object"
            )));
        }
        Ok(Self {
            positions,
            probe_size,
            object_size,
        })
    }

    pub fn positions(&self) -> &[(usize, usize)] {
        &self.positions
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn probe_size(&self) -> usize {
        self.probe_size
    }

    pub fn object_size(&self) -> usize {
        self.object_size
    }
}

/// Measured far-field intensities, one `M x M` pattern per scan position.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffractionStack {
    size: usize,
    intensities: Vec<f64>,
    photons_per_pattern: Option<f64>,
}

impl DiffractionStack {
    pub fn new(
        size: usize,
        intensities: Vec<f64>,
        photons_per_pattern: Option<f64>,
    ) -> Result<Self> {
        let px = size * size;
        if size == 0 || intensities.is_empty() || !intensities.len().is_multiple_of(px) {
            return Err(Error::invalid(format!(
                "{} intensities do not form whole {size}x{size} patterns",
                intensities.len()
            )));
        }
        if let Some(bad) = intensities.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::invalid(format!(
                "intensity {bad} is not finite and nonnegative"
            )));
        }
        Ok(Self {
            size,
            intensities,
            photons_per_pattern,
        })
    }

    pub fn count(&self) -> usize {
        self.intensities.len() / (self.size * self.size)
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn pattern(&self, j: usize) -> &[f64] {
        let px = self.size * self.size;
        &self.intensities[j * px..(j + 1) * px]
    }

    pub fn intensities(&self) -> &[f64] {
        &self.intensities
    }

    pub fn photons_per_pattern(&self) -> Option<f64> {
        self.photons_per_pattern
    }

    pub fn total(&self) -> f64 {
        self.intensities.iter().sum()
    }
}

/// A probe and an object estimate (or the true pair).
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeObjectPair {
    pub probe: ComplexField,
    pub object: ComplexField,
}

pub type GroundTruth = ProbeObjectPair;

impl ProbeObjectPair {
    pub fn check(&self, geom: &ScanGeometry) -> Result<()> {
        let m = geom.probe_size();
        let n = geom.object_size();
        if self.probe.dims() != (m, m) || self.object.dims() != (n, n) {
            return Err(Error::invalid(format!(
                "probe {:?} / object {:?} do not match scan geometry (M={m}, N={n})",
                self.probe.dims(),
                self.object.dims()
            )));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.probe.is_finite() && self.object.is_finite()
    }
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// Procedural stand-in for a field of cells: an amplitude-1 background
/// with `cell_count` soft-edged, rim-weighted disks. Each disk lowers the
/// amplitude by up to `amplitude_contrast` and carries its own phase drawn
/// from `[-phase_range, phase_range]`.
pub fn make_phantom(
    n: usize,
    amplitude_contrast: f64,
    phase_range: f64,
    cell_count: usize,
    seed: u64,
) -> Result<ComplexField> {
    if n < 32 {
        return Err(Error::invalid(format!(
            "phantom size {n} must be at least 32"
        )));
    }
    if cell_count == 0 {
        return Err(Error::invalid("phantom needs at least one cell"));
    }
    if !(0.0..=1.0).contains(&amplitude_contrast) {
        return Err(Error::invalid(format!(
            "amplitude contrast {amplitude_contrast} outside [0, 1]"
        )));
    }
    if !(phase_range >= 0.0 && phase_range.is_finite()) {
        return Err(Error::invalid(format!(
            "phase range {phase_range} must be finite and nonnegative"
        )));
    }

    struct Cell {
        cy: f64,
        cx: f64,
        radius: f64,
        phase: f64,
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nf = n as f64;
    let cells: Vec<Cell> = (0..cell_count)
        .map(|_| {
            let radius = rng.random_range(nf / 14.0..nf / 8.0);
            Cell {
                cy: rng.random_range(radius..nf - radius),
                cx: rng.random_range(radius..nf - radius),
                radius,
                phase: if phase_range > 0.0 {
                    rng.random_range(-phase_range..=phase_range)
                } else {
                    0.0
                },
            }
        })
        .collect();

    let edge = 2.0;
    Ok(ComplexField::from_fn(n, n, |r, c| {
        let mut weight: f64 = 0.0;
        let mut phase = 0.0;
        for cell in &cells {
            let d = (r as f64 - cell.cy).hypot(c as f64 - cell.cx);
            let rho = d / cell.radius;
            let edge_mask = smoothstep((cell.radius - d) / edge + 0.5);
            if edge_mask == 0.0 {
                continue;
            }
            // thicker rim, thinner middle
            let m = edge_mask * (0.6 + 0.4 * rho.min(1.0).powi(2));
            weight = weight.max(m);
            phase += cell.phase * m;
        }
        let amp = 1.0 - amplitude_contrast * weight;
        Complex64::from_polar(amp, phase.clamp(-phase_range, phase_range))
    }))
}

/// Places `inner` at the center of an `n x n` frame filled with `fill`.
pub fn embed_centered(inner: &ComplexField, n: usize, fill: Complex64) -> Result<ComplexField> {
    let (h, w) = inner.dims();
    if h > n || w > n {
        return Err(Error::invalid(format!(
            "{h}x{w} field does not fit in {n}x{n}"
        )));
    }
    let (top, left) = ((n - h) / 2, (n - w) / 2);
    Ok(ComplexField::from_fn(n, n, |r, c| {
        if (top..top + h).contains(&r) && (left..left + w).contains(&c) {
            inner[(r - top, c - left)]
        } else {
            fill
        }
    }))
}

/// Centered circular aperture with a linear edge roll-off, normalized to
/// unit energy. The center sits at pixel `(m/2, m/2)`, the zero-frequency
/// position of the centered transform.
pub fn make_probe(m: usize, radius: f64, edge_smooth: f64) -> Result<ComplexField> {
    if !(radius >= 1.0 && radius <= m as f64 / 2.0) {
        return Err(Error::invalid(format!(
            "probe radius {radius} outside [1, {}]",
            m as f64 / 2.0
        )));
    }
    if !(edge_smooth >= 0.0 && edge_smooth.is_finite()) {
        return Err(Error::invalid(format!(
            "edge smoothing {edge_smooth} must be nonnegative"
        )));
    }
    let center = (m / 2) as f64;
    let mut probe = ComplexField::from_fn(m, m, |r, c| {
        let d = (r as f64 - center).hypot(c as f64 - center);
        let v = if edge_smooth == 0.0 {
            if d <= radius {
                1.0
            } else {
                0.0
            }
        } else {
            ((radius + edge_smooth / 2.0 - d) / edge_smooth).clamp(0.0, 1.0)
        };
        Complex64::new(v, 0.0)
    });
    let e = probe.energy();
    probe.scale(1.0 / e.sqrt());
    Ok(probe)
}

/// The two canonical probes on a 64-pixel window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProbeConfig {
    Big,
    Small,
}

impl ProbeConfig {
    pub const WINDOW: usize = 64;
    pub const EDGE_SMOOTH: f64 = 2.0;

    pub fn radius(self) -> f64 {
        match self {
            ProbeConfig::Big => 20.0,
            ProbeConfig::Small => 10.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ProbeConfig::Big => "big",
            ProbeConfig::Small => "small",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "big" => Ok(ProbeConfig::Big),
            "small" => Ok(ProbeConfig::Small),
            other => Err(Error::invalid(format!(
                "unknown probe config {other:?} (expected big|small)"
            ))),
        }
    }

    pub fn build(self) -> ComplexField {
        make_probe(Self::WINDOW, self.radius(), Self::EDGE_SMOOTH)
            .expect("canonical probe parameters are valid")
    }
}

/// Jittered row-major raster. Jitter is drawn per axis from
/// `[-jitter, jitter]` and the result clamped into the object.
pub fn make_scan(
    rows: usize,
    cols: usize,
    step: usize,
    jitter: usize,
    m: usize,
    n: usize,
    seed: u64,
) -> Result<ScanGeometry> {
    if rows == 0 || cols == 0 || step == 0 {
        return Err(Error::invalid(
            "scan needs rows, cols and step of at least 1",
        ));
    }
    if m == 0 || m > n {
        return Err(Error::invalid(format!(
            "probe size {m} does not fit object size {n}"
        )));
    }
    let span = |k: usize| (k - 1) * step + m;
    if span(rows) > n || span(cols) > n {
        return Err(Error::invalid(format!(
            "{rows}x{cols} raster with step {step} spans {}x{} pixels, object is {n}",
            span(rows),
            span(cols)
        )));
    }
    let max = (n - m) as i64;
    let j = jitter as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positions = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut offset = |base: usize| {
                let d = if j > 0 { rng.random_range(-j..=j) } else { 0 };
                (base as i64 + d).clamp(0, max) as usize
            };
            let pr = offset(r * step);
            let pc = offset(c * step);
            positions.push((pr, pc));
        }
    }
    ScanGeometry::new(positions, m, n)
}

/// Exit waves `P * O[window_j]` for every scan position.
pub fn exit_waves(pair: &ProbeObjectPair, geom: &ScanGeometry) -> Vec<ComplexField> {
    let m = geom.probe_size();
    par::map(geom.positions(), |_, &(r, c)| {
        let mut w = pair.object.window(r, c, m, m);
        w.as_mut_slice()
            .iter_mut()
            .zip(pair.probe.as_slice())
            .for_each(|(o, p)| *o *= p);
        w
    })
}

/// Far-field intensities `|F(P * O_j)|^2`. With a photon budget each pattern
/// is scaled to that expected total and replaced by Poisson counts drawn
/// from a generator seeded with `seed + j`.
pub fn forward(
    truth: &GroundTruth,
    geom: &ScanGeometry,
    photons_per_pattern: Option<f64>,
    seed: u64,
) -> Result<DiffractionStack> {
    truth.check(geom)?;
    if let Some(p) = photons_per_pattern {
        if !(p > 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!(
                "photons per pattern {p} must be positive"
            )));
        }
    }
    let waves = exit_waves(truth, geom);
    let patterns = par::try_map(&waves, |j, psi| -> Result<Vec<f64>> {
        let spec = dft2_centered(psi)?;
        let mut intensity: Vec<f64> = spec.as_slice().iter().map(|z| z.norm_sqr()).collect();
        if let Some(photons) = photons_per_pattern {
            let total: f64 = intensity.iter().sum();
            let scale = if total > 0.0 { photons / total } else { 0.0 };
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(j as u64));
            for v in intensity.iter_mut() {
                let lambda = *v * scale;
                *v = if lambda > 0.0 {
                    Poisson::new(lambda)
                        .map_err(|e| Error::invalid(format!("poisson rate {lambda}: {e}")))?
                        .sample(&mut rng)
                } else {
                    0.0
                };
            }
        }
        Ok(intensity)
    })?;
    DiffractionStack::new(geom.probe_size(), patterns.concat(), photons_per_pattern)
}

pub const BENCHMARK_MAX_SHIFT: usize = 16;

/// A complete simulated experiment: truth, scan, data, a starting guess and
/// the region used for object error.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub truth: GroundTruth,
    pub geom: ScanGeometry,
    pub data: DiffractionStack,
    pub init: ProbeObjectPair,
    pub region: crate::metrics::MetricRegion,
}

/// Desk-scale comparison setup: a 128-pixel phantom (contrast 0.4, phase
/// range 1, 12 cells, seed 7) centered in a 160-pixel unit-amplitude frame,
/// an 8x8 raster with step 12 and jitter 2 (seed 7), noiseless data, and a
/// unit object with a hard-edged radius-24 aperture as the initial guess.
/// Object error is measured over the central half of the frame, searching
/// translations up to [`BENCHMARK_MAX_SHIFT`] pixels.
pub fn desk_benchmark(probe: ProbeConfig) -> Result<Scenario> {
    const FRAME: usize = 160;
    let phantom = make_phantom(128, 0.4, 1.0, 12, 7)?;
    let object = embed_centered(&phantom, FRAME, Complex64::new(1.0, 0.0))?;
    let geom = make_scan(8, 8, 12, 2, ProbeConfig::WINDOW, FRAME, 7)?;
    let truth = GroundTruth {
        probe: probe.build(),
        object,
    };
    let data = forward(&truth, &geom, None, 7)?;
    let init = ProbeObjectPair {
        probe: make_probe(ProbeConfig::WINDOW, 24.0, 0.0)?,
        object: ComplexField::filled(FRAME, FRAME, Complex64::new(1.0, 0.0)),
    };
    Ok(Scenario {
        truth,
        geom,
        data,
        init,
        region: crate::metrics::MetricRegion::centered_half(FRAME, FRAME)
            .with_max_shift(BENCHMARK_MAX_SHIFT),
    })
}

/// Phase of every pixel wrapped into `[-pi, pi)`.
pub(crate) fn wrapped_phase(z: Complex64) -> f64 {
    let p = z.arg();
    if p >= PI {
        p - 2.0 * PI
    } else {
        p
    }
}
