//! Data-fidelity and object-error metrics.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{cross_correlate, dft2_centered, ComplexField};
use crate::par;
use crate::projections::ExitWaveSet;
use crate::simulate::DiffractionStack;

/// Rectangle in the object frame over which object error is evaluated.
///
/// `max_shift` enables a search over integer translations of the
/// reconstruction (up to that many pixels per axis) before comparison.
/// Far-field data cannot fix the absolute position of a blind
/// reconstruction, so a rigid shift of probe and object is otherwise
/// scored as error. With `max_shift == 0` only the global complex scale is
/// removed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MetricRegion {
    pub top: usize,
    pub left: usize,
    pub height: usize,
    pub width: usize,
    pub max_shift: usize,
}

impl MetricRegion {
    pub fn new(top: usize, left: usize, height: usize, width: usize) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("metric region must have positive area"));
        }
        Ok(Self {
            top,
            left,
            height,
            width,
            max_shift: 0,
        })
    }

    pub fn with_max_shift(self, max_shift: usize) -> Self {
        Self { max_shift, ..self }
    }

    /// Centered rectangle spanning half of each dimension.
    pub fn centered_half(height: usize, width: usize) -> Self {
        let h = (height / 2).max(1);
        let w = (width / 2).max(1);
        Self {
            top: (height - h) / 2,
            left: (width - w) / 2,
            height: h,
            width: w,
            max_shift: 0,
        }
    }

    pub fn check(&self, dims: (usize, usize)) -> Result<()> {
        if self.top + self.height > dims.0 || self.left + self.width > dims.1 {
            return Err(Error::invalid(format!(
                "metric region {self:?} exceeds field of {}x{}",
                dims.0, dims.1
            )));
        }
        Ok(())
    }

    fn window(&self, field: &ComplexField) -> ComplexField {
        field.window(self.top, self.left, self.height, self.width)
    }

    fn pixels(&self, width: usize) -> impl Iterator<Item = usize> + '_ {
        (self.top..self.top + self.height)
            .flat_map(move |r| (self.left..self.left + self.width).map(move |c| r * width + c))
    }
}

/// Normalized amplitude residual
/// `sqrt(sum (|F psi| - sqrt(I))^2 / sum I)` over all patterns.
pub fn data_error(x: &ExitWaveSet, data: &DiffractionStack) -> Result<f64> {
    let m = data.size();
    if x.len() != data.count() || x.wave_dims() != (m, m) {
        return Err(Error::invalid(format!(
            "{} waves of {:?} against {} patterns of {m}x{m}",
            x.len(),
            x.wave_dims(),
            data.count()
        )));
    }
    let total = data.total();
    if total <= 0.0 {
        return Err(Error::invalid("data error is undefined for all-zero data"));
    }
    let per_pattern = par::try_map(x.waves(), |j, psi| -> Result<f64> {
        let spec = dft2_centered(psi)?;
        Ok(spec
            .as_slice()
            .iter()
            .zip(data.pattern(j))
            .map(|(z, &i)| (z.norm_sqr().sqrt() - i.sqrt()).powi(2))
            .sum())
    })?;
    Ok((per_pattern.iter().sum::<f64>() / total).sqrt())
}

/// Best complex scale `gamma` minimizing `||gamma * rec - truth||` over the
/// region, and `gamma * rec`.
pub fn align_complex(
    rec: &ComplexField,
    truth: &ComplexField,
    region: &MetricRegion,
) -> Result<(Complex64, ComplexField)> {
    if rec.dims() != truth.dims() {
        return Err(Error::invalid(format!(
            "reconstruction {:?} and truth {:?} differ in size",
            rec.dims(),
            truth.dims()
        )));
    }
    region.check(rec.dims())?;
    let (r, t) = (rec.as_slice(), truth.as_slice());
    let mut inner = Complex64::new(0.0, 0.0);
    let mut norm = 0.0;
    for k in region.pixels(rec.width()) {
        inner += r[k].conj() * t[k];
        norm += r[k].norm_sqr();
    }
    if norm == 0.0 {
        return Err(Error::invalid(
            "reconstruction is zero over the metric region",
        ));
    }
    let gamma = inner / norm;
    let aligned = ComplexField::from_vec(
        rec.height(),
        rec.width(),
        r.iter().map(|z| z * gamma).collect(),
    )?;
    Ok((gamma, aligned))
}

/// `||gamma * rec - truth|| / ||truth||` over the region after removing the
/// global complex scale, minimized over translations of `rec` when the region
/// allows them.
pub fn object_nrmse(
    rec: &ComplexField,
    truth: &ComplexField,
    region: &MetricRegion,
) -> Result<f64> {
    if region.max_shift == 0 {
        return scale_aligned_nrmse(rec, truth, region);
    }
    register_translation(rec, truth, region).map(|r| r.error)
}

fn scale_aligned_nrmse(
    rec: &ComplexField,
    truth: &ComplexField,
    region: &MetricRegion,
) -> Result<f64> {
    let (_, aligned) = align_complex(rec, truth, region)?;
    let (a, t) = (aligned.as_slice(), truth.as_slice());
    let mut err = 0.0;
    let mut norm = 0.0;
    for k in region.pixels(truth.width()) {
        err += (a[k] - t[k]).norm_sqr();
        norm += t[k].norm_sqr();
    }
    if norm == 0.0 {
        return Err(Error::invalid("truth is zero over the metric region"));
    }
    Ok((err / norm).sqrt())
}

/// Outcome of [`register_translation`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Registration {
    pub error: f64,
    /// `(dy, dx)` such that `rec[r + dy, c + dx]` best matches `truth[r, c]`.
    pub shift: (f64, f64),
}

/// Translation of `rec` that best matches `truth` over the region after
/// scale alignment. Integer shifts up to `region.max_shift` are searched
/// exhaustively (skipping any that read outside `rec`) through a single
/// FFT correlation, then the best one is
/// refined to 1/16 pixel by Lanczos resampling when the frame has room.
pub fn register_translation(
    rec: &ComplexField,
    truth: &ComplexField,
    region: &MetricRegion,
) -> Result<Registration> {
    if rec.dims() != truth.dims() {
        return Err(Error::invalid(format!(
            "reconstruction {:?} and truth {:?} differ in size",
            rec.dims(),
            truth.dims()
        )));
    }
    region.check(rec.dims())?;
    let target = region.window(truth);
    let target_norm = target.energy();
    if target_norm == 0.0 {
        return Err(Error::invalid("truth is zero over the metric region"));
    }
    let (dy, dx) = best_integer_shift(rec, region, &target)?;
    let origin = (
        (region.top as i64 + dy) as usize,
        (region.left as i64 + dx) as usize,
    );
    let err = unexplained(rec, origin, &target, target_norm)
        .ok_or_else(|| Error::invalid("reconstruction is zero over every shifted metric region"))?;

    let fits = origin.0 >= LANCZOS_A - 1
        && origin.1 >= LANCZOS_A - 1
        && origin.0 + region.height + LANCZOS_A <= rec.height()
        && origin.1 + region.width + LANCZOS_A <= rec.width();
    let mut best = (err, (0.0, 0.0));
    if fits {
        for step in [0.5, 0.25, 0.125, 0.0625] {
            let center = best.1;
            for i in -1..=1 {
                for j in -1..=1 {
                    let f = (center.0 + i as f64 * step, center.1 + j as f64 * step);
                    if (i == 0 && j == 0) || f.0.abs() > 0.5 || f.1.abs() > 0.5 {
                        continue;
                    }
                    let moved = resample(rec, origin, f, target.dims());
                    if let Some(e) = unexplained(&moved, (0, 0), &target, target_norm) {
                        if e < best.0 {
                            best = (e, f);
                        }
                    }
                }
            }
        }
    }
    Ok(Registration {
        error: best.0,
        shift: (dy as f64 + best.1 .0, dx as f64 + best.1 .1),
    })
}

const LANCZOS_A: usize = 3;

fn lanczos_weights(f: f64) -> [f64; 2 * LANCZOS_A] {
    let a = LANCZOS_A as f64;
    let sinc = |x: f64| {
        if x.abs() < 1e-12 {
            1.0
        } else {
            let px = std::f64::consts::PI * x;
            px.sin() / px
        }
    };
    let mut w = [0.0; 2 * LANCZOS_A];
    for (k, wk) in w.iter_mut().enumerate() {
        let x = k as f64 - (a - 1.0) - f;
        *wk = if x.abs() < a {
            sinc(x) * sinc(x / a)
        } else {
            0.0
        };
    }
    let total: f64 = w.iter().sum();
    w.map(|v| v / total)
}

// `out[r, c] ~ rec[origin.0 + r + fy, origin.1 + c + fx]` by separable Lanczos
// interpolation. The caller guarantees the kernel footprint stays inside `rec`.
fn resample(
    rec: &ComplexField,
    origin: (usize, usize),
    (fy, fx): (f64, f64),
    (h, w): (usize, usize),
) -> ComplexField {
    let (wy, wx) = (lanczos_weights(fy), lanczos_weights(fx));
    let back = LANCZOS_A - 1;
    let rows = h + 2 * LANCZOS_A - 1;
    let top = origin.0 - back;
    let along_x = ComplexField::from_fn(rows, w, |r, c| {
        let base = (top + r) * rec.width() + origin.1 + c - back;
        let src = &rec.as_slice()[base..base + 2 * LANCZOS_A];
        src.iter().zip(&wx).map(|(z, k)| z * k).sum()
    });
    ComplexField::from_fn(h, w, |r, c| {
        (0..2 * LANCZOS_A)
            .map(|k| along_x[(r + k, c)] * wy[k])
            .sum()
    })
}

// Integer shift maximizing the explained energy `|<rec_s, t>|^2 / ||rec_s||^2`,
// scored for every admissible shift at once with one correlation.
fn best_integer_shift(
    rec: &ComplexField,
    region: &MetricRegion,
    target: &ComplexField,
) -> Result<(i64, i64)> {
    let s = region.max_shift;
    let (h, w) = target.dims();
    let r0 = region.top.saturating_sub(s);
    let c0 = region.left.saturating_sub(s);
    let r1 = (region.top + h + s).min(rec.height());
    let c1 = (region.left + w + s).min(rec.width());
    let crop = rec.window(r0, c0, r1 - r0, c1 - c0);
    let (ch, cw) = crop.dims();
    let padded = ComplexField::from_fn(ch, cw, |r, c| {
        if r < h && c < w {
            target[(r, c)]
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    let corr = cross_correlate(&crop, &padded)?;

    // summed-area table of |crop|^2 for the window energies
    let mut sat = vec![0.0; (ch + 1) * (cw + 1)];
    for r in 0..ch {
        for c in 0..cw {
            sat[(r + 1) * (cw + 1) + c + 1] =
                crop[(r, c)].norm_sqr() + sat[r * (cw + 1) + c + 1] + sat[(r + 1) * (cw + 1) + c]
                    - sat[r * (cw + 1) + c];
        }
    }
    let energy = |r: usize, c: usize| {
        sat[(r + h) * (cw + 1) + c + w] - sat[r * (cw + 1) + c + w] - sat[(r + h) * (cw + 1) + c]
            + sat[r * (cw + 1) + c]
    };

    let mut best: Option<(f64, (i64, i64))> = None;
    for oy in 0..=ch - h {
        for ox in 0..=cw - w {
            let e = energy(oy, ox);
            if e <= 0.0 {
                continue;
            }
            let explained = corr[(oy, ox)].norm_sqr() / e;
            if best.is_none_or(|(b, _)| explained > b) {
                let shift = (
                    (r0 + oy) as i64 - region.top as i64,
                    (c0 + ox) as i64 - region.left as i64,
                );
                best = Some((explained, shift));
            }
        }
    }
    best.map(|(_, shift)| shift)
        .ok_or_else(|| Error::invalid("reconstruction is zero over every shifted metric region"))
}

// Relative residual of the best complex-scale fit of the window of `rec` at
// `origin` to `target`; `None` when that window is zero.
fn unexplained(
    rec: &ComplexField,
    origin: (usize, usize),
    target: &ComplexField,
    target_norm: f64,
) -> Option<f64> {
    let (h, w) = target.dims();
    let row = |r: usize| &rec.as_slice()[(origin.0 + r) * rec.width() + origin.1..][..w];
    let mut inner = Complex64::new(0.0, 0.0);
    let mut rec_norm = 0.0;
    for r in 0..h {
        for (rv, tv) in row(r).iter().zip(&target.as_slice()[r * w..(r + 1) * w]) {
            inner += rv.conj() * tv;
            rec_norm += rv.norm_sqr();
        }
    }
    if rec_norm == 0.0 {
        return None;
    }
    let gamma = inner / rec_norm;
    let mut err = 0.0;
    for r in 0..h {
        for (rv, tv) in row(r).iter().zip(&target.as_slice()[r * w..(r + 1) * w]) {
            err += (rv * gamma - tv).norm_sqr();
        }
    }
    Some((err / target_norm).sqrt())
}
