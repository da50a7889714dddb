//! Complex 2D fields and the centered, unitary discrete Fourier transform.
//!
//! Fields are stored row-major. The transform pair is normalized by
//! `1/sqrt(H*W)` in both directions and keeps the zero frequency at index
//! `(H/2, W/2)`, so a feature at the array center maps to a centered
//! spectrum and `||F|| == ||f||`.

use std::cell::RefCell;
use std::ops::{Index, IndexMut};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexField {
    height: usize,
    width: usize,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, Complex64::new(0.0, 0.0))
    }

    pub fn filled(height: usize, width: usize, value: Complex64) -> Self {
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != height * width {
            return Err(Error::invalid(format!(
                "field of {height}x{width} needs {} values, got {}",
                height * width,
                data.len()
            )));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn from_fn(
        height: usize,
        width: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<Complex64> {
        self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Squared L2 norm, `sum |f|^2`.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        self.data.iter_mut().for_each(|z| *z *= k);
    }

    pub fn scaled(&self, k: f64) -> Self {
        let mut out = self.clone();
        out.scale(k);
        out
    }

    /// Elementwise `a * full + (1 - a) * self`.
    pub fn relax_towards(&self, full: &ComplexField, a: f64) -> ComplexField {
        debug_assert_eq!(self.dims(), full.dims());
        let data = self
            .data
            .iter()
            .zip(&full.data)
            .map(|(&x, &p)| p * a + x * (1.0 - a))
            .collect();
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    /// Copies the `h x w` window whose top-left corner is `(top, left)`.
    pub fn window(&self, top: usize, left: usize, h: usize, w: usize) -> ComplexField {
        debug_assert!(top + h <= self.height && left + w <= self.width);
        let mut data = Vec::with_capacity(h * w);
        for r in top..top + h {
            let start = r * self.width + left;
            data.extend_from_slice(&self.data[start..start + w]);
        }
        Self {
            height: h,
            width: w,
            data,
        }
    }

    /// Euclidean distance `||self - other||`.
    pub fn distance(&self, other: &ComplexField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

impl Index<(usize, usize)> for ComplexField {
    type Output = Complex64;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.data[r * self.width + c]
    }
}

impl IndexMut<(usize, usize)> for ComplexField {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex64 {
        &mut self.data[r * self.width + c]
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan(len: usize, direction: FftDirection) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft(len, direction))
}

/// Forward transform: `fftshift(fft2(ifftshift(f))) / sqrt(HW)`.
pub fn dft2_centered(f: &ComplexField) -> Result<ComplexField> {
    transform(f, FftDirection::Forward)
}

/// Inverse of [`dft2_centered`] with the same normalization and centering.
pub fn idft2_centered(spectrum: &ComplexField) -> Result<ComplexField> {
    transform(spectrum, FftDirection::Inverse)
}

fn transform(f: &ComplexField, direction: FftDirection) -> Result<ComplexField> {
    let (h, w) = f.dims();
    if h == 0 || w == 0 {
        return Err(Error::invalid(format!("cannot transform a {h}x{w} field")));
    }
    let mut buf = shifted(&f.data, h, w, h - h / 2, w - w / 2);
    fft2_in_place(&mut buf, h, w, direction);
    let norm = 1.0 / ((h * w) as f64).sqrt();
    buf.iter_mut().for_each(|z| *z *= norm);
    Ok(ComplexField {
        height: h,
        width: w,
        data: shifted(&buf, h, w, h / 2, w / 2),
    })
}

/// Cyclic cross-correlation `out[d] = sum_r a[r + d] * conj(b[r])` of two
/// fields of equal size, indices taken modulo the dimensions.
pub(crate) fn cross_correlate(a: &ComplexField, b: &ComplexField) -> Result<ComplexField> {
    let (h, w) = a.dims();
    if b.dims() != (h, w) || h == 0 || w == 0 {
        return Err(Error::invalid(format!(
            "cannot correlate {:?} with {:?}",
            a.dims(),
            b.dims()
        )));
    }
    let mut fa = a.data.clone();
    let mut fb = b.data.clone();
    fft2_in_place(&mut fa, h, w, FftDirection::Forward);
    fft2_in_place(&mut fb, h, w, FftDirection::Forward);
    fa.iter_mut().zip(&fb).for_each(|(x, y)| *x *= y.conj());
    fft2_in_place(&mut fa, h, w, FftDirection::Inverse);
    let norm = 1.0 / (h * w) as f64;
    fa.iter_mut().for_each(|z| *z *= norm);
    Ok(ComplexField {
        height: h,
        width: w,
        data: fa,
    })
}

/// Cyclic shift moving index `(0, 0)` to `(dr, dc)`.
fn shifted(src: &[Complex64], h: usize, w: usize, dr: usize, dc: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(src.len());
    let (dr, dc) = (dr % h, dc % w);
    // destination row r takes source row (r - dr), rotated right by dc
    for r in 0..h {
        let s = (r + h - dr) % h;
        let row = &src[s * w..(s + 1) * w];
        out.extend_from_slice(&row[w - dc..]);
        out.extend_from_slice(&row[..w - dc]);
    }
    out
}

fn fft2_in_place(buf: &mut [Complex64], h: usize, w: usize, direction: FftDirection) {
    // rows
    plan(w, direction).process(buf);
    // columns, via transpose
    let mut t = transpose(buf, h, w);
    plan(h, direction).process(&mut t);
    let back = transpose(&t, w, h);
    buf.copy_from_slice(&back);
}

fn transpose(src: &[Complex64], h: usize, w: usize) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(src.len());
    for c in 0..w {
        out.extend((0..h).map(|r| src[r * w + c]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(h: usize, w: usize, seed: u64) -> ComplexField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ComplexField::from_fn(h, w, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    /// Direct O(N^2) centered DFT, independent of the FFT path.
    fn naive_centered_dft(f: &ComplexField) -> ComplexField {
        let (h, w) = f.dims();
        let (ch, cw) = ((h / 2) as f64, (w / 2) as f64);
        let norm = 1.0 / ((h * w) as f64).sqrt();
        ComplexField::from_fn(h, w, |u, v| {
            let mut acc = c(0.0, 0.0);
            for r in 0..h {
                for s in 0..w {
                    let phase = -2.0
                        * std::f64::consts::PI
                        * ((u as f64 - ch) * (r as f64 - ch) / h as f64
                            + (v as f64 - cw) * (s as f64 - cw) / w as f64);
                    acc += f[(r, s)] * Complex64::from_polar(1.0, phase);
                }
            }
            acc * norm
        })
    }

    #[test]
    fn constant_maps_to_centered_delta() {
        let f = ComplexField::filled(4, 4, c(1.0, 0.0));
        let spec = dft2_centered(&f).unwrap();
        for r in 0..4 {
            for s in 0..4 {
                let expect = if (r, s) == (2, 2) { 4.0 } else { 0.0 };
                assert!((spec[(r, s)] - c(expect, 0.0)).norm() < 1e-14, "({r},{s})");
            }
        }
    }

    #[test]
    fn centered_delta_maps_to_constant() {
        let mut spec = ComplexField::zeros(4, 4);
        spec[(2, 2)] = c(4.0, 0.0);
        let f = idft2_centered(&spec).unwrap();
        assert!(f
            .as_slice()
            .iter()
            .all(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn zero_stays_zero() {
        let z = ComplexField::zeros(6, 5);
        assert_eq!(idft2_centered(&z).unwrap(), z);
    }

    #[test]
    fn empty_field_is_rejected() {
        assert!(matches!(
            dft2_centered(&ComplexField::zeros(0, 4)),
            Err(Error::InvalidArgument(_))
        ));
        assert!(matches!(
            idft2_centered(&ComplexField::zeros(3, 0)),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn matches_naive_dft_even_and_odd() {
        for &(h, w) in &[(4, 4), (5, 3), (6, 7), (8, 8)] {
            let f = random_field(h, w, (h * 31 + w) as u64);
            let fast = dft2_centered(&f).unwrap();
            let slow = naive_centered_dft(&f);
            assert!(fast.distance(&slow) <= 1e-12 * slow.norm(), "{h}x{w}");
        }
    }

    #[test]
    fn round_trip_8x8() {
        let f = random_field(8, 8, 3);
        let back = idft2_centered(&dft2_centered(&f).unwrap()).unwrap();
        assert!(back.distance(&f) <= 1e-12 * f.norm());
        let back = dft2_centered(&idft2_centered(&f).unwrap()).unwrap();
        assert!(back.distance(&f) <= 1e-12 * f.norm());
    }

    #[test]
    fn window_copies_subarray() {
        let f = ComplexField::from_fn(4, 5, |r, s| c((r * 5 + s) as f64, 0.0));
        let w = f.window(1, 2, 2, 3);
        assert_eq!(w.dims(), (2, 3));
        assert_eq!(w[(0, 0)], c(7.0, 0.0));
        assert_eq!(w[(1, 2)], c(14.0, 0.0));
    }

    #[test]
    fn from_vec_checks_length() {
        assert!(ComplexField::from_vec(2, 2, vec![c(0.0, 0.0); 3]).is_err());
    }

    #[test]
    fn cross_correlation_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let (h, w) = (5, 6);
        let a = ComplexField::from_fn(h, w, |_, _| Complex64::new(rng.random(), rng.random()));
        let b = ComplexField::from_fn(h, w, |_, _| Complex64::new(rng.random(), rng.random()));
        let out = cross_correlate(&a, &b).unwrap();
        for dr in 0..h {
            for dc in 0..w {
                let mut sum = Complex64::new(0.0, 0.0);
                for r in 0..h {
                    for c in 0..w {
                        sum += a[((r + dr) % h, (c + dc) % w)] * b[(r, c)].conj();
                    }
                }
                assert!((out[(dr, dc)] - sum).norm() < 1e-12);
            }
        }
    }
}
