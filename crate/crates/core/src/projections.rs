//! Product-space projections for blind ptychography.
//!
//! The iterate is the set of exit waves `[psi_1 .. psi_J]`. The divide
//! projection enforces the measured Fourier moduli on each wave separately;
//! the concur projection pulls the set back toward waves that factor as
//! `P(r - r_j) * O(r)` for a single probe and object. That factorization set
//! has no closed-form projection, so concur runs warm-started alternating
//! least squares on the pair and re-synthesizes the waves from it.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::{dft2_centered, idft2_centered, ComplexField};
use crate::par;
use crate::simulate::{exit_waves, DiffractionStack, ProbeObjectPair, ScanGeometry};

pub const DEFAULT_EPS_FRAC: f64 = 1e-12;
pub const DEFAULT_REG_FRAC: f64 = 1e-9;

/// The product-space iterate: one `M x M` exit wave per scan position.
#[derive(Clone, Debug, PartialEq)]
pub struct ExitWaveSet {
    waves: Vec<ComplexField>,
}

impl ExitWaveSet {
    pub fn new(waves: Vec<ComplexField>) -> Result<Self> {
        let first = waves
            .first()
            .ok_or_else(|| Error::invalid("exit-wave set needs at least one wave"))?
            .dims();
        if waves.iter().any(|w| w.dims() != first) {
            return Err(Error::invalid("exit waves differ in size"));
        }
        Ok(Self { waves })
    }

    /// Exit waves synthesized from a probe/object pair.
    pub fn from_pair(pair: &ProbeObjectPair, geom: &ScanGeometry) -> Result<Self> {
        pair.check(geom)?;
        Ok(Self {
            waves: exit_waves(pair, geom),
        })
    }

    pub fn waves(&self) -> &[ComplexField] {
        &self.waves
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn wave_dims(&self) -> (usize, usize) {
        self.waves[0].dims()
    }

    pub fn is_finite(&self) -> bool {
        self.waves.iter().all(ComplexField::is_finite)
    }

    pub fn energy(&self) -> f64 {
        self.waves.iter().map(ComplexField::energy).sum()
    }

    pub fn distance(&self, other: &ExitWaveSet) -> f64 {
        self.waves
            .iter()
            .zip(&other.waves)
            .map(|(a, b)| a.distance(b).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise `a * full + (1 - a) * self`.
    pub fn relax_towards(&self, full: &ExitWaveSet, a: f64) -> ExitWaveSet {
        ExitWaveSet {
            waves: self
                .waves
                .iter()
                .zip(&full.waves)
                .map(|(x, p)| x.relax_towards(p, a))
                .collect(),
        }
    }

    pub fn into_waves(self) -> Vec<ComplexField> {
        self.waves
    }
}

/// Replaces the Fourier modulus of `psi` with `amplitude`, keeping the phase.
/// Spectrum pixels at or below `eps_frac * max|Psi|` take phase 0.
pub fn project_modulus(
    psi: &ComplexField,
    amplitude: &[f64],
    eps_frac: f64,
) -> Result<ComplexField> {
    if amplitude.len() != psi.len() {
        return Err(Error::invalid(format!(
            "amplitude has {} entries for a {:?} wave",
            amplitude.len(),
            psi.dims()
        )));
    }
    if let Some(bad) = amplitude.iter().find(|a| a.is_nan() || **a < 0.0) {
        return Err(Error::invalid(format!("negative amplitude {bad}")));
    }
    let mut spec = dft2_centered(psi)?;
    let peak = spec
        .as_slice()
        .iter()
        .map(|z| z.norm_sqr().sqrt())
        .fold(0.0, f64::max);
    let eps = eps_frac * peak;
    for (z, &a) in spec.as_mut_slice().iter_mut().zip(amplitude) {
        let mag = z.norm_sqr().sqrt();
        *z = if mag > eps && mag > 0.0 {
            *z * (a / mag)
        } else {
            Complex64::new(a, 0.0)
        };
    }
    idft2_centered(&spec)
}

fn check_data(x: &ExitWaveSet, data: &DiffractionStack) -> Result<()> {
    let m = data.size();
    if x.len() != data.count() || x.wave_dims() != (m, m) {
        return Err(Error::invalid(format!(
            "{} waves of {:?} against {} patterns of {m}x{m}",
            x.len(),
            x.wave_dims(),
            data.count()
        )));
    }
    Ok(())
}

fn amplitudes(pattern: &[f64]) -> Vec<f64> {
    pattern.iter().map(|v| v.sqrt()).collect()
}

/// Relaxed divide projection, `c * P_D x + (1 - c) x`, applied per wave.
pub fn divide_project(
    x: &ExitWaveSet,
    data: &DiffractionStack,
    c: f64,
    eps_frac: f64,
) -> Result<ExitWaveSet> {
    check_data(x, data)?;
    let waves = par::try_map(&x.waves, |j, psi| {
        let full = project_modulus(psi, &amplitudes(data.pattern(j)), eps_frac)?;
        Ok(psi.relax_towards(&full, c))
    })?;
    Ok(ExitWaveSet { waves })
}

fn check_geometry(x: &ExitWaveSet, geom: &ScanGeometry) -> Result<()> {
    let m = geom.probe_size();
    if x.len() != geom.len() || x.wave_dims() != (m, m) {
        return Err(Error::invalid(format!(
            "{} waves of {:?} against {} positions with probe size {m}",
            x.len(),
            x.wave_dims(),
            geom.len()
        )));
    }
    Ok(())
}

fn regularizer(denominator: &[f64], reg_frac: f64) -> f64 {
    reg_frac * denominator.iter().copied().fold(0.0, f64::max)
}

/// Closed-form least-squares object for fixed probe:
/// `O = sum_j conj(P_j) psi_j / (sum_j |P_j|^2 + delta)`.
///
/// Every object row sums its contributions in position order, so the result
/// does not depend on how rows are scheduled.
pub fn update_object(
    x: &ExitWaveSet,
    probe: &ComplexField,
    geom: &ScanGeometry,
    reg_frac: f64,
) -> Result<ComplexField> {
    check_geometry(x, geom)?;
    let m = geom.probe_size();
    let n = geom.object_size();
    if probe.dims() != (m, m) {
        return Err(Error::invalid(format!(
            "probe {:?} does not match M={m}",
            probe.dims()
        )));
    }
    let p = probe.as_slice();
    let mut num = vec![Complex64::new(0.0, 0.0); n * n];
    let mut den = vec![0.0f64; n * n];
    par::for_each_row(&mut num, n, |row, out| {
        for (&(r0, c0), psi) in geom.positions().iter().zip(&x.waves) {
            if row < r0 || row >= r0 + m {
                continue;
            }
            let u = row - r0;
            let prow = &p[u * m..(u + 1) * m];
            let wrow = &psi.as_slice()[u * m..(u + 1) * m];
            for ((o, pv), w) in out[c0..c0 + m].iter_mut().zip(prow).zip(wrow) {
                *o += pv.conj() * w;
            }
        }
    });
    par::for_each_row(&mut den, n, |row, out| {
        for &(r0, c0) in geom.positions() {
            if row < r0 || row >= r0 + m {
                continue;
            }
            let u = row - r0;
            for (o, pv) in out[c0..c0 + m].iter_mut().zip(&p[u * m..(u + 1) * m]) {
                *o += pv.norm_sqr();
            }
        }
    });
    let delta = regularizer(&den, reg_frac);
    ComplexField::from_vec(n, n, divide_guarded(num, &den, delta))
}

/// Closed-form least-squares probe for fixed object:
/// `P = sum_j conj(O_j) psi_j / (sum_j |O_j|^2 + delta)`.
pub fn update_probe(
    x: &ExitWaveSet,
    object: &ComplexField,
    geom: &ScanGeometry,
    reg_frac: f64,
) -> Result<ComplexField> {
    check_geometry(x, geom)?;
    let m = geom.probe_size();
    let n = geom.object_size();
    if object.dims() != (n, n) {
        return Err(Error::invalid(format!(
            "object {:?} does not match N={n}",
            object.dims()
        )));
    }
    let o = object.as_slice();
    let mut num = vec![Complex64::new(0.0, 0.0); m * m];
    let mut den = vec![0.0f64; m * m];
    par::for_each_row(&mut num, m, |u, out| {
        for (&(r0, c0), psi) in geom.positions().iter().zip(&x.waves) {
            let orow = &o[(r0 + u) * n + c0..(r0 + u) * n + c0 + m];
            let wrow = &psi.as_slice()[u * m..(u + 1) * m];
            for ((acc, ov), w) in out.iter_mut().zip(orow).zip(wrow) {
                *acc += ov.conj() * w;
            }
        }
    });
    par::for_each_row(&mut den, m, |u, out| {
        for &(r0, c0) in geom.positions() {
            let orow = &o[(r0 + u) * n + c0..(r0 + u) * n + c0 + m];
            for (acc, ov) in out.iter_mut().zip(orow) {
                *acc += ov.norm_sqr();
            }
        }
    });
    let delta = regularizer(&den, reg_frac);
    ComplexField::from_vec(m, m, divide_guarded(num, &den, delta))
}

fn divide_guarded(num: Vec<Complex64>, den: &[f64], delta: f64) -> Vec<Complex64> {
    num.into_iter()
        .zip(den)
        .map(|(z, &d)| {
            let d = d + delta;
            if d > 0.0 {
                z / d
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect()
}

/// Sum of squared residuals `sum_j ||psi_j - P * O_j||^2`.
pub fn consistency_residual(
    x: &ExitWaveSet,
    pair: &ProbeObjectPair,
    geom: &ScanGeometry,
) -> Result<f64> {
    check_geometry(x, geom)?;
    let synth = ExitWaveSet::from_pair(pair, geom)?;
    Ok(x.distance(&synth).powi(2))
}

/// Rescales the probe to unit energy and the object inversely. The exit
/// waves `P * O_j` are unchanged.
pub fn normalize_pair(pair: &mut ProbeObjectPair) {
    let e = pair.probe.energy();
    if e > 0.0 && e.is_finite() {
        let k = e.sqrt();
        pair.probe.scale(1.0 / k);
        pair.object.scale(k);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConcurSettings {
    pub inner_iters: usize,
    pub reg_frac: f64,
    pub renorm: bool,
}

impl Default for ConcurSettings {
    fn default() -> Self {
        Self {
            inner_iters: 1,
            reg_frac: DEFAULT_REG_FRAC,
            renorm: true,
        }
    }
}

/// Relaxed concur projection. Starting from `seed_pair` it runs
/// `inner_iters` rounds of object-then-probe least squares, optionally
/// renormalizes, and returns `b * synth + (1 - b) * x` with the fitted pair.
pub fn concur_project(
    x: &ExitWaveSet,
    geom: &ScanGeometry,
    seed_pair: &ProbeObjectPair,
    b: f64,
    settings: ConcurSettings,
) -> Result<(ExitWaveSet, ProbeObjectPair)> {
    let (pair, _) = fit_pair(x, geom, seed_pair, settings, false)?;
    let synth = ExitWaveSet::from_pair(&pair, geom)?;
    Ok((x.relax_towards(&synth, b), pair))
}

/// Runs the alternating least-squares fit behind [`concur_project`]. When
/// `track` is set, also returns the consistency residual after each inner
/// round (object and probe update).
pub fn fit_pair(
    x: &ExitWaveSet,
    geom: &ScanGeometry,
    seed_pair: &ProbeObjectPair,
    settings: ConcurSettings,
    track: bool,
) -> Result<(ProbeObjectPair, Vec<f64>)> {
    if settings.inner_iters == 0 {
        return Err(Error::invalid("concur needs at least one inner iteration"));
    }
    check_geometry(x, geom)?;
    seed_pair.check(geom)?;
    let mut pair = seed_pair.clone();
    let mut residuals = Vec::new();
    if track {
        residuals.push(consistency_residual(x, &pair, geom)?);
    }
    for _ in 0..settings.inner_iters {
        pair.object = update_object(x, &pair.probe, geom, settings.reg_frac)?;
        if track {
            residuals.push(consistency_residual(x, &pair, geom)?);
        }
        pair.probe = update_probe(x, &pair.object, geom, settings.reg_frac)?;
        if track {
            residuals.push(consistency_residual(x, &pair, geom)?);
        }
    }
    if settings.renorm {
        normalize_pair(&mut pair);
    }
    Ok((pair, residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{forward, make_phantom, make_probe, make_scan};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn random_field(h: usize, w: usize, rng: &mut ChaCha8Rng) -> ComplexField {
        ComplexField::from_fn(h, w, |_, _| {
            c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        })
    }

    fn small_problem() -> (ProbeObjectPair, ScanGeometry, DiffractionStack) {
        let object = make_phantom(40, 0.4, 1.0, 3, 5).unwrap();
        let probe = make_probe(16, 6.0, 1.0).unwrap();
        let geom = make_scan(4, 4, 7, 1, 16, 40, 5).unwrap();
        let truth = ProbeObjectPair { probe, object };
        let data = forward(&truth, &geom, None, 0).unwrap();
        (truth, geom, data)
    }

    #[test]
    fn modulus_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_field(8, 8, &mut rng);
        let amp: Vec<f64> = dft2_centered(&psi)
            .unwrap()
            .as_slice()
            .iter()
            .map(|z| z.norm())
            .collect();
        let out = project_modulus(&psi, &amp, DEFAULT_EPS_FRAC).unwrap();
        assert!(out.distance(&psi) <= 1e-12 * psi.norm());
    }

    #[test]
    fn modulus_zero_amplitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_field(8, 8, &mut rng);
        let out = project_modulus(&psi, &[0.0; 64], DEFAULT_EPS_FRAC).unwrap();
        assert!(out.as_slice().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn modulus_zero_spectrum_takes_phase_zero() {
        let psi = ComplexField::zeros(4, 4);
        let amp = [1.0; 16];
        let out = project_modulus(&psi, &amp, DEFAULT_EPS_FRAC).unwrap();
        let spec = dft2_centered(&out).unwrap();
        assert!(spec
            .as_slice()
            .iter()
            .all(|z| (z - c(1.0, 0.0)).norm() < 1e-14));
    }

    #[test]
    fn modulus_rejects_negative_amplitude() {
        let psi = ComplexField::zeros(2, 2);
        assert!(matches!(
            project_modulus(&psi, &[1.0, -1.0, 0.0, 0.0], 1e-12),
            Err(Error::InvalidArgument(_))
        ));
        assert!(project_modulus(&psi, &[1.0; 3], 1e-12).is_err());
    }

    #[test]
    fn modulus_satisfies_constraint() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let psi = random_field(8, 8, &mut rng);
            let amp: Vec<f64> = (0..64).map(|_| rng.random_range(0.0..2.0)).collect();
            let out = project_modulus(&psi, &amp, DEFAULT_EPS_FRAC).unwrap();
            let spec = dft2_centered(&out).unwrap();
            for (z, a) in spec.as_slice().iter().zip(&amp) {
                assert!((z.norm() - a).abs() <= 1e-10 * a.max(1e-300));
            }
        }
    }

    #[test]
    fn divide_relaxation_identities() {
        let (truth, geom, data) = small_problem();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = ExitWaveSet::new(
            (0..geom.len())
                .map(|_| random_field(16, 16, &mut rng))
                .collect(),
        )
        .unwrap();
        assert_eq!(divide_project(&x, &data, 0.0, DEFAULT_EPS_FRAC).unwrap(), x);

        let full = divide_project(&x, &data, 1.0, DEFAULT_EPS_FRAC).unwrap();
        let refl = divide_project(&x, &data, 2.0, DEFAULT_EPS_FRAC).unwrap();
        for ((r, p), x) in refl.waves().iter().zip(full.waves()).zip(x.waves()) {
            for ((rv, pv), xv) in r.as_slice().iter().zip(p.as_slice()).zip(x.as_slice()) {
                assert_eq!(*rv, *pv * 2.0 - *xv);
            }
        }

        let truth_waves = ExitWaveSet::from_pair(&truth, &geom).unwrap();
        let same = divide_project(&truth_waves, &data, 1.0, DEFAULT_EPS_FRAC).unwrap();
        assert!(same.distance(&truth_waves) <= 1e-12 * truth_waves.energy().sqrt());
    }

    #[test]
    fn divide_checks_shapes() {
        let (_, _, data) = small_problem();
        let x = ExitWaveSet::new(vec![ComplexField::zeros(16, 16)]).unwrap();
        assert!(divide_project(&x, &data, 1.0, 1e-12).is_err());
    }

    #[test]
    fn single_window_object_recovery() {
        let m = 4;
        let geom = ScanGeometry::new(vec![(1, 2)], m, 8).unwrap();
        let probe = ComplexField::filled(m, m, c(1.0 / m as f64, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let window = random_field(m, m, &mut rng);
        let mut psi = window.clone();
        psi.as_mut_slice()
            .iter_mut()
            .zip(probe.as_slice())
            .for_each(|(w, p)| *w *= p);
        let x = ExitWaveSet::new(vec![psi]).unwrap();
        let obj = update_object(&x, &probe, &geom, 1e-9).unwrap();
        assert!(obj.window(1, 2, m, m).distance(&window) <= 1e-6);
        // unilluminated pixels stay zero
        assert_eq!(obj[(0, 0)], c(0.0, 0.0));
    }

    #[test]
    fn repeated_position_averages() {
        let m = 3;
        let geom = ScanGeometry::new(vec![(0, 0), (0, 0)], m, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let probe = random_field(m, m, &mut rng);
        let (a, b) = (random_field(m, m, &mut rng), random_field(m, m, &mut rng));
        let x = ExitWaveSet::new(vec![a.clone(), b.clone()]).unwrap();
        let reg = 1e-9;
        let obj = update_object(&x, &probe, &geom, reg).unwrap();
        let peak = probe
            .as_slice()
            .iter()
            .map(|p| 2.0 * p.norm_sqr())
            .fold(0.0, f64::max);
        for k in 0..m * m {
            let p = probe.as_slice()[k];
            // per-pixel ridge normal equation (2|P|^2 + delta) o = conj(P)(a + b)
            let expect =
                p.conj() * (a.as_slice()[k] + b.as_slice()[k]) / (2.0 * p.norm_sqr() + reg * peak);
            assert!((obj.as_slice()[k] - expect).norm() <= 1e-12 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn zero_probe_gives_zero_object() {
        let geom = ScanGeometry::new(vec![(0, 0), (1, 1)], 2, 4).unwrap();
        let x = ExitWaveSet::new(vec![ComplexField::filled(2, 2, c(1.0, 1.0)); 2]).unwrap();
        let obj = update_object(&x, &ComplexField::zeros(2, 2), &geom, 1e-9).unwrap();
        assert!(obj.as_slice().iter().all(|z| *z == c(0.0, 0.0)));
    }

    #[test]
    fn unit_object_probe_is_mean() {
        let geom = ScanGeometry::new(vec![(0, 0), (2, 1), (1, 3)], 4, 8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let waves: Vec<ComplexField> = (0..3).map(|_| random_field(4, 4, &mut rng)).collect();
        let x = ExitWaveSet::new(waves.clone()).unwrap();
        let p = update_probe(&x, &ComplexField::filled(8, 8, c(1.0, 0.0)), &geom, 1e-12).unwrap();
        for k in 0..16 {
            let mean =
                (waves[0].as_slice()[k] + waves[1].as_slice()[k] + waves[2].as_slice()[k]) / 3.0;
            assert!((p.as_slice()[k] - mean).norm() < 1e-10);
        }
    }

    #[test]
    fn probe_matches_normal_equations() {
        // brute-force per-pixel normal equation built from explicit windows
        let geom = ScanGeometry::new(vec![(0, 0), (3, 1), (2, 4)], 4, 9).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let object = random_field(9, 9, &mut rng);
        let waves: Vec<ComplexField> = (0..3).map(|_| random_field(4, 4, &mut rng)).collect();
        let x = ExitWaveSet::new(waves.clone()).unwrap();
        let reg = 1e-9;
        let p = update_probe(&x, &object, &geom, reg).unwrap();
        let mut dens = [0.0; 16];
        let mut nums = vec![c(0.0, 0.0); 16];
        for (j, &(r0, c0)) in geom.positions().iter().enumerate() {
            for u in 0..4 {
                for v in 0..4 {
                    let ov = object[(r0 + u, c0 + v)];
                    dens[u * 4 + v] += ov.norm_sqr();
                    nums[u * 4 + v] += ov.conj() * waves[j][(u, v)];
                }
            }
        }
        let delta = reg * dens.iter().cloned().fold(0.0, f64::max);
        for k in 0..16 {
            let expect = nums[k] / (dens[k] + delta);
            assert!((p.as_slice()[k] - expect).norm() <= 1e-10 * (1.0 + expect.norm()));
        }
    }

    #[test]
    fn concur_fixed_point_and_identity() {
        let (truth, geom, _) = small_problem();
        let x = ExitWaveSet::from_pair(&truth, &geom).unwrap();
        // the ridge term biases dim probe-edge pixels by roughly reg_frac
        let exact = ConcurSettings {
            reg_frac: 1e-14,
            ..ConcurSettings::default()
        };
        let (out, pair) = concur_project(&x, &geom, &truth, 1.0, exact).unwrap();
        let rel = out.distance(&x) / x.energy().sqrt();
        assert!(rel <= 1e-10, "{rel}");
        assert!(pair.probe.distance(&truth.probe) <= 1e-8);
        let (out, _) = concur_project(&x, &geom, &truth, 1.0, ConcurSettings::default()).unwrap();
        assert!(out.distance(&x) / x.energy().sqrt() <= 1e-7);

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = ExitWaveSet::new(
            (0..geom.len())
                .map(|_| random_field(16, 16, &mut rng))
                .collect(),
        )
        .unwrap();
        let (same, _) = concur_project(&y, &geom, &truth, 0.0, ConcurSettings::default()).unwrap();
        assert_eq!(same, y);
    }

    #[test]
    fn renorm_preserves_waves() {
        let (truth, geom, _) = small_problem();
        let mut pair = truth.clone();
        pair.probe.scale(3.0);
        pair.object.scale(1.0 / 3.0);
        let before = ExitWaveSet::from_pair(&pair, &geom).unwrap();
        normalize_pair(&mut pair);
        assert!((pair.probe.energy() - 1.0).abs() < 1e-12);
        let after = ExitWaveSet::from_pair(&pair, &geom).unwrap();
        assert!(after.distance(&before) <= 1e-12 * before.energy().sqrt());
    }

    #[test]
    fn als_residual_non_increasing() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let geom = make_scan(2, 2, 8, 0, 8, 16, 0).unwrap();
        let x = ExitWaveSet::new((0..4).map(|_| random_field(8, 8, &mut rng)).collect()).unwrap();
        let seed = ProbeObjectPair {
            probe: random_field(8, 8, &mut rng),
            object: random_field(16, 16, &mut rng),
        };
        let settings = ConcurSettings {
            inner_iters: 10,
            ..Default::default()
        };
        let (_, res) = fit_pair(&x, &geom, &seed, settings, true).unwrap();
        assert_eq!(res.len(), 21);
        assert!(res.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{res:?}");
    }

    #[test]
    fn zero_inner_iters_rejected() {
        let (truth, geom, _) = small_problem();
        let x = ExitWaveSet::from_pair(&truth, &geom).unwrap();
        let settings = ConcurSettings {
            inner_iters: 0,
            ..Default::default()
        };
        assert!(concur_project(&x, &geom, &truth, 1.0, settings).is_err());
    }
}
