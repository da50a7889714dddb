//! Exact projections onto circles in the plane.
//!
//! Circles are nonconvex sets with closed-form nearest-point projections,
//! which makes them a convenient playground for the relaxed-projection
//! algebra: sequential projections, the divide/concur product space, and
//! the generalized `(a, b, c)` step can all be evaluated exactly here.

use std::ops::{Add, Mul, Sub};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::Relaxations;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct PlanePoint {
    pub x: f64,
    pub y: f64,
}

impl PlanePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: PlanePoint) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for PlanePoint {
    type Output = PlanePoint;
    fn add(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for PlanePoint {
    type Output = PlanePoint;
    fn sub(self, o: PlanePoint) -> PlanePoint {
        PlanePoint::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<PlanePoint> for f64 {
    type Output = PlanePoint;
    fn mul(self, p: PlanePoint) -> PlanePoint {
        PlanePoint::new(self * p.x, self * p.y)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    center: PlanePoint,
    radius: f64,
}

impl Circle {
    pub fn new(center: PlanePoint, radius: f64) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) || !center.is_finite() {
            return Err(Error::invalid(format!(
                "circle needs a finite center and positive radius, got {center:?} r={radius}"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn center(&self) -> PlanePoint {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

/// Result of a nearest-point projection. `degenerate` is set when the input
/// sat exactly on the center and every point of the circle was equally near.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Projection {
    pub point: PlanePoint,
    pub degenerate: bool,
}

pub fn project_circle(p: PlanePoint, circle: &Circle) -> Projection {
    let d = p - circle.center;
    let r = d.norm();
    if r == 0.0 {
        return Projection {
            point: circle.center + PlanePoint::new(circle.radius, 0.0),
            degenerate: true,
        };
    }
    Projection {
        point: circle.center + (circle.radius / r) * d,
        degenerate: false,
    }
}

/// `a * proj + (1 - a) * p`; `a = 2` is the reflection.
pub fn relax_point(p: PlanePoint, proj: PlanePoint, a: f64) -> PlanePoint {
    a * proj + (1.0 - a) * p
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SweepOrder {
    #[default]
    Fixed,
    Shuffled,
}

/// Sequential projections. Returns the point after every full sweep, or
/// after every single projection when `verbose` is set.
pub fn sp_trajectory(
    p0: PlanePoint,
    circles: &[Circle],
    order: SweepOrder,
    relaxations: &[f64],
    iters: usize,
    seed: u64,
    verbose: bool,
) -> Result<Vec<PlanePoint>> {
    if circles.is_empty() {
        return Err(Error::invalid(
            "sequential projections need at least one circle",
        ));
    }
    if relaxations.len() != circles.len() {
        return Err(Error::invalid(format!(
            "{} relaxations given for {} circles",
            relaxations.len(),
            circles.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx: Vec<usize> = (0..circles.len()).collect();
    let mut p = p0;
    let mut out = Vec::with_capacity(if verbose {
        iters * circles.len()
    } else {
        iters
    });
    for _ in 0..iters {
        if order == SweepOrder::Shuffled {
            idx.shuffle(&mut rng);
        }
        for &k in &idx {
            let proj = project_circle(p, &circles[k]).point;
            p = relax_point(p, proj, relaxations[k]);
            if verbose {
                out.push(p);
            }
        }
        if !verbose {
            out.push(p);
        }
    }
    Ok(out)
}

/// Per-sweep sequential-projection trajectory.
pub fn sp_iterate(
    p0: PlanePoint,
    circles: &[Circle],
    order: SweepOrder,
    relaxations: &[f64],
    iters: usize,
    seed: u64,
) -> Result<Vec<PlanePoint>> {
    sp_trajectory(p0, circles, order, relaxations, iters, seed, false)
}

/// A point of the product space: one plane copy per circle.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPoint {
    pub components: Vec<PlanePoint>,
}

impl ProductPoint {
    pub fn new(components: Vec<PlanePoint>) -> Self {
        Self { components }
    }

    /// The same point copied into `k` components.
    pub fn replicate(p: PlanePoint, k: usize) -> Self {
        Self {
            components: vec![p; k],
        }
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn distance(&self, other: &ProductPoint) -> f64 {
        self.components
            .iter()
            .zip(&other.components)
            .map(|(a, b)| {
                let d = *a - *b;
                d.x * d.x + d.y * d.y
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Componentwise `a * full + (1 - a) * self`.
    pub fn relax_towards(&self, full: &ProductPoint, a: f64) -> ProductPoint {
        ProductPoint::new(
            self.components
                .iter()
                .zip(&full.components)
                .map(|(&x, &p)| relax_point(x, p, a))
                .collect(),
        )
    }

    /// Componentwise `alpha * self + beta * other`.
    pub fn combine(&self, alpha: f64, other: &ProductPoint, beta: f64) -> ProductPoint {
        ProductPoint::new(
            self.components
                .iter()
                .zip(&other.components)
                .map(|(&x, &y)| alpha * x + beta * y)
                .collect(),
        )
    }

    pub fn mean(&self) -> PlanePoint {
        let n = self.components.len() as f64;
        let s = self
            .components
            .iter()
            .fold(PlanePoint::default(), |acc, &p| acc + p);
        (1.0 / n) * s
    }
}

/// Divide projection: each component onto its own circle.
pub fn product_divide(x: &ProductPoint, circles: &[Circle]) -> Result<ProductPoint> {
    if x.len() != circles.len() {
        return Err(Error::invalid(format!(
            "product point has {} components for {} circles",
            x.len(),
            circles.len()
        )));
    }
    Ok(ProductPoint::new(
        x.components
            .iter()
            .zip(circles)
            .map(|(&p, c)| project_circle(p, c).point)
            .collect(),
    ))
}

/// Concur projection: every component replaced by the mean (projection onto
/// the diagonal).
pub fn product_concur(x: &ProductPoint) -> ProductPoint {
    ProductPoint::replicate(x.mean(), x.len())
}

/// One generalized step `a * P_C^b(P_D^c x) + (1 - a) x` with exact
/// projections.
pub fn abc_step(x: &ProductPoint, circles: &[Circle], relax: Relaxations) -> Result<ProductPoint> {
    let y = x.relax_towards(&product_divide(x, circles)?, relax.c);
    let z = y.relax_towards(&product_concur(&y), relax.b);
    Ok(x.relax_towards(&z, relax.a))
}

/// Runs `iters` generalized steps from `p0` replicated across the circles,
/// returning every iterate after the start.
pub fn product_iterate(
    p0: PlanePoint,
    circles: &[Circle],
    relax: Relaxations,
    iters: usize,
) -> Result<Vec<ProductPoint>> {
    if circles.is_empty() {
        return Err(Error::invalid(
            "product iteration needs at least one circle",
        ));
    }
    let mut x = ProductPoint::replicate(p0, circles.len());
    let mut out = Vec::with_capacity(iters);
    for _ in 0..iters {
        x = abc_step(&x, circles, relax)?;
        out.push(x.clone());
    }
    Ok(out)
}

/// A periodic tail found by [`detect_limit_cycle`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LimitCycle {
    pub period: usize,
    /// Smallest distance between successive points inside the window.
    pub min_step: f64,
}

/// Looks for a nontrivial periodic orbit in the last `window` points:
/// `|p_i - p_{i-period}| <= tol` across the window while successive points
/// stay more than `tol` apart somewhere in each period.
pub fn detect_limit_cycle(
    points: &[PlanePoint],
    window: usize,
    max_period: usize,
    tol: f64,
) -> Option<LimitCycle> {
    if points.len() < window + max_period || window < 2 {
        return None;
    }
    let tail = &points[points.len() - window..];
    let offset = points.len() - window;
    let min_step = tail
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .fold(f64::INFINITY, f64::min);
    let max_step = tail
        .windows(2)
        .map(|w| w[0].distance(w[1]))
        .fold(0.0, f64::max);
    if max_step <= tol {
        // settled, not cycling
        return None;
    }
    (1..=max_period)
        .find(|&period| {
            (0..window).all(|i| points[offset + i].distance(points[offset + i - period]) <= tol)
        })
        .map(|period| LimitCycle { period, min_step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(x: f64, y: f64) -> PlanePoint {
        PlanePoint::new(x, y)
    }

    fn circle(x: f64, y: f64, r: f64) -> Circle {
        Circle::new(pt(x, y), r).unwrap()
    }

    #[test]
    fn projection_examples() {
        let unit = circle(0.0, 0.0, 1.0);
        assert_eq!(project_circle(pt(3.0, 0.0), &unit).point, pt(1.0, 0.0));

        let p = project_circle(pt(0.0, 0.0), &circle(0.0, 0.0, 2.0));
        assert_eq!(p.point, pt(2.0, 0.0));
        assert!(p.degenerate);

        let on = project_circle(pt(1.0, 1.0), &circle(0.0, 0.0, 2f64.sqrt()));
        assert!(on.point.distance(pt(1.0, 1.0)) < 1e-15);
        assert!(!on.degenerate);
    }

    #[test]
    fn relax_examples() {
        let (p, q) = (pt(0.0, 0.0), pt(1.0, 0.0));
        assert_eq!(relax_point(p, q, 2.0), pt(2.0, 0.0));
        assert_eq!(relax_point(p, q, 0.0), pt(0.0, 0.0));
        assert_eq!(relax_point(p, q, 0.5), pt(0.5, 0.0));
    }

    #[test]
    fn invalid_circle() {
        assert!(Circle::new(pt(0.0, 0.0), 0.0).is_err());
        assert!(Circle::new(pt(0.0, 0.0), -1.0).is_err());
        assert!(Circle::new(pt(f64::NAN, 0.0), 1.0).is_err());
    }

    #[test]
    fn sp_single_circle_is_constant() {
        let traj = sp_iterate(
            pt(3.0, 4.0),
            &[circle(0.0, 0.0, 1.0)],
            SweepOrder::Fixed,
            &[1.0],
            5,
            0,
        )
        .unwrap();
        assert!(traj.iter().all(|&p| p == traj[0]));
        assert!(traj[0].distance(pt(0.6, 0.8)) < 1e-15);
    }

    #[test]
    fn sp_rejects_bad_inputs() {
        assert!(sp_iterate(pt(0.0, 0.0), &[], SweepOrder::Fixed, &[], 3, 0).is_err());
        assert!(sp_iterate(
            pt(0.0, 0.0),
            &[circle(0.0, 0.0, 1.0)],
            SweepOrder::Fixed,
            &[1.0, 1.0],
            3,
            0
        )
        .is_err());
    }

    #[test]
    fn sp_converges_to_common_point() {
        // all three pass through (3, 4) and share no other point
        let circles = [
            circle(0.0, 0.0, 5.0),
            circle(6.0, 0.0, 5.0),
            circle(3.0, -1.0, 5.0),
        ];
        let q = pt(3.0, 4.0);
        for order in [SweepOrder::Fixed, SweepOrder::Shuffled] {
            let traj = sp_iterate(pt(3.4, 3.7), &circles, order, &[1.0; 3], 400, 11).unwrap();
            assert!(traj.last().unwrap().distance(q) < 1e-8, "{order:?}");
        }
    }

    #[test]
    fn sp_shuffled_is_seeded() {
        let circles = [
            circle(0.0, 0.0, 5.0),
            circle(6.0, 0.0, 5.0),
            circle(3.0, -1.0, 5.0),
        ];
        let a = sp_iterate(
            pt(1.0, 1.0),
            &circles,
            SweepOrder::Shuffled,
            &[1.0; 3],
            20,
            5,
        )
        .unwrap();
        let b = sp_iterate(
            pt(1.0, 1.0),
            &circles,
            SweepOrder::Shuffled,
            &[1.0; 3],
            20,
            5,
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sp_disjoint_circles_cycle() {
        let circles = [circle(0.0, 0.0, 1.0), circle(10.0, 0.0, 1.0)];
        let traj = sp_trajectory(
            pt(4.0, 1.0),
            &circles,
            SweepOrder::Fixed,
            &[1.0; 2],
            50,
            0,
            true,
        )
        .unwrap();
        // brute force: smallest period p with p_i == p_{i-p} over the tail
        let tail = &traj[traj.len() - 20..];
        let period = (1..=4)
            .find(|&p| (p..tail.len()).all(|i| tail[i].distance(tail[i - p]) < 1e-12))
            .unwrap();
        assert_eq!(period, 2);
        assert!(tail.windows(2).all(|w| w[0].distance(w[1]) > 7.9));
        let cyc = detect_limit_cycle(&traj, 20, 4, 1e-9).unwrap();
        assert_eq!(cyc.period, 2);
    }

    #[test]
    fn settled_trajectory_is_not_a_cycle() {
        let traj = vec![pt(1.0, 1.0); 50];
        assert!(detect_limit_cycle(&traj, 20, 4, 1e-9).is_none());
    }

    #[test]
    fn concur_and_divide_examples() {
        let x = ProductPoint::new(vec![pt(2.0, 0.0), pt(0.0, 2.0), pt(-2.0, 0.0)]);
        let c = product_concur(&x);
        for p in &c.components {
            assert!(p.distance(pt(0.0, 2.0 / 3.0)) < 1e-15);
        }

        let circles = [circle(0.0, 0.0, 1.0), circle(5.0, 0.0, 2.0)];
        let on = ProductPoint::new(vec![pt(0.0, 1.0), pt(3.0, 0.0)]);
        assert_eq!(product_divide(&on, &circles).unwrap(), on);

        let single = ProductPoint::new(vec![pt(3.0, 0.0)]);
        assert_eq!(
            product_divide(&single, &circles[..1]).unwrap().components,
            vec![pt(1.0, 0.0)]
        );
        assert!(product_divide(&single, &circles).is_err());
    }

    #[test]
    fn concur_minimizes_spread() {
        let x = ProductPoint::new(vec![pt(1.0, 2.0), pt(-3.0, 0.5), pt(0.25, -1.0)]);
        let m = x.mean();
        let cost = |y: PlanePoint| {
            x.components
                .iter()
                .map(|&p| (p - y).norm().powi(2))
                .sum::<f64>()
        };
        let best = cost(m);
        for k in 0..200 {
            let t = k as f64 * 0.1;
            let y = m + PlanePoint::new(0.3 * t.cos(), 0.3 * t.sin());
            assert!(cost(y) >= best);
        }
        assert_eq!(product_concur(&product_concur(&x)), product_concur(&x));
    }

    proptest! {
        #[test]
        fn projection_lies_on_circle_and_is_idempotent(
            px in -50.0..50.0f64, py in -50.0..50.0f64,
            cx in -5.0..5.0f64, cy in -5.0..5.0f64, r in 0.1..20.0f64,
        ) {
            let c = circle(cx, cy, r);
            let p = project_circle(pt(px, py), &c).point;
            prop_assert!(((p - c.center()).norm() - r).abs() <= 1e-14 * (1.0 + r + c.center().norm()));
            let pp = project_circle(p, &c).point;
            prop_assert!(pp.distance(p) <= 1e-14 * (1.0 + p.norm()));
        }

        #[test]
        fn projection_is_nearest(px in -10.0..10.0f64, py in -10.0..10.0f64, r in 0.5..5.0f64, seed in 0u64..1000) {
            use rand::Rng;
            let c = circle(0.5, -0.25, r);
            let p = pt(px, py);
            let proj = project_circle(p, &c).point;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..1000 {
                let t: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let q = c.center() + PlanePoint::new(r * t.cos(), r * t.sin());
                prop_assert!(p.distance(proj) <= p.distance(q) + 1e-12);
            }
        }

        #[test]
        fn reflection_is_exact(px in -10.0..10.0f64, py in -10.0..10.0f64, qx in -10.0..10.0f64, qy in -10.0..10.0f64) {
            let (p, q) = (pt(px, py), pt(qx, qy));
            let r = relax_point(p, q, 2.0);
            prop_assert_eq!(r, PlanePoint::new(2.0 * q.x - p.x, 2.0 * q.y - p.y));
        }
    }
}
