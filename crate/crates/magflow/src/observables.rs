//! Test observables on the frame bundle and their Liouville averages.
//!
//! The function class is deliberately small: smooth bumps in the quotient
//! distance to a center point, optionally modulated by a cosine in the fiber
//! angle. Invariance under the surface group is structural because the value
//! depends only on the quotient distance and on the fiber angle of the
//! reduced frame.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{self, MeanAccumulator};
use crate::sl2::{cosh_distance, GroupElement, Point};
use crate::surface::Surface;

/// Largest admissible bump radius; below half the systole (~1.5286) so that
/// metric balls embed and the radial quadrature is exact.
pub const MAX_RADIUS: f64 = 1.4;

/// C-infinity bump profile: exp(1 - 1/(1 - (r/r0)^2)) for r < r0, else 0.
/// Value 1 at r = 0, identically zero from r0 on, smooth at the junction.
pub fn bump_profile(r: f64, r0: f64) -> f64 {
    debug_assert!(r0 > 0.0);
    if r >= r0 {
        return 0.0;
    }
    let x = (r / r0) * (r / r0);
    (1.0 - 1.0 / (1.0 - x)).exp()
}

/// Anything that can be averaged along orbits: a bounded function of a
/// reduced frame.
pub trait StateObservable: Sync {
    fn value(&self, surface: &Surface, frame: &GroupElement) -> f64;
}

impl<F: Fn(&Surface, &GroupElement) -> f64 + Sync> StateObservable for F {
    fn value(&self, surface: &Surface, frame: &GroupElement) -> f64 {
        self(surface, frame)
    }
}

/// A bump observable: center (reduced), radius r0 in (0, 1.4] and fiber mode
/// (0 is base-only; q >= 1 multiplies by cos(q·fiber angle)).
///
/// Serializes to the flat record `{center_re, center_im, r0, fiber_mode}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BumpObservable {
    pub center_re: f64,
    pub center_im: f64,
    pub r0: f64,
    pub fiber_mode: u32,
}

impl BumpObservable {
    /// Build a bump, reducing the center into the fundamental domain.
    pub fn new(surface: &Surface, center: Point, r0: f64, fiber_mode: u32) -> Result<Self> {
        if !(r0 > 0.0 && r0 <= MAX_RADIUS) {
            return Err(Error::invalid(format!(
                "bump radius must lie in (0, {MAX_RADIUS}], got {r0}"
            )));
        }
        let (center, _) = surface.reduce_point(center)?;
        Ok(Self { center_re: center.re, center_im: center.im, r0, fiber_mode })
    }

    pub fn center(&self) -> Point {
        Point { re: self.center_re, im: self.center_im }
    }

    /// Value at a reduced frame: bump of the quotient distance from the base
    /// point to the center, times the fiber factor.
    pub fn evaluate(&self, surface: &Surface, frame: &GroupElement) -> f64 {
        let base = frame.apply(Point::I);
        let r = surface.quotient_distance(base, self.center(), 2);
        self.finish(r, frame)
    }

    /// Cache the word images of the center for tight loops.
    pub fn prepare(&self, surface: &Surface) -> PreparedBump {
        let images = surface
            .words(2)
            .iter()
            .map(|w| w.apply(self.center()))
            .collect();
        PreparedBump { inner: *self, images }
    }

    #[inline]
    fn finish(&self, r: f64, frame: &GroupElement) -> f64 {
        let b = bump_profile(r, self.r0);
        if b == 0.0 || self.fiber_mode == 0 {
            b
        } else {
            b * (self.fiber_mode as f64 * frame.fiber_angle()).cos()
        }
    }
}

impl StateObservable for BumpObservable {
    fn value(&self, surface: &Surface, frame: &GroupElement) -> f64 {
        self.evaluate(surface, frame)
    }
}

/// A bump with precomputed center images; evaluates identically to the bump
/// it came from.
#[derive(Debug, Clone)]
pub struct PreparedBump {
    inner: BumpObservable,
    images: Vec<Point>,
}

impl PreparedBump {
    pub fn evaluate(&self, frame: &GroupElement) -> f64 {
        let base = frame.apply(Point::I);
        let mut best = f64::INFINITY;
        for &img in &self.images {
            let cd = cosh_distance(base, img);
            if cd < best {
                best = cd;
            }
        }
        self.inner.finish(best.acosh(), frame)
    }
}

impl StateObservable for PreparedBump {
    fn value(&self, _surface: &Surface, frame: &GroupElement) -> f64 {
        self.evaluate(frame)
    }
}

/// Monte-Carlo Liouville average over `n` Haar frames: returns the sample
/// mean and its standard error. Deterministic per seed and independent of
/// the worker layout.
pub fn liouville_average(
    surface: &Surface,
    obs: &impl StateObservable,
    n: u64,
    seed: u64,
) -> Result<(f64, f64)> {
    if n < 100 {
        return Err(Error::invalid(format!("need at least 100 samples, got {n}")));
    }
    let acc = exec::fold_indexed(
        n,
        MeanAccumulator::default,
        |acc, i| {
            let (frame, _) = surface.haar_sample_at(seed, i);
            acc.push(obs.value(surface, &frame));
        },
        |acc, other| acc.merge(other),
    );
    Ok((acc.mean(), acc.stderr()))
}

/// Simpson quadrature of the Liouville average of a base-only bump at
/// radius r0 < half the systole: (1/2) ∫ bump(r) sinh r dr over [0, r0].
/// Exact reference for bumps whose support embeds.
pub fn bump_liouville_quadrature(r0: f64, panels: usize) -> f64 {
    let n = 2 * panels.max(16);
    let h = r0 / n as f64;
    let f = |r: f64| bump_profile(r, r0) * r.sinh();
    let mut sum = f(0.0) + f(r0);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(i as f64 * h);
    }
    0.5 * sum * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{fiber_rotation, MagneticParams, PhaseState};

    fn assert_close(a: f64, b: f64, tol: f64, what: &str) {
        assert!((a - b).abs() <= tol, "{what}: {a} vs {b} (tol {tol})");
    }

    #[test]
    fn bump_profile_examples() {
        assert_eq!(bump_profile(0.0, 1.2), 1.0);
        assert_eq!(bump_profile(1.2, 1.2), 0.0);
        assert_eq!(bump_profile(5.0, 1.2), 0.0);
        // r = r0/sqrt(2): exponent 1 - 2 = -1
        let r0 = 0.9;
        assert_close(
            bump_profile(r0 / 2f64.sqrt(), r0),
            (-1.0f64).exp(),
            1e-12,
            "e^{-1} point",
        );
        // monotone decreasing on [0, r0]
        let mut prev = 1.0;
        for i in 1..=50 {
            let v = bump_profile(i as f64 * r0 / 50.0, r0);
            assert!(v <= prev + 1e-15);
            prev = v;
        }
    }

    #[test]
    fn bump_radius_validation() {
        let s = Surface::bolza();
        assert!(BumpObservable::new(&s, Point::I, 0.0, 0).is_err());
        assert!(BumpObservable::new(&s, Point::I, 1.5, 0).is_err());
        assert!(BumpObservable::new(&s, Point::I, 1.4, 0).is_ok());
    }

    #[test]
    fn evaluate_at_center_and_far_away() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point::I, 1.0, 0).unwrap();
        assert_eq!(obs.evaluate(&s, &GroupElement::IDENTITY), 1.0);

        // a frame based farther than r0 from the center evaluates to zero
        let far = crate::sl2::AlgebraElement::GEODESIC.exp(1.3);
        let (far, _) = s.reduce_frame(far).unwrap();
        assert_eq!(obs.evaluate(&s, &far), 0.0);
    }

    #[test]
    fn prepared_bump_matches_plain_evaluation_bitwise() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point { re: 0.15, im: 1.1 }, 1.2, 1).unwrap();
        let prep = obs.prepare(&s);
        for frame in s.haar_sample(200, 61) {
            let a = obs.evaluate(&s, &frame);
            let b = prep.evaluate(&frame);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn fiber_mode_averages_to_zero_over_the_fiber() {
        let s = Surface::bolza();
        let p = MagneticParams::new(2.0, 1.0).unwrap();
        let obs = BumpObservable::new(&s, Point::I, 1.2, 1).unwrap();
        let state = PhaseState::new(&s, s.haar_sample(1, 71)[0], p).unwrap();
        let n = 512;
        let mean: f64 = (0..n)
            .map(|i| {
                let theta = (i as f64 + 0.5) * std::f64::consts::TAU / n as f64;
                obs.evaluate(&s, fiber_rotation(&state, theta).frame())
            })
            .sum::<f64>()
            / n as f64;
        assert!(mean.abs() <= 1e-3, "fiber average {mean}");
    }

    #[test]
    fn gamma_invariance_under_generators() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point { re: -0.2, im: 0.9 }, 1.3, 2).unwrap();
        for frame in s.haar_sample(40, 73) {
            let v = obs.evaluate(&s, &frame);
            for g in s.group().generators() {
                let (translated, _) = s.reduce_frame(*g * frame).unwrap();
                let w = obs.evaluate(&s, &translated);
                assert!((v - w).abs() <= 1e-12, "invariance gap {}", (v - w).abs());
            }
        }
    }

    #[test]
    fn liouville_average_of_constant_is_exact() {
        let s = Surface::bolza();
        let one = |_: &Surface, _: &GroupElement| 1.0;
        let (mean, stderr) = liouville_average(&s, &one, 1000, 5).unwrap();
        assert_eq!(mean, 1.0);
        assert_eq!(stderr, 0.0);
    }

    #[test]
    fn liouville_average_rejects_small_samples() {
        let s = Surface::bolza();
        let one = |_: &Surface, _: &GroupElement| 1.0;
        assert!(liouville_average(&s, &one, 99, 5).is_err());
    }

    #[test]
    fn fiber_modes_have_vanishing_average() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point::I, 1.2, 1).unwrap();
        let (mean, stderr) = liouville_average(&s, &obs.prepare(&s), 40_000, 13).unwrap();
        assert!(mean.abs() <= 3.0 * stderr.max(1e-4), "mean {mean}, stderr {stderr}");
    }

    #[test]
    fn base_bump_average_matches_simpson_quadrature() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point::I, 1.2, 0).unwrap();
        let oracle = bump_liouville_quadrature(1.2, 400);
        // frozen from the quadrature oracle; the integral (1/2)∫ bump sinh
        assert_close(oracle, 0.15468911415354487, 1e-12, "frozen quadrature value");
        let (mean, stderr) = liouville_average(&s, &obs.prepare(&s), 200_000, 99).unwrap();
        assert!(
            (mean - oracle).abs() <= 3.0 * stderr,
            "mean {mean} vs quadrature {oracle} (stderr {stderr})"
        );
    }

    #[test]
    fn enlarging_radius_increases_the_average() {
        let s = Surface::bolza();
        let mut prev = 0.0;
        for &r0 in &[0.6, 0.9, 1.2, 1.4] {
            let obs = BumpObservable::new(&s, Point::I, r0, 0).unwrap();
            let (mean, _) = liouville_average(&s, &obs.prepare(&s), 50_000, 7).unwrap();
            assert!(mean > prev, "not monotone at r0 = {r0}");
            prev = mean;
        }
    }

    #[test]
    fn average_is_reproducible_and_layout_independent() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point::I, 1.0, 0).unwrap();
        let prep = obs.prepare(&s);
        let a = liouville_average(&s, &prep, 30_000, 321).unwrap();
        let b = liouville_average(&s, &prep, 30_000, 321).unwrap();
        assert_eq!(a.0.to_bits(), b.0.to_bits());
        assert_eq!(a.1.to_bits(), b.1.to_bits());
        let c = exec::with_workers(Some(1), || liouville_average(&s, &prep, 30_000, 321).unwrap());
        let d = exec::with_workers(Some(7), || liouville_average(&s, &prep, 30_000, 321).unwrap());
        assert_eq!(c.0.to_bits(), d.0.to_bits());
        assert_eq!(a.0.to_bits(), c.0.to_bits());
    }

    #[test]
    fn observable_json_round_trip() {
        let s = Surface::bolza();
        let obs = BumpObservable::new(&s, Point { re: 0.1, im: 1.2 }, 1.1, 3).unwrap();
        let json = serde_json::to_string(&obs).unwrap();
        assert!(json.contains("center_re") && json.contains("fiber_mode"));
        let back: BumpObservable = serde_json::from_str(&json).unwrap();
        assert_eq!(back.center_re.to_bits(), obs.center_re.to_bits());
        assert_eq!(back.r0, obs.r0);
        assert_eq!(back.fiber_mode, obs.fiber_mode);
    }
}
