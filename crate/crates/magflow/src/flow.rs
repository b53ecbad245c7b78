//! The magnetic flow on energy shells.
//!
//! The flow on the shell of energy E is realized as right translation by
//! `exp(t(sqrt(2E)·GEODESIC - B·ROTATION))` with the frame pulled back to the
//! fundamental domain after every step. The determinant of the generator,
//! (B^2 - 2E)/4, selects the regime: elliptic below the critical energy
//! E_c = B^2/2, parabolic (horocyclic) at it, hyperbolic (Anosov) above it.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::sl2::{normal_form, AlgebraElement, ElementClass, GroupElement, Point};
use crate::surface::Surface;

/// Magnetic field strength and energy, with the derived critical data.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MagneticParams {
    b: f64,
    e: f64,
    genus: u32,
}

impl MagneticParams {
    pub fn new(b: f64, e: f64) -> Result<Self> {
        Self::with_genus(b, e, 2)
    }

    pub fn with_genus(b: f64, e: f64, genus: u32) -> Result<Self> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::invalid(format!("field strength B must be positive, got {b}")));
        }
        if !(e >= 0.0) || !e.is_finite() {
            return Err(Error::invalid(format!("energy E must be non-negative, got {e}")));
        }
        if genus < 2 {
            return Err(Error::invalid(format!("genus must be >= 2, got {genus}")));
        }
        Ok(Self { b, e, genus })
    }

    pub fn field(&self) -> f64 {
        self.b
    }

    pub fn energy(&self) -> f64 {
        self.e
    }

    pub fn genus(&self) -> u32 {
        self.genus
    }

    /// E_c = B^2 / 2.
    pub fn critical_energy(&self) -> f64 {
        0.5 * self.b * self.b
    }

    /// True iff 2B(genus - 1) is an integer to 1e-12. Classical dynamics is
    /// defined either way; quantized fields are only required on the
    /// spectral side.
    pub fn is_quantized(&self) -> bool {
        let q = 2.0 * self.b * (self.genus - 1) as f64;
        (q - q.round()).abs() <= 1e-12
    }

    /// Flow generator sqrt(2E)·GEODESIC - B·ROTATION, entrywise
    /// [[sqrt(2E)/2, -B/2], [B/2, -sqrt(2E)/2]].
    pub fn generator(&self) -> AlgebraElement {
        let half_speed = (2.0 * self.e).sqrt() / 2.0;
        AlgebraElement::new(half_speed, -self.b / 2.0, self.b / 2.0)
    }

    /// Regime by the determinant trichotomy of the generator.
    pub fn regime(&self) -> ElementClass {
        self.generator().classify()
    }

    /// `|B^2 - 2E|^{-1/2}`; undefined (None) in the parabolic regime.
    pub fn time_scale(&self) -> Option<f64> {
        match self.regime() {
            ElementClass::Parabolic => None,
            _ => Some((self.b * self.b - 2.0 * self.e).abs().sqrt().recip()),
        }
    }

    /// Smallest t* > 0 with exp(t* Y) = ±1 in PSL; closed form pi/omega with
    /// omega = sqrt(det Y), i.e. t* = 2 pi |B^2 - 2E|^{-1/2}. Elliptic only.
    pub fn primitive_period(&self) -> Result<f64> {
        let regime = self.regime();
        if regime != ElementClass::Elliptic {
            return Err(Error::RequiresElliptic { regime });
        }
        let omega = self.generator().det().sqrt();
        let t_star = PI / omega;
        debug_assert!(
            self.generator().exp(t_star).proj_dist(&GroupElement::IDENTITY) <= 1e-10,
            "period verification failed"
        );
        Ok(t_star)
    }

    /// Maximal expansion rate sqrt(2 (E - E_c)_+); zero at and below the
    /// critical energy, 1/T_E above it.
    pub fn lyapunov_rate(&self) -> f64 {
        (2.0 * (self.e - self.critical_energy())).max(0.0).sqrt()
    }
}

/// A point of the energy shell: a reduced frame carrying its parameters.
/// The momentum has magnitude sqrt(2E) along the frame direction.
#[derive(Debug, Clone, Copy)]
pub struct PhaseState {
    frame: GroupElement,
    params: MagneticParams,
}

impl PhaseState {
    /// Wrap a frame, reducing its base point into the fundamental domain.
    pub fn new(surface: &Surface, frame: GroupElement, params: MagneticParams) -> Result<Self> {
        let (frame, _) = surface.reduce_frame(frame)?;
        Ok(Self { frame, params })
    }

    pub fn frame(&self) -> &GroupElement {
        &self.frame
    }

    pub fn params(&self) -> &MagneticParams {
        &self.params
    }

    pub fn base(&self) -> Point {
        self.frame.apply(Point::I)
    }
}

/// Advance a state by time t. Long times are composed from steps of length
/// at most 1 with a Dirichlet reduction after each; the flow itself is the
/// exact matrix exponential, so the only error source is rounding.
pub fn flow(surface: &Surface, state: &PhaseState, t: f64) -> Result<PhaseState> {
    if !t.is_finite() {
        return Err(Error::invalid(format!("flow time must be finite, got {t}")));
    }
    let y = state.params.generator();
    let steps = t.abs().ceil().max(1.0) as u64;
    let step = y.exp(t / steps as f64);
    let mut frame = state.frame;
    for _ in 0..steps {
        frame = surface.reduce_frame(frame * step)?.0;
    }
    Ok(PhaseState { frame, params: state.params })
}

/// Rotate the momentum direction in the fiber; the base point is unchanged
/// and no reduction is needed.
pub fn fiber_rotation(state: &PhaseState, theta: f64) -> PhaseState {
    PhaseState {
        frame: (state.frame * AlgebraElement::ROTATION.exp(theta)).renormalized(),
        params: state.params,
    }
}

/// Empirical growth of the adjoint norm along the flow.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GrowthFit {
    /// Exponential rate of ||Ad(exp tY)||.
    pub rate: f64,
    /// Residual polynomial degree in t once the exponential part is removed.
    pub poly_degree: f64,
}

/// Sample `||Ad(exp(tY))||` on a log grid over [1, t_max] and fit
/// `log ||Ad|| = a + poly_degree·log t + rate·t` on the tail half by least
/// squares. The joint fit removes the exponential part while reading the
/// polynomial degree, which keeps the two regressors from contaminating
/// each other in the parabolic regime.
pub fn derivative_growth_fit(
    params: &MagneticParams,
    t_max: f64,
    n_points: usize,
) -> Result<GrowthFit> {
    if !(t_max >= 10.0) {
        return Err(Error::invalid(format!("t_max must be >= 10, got {t_max}")));
    }
    if n_points < 8 {
        return Err(Error::DegenerateFit(format!(
            "need at least 8 sample points (4 on the tail), got {n_points}"
        )));
    }
    let y = params.generator();
    let t_min = 1.0f64;
    let grid: Vec<f64> = (0..n_points)
        .map(|i| t_min * (t_max / t_min).powf(i as f64 / (n_points - 1) as f64))
        .collect();
    // transient polynomial factors pollute early times; fit the tail half
    let tail = &grid[n_points / 2..];
    let mut m = [[0.0f64; 3]; 3];
    let mut rhs = [0.0f64; 3];
    for &t in tail {
        let v = crate::sl2::adjoint_norm(&y.exp(t)).ln();
        let row = [1.0, t.ln(), t];
        for i in 0..3 {
            for j in 0..3 {
                m[i][j] += row[i] * row[j];
            }
            rhs[i] += row[i] * v;
        }
    }
    let sol = solve3(&m, &rhs)
        .ok_or_else(|| Error::DegenerateFit("singular normal equations".into()))?;
    Ok(GrowthFit { rate: sol[2], poly_degree: sol[1] })
}

fn solve3(m: &[[f64; 3]; 3], b: &[f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    if d.abs() < 1e-12 {
        return None;
    }
    let mut out = [0.0; 3];
    for k in 0..3 {
        let mut mk = *m;
        for row in 0..3 {
            mk[row][k] = b[row];
        }
        out[k] = det(&mk) / d;
    }
    Some(out)
}

/// Verify the conjugacy of the magnetic flow to its normal form: the maximum
/// over a fixed time grid |t| <= 5 of the entrywise gap between
/// `C exp(tY) C^{-1}` and the normal flow, plus `||s| - 1/T_E|` in the
/// non-parabolic regimes.
pub fn conjugacy_check(params: &MagneticParams) -> Result<f64> {
    let y = params.generator();
    let nf = normal_form(&y)?;
    let n = nf.normal_generator();
    let ci = nf.conjugator.inverse();
    let mut residual = 0.0f64;
    for i in 0..=40 {
        let t = -5.0 + 0.25 * i as f64;
        let lhs = nf.conjugator * y.exp(t) * ci;
        residual = residual.max(lhs.proj_dist(&n.exp(t)));
    }
    if let Some(t_scale) = params.time_scale() {
        residual += (nf.scale.abs() - t_scale.recip()).abs();
    }
    Ok(residual)
}
