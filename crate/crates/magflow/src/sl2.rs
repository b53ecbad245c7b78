//! Exact linear algebra on sl(2,R) and PSL(2,R).
//!
//! Everything downstream is built on three ingredients implemented here:
//! the closed-form exponential of a traceless 2x2 matrix, the Möbius action
//! of PSL(2,R) on the upper half-plane, and the conjugation of a traceless
//! matrix into one of the three normal forms (geodesic, rotation, horocyclic)
//! selected by the sign of its determinant.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Determinants smaller than this in absolute value are routed to the
/// nilpotent (parabolic) branch: below it the cos/cosh closed forms lose a
/// digit while the expansion `I + tY` is exact.
pub const PARABOLIC_DET_EPS: f64 = 1e-14;

/// Leading-entry threshold for the canonical sign representative in PSL.
const SIGN_EPS: f64 = 1e-9;

/// Determinant drift above which a group element is rescaled by 1/sqrt(det).
const DET_DRIFT_EPS: f64 = 1e-14;

// ---------------------------------------------------------------------------
// Upper half-plane points
// ---------------------------------------------------------------------------

/// A point of the upper half-plane, stored as a plain (re, im) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub re: f64,
    pub im: f64,
}

impl Point {
    /// The base point i, center of the Dirichlet domain used everywhere.
    pub const I: Point = Point { re: 0.0, im: 1.0 };

    pub fn new(re: f64, im: f64) -> Result<Point> {
        if !(im > 0.0) || !im.is_finite() || !re.is_finite() {
            return Err(Error::NotInUpperHalfPlane { im });
        }
        Ok(Point { re, im })
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}i", self.re, self.im)
    }
}

/// cosh of the hyperbolic distance; cheaper than the distance itself and
/// monotone in it, so all comparisons are done in this coordinate.
#[inline]
pub(crate) fn cosh_distance(z: Point, w: Point) -> f64 {
    let dx = z.re - w.re;
    let dy = z.im - w.im;
    1.0 + (dx * dx + dy * dy) / (2.0 * z.im * w.im)
}

/// Hyperbolic distance on the upper half-plane,
/// arccosh(1 + |z-w|^2 / (2 Im z Im w)).
pub fn hyp_distance(z: Point, w: Point) -> f64 {
    debug_assert!(z.im > 0.0 && w.im > 0.0);
    cosh_distance(z, w).acosh()
}

// ---------------------------------------------------------------------------
// Trichotomy classes
// ---------------------------------------------------------------------------

/// Conjugacy class of a traceless matrix, following the sign of its
/// determinant: positive is elliptic, negative hyperbolic, zero parabolic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ElementClass {
    Elliptic,
    Parabolic,
    Hyperbolic,
    /// Reserved for the zero element.
    Identity,
}

impl fmt::Display for ElementClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ElementClass::Elliptic => "elliptic",
            ElementClass::Parabolic => "parabolic",
            ElementClass::Hyperbolic => "hyperbolic",
            ElementClass::Identity => "identity",
        };
        f.write_str(s)
    }
}

// ---------------------------------------------------------------------------
// sl(2,R)
// ---------------------------------------------------------------------------

/// A traceless 2x2 real matrix `[[a11, a12], [a21, -a11]]`.
///
/// The (2,2) entry is `-a11` by construction, so the trace-zero invariant is
/// structural and cannot drift.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlgebraElement {
    pub a11: f64,
    pub a12: f64,
    pub a21: f64,
}

impl AlgebraElement {
    pub const ZERO: Self = Self { a11: 0.0, a12: 0.0, a21: 0.0 };

    /// Generator of the geodesic flow, diag(1/2, -1/2).
    pub const GEODESIC: Self = Self { a11: 0.5, a12: 0.0, a21: 0.0 };

    /// Generator of the fiber rotation flow, [[0, 1/2], [-1/2, 0]].
    pub const ROTATION: Self = Self { a11: 0.0, a12: 0.5, a21: -0.5 };

    /// Generator of the stable horocyclic flow, [[0, 1], [0, 0]].
    pub const HOROCYCLIC: Self = Self { a11: 0.0, a12: 1.0, a21: 0.0 };

    pub fn new(a11: f64, a12: f64, a21: f64) -> Self {
        Self { a11, a12, a21 }
    }

    #[inline]
    pub fn a22(&self) -> f64 {
        -self.a11
    }

    /// Exact 2x2 determinant, `-a11^2 - a12*a21`.
    #[inline]
    pub fn det(&self) -> f64 {
        -self.a11 * self.a11 - self.a12 * self.a21
    }

    pub fn norm_inf(&self) -> f64 {
        self.a11.abs().max(self.a12.abs()).max(self.a21.abs())
    }

    pub fn is_zero(&self) -> bool {
        self.a11 == 0.0 && self.a12 == 0.0 && self.a21 == 0.0
    }

    /// Trichotomy by determinant sign; the zero element is `Identity`.
    pub fn classify(&self) -> ElementClass {
        if self.is_zero() {
            return ElementClass::Identity;
        }
        let d = self.det();
        if d > PARABOLIC_DET_EPS {
            ElementClass::Elliptic
        } else if d < -PARABOLIC_DET_EPS {
            ElementClass::Hyperbolic
        } else {
            ElementClass::Parabolic
        }
    }

    /// Closed-form exponential `exp(t Y)` in SL(2,R).
    ///
    /// With d = det(Y): for d < 0 the result is
    /// cosh(rt) I + sinh(rt)/r Y with r = sqrt(-d); for d > 0 it is
    /// cos(wt) I + sin(wt)/w Y with w = sqrt(d); in the nilpotent band
    /// |d| < 1e-14 the series terminates and the result is I + t Y.
    pub fn exp(&self, t: f64) -> GroupElement {
        let d = self.det();
        let (c, s) = if d > PARABOLIC_DET_EPS {
            let w = d.sqrt();
            ((w * t).cos(), (w * t).sin() / w)
        } else if d < -PARABOLIC_DET_EPS {
            let r = (-d).sqrt();
            ((r * t).cosh(), (r * t).sinh() / r)
        } else {
            (1.0, t)
        };
        GroupElement {
            m11: c + s * self.a11,
            m12: s * self.a12,
            m21: s * self.a21,
            m22: c - s * self.a11,
        }
    }
}

impl Add for AlgebraElement {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.a11 + rhs.a11, self.a12 + rhs.a12, self.a21 + rhs.a21)
    }
}

impl Sub for AlgebraElement {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.a11 - rhs.a11, self.a12 - rhs.a12, self.a21 - rhs.a21)
    }
}

impl Neg for AlgebraElement {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.a11, -self.a12, -self.a21)
    }
}

impl Mul<AlgebraElement> for f64 {
    type Output = AlgebraElement;
    fn mul(self, rhs: AlgebraElement) -> AlgebraElement {
        AlgebraElement::new(self * rhs.a11, self * rhs.a12, self * rhs.a21)
    }
}

// ---------------------------------------------------------------------------
// PSL(2,R)
// ---------------------------------------------------------------------------

/// A unit-determinant 2x2 real matrix, understood modulo sign.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GroupElement {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

impl GroupElement {
    pub const IDENTITY: Self = Self { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    #[inline]
    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    #[inline]
    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    /// Adjugate inverse; exact for unit determinant and, unlike a numerical
    /// inverse, immune to the catastrophic cancellation of `det` for
    /// large-entry elements.
    #[inline]
    pub fn inverse(&self) -> Self {
        Self { m11: self.m22, m12: -self.m12, m21: -self.m21, m22: self.m11 }
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m21.abs()).max(self.m22.abs())
    }

    /// Rescale by 1/sqrt(det) when the determinant has drifted. Only applied
    /// in the frame regime (moderate entries) where the computed determinant
    /// is trustworthy; never re-orthogonalized.
    pub fn renormalized(self) -> Self {
        let d = self.det();
        if (d - 1.0).abs() > DET_DRIFT_EPS && d > 0.25 && d < 4.0 && self.max_abs() < 1e6 {
            let inv = 1.0 / d.sqrt();
            Self {
                m11: self.m11 * inv,
                m12: self.m12 * inv,
                m21: self.m21 * inv,
                m22: self.m22 * inv,
            }
        } else {
            self
        }
    }

    /// Möbius action without the half-plane check; callers guarantee im > 0.
    #[inline]
    pub(crate) fn apply(&self, z: Point) -> Point {
        let cx = self.m21 * z.re + self.m22;
        let cy = self.m21 * z.im;
        let inv_norm = 1.0 / (cx * cx + cy * cy);
        let ax = self.m11 * z.re + self.m12;
        let ay = self.m11 * z.im;
        Point {
            re: (ax * cx + ay * cy) * inv_norm,
            im: (ay * cx - ax * cy) * inv_norm,
        }
    }

    /// Canonical sign representative: the first of (m11, m12, m21) with
    /// absolute value above 1e-9 is made positive (m22 as a last resort).
    pub fn canonical(self) -> Self {
        let lead = if self.m11.abs() > SIGN_EPS {
            self.m11
        } else if self.m12.abs() > SIGN_EPS {
            self.m12
        } else if self.m21.abs() > SIGN_EPS {
            self.m21
        } else {
            self.m22
        };
        if lead < 0.0 {
            Self { m11: -self.m11, m12: -self.m12, m21: -self.m21, m22: -self.m22 }
        } else {
            self
        }
    }

    /// Entrywise max-norm distance in PSL, i.e. min over the sign choice.
    pub fn proj_dist(&self, other: &Self) -> f64 {
        let plus = (self.m11 - other.m11)
            .abs()
            .max((self.m12 - other.m12).abs())
            .max((self.m21 - other.m21).abs())
            .max((self.m22 - other.m22).abs());
        let minus = (self.m11 + other.m11)
            .abs()
            .max((self.m12 + other.m12).abs())
            .max((self.m21 + other.m21).abs())
            .max((self.m22 + other.m22).abs());
        plus.min(minus)
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.proj_dist(&Self::IDENTITY) <= tol
    }

    /// Angle of the frame direction against the upward vertical at the base
    /// point. Convention (fixed once): a frame g maps the upward unit vector
    /// at i to a unit vector at g·i turned by -2·arg(m21·i + m22), so the
    /// angle is -2·atan2(m21, m22). Right multiplication by the rotation
    /// exp(theta·V) adds theta.
    pub fn fiber_angle(&self) -> f64 {
        -2.0 * self.m21.atan2(self.m22)
    }
}

impl Mul for GroupElement {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        Self {
            m11: self.m11 * rhs.m11 + self.m12 * rhs.m21,
            m12: self.m11 * rhs.m12 + self.m12 * rhs.m22,
            m21: self.m21 * rhs.m11 + self.m22 * rhs.m21,
            m22: self.m21 * rhs.m12 + self.m22 * rhs.m22,
        }
    }
}

/// Möbius action of g on the upper half-plane; rejects points with im <= 0.
pub fn mobius(g: &GroupElement, z: Point) -> Result<Point> {
    if !(z.im > 0.0) {
        return Err(Error::NotInUpperHalfPlane { im: z.im });
    }
    Ok(g.apply(z))
}

// ---------------------------------------------------------------------------
// Adjoint action
// ---------------------------------------------------------------------------

/// g W g^{-1} as an algebra element; the trace is re-symmetrized to keep the
/// invariant structural under rounding.
fn conjugate_algebra(g: &GroupElement, w: &AlgebraElement) -> AlgebraElement {
    let gi = g.inverse();
    // t = g * W
    let t11 = g.m11 * w.a11 + g.m12 * w.a21;
    let t12 = g.m11 * w.a12 - g.m12 * w.a11;
    let t21 = g.m21 * w.a11 + g.m22 * w.a21;
    let t22 = g.m21 * w.a12 - g.m22 * w.a11;
    // b = t * g^{-1}
    let b11 = t11 * gi.m11 + t12 * gi.m21;
    let b12 = t11 * gi.m12 + t12 * gi.m22;
    let b21 = t21 * gi.m11 + t22 * gi.m21;
    let b22 = t21 * gi.m12 + t22 * gi.m22;
    AlgebraElement::new(0.5 * (b11 - b22), b12, b21)
}

/// Matrix of the conjugation Y -> g Y g^{-1} in the ordered basis
/// (GEODESIC, ROTATION, HOROCYCLIC). A traceless [[a, b], [c, -a]] has
/// coordinates (2a, -2c, b + c) in this basis.
pub fn adjoint_matrix(g: &GroupElement) -> [[f64; 3]; 3] {
    let basis = [
        AlgebraElement::GEODESIC,
        AlgebraElement::ROTATION,
        AlgebraElement::HOROCYCLIC,
    ];
    let mut m = [[0.0; 3]; 3];
    for (col, w) in basis.iter().enumerate() {
        let c = conjugate_algebra(g, w);
        m[0][col] = 2.0 * c.a11;
        m[1][col] = -2.0 * c.a21;
        m[2][col] = c.a12 + c.a21;
    }
    m
}

/// Operator (spectral) norm of the adjoint action of g; equals 1 at the
/// identity and measures the maximal expansion rate of differentials.
pub fn adjoint_norm(g: &GroupElement) -> f64 {
    let m = adjoint_matrix(g);
    // Normalize first so that M^T M does not overflow for large elements.
    let mut scale: f64 = 0.0;
    for row in &m {
        for v in row {
            scale = scale.max(v.abs());
        }
    }
    if scale == 0.0 {
        return 0.0;
    }
    let inv = 1.0 / scale;
    let mut s = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut acc = 0.0;
            for k in 0..3 {
                acc += (m[k][i] * inv) * (m[k][j] * inv);
            }
            s[i][j] = acc;
        }
    }
    scale * sym3_max_eigenvalue(&s).max(0.0).sqrt()
}

/// Largest eigenvalue of a symmetric 3x3 matrix by the trigonometric
/// closed form (no iteration, deterministic to rounding).
fn sym3_max_eigenvalue(s: &[[f64; 3]; 3]) -> f64 {
    let p1 = s[0][1] * s[0][1] + s[0][2] * s[0][2] + s[1][2] * s[1][2];
    let tr = s[0][0] + s[1][1] + s[2][2];
    if p1 == 0.0 {
        return s[0][0].max(s[1][1]).max(s[2][2]);
    }
    let q = tr / 3.0;
    let p2 = (s[0][0] - q).powi(2) + (s[1][1] - q).powi(2) + (s[2][2] - q).powi(2) + 2.0 * p1;
    let p = (p2 / 6.0).sqrt();
    let mut b = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            b[i][j] = (s[i][j] - if i == j { q } else { 0.0 }) / p;
        }
    }
    let detb = b[0][0] * (b[1][1] * b[2][2] - b[1][2] * b[2][1])
        - b[0][1] * (b[1][0] * b[2][2] - b[1][2] * b[2][0])
        + b[0][2] * (b[1][0] * b[2][1] - b[1][1] * b[2][0]);
    let r = (detb / 2.0).clamp(-1.0, 1.0);
    let phi = r.acos() / 3.0;
    q + 2.0 * p * phi.cos()
}

// ---------------------------------------------------------------------------
// Normal forms
// ---------------------------------------------------------------------------

/// Result of conjugating an algebra element to its normal form:
/// `conjugator · Y · conjugator^{-1} = scale · N` with N one of GEODESIC
/// (hyperbolic), ROTATION (elliptic) or HOROCYCLIC (parabolic, scale ±1).
#[derive(Debug, Clone, Copy)]
pub struct NormalForm {
    pub class: ElementClass,
    pub conjugator: GroupElement,
    pub scale: f64,
}

impl NormalForm {
    pub fn normal_generator(&self) -> AlgebraElement {
        let base = match self.class {
            ElementClass::Hyperbolic => AlgebraElement::GEODESIC,
            ElementClass::Elliptic => AlgebraElement::ROTATION,
            _ => AlgebraElement::HOROCYCLIC,
        };
        self.scale * base
    }
}

/// Conjugate Y into s·GEODESIC, s·ROTATION or ±HOROCYCLIC according to the
/// determinant trichotomy. Near-degenerate |det Y| < 1e-14 is routed to the
/// parabolic branch; the zero element is rejected.
pub fn normal_form(y: &AlgebraElement) -> Result<NormalForm> {
    if y.is_zero() {
        return Err(Error::ZeroAlgebraElement);
    }
    let d = y.det();
    if d < -PARABOLIC_DET_EPS {
        Ok(hyperbolic_form(y, (-d).sqrt()))
    } else if d > PARABOLIC_DET_EPS {
        Ok(elliptic_form(y, d.sqrt()))
    } else {
        Ok(parabolic_form(y))
    }
}

fn column_stack_inverse(v: (f64, f64), w: (f64, f64)) -> GroupElement {
    // inverse of the det-1 matrix [v | w]
    GroupElement { m11: w.1, m12: -w.0, m21: -v.1, m22: v.0 }
}

fn hyperbolic_form(y: &AlgebraElement, rho: f64) -> NormalForm {
    let (a, b, c) = (y.a11, y.a12, y.a21);
    // Two algebraically equivalent eigenvector candidates; keep the larger.
    let eigvec = |lam: f64| -> (f64, f64) {
        let v1 = (b, lam - a);
        let v2 = (lam + a, c);
        if v1.0 * v1.0 + v1.1 * v1.1 >= v2.0 * v2.0 + v2.1 * v2.1 {
            v1
        } else {
            v2
        }
    };
    let vp = eigvec(rho);
    let mut vm = eigvec(-rho);
    let mut dp = vp.0 * vm.1 - vp.1 * vm.0;
    if dp < 0.0 {
        vm = (-vm.0, -vm.1);
        dp = -dp;
    }
    let inv = 1.0 / dp.sqrt();
    let conjugator = column_stack_inverse((vp.0 * inv, vp.1 * inv), (vm.0 * inv, vm.1 * inv));
    NormalForm { class: ElementClass::Hyperbolic, conjugator, scale: 2.0 * rho }
}

fn elliptic_form(y: &AlgebraElement, _omega: f64) -> NormalForm {
    let (a, b, c) = (y.a11, y.a12, y.a21);
    // The positive-definite form G = sign(c)·[[c, -a], [-a, -b]] satisfies
    // (GY)^T = -GY, so in G-orthonormal coordinates Y is a pure rotation
    // generator. C is the Cholesky transpose of G, normalized to det 1.
    let sg = if c > 0.0 { 1.0 } else { -1.0 };
    let p = sg * c;
    let q = -sg * a;
    let r = -sg * b;
    let sp = p.sqrt();
    let l21 = q / sp;
    let l22 = (r - q * q / p).sqrt();
    let dl = (sp * l22).sqrt(); // sqrt(det L) = det(Y)^{1/4}
    let conjugator = GroupElement {
        m11: sp / dl,
        m12: l21 / dl,
        m21: 0.0,
        m22: l22 / dl,
    };
    let n = conjugate_algebra(&conjugator, y);
    NormalForm { class: ElementClass::Elliptic, conjugator, scale: 2.0 * n.a12 }
}

fn parabolic_form(y: &AlgebraElement) -> NormalForm {
    let (a, b, c) = (y.a11, y.a12, y.a21);
    // Pick w outside the kernel (larger image column); u = Yw spans the
    // kernel, and in the basis (u, ±w) the element becomes ±HOROCYCLIC.
    let col1 = (a, c);
    let col2 = (b, -a);
    let (w, u) = if col1.0 * col1.0 + col1.1 * col1.1 >= col2.0 * col2.0 + col2.1 * col2.1 {
        ((1.0, 0.0), col1)
    } else {
        ((0.0, 1.0), col2)
    };
    let delta = u.0 * w.1 - u.1 * w.0;
    let s = if delta > 0.0 { 1.0 } else { -1.0 };
    let inv = 1.0 / delta.abs().sqrt();
    let conjugator =
        column_stack_inverse((u.0 * inv, u.1 * inv), (s * w.0 * inv, s * w.1 * inv));
    NormalForm { class: ElementClass::Parabolic, conjugator, scale: s }
}
