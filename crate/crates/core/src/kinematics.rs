//! Constrained kinematics for uniaxial tension, uniaxial compression and
//! simple shear.
//!
//! Every loading mode is described by the deformation gradient
//!
//! ```text
//!     [ λ  γ  0 ]
//! F = [ 0  α  0 ]
//!     [ 0  0  1 ]
//! ```
//!
//! with axial stretch `λ`, transverse stretch `α` and shear strain `γ`. The
//! transverse stretch is pinned to one for all fitting work (the foams show a
//! vanishing effective Poisson's ratio), but it stays a free parameter here so
//! that the transverse stress can be obtained as a derivative with respect to
//! `α`.
//!
//! Everything is closed form. The in-plane singular values of `F` come from the
//! 2×2 block `[[λ, γ], [0, α]]`; the out-of-plane stretch is always one.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Loading mode of a test or of a model evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LoadingMode {
    UniaxialTension,
    UniaxialCompression,
    SimpleShear,
}

impl LoadingMode {
    pub const ALL: [LoadingMode; 3] = [
        LoadingMode::UniaxialTension,
        LoadingMode::UniaxialCompression,
        LoadingMode::SimpleShear,
    ];

    /// Short tag used in file names, CSV columns and R² maps.
    pub fn tag(self) -> &'static str {
        match self {
            LoadingMode::UniaxialTension => "ten",
            LoadingMode::UniaxialCompression => "com",
            LoadingMode::SimpleShear => "shr",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LoadingMode::UniaxialTension => "tension",
            LoadingMode::UniaxialCompression => "compression",
            LoadingMode::SimpleShear => "shear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tension" | "ten" => Some(LoadingMode::UniaxialTension),
            "compression" | "com" => Some(LoadingMode::UniaxialCompression),
            "shear" | "shr" => Some(LoadingMode::SimpleShear),
            _ => None,
        }
    }

    pub fn is_uniaxial(self) -> bool {
        !matches!(self, LoadingMode::SimpleShear)
    }
}

impl std::fmt::Display for LoadingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Pre-compression applied before shearing in the rheometer.
pub const SHEAR_PRESTRETCH: f64 = 0.8;

/// Point on one of the constrained deformation paths.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationState {
    pub mode: LoadingMode,
    pub lambda: f64,
    pub alpha: f64,
    pub gamma: f64,
}

impl DeformationState {
    /// General constructor. Only checks that the stretches are positive and
    /// everything is finite; the mode-specific ranges are enforced by
    /// [`tension`](Self::tension), [`compression`](Self::compression) and
    /// [`shear`](Self::shear).
    pub fn new(mode: LoadingMode, lambda: f64, alpha: f64, gamma: f64) -> Result<Self> {
        let state = DeformationState {
            mode,
            lambda,
            alpha,
            gamma,
        };
        state.check()?;
        Ok(state)
    }

    pub fn identity() -> Self {
        DeformationState {
            mode: LoadingMode::UniaxialTension,
            lambda: 1.0,
            alpha: 1.0,
            gamma: 0.0,
        }
    }

    pub fn tension(lambda: f64) -> Result<Self> {
        if !(lambda >= 1.0) {
            return Err(Error::domain(format!(
                "tension requires lambda >= 1, got {lambda}"
            )));
        }
        Self::new(LoadingMode::UniaxialTension, lambda, 1.0, 0.0)
    }

    pub fn compression(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(Error::domain(format!(
                "compression requires 0 < lambda <= 1, got {lambda}"
            )));
        }
        Self::new(LoadingMode::UniaxialCompression, lambda, 1.0, 0.0)
    }

    /// Simple shear `γ` on top of an axial pre-stretch.
    pub fn shear(gamma: f64, prestretch: f64) -> Result<Self> {
        Self::new(LoadingMode::SimpleShear, prestretch, 1.0, gamma)
    }

    /// Uniaxial state of either sign: tension for `λ >= 1`, compression otherwise.
    pub fn uniaxial(lambda: f64) -> Result<Self> {
        let mode = if lambda >= 1.0 {
            LoadingMode::UniaxialTension
        } else {
            LoadingMode::UniaxialCompression
        };
        Self::new(mode, lambda, 1.0, 0.0)
    }

    fn check(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.alpha.is_finite() && self.gamma.is_finite()) {
            return Err(Error::domain("non-finite deformation state"));
        }
        if self.lambda <= 0.0 || self.alpha <= 0.0 {
            return Err(Error::domain(format!(
                "stretches must be positive (lambda = {}, alpha = {})",
                self.lambda, self.alpha
            )));
        }
        Ok(())
    }

    /// The deformation gradient as a row-major 3×3 array.
    pub fn deformation_gradient(&self) -> [[f64; 3]; 3] {
        [
            [self.lambda, self.gamma, 0.0],
            [0.0, self.alpha, 0.0],
            [0.0, 0.0, 1.0],
        ]
    }
}

/// Cauchy–Green invariants and their isochoric counterparts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InvariantSet {
    pub i1: f64,
    pub i2: f64,
    pub j: f64,
    pub i1_bar: f64,
    pub i2_bar: f64,
}

pub fn invariants(state: &DeformationState) -> Result<InvariantSet> {
    state.check()?;
    let (l2, a2, g2) = (
        state.lambda * state.lambda,
        state.alpha * state.alpha,
        state.gamma * state.gamma,
    );
    let i1 = 1.0 + a2 + l2 + g2;
    let i2 = a2 + g2 + l2 + a2 * l2;
    let j = state.lambda * state.alpha;
    let j23 = j.cbrt() * j.cbrt();
    Ok(InvariantSet {
        i1,
        i2,
        j,
        i1_bar: i1 / j23,
        i2_bar: i2 / (j23 * j23),
    })
}

/// Singular values of `F`.
///
/// `l1 >= l2` is the in-plane pair, `l3 = 1` is the out-of-plane stretch.
/// For sheared states the γ-derivatives of the in-plane pair are filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrincipalStretches {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    pub dl1_dgamma: Option<f64>,
    pub dl2_dgamma: Option<f64>,
}

impl PrincipalStretches {
    pub fn values(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn product(&self) -> f64 {
        self.l1 * self.l2 * self.l3
    }
}

/// In-plane quantities shared by the stretch formulas and their derivatives.
struct InPlane {
    /// λ² + α² + γ²
    s: f64,
    /// √(s² − 4λ²α²), evaluated without cancellation.
    root: f64,
    l1: f64,
    l2: f64,
}

fn in_plane(state: &DeformationState) -> Result<InPlane> {
    let (lam, alp, gam) = (state.lambda, state.alpha, state.gamma);
    if gam == 0.0 {
        let (l1, l2) = if lam >= alp { (lam, alp) } else { (alp, lam) };
        return Ok(InPlane {
            s: lam * lam + alp * alp,
            root: l1 * l1 - l2 * l2,
            l1,
            l2,
        });
    }
    let (l2sq, a2sq, g2) = (lam * lam, alp * alp, gam * gam);
    let s = l2sq + a2sq + g2;
    // s² − 4λ²α² expanded into non-negative pieces
    let diff = l2sq - a2sq;
    let disc = diff * diff + 2.0 * g2 * (l2sq + a2sq) + g2 * g2;
    let disc = if disc < 0.0 {
        if disc > -1e-12 {
            0.0
        } else {
            return Err(Error::domain(format!("negative discriminant {disc}")));
        }
    } else {
        disc
    };
    let root = disc.sqrt();
    let l1 = (0.5 * (s + root)).sqrt();
    // product of the in-plane pair is det F
    let l2 = lam * alp / l1;
    Ok(InPlane { s, root, l1, l2 })
}

pub fn principal_stretches(state: &DeformationState) -> Result<PrincipalStretches> {
    state.check()?;
    let p = in_plane(state)?;
    let (d1, d2) = if state.mode == LoadingMode::SimpleShear || state.gamma != 0.0 {
        let (a, b) = gamma_derivatives(state, &p);
        (Some(a), Some(b))
    } else {
        (None, None)
    };
    Ok(PrincipalStretches {
        l1: p.l1,
        l2: p.l2,
        l3: 1.0,
        dl1_dgamma: d1,
        dl2_dgamma: d2,
    })
}

fn gamma_derivatives(state: &DeformationState, p: &InPlane) -> (f64, f64) {
    if p.root == 0.0 {
        // λ = α and γ = 0: the pair splits as λ ± γ/2 to first order
        return (0.5, -0.5);
    }
    let g = state.gamma;
    (g * p.l1 / p.root, -g * p.l2 / p.root)
}

/// Direction of differentiation along the constrained kinematics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// ∂/∂λ, giving P11.
    Lambda,
    /// ∂/∂α, giving P22.
    Alpha,
    /// ∂/∂γ, giving P12.
    Gamma,
}

/// Derivatives of the energy inputs with respect to one kinematic parameter.
///
/// `d_stretch` is aligned with [`PrincipalStretches::values`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathTangent {
    pub d_i1_bar: f64,
    pub d_i2_bar: f64,
    pub d_j: f64,
    pub d_stretch: [f64; 3],
}

/// Exact derivatives of `(Ī1, Ī2, J, λ1, λ2, λ3)` with respect to `dir`.
pub fn tangent(state: &DeformationState, dir: Direction) -> Result<PathTangent> {
    let inv = invariants(state)?;
    let (lam, alp, gam) = (state.lambda, state.alpha, state.gamma);
    let (di1, di2, dj) = match dir {
        Direction::Lambda => (2.0 * lam, 2.0 * lam + 2.0 * alp * alp * lam, alp),
        Direction::Alpha => (2.0 * alp, 2.0 * alp + 2.0 * alp * lam * lam, lam),
        Direction::Gamma => (2.0 * gam, 2.0 * gam, 0.0),
    };
    let j = inv.j;
    let j23 = j.cbrt() * j.cbrt();
    let d_i1_bar = (di1 - 2.0 / 3.0 * inv.i1 / j * dj) / j23;
    let d_i2_bar = (di2 - 4.0 / 3.0 * inv.i2 / j * dj) / (j23 * j23);

    let p = in_plane(state)?;
    let d_pair = if gam == 0.0 {
        match dir {
            Direction::Gamma => gamma_derivatives(state, &p),
            Direction::Lambda | Direction::Alpha => {
                let moving = if dir == Direction::Lambda { lam } else { alp };
                let other = if dir == Direction::Lambda { alp } else { lam };
                if moving > other {
                    (1.0, 0.0)
                } else if moving < other {
                    (0.0, 1.0)
                } else {
                    // coincident pair: the derivative of the pair as a set is
                    // {1, 0}; the energy is symmetric so either labelling works
                    (1.0, 0.0)
                }
            }
        }
    } else {
        match dir {
            Direction::Gamma => gamma_derivatives(state, &p),
            Direction::Lambda | Direction::Alpha => {
                let (x, y) = if dir == Direction::Lambda {
                    (lam, alp)
                } else {
                    (alp, lam)
                };
                // d(λ1²)/dx = ½(s' + D'/(2√D)) with s' = 2x, D' = 2s·2x − 8x y²
                let ds = 2.0 * x;
                let d_disc = 2.0 * p.s * ds - 8.0 * x * y * y;
                let dl1sq = 0.5 * (ds + d_disc / (2.0 * p.root));
                let dl1 = dl1sq / (2.0 * p.l1);
                // λ2 = λα/λ1
                let dl2 = (y - p.l2 * dl1) / p.l1;
                (dl1, dl2)
            }
        }
    };
    Ok(PathTangent {
        d_i1_bar,
        d_i2_bar,
        d_j: dj,
        d_stretch: [d_pair.0, d_pair.1, 0.0],
    })
}
