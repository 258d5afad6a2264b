//! Piola stresses as exact total derivatives of ψ along the constrained paths.
//!
//! `P11 = dψ/dλ`, `P22 = dψ/dα` (both at `α = 1`, `γ = 0`) and `P12 = dψ/dγ`
//! on the pre-stretched shear path. Each is the chain rule through
//! `(Ī1, Ī2, J)` plus the principal-stretch route `Σ f'(λ_j) dλ_j`.

use crate::energy::{partials_at, unit_term, ModelSpec, Partials, StateInputs, TermId};
use crate::error::Result;
use crate::kinematics::{tangent, DeformationState, Direction, LoadingMode, PathTangent};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StressResult {
    pub p11: f64,
    pub p22: f64,
    pub p12: f64,
}

fn contract(p: &Partials, t: &PathTangent) -> f64 {
    p.d_i1_bar * t.d_i1_bar
        + p.d_i2_bar * t.d_i2_bar
        + p.d_j * t.d_j
        + p.d_stretch
            .iter()
            .zip(t.d_stretch)
            .map(|(a, b)| a * b)
            .sum::<f64>()
}

/// `dψ/d(dir)` at an arbitrary state.
pub fn stress_along(model: &ModelSpec, state: &DeformationState, dir: Direction) -> Result<f64> {
    let inputs = StateInputs::at(state)?;
    let p = partials_at(model, &inputs)?;
    Ok(contract(&p, &tangent(state, dir)?))
}

/// `(P11, P22)` in uniaxial tension or compression with `α = 1`.
pub fn uniaxial_stress(model: &ModelSpec, lambda: f64) -> Result<(f64, f64)> {
    let state = DeformationState::uniaxial(lambda)?;
    let inputs = StateInputs::at(&state)?;
    let p = partials_at(model, &inputs)?;
    let p11 = contract(&p, &tangent(&state, Direction::Lambda)?);
    let p22 = contract(&p, &tangent(&state, Direction::Alpha)?);
    Ok((p11, p22))
}

/// `P12` in simple shear on top of the axial pre-stretch `prestretch`.
pub fn shear_stress(model: &ModelSpec, gamma: f64, prestretch: f64) -> Result<f64> {
    let state = DeformationState::shear(gamma, prestretch)?;
    stress_along(model, &state, Direction::Gamma)
}

/// Stress components relevant to the state's mode; the others stay zero.
pub fn stress(model: &ModelSpec, state: &DeformationState) -> Result<StressResult> {
    let inputs = StateInputs::at(state)?;
    let p = partials_at(model, &inputs)?;
    let mut out = StressResult::default();
    match state.mode {
        LoadingMode::UniaxialTension | LoadingMode::UniaxialCompression => {
            out.p11 = contract(&p, &tangent(state, Direction::Lambda)?);
            out.p22 = contract(&p, &tangent(state, Direction::Alpha)?);
        }
        LoadingMode::SimpleShear => {
            out.p12 = contract(&p, &tangent(state, Direction::Gamma)?);
        }
    }
    Ok(out)
}

/// `|P11| + |P22| + |P12|` in the undeformed configuration.
pub fn zero_stress_residual(model: &ModelSpec) -> Result<f64> {
    let id = DeformationState::identity();
    let inputs = StateInputs::at(&id)?;
    let p = partials_at(model, &inputs)?;
    let mut total = 0.0;
    for dir in [Direction::Lambda, Direction::Alpha, Direction::Gamma] {
        total += contract(&p, &tangent(&id, dir)?).abs();
    }
    Ok(total)
}

/// Stress contribution of each active term, for plotting decompositions.
pub fn term_contributions(
    model: &ModelSpec,
    state: &DeformationState,
    dir: Direction,
) -> Result<Vec<(TermId, f64)>> {
    let inputs = StateInputs::at(state)?;
    let t = tangent(state, dir)?;
    model
        .terms
        .iter()
        .map(|term| {
            let u = unit_term(term.id, term.inner(), &inputs.inv, &inputs.ps)?;
            Ok((term.id, term.w * contract(&u.value, &t)))
        })
        .collect()
}

/// Stress of a single term at unit outer weight along a path, and its
/// derivative with respect to the inner weight. Used by the trainer.
pub(crate) fn unit_stress(
    id: TermId,
    w_star: f64,
    inputs: &StateInputs,
    t: &PathTangent,
) -> Result<(f64, f64)> {
    let u = unit_term(id, w_star, &inputs.inv, &inputs.ps)?;
    Ok((contract(&u.value, t), contract(&u.d_inner, t)))
}
