//! The fourteen-term free-energy library.
//!
//! | id    | form                                  | inner weight |
//! |-------|---------------------------------------|--------------|
//! | 1     | w [Ī1 − 3]                            | –            |
//! | 2     | w [exp(w* [Ī1 − 3]) − 1]              | w*           |
//! | 3     | w [Ī1 − 3]²                           | –            |
//! | 4     | w [exp(w* [Ī1 − 3]²) − 1]             | w*           |
//! | 5–8   | as 1–4 with Ī2                        |              |
//! | 9     | w [J^w* − w* ln J − 1]                | w*           |
//! | 10    | w [exp(w* (ln J)²) − 1]               | w*           |
//! | 11    | w J^w* [Ī1 − 3]                       | w*           |
//! | 12    | w J^w* [Ī2 − 3]                       | w*           |
//! | 13,14 | w Σ_j [λ_j^w* − w* ln λ_j − 1]        | w*           |
//!
//! Every term vanishes together with its first derivatives in the reference
//! configuration (or, for the mixed terms, combines with the isochoric
//! invariants so that the reference stress is zero).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::{
    invariants, principal_stretches, DeformationState, InvariantSet, PrincipalStretches,
};

/// Number of terms in the library.
pub const TERM_COUNT: usize = 14;

/// Identifier of one library term, `1..=14`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct TermId(u8);

impl TermId {
    pub fn new(index: u8) -> Result<Self> {
        if (1..=TERM_COUNT as u8).contains(&index) {
            Ok(TermId(index))
        } else {
            Err(Error::domain(format!("term id {index} outside 1..=14")))
        }
    }

    pub fn all() -> impl Iterator<Item = TermId> {
        (1..=TERM_COUNT as u8).map(TermId)
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based slot for dense weight vectors.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }

    pub fn from_slot(slot: usize) -> Self {
        assert!(slot < TERM_COUNT, "slot {slot} out of range");
        TermId(slot as u8 + 1)
    }

    pub fn family(self) -> TermFamily {
        match self.0 {
            1..=10 => TermFamily::SingleInvariant,
            11 | 12 => TermFamily::MixedInvariant,
            _ => TermFamily::PrincipalStretch,
        }
    }

    /// Terms 1, 3, 5 and 7 have no inner weight.
    pub fn has_inner_weight(self) -> bool {
        !matches!(self.0, 1 | 3 | 5 | 7)
    }

    /// Exponential terms whose outer weight decouples when `w* = 0`.
    pub fn is_exponential(self) -> bool {
        matches!(self.0, 2 | 4 | 6 | 8 | 10)
    }

    /// Symbolic form, `w` and `w*` standing for the weights.
    pub fn form(self) -> &'static str {
        match self.0 {
            1 => "w [I1b - 3]",
            2 => "w [exp(w* [I1b - 3]) - 1]",
            3 => "w [I1b - 3]^2",
            4 => "w [exp(w* [I1b - 3]^2) - 1]",
            5 => "w [I2b - 3]",
            6 => "w [exp(w* [I2b - 3]) - 1]",
            7 => "w [I2b - 3]^2",
            8 => "w [exp(w* [I2b - 3]^2) - 1]",
            9 => "w [J^w* - w* ln(J) - 1]",
            10 => "w [exp(w* ln(J)^2) - 1]",
            11 => "w J^w* [I1b - 3]",
            12 => "w J^w* [I2b - 3]",
            _ => "w sum_i [lambda_i^w* - w* ln(lambda_i) - 1]",
        }
    }

    /// Form with the weights substituted, in the style of a printed model.
    pub fn render(self, w: f64, w_star: f64) -> String {
        let a = w_star;
        let body = match self.0 {
            1 => "[I1b - 3]".to_string(),
            2 => format!("[exp({a} [I1b - 3]) - 1]"),
            3 => "[I1b - 3]^2".to_string(),
            4 => format!("[exp({a} [I1b - 3]^2) - 1]"),
            5 => "[I2b - 3]".to_string(),
            6 => format!("[exp({a} [I2b - 3]) - 1]"),
            7 => "[I2b - 3]^2".to_string(),
            8 => format!("[exp({a} [I2b - 3]^2) - 1]"),
            9 => format!("[J^{a} - {a} ln(J) - 1]"),
            10 => format!("[exp({a} ln(J)^2) - 1]"),
            11 => format!("J^{a} [I1b - 3]"),
            12 => format!("J^{a} [I2b - 3]"),
            _ => format!("sum_i [lambda_i^{a} - {a} ln(lambda_i) - 1]"),
        };
        format!("{w} kPa {body}")
    }
}

impl TryFrom<u8> for TermId {
    type Error = Error;
    fn try_from(v: u8) -> Result<Self> {
        TermId::new(v)
    }
}

impl From<TermId> for u8 {
    fn from(t: TermId) -> u8 {
        t.0
    }
}

impl std::fmt::Display for TermId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermFamily {
    SingleInvariant,
    MixedInvariant,
    PrincipalStretch,
}

/// One active term with its outer weight `w` (kPa) and inner weight `w*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TermWeights {
    pub id: TermId,
    pub w: f64,
    pub w_star: Option<f64>,
}

impl TermWeights {
    pub fn new(id: TermId, w: f64, w_star: Option<f64>) -> Self {
        TermWeights { id, w, w_star }
    }

    /// Inner weight as used by the formulas (zero when the term has none).
    pub fn inner(&self) -> f64 {
        self.w_star.unwrap_or(0.0)
    }
}

/// A strain-energy model: a list of library terms with their weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ModelSpec {
    pub terms: Vec<TermWeights>,
    pub provenance: String,
}

impl ModelSpec {
    /// Builds a model and checks admissibility: weights finite and
    /// non-negative, ids unique, `w*` present exactly on terms that own one.
    pub fn new(terms: Vec<TermWeights>, provenance: impl Into<String>) -> Result<Self> {
        let model = ModelSpec {
            terms,
            provenance: provenance.into(),
        };
        model.validate()?;
        Ok(model)
    }

    pub fn empty() -> Self {
        ModelSpec::default()
    }

    /// Convenience constructor from `(id, w, w*)` triples; `w*` is ignored for
    /// terms without an inner weight.
    pub fn from_triples(triples: &[(u8, f64, f64)], provenance: &str) -> Result<Self> {
        let terms = triples
            .iter()
            .map(|&(id, w, ws)| {
                let id = TermId::new(id)?;
                let w_star = id.has_inner_weight().then_some(ws);
                Ok(TermWeights::new(id, w, w_star))
            })
            .collect::<Result<Vec<_>>>()?;
        ModelSpec::new(terms, provenance)
    }

    /// Dense representation: `(w, w*)` indexed by slot, zero for absent terms.
    pub fn from_dense(
        w: &[f64; TERM_COUNT],
        w_star: &[f64; TERM_COUNT],
        provenance: &str,
    ) -> Result<Self> {
        let terms = TermId::all()
            .filter(|id| w[id.slot()] != 0.0)
            .map(|id| {
                let ws = id.has_inner_weight().then_some(w_star[id.slot()]);
                TermWeights::new(id, w[id.slot()], ws)
            })
            .collect();
        ModelSpec::new(terms, provenance)
    }

    pub fn dense(&self) -> ([f64; TERM_COUNT], [f64; TERM_COUNT]) {
        let mut w = [0.0; TERM_COUNT];
        let mut ws = [0.0; TERM_COUNT];
        for t in &self.terms {
            w[t.id.slot()] = t.w;
            ws[t.id.slot()] = t.inner();
        }
        (w, ws)
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = [false; TERM_COUNT];
        for t in &self.terms {
            if seen[t.id.slot()] {
                return Err(Error::domain(format!("term {} listed twice", t.id)));
            }
            seen[t.id.slot()] = true;
            if !(t.w.is_finite() && t.w >= 0.0) {
                return Err(Error::domain(format!(
                    "term {}: outer weight must be finite and non-negative, got {}",
                    t.id, t.w
                )));
            }
            match (t.id.has_inner_weight(), t.w_star) {
                (true, Some(ws)) if ws.is_finite() && ws >= 0.0 => {}
                (true, Some(ws)) => {
                    return Err(Error::domain(format!(
                        "term {}: inner weight must be finite and non-negative, got {ws}",
                        t.id
                    )))
                }
                (true, None) => {
                    return Err(Error::domain(format!(
                        "term {} needs an inner weight",
                        t.id
                    )))
                }
                (false, Some(_)) => {
                    return Err(Error::domain(format!("term {} has no inner weight", t.id)))
                }
                (false, None) => {}
            }
        }
        Ok(())
    }

    /// Number of terms with a strictly positive outer weight.
    pub fn nonzero_terms(&self) -> usize {
        self.terms.iter().filter(|t| t.w > 0.0).count()
    }

    pub fn term(&self, id: TermId) -> Option<&TermWeights> {
        self.terms.iter().find(|t| t.id == id)
    }

    /// Plain-text rendering of ψ in the printed-model style.
    pub fn render(&self) -> String {
        let parts: Vec<String> = self
            .terms
            .iter()
            .filter(|t| t.w > 0.0)
            .map(|t| t.id.render(t.w, t.inner()))
            .collect();
        if parts.is_empty() {
            "psi = 0".to_string()
        } else {
            format!("psi = {}", parts.join(" + "))
        }
    }
}

/// Value and first derivatives of an energy with respect to its inputs.
///
/// `d_stretch[j]` is `f'(λ_j)` for the principal-stretch terms, aligned with
/// [`PrincipalStretches::values`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Partials {
    pub psi: f64,
    pub d_i1_bar: f64,
    pub d_i2_bar: f64,
    pub d_j: f64,
    pub d_stretch: [f64; 3],
}

impl Partials {
    fn scaled(&self, c: f64) -> Partials {
        Partials {
            psi: c * self.psi,
            d_i1_bar: c * self.d_i1_bar,
            d_i2_bar: c * self.d_i2_bar,
            d_j: c * self.d_j,
            d_stretch: self.d_stretch.map(|v| c * v),
        }
    }

    fn add_assign(&mut self, o: &Partials) {
        self.psi += o.psi;
        self.d_i1_bar += o.d_i1_bar;
        self.d_i2_bar += o.d_i2_bar;
        self.d_j += o.d_j;
        for (a, b) in self.d_stretch.iter_mut().zip(o.d_stretch) {
            *a += b;
        }
    }

    fn is_finite(&self) -> bool {
        self.psi.is_finite()
            && self.d_i1_bar.is_finite()
            && self.d_i2_bar.is_finite()
            && self.d_j.is_finite()
            && self.d_stretch.iter().all(|v| v.is_finite())
    }
}

/// A single term at unit outer weight, together with the derivative of every
/// field with respect to the inner weight.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnitTerm {
    pub value: Partials,
    pub d_inner: Partials,
}

fn check_inputs(inv: &InvariantSet, ps: &PrincipalStretches) -> Result<()> {
    if !(inv.j > 0.0) {
        return Err(Error::domain(format!("J must be positive, got {}", inv.j)));
    }
    if ps.values().iter().any(|&l| !(l > 0.0)) {
        return Err(Error::domain(format!(
            "principal stretches must be positive, got {:?}",
            ps.values()
        )));
    }
    Ok(())
}

/// `[exp(a x) − 1]` and friends on a scalar argument: value, d/dx, d/da,
/// d²/(dx da).
fn exp_linear(a: f64, x: f64) -> (f64, f64, f64, f64) {
    let e = (a * x).exp();
    (e - 1.0, a * e, x * e, e * (1.0 + a * x))
}

/// `[exp(a x²) − 1]`: value, d/dx, d/da, d²/(dx da).
fn exp_quadratic(a: f64, x: f64) -> (f64, f64, f64, f64) {
    let x2 = x * x;
    let e = (a * x2).exp();
    (
        e - 1.0,
        2.0 * a * x * e,
        x2 * e,
        2.0 * x * e * (1.0 + a * x2),
    )
}

/// `λ^a − a ln λ − 1`: value, d/dλ, d/da, d²/(dλ da).
fn log_power(a: f64, l: f64) -> (f64, f64, f64, f64) {
    let ln = l.ln();
    let p = l.powf(a);
    (
        p - a * ln - 1.0,
        a * (p - 1.0) / l,
        ln * (p - 1.0),
        (p - 1.0 + a * ln * p) / l,
    )
}

/// Evaluates a term at unit outer weight.
pub fn unit_term(
    id: TermId,
    w_star: f64,
    inv: &InvariantSet,
    ps: &PrincipalStretches,
) -> Result<UnitTerm> {
    check_inputs(inv, ps)?;
    let a = w_star;
    let x1 = inv.i1_bar - 3.0;
    let x2 = inv.i2_bar - 3.0;
    let mut v = Partials::default();
    let mut d = Partials::default();
    match id.get() {
        1 | 5 => {
            let x = if id.get() == 1 { x1 } else { x2 };
            v.psi = x;
            set_inv(id, &mut v, 1.0);
        }
        3 | 7 => {
            let x = if id.get() == 3 { x1 } else { x2 };
            v.psi = x * x;
            set_inv(id, &mut v, 2.0 * x);
        }
        2 | 6 => {
            let x = if id.get() == 2 { x1 } else { x2 };
            let (f, fx, fa, fxa) = exp_linear(a, x);
            v.psi = f;
            d.psi = fa;
            set_inv(id, &mut v, fx);
            set_inv(id, &mut d, fxa);
        }
        4 | 8 => {
            let x = if id.get() == 4 { x1 } else { x2 };
            let (f, fx, fa, fxa) = exp_quadratic(a, x);
            v.psi = f;
            d.psi = fa;
            set_inv(id, &mut v, fx);
            set_inv(id, &mut d, fxa);
        }
        9 => {
            let (f, fj, fa, fja) = log_power(a, inv.j);
            v.psi = f;
            v.d_j = fj;
            d.psi = fa;
            d.d_j = fja;
        }
        10 => {
            let ln = inv.j.ln();
            let (f, fl, fa, fla) = exp_quadratic(a, ln);
            v.psi = f;
            v.d_j = fl / inv.j;
            d.psi = fa;
            d.d_j = fla / inv.j;
        }
        11 | 12 => {
            let x = if id.get() == 11 { x1 } else { x2 };
            let ln = inv.j.ln();
            let ja = inv.j.powf(a);
            v.psi = ja * x;
            v.d_j = a * ja / inv.j * x;
            d.psi = ln * ja * x;
            d.d_j = ja / inv.j * x * (1.0 + a * ln);
            set_inv(id, &mut v, ja);
            set_inv(id, &mut d, ln * ja);
        }
        _ => {
            for (k, &l) in ps.values().iter().enumerate() {
                let (f, fl, fa, fla) = log_power(a, l);
                v.psi += f;
                v.d_stretch[k] = fl;
                d.psi += fa;
                d.d_stretch[k] = fla;
            }
        }
    }
    if !(v.is_finite() && d.is_finite()) {
        return Err(Error::Saturation {
            term: id,
            detail: format!(
                "non-finite value at Ī1 = {}, Ī2 = {}, J = {}, w* = {a}",
                inv.i1_bar, inv.i2_bar, inv.j
            ),
        });
    }
    Ok(UnitTerm {
        value: v,
        d_inner: d,
    })
}

fn set_inv(id: TermId, p: &mut Partials, value: f64) {
    match id.get() {
        1..=4 | 11 => p.d_i1_bar = value,
        _ => p.d_i2_bar = value,
    }
}

/// Energy density (kPa) of one term.
pub fn term_energy(
    id: TermId,
    w: f64,
    w_star: f64,
    inv: &InvariantSet,
    ps: &PrincipalStretches,
) -> Result<f64> {
    if w == 0.0 {
        check_inputs(inv, ps)?;
        return Ok(0.0);
    }
    Ok(w * unit_term(id, w_star, inv, ps)?.value.psi)
}

/// Kinematic quantities needed to evaluate any term at a state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateInputs {
    pub inv: InvariantSet,
    pub ps: PrincipalStretches,
}

impl StateInputs {
    pub fn at(state: &DeformationState) -> Result<Self> {
        Ok(StateInputs {
            inv: invariants(state)?,
            ps: principal_stretches(state)?,
        })
    }
}

/// Total energy ψ (kPa) of a model at a state.
pub fn energy(model: &ModelSpec, state: &DeformationState) -> Result<f64> {
    let s = StateInputs::at(state)?;
    model.terms.iter().try_fold(0.0, |acc, t| {
        Ok(acc + term_energy(t.id, t.w, t.inner(), &s.inv, &s.ps)?)
    })
}

/// Model-level `(ψ, ∂ψ/∂Ī1, ∂ψ/∂Ī2, ∂ψ/∂J, f'(λ_j))`.
pub fn energy_partials(model: &ModelSpec, state: &DeformationState) -> Result<Partials> {
    let s = StateInputs::at(state)?;
    partials_at(model, &s)
}

pub(crate) fn partials_at(model: &ModelSpec, s: &StateInputs) -> Result<Partials> {
    let mut total = Partials::default();
    for t in model.terms.iter().filter(|t| t.w != 0.0) {
        let u = unit_term(t.id, t.inner(), &s.inv, &s.ps)?;
        total.add_assign(&u.value.scaled(t.w));
    }
    Ok(total)
}
