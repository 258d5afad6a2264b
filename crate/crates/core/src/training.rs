//! Normalised three-mode loss with transverse-stress penalty and L0.5
//! regularisation, and a projected Adam trainer with a two-stage schedule.
//!
//! Outer weights are reported in kPa; the optimiser steps them in units of
//! `weight_unit_kpa`. The penalty is `α Σ √(w / w_ref)` with
//! `w_ref = penalty_reference_kpa`, so the default of 1000 measures the
//! weights in MPa.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataproc::FoamDataset;
use crate::discovery::FitReport;
use crate::energy::{ModelSpec, StateInputs, TermId, TERM_COUNT};
use crate::error::{Error, Result};
use crate::kinematics::{
    tangent, DeformationState, Direction, LoadingMode, PathTangent, SHEAR_PRESTRETCH,
};
use crate::stress::unit_stress;

/// Lower bound for the inner weight of exponential terms.
pub const EXP_INNER_FLOOR: f64 = 1e-6;

/// Which terms of the library may become active.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Architecture {
    #[serde(rename = "SI")]
    Si,
    #[serde(rename = "SI+MI")]
    SiMi,
    #[serde(rename = "SI+PS")]
    SiPs,
    #[serde(rename = "ALL")]
    All,
}

impl Architecture {
    /// The three rows of the discovery grid.
    pub const GRID: [Architecture; 3] = [Architecture::Si, Architecture::SiMi, Architecture::SiPs];

    pub fn trainable(self, id: TermId) -> bool {
        let i = id.get();
        match self {
            Architecture::Si => i <= 10,
            Architecture::SiMi => i <= 12,
            Architecture::SiPs => i <= 10 || i >= 13,
            Architecture::All => true,
        }
    }

    pub fn mask(self) -> [bool; TERM_COUNT] {
        let mut m = [false; TERM_COUNT];
        for id in TermId::all() {
            m[id.slot()] = self.trainable(id);
        }
        m
    }

    pub fn label(self) -> &'static str {
        match self {
            Architecture::Si => "SI",
            Architecture::SiMi => "SI+MI",
            Architecture::SiPs => "SI+PS",
            Architecture::All => "ALL",
        }
    }

    /// Command-line spelling.
    pub fn flag(self) -> &'static str {
        match self {
            Architecture::Si => "si",
            Architecture::SiMi => "si-mi",
            Architecture::SiPs => "si-ps",
            Architecture::All => "all",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s
            .trim()
            .to_ascii_lowercase()
            .replace(['_', '+'], "-")
            .as_str()
        {
            "si" => Some(Architecture::Si),
            "si-mi" => Some(Architecture::SiMi),
            "si-ps" => Some(Architecture::SiPs),
            "all" => Some(Architecture::All),
            _ => None,
        }
    }
}

impl std::fmt::Display for Architecture {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub architecture: Architecture,
    pub alpha: f64,
    pub epochs: usize,
    pub warm_epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub penalty_reference_kpa: f64,
    pub shear_prestretch: f64,
    /// Weights below this fraction of the largest weight are zeroed after training.
    pub prune_ratio: f64,
    /// Start the regularised stage with fresh optimiser moments, as a new
    /// training run initialised from the warm weights would.
    pub reset_optimizer: bool,
    /// Unit (kPa) in which the optimiser steps the outer weights.
    pub weight_unit_kpa: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            architecture: Architecture::SiMi,
            alpha: 0.0,
            epochs: 15_000,
            warm_epochs: 5_000,
            batch_size: 64,
            learning_rate: 0.01,
            seed: 0,
            penalty_reference_kpa: 1000.0,
            shear_prestretch: SHEAR_PRESTRETCH,
            prune_ratio: 1e-4,
            reset_optimizer: false,
            weight_unit_kpa: 3.0,
        }
    }
}

impl TrainConfig {
    pub fn new(architecture: Architecture, alpha: f64, seed: u64) -> Self {
        TrainConfig {
            architecture,
            alpha,
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::domain(format!(
                "alpha must be finite and >= 0, got {}",
                self.alpha
            )));
        }
        if self.warm_epochs > self.epochs {
            return Err(Error::domain(format!(
                "warm_epochs ({}) exceeds epochs ({})",
                self.warm_epochs, self.epochs
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::domain("batch_size must be positive"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::domain("learning_rate must be positive"));
        }
        if !(self.penalty_reference_kpa.is_finite() && self.penalty_reference_kpa > 0.0) {
            return Err(Error::domain("penalty_reference_kpa must be positive"));
        }
        if !(self.weight_unit_kpa.is_finite() && self.weight_unit_kpa > 0.0) {
            return Err(Error::domain("weight_unit_kpa must be positive"));
        }
        if !(self.shear_prestretch.is_finite() && self.shear_prestretch > 0.0) {
            return Err(Error::domain("shear_prestretch must be positive"));
        }
        if !(0.0..1.0).contains(&self.prune_ratio) {
            return Err(Error::domain("prune_ratio must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Loss split into its parts. All parts are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub tension: f64,
    pub compression: f64,
    pub shear: f64,
    pub p22: f64,
    pub regularization: f64,
    pub total: f64,
}

impl LossBreakdown {
    fn finish(mut self) -> Self {
        self.total = self.tension + self.compression + self.shear + self.p22 + self.regularization;
        self
    }
}

/// Gradient of the loss with respect to the dense weight vectors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub w: [f64; TERM_COUNT],
    pub w_star: [f64; TERM_COUNT],
}

struct Point {
    mode: LoadingMode,
    inputs: StateInputs,
    /// Fitted direction (`λ` or `γ`).
    main: PathTangent,
    /// Transverse direction for uniaxial points.
    transverse: Option<PathTangent>,
    target: f64,
    /// `1 / P_ref²` for the point's mode.
    weight: f64,
}

/// The loss over one dataset with precomputed kinematics.
pub struct Objective {
    points: Vec<Point>,
    penalty_reference_kpa: f64,
}

fn normaliser(data: &FoamDataset, mode: LoadingMode) -> Result<f64> {
    let peak = data
        .curve(mode)
        .y
        .iter()
        .fold(0.0f64, |m, y| m.max(y.abs()));
    if peak == 0.0 {
        return Err(Error::Normalization { mode: mode.name() });
    }
    Ok(1.0 / (peak * peak))
}

impl Objective {
    pub fn new(
        data: &FoamDataset,
        shear_prestretch: f64,
        penalty_reference_kpa: f64,
    ) -> Result<Self> {
        let mut points = Vec::with_capacity(data.total_points());
        for mode in LoadingMode::ALL {
            let curve = data.curve(mode);
            let weight = normaliser(data, mode)?;
            for (&x, &y) in curve.x.iter().zip(&curve.y) {
                let (state, main, transverse) = if mode.is_uniaxial() {
                    let s = DeformationState::uniaxial(x)?;
                    (s, Direction::Lambda, Some(Direction::Alpha))
                } else {
                    (
                        DeformationState::shear(x, shear_prestretch)?,
                        Direction::Gamma,
                        None,
                    )
                };
                points.push(Point {
                    mode,
                    inputs: StateInputs::at(&state)?,
                    main: tangent(&state, main)?,
                    transverse: transverse.map(|d| tangent(&state, d)).transpose()?,
                    target: y,
                    weight,
                });
            }
        }
        Ok(Objective {
            points,
            penalty_reference_kpa,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn loss(&self, model: &ModelSpec, alpha: f64) -> Result<LossBreakdown> {
        let (w, ws) = model.dense();
        let mut active = [false; TERM_COUNT];
        for t in &model.terms {
            active[t.id.slot()] = true;
        }
        Ok(self.evaluate(&w, &ws, &active, alpha, None, false)?.0)
    }

    /// Loss and full gradient at dense weights; every term is differentiated.
    pub fn loss_and_gradient(
        &self,
        w: &[f64; TERM_COUNT],
        w_star: &[f64; TERM_COUNT],
        alpha: f64,
    ) -> Result<(LossBreakdown, Gradient)> {
        let (l, g) = self.evaluate(w, w_star, &[true; TERM_COUNT], alpha, None, true)?;
        Ok((l, g.expect("gradient requested")))
    }

    fn evaluate(
        &self,
        w: &[f64; TERM_COUNT],
        w_star: &[f64; TERM_COUNT],
        active: &[bool; TERM_COUNT],
        alpha: f64,
        batch: Option<&[usize]>,
        want_grad: bool,
    ) -> Result<(LossBreakdown, Option<Gradient>)> {
        let mut out = LossBreakdown::default();
        let mut g = Gradient {
            w: [0.0; TERM_COUNT],
            w_star: [0.0; TERM_COUNT],
        };
        let slots: Vec<usize> = (0..TERM_COUNT)
            .filter(|&k| active[k] && (want_grad || w[k] != 0.0))
            .collect();
        let mut s_main = [0.0; TERM_COUNT];
        let mut d_main = [0.0; TERM_COUNT];
        let mut s_tr = [0.0; TERM_COUNT];
        let mut d_tr = [0.0; TERM_COUNT];

        let mut visit = |p: &Point| -> Result<()> {
            let (mut main, mut tr) = (0.0, 0.0);
            for &k in &slots {
                let id = TermId::from_slot(k);
                let (s, ds) = unit_stress(id, w_star[k], &p.inputs, &p.main)?;
                s_main[k] = s;
                d_main[k] = ds;
                main += w[k] * s;
                if let Some(t) = &p.transverse {
                    let (s, ds) = unit_stress(id, w_star[k], &p.inputs, t)?;
                    s_tr[k] = s;
                    d_tr[k] = ds;
                    tr += w[k] * s;
                }
            }
            let r = main - p.target;
            let fit = p.weight * r * r;
            match p.mode {
                LoadingMode::UniaxialTension => out.tension += fit,
                LoadingMode::UniaxialCompression => out.compression += fit,
                LoadingMode::SimpleShear => out.shear += fit,
            }
            if p.transverse.is_some() {
                out.p22 += p.weight * tr * tr;
            }
            if want_grad {
                let (cr, ct) = (2.0 * p.weight * r, 2.0 * p.weight * tr);
                let has_tr = p.transverse.is_some();
                for &k in &slots {
                    let mut gw = cr * s_main[k];
                    let mut gs = cr * w[k] * d_main[k];
                    if has_tr {
                        gw += ct * s_tr[k];
                        gs += ct * w[k] * d_tr[k];
                    }
                    g.w[k] += gw;
                    g.w_star[k] += gs;
                }
            }
            Ok(())
        };
        match batch {
            Some(idx) => idx.iter().try_for_each(|&i| visit(&self.points[i]))?,
            None => self.points.iter().try_for_each(&mut visit)?,
        }

        let reference = self.penalty_reference_kpa;
        for k in (0..TERM_COUNT).filter(|&k| active[k] && w[k] > 0.0) {
            out.regularization += alpha * (w[k] / reference).sqrt();
            if want_grad && alpha > 0.0 {
                g.w[k] += alpha * 0.5 / (w[k] * reference).sqrt();
            }
        }
        Ok((out.finish(), want_grad.then_some(g)))
    }
}

/// Loss with the default shear pre-stretch and penalty reference.
pub fn loss(model: &ModelSpec, data: &FoamDataset, alpha: f64) -> Result<LossBreakdown> {
    let d = TrainConfig::default();
    Objective::new(data, d.shear_prestretch, d.penalty_reference_kpa)?.loss(model, alpha)
}

#[derive(Clone)]
struct Adam {
    m: [f64; 2 * TERM_COUNT],
    v: [f64; 2 * TERM_COUNT],
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;
    const EPS: f64 = 1e-8;

    fn new() -> Self {
        Adam {
            m: [0.0; 2 * TERM_COUNT],
            v: [0.0; 2 * TERM_COUNT],
            t: 0,
        }
    }

    fn step(&mut self, i: usize, x: &mut f64, g: f64, lr: f64) {
        self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g;
        self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g * g;
        let mh = self.m[i] / (1.0 - Self::B1.powi(self.t));
        let vh = self.v[i] / (1.0 - Self::B2.powi(self.t));
        *x -= lr * mh / (vh.sqrt() + Self::EPS);
    }
}

/// Optimiser state for one fit. Cloning it forks the run, which is how a
/// sweep shares one warm start.
#[derive(Clone)]
pub struct Trainer<'a> {
    config: TrainConfig,
    data: &'a FoamDataset,
    objective: std::sync::Arc<Objective>,
    w: [f64; TERM_COUNT],
    w_star: [f64; TERM_COUNT],
    mask: [bool; TERM_COUNT],
    adam: Adam,
    rng: ChaCha8Rng,
    epoch: usize,
    trace: Vec<LossBreakdown>,
}

fn floor(id: TermId) -> f64 {
    if id.is_exponential() {
        EXP_INNER_FLOOR
    } else {
        0.0
    }
}

impl<'a> Trainer<'a> {
    pub fn new(config: &TrainConfig, data: &'a FoamDataset) -> Result<Self> {
        config.validate()?;
        let objective =
            Objective::new(data, config.shear_prestretch, config.penalty_reference_kpa)?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mask = config.architecture.mask();
        let mut w = [0.0f64; TERM_COUNT];
        let mut w_star = [0.0f64; TERM_COUNT];
        for x in &mut w {
            *x = rng.gen_range(0.0..1.0);
        }
        for x in &mut w_star {
            *x = rng.gen_range(0.0..2.0);
        }
        for id in TermId::all() {
            let k = id.slot();
            if !mask[k] {
                w[k] = 0.0;
            }
            w_star[k] = if id.has_inner_weight() {
                w_star[k].max(floor(id))
            } else {
                0.0
            };
        }
        Ok(Trainer {
            config: config.clone(),
            data,
            objective: std::sync::Arc::new(objective),
            w,
            w_star,
            mask,
            adam: Adam::new(),
            rng,
            epoch: 0,
            trace: Vec::with_capacity(config.epochs),
        })
    }

    /// Clears the optimiser moments and step count.
    pub fn reset_optimizer(&mut self) {
        self.adam = Adam::new();
    }

    pub fn epoch(&self) -> usize {
        self.epoch
    }

    /// Current (unpruned) dense weights.
    pub fn weights(&self) -> (&[f64; TERM_COUNT], &[f64; TERM_COUNT]) {
        (&self.w, &self.w_star)
    }

    fn step(&mut self, alpha: f64, batch: Option<&[usize]>) -> Result<LossBreakdown> {
        let (l, g) = self
            .objective
            .evaluate(&self.w, &self.w_star, &self.mask, alpha, batch, true)
            .map_err(|e| match e {
                Error::Saturation { .. } => Error::Divergence {
                    epoch: self.epoch,
                    loss: f64::INFINITY,
                },
                other => other,
            })?;
        if !l.total.is_finite() {
            return Err(Error::Divergence {
                epoch: self.epoch,
                loss: l.total,
            });
        }
        let g = g.expect("gradient requested");
        self.adam.t += 1;
        let lr = self.config.learning_rate;
        for id in TermId::all() {
            let k = id.slot();
            if !self.mask[k] {
                continue;
            }
            let unit = self.config.weight_unit_kpa;
            let mut theta = self.w[k] / unit;
            self.adam.step(k, &mut theta, g.w[k] * unit, lr);
            self.w[k] = (theta * unit).max(0.0);
            if id.has_inner_weight() {
                self.adam
                    .step(TERM_COUNT + k, &mut self.w_star[k], g.w_star[k], lr);
                self.w_star[k] = self.w_star[k].max(floor(id));
            }
        }
        Ok(l)
    }

    /// Runs `epochs` epochs at regularisation strength `alpha`, appending one
    /// trace row per epoch (the full loss at the start of the epoch).
    pub fn run(&mut self, epochs: usize, alpha: f64) -> Result<()> {
        let n = self.objective.len();
        let mut order: Vec<usize> = (0..n).collect();
        for _ in 0..epochs {
            if self.config.batch_size >= n {
                let l = self.step(alpha, None)?;
                self.trace.push(l);
            } else {
                let (l, _) = self.objective.evaluate(
                    &self.w,
                    &self.w_star,
                    &self.mask,
                    alpha,
                    None,
                    false,
                )?;
                self.trace.push(l);
                order.shuffle(&mut self.rng);
                for chunk in order.clone().chunks(self.config.batch_size) {
                    self.step(alpha, Some(chunk))?;
                }
            }
            self.epoch += 1;
        }
        Ok(())
    }

    /// Prunes small weights and evaluates the result.
    pub fn finish(&self, alpha: f64) -> Result<FitReport> {
        let mut w = self.w;
        let peak = w.iter().cloned().fold(0.0, f64::max);
        for x in &mut w {
            if *x < self.config.prune_ratio * peak {
                *x = 0.0;
            }
        }
        let provenance = format!(
            "{} {} alpha={} seed={}",
            self.data.label, self.config.architecture, alpha, self.config.seed
        );
        let model = ModelSpec::from_dense(&w, &self.w_star, &provenance)?;
        FitReport::new(
            model,
            self.data,
            self.config.architecture,
            alpha,
            self.config.shear_prestretch,
            self.trace.clone(),
        )
    }
}

/// Two-stage fit: `warm_epochs` at α = 0, then the remaining epochs at the
/// configured α.
pub fn fit(config: &TrainConfig, data: &FoamDataset) -> Result<FitReport> {
    let mut t = Trainer::new(config, data)?;
    t.run(config.warm_epochs, 0.0)?;
    if config.reset_optimizer {
        t.reset_optimizer();
    }
    t.run(config.epochs - config.warm_epochs, config.alpha)?;
    t.finish(config.alpha)
}

/// One fit per α, all continuing from a shared α = 0 warm stage. Reports are
/// returned in the order of `alphas`.
pub fn sparsity_sweep(
    config: &TrainConfig,
    data: &FoamDataset,
    alphas: &[f64],
) -> Result<Vec<FitReport>> {
    if alphas.windows(2).any(|p| p[1] < p[0]) {
        return Err(Error::domain("alphas must be sorted ascending"));
    }
    for &a in alphas {
        TrainConfig {
            alpha: a,
            ..config.clone()
        }
        .validate()?;
    }
    let mut warm = Trainer::new(config, data)?;
    warm.run(config.warm_epochs, 0.0)?;
    let remaining = config.epochs - config.warm_epochs;
    alphas
        .par_iter()
        .map(|&a| {
            let mut t = warm.clone();
            t.config.alpha = a;
            if config.reset_optimizer {
                t.reset_optimizer();
            }
            t.run(remaining, a)?;
            t.finish(a)
        })
        .collect()
}

/// `epoch,total,tension,compression,shear,p22,reg`
pub fn trace_csv(trace: &[LossBreakdown]) -> String {
    let mut s = String::from("epoch,total,tension,compression,shear,p22,reg\n");
    for (i, l) in trace.iter().enumerate() {
        s.push_str(&format!(
            "{i},{},{},{},{},{},{}\n",
            l.total, l.tension, l.compression, l.shear, l.p22, l.regularization
        ));
    }
    s
}
