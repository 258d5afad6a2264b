//! Goodness of fit, polyconvexity flags, the architecture × α grid, model
//! selection and model documents.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataproc::{Curve, FoamDataset};
use crate::energy::{ModelSpec, TermId, TermWeights};
use crate::error::{Error, Result};
use crate::kinematics::LoadingMode;
use crate::stress::{shear_stress, uniaxial_stress};
use crate::training::{sparsity_sweep, Architecture, LossBreakdown, TrainConfig};

/// Per-mode coefficient of determination.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeR2 {
    pub ten: f64,
    pub com: f64,
    pub shr: f64,
}

impl ModeR2 {
    pub fn get(&self, mode: LoadingMode) -> f64 {
        match mode {
            LoadingMode::UniaxialTension => self.ten,
            LoadingMode::UniaxialCompression => self.com,
            LoadingMode::SimpleShear => self.shr,
        }
    }

    pub fn min(&self) -> f64 {
        self.ten.min(self.com).min(self.shr)
    }
}

/// `1 − SS_res / SS_tot` on a shared x-grid.
pub fn r_squared(predicted: &Curve, observed: &Curve) -> Result<f64> {
    if predicted.x != observed.x {
        return Err(Error::domain(
            "predicted and observed curves use different x values",
        ));
    }
    let n = observed.len() as f64;
    let mean = observed.y.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.y.iter().map(|y| (y - mean).powi(2)).sum();
    if ss_tot == 0.0 {
        return Err(Error::domain("R² undefined for a constant observed curve"));
    }
    let ss_res: f64 = predicted
        .y
        .iter()
        .zip(&observed.y)
        .map(|(p, o)| (p - o).powi(2))
        .sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Model stresses on the dataset's grids. Uniaxial curves carry `P11`; the
/// transverse `P22` is returned separately.
#[derive(Debug, Clone, PartialEq)]
pub struct Predictions {
    pub tension: Curve,
    pub compression: Curve,
    pub shear: Curve,
    pub tension_p22: Vec<f64>,
    pub compression_p22: Vec<f64>,
}

impl Predictions {
    pub fn curve(&self, mode: LoadingMode) -> &Curve {
        match mode {
            LoadingMode::UniaxialTension => &self.tension,
            LoadingMode::UniaxialCompression => &self.compression,
            LoadingMode::SimpleShear => &self.shear,
        }
    }
}

pub fn predict(
    model: &ModelSpec,
    data: &FoamDataset,
    shear_prestretch: f64,
) -> Result<Predictions> {
    let uni = |c: &Curve| -> Result<(Curve, Vec<f64>)> {
        let (p11, p22): (Vec<f64>, Vec<f64>) =
            c.x.iter()
                .map(|&l| uniaxial_stress(model, l))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .unzip();
        Ok((Curve::new(c.x.clone(), p11)?, p22))
    };
    let (tension, tension_p22) = uni(&data.tension)?;
    let (compression, compression_p22) = uni(&data.compression)?;
    let shear = Curve::new(
        data.shear.x.clone(),
        data.shear
            .x
            .iter()
            .map(|&g| shear_stress(model, g, shear_prestretch))
            .collect::<Result<_>>()?,
    )?;
    Ok(Predictions {
        tension,
        compression,
        shear,
        tension_p22,
        compression_p22,
    })
}

/// A dataset on the grids of `grid` whose stresses are the model's own
/// predictions.
pub fn synthesize(
    model: &ModelSpec,
    grid: &FoamDataset,
    shear_prestretch: f64,
    label: &str,
) -> Result<FoamDataset> {
    let p = predict(model, grid, shear_prestretch)?;
    Ok(FoamDataset {
        label: label.to_string(),
        tension: p.tension,
        compression: p.compression,
        shear: p.shear,
    })
}

pub fn evaluate(model: &ModelSpec, data: &FoamDataset, shear_prestretch: f64) -> Result<ModeR2> {
    let p = predict(model, data, shear_prestretch)?;
    Ok(ModeR2 {
        ten: r_squared(&p.tension, &data.tension)?,
        com: r_squared(&p.compression, &data.compression)?,
        shr: r_squared(&p.shear, &data.shear)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Convexity {
    Convex,
    Violates,
    /// Convex while `w*` stays at or below the threshold.
    Conditional {
        threshold: f64,
    },
}

/// Threshold on `w11*` above which the mixed `Ī1` term loses polyconvexity.
pub const MIXED_I1_THRESHOLD: f64 = 2.0 / 3.0;

pub fn polyconvexity_flags(model: &ModelSpec) -> Vec<(TermId, Convexity)> {
    model
        .terms
        .iter()
        .filter(|t| t.w > 0.0)
        .map(|t| {
            let flag = match t.id.get() {
                11 if t.inner() > MIXED_I1_THRESHOLD => Convexity::Violates,
                11 => Convexity::Conditional {
                    threshold: MIXED_I1_THRESHOLD,
                },
                12 => Convexity::Violates,
                _ => Convexity::Convex,
            };
            (t.id, flag)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub label: String,
    pub architecture: Architecture,
    pub alpha: f64,
    pub model: ModelSpec,
    pub r2: ModeR2,
    pub nonzero_terms: usize,
    pub polyconvexity: Vec<(TermId, Convexity)>,
    #[serde(skip)]
    pub loss_trace: Vec<LossBreakdown>,
}

impl FitReport {
    pub fn new(
        model: ModelSpec,
        data: &FoamDataset,
        architecture: Architecture,
        alpha: f64,
        shear_prestretch: f64,
        loss_trace: Vec<LossBreakdown>,
    ) -> Result<Self> {
        let r2 = evaluate(&model, data, shear_prestretch)?;
        Ok(FitReport {
            label: data.label.clone(),
            architecture,
            alpha,
            nonzero_terms: model.nonzero_terms(),
            polyconvexity: polyconvexity_flags(&model),
            model,
            r2,
            loss_trace,
        })
    }
}

/// The regularisation strengths of the grid.
pub const GRID_ALPHAS: [f64; 2] = [0.0, 1.0];

/// Fits {SI, SI+MI, SI+PS} × {α = 0, α = 1}. Each architecture shares one
/// warm stage between its two α values.
pub fn run_grid(data: &FoamDataset, base: &TrainConfig) -> Result<Vec<FitReport>> {
    let rows: Vec<Vec<FitReport>> = Architecture::GRID
        .par_iter()
        .map(|&arch| {
            let cfg = TrainConfig {
                architecture: arch,
                ..base.clone()
            };
            sparsity_sweep(&cfg, data, &GRID_ALPHAS).map_err(|e| match e {
                Error::Divergence { .. } | Error::Saturation { .. } | Error::Domain(_) => {
                    Error::domain(format!("grid cell {} on {}: {e}", arch, data.label))
                }
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub report: FitReport,
    /// No candidate qualified and the sparsest baseline was returned instead.
    pub fallback: bool,
}

fn better(a: &FitReport, b: &FitReport) -> bool {
    let key = |r: &FitReport| (r.nonzero_terms, -r.r2.min(), r.alpha);
    let (ka, kb) = (key(a), key(b));
    match ka.partial_cmp(&kb) {
        Some(std::cmp::Ordering::Equal) | None => {
            (a.architecture, &a.label) < (b.architecture, &b.label)
        }
        Some(o) => o == std::cmp::Ordering::Less,
    }
}

/// Fewest non-zero terms among reports whose min-mode R² is within `margin`
/// of their architecture's α = 0 baseline; ties go to higher min-mode R²,
/// then lower α.
pub fn select_model(reports: &[FitReport], margin: f64) -> Result<Selection> {
    if reports.is_empty() {
        return Err(Error::domain("no reports to select from"));
    }
    let baseline = |arch: Architecture| -> Option<&FitReport> {
        reports
            .iter()
            .filter(|r| r.architecture == arch && r.alpha == 0.0)
            .fold(None, |best: Option<&FitReport>, r| match best {
                Some(b) if b.r2.min() >= r.r2.min() => Some(b),
                _ => Some(r),
            })
    };
    let qualifies = |r: &FitReport| match baseline(r.architecture) {
        Some(b) => r.r2.min() >= b.r2.min() - margin,
        None => true,
    };
    let pick = |pool: &mut dyn Iterator<Item = &FitReport>| -> Option<FitReport> {
        pool.fold(None, |best: Option<&FitReport>, r| match best {
            Some(b) if !better(r, b) => Some(b),
            _ => Some(r),
        })
        .cloned()
    };
    if let Some(r) = pick(&mut reports.iter().filter(|r| qualifies(r))) {
        return Ok(Selection {
            report: r,
            fallback: false,
        });
    }
    let r =
        pick(&mut reports.iter().filter(|r| r.alpha == 0.0)).unwrap_or_else(|| reports[0].clone());
    Ok(Selection {
        report: r,
        fallback: true,
    })
}

/// One term of a model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEntry {
    pub id: TermId,
    #[serde(default)]
    pub form: String,
    pub w_kpa: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_star: Option<f64>,
}

/// JSON model document with an embedded plain-text ψ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDocument {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub architecture: Option<Architecture>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub terms: Vec<TermEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<ModeR2>,
    #[serde(default)]
    pub psi: String,
}

pub fn export_model(model: &ModelSpec) -> ModelDocument {
    ModelDocument {
        label: model.provenance.clone(),
        architecture: None,
        alpha: None,
        terms: model
            .terms
            .iter()
            .map(|t| TermEntry {
                id: t.id,
                form: t.id.form().to_string(),
                w_kpa: t.w,
                w_star: t.w_star,
            })
            .collect(),
        r2: None,
        psi: model.render(),
    }
}

pub fn export_report(report: &FitReport) -> ModelDocument {
    ModelDocument {
        architecture: Some(report.architecture),
        alpha: Some(report.alpha),
        r2: Some(report.r2),
        ..export_model(&report.model)
    }
}

pub fn import_model(doc: &ModelDocument) -> Result<ModelSpec> {
    let terms = doc
        .terms
        .iter()
        .map(|t| TermWeights::new(t.id, t.w_kpa, t.w_star))
        .collect();
    ModelSpec::new(terms, doc.label.clone())
}

impl ModelDocument {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("document serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::parse(format!("model document: {e}")))
    }
}

/// Parses and validates a model document in one step.
pub fn parse_model(text: &str) -> Result<ModelSpec> {
    import_model(&ModelDocument::from_json(text)?)
}

/// One row of a grid report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub label: String,
    pub architecture: Architecture,
    pub alpha: f64,
    pub nonzero_terms: usize,
    pub r2_ten: f64,
    pub r2_com: f64,
    pub r2_shr: f64,
}

impl From<&FitReport> for ReportRow {
    fn from(r: &FitReport) -> Self {
        ReportRow {
            label: r.label.clone(),
            architecture: r.architecture,
            alpha: r.alpha,
            nonzero_terms: r.nonzero_terms,
            r2_ten: r.r2.ten,
            r2_com: r.r2.com,
            r2_shr: r.r2.shr,
        }
    }
}

pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory write");
    }
    if rows.is_empty() {
        w.write_record([
            "label",
            "architecture",
            "alpha",
            "nonzero_terms",
            "r2_ten",
            "r2_com",
            "r2_shr",
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8")
}

pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    rdr.deserialize()
        .enumerate()
        .map(|(i, r)| {
            let row: ReportRow = r.map_err(|e| Error::parse(format!("report: {e}")))?;
            if ![row.alpha, row.r2_ten, row.r2_com, row.r2_shr]
                .iter()
                .all(|v| v.is_finite())
            {
                return Err(Error::parse(format!(
                    "report row {}: non-finite value",
                    i + 2
                )));
            }
            Ok(row)
        })
        .collect()
}

/// A model printed alongside the reported goodness of fit.
#[derive(Debug, Clone)]
pub struct PublishedModel {
    pub foam: &'static str,
    pub architecture: Architecture,
    pub model: ModelSpec,
    pub reported_r2: ModeR2,
}

/// The four published sparse models (α = 1).
pub fn published_models() -> Vec<PublishedModel> {
    let mk = |foam, arch, triples: &[(u8, f64, f64)], r2: [f64; 3]| PublishedModel {
        foam,
        architecture: arch,
        model: ModelSpec::from_triples(triples, &format!("{foam} {arch} published"))
            .expect("valid"),
        reported_r2: ModeR2 {
            ten: r2[0],
            com: r2[1],
            shr: r2[2],
        },
    };
    vec![
        mk(
            "leap",
            Architecture::SiMi,
            &[(1, 26.9, 0.0), (9, 70.3, 1.06), (11, 79.0, 4.86)],
            [0.981, 0.988, 0.995],
        ),
        mk(
            "turbo",
            Architecture::SiMi,
            &[(10, 936.0, 0.0615), (11, 139.0, 4.36), (12, 19.8, 1.47)],
            [0.997, 0.991, 0.996],
        ),
        mk(
            "leap",
            Architecture::SiPs,
            &[(3, 9.93, 0.0), (9, 59.0, 0.481), (13, 0.286, 8.40)],
            [0.992, 0.995, 0.999],
        ),
        mk(
            "turbo",
            Architecture::SiPs,
            &[(2, 73.9, 0.147), (10, 0.00592, 6.64), (13, 0.365, 8.33)],
            [0.999, 0.938, 0.984],
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataproc::builtin_dataset;
    use crate::kinematics::SHEAR_PRESTRETCH;

    #[test]
    fn r_squared_basics() {
        let obs = Curve::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 6.0]).unwrap();
        assert_eq!(r_squared(&obs, &obs).unwrap(), 1.0);
        let mean = Curve::new(vec![1.0, 2.0, 3.0], vec![3.0; 3]).unwrap();
        assert_eq!(r_squared(&mean, &obs).unwrap(), 0.0);
        assert!(r_squared(&obs, &mean).is_err());
        let other = Curve::new(vec![1.0, 2.0, 4.0], vec![1.0, 2.0, 6.0]).unwrap();
        assert!(r_squared(&other, &obs).is_err());
    }

    #[test]
    fn empty_model_has_non_positive_r2() {
        let r = evaluate(
            &ModelSpec::empty(),
            &builtin_dataset("leap").unwrap(),
            SHEAR_PRESTRETCH,
        )
        .unwrap();
        assert!(r.ten <= 0.0 && r.com <= 0.0 && r.shr <= 0.0);
    }

    #[test]
    fn model_fits_its_own_data() {
        let m = &published_models()[0].model;
        let grid = builtin_dataset("turbo").unwrap();
        let d = synthesize(m, &grid, SHEAR_PRESTRETCH, "syn").unwrap();
        let r = evaluate(m, &d, SHEAR_PRESTRETCH).unwrap();
        assert_eq!((r.ten, r.com, r.shr), (1.0, 1.0, 1.0));
    }

    #[test]
    fn flags() {
        assert!(polyconvexity_flags(&ModelSpec::empty()).is_empty());
        let published = published_models();
        let leap_mi = &published[0].model;
        let f = polyconvexity_flags(leap_mi);
        assert_eq!(f[2], (TermId::new(11).unwrap(), Convexity::Violates));
        assert!(polyconvexity_flags(&published[2].model)
            .iter()
            .all(|(_, c)| *c == Convexity::Convex));
        let m = ModelSpec::from_triples(&[(11, 1.0, 0.5), (12, 1.0, 0.1)], "").unwrap();
        let f = polyconvexity_flags(&m);
        assert!(matches!(f[0].1, Convexity::Conditional { .. }));
        assert_eq!(f[1].1, Convexity::Violates);
    }

    #[test]
    fn document_round_trip() {
        let empty = ModelSpec::empty();
        let doc = export_model(&empty);
        assert!(doc.terms.is_empty());
        assert_eq!(parse_model(&doc.to_json()).unwrap(), empty);

        let turbo = &published_models()[1].model;
        let doc = export_model(turbo);
        let ids: Vec<u8> = doc.terms.iter().map(|t| t.id.get()).collect();
        assert_eq!(ids, vec![10, 11, 12]);
        assert_eq!(doc.terms[0].w_kpa, 936.0);
        assert_eq!(doc.terms[0].w_star, Some(0.0615));
        assert_eq!(&parse_model(&doc.to_json()).unwrap(), turbo);
    }

    #[test]
    fn import_rejects_bad_documents() {
        assert!(parse_model("{").is_err());
        assert!(parse_model(r#"{"label":"x","terms":[{"id":15,"form":"","w_kpa":1}]}"#).is_err());
        assert!(parse_model(r#"{"label":"x","terms":[{"id":1,"form":"","w_kpa":-1}]}"#).is_err());
        assert!(parse_model(r#"{"label":"x","terms":[{"id":2,"form":"","w_kpa":1}]}"#).is_err());
    }

    fn report(arch: Architecture, alpha: f64, terms: usize, r2: f64) -> FitReport {
        FitReport {
            label: "t".into(),
            architecture: arch,
            alpha,
            model: ModelSpec::empty(),
            r2: ModeR2 {
                ten: r2,
                com: r2,
                shr: r2,
            },
            nonzero_terms: terms,
            polyconvexity: vec![],
            loss_trace: vec![],
        }
    }

    #[test]
    fn selection_rules() {
        let one = vec![report(Architecture::Si, 0.0, 4, 0.9)];
        assert_eq!(select_model(&one, 0.02).unwrap().report, one[0]);

        let tie = vec![
            report(Architecture::SiMi, 1.0, 3, 0.95),
            report(Architecture::SiPs, 1.0, 3, 0.99),
        ];
        assert_eq!(select_model(&tie, 0.02).unwrap().report.r2.ten, 0.99);

        let grid = vec![
            report(Architecture::Si, 0.0, 6, 0.5),
            report(Architecture::Si, 1.0, 2, 0.2),
            report(Architecture::SiMi, 0.0, 7, 0.99),
            report(Architecture::SiMi, 1.0, 3, 0.98),
            report(Architecture::SiPs, 0.0, 6, 0.99),
            report(Architecture::SiPs, 1.0, 3, 0.97),
        ];
        let s = select_model(&grid, 0.02).unwrap();
        assert!(!s.fallback);
        assert_eq!(
            (s.report.architecture, s.report.nonzero_terms),
            (Architecture::SiMi, 3)
        );
        let mut rev = grid.clone();
        rev.reverse();
        assert_eq!(select_model(&rev, 0.02).unwrap(), s);
    }

    #[test]
    fn report_csv_round_trip() {
        let rows: Vec<ReportRow> = [report(Architecture::SiPs, 1.0, 3, 0.938)]
            .iter()
            .map(ReportRow::from)
            .collect();
        let text = report_csv(&rows);
        assert!(text.starts_with("label,architecture,alpha,nonzero_terms,r2_ten,r2_com,r2_shr\n"));
        assert_eq!(parse_report_csv(&text).unwrap(), rows);
        assert!(parse_report_csv(&report_csv(&[])).unwrap().is_empty());
    }
}
