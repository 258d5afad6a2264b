//! Reduction of raw instrument recordings to stretch–stress curves, cycle
//! averaging, linear stiffness and energy return.
//!
//! Units: forces in N, lengths in mm, torques in N·mm, angles in rad. Stresses
//! leave this module in kPa (1 N/mm² = 1000 kPa).

mod builtin;
pub mod csv;

pub use builtin::{builtin_dataset, BUILTIN_NAMES};

use crate::error::{Error, Result};
use crate::kinematics::LoadingMode;

const MPA_TO_KPA: f64 = 1000.0;

/// Number of points on the common grid used by [`cycle_average`].
pub const AVERAGE_GRID_POINTS: usize = 200;

/// A monotone stretch–stress (or shear strain–stress) curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub x: Vec<f64>,
    /// Piola stress, kPa.
    pub y: Vec<f64>,
    pub y_std: Option<Vec<f64>>,
}

impl Curve {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let c = Curve { x, y, y_std: None };
        c.validate()?;
        Ok(c)
    }

    pub fn with_std(x: Vec<f64>, y: Vec<f64>, y_std: Vec<f64>) -> Result<Self> {
        let c = Curve {
            x,
            y,
            y_std: Some(y_std),
        };
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        if self.x.is_empty() {
            return Err(Error::domain("curve has no points"));
        }
        if self.x.len() != self.y.len() {
            return Err(Error::domain(format!(
                "curve has {} x values but {} y values",
                self.x.len(),
                self.y.len()
            )));
        }
        if let Some(s) = &self.y_std {
            if s.len() != self.x.len() {
                return Err(Error::domain("std column length mismatch"));
            }
            if s.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::domain(
                    "standard deviations must be finite and non-negative",
                ));
            }
        }
        if self.x.iter().chain(&self.y).any(|v| !v.is_finite()) {
            return Err(Error::domain("curve contains non-finite values"));
        }
        if self.x.len() > 1 {
            let rising = self.x[1] > self.x[0];
            let ok = self
                .x
                .windows(2)
                .all(|w| if rising { w[1] > w[0] } else { w[1] < w[0] });
            if !ok {
                return Err(Error::domain("curve x values must be strictly monotone"));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    fn range(&self) -> (f64, f64) {
        let (a, b) = (self.x[0], self.x[self.x.len() - 1]);
        (a.min(b), a.max(b))
    }

    /// Points ordered by increasing x.
    fn ascending(&self) -> (Vec<f64>, Vec<f64>) {
        if self.x.len() > 1 && self.x[1] < self.x[0] {
            (
                self.x.iter().rev().copied().collect(),
                self.y.iter().rev().copied().collect(),
            )
        } else {
            (self.x.clone(), self.y.clone())
        }
    }

    /// Linear interpolation; `x` must lie within the curve's range.
    pub fn interpolate(&self, x: f64) -> Result<f64> {
        let (xs, ys) = self.ascending();
        interp(&xs, &ys, x)
    }
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> Result<f64> {
    let n = xs.len();
    if x < xs[0] || x > xs[n - 1] {
        return Err(Error::domain(format!(
            "x = {x} outside [{}, {}]",
            xs[0],
            xs[n - 1]
        )));
    }
    if n == 1 {
        return Ok(ys[0]);
    }
    let i = match xs.partition_point(|&v| v <= x) {
        0 => 0,
        k if k >= n => n - 2,
        k => k - 1,
    };
    let t = (x - xs[i]) / (xs[i + 1] - xs[i]);
    if t == 0.0 {
        return Ok(ys[i]);
    }
    Ok(ys[i] + t * (ys[i + 1] - ys[i]))
}

/// Mean curves of one foam in the three loading modes.
#[derive(Debug, Clone, PartialEq)]
pub struct FoamDataset {
    pub label: String,
    pub tension: Curve,
    pub compression: Curve,
    pub shear: Curve,
}

impl FoamDataset {
    pub fn curve(&self, mode: LoadingMode) -> &Curve {
        match mode {
            LoadingMode::UniaxialTension => &self.tension,
            LoadingMode::UniaxialCompression => &self.compression,
            LoadingMode::SimpleShear => &self.shear,
        }
    }

    pub fn total_points(&self) -> usize {
        self.tension.len() + self.compression.len() + self.shear.len()
    }
}

/// Specimen geometry, in mm and mm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Geometry {
    /// Cross-section and clamp-to-clamp gauge length.
    Tension { area: f64, gauge_length: f64 },
    /// Cross-section and initial height.
    Compression { area: f64, height: f64 },
    /// Radius and height of the cylindrical specimen.
    Shear { radius: f64, height: f64 },
}

impl Geometry {
    pub fn mode(&self) -> LoadingMode {
        match self {
            Geometry::Tension { .. } => LoadingMode::UniaxialTension,
            Geometry::Compression { .. } => LoadingMode::UniaxialCompression,
            Geometry::Shear { .. } => LoadingMode::SimpleShear,
        }
    }

    fn check(&self) -> Result<()> {
        let dims = match *self {
            Geometry::Tension { area, gauge_length } => [area, gauge_length],
            Geometry::Compression { area, height } => [area, height],
            Geometry::Shear { radius, height } => [radius, height],
        };
        if dims.iter().all(|d| d.is_finite() && *d > 0.0) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "geometry must be strictly positive: {self:?}"
            )))
        }
    }
}

/// A time series from one test.
///
/// `signal` is force (N) or torque (N·mm); `displacement` is the crosshead
/// displacement `u` in tension, the current height `h` in compression, or the
/// twist angle `φ` (rad) in shear.
#[derive(Debug, Clone, PartialEq)]
pub struct RawRecording {
    pub geometry: Geometry,
    pub time: Vec<f64>,
    pub signal: Vec<f64>,
    pub displacement: Vec<f64>,
}

impl RawRecording {
    pub fn new(
        geometry: Geometry,
        time: Vec<f64>,
        signal: Vec<f64>,
        displacement: Vec<f64>,
    ) -> Result<Self> {
        let r = RawRecording {
            geometry,
            time,
            signal,
            displacement,
        };
        r.validate()?;
        Ok(r)
    }

    pub fn mode(&self) -> LoadingMode {
        self.geometry.mode()
    }

    fn validate(&self) -> Result<()> {
        self.geometry.check()?;
        let n = self.time.len();
        if n == 0 || self.signal.len() != n || self.displacement.len() != n {
            return Err(Error::domain(
                "recording columns must be non-empty and equally long",
            ));
        }
        if self
            .time
            .iter()
            .chain(&self.signal)
            .chain(&self.displacement)
            .any(|v| !v.is_finite())
        {
            return Err(Error::domain("recording contains non-finite values"));
        }
        if self.time.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::domain("recording time must be strictly increasing"));
        }
        Ok(())
    }
}

/// Pointwise reduced recording. Unlike [`Curve`], `x` may reverse direction
/// (one entry per sample of a cyclic test).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl Trace {
    /// Splits the trace into monotone half-cycles at every reversal of `x`.
    /// Samples where `x` does not move are dropped.
    pub fn segments(&self) -> Result<Vec<Curve>> {
        let mut out = Vec::new();
        let mut xs: Vec<f64> = Vec::new();
        let mut ys: Vec<f64> = Vec::new();
        let mut dir = 0.0f64;
        for (&x, &y) in self.x.iter().zip(&self.y) {
            if let Some(&last) = xs.last() {
                let step = x - last;
                if step == 0.0 {
                    continue;
                }
                if dir != 0.0 && step.signum() != dir {
                    let (px, py) = (last, *ys.last().unwrap());
                    out.push(Curve::new(
                        std::mem::take(&mut xs),
                        std::mem::take(&mut ys),
                    )?);
                    xs.push(px);
                    ys.push(py);
                }
                dir = step.signum();
            }
            xs.push(x);
            ys.push(y);
        }
        if xs.len() > 1 || out.is_empty() {
            out.push(Curve::new(xs, ys)?);
        }
        Ok(out)
    }

    pub fn into_curve(self) -> Result<Curve> {
        Curve::new(self.x, self.y)
    }
}

/// Tension: `λ = 1 + u/L`, `P11 = F/A`. Compression: `λ = h/H`, `P11 = F/A`.
pub fn reduce_uniaxial(rec: &RawRecording) -> Result<Trace> {
    let (area, to_stretch): (f64, Box<dyn Fn(f64) -> f64>) = match rec.geometry {
        Geometry::Tension { area, gauge_length } => {
            (area, Box::new(move |u| 1.0 + u / gauge_length))
        }
        Geometry::Compression { area, height } => (area, Box::new(move |h| h / height)),
        Geometry::Shear { .. } => {
            return Err(Error::domain(
                "reduce_uniaxial needs a tension or compression recording",
            ))
        }
    };
    rec.validate()?;
    Ok(Trace {
        x: rec.displacement.iter().map(|&d| to_stretch(d)).collect(),
        y: rec.signal.iter().map(|&f| f / area * MPA_TO_KPA).collect(),
    })
}

/// `γ = (R/H) φ`, `P12 = 2T/(πR³)`.
pub fn reduce_shear(rec: &RawRecording) -> Result<Trace> {
    let Geometry::Shear { radius, height } = rec.geometry else {
        return Err(Error::domain("reduce_shear needs a shear recording"));
    };
    rec.validate()?;
    let c = 2.0 / (std::f64::consts::PI * radius.powi(3)) * MPA_TO_KPA;
    Ok(Trace {
        x: rec
            .displacement
            .iter()
            .map(|&phi| radius / height * phi)
            .collect(),
        y: rec.signal.iter().map(|&t| c * t).collect(),
    })
}

pub fn reduce(rec: &RawRecording) -> Result<Trace> {
    match rec.mode() {
        LoadingMode::SimpleShear => reduce_shear(rec),
        _ => reduce_uniaxial(rec),
    }
}

/// Which half-cycles enter the average.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AveragingPolicy {
    /// First loading and final unloading curve.
    Tension,
    /// Everything except the first loading/unloading pair (Mullins conditioning).
    Compression,
    /// All half-cycles.
    Shear,
}

impl AveragingPolicy {
    pub fn for_mode(mode: LoadingMode) -> Self {
        match mode {
            LoadingMode::UniaxialTension => AveragingPolicy::Tension,
            LoadingMode::UniaxialCompression => AveragingPolicy::Compression,
            LoadingMode::SimpleShear => AveragingPolicy::Shear,
        }
    }

    fn reference(self) -> f64 {
        match self {
            AveragingPolicy::Shear => 0.0,
            _ => 1.0,
        }
    }
}

/// Averages half-cycles (given in recording order, loading first) on a
/// uniform grid over their common x-range and shifts the result so that the
/// stress vanishes at the reference (`λ = 1`, or `γ = 0` for shear). A
/// reference outside the common range is clamped to the nearest end.
pub fn cycle_average(curves: &[Curve], policy: AveragingPolicy) -> Result<Curve> {
    if curves.is_empty() {
        return Err(Error::domain("no cycles to average"));
    }
    let picked: Vec<&Curve> = match policy {
        AveragingPolicy::Tension => {
            let mut v = vec![&curves[0]];
            if curves.len() > 1 {
                v.push(&curves[curves.len() - 1]);
            }
            v
        }
        AveragingPolicy::Compression => {
            if curves.len() <= 2 {
                return Err(Error::domain(
                    "compression averaging drops the first cycle and needs at least one more",
                ));
            }
            curves[2..].iter().collect()
        }
        AveragingPolicy::Shear => curves.iter().collect(),
    };

    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for c in &picked {
        let (a, b) = c.range();
        lo = lo.max(a);
        hi = hi.min(b);
    }
    if !(lo < hi) {
        return Err(Error::domain(format!(
            "cycles do not overlap in x (common range [{lo}, {hi}])"
        )));
    }

    let n = AVERAGE_GRID_POINTS;
    let grid: Vec<f64> = (0..n)
        .map(|i| {
            if i == n - 1 {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect();
    let sorted: Vec<(Vec<f64>, Vec<f64>)> = picked.iter().map(|c| c.ascending()).collect();
    let mut mean = vec![0.0; n];
    for (xs, ys) in &sorted {
        for (m, &g) in mean.iter_mut().zip(&grid) {
            *m += interp(xs, ys, g)?;
        }
    }
    let k = sorted.len() as f64;
    for m in &mut mean {
        *m /= k;
    }
    let reference = policy.reference().clamp(lo, hi);
    let offset = interp(&grid, &mean, reference)?;
    for m in &mut mean {
        *m -= offset;
    }
    Curve::new(grid, mean)
}

/// Zero-intercept least-squares slope `ε·σ / ε·ε` over points with
/// `0 < |strain| <= cap`. Strain is `λ − 1` for uniaxial curves and `γ` for
/// shear, so a compressive curve with negative stresses yields a positive
/// modulus.
pub fn linear_stiffness(curve: &Curve, mode: LoadingMode, strain_cap: f64) -> Result<f64> {
    let tol = 1e-12;
    let (mut num, mut den) = (0.0, 0.0);
    for (&x, &y) in curve.x.iter().zip(&curve.y) {
        let eps = if mode.is_uniaxial() { x - 1.0 } else { x };
        let mag = eps.abs();
        if mag > 0.0 && mag <= strain_cap + tol {
            num += eps * y;
            den += eps * eps;
        }
    }
    if den == 0.0 {
        return Err(Error::domain(format!(
            "no points with 0 < strain <= {strain_cap}"
        )));
    }
    Ok(num / den)
}

fn trapezoid_area(c: &Curve) -> f64 {
    c.x.windows(2)
        .zip(c.y.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum::<f64>()
        .abs()
}

/// Relative energy return `η = E_unload / E_load` from trapezoid areas.
pub fn energy_return(loading: &Curve, unloading: &Curve) -> Result<f64> {
    let (a0, a1) = loading.range();
    let (b0, b1) = unloading.range();
    let scale = (a1 - a0).abs().max(1e-300);
    if (a0 - b0).abs() > 1e-9 * scale || (a1 - b1).abs() > 1e-9 * scale {
        return Err(Error::domain(format!(
            "loading [{a0}, {a1}] and unloading [{b0}, {b1}] cover different ranges"
        )));
    }
    let load = trapezoid_area(loading);
    if load == 0.0 {
        return Err(Error::domain("loading curve encloses no area"));
    }
    Ok(trapezoid_area(unloading) / load)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tension_geometry() -> Geometry {
        Geometry::Tension {
            area: 50.0,
            gauge_length: 20.0,
        }
    }

    #[test]
    fn uniaxial_reduction() {
        let rec = RawRecording::new(
            tension_geometry(),
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.0, 6.0],
        )
        .unwrap();
        let tr = reduce_uniaxial(&rec).unwrap();
        assert_eq!(tr.x, vec![1.0, 1.3]);
        assert_eq!(tr.y[0], 0.0);
        assert!((tr.y[1] - 20.0).abs() < 1e-12);

        let rec = RawRecording::new(
            Geometry::Compression {
                area: 50.27,
                height: 10.0,
            },
            vec![0.0],
            vec![-1.5],
            vec![4.0],
        )
        .unwrap();
        let tr = reduce_uniaxial(&rec).unwrap();
        assert_eq!(tr.x, vec![0.4]);
        assert!((tr.y[0] + 29.84).abs() < 5e-3, "{}", tr.y[0]);
    }

    #[test]
    fn bad_geometry() {
        let g = Geometry::Tension {
            area: 0.0,
            gauge_length: 20.0,
        };
        assert!(RawRecording::new(g, vec![0.0], vec![0.0], vec![0.0]).is_err());
        let g = Geometry::Shear {
            radius: -4.0,
            height: 10.0,
        };
        assert!(RawRecording::new(g, vec![0.0], vec![0.0], vec![0.0]).is_err());
    }

    #[test]
    fn shear_reduction() {
        let g = Geometry::Shear {
            radius: 4.0,
            height: 10.0,
        };
        let rec = RawRecording::new(g, vec![0.0, 1.0], vec![0.02, 1.0], vec![0.0, 0.5]).unwrap();
        let tr = reduce_shear(&rec).unwrap();
        assert_eq!(tr.x[0], 0.0);
        assert!((tr.y[0] - 0.02 * 2.0 / (std::f64::consts::PI * 64.0) * 1000.0).abs() < 1e-12);
        assert!((tr.x[1] - 0.2).abs() < 1e-15);
        assert!((tr.y[1] - 9.947).abs() < 1e-3);
        assert!(reduce_uniaxial(&rec).is_err());
    }

    #[test]
    fn segments_split_at_reversals() {
        let tr = Trace {
            x: vec![1.0, 1.1, 1.2, 1.2, 1.1, 1.0, 1.1],
            y: vec![0.0, 1.0, 2.0, 2.0, 0.8, 0.0, 0.9],
        };
        let seg = tr.segments().unwrap();
        assert_eq!(seg.len(), 3);
        assert_eq!(seg[0].x, vec![1.0, 1.1, 1.2]);
        assert_eq!(seg[1].x, vec![1.2, 1.1, 1.0]);
        assert_eq!(seg[2].x, vec![1.0, 1.1]);
    }

    #[test]
    fn average_of_two_lines() {
        let xs: Vec<f64> = (0..=30).map(|i| 1.0 + 0.01 * i as f64).collect();
        let load = Curve::new(xs.clone(), xs.iter().map(|x| x - 1.0).collect()).unwrap();
        let unload = Curve::new(
            xs.iter().rev().copied().collect(),
            xs.iter().rev().map(|x| 1.2 * (x - 1.0)).collect(),
        )
        .unwrap();
        let avg = cycle_average(&[load, unload], AveragingPolicy::Tension).unwrap();
        assert_eq!(avg.len(), AVERAGE_GRID_POINTS);
        assert_eq!(avg.y[0], 0.0);
        for (x, y) in avg.x.iter().zip(&avg.y) {
            assert!((y - 1.1 * (x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn non_overlapping_cycles() {
        let a = Curve::new(vec![1.0, 1.1], vec![0.0, 1.0]).unwrap();
        let b = Curve::new(vec![1.2, 1.3], vec![0.0, 1.0]).unwrap();
        assert!(cycle_average(&[a, b], AveragingPolicy::Tension).is_err());
    }

    #[test]
    fn compression_needs_more_than_one_cycle() {
        let a = Curve::new(vec![1.0, 0.5], vec![0.0, -1.0]).unwrap();
        let b = Curve::new(vec![0.5, 1.0], vec![-1.0, 0.0]).unwrap();
        assert!(cycle_average(&[a, b], AveragingPolicy::Compression).is_err());
    }

    #[test]
    fn stiffness() {
        let c = Curve::new(vec![0.0, 0.1], vec![0.0, 50.0]).unwrap();
        assert!(
            (linear_stiffness(&c, LoadingMode::SimpleShear, 0.10).unwrap() - 500.0).abs() < 1e-9
        );
        let c = Curve::new(vec![1.0, 1.2], vec![0.0, 50.0]).unwrap();
        assert!(linear_stiffness(&c, LoadingMode::UniaxialTension, 0.10).is_err());
    }

    #[test]
    fn energy_return_of_identical_curves() {
        let c = Curve::new(vec![0.0, 0.5, 1.0], vec![0.0, 0.3, 1.0]).unwrap();
        assert_eq!(energy_return(&c, &c).unwrap(), 1.0);
        let flat = Curve::new(vec![0.0, 1.0], vec![0.0, 0.0]).unwrap();
        assert!(energy_return(&flat, &c).is_err());
        let short = Curve::new(vec![0.0, 0.5], vec![0.0, 0.3]).unwrap();
        assert!(energy_return(&c, &short).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(Curve::new(vec![], vec![]).is_err());
        assert!(Curve::new(vec![1.0, 1.0], vec![0.0, 1.0]).is_err());
        assert!(Curve::new(vec![1.0, 1.1, 1.05], vec![0.0, 1.0, 2.0]).is_err());
        assert!(Curve::new(vec![1.0, 0.9], vec![0.0, f64::NAN]).is_err());
        assert!(Curve::with_std(vec![1.0, 0.9], vec![0.0, 1.0], vec![0.0]).is_err());
    }
}
