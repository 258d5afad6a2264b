//! Text formats: curve CSV (`x,y[,y_std]`), raw recording CSV
//! (`t,signal,displacement`), key=value manifests for geometry and datasets.
//!
//! Parsers take `&str` so they can be driven directly by fuzzers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use super::{builtin_dataset, Curve, FoamDataset, Geometry, RawRecording, BUILTIN_NAMES};
use crate::error::{Error, Result};
use crate::kinematics::LoadingMode;

fn reader(text: &str) -> ::csv::Reader<&[u8]> {
    ::csv::ReaderBuilder::new()
        .trim(::csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
}

fn header(rdr: &mut ::csv::Reader<&[u8]>) -> Result<Vec<String>> {
    let h = rdr.headers().map_err(|e| Error::parse(e.to_string()))?;
    Ok(h.iter().map(|s| s.to_ascii_lowercase()).collect())
}

fn number(field: &str, row: usize, col: &str) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(format!("row {row}: {col} = '{field}' is not a number")))?;
    if !v.is_finite() {
        return Err(Error::parse(format!("row {row}: {col} is not finite")));
    }
    Ok(v)
}

/// Reads numeric columns in the order given by `cols`; `optional` trailing
/// columns may be absent from the header.
fn columns(text: &str, cols: &[&str], required: usize) -> Result<Vec<Vec<f64>>> {
    let mut rdr = reader(text);
    let head = header(&mut rdr)?;
    let present = head.len();
    if present < required || present > cols.len() || head.iter().zip(cols).any(|(h, c)| h != c) {
        return Err(Error::parse(format!(
            "expected header '{}', found '{}'",
            cols[..required.max(present.min(cols.len()))].join(","),
            head.join(",")
        )));
    }
    let mut out = vec![Vec::new(); present];
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::parse(e.to_string()))?;
        let row = i + 2;
        if rec.len() != present {
            return Err(Error::parse(format!(
                "row {row}: expected {present} fields, found {}",
                rec.len()
            )));
        }
        for (j, field) in rec.iter().enumerate() {
            out[j].push(number(field, row, cols[j])?);
        }
    }
    if out[0].is_empty() {
        return Err(Error::parse("no data rows"));
    }
    Ok(out)
}

pub fn parse_curve_csv(text: &str) -> Result<Curve> {
    let mut cols = columns(text, &["x", "y", "y_std"], 2)?;
    let std = if cols.len() == 3 { cols.pop() } else { None };
    let y = cols.pop().unwrap();
    let x = cols.pop().unwrap();
    match std {
        Some(s) => Curve::with_std(x, y, s),
        None => Curve::new(x, y),
    }
}

pub fn write_curve_csv(curve: &Curve) -> String {
    let mut out = String::new();
    match &curve.y_std {
        Some(s) => {
            out.push_str("x,y,y_std\n");
            for i in 0..curve.len() {
                out.push_str(&format!("{},{},{}\n", curve.x[i], curve.y[i], s[i]));
            }
        }
        None => {
            out.push_str("x,y\n");
            for i in 0..curve.len() {
                out.push_str(&format!("{},{}\n", curve.x[i], curve.y[i]));
            }
        }
    }
    out
}

/// `(t, signal, displacement)` columns of a raw recording.
pub fn parse_recording_columns(text: &str) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let mut cols = columns(text, &["t", "signal", "displacement"], 3)?;
    let d = cols.pop().unwrap();
    let s = cols.pop().unwrap();
    Ok((cols.pop().unwrap(), s, d))
}

pub fn parse_recording(text: &str, geometry: Geometry) -> Result<RawRecording> {
    let (t, s, d) = parse_recording_columns(text)?;
    RawRecording::new(geometry, t, s, d)
}

/// `key=value` lines; blank lines and `#` comments are skipped. Keys are
/// case-sensitive and may not repeat.
pub fn parse_manifest(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("line {}: expected key=value", i + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(Error::parse(format!("line {}: empty key", i + 1)));
        }
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::parse(format!("line {}: duplicate key '{k}'", i + 1)));
        }
    }
    Ok(map)
}

/// Geometry manifest with keys `A`, `L` (tension), `A`, `H` (compression) or
/// `R`, `H` (shear).
pub fn parse_geometry(text: &str, mode: LoadingMode) -> Result<Geometry> {
    let map = parse_manifest(text)?;
    let get = |key: &str| -> Result<f64> {
        let v = map
            .get(key)
            .ok_or_else(|| Error::parse(format!("geometry for {} needs '{key}'", mode.name())))?;
        number(v, 0, key)
    };
    let g = match mode {
        LoadingMode::UniaxialTension => Geometry::Tension {
            area: get("A")?,
            gauge_length: get("L")?,
        },
        LoadingMode::UniaxialCompression => Geometry::Compression {
            area: get("A")?,
            height: get("H")?,
        },
        LoadingMode::SimpleShear => Geometry::Shear {
            radius: get("R")?,
            height: get("H")?,
        },
    };
    g.check()?;
    Ok(g)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

const FILE_NAMES: [(LoadingMode, &str); 3] = [
    (LoadingMode::UniaxialTension, "tension.csv"),
    (LoadingMode::UniaxialCompression, "compression.csv"),
    (LoadingMode::SimpleShear, "shear.csv"),
];

fn manifest_key(mode: LoadingMode) -> &'static str {
    match mode {
        LoadingMode::UniaxialTension => "tension",
        LoadingMode::UniaxialCompression => "compression",
        LoadingMode::SimpleShear => "shear",
    }
}

/// Loads a dataset from a built-in name, a directory holding `tension.csv`,
/// `compression.csv` and `shear.csv` (plus an optional `dataset.txt`
/// manifest), or a manifest file naming the three curve files.
pub fn load_dataset(source: &str) -> Result<FoamDataset> {
    if BUILTIN_NAMES.contains(&source.to_ascii_lowercase().as_str()) {
        return builtin_dataset(source);
    }
    let path = Path::new(source);
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    let (dir, manifest) = if meta.is_dir() {
        let m = path.join("dataset.txt");
        let map = if m.exists() {
            parse_manifest(&read(&m)?)?
        } else {
            BTreeMap::new()
        };
        (path.to_path_buf(), map)
    } else {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (dir, parse_manifest(&read(path)?)?)
    };
    let label = manifest.get("label").cloned().unwrap_or_else(|| {
        let base = if meta.is_dir() {
            path.to_path_buf()
        } else {
            path.with_extension("")
        };
        base.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into())
    });
    let mut curves = Vec::with_capacity(3);
    for (mode, default) in FILE_NAMES {
        let file: PathBuf = match manifest.get(manifest_key(mode)) {
            Some(rel) => dir.join(rel),
            None => dir.join(default),
        };
        let curve = parse_curve_csv(&read(&file)?)
            .map_err(|e| Error::parse(format!("{}: {e}", file.display())))?;
        curves.push(curve);
    }
    let shear = curves.pop().unwrap();
    let compression = curves.pop().unwrap();
    let tension = curves.pop().unwrap();
    Ok(FoamDataset {
        label,
        tension,
        compression,
        shear,
    })
}

/// Writes the three curve files and a `dataset.txt` manifest into `dir`.
pub fn write_dataset(dataset: &FoamDataset, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut manifest = format!("label={}\n", dataset.label);
    for (mode, name) in FILE_NAMES {
        let p = dir.join(name);
        fs::write(&p, write_curve_csv(dataset.curve(mode))).map_err(|e| Error::io(&p, e))?;
        manifest.push_str(&format!("{}={name}\n", manifest_key(mode)));
    }
    let m = dir.join("dataset.txt");
    fs::write(&m, manifest).map_err(|e| Error::io(&m, e))
}
