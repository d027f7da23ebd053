//! CSV and JSON artifacts: field grids, profiles, masks, traces, error
//! surfaces, measurement files and the run manifest.
//!
//! Numbers are written with 9 significant digits in scientific notation,
//! `.` decimal separator, LF line endings.

use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::em::CurrentSheet;
use crate::error::{Error, Result};
use crate::estimator::{Estimate, EstimationResult, MeasurementSet, SweepGrid};
use crate::geometry::Vec3;
use crate::po::{ProfileImage, PsfGrid};
use crate::reflectarray::PhaseMask;

/// `x` with 9 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.8e}")
}

/// In-memory CSV table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, values: &[f64]) {
        self.rows.push(values.iter().map(|&v| num(v)).collect());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
    }
}

/// `x_mm,y_mm,z_mm,dx_mm,dy_mm,dz_mm,magnitude`, x fastest.
pub fn psf_table(psf: &PsfGrid) -> Table {
    let mut t = Table::new(&["x_mm", "y_mm", "z_mm", "dx_mm", "dy_mm", "dz_mm", "magnitude"]);
    let [nx, ny, nz] = psf.dims();
    for iz in 0..nz {
        for iy in 0..ny {
            for ix in 0..nx {
                let (dx, dy, dz) = (psf.offsets[0][ix], psf.offsets[1][iy], psf.offsets[2][iz]);
                t.push_nums(&[
                    psf.focus.x + dx,
                    psf.focus.y + dy,
                    psf.focus.z + dz,
                    dx,
                    dy,
                    dz,
                    psf.get(ix, iy, iz),
                ]);
            }
        }
    }
    t
}

pub fn profile_table(profile: &ProfileImage) -> Table {
    let mut t = Table::new(&["x_mm", "y_mm", "z_imaging_mm", "peak"]);
    for p in &profile.pixels {
        t.push_nums(&[p.x, p.y, p.z_imaging, p.peak]);
    }
    t
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileMetadata {
    pub z_start_mm: f64,
    pub z_end_mm: f64,
    pub dz_mm: f64,
    pub k_order: usize,
    pub pixels: usize,
    pub center: [f64; 3],
}

pub fn profile_metadata(profile: &ProfileImage) -> Result<ProfileMetadata> {
    let c = profile.center_pixel()?;
    Ok(ProfileMetadata {
        z_start_mm: profile.z_start,
        z_end_mm: profile.z_end,
        dz_mm: profile.dz,
        k_order: profile.k_order,
        pixels: profile.pixels.len(),
        center: [c.x, c.y, c.z_imaging],
    })
}

/// `feed,patch,bit` for each mask.
pub fn mask_table(masks: &[PhaseMask]) -> Table {
    let mut t = Table::new(&["feed", "patch", "bit"]);
    for m in masks {
        for (i, &b) in m.bits.iter().enumerate() {
            t.rows.push(vec![m.feed.to_string(), i.to_string(), u8::from(b).to_string()]);
        }
    }
    t
}

/// `x_mm,y_mm,z_mm,re,im,magnitude,phase_deg`.
pub fn trace_table(points: &[Vec3], values: &[Complex64]) -> Result<Table> {
    if points.len() != values.len() {
        return Err(Error::LengthMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let mut t = Table::new(&["x_mm", "y_mm", "z_mm", "re", "im", "magnitude", "phase_deg"]);
    for (p, v) in points.iter().zip(values) {
        t.push_nums(&[p.x, p.y, p.z, v.re, v.im, v.norm(), v.arg().to_degrees()]);
    }
    Ok(t)
}

/// `eps_real,eps_imag,T_mm,f` in the surface's flat order.
pub fn error_surface_table(result: &EstimationResult) -> Table {
    let mut t = Table::new(&["eps_real", "eps_imag", "T_mm", "f"]);
    let n = &result.nodes;
    for it in 0..n.thickness.len() {
        for ir in 0..n.eps_real.len() {
            for ii in 0..n.eps_imag.len() {
                t.push_nums(&[n.eps_real[ir], n.eps_imag[ii], n.thickness[it], result.error_at(it, ir, ii)]);
            }
        }
    }
    t
}

/// Per-facet dump of a current sheet.
pub fn current_table(sheet: &CurrentSheet) -> Table {
    let mut t = Table::new(&[
        "cx_mm", "cy_mm", "cz_mm", "area_mm2", "jx_re", "jx_im", "jy_re", "jy_im", "jz_re", "jz_im", "mx_re",
        "mx_im", "my_re", "my_im", "mz_re", "mz_im",
    ]);
    for i in 0..sheet.centroids.len() {
        let c = sheet.centroids[i];
        let (j, m) = (sheet.j[i], sheet.m[i]);
        t.push_nums(&[
            c.x,
            c.y,
            c.z,
            sheet.areas[i],
            j.x.re,
            j.x.im,
            j.y.re,
            j.y.im,
            j.z.re,
            j.z.im,
            m.x.re,
            m.x.im,
            m.y.re,
            m.y.im,
            m.z.re,
            m.z.im,
        ]);
    }
    t
}

/// Measurement file: header `x_mm,y_mm,z_mm,re,im`, one row per focus
/// point and exactly one row whose first field is `cal` holding the
/// calibration amplitude in `re,im`.
pub fn measurement_table(meas: &MeasurementSet) -> Table {
    let mut t = Table::new(&MEAS_HEADER);
    for (p, v) in meas.points.iter().zip(&meas.values) {
        t.push_nums(&[p.x, p.y, p.z, v.re, v.im]);
    }
    let c = meas.calibration;
    t.rows.push(vec!["cal".into(), String::new(), String::new(), num(c.re), num(c.im)]);
    t
}

const MEAS_HEADER: [&str; 5] = ["x_mm", "y_mm", "z_mm", "re", "im"];

pub fn parse_measurements(text: &str) -> Result<MeasurementSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(csv_error)?,
        None => return Err(parse(1, "empty file")),
    };
    if header.iter().ne(MEAS_HEADER.iter().copied()) {
        return Err(parse(1, format!("expected header {}", MEAS_HEADER.join(","))));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    let mut calibration = None;
    let mut last_line = 1;
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        last_line = line;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        if rec.len() != MEAS_HEADER.len() {
            return Err(parse(line, format!("expected {} fields, got {}", MEAS_HEADER.len(), rec.len())));
        }
        let field = |i: usize| -> Result<f64> {
            let s = &rec[i];
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(parse(line, format!("column {} ({}): not a finite number: {s:?}", i + 1, MEAS_HEADER[i]))),
            }
        };
        let v = Complex64::new(field(3)?, field(4)?);
        if &rec[0] == "cal" {
            if calibration.is_some() {
                return Err(parse(line, "duplicate cal row"));
            }
            calibration = Some(v);
        } else {
            points.push(Vec3::new(field(0)?, field(1)?, field(2)?));
            values.push(v);
        }
    }
    let calibration = calibration.ok_or_else(|| parse(last_line, "missing cal row"))?;
    MeasurementSet::new(points, values, calibration)
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    parse_measurements(&fs::read_to_string(path)?)
}

fn parse(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    parse(line, e.to_string())
}

/// Estimation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultReport {
    pub estimate: Estimate,
    pub min_error: f64,
    pub grid_spec: SweepGrid,
    pub runtime_ms: u64,
}

// ---------------------------------------------------------------------------
// Output directory and manifest

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<String>,
    pub out_dir: String,
    pub overrides: BTreeMap<String, String>,
    pub scene_hash: String,
    pub tool_version: String,
    pub files: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Writes files into one directory and records them for the manifest.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    files: Vec<ManifestEntry>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Self {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn path(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<()> {
        write_atomic(&self.root.join(name), contents)?;
        self.files.retain(|f| f.file != name);
        self.files.push(ManifestEntry {
            file: name.to_string(),
            sha256: sha256_hex(contents),
            bytes: contents.len() as u64,
        });
        Ok(())
    }

    pub fn write_table(&mut self, name: &str, table: &Table) -> Result<()> {
        self.write(name, table.to_csv().as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut s = serde_json::to_string_pretty(value)?;
        s.push('\n');
        self.write(name, s.as_bytes())
    }

    /// Writes `manifest.json` listing every file written so far.
    pub fn finish(self, mut manifest: RunManifest) -> Result<RunManifest> {
        let mut files = self.files;
        files.sort_by(|a, b| a.file.cmp(&b.file));
        manifest.files = files;
        let mut s = serde_json::to_string_pretty(&manifest)?;
        s.push('\n');
        write_atomic(&self.root.join(MANIFEST_FILE), s.as_bytes())?;
        Ok(manifest)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path)?;
    let mut h = Sha256::new();
    let mut buf = [0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
