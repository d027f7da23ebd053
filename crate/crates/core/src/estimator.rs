//! Grid-search inversion of slab permittivity and thickness from focused
//! received amplitudes.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::go::{GoModel, SlabReflection};
use crate::po::{PoImager, ProfileImage};
use crate::reflectarray::{z_samples, FocusGrid};
use crate::scene::{ComplexPermittivity, Scene};

/// Inclusive sweep `start, start + step, …, end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRange {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl SweepRange {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        let r = Self { start, end, step };
        r.values()?;
        Ok(r)
    }

    /// Nodes of the sweep; node `i` is computed as `start + i·step`.
    pub fn values(&self) -> Result<Vec<f64>> {
        z_samples(self.start, self.end, self.step)
    }

    pub fn halved(&self) -> Self {
        Self {
            step: 0.5 * self.step,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepGrid {
    pub eps_real: SweepRange,
    pub eps_imag: SweepRange,
    pub thickness: SweepRange,
}

impl Default for SweepGrid {
    /// ε′ 2–10 step 0.25, ε″ 0–0.5 step 0.05, T 0–60 mm step 1 mm.
    fn default() -> Self {
        Self {
            eps_real: SweepRange {
                start: 2.0,
                end: 10.0,
                step: 0.25,
            },
            eps_imag: SweepRange {
                start: 0.0,
                end: 0.5,
                step: 0.05,
            },
            thickness: SweepRange {
                start: 0.0,
                end: 60.0,
                step: 1.0,
            },
        }
    }
}

/// Node values of a grid, axis by axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridNodes {
    pub eps_real: Vec<f64>,
    pub eps_imag: Vec<f64>,
    pub thickness: Vec<f64>,
}

impl GridNodes {
    pub fn len(&self) -> usize {
        self.eps_real.len() * self.eps_imag.len() * self.thickness.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `(it, ir, ii)`: thickness-major, then ε′, then ε″.
    pub fn index(&self, it: usize, ir: usize, ii: usize) -> usize {
        (it * self.eps_real.len() + ir) * self.eps_imag.len() + ii
    }

    pub fn unflatten(&self, flat: usize) -> (usize, usize, usize) {
        let ni = self.eps_imag.len();
        let nr = self.eps_real.len();
        (flat / (nr * ni), (flat / ni) % nr, flat % ni)
    }
}

impl SweepGrid {
    pub fn new(eps_real: SweepRange, eps_imag: SweepRange, thickness: SweepRange) -> Result<Self> {
        let g = Self {
            eps_real,
            eps_imag,
            thickness,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes()?;
        if n.eps_real[0] < 1.0 || n.eps_imag[0] < 0.0 || n.thickness[0] < 0.0 {
            return Err(Error::InvalidConfig(
                "sweep needs eps_real >= 1, eps_imag >= 0 and thickness >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Result<GridNodes> {
        Ok(GridNodes {
            eps_real: self.eps_real.values()?,
            eps_imag: self.eps_imag.values()?,
            thickness: self.thickness.values()?,
        })
    }

    /// Same ranges with every step halved.
    pub fn refined(&self) -> Self {
        Self {
            eps_real: self.eps_real.halved(),
            eps_imag: self.eps_imag.halved(),
            thickness: self.thickness.halved(),
        }
    }
}

/// Received amplitudes at the focus points plus the calibration amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    pub points: Vec<Vec3>,
    pub values: Vec<Complex64>,
    pub calibration: Complex64,
}

impl MeasurementSet {
    pub fn new(points: Vec<Vec3>, values: Vec<Complex64>, calibration: Complex64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidFocusCount(0));
        }
        if points.len() != values.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                got: values.len(),
            });
        }
        if calibration.norm() == 0.0 || !calibration.is_finite() {
            return Err(Error::ZeroCalibration);
        }
        Ok(Self {
            points,
            values,
            calibration,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Every amplitude, calibration included, multiplied by `alpha`.
    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            points: self.points.clone(),
            values: self.values.iter().map(|v| v * alpha).collect(),
            calibration: self.calibration * alpha,
        }
    }

    /// Copy with additive circular complex Gaussian noise on every focus
    /// amplitude, `σ² = |E_n|² / 10^{snr/10}`. The calibration stays exact.
    pub fn with_noise(&self, snr_db: f64, rng: &mut ChaCha8Rng) -> Self {
        let values = self
            .values
            .iter()
            .map(|v| {
                let sigma = v.norm() / 10f64.powf(snr_db / 20.0);
                match Normal::new(0.0, sigma / std::f64::consts::SQRT_2) {
                    Ok(d) => v + Complex64::new(d.sample(rng), d.sample(rng)),
                    Err(_) => *v,
                }
            })
            .collect();
        Self {
            points: self.points.clone(),
            values,
            calibration: self.calibration,
        }
    }
}

/// `Σ |Ẽ_n/Ẽ_0 − E_n/E_0|`.
pub fn error_function(pred: &[Complex64], pred_cal: Complex64, meas: &MeasurementSet) -> Result<f64> {
    if pred.len() != meas.len() {
        return Err(Error::LengthMismatch {
            expected: meas.len(),
            got: pred.len(),
        });
    }
    if pred_cal.norm() == 0.0 || meas.calibration.norm() == 0.0 {
        return Err(Error::ZeroCalibration);
    }
    Ok(pred
        .iter()
        .zip(&meas.values)
        .map(|(p, m)| (p / pred_cal - m / meas.calibration).norm())
        .sum())
}

/// `z_c + Δz (n − (N+1)/2)` for `n = 1 … N`, `N` odd.
pub fn focus_stencil(center: Vec3, count: usize, dz: f64) -> Result<Vec<Vec3>> {
    if count == 0 || count % 2 == 0 {
        return Err(Error::InvalidFocusCount(count));
    }
    if !(dz > 0.0) {
        return Err(Error::NonPositive { what: "dz", value: dz });
    }
    let half = (count as i64 - 1) / 2;
    Ok((-half..=half)
        .map(|i| center + Vec3::new(0.0, 0.0, dz * i as f64))
        .collect())
}

/// Focus points centred on the imaged profile centre.
pub fn select_focus_points(profile: &ProfileImage, count: usize, dz: f64) -> Result<FocusGrid> {
    let c = profile.center_pixel()?;
    Ok(FocusGrid {
        points: focus_stencil(Vec3::new(c.x, c.y, c.z_imaging), count, dz)?,
    })
}

/// GO predictions for every grid node at a fixed set of focus points,
/// plus the predicted calibration amplitude.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    pub grid: SweepGrid,
    pub nodes: GridNodes,
    pub points: Vec<Vec3>,
    /// `values[node * N + n]` with `node` from [`GridNodes::index`].
    pub values: Vec<Complex64>,
    pub calibration: Complex64,
}

/// Rays for one focus point across all thickness nodes. Incidence angles do
/// not depend on where the slab front sits, only the amplitudes and which
/// rays return do.
struct FocusRays {
    sin2: Vec<f64>,
    w_te: Vec<f64>,
    /// `amplitude[ray * nt + it]`, `None` where the ray misses.
    amplitude: Vec<Option<Complex64>>,
    /// Rays that return for at least one thickness.
    active: Vec<bool>,
}

impl FocusRays {
    fn trace(model: &GoModel, focus: Vec3, thickness: &[f64]) -> Self {
        let masks = model.masks(focus);
        let total: usize = model.scene().faras.iter().map(|f| f.array.patches.len()).sum();
        let mut sin2 = vec![0.0; total];
        let mut w_te = vec![0.0; total];
        let nt = thickness.len();
        let mut amplitude = vec![None; total * nt];
        let mut active = vec![false; total];
        for (it, &t) in thickness.iter().enumerate() {
            let set = model.rays_with_masks(focus, model.front_z(t), &masks);
            for term in &set.terms {
                sin2[term.ray] = term.sin2;
                w_te[term.ray] = term.w_te;
                amplitude[term.ray * nt + it] = Some(term.amplitude);
                active[term.ray] = true;
            }
        }
        Self {
            sin2,
            w_te,
            amplitude,
            active,
        }
    }

    /// Writes `Σ A (w_TE Γ_TE + w_TM Γ_TM)` for every thickness node into
    /// `out`, summing rays in trace order.
    fn accumulate(&self, model: &GoModel, eps: ComplexPermittivity, thickness: &[f64], out: &mut [Complex64]) {
        let k0 = model.k0();
        out.fill(Complex64::new(0.0, 0.0));
        let step = thickness.get(1).map(|t1| t1 - thickness[0]);
        for r in 0..self.sin2.len() {
            if !self.active[r] {
                continue;
            }
            let slab = SlabReflection::new(eps, model.air_gap, self.sin2[r], k0);
            let w = self.w_te[r];
            let advance = step.map(|s| slab.phase(s, k0));
            let mut e = slab.phase(thickness[0], k0);
            let amps = &self.amplitude[r * out.len()..(r + 1) * out.len()];
            for (acc, amp) in out.iter_mut().zip(amps) {
                if let Some(a) = *amp {
                    let [te, tm] = slab.with_phase(e);
                    let g = if w >= 1.0 {
                        te
                    } else if w <= 0.0 {
                        tm
                    } else {
                        te * w + tm * (1.0 - w)
                    };
                    *acc += a * g;
                }
                if let Some(a) = advance {
                    e *= a;
                }
            }
        }
    }
}

impl PredictionTable {
    /// Ray sets are traced once per (thickness, focus point); only the
    /// reflection coefficients change across (ε′, ε″).
    pub fn build(model: &GoModel, points: &[Vec3], grid: &SweepGrid) -> Result<Self> {
        grid.validate()?;
        if points.is_empty() {
            return Err(Error::InvalidFocusCount(0));
        }
        let nodes = grid.nodes()?;
        let (nt, ni) = (nodes.thickness.len(), nodes.eps_imag.len());
        let n = points.len();
        let mut values = vec![Complex64::new(0.0, 0.0); nodes.len() * n];
        for (ip, &focus) in points.iter().enumerate() {
            let rays = FocusRays::trace(model, focus, &nodes.thickness);
            let rows: Vec<Vec<Complex64>> = nodes
                .eps_real
                .par_iter()
                .map(|&er| {
                    let mut row = vec![Complex64::new(0.0, 0.0); ni * nt];
                    for (ii, &ei) in nodes.eps_imag.iter().enumerate() {
                        let eps = ComplexPermittivity { eps_real: er, eps_imag: ei };
                        rays.accumulate(model, eps, &nodes.thickness, &mut row[ii * nt..(ii + 1) * nt]);
                    }
                    row
                })
                .collect();
            for (ir, row) in rows.iter().enumerate() {
                for ii in 0..ni {
                    for it in 0..nt {
                        values[nodes.index(it, ir, ii) * n + ip] = row[ii * nt + it];
                    }
                }
            }
        }
        let calibration = {
            let c = points[0];
            model.calibration(c.x, c.y)
        };
        if calibration.norm() == 0.0 {
            return Err(Error::ZeroCalibration);
        }
        Ok(Self {
            grid: *grid,
            nodes,
            points: points.to_vec(),
            values,
            calibration,
        })
    }

    pub fn prediction(&self, node: usize) -> &[Complex64] {
        let n = self.points.len();
        &self.values[node * n..(node + 1) * n]
    }

    /// Noise-free measurement set equal to the prediction at `node`.
    pub fn synthetic(&self, node: usize) -> MeasurementSet {
        MeasurementSet {
            points: self.points.clone(),
            values: self.prediction(node).to_vec(),
            calibration: self.calibration,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub eps_real: f64,
    pub eps_imag: f64,
    pub thickness_mm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub estimate: Estimate,
    pub min_error: f64,
    /// `(it, ir, ii)` of the minimum.
    pub argmin: (usize, usize, usize),
    pub nodes: GridNodes,
    /// Error at every node, flat-indexed as [`GridNodes::index`].
    pub surface: Vec<f64>,
}

impl EstimationResult {
    pub fn error_at(&self, it: usize, ir: usize, ii: usize) -> f64 {
        self.surface[self.nodes.index(it, ir, ii)]
    }
}

/// Global minimum of the error surface. Nodes are scanned thickness-major,
/// then ε′, then ε″, and only a strictly smaller error replaces the
/// incumbent, so ties go to the lowest `(T, ε′, ε″)`.
pub fn estimate_with_table(table: &PredictionTable, meas: &MeasurementSet) -> Result<EstimationResult> {
    if meas.len() != table.points.len() {
        return Err(Error::LengthMismatch {
            expected: table.points.len(),
            got: meas.len(),
        });
    }
    if meas.calibration.norm() == 0.0 {
        return Err(Error::ZeroCalibration);
    }
    let surface: Vec<f64> = (0..table.nodes.len())
        .into_par_iter()
        .map(|node| error_function(table.prediction(node), table.calibration, meas))
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, f) in surface.iter().enumerate() {
        if *f < surface[best] {
            best = i;
        }
    }
    let argmin = table.nodes.unflatten(best);
    let (it, ir, ii) = argmin;
    Ok(EstimationResult {
        estimate: Estimate {
            eps_real: table.nodes.eps_real[ir],
            eps_imag: table.nodes.eps_imag[ii],
            thickness_mm: table.nodes.thickness[it],
        },
        min_error: surface[best],
        argmin,
        nodes: table.nodes.clone(),
        surface,
    })
}

/// Builds the GO table for the measurement's focus points and searches it.
pub fn estimate(model: &GoModel, meas: &MeasurementSet, grid: &SweepGrid) -> Result<EstimationResult> {
    let table = PredictionTable::build(model, &meas.points, grid)?;
    estimate_with_table(&table, meas)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub runs: Vec<Estimate>,
    /// Sample mean of (ε′, ε″, T).
    pub mean: [f64; 3],
    /// Sample standard deviation (n − 1) of (ε′, ε″, T).
    pub std: [f64; 3],
}

/// Mean and sample standard deviation; identical inputs give exactly their
/// value and zero.
fn mean_std(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let x0 = x[0];
    let mean = x0 + x.iter().map(|v| v - x0).sum::<f64>() / n;
    if x.len() < 2 {
        return (mean, 0.0);
    }
    let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Estimates every run against one prediction table and summarises them.
pub fn estimate_batch(table: &PredictionTable, runs: &[MeasurementSet]) -> Result<BatchStats> {
    if runs.len() < 2 {
        return Err(Error::InvalidConfig("a batch needs at least two runs".into()));
    }
    let estimates = runs
        .iter()
        .map(|m| estimate_with_table(table, m).map(|r| r.estimate))
        .collect::<Result<Vec<_>>>()?;
    let col = |f: fn(&Estimate) -> f64| estimates.iter().map(f).collect::<Vec<_>>();
    let (m0, s0) = mean_std(&col(|e| e.eps_real));
    let (m1, s1) = mean_std(&col(|e| e.eps_imag));
    let (m2, s2) = mean_std(&col(|e| e.thickness_mm));
    Ok(BatchStats {
        runs: estimates,
        mean: [m0, m1, m2],
        std: [s0, s1, s2],
    })
}

/// `runs` noisy copies of `base`, drawn sequentially from one seeded
/// ChaCha8 stream.
pub fn noisy_runs(base: &MeasurementSet, runs: usize, snr_db: f64, seed: u64) -> Vec<MeasurementSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..runs).map(|_| base.with_noise(snr_db, &mut rng)).collect()
}

/// PO-simulated measurement: received totals at `points` for the scene's
/// target, and the calibration amplitude of the bare plate focused at
/// `(x, y, z_bg)` of the first point.
pub fn simulate_measurements(scene: &Scene, points: &[Vec3], k_order: usize) -> Result<MeasurementSet> {
    if points.is_empty() {
        return Err(Error::InvalidFocusCount(0));
    }
    let imager = PoImager::new(scene)?;
    let values = points
        .iter()
        .map(|&p| imager.focus_response(p, k_order, None).map(|r| r.total(k_order)))
        .collect::<Result<Vec<_>>>()?;
    let calibration = po_calibration(scene, points[0].x, points[0].y)?;
    MeasurementSet::new(points.to_vec(), values, calibration)
}

/// PO received amplitude of the bare plate with the beams focused on it.
pub fn po_calibration(scene: &Scene, x: f64, y: f64) -> Result<Complex64> {
    let bare = scene.without_target();
    let imager = PoImager::new(&bare)?;
    let r = imager.focus_response(Vec3::new(x, y, bare.plate.z_bg), 1, None)?;
    Ok(r.total(1))
}
