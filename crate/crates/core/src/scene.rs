//! Simulation geometry: feeds, reflectarrays, the dielectric target and the
//! conducting background plate.
//!
//! Units are millimetres and GHz throughout. Fields carry `e^{-jkR}` (time
//! convention `e^{+jωt}`). Reflectarrays lie in a common plane of constant z
//! and face +z, towards the target; the plate sits at `z = z_bg`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::{CVec3, Vec3};
use crate::mesh::{mesh_grid, mesh_panel, RectGrid, SurfaceMesh};

/// Speed of light in mm/ns, so that `k0 = 2π f[GHz] / c` is in rad/mm.
pub const SPEED_OF_LIGHT_MM_PER_NS: f64 = 299.792_458;
/// Free-space impedance in ohms.
pub const ETA0: f64 = 376.730_313_668;
/// Default operating frequency.
pub const DEFAULT_FREQUENCY_GHZ: f64 = 24.16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalConstants {
    pub frequency_ghz: f64,
    /// rad/mm
    pub k0: f64,
    /// ohms
    pub eta0: f64,
    /// mm
    pub lambda0: f64,
}

impl PhysicalConstants {
    pub fn new(frequency_ghz: f64) -> Result<Self> {
        if !(frequency_ghz > 0.0) || !frequency_ghz.is_finite() {
            return Err(Error::NonPositive {
                what: "frequency_ghz",
                value: frequency_ghz,
            });
        }
        let k0 = 2.0 * std::f64::consts::PI * frequency_ghz / SPEED_OF_LIGHT_MM_PER_NS;
        Ok(Self {
            frequency_ghz,
            k0,
            eta0: ETA0,
            lambda0: 2.0 * std::f64::consts::PI / k0,
        })
    }
}

/// Relative permittivity `ε = ε′ − jε″`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexPermittivity {
    pub eps_real: f64,
    pub eps_imag: f64,
}

impl ComplexPermittivity {
    pub const AIR: ComplexPermittivity = ComplexPermittivity {
        eps_real: 1.0,
        eps_imag: 0.0,
    };

    pub fn new(eps_real: f64, eps_imag: f64) -> Result<Self> {
        if !(eps_real >= 1.0) || !eps_real.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "dielectric constant must be >= 1, got {eps_real}"
            )));
        }
        if !(eps_imag >= 0.0) || !eps_imag.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "loss factor must be >= 0, got {eps_imag}"
            )));
        }
        Ok(Self { eps_real, eps_imag })
    }

    /// The complex value `ε′ − jε″`.
    pub fn value(self) -> Complex64 {
        Complex64::new(self.eps_real, -self.eps_imag)
    }

    /// Refractive index with non-positive imaginary part (decaying branch).
    pub fn index(self) -> Complex64 {
        crate::em::decaying_sqrt(self.value())
    }
}

#[derive(Debug, Clone)]
pub struct HornFeed {
    pub aperture_center: Vec3,
    pub boresight: Vec3,
    /// Unit polarization of the aperture current, also used as the receive
    /// polarization.
    pub polarization: Vec3,
    pub aperture_width: f64,
    pub aperture_height: f64,
    pub mesh: SurfaceMesh,
    pub currents: Vec<CVec3>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Patch {
    pub position: Vec3,
}

#[derive(Debug, Clone)]
pub struct Reflectarray {
    pub center: Vec3,
    pub side_length: f64,
    pub patch_pitch: f64,
    /// Patches per side; `M = per_side²`.
    pub per_side: usize,
    /// Patch `m = j * per_side + i`, `i` along x and `j` along y.
    pub patches: Vec<Patch>,
    /// Two facets per patch: facets `2m` and `2m + 1` belong to patch `m`.
    pub mesh: SurfaceMesh,
}

impl Reflectarray {
    pub fn patch_count(&self) -> usize {
        self.patches.len()
    }

    /// Half-extent of the patch lattice (outer patch edges).
    pub fn half_extent(&self) -> f64 {
        0.5 * self.per_side as f64 * self.patch_pitch
    }

    /// Nearest patch to `point` (projected on the array plane), provided the
    /// point falls on the array. Ties go to the lower index.
    pub fn nearest_patch(&self, point: Vec3) -> Option<(usize, f64)> {
        let half = self.half_extent();
        let dx = point.x - self.center.x;
        let dy = point.y - self.center.y;
        if dx.abs() > half || dy.abs() > half {
            return None;
        }
        let n = self.per_side;
        let offset = 0.5 * (n as f64 - 1.0);
        let index_of = |d: f64| -> usize {
            let f = d / self.patch_pitch + offset;
            // Exact half-way points round down (lower index wins).
            let i = if (f - f.floor() - 0.5).abs() < 1e-12 {
                f.floor()
            } else {
                f.round()
            };
            i.clamp(0.0, n as f64 - 1.0) as usize
        };
        let i = index_of(dx);
        let j = index_of(dy);
        let m = j * n + i;
        let p = self.patches[m].position;
        let dist = ((point.x - p.x).powi(2) + (point.y - p.y).powi(2)).sqrt();
        Some((m, dist))
    }
}

#[derive(Debug, Clone)]
pub struct Fara {
    pub feed: HornFeed,
    pub array: Reflectarray,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DielectricSlab {
    /// Centre of the slab's back face, on the plate.
    pub center: Vec3,
    pub extent_x: f64,
    pub extent_y: f64,
    pub thickness: f64,
    pub eps: ComplexPermittivity,
    /// Air layer between slab and plate (only modelled by the GO stack).
    pub air_gap: f64,
}

impl DielectricSlab {
    /// z of the air-object interface.
    pub fn front_z(&self, z_bg: f64) -> f64 {
        z_bg - self.air_gap - self.thickness
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plate {
    pub z_bg: f64,
    pub center_x: f64,
    pub center_y: f64,
    pub extent_x: f64,
    pub extent_y: f64,
}

/// Axis-aligned region of interest for focus points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Roi {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Roi {
    pub fn contains(&self, p: Vec3) -> bool {
        self.check(p).is_ok()
    }

    pub fn check(&self, p: Vec3) -> Result<()> {
        for (i, (axis, value)) in [('x', p.x), ('y', p.y), ('z', p.z)].into_iter().enumerate() {
            if value < self.min[i] - 1e-9 || value > self.max[i] + 1e-9 {
                return Err(Error::FocusOutsideRoi {
                    axis,
                    value,
                    min: self.min[i],
                    max: self.max[i],
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Scene {
    pub constants: PhysicalConstants,
    pub faras: Vec<Fara>,
    pub plate: Plate,
    pub target: Option<DielectricSlab>,
    pub max_edge: f64,
    pub roi: Roi,
    config: SceneConfig,
}

/// Surfaces of the scatterer seen by the PO solver.
#[derive(Debug, Clone)]
pub struct TargetSurfaces {
    /// Air-object interface, normal towards the arrays (−z).
    pub obj: Option<SurfaceMesh>,
    /// Object-body interface (same lattice as `obj`, shifted to the plate).
    pub bot: Option<SurfaceMesh>,
    /// Exposed plate, normal −z.
    pub body: SurfaceMesh,
}

impl TargetSurfaces {
    /// Facets radiating to the outside world: `obj` followed by `body`.
    pub fn exterior(&self) -> SurfaceMesh {
        match &self.obj {
            Some(obj) => SurfaceMesh::merged(&[obj, &self.body]),
            None => self.body.clone(),
        }
    }

    pub fn obj_len(&self) -> usize {
        self.obj.as_ref().map_or(0, SurfaceMesh::len)
    }
}

impl Scene {
    pub fn config(&self) -> &SceneConfig {
        &self.config
    }

    /// SHA-256 of the canonical JSON form of the configuration.
    pub fn content_hash(&self) -> String {
        self.config.content_hash()
    }

    pub fn feed_count(&self) -> usize {
        self.faras.len()
    }

    /// Same geometry without the dielectric target (bare plate).
    pub fn without_target(&self) -> Scene {
        let mut config = self.config.clone();
        if config.plate.center_xy_mm.is_none() {
            config.plate.center_xy_mm = Some([self.plate.center_x, self.plate.center_y]);
        }
        config.target = None;
        Scene {
            target: None,
            config,
            ..self.clone()
        }
    }

    /// Same scene with a different target slab (meshes are rebuilt lazily).
    pub fn with_target(&self, target: TargetConfig) -> Result<Scene> {
        let mut config = self.config.clone();
        if config.plate.center_xy_mm.is_none() {
            config.plate.center_xy_mm = Some([self.plate.center_x, self.plate.center_y]);
        }
        config.target = Some(target);
        build_scene(&config)
    }

    pub fn array_plane_z(&self) -> f64 {
        self.faras[0].array.center.z
    }

    /// Cell size of the target lattice: the patch pitch divided by the
    /// smallest integer that respects the mesh edge bound. `None` when the
    /// arrays use different pitches.
    pub fn target_cell(&self) -> Option<f64> {
        let pitch = self.faras[0].array.patch_pitch;
        if self.faras.iter().any(|f| (f.array.patch_pitch - pitch).abs() > 1e-12) {
            return None;
        }
        let q = (pitch * std::f64::consts::SQRT_2 / self.max_edge * (1.0 + 1e-12)).ceil().max(1.0);
        Some(pitch / q)
    }

    pub fn target_surfaces(&self) -> Result<TargetSurfaces> {
        match self.target_cell() {
            Some(cell) => self.lattice_surfaces(cell),
            None => self.panel_surfaces(),
        }
    }

    /// Plate and slab faces on one square lattice of spacing `cell`; panel
    /// extents are rounded to whole cells and the slab footprint is aligned
    /// with the plate cells.
    fn lattice_surfaces(&self, cell: f64) -> Result<TargetSurfaces> {
        let plate = &self.plate;
        let edge = self.max_edge;
        let (u, v) = (Vec3::X, -Vec3::Y);
        let cells = |extent: f64| ((extent / cell).round() as usize).max(1);
        let (pnx, pny) = (cells(plate.extent_x), cells(plate.extent_y));
        let p_origin = Vec3::new(
            plate.center_x - 0.5 * pnx as f64 * cell,
            plate.center_y + 0.5 * pny as f64 * cell,
            plate.z_bg,
        );
        let grid = |origin: Vec3, nx: usize, ny: usize| RectGrid {
            origin,
            u,
            v,
            nx,
            ny,
            du: cell,
            dv: cell,
        };
        let full = mesh_grid(grid(p_origin, pnx, pny), edge)?;
        let slab = match &self.target {
            None => {
                return Ok(TargetSurfaces {
                    obj: None,
                    bot: None,
                    body: full,
                })
            }
            Some(s) => s,
        };
        let (onx, ony) = (cells(slab.extent_x), cells(slab.extent_y));
        let ix0 = ((slab.center.x - 0.5 * onx as f64 * cell - p_origin.x) / cell).round() as i64;
        let iy0 = ((p_origin.y - slab.center.y - 0.5 * ony as f64 * cell) / cell).round() as i64;
        let o_origin = Vec3::new(
            p_origin.x + ix0 as f64 * cell,
            p_origin.y - iy0 as f64 * cell,
            slab.front_z(plate.z_bg),
        );
        let obj = mesh_grid(grid(o_origin, onx, ony), edge)?;
        let bot = obj.translated(Vec3::new(0.0, 0.0, slab.thickness));
        let covered = |c: usize| {
            let (ix, iy) = ((c % pnx) as i64, (c / pnx) as i64);
            ix >= ix0 && ix < ix0 + onx as i64 && iy >= iy0 && iy < iy0 + ony as i64
        };
        let facets = full
            .facets
            .iter()
            .enumerate()
            .filter(|(i, _)| !covered(i / 2))
            .map(|(_, f)| f.clone())
            .collect();
        Ok(TargetSurfaces {
            obj: Some(obj),
            bot: Some(bot),
            body: SurfaceMesh {
                facets,
                target_edge_length: edge,
                grid: None,
            },
        })
    }

    fn panel_surfaces(&self) -> Result<TargetSurfaces> {
        let plate = &self.plate;
        let edge = self.max_edge;
        let plate_center = Vec3::new(plate.center_x, plate.center_y, plate.z_bg);
        // u = x, v = −y gives normal u × v = −z (towards the arrays).
        let (u, v) = (Vec3::X, -Vec3::Y);
        match &self.target {
            None => Ok(TargetSurfaces {
                obj: None,
                bot: None,
                body: mesh_panel(plate_center, u, v, plate.extent_x, plate.extent_y, edge)?,
            }),
            Some(slab) => {
                let front = Vec3::new(slab.center.x, slab.center.y, slab.front_z(plate.z_bg));
                let obj = mesh_panel(front, u, v, slab.extent_x, slab.extent_y, edge)?;
                let bot = obj.translated(Vec3::new(0.0, 0.0, slab.thickness));
                let body = plate_frame(plate, slab, edge)?;
                Ok(TargetSurfaces {
                    obj: Some(obj),
                    bot: Some(bot),
                    body,
                })
            }
        }
    }
}

/// Plate minus the slab footprint, as up to four rectangles.
fn plate_frame(plate: &Plate, slab: &DielectricSlab, edge: f64) -> Result<SurfaceMesh> {
    let (u, v) = (Vec3::X, -Vec3::Y);
    let px0 = plate.center_x - 0.5 * plate.extent_x;
    let px1 = plate.center_x + 0.5 * plate.extent_x;
    let py0 = plate.center_y - 0.5 * plate.extent_y;
    let py1 = plate.center_y + 0.5 * plate.extent_y;
    let sx0 = slab.center.x - 0.5 * slab.extent_x;
    let sx1 = slab.center.x + 0.5 * slab.extent_x;
    let sy0 = slab.center.y - 0.5 * slab.extent_y;
    let sy1 = slab.center.y + 0.5 * slab.extent_y;
    let z = plate.z_bg;
    let mut parts = Vec::new();
    let mut rect = |x0: f64, x1: f64, y0: f64, y1: f64| -> Result<()> {
        if x1 - x0 > 1e-9 && y1 - y0 > 1e-9 {
            let c = Vec3::new(0.5 * (x0 + x1), 0.5 * (y0 + y1), z);
            parts.push(mesh_panel(c, u, v, x1 - x0, y1 - y0, edge)?);
        }
        Ok(())
    };
    // bottom and top strips span the full width; side strips fill between
    rect(px0, px1, py0, sy0)?;
    rect(px0, px1, sy1, py1)?;
    rect(px0, sx0, sy0, sy1)?;
    rect(sx1, px1, sy0, sy1)?;
    let refs: Vec<&SurfaceMesh> = parts.iter().collect();
    let mut merged = SurfaceMesh::merged(&refs);
    merged.target_edge_length = edge;
    Ok(merged)
}

// ---------------------------------------------------------------------------
// Configuration

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaraConfig {
    pub feed_center: [f64; 3],
    /// Horn mouth width (H-plane) and height (E-plane), mm.
    pub aperture_mm: [f64; 2],
    pub array_center: [f64; 3],
    pub side_mm: f64,
    pub pitch_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateConfig {
    pub z_bg_mm: f64,
    pub extent_mm: [f64; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center_xy_mm: Option<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetConfig {
    pub center: [f64; 3],
    pub extent_mm: [f64; 2],
    pub thickness_mm: f64,
    pub eps_real: f64,
    pub eps_imag: f64,
    #[serde(default, skip_serializing_if = "is_zero")]
    pub air_gap_mm: f64,
}

fn is_zero(v: &f64) -> bool {
    *v == 0.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub max_edge_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub frequency_ghz: f64,
    pub faras: Vec<FaraConfig>,
    pub plate: PlateConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<TargetConfig>,
    pub mesh: MeshConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub roi: Option<Roi>,
}

/// Array size preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    /// 1000 mm reflectarrays.
    Full,
    /// 250 mm reflectarrays, otherwise identical geometry.
    Reduced,
}

impl Scale {
    pub fn array_side_mm(self) -> f64 {
        match self {
            Scale::Full => 1000.0,
            Scale::Reduced => 250.0,
        }
    }
}

/// Default horn mouth (width, height) in mm for a 10 dBi K-band horn.
pub const DEFAULT_HORN_APERTURE_MM: [f64; 2] = [14.0, 11.0];

/// Slab centre on the plate for the two-array screening geometry.
pub const SLAB_CENTER: [f64; 3] = [500.0, 920.0, 800.0];

impl TargetConfig {
    /// 200 × 150 mm slab mounted at the plate centre.
    pub fn slab(thickness_mm: f64, eps_real: f64, eps_imag: f64) -> Self {
        Self {
            center: SLAB_CENTER,
            extent_mm: [200.0, 150.0],
            thickness_mm,
            eps_real,
            eps_imag,
            air_gap_mm: 0.0,
        }
    }

    /// Lossless ε = 8, T = 20 mm.
    pub fn object1() -> Self {
        Self::slab(20.0, 8.0, 0.0)
    }

    /// Lossless ε = 2, T = 40 mm (same electrical thickness as object 1).
    pub fn object2() -> Self {
        Self::slab(40.0, 2.0, 0.0)
    }

    /// Lossy ε = 4 − j0.2, T = 40 mm.
    pub fn object3() -> Self {
        Self::slab(40.0, 4.0, 0.2)
    }

    /// PA66-like slab, ε = 3 − j0.01, T = 37 mm on a 1 mm air gap.
    pub fn pa66() -> Self {
        Self {
            air_gap_mm: 1.0,
            ..Self::slab(37.0, 3.0, 0.01)
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "object1" | "object-1" => Some(Self::object1()),
            "object2" | "object-2" => Some(Self::object2()),
            "object3" | "object-3" => Some(Self::object3()),
            "pa66" | "object4" | "object-4" => Some(Self::pa66()),
            _ => None,
        }
    }
}

impl SceneConfig {
    /// The two-reflectarray screening geometry: arrays centred at
    /// [500, 1413, 0] and [500, 461, 0], horns at [1313, 1413, 830] and
    /// [1313, 461, 830], plate at z = 800 mm.
    pub fn two_array(scale: Scale) -> Self {
        let lambda0 = SPEED_OF_LIGHT_MM_PER_NS / DEFAULT_FREQUENCY_GHZ;
        let side = scale.array_side_mm();
        let fara = |y: f64| FaraConfig {
            feed_center: [1313.0, y, 830.0],
            aperture_mm: DEFAULT_HORN_APERTURE_MM,
            array_center: [500.0, y, 0.0],
            side_mm: side,
            pitch_mm: lambda0 / 2.0,
        };
        let plate_extent = match scale {
            Scale::Full => [300.0, 250.0],
            Scale::Reduced => [260.0, 210.0],
        };
        Self {
            frequency_ghz: DEFAULT_FREQUENCY_GHZ,
            faras: vec![fara(1413.0), fara(461.0)],
            plate: PlateConfig {
                z_bg_mm: 800.0,
                extent_mm: plate_extent,
                center_xy_mm: Some([SLAB_CENTER[0], SLAB_CENTER[1]]),
            },
            target: None,
            mesh: MeshConfig {
                max_edge_mm: lambda0 / 5.0,
            },
            roi: None,
        }
    }

    pub fn with_target(mut self, target: TargetConfig) -> Self {
        self.target = Some(target);
        self
    }

    pub fn with_max_edge(mut self, max_edge_mm: f64) -> Self {
        self.mesh.max_edge_mm = max_edge_mm;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scene config serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.to_json().as_bytes());
        hex::encode(h.finalize())
    }
}

fn positive(what: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonPositive { what, value })
    }
}

fn build_feed(cfg: &FaraConfig, max_edge: f64) -> Result<HornFeed> {
    let center = Vec3::from_array(cfg.feed_center);
    let boresight = (Vec3::from_array(cfg.array_center) - center)
        .normalized()
        .ok_or_else(|| Error::InvalidConfig("feed coincides with array centre".into()))?;
    // Polarization: array y-axis projected on the aperture plane.
    let polarization = (Vec3::Y - boresight * Vec3::Y.dot(boresight))
        .normalized()
        .or_else(|| (Vec3::X - boresight * Vec3::X.dot(boresight)).normalized())
        .ok_or_else(|| Error::InvalidConfig("cannot orient feed polarization".into()))?;
    let width = positive("aperture width", cfg.aperture_mm[0])?;
    let height = positive("aperture height", cfg.aperture_mm[1])?;
    let u = polarization.cross(boresight);
    let mesh = mesh_panel(center, u, polarization, width, height, max_edge)?;
    let currents = vec![polarization.to_complex(); mesh.len()];
    Ok(HornFeed {
        aperture_center: center,
        boresight,
        polarization,
        aperture_width: width,
        aperture_height: height,
        mesh,
        currents,
    })
}

fn build_array(cfg: &FaraConfig) -> Result<Reflectarray> {
    let side = positive("array side", cfg.side_mm)?;
    let pitch = positive("patch pitch", cfg.pitch_mm)?;
    let per_side = (side / pitch + 1e-9).floor() as usize;
    if per_side == 0 {
        return Err(Error::InvalidConfig(format!(
            "patch pitch {pitch} mm exceeds array side {side} mm"
        )));
    }
    let center = Vec3::from_array(cfg.array_center);
    let offset = 0.5 * (per_side as f64 - 1.0);
    let mut patches = Vec::with_capacity(per_side * per_side);
    let mut facets = Vec::with_capacity(2 * per_side * per_side);
    for j in 0..per_side {
        for i in 0..per_side {
            let position = center
                + Vec3::new((i as f64 - offset) * pitch, (j as f64 - offset) * pitch, 0.0);
            patches.push(Patch { position });
            // One square facet pair, normal +z.
            let cell = mesh_panel(position, Vec3::X, Vec3::Y, pitch, pitch, pitch * 2.0)?;
            facets.extend(cell.facets);
        }
    }
    Ok(Reflectarray {
        center,
        side_length: side,
        patch_pitch: pitch,
        per_side,
        patches,
        mesh: SurfaceMesh {
            facets,
            target_edge_length: pitch * std::f64::consts::SQRT_2,
            grid: None,
        },
    })
}

/// Builds and validates a scene from its configuration.
pub fn build_scene(config: &SceneConfig) -> Result<Scene> {
    let constants = PhysicalConstants::new(config.frequency_ghz)?;
    let max_edge = positive("mesh max_edge_mm", config.mesh.max_edge_mm)?;
    if config.faras.is_empty() {
        return Err(Error::InvalidConfig("at least one FARA is required".into()));
    }
    let faras = config
        .faras
        .iter()
        .map(|f| {
            Ok(Fara {
                feed: build_feed(f, max_edge)?,
                array: build_array(f)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let array_z = faras[0].array.center.z;
    if faras.iter().any(|f| (f.array.center.z - array_z).abs() > 1e-9) {
        return Err(Error::InvalidConfig(
            "all reflectarrays must share one plane of constant z".into(),
        ));
    }

    let pc = &config.plate;
    let z_bg = pc.z_bg_mm;
    if !(z_bg > array_z) {
        return Err(Error::InvalidConfig(format!(
            "plate z_bg = {z_bg} mm must lie in front of the arrays (z = {array_z} mm)"
        )));
    }
    let target = match &config.target {
        None => None,
        Some(t) => {
            let eps = ComplexPermittivity::new(t.eps_real, t.eps_imag)?;
            let thickness = positive("target thickness_mm", t.thickness_mm)?;
            if !(t.air_gap_mm >= 0.0) {
                return Err(Error::InvalidConfig("air_gap_mm must be >= 0".into()));
            }
            let center = Vec3::from_array(t.center);
            if center.z > z_bg + 1e-9 {
                return Err(Error::TargetOverlap(format!(
                    "slab back face at z = {} mm is behind the plate surface z_bg = {z_bg} mm",
                    center.z
                )));
            }
            if center.z < z_bg - 1e-9 {
                return Err(Error::InvalidConfig(format!(
                    "slab must be mounted on the plate (center z = {} mm, z_bg = {z_bg} mm)",
                    center.z
                )));
            }
            let slab = DielectricSlab {
                center,
                extent_x: positive("target extent x", t.extent_mm[0])?,
                extent_y: positive("target extent y", t.extent_mm[1])?,
                thickness,
                eps,
                air_gap: t.air_gap_mm,
            };
            if slab.front_z(z_bg) <= array_z {
                return Err(Error::InvalidConfig("slab reaches the array plane".into()));
            }
            Some(slab)
        }
    };
    let [cx, cy] = pc
        .center_xy_mm
        .or_else(|| target.map(|t| [t.center.x, t.center.y]))
        .unwrap_or([SLAB_CENTER[0], SLAB_CENTER[1]]);
    let plate = Plate {
        z_bg,
        center_x: cx,
        center_y: cy,
        extent_x: positive("plate extent x", pc.extent_mm[0])?,
        extent_y: positive("plate extent y", pc.extent_mm[1])?,
    };
    if let Some(slab) = &target {
        let inside = (slab.center.x - cx).abs() + 0.5 * slab.extent_x <= 0.5 * plate.extent_x + 1e-9
            && (slab.center.y - cy).abs() + 0.5 * slab.extent_y <= 0.5 * plate.extent_y + 1e-9;
        if !inside {
            return Err(Error::TargetOverlap(
                "slab footprint extends beyond the plate".into(),
            ));
        }
    }
    let roi = config.roi.unwrap_or(Roi {
        min: [cx - 0.5 * plate.extent_x, cy - 0.5 * plate.extent_y, z_bg - 400.0],
        max: [cx + 0.5 * plate.extent_x, cy + 0.5 * plate.extent_y, z_bg + 200.0],
    });
    for (index, f) in faras.iter().enumerate() {
        if roi.contains(f.feed.aperture_center) {
            return Err(Error::FeedInsideRoi {
                index,
                position: f.feed.aperture_center,
            });
        }
    }
    Ok(Scene {
        constants,
        faras,
        plate,
        target,
        max_edge,
        roi,
        config: config.clone(),
    })
}
