//! Physical-optics imaging chain: horn → reflectarray → target (with
//! internal slab bounces) and reciprocity-based reception.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use std::sync::OnceLock;

use crate::em::{
    induce_currents, radiate, reaction, Boundary, CurrentSheet, DirectPropagator, FieldSample,
    LatticeAxes, LatticePropagator, Medium, PlanePropagator,
};
use crate::error::{Error, Result};
use crate::geometry::{CVec3, Vec3, CZERO};
use crate::mesh::SurfaceMesh;
use crate::reflectarray::{apply_mask, binary_phase, z_samples, PhaseMask};
use crate::scene::{ComplexPermittivity, Scene, TargetSurfaces};

/// Default PO order (two internal bounces).
pub const DEFAULT_K_ORDER: usize = 3;

/// Machinery for the bounces between the slab's front and back faces.
struct SlabPath {
    eps: ComplexPermittivity,
    /// S_obj → S_bot in the dielectric.
    down: Box<dyn PlanePropagator>,
    /// S_bot → S_obj (normals into the slab).
    up: Box<dyn PlanePropagator>,
    bot: SurfaceMesh,
    obj_inner: SurfaceMesh,
}

/// Induced currents on the target for one focus point.
#[derive(Debug, Clone)]
pub struct TargetCurrents {
    /// First-order currents on S_obj followed by the plate (`body`).
    pub order0: CurrentSheet,
    /// Internal-bounce currents `J_k, M_k` on S_obj, `k = 1 … K-1`, with
    /// normals pointing into the slab.
    pub internal: Vec<CurrentSheet>,
    pub obj_len: usize,
}

impl TargetCurrents {
    /// Air-side currents for order `k`: `J0 − Σ_{i<k} J_i` on S_obj plus the
    /// body currents.
    pub fn total(&self, k: usize) -> Result<CurrentSheet> {
        if k == 0 {
            return Err(Error::InvalidOrder(k));
        }
        let mut out = self.order0.clone();
        for sheet in self.internal.iter().take(k - 1) {
            for i in 0..self.obj_len {
                out.j[i] -= sheet.j[i];
                out.m[i] -= sheet.m[i];
            }
        }
        Ok(out)
    }

    /// Adds another set of currents on the same surfaces.
    pub fn add(&mut self, other: &TargetCurrents) {
        let pairs = std::iter::once((&mut self.order0, &other.order0)).chain(self.internal.iter_mut().zip(&other.internal));
        for (a, b) in pairs {
            for (x, y) in a.j.iter_mut().zip(&b.j) {
                *x += *y;
            }
            for (x, y) in a.m.iter_mut().zip(&b.m) {
                *x += *y;
            }
        }
    }

    /// Currents on S_obj only, for order `k`.
    pub fn obj(&self, k: usize) -> Result<CurrentSheet> {
        let t = self.total(k)?;
        let n = self.obj_len;
        Ok(CurrentSheet {
            centroids: t.centroids[..n].to_vec(),
            areas: t.areas[..n].to_vec(),
            normals: t.normals[..n].to_vec(),
            j: t.j[..n].to_vec(),
            m: t.m[..n].to_vec(),
        })
    }
}

/// Received amplitudes for one focus point.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusResponse {
    pub focus: Vec3,
    pub feeds: Vec<usize>,
    /// `orders[i][k]`: contribution of order `k` to receiver `feeds[i]`,
    /// already divided by the receive normalization. Order 0 carries the
    /// body; higher orders enter with a minus sign.
    pub orders: Vec<Vec<Complex64>>,
    /// Back-propagated amplitude per receiver, when requested.
    pub backprop: Option<Vec<Complex64>>,
}

impl FocusResponse {
    pub fn max_order(&self) -> usize {
        self.orders.first().map_or(0, |o| o.len())
    }

    /// `E^rec_{n,p}` for receiver index `i` at PO order `k`.
    pub fn received(&self, i: usize, k: usize) -> Complex64 {
        let o = &self.orders[i];
        let mut acc = o[0];
        for c in o.iter().take(k.min(o.len())).skip(1) {
            acc -= *c;
        }
        acc
    }

    /// `E^rec_n = Σ_p E^rec_{n,p}` at order `k`.
    pub fn total(&self, k: usize) -> Complex64 {
        (0..self.orders.len()).map(|i| self.received(i, k)).sum()
    }

    pub fn backprop_total(&self) -> Option<Complex64> {
        self.backprop.as_ref().map(|b| b.iter().sum())
    }
}

/// Per-pixel result of a focal z-scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePixel {
    pub x: f64,
    pub y: f64,
    pub z_imaging: f64,
    pub peak: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileImage {
    pub pixels: Vec<ProfilePixel>,
    pub z_start: f64,
    pub z_end: f64,
    pub dz: f64,
    pub k_order: usize,
}

impl ProfileImage {
    /// Pixel nearest the centroid of the transverse grid (lowest index on
    /// ties).
    pub fn center_pixel(&self) -> Result<&ProfilePixel> {
        if self.pixels.is_empty() {
            return Err(Error::EmptyProfile);
        }
        let n = self.pixels.len() as f64;
        let cx = self.pixels.iter().map(|p| p.x).sum::<f64>() / n;
        let cy = self.pixels.iter().map(|p| p.y).sum::<f64>() / n;
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, p) in self.pixels.iter().enumerate() {
            let d = (p.x - cx).powi(2) + (p.y - cy).powi(2);
            if d < best_d - 1e-9 {
                best = i;
                best_d = d;
            }
        }
        Ok(&self.pixels[best])
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in values.iter().enumerate() {
        if best.map_or(true, |b| *v > values[b]) {
            best = Some(i);
        }
    }
    best
}

/// |E| of the focused incident field sampled around a focus point.
#[derive(Debug, Clone, PartialEq)]
pub struct PsfGrid {
    pub focus: Vec3,
    /// Offsets from the focus along each axis, mm.
    pub offsets: [Vec<f64>; 3],
    /// `values[(iz * ny + iy) * nx + ix]`
    pub values: Vec<f64>,
}

impl PsfGrid {
    pub fn dims(&self) -> [usize; 3] {
        [self.offsets[0].len(), self.offsets[1].len(), self.offsets[2].len()]
    }

    pub fn get(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let [nx, ny, _] = self.dims();
        self.values[(iz * ny + iy) * nx + ix]
    }

    /// Position of the largest sample.
    pub fn peak_position(&self) -> Vec3 {
        let i = argmax_first(&self.values).unwrap_or(0);
        let [nx, ny, _] = self.dims();
        let ix = i % nx;
        let iy = (i / nx) % ny;
        let iz = i / (nx * ny);
        self.focus + Vec3::new(self.offsets[0][ix], self.offsets[1][iy], self.offsets[2][iz])
    }

    /// Cut through the peak along `axis` (0 = x, 1 = y, 2 = z).
    pub fn cut(&self, axis: usize) -> Vec<(f64, f64)> {
        let i = argmax_first(&self.values).unwrap_or(0);
        let [nx, ny, nz] = self.dims();
        let mut idx = [i % nx, (i / nx) % ny, i / (nx * ny)];
        let n = [nx, ny, nz][axis];
        (0..n)
            .map(|k| {
                idx[axis] = k;
                (self.offsets[axis][k], self.get(idx[0], idx[1], idx[2]))
            })
            .collect()
    }
}

/// Full width where a sampled profile drops to `peak/√2`, with linear
/// interpolation between samples. `None` if either side never drops.
pub fn three_db_width(samples: &[(f64, f64)]) -> Option<f64> {
    let vals: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let ip = argmax_first(&vals)?;
    let level = vals[ip] / std::f64::consts::SQRT_2;
    let cross = |a: (f64, f64), b: (f64, f64)| a.0 + (level - a.1) * (b.0 - a.0) / (b.1 - a.1);
    let mut left = None;
    for i in (0..ip).rev() {
        if samples[i].1 <= level {
            left = Some(cross(samples[i], samples[i + 1]));
            break;
        }
    }
    let mut right = None;
    for i in ip + 1..samples.len() {
        if samples[i].1 <= level {
            right = Some(cross(samples[i - 1], samples[i]));
            break;
        }
    }
    Some(right? - left?)
}

pub struct PoImager<'a> {
    scene: &'a Scene,
    air: Medium,
    feeds: Vec<usize>,
    /// Unmasked patch currents of each FARA, indexed by feed.
    patch_currents: Vec<CurrentSheet>,
    surfaces: TargetSurfaces,
    exterior: SurfaceMesh,
    slab: Option<SlabPath>,
    /// `∫ ê · J_inc` over each feed aperture.
    denominators: Vec<Complex64>,
    /// Patches of each array → exterior facets, built on first use.
    forward: Vec<OnceLock<Box<dyn PlanePropagator>>>,
    /// Exterior facets → patches of each array, built on first use.
    backward: Vec<OnceLock<Box<dyn PlanePropagator>>>,
}

/// FFT propagator between two facet sets when both sit on the patch lattice
/// of `pitch`, else direct summation.
fn plane_propagator(source: &SurfaceMesh, observer: &SurfaceMesh, pitch: f64, medium: Medium) -> Box<dyn PlanePropagator> {
    let axes = LatticeAxes {
        u: Vec3::X,
        v: Vec3::Y,
        du: pitch,
        dv: pitch,
    };
    if source.len() * observer.len() < 1 << 20 {
        return Box::new(DirectPropagator::new(source, observer, medium));
    }
    let areas: Vec<f64> = source.facets.iter().map(|f| f.area).collect();
    match LatticePropagator::from_points(&source.centroids(), &areas, &observer.centroids(), axes, medium) {
        Ok(p) => Box::new(p),
        Err(_) => Box::new(DirectPropagator::new(source, observer, medium)),
    }
}

impl<'a> PoImager<'a> {
    /// Prepares the imager with every FARA active.
    pub fn new(scene: &'a Scene) -> Result<Self> {
        Self::with_feeds(scene, (0..scene.faras.len()).collect())
    }

    /// Prepares the imager with only the listed FARAs transmitting and
    /// receiving.
    pub fn with_feeds(scene: &'a Scene, feeds: Vec<usize>) -> Result<Self> {
        if feeds.is_empty() || feeds.iter().any(|&p| p >= scene.faras.len()) {
            return Err(Error::InvalidConfig(format!("invalid active feed list {feeds:?}")));
        }
        let air = Medium::free_space(&scene.constants);
        let patch_currents = scene
            .faras
            .iter()
            .map(|f| {
                let horn = CurrentSheet::electric(&f.feed.mesh, f.feed.currents.clone())?;
                let fields = radiate(&horn, &f.array.mesh.centroids(), air)?;
                induce_currents(&fields, &f.array.mesh, ComplexPermittivity::AIR, Boundary::Pec)
            })
            .collect::<Result<Vec<_>>>()?;
        let denominators = scene
            .faras
            .iter()
            .enumerate()
            .map(|(p, f)| {
                let mut acc = CZERO;
                for (facet, j) in f.feed.mesh.facets.iter().zip(&f.feed.currents) {
                    acc += j.dot_real(f.feed.polarization) * facet.area;
                }
                if acc.norm() < 1e-300 {
                    Err(Error::ZeroDenominator(p))
                } else {
                    Ok(acc)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let surfaces = scene.target_surfaces()?;
        let exterior = surfaces.exterior();
        let slab = match (&scene.target, &surfaces.obj, &surfaces.bot) {
            (Some(t), Some(obj), Some(bot)) => {
                let medium = Medium::dielectric(&scene.constants, t.eps);
                let obj_inner = obj.flipped();
                let down: Box<dyn PlanePropagator> = match LatticePropagator::new(obj, bot, medium) {
                    Ok(p) => Box::new(p),
                    Err(_) => Box::new(DirectPropagator::new(obj, bot, medium)),
                };
                let up: Box<dyn PlanePropagator> = match LatticePropagator::new(bot, &obj_inner, medium) {
                    Ok(p) => Box::new(p),
                    Err(_) => Box::new(DirectPropagator::new(bot, &obj_inner, medium)),
                };
                Some(SlabPath {
                    eps: t.eps,
                    down,
                    up,
                    bot: bot.clone(),
                    obj_inner,
                })
            }
            _ => None,
        };
        Ok(Self {
            scene,
            air,
            feeds,
            patch_currents,
            surfaces,
            exterior,
            slab,
            denominators,
            forward: scene.faras.iter().map(|_| OnceLock::new()).collect(),
            backward: scene.faras.iter().map(|_| OnceLock::new()).collect(),
        })
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn feeds(&self) -> &[usize] {
        &self.feeds
    }

    pub fn surfaces(&self) -> &TargetSurfaces {
        &self.surfaces
    }

    /// Facets of S_obj followed by the exposed plate.
    pub fn exterior_mesh(&self) -> &SurfaceMesh {
        &self.exterior
    }

    pub fn patch_currents(&self, p: usize) -> &CurrentSheet {
        &self.patch_currents[p]
    }

    pub fn mask(&self, p: usize, focus: Vec3) -> PhaseMask {
        let f = &self.scene.faras[p];
        binary_phase(&f.feed, p, &f.array, focus, self.scene.constants.k0)
    }

    /// Masked patch currents of FARA `p`.
    pub fn masked_patches(&self, p: usize, mask: &PhaseMask) -> Result<CurrentSheet> {
        apply_mask(&self.patch_currents[p], mask)
    }

    /// Fields on the target surfaces produced by FARA `p` with `mask`, and
    /// the masked patch currents producing them.
    pub fn illuminate_target(&self, p: usize, mask: &PhaseMask) -> Result<(Vec<FieldSample>, CurrentSheet)> {
        let patches = self.masked_patches(p, mask)?;
        let f = &self.scene.faras[p];
        let forward = self.forward[p]
            .get_or_init(|| plane_propagator(&f.array.mesh, &self.exterior, f.array.patch_pitch, self.air));
        let fields = forward.propagate(&patches.j, &patches.m)?;
        Ok((fields, patches))
    }

    /// Induced target currents for the total incident field on the exterior
    /// facets, including `k_order − 1` internal bounces.
    pub fn cascade_currents(&self, incident: &[FieldSample], k_order: usize) -> Result<TargetCurrents> {
        if k_order == 0 {
            return Err(Error::InvalidOrder(k_order));
        }
        if incident.len() != self.exterior.len() {
            return Err(Error::LengthMismatch {
                expected: self.exterior.len(),
                got: incident.len(),
            });
        }
        let n_obj = self.surfaces.obj_len();
        let body = induce_currents(
            &incident[n_obj..],
            &self.surfaces.body,
            ComplexPermittivity::AIR,
            Boundary::Pec,
        )?;
        let (obj0, internal) = match (&self.surfaces.obj, &self.slab) {
            (Some(obj), Some(slab)) => {
                let obj0 = induce_currents(
                    &incident[..n_obj],
                    obj,
                    ComplexPermittivity::AIR,
                    Boundary::Dielectric(slab.eps),
                )?;
                let mut internal = Vec::with_capacity(k_order - 1);
                // interior equivalent of the air-side currents
                let mut j: Vec<CVec3> = obj0.j.iter().map(|v| -*v).collect();
                let mut m: Vec<CVec3> = obj0.m.iter().map(|v| -*v).collect();
                for _ in 1..k_order {
                    let at_bot = slab.down.propagate(&j, &m)?;
                    let bot = induce_currents(&at_bot, &slab.bot, slab.eps, Boundary::Pec)?;
                    let zeros = vec![CVec3::ZERO; bot.len()];
                    let at_obj = slab.up.propagate(&bot.j, &zeros)?;
                    let inner = induce_currents(
                        &at_obj,
                        &slab.obj_inner,
                        slab.eps,
                        Boundary::Dielectric(ComplexPermittivity::AIR),
                    )?;
                    j.clone_from(&inner.j);
                    m.clone_from(&inner.m);
                    internal.push(inner);
                }
                (Some(obj0), internal)
            }
            _ => (None, Vec::new()),
        };
        let order0 = match &obj0 {
            Some(o) => CurrentSheet::concat(&[o, &body]),
            None => body,
        };
        Ok(TargetCurrents {
            order0,
            internal,
            obj_len: n_obj,
        })
    }

    /// `E^rec_{n,p}` by reciprocity: the reaction of receiver `p`'s own
    /// illumination with the total target currents, normalized by the feed
    /// aperture integral.
    pub fn receive(&self, p: usize, fields_p: &[FieldSample], currents: &CurrentSheet) -> Result<Complex64> {
        Ok(reaction(fields_p, currents)? / self.denominators[p])
    }

    /// Received amplitude computed the long way: target currents radiate
    /// onto array `p`, the induced patch currents are refocused through the
    /// mask and radiate onto the horn aperture.
    pub fn backpropagate(&self, p: usize, mask: &PhaseMask, currents: &CurrentSheet) -> Result<Complex64> {
        let f = &self.scene.faras[p];
        if currents.len() != self.exterior.len() {
            return Err(Error::LengthMismatch {
                expected: self.exterior.len(),
                got: currents.len(),
            });
        }
        let back = self.backward[p]
            .get_or_init(|| plane_propagator(&self.exterior, &f.array.mesh, f.array.patch_pitch, self.air));
        let at_patches = back.propagate(&currents.j, &currents.m)?;
        let induced = induce_currents(&at_patches, &f.array.mesh, ComplexPermittivity::AIR, Boundary::Pec)?;
        let refocused = apply_mask(&induced, mask)?;
        let at_horn = radiate(&refocused, &f.feed.mesh.centroids(), self.air)?;
        let mut acc = CZERO;
        for ((field, facet), j) in at_horn.iter().zip(&f.feed.mesh.facets).zip(&f.feed.currents) {
            acc += field.e.dot(*j) * facet.area;
        }
        Ok(acc / self.denominators[p])
    }

    /// Full response at one focus point with per-order contributions up to
    /// `max_order`. With `backprop_order = Some(k)`, the back-propagated
    /// amplitudes at order `k` are computed as well.
    pub fn focus_response(&self, focus: Vec3, max_order: usize, backprop_order: Option<usize>) -> Result<FocusResponse> {
        if max_order == 0 {
            return Err(Error::InvalidOrder(max_order));
        }
        let masks: Vec<PhaseMask> = self.feeds.iter().map(|&p| self.mask(p, focus)).collect();
        let fields: Vec<Vec<FieldSample>> = self
            .feeds
            .iter()
            .zip(&masks)
            .map(|(&p, mask)| self.illuminate_target(p, mask).map(|(f, _)| f))
            .collect::<Result<_>>()?;
        // J_target = Σ_p J_p: each feed's beam induces its own currents.
        let mut currents = self.cascade_currents(&fields[0], max_order)?;
        for f in &fields[1..] {
            currents.add(&self.cascade_currents(f, max_order)?);
        }
        let n_obj = currents.obj_len;
        let mut orders = Vec::with_capacity(self.feeds.len());
        for (i, &p) in self.feeds.iter().enumerate() {
            let mut o = Vec::with_capacity(max_order);
            o.push(self.receive(p, &fields[i], &currents.order0)?);
            for sheet in &currents.internal {
                o.push(self.receive(p, &fields[i][..n_obj], sheet)?);
            }
            orders.push(o);
        }
        let backprop = match backprop_order {
            None => None,
            Some(k) => {
                let sheet = currents.total(k.min(max_order))?;
                Some(
                    self.feeds
                        .iter()
                        .zip(&masks)
                        .map(|(&p, mask)| self.backpropagate(p, mask, &sheet))
                        .collect::<Result<Vec<_>>>()?,
                )
            }
        };
        Ok(FocusResponse {
            focus,
            feeds: self.feeds.clone(),
            orders,
            backprop,
        })
    }

    /// Responses along a list of focus points.
    pub fn scan(&self, foci: &[Vec3], max_order: usize, backprop_order: Option<usize>) -> Result<Vec<FocusResponse>> {
        foci.iter()
            .map(|&f| self.focus_response(f, max_order, backprop_order))
            .collect()
    }

    /// Incident field of the focused beams (all active feeds) at `points`.
    pub fn focused_field(&self, focus: Vec3, points: &[Vec3]) -> Result<Vec<CVec3>> {
        let mut e = vec![CVec3::ZERO; points.len()];
        for &p in &self.feeds {
            let patches = self.masked_patches(p, &self.mask(p, focus))?;
            for (acc, f) in e.iter_mut().zip(radiate(&patches, points, self.air)?) {
                *acc += f.e;
            }
        }
        Ok(e)
    }

    /// |E| on a regular grid `±half_width` around `focus` with spacing `step`.
    pub fn psf(&self, focus: Vec3, half_width: f64, step: f64) -> Result<PsfGrid> {
        self.psf_box(focus, [half_width; 3], step)
    }

    /// Like [`psf`](Self::psf) with a separate half-width per axis; a zero
    /// half-width collapses that axis to the focus plane.
    pub fn psf_box(&self, focus: Vec3, half_widths: [f64; 3], step: f64) -> Result<PsfGrid> {
        let offsets = half_widths.map(|h| z_samples(-h, h, step).unwrap_or_else(|_| vec![0.0]));
        let [xs, ys, zs] = &offsets;
        let mut points = Vec::with_capacity(xs.len() * ys.len() * zs.len());
        for dz in zs {
            for dy in ys {
                for dx in xs {
                    points.push(focus + Vec3::new(*dx, *dy, *dz));
                }
            }
        }
        let values = self.focused_field(focus, &points)?.iter().map(|e| e.norm()).collect();
        Ok(PsfGrid { focus, offsets, values })
    }

    /// Three axis-aligned cuts through `focus` (x, y, z), each sampled at
    /// `±half_width` with spacing `step`.
    pub fn psf_axes(&self, focus: Vec3, half_width: f64, step: f64) -> Result<[Vec<(f64, f64)>; 3]> {
        let offs = z_samples(-half_width, half_width, step)?;
        let mut points = Vec::with_capacity(3 * offs.len());
        for axis in 0..3 {
            for &o in &offs {
                let mut d = [0.0; 3];
                d[axis] = o;
                points.push(focus + Vec3::from_array(d));
            }
        }
        let e = self.focused_field(focus, &points)?;
        let n = offs.len();
        Ok(std::array::from_fn(|axis| {
            (0..n).map(|i| (offs[i], e[axis * n + i].norm())).collect()
        }))
    }

    /// Focal z-scan at each transverse pixel; the imaged depth is the z of
    /// the largest `|E^rec_n|` (smallest z on ties).
    pub fn reconstruct_profile(
        &self,
        pixels: &[(f64, f64)],
        z_start: f64,
        z_end: f64,
        dz: f64,
        k_order: usize,
    ) -> Result<ProfileImage> {
        let zs = z_samples(z_start, z_end, dz)?;
        let out = pixels
            .iter()
            .map(|&(x, y)| {
                let foci: Vec<Vec3> = zs.iter().map(|&z| Vec3::new(x, y, z)).collect();
                let resp = self.scan(&foci, k_order, None)?;
                Ok(pixel_from_scan(x, y, &resp, k_order))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ProfileImage {
            pixels: out,
            z_start,
            z_end,
            dz,
            k_order,
        })
    }
}

/// Argmax of `|E^rec|` along a z-scan at order `k`.
pub fn pixel_from_scan(x: f64, y: f64, scan: &[FocusResponse], k: usize) -> ProfilePixel {
    let mags: Vec<f64> = scan.iter().map(|r| r.total(k).norm()).collect();
    let i = argmax_first(&mags).unwrap_or(0);
    ProfilePixel {
        x,
        y,
        z_imaging: scan.get(i).map_or(f64::NAN, |r| r.focus.z),
        peak: mags.get(i).copied().unwrap_or(0.0),
    }
}

/// Regular transverse pixel grid centred at `(cx, cy)`.
pub fn pixel_grid(cx: f64, cy: f64, nx: usize, ny: usize, spacing: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            out.push((
                cx + (i as f64 - 0.5 * (nx as f64 - 1.0)) * spacing,
                cy + (j as f64 - 0.5 * (ny as f64 - 1.0)) * spacing,
            ));
        }
    }
    out
}
