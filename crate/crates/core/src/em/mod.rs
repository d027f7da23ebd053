//! Free-space near-field radiation of surface currents and the MECA
//! boundary condition that turns incident fields into induced currents.

mod lattice;
mod meca;

pub use lattice::{DirectPropagator, LatticeAxes, LatticePropagator, PlanePropagator};
pub use meca::{fresnel, induce_currents, meca_currents, Boundary};

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{CVec3, Vec3, CZERO};
use crate::mesh::SurfaceMesh;
use crate::scene::{ComplexPermittivity, PhysicalConstants, ETA0};

/// Minimum observer-to-centroid distance accepted by [`radiate`], mm.
pub const SINGULAR_DISTANCE_MM: f64 = 1e-6;

/// Square root on the branch with `Im ≤ 0` (and `Re ≥ 0` when real), i.e.
/// the branch for which `e^{-j k z}` decays with `e^{+jωt}` time dependence.
pub fn decaying_sqrt(z: Complex64) -> Complex64 {
    let s = z.sqrt();
    if s.im > 0.0 || (s.im == 0.0 && s.re < 0.0) {
        -s
    } else {
        s
    }
}

/// Homogeneous medium: wavenumber (rad/mm) and wave impedance (Ω).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Medium {
    pub k: Complex64,
    pub eta: Complex64,
}

impl Medium {
    pub fn free_space(c: &PhysicalConstants) -> Self {
        Self {
            k: Complex64::new(c.k0, 0.0),
            eta: Complex64::new(ETA0, 0.0),
        }
    }

    pub fn dielectric(c: &PhysicalConstants, eps: ComplexPermittivity) -> Self {
        let n = eps.index();
        Self {
            k: n * c.k0,
            eta: ETA0 / n,
        }
    }

    fn is_lossless(&self) -> bool {
        self.k.im == 0.0 && self.eta.im == 0.0
    }
}

/// Facet-constant electric and magnetic surface currents on a mesh.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentSheet {
    pub centroids: Vec<Vec3>,
    pub areas: Vec<f64>,
    pub normals: Vec<Vec3>,
    pub j: Vec<CVec3>,
    pub m: Vec<CVec3>,
}

impl CurrentSheet {
    pub fn new(mesh: &SurfaceMesh, j: Vec<CVec3>, m: Vec<CVec3>) -> Result<Self> {
        for v in [&j, &m] {
            if v.len() != mesh.len() {
                return Err(Error::LengthMismatch {
                    expected: mesh.len(),
                    got: v.len(),
                });
            }
        }
        Ok(Self {
            centroids: mesh.centroids(),
            areas: mesh.facets.iter().map(|f| f.area).collect(),
            normals: mesh.facets.iter().map(|f| f.normal).collect(),
            j,
            m,
        })
    }

    pub fn electric(mesh: &SurfaceMesh, j: Vec<CVec3>) -> Result<Self> {
        let m = vec![CVec3::ZERO; j.len()];
        Self::new(mesh, j, m)
    }

    pub fn zeros(mesh: &SurfaceMesh) -> Self {
        let n = mesh.len();
        Self::new(mesh, vec![CVec3::ZERO; n], vec![CVec3::ZERO; n]).expect("lengths agree")
    }

    pub fn len(&self) -> usize {
        self.j.len()
    }

    pub fn is_empty(&self) -> bool {
        self.j.is_empty()
    }

    pub fn has_magnetic(&self) -> bool {
        self.m.iter().any(|v| *v != CVec3::ZERO)
    }

    /// Same facets with both currents multiplied by `s`.
    pub fn scaled(&self, s: Complex64) -> Self {
        Self {
            j: self.j.iter().map(|v| *v * s).collect(),
            m: self.m.iter().map(|v| *v * s).collect(),
            ..self.clone()
        }
    }

    /// Concatenates sheets (facet lists appended in order).
    pub fn concat(parts: &[&CurrentSheet]) -> Self {
        let mut out = Self {
            centroids: Vec::new(),
            areas: Vec::new(),
            normals: Vec::new(),
            j: Vec::new(),
            m: Vec::new(),
        };
        for p in parts {
            out.centroids.extend_from_slice(&p.centroids);
            out.areas.extend_from_slice(&p.areas);
            out.normals.extend_from_slice(&p.normals);
            out.j.extend_from_slice(&p.j);
            out.m.extend_from_slice(&p.m);
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.j.iter().chain(&self.m).all(|v| v.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldSample {
    pub position: Vec3,
    pub e: CVec3,
    pub h: CVec3,
}

/// Near-field radiation of `sources` in `medium`, evaluated at `observers` by
/// centroid quadrature. Observers are processed in parallel; each observer
/// sums its sources in a fixed order, so results are reproducible
/// regardless of the thread count.
pub fn radiate(sources: &CurrentSheet, observers: &[Vec3], medium: Medium) -> Result<Vec<FieldSample>> {
    let magnetic = sources.has_magnetic();
    let lossless = medium.is_lossless();
    observers
        .par_iter()
        .map(|&r| {
            if lossless {
                radiate_lossless(sources, r, medium, magnetic)
            } else {
                radiate_point(sources, r, medium)
            }
        })
        .collect()
}

/// Kernel sums for one observer; see [`radiate_point`].
#[derive(Default)]
struct Sums {
    /// Σ a e^{-jkR} (G1 J + G2 (J·R) R)
    sj: CVec3,
    /// Σ a e^{-jkR} G3 J×R
    sj3: CVec3,
    /// Σ a e^{-jkR} (G1 M + G2 (M·R) R)
    sm: CVec3,
    /// Σ a e^{-jkR} G3 M×R
    sm3: CVec3,
}

fn finish(r: Vec3, s: Sums, medium: Medium) -> FieldSample {
    let k = medium.k;
    let eta = medium.eta;
    let j = Complex64::i();
    let a1 = j * eta / (4.0 * PI * k);
    let a2 = j / (4.0 * PI * k * eta);
    let b = 1.0 / (4.0 * PI);
    FieldSample {
        position: r,
        e: s.sj * (-a1) - s.sm3 * b,
        h: s.sm * (-a2) + s.sj3 * b,
    }
}

fn singular(r: Vec3, index: usize, distance: f64) -> Error {
    Error::SingularKernel {
        observer: r,
        source_index: index,
        distance,
    }
}

fn radiate_point(src: &CurrentSheet, r: Vec3, medium: Medium) -> Result<FieldSample> {
    let k = medium.k;
    let mut s = Sums::default();
    for i in 0..src.len() {
        let d = r - src.centroids[i];
        let r2 = d.dot(d);
        let rr = r2.sqrt();
        if rr < SINGULAR_DISTANCE_MM {
            return Err(singular(r, i, rr));
        }
        let inv = 1.0 / rr;
        let inv3 = inv * inv * inv;
        let inv5 = inv3 * inv * inv;
        let kr = k * rr;
        let jkr = Complex64::new(-kr.im, kr.re);
        let kr2 = kr * kr;
        let phase = (-jkr).exp() * src.areas[i];
        let g1 = (-1.0 - jkr + kr2) * inv3 * phase;
        let g2 = (3.0 + 3.0 * jkr - kr2) * inv5 * phase;
        let g3 = (1.0 + jkr) * inv3 * phase;
        let jv = src.j[i];
        let mv = src.m[i];
        let jd = jv.dot_real(d) * g2;
        let md = mv.dot_real(d) * g2;
        s.sj += jv * g1 + d * jd;
        s.sj3 += jv.cross_real(d) * g3;
        s.sm += mv * g1 + d * md;
        s.sm3 += mv.cross_real(d) * g3;
    }
    Ok(finish(r, s, medium))
}

/// Real wavenumber: the phase factor needs one `sin_cos` per source.
fn radiate_lossless(src: &CurrentSheet, r: Vec3, medium: Medium, magnetic: bool) -> Result<FieldSample> {
    let k = medium.k.re;
    let mut s = Sums::default();
    for i in 0..src.len() {
        let d = r - src.centroids[i];
        let r2 = d.dot(d);
        let rr = r2.sqrt();
        if rr < SINGULAR_DISTANCE_MM {
            return Err(singular(r, i, rr));
        }
        let inv = 1.0 / rr;
        let inv3 = inv * inv * inv;
        let inv5 = inv3 * inv * inv;
        let kr = k * rr;
        let kr2 = kr * kr;
        let (sn, cs) = kr.sin_cos();
        let a = src.areas[i];
        // e^{-jkR} = cs - j sn
        let phase = Complex64::new(cs * a, -sn * a);
        let g1 = Complex64::new(-1.0 + kr2, -kr) * (inv3 * phase);
        let g2 = Complex64::new(3.0 - kr2, 3.0 * kr) * (inv5 * phase);
        let g3 = Complex64::new(1.0, kr) * (inv3 * phase);
        let jv = src.j[i];
        let jd = jv.dot_real(d) * g2;
        s.sj += jv * g1 + d * jd;
        s.sj3 += jv.cross_real(d) * g3;
        if magnetic {
            let mv = src.m[i];
            let md = mv.dot_real(d) * g2;
            s.sm += mv * g1 + d * md;
            s.sm3 += mv.cross_real(d) * g3;
        }
    }
    Ok(finish(r, s, medium))
}

/// Reaction `Σ area (E·J − H·M)` of fields sampled at the facets of `sheet`.
pub fn reaction(fields: &[FieldSample], sheet: &CurrentSheet) -> Result<Complex64> {
    if fields.len() != sheet.len() {
        return Err(Error::LengthMismatch {
            expected: sheet.len(),
            got: fields.len(),
        });
    }
    let mut acc = CZERO;
    for (i, f) in fields.iter().enumerate() {
        acc += (f.e.dot(sheet.j[i]) - f.h.dot(sheet.m[i])) * sheet.areas[i];
    }
    Ok(acc)
}
