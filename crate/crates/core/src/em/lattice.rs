//! Plane-to-plane propagation between point sets on parallel lattices. The
//! direct form sums every source per observer; the lattice form evaluates
//! the same centroid quadrature as 2-D linear convolutions.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use super::{radiate, CurrentSheet, FieldSample, Medium, SINGULAR_DISTANCE_MM};
use crate::error::{Error, Result};
use crate::geometry::{CVec3, Vec3, CZERO};
use crate::mesh::{RectGrid, SurfaceMesh};

/// Fields on a fixed observer mesh radiated by currents on a fixed source
/// mesh.
pub trait PlanePropagator: Send + Sync {
    fn source_len(&self) -> usize;
    fn observers(&self) -> &[Vec3];
    fn propagate(&self, j: &[CVec3], m: &[CVec3]) -> Result<Vec<FieldSample>>;
}

fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::LengthMismatch { expected, got })
    }
}

pub struct DirectPropagator {
    template: CurrentSheet,
    observers: Vec<Vec3>,
    medium: Medium,
}

impl DirectPropagator {
    pub fn new(source: &SurfaceMesh, observer: &SurfaceMesh, medium: Medium) -> Self {
        Self {
            template: CurrentSheet::zeros(source),
            observers: observer.centroids(),
            medium,
        }
    }
}

impl PlanePropagator for DirectPropagator {
    fn source_len(&self) -> usize {
        self.template.len()
    }

    fn observers(&self) -> &[Vec3] {
        &self.observers
    }

    fn propagate(&self, j: &[CVec3], m: &[CVec3]) -> Result<Vec<FieldSample>> {
        check_len(self.template.len(), j.len())?;
        check_len(self.template.len(), m.len())?;
        let sheet = CurrentSheet {
            j: j.to_vec(),
            m: m.to_vec(),
            ..self.template.clone()
        };
        radiate(&sheet, &self.observers, self.medium)
    }
}

/// 2-D FFT on an `nx × ny` row-major array. Spectra are kept in transposed
/// (column-major) order, which is all the pointwise products need.
struct Fft2 {
    nx: usize,
    ny: usize,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

fn transpose(data: &[Complex64], rows: usize, cols: usize) -> Vec<Complex64> {
    let mut out = vec![CZERO; data.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = data[r * cols + c];
        }
    }
    out
}

impl Fft2 {
    fn new(nx: usize, ny: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            nx,
            ny,
            fwd_x: planner.plan_fft_forward(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_x: planner.plan_fft_inverse(nx),
            inv_y: planner.plan_fft_inverse(ny),
        }
    }

    fn len(&self) -> usize {
        self.nx * self.ny
    }

    fn forward(&self, mut data: Vec<Complex64>) -> Vec<Complex64> {
        self.fwd_x.process(&mut data);
        let mut t = transpose(&data, self.ny, self.nx);
        self.fwd_y.process(&mut t);
        t
    }

    fn inverse(&self, mut spec: Vec<Complex64>) -> Vec<Complex64> {
        self.inv_y.process(&mut spec);
        let mut data = transpose(&spec, self.nx, self.ny);
        self.inv_x.process(&mut data);
        let scale = 1.0 / self.len() as f64;
        for v in &mut data {
            *v *= scale;
        }
        data
    }
}

/// Spectra of the ten scalar kernels for one (observer, source) sublattice
/// pair: `g`, `f_xx, f_xy, f_xz, f_yy, f_yz, f_zz`, `h_x, h_y, h_z`.
struct PairKernels {
    g: Vec<Complex64>,
    f: [Vec<Complex64>; 6],
    h: [Vec<Complex64>; 3],
}

const F_INDEX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];

/// In-plane lattice directions and spacings shared by source and observer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeAxes {
    pub u: Vec3,
    pub v: Vec3,
    pub du: f64,
    pub dv: f64,
}

impl LatticeAxes {
    pub fn of_grid(g: &RectGrid) -> Self {
        Self {
            u: g.u,
            v: g.v,
            du: g.du,
            dv: g.dv,
        }
    }
}

/// Points `origin + ix du u + iy dv v`; `cells[iy * nx + ix]` is the index
/// of the point occupying that node, if any.
#[derive(Debug, Clone)]
struct SubLattice {
    origin: Vec3,
    nx: usize,
    ny: usize,
    cells: Vec<Option<usize>>,
}

/// Splits `points` into sublattices of `axes`. Fails when the points are
/// not on such sublattices or when more than `max_subs` are needed.
fn decompose(points: &[Vec3], axes: &LatticeAxes, max_subs: usize) -> Option<Vec<SubLattice>> {
    const Q: f64 = 1e6;
    let n = axes.u.cross(axes.v);
    let mut groups: BTreeMap<(i64, i64, i64), Vec<(i64, i64, usize)>> = BTreeMap::new();
    for (idx, p) in points.iter().enumerate() {
        let a = (p.dot(axes.u) / axes.du * Q).round() as i64;
        let b = (p.dot(axes.v) / axes.dv * Q).round() as i64;
        let w = (p.dot(n) * Q).round() as i64;
        let q = Q as i64;
        let (ka, kb) = (a.rem_euclid(q), b.rem_euclid(q));
        groups.entry((ka, kb, w)).or_default().push(((a - ka) / q, (b - kb) / q, idx));
        if groups.len() > max_subs {
            return None;
        }
    }
    let tol = 1e-6 * axes.du.max(axes.dv);
    groups
        .into_values()
        .map(|members| {
            let i0 = members.iter().map(|m| m.0).min()?;
            let j0 = members.iter().map(|m| m.1).min()?;
            let nx = (members.iter().map(|m| m.0).max()? - i0 + 1) as usize;
            let ny = (members.iter().map(|m| m.1).max()? - j0 + 1) as usize;
            let node = |i: i64, j: i64| axes.u * ((i - i0) as f64 * axes.du) + axes.v * ((j - j0) as f64 * axes.dv);
            let mut origin = Vec3::ZERO;
            for &(i, j, idx) in &members {
                origin = origin + (points[idx] - node(i, j));
            }
            origin = origin * (1.0 / members.len() as f64);
            let mut cells = vec![None; nx * ny];
            for &(i, j, idx) in &members {
                if (points[idx] - node(i, j) - origin).norm() > tol {
                    return None;
                }
                cells[(j - j0) as usize * nx + (i - i0) as usize] = Some(idx);
            }
            Some(SubLattice { origin, nx, ny, cells })
        })
        .collect()
}

/// Smallest integer ≥ n whose only prime factors are 2, 3 and 5.
fn fast_len(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Plane-to-plane propagator for point sets lying on sublattices of common
/// axes. Every (observer, source) sublattice pair is a 2-D linear
/// convolution evaluated by FFT; the result equals centroid quadrature.
pub struct LatticePropagator {
    axes: LatticeAxes,
    src: Vec<SubLattice>,
    obs: Vec<SubLattice>,
    areas: Vec<f64>,
    observers: Vec<Vec3>,
    medium: Medium,
    fft: Fft2,
    /// Indexed `o * src.len() + s`.
    kernels: Vec<PairKernels>,
}

/// Upper bound on sublattices per side.
pub const MAX_SUBLATTICES: usize = 64;

impl LatticePropagator {
    /// Both meshes must carry lattice descriptors with the same axes and
    /// spacing.
    pub fn new(source: &SurfaceMesh, observer: &SurfaceMesh, medium: Medium) -> Result<Self> {
        let axes = match (source.grid, observer.grid) {
            (Some(s), Some(o))
                if (s.du - o.du).abs() < 1e-12
                    && (s.dv - o.dv).abs() < 1e-12
                    && (s.u - o.u).norm() < 1e-12
                    && (s.v - o.v).norm() < 1e-12 =>
            {
                LatticeAxes::of_grid(&s)
            }
            _ => {
                return Err(Error::InvalidConfig(
                    "lattice propagation needs two meshes on the same lattice".into(),
                ))
            }
        };
        let areas: Vec<f64> = source.facets.iter().map(|f| f.area).collect();
        Self::from_points(&source.centroids(), &areas, &observer.centroids(), axes, medium)
    }

    pub fn from_points(
        sources: &[Vec3],
        areas: &[f64],
        observers: &[Vec3],
        axes: LatticeAxes,
        medium: Medium,
    ) -> Result<Self> {
        check_len(sources.len(), areas.len())?;
        let not_lattice = || Error::InvalidConfig("points do not lie on the lattice".into());
        let src = decompose(sources, &axes, MAX_SUBLATTICES).ok_or_else(not_lattice)?;
        let obs = decompose(observers, &axes, MAX_SUBLATTICES).ok_or_else(not_lattice)?;
        let sx = src.iter().map(|s| s.nx).max().unwrap_or(1);
        let sy = src.iter().map(|s| s.ny).max().unwrap_or(1);
        let ox = obs.iter().map(|s| s.nx).max().unwrap_or(1);
        let oy = obs.iter().map(|s| s.ny).max().unwrap_or(1);
        let fft = Fft2::new(fast_len(sx + ox - 1), fast_len(sy + oy - 1));
        let pairs: Vec<(usize, usize)> = (0..obs.len())
            .flat_map(|o| (0..src.len()).map(move |s| (o, s)))
            .collect();
        let kernels = pairs
            .par_iter()
            .map(|&(o, s)| build_pair(&axes, &obs[o], &src[s], medium, &fft))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            axes,
            src,
            obs,
            areas: areas.to_vec(),
            observers: observers.to_vec(),
            medium,
            fft,
            kernels,
        })
    }

    pub fn axes(&self) -> LatticeAxes {
        self.axes
    }

    fn scatter(&self, sub: &SubLattice, values: &[CVec3], comp: usize) -> Vec<Complex64> {
        let w = self.fft.nx;
        let mut buf = vec![CZERO; self.fft.len()];
        for iy in 0..sub.ny {
            for ix in 0..sub.nx {
                if let Some(idx) = sub.cells[iy * sub.nx + ix] {
                    let v = values[idx];
                    let c = match comp {
                        0 => v.x,
                        1 => v.y,
                        _ => v.z,
                    };
                    buf[iy * w + ix] = c * self.areas[idx];
                }
            }
        }
        buf
    }
}

fn build_pair(
    axes: &LatticeAxes,
    obs: &SubLattice,
    src: &SubLattice,
    medium: Medium,
    fft: &Fft2,
) -> Result<PairKernels> {
    let (w, h) = (fft.nx, fft.ny);
    let offset = obs.origin - src.origin;
    let k = medium.k;
    let mut g = vec![CZERO; w * h];
    let mut f: [Vec<Complex64>; 6] = std::array::from_fn(|_| vec![CZERO; w * h]);
    let mut hh: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![CZERO; w * h]);
    for dy in -(src.ny as i64 - 1)..obs.ny as i64 {
        for dx in -(src.nx as i64 - 1)..obs.nx as i64 {
            let r = offset + axes.u * (dx as f64 * axes.du) + axes.v * (dy as f64 * axes.dv);
            let rr = r.norm();
            if rr < SINGULAR_DISTANCE_MM {
                return Err(Error::SingularKernel {
                    observer: r,
                    source_index: 0,
                    distance: rr,
                });
            }
            let inv = 1.0 / rr;
            let inv3 = inv * inv * inv;
            let inv5 = inv3 * inv * inv;
            let kr = k * rr;
            let jkr = Complex64::new(-kr.im, kr.re);
            let kr2 = kr * kr;
            let phase = (-jkr).exp();
            let g1 = (-1.0 - jkr + kr2) * inv3 * phase;
            let g2 = (3.0 + 3.0 * jkr - kr2) * inv5 * phase;
            let g3 = (1.0 + jkr) * inv3 * phase;
            let ix = dx.rem_euclid(w as i64) as usize;
            let iy = dy.rem_euclid(h as i64) as usize;
            let idx = iy * w + ix;
            let rv = [r.x, r.y, r.z];
            g[idx] = g1;
            for a in 0..3 {
                for b in a..3 {
                    f[F_INDEX[a][b]][idx] = g2 * (rv[a] * rv[b]);
                }
                hh[a][idx] = g3 * rv[a];
            }
        }
    }
    Ok(PairKernels {
        g: fft.forward(g),
        f: f.map(|v| fft.forward(v)),
        h: hh.map(|v| fft.forward(v)),
    })
}

impl PlanePropagator for LatticePropagator {
    fn source_len(&self) -> usize {
        self.areas.len()
    }

    fn observers(&self) -> &[Vec3] {
        &self.observers
    }

    fn propagate(&self, j: &[CVec3], m: &[CVec3]) -> Result<Vec<FieldSample>> {
        let n = self.source_len();
        check_len(n, j.len())?;
        check_len(n, m.len())?;
        let magnetic = m.iter().any(|v| *v != CVec3::ZERO);
        let ns = self.src.len();
        // Spectra of every source component: [sub][J x,y,z, M x,y,z].
        let jobs: Vec<(usize, usize)> = (0..ns)
            .flat_map(|s| (0..if magnetic { 6 } else { 3 }).map(move |c| (s, c)))
            .collect();
        let spectra: Vec<Vec<Complex64>> = jobs
            .par_iter()
            .map(|&(s, c)| {
                let values = if c < 3 { j } else { m };
                self.fft.forward(self.scatter(&self.src[s], values, c % 3))
            })
            .collect();
        let per = if magnetic { 6 } else { 3 };
        let spec = |s: usize, c: usize| -> Option<&Vec<Complex64>> {
            if c < per {
                Some(&spectra[s * per + c])
            } else {
                None
            }
        };

        let i = Complex64::i();
        let k = self.medium.k;
        let eta = self.medium.eta;
        let a1 = i * eta / (4.0 * PI * k);
        let a2 = i / (4.0 * PI * k * eta);
        let b = 1.0 / (4.0 * PI);
        let len = self.fft.len();

        // Per observer sublattice: six output spectra (E x,y,z then H x,y,z).
        let outputs: Vec<Vec<Vec<Complex64>>> = (0..self.obs.len())
            .into_par_iter()
            .map(|o| {
                let mut out: Vec<Vec<Complex64>> = vec![vec![CZERO; len]; 6];
                for s in 0..ns {
                    let kern = &self.kernels[o * ns + s];
                    // J: E += -a1 (g J + f J), H += b (J × h)
                    // M: H += -a2 (g M + f M), E += -b (M × h)
                    for (base, direct_out, cross_out, dc, cc) in [
                        (0usize, 0usize, 3usize, -a1, Complex64::new(b, 0.0)),
                        (3, 3, 0, -a2, Complex64::new(-b, 0.0)),
                    ] {
                        let src: Vec<&Vec<Complex64>> = match (0..3)
                            .map(|c| spec(s, base + c))
                            .collect::<Option<Vec<_>>>()
                        {
                            Some(v) => v,
                            None => continue,
                        };
                        for a in 0..3 {
                            let (a1i, a2i) = ((a + 1) % 3, (a + 2) % 3);
                            let o = &mut out[direct_out + a];
                            for q in 0..len {
                                let mut acc = kern.g[q] * src[a][q];
                                for (bb, sb) in src.iter().enumerate() {
                                    acc += kern.f[F_INDEX[a][bb]][q] * sb[q];
                                }
                                o[q] += dc * acc;
                            }
                            // (X × R)_a = X_{a+1} R_{a+2} − X_{a+2} R_{a+1}
                            let o = &mut out[cross_out + a];
                            for q in 0..len {
                                let v = src[a1i][q] * kern.h[a2i][q] - src[a2i][q] * kern.h[a1i][q];
                                o[q] += cc * v;
                            }
                        }
                    }
                }
                out.into_iter().map(|v| self.fft.inverse(v)).collect()
            })
            .collect();

        let w = self.fft.nx;
        let mut fields = vec![
            FieldSample {
                position: Vec3::ZERO,
                e: CVec3::ZERO,
                h: CVec3::ZERO,
            };
            self.observers.len()
        ];
        for (sub, o) in self.obs.iter().zip(&outputs) {
            for iy in 0..sub.ny {
                for ix in 0..sub.nx {
                    if let Some(idx) = sub.cells[iy * sub.nx + ix] {
                        let q = iy * w + ix;
                        fields[idx] = FieldSample {
                            position: self.observers[idx],
                            e: CVec3::new(o[0][q], o[1][q], o[2][q]),
                            h: CVec3::new(o[3][q], o[4][q], o[5][q]),
                        };
                    }
                }
            }
        }
        Ok(fields)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mesh_panel;
    use crate::scene::{ComplexPermittivity, PhysicalConstants};

    fn currents(n: usize, seed: f64) -> Vec<CVec3> {
        (0..n)
            .map(|i| {
                let x = i as f64 * 0.37 + seed;
                CVec3::new(
                    Complex64::new(x.sin(), (1.3 * x).cos()),
                    Complex64::new((0.7 * x).cos(), -(2.1 * x).sin()),
                    Complex64::new(0.2 * (x * 1.9).sin(), 0.1),
                )
            })
            .collect()
    }

    fn max_rel(a: &[FieldSample], b: &[FieldSample]) -> f64 {
        let scale = b.iter().map(|f| f.e.norm().max(f.h.norm() * 376.73)).fold(0.0, f64::max);
        a.iter()
            .zip(b)
            .map(|(x, y)| ((x.e - y.e).norm()).max((x.h - y.h).norm() * 376.73) / scale)
            .fold(0.0, f64::max)
    }

    #[test]
    fn lattice_equals_direct() {
        let c = PhysicalConstants::new(24.16).unwrap();
        let obj = mesh_panel(Vec3::new(5.0, 3.0, 780.0), Vec3::X, -Vec3::Y, 30.0, 20.0, 4.0).unwrap();
        let bot = obj.translated(Vec3::new(0.0, 0.0, 12.0));
        for medium in [
            Medium::free_space(&c),
            Medium::dielectric(&c, ComplexPermittivity::new(4.0, 0.2).unwrap()),
        ] {
            let j = currents(obj.len(), 0.0);
            for m in [vec![CVec3::ZERO; obj.len()], currents(obj.len(), 1.7)] {
                let direct = DirectPropagator::new(&obj, &bot, medium).propagate(&j, &m).unwrap();
                let fast = LatticePropagator::new(&obj, &bot, medium).unwrap().propagate(&j, &m).unwrap();
                assert!(max_rel(&fast, &direct) < 1e-9, "{}", max_rel(&fast, &direct));
                // and back again, with the flipped observer lattice
                let back = LatticePropagator::new(&bot, &obj.flipped(), medium).unwrap();
                let direct = DirectPropagator::new(&bot, &obj, medium).propagate(&j, &m).unwrap();
                assert!(max_rel(&back.propagate(&j, &m).unwrap(), &direct) < 1e-9);
            }
        }
    }

    #[test]
    fn sublattices_with_holes_equal_direct() {
        let c = PhysicalConstants::new(24.16).unwrap();
        let pitch = 6.2;
        // coarse source panel, observers on a half-pitch panel with a hole
        let src = mesh_panel(Vec3::new(0.0, 40.0, 0.0), Vec3::X, Vec3::Y, 8.0 * pitch, 6.0 * pitch, pitch * 2.0).unwrap();
        let full = mesh_panel(Vec3::new(3.1, 0.0, 300.0), Vec3::X, -Vec3::Y, 20.0 * pitch / 2.0, 14.0 * pitch / 2.0, pitch).unwrap();
        let keep: Vec<_> = full
            .facets
            .iter()
            .filter(|f| (f.centroid.x - 3.1).abs() > 10.0 || f.centroid.y.abs() > 8.0)
            .cloned()
            .collect();
        assert!(keep.len() < full.len());
        let obs = SurfaceMesh { facets: keep, target_edge_length: pitch, grid: None };
        let axes = LatticeAxes { u: Vec3::X, v: Vec3::Y, du: pitch, dv: pitch };
        let areas: Vec<f64> = src.facets.iter().map(|f| f.area).collect();
        let medium = Medium::free_space(&c);
        let fast = LatticePropagator::from_points(&src.centroids(), &areas, &obs.centroids(), axes, medium).unwrap();
        let j = currents(src.len(), 0.3);
        for m in [vec![CVec3::ZERO; src.len()], currents(src.len(), 2.2)] {
            let direct = DirectPropagator::new(&src, &obs, medium).propagate(&j, &m).unwrap();
            let got = fast.propagate(&j, &m).unwrap();
            assert!(max_rel(&got, &direct) < 1e-9, "{}", max_rel(&got, &direct));
        }
        // and the reverse direction
        let areas: Vec<f64> = obs.facets.iter().map(|f| f.area).collect();
        let back = LatticePropagator::from_points(&obs.centroids(), &areas, &src.centroids(), axes, medium).unwrap();
        let j = currents(obs.len(), 0.9);
        let m = currents(obs.len(), 1.1);
        let direct = DirectPropagator::new(&obs, &src, medium).propagate(&j, &m).unwrap();
        assert!(max_rel(&back.propagate(&j, &m).unwrap(), &direct) < 1e-9);
    }

    #[test]
    fn off_lattice_points_are_rejected() {
        let c = PhysicalConstants::new(24.16).unwrap();
        let axes = LatticeAxes { u: Vec3::X, v: Vec3::Y, du: 1.0, dv: 1.0 };
        let pts = vec![Vec3::new(0.0, 0.0, 0.0), Vec3::new(1.0, 0.0, 0.0), Vec3::new(2.5, 0.0, 0.0)];
        let ok = LatticePropagator::from_points(&pts[..2], &[1.0, 1.0], &[Vec3::new(0.0, 0.0, 5.0)], axes, Medium::free_space(&c));
        assert!(ok.is_ok());
        // 65 distinct sublattices exceeds the bound
        let many: Vec<Vec3> = (0..65).map(|i| Vec3::new(i as f64 / 65.0, 0.0, 0.0)).collect();
        let r = LatticePropagator::from_points(&many, &vec![1.0; 65], &pts, axes, Medium::free_space(&c));
        assert!(r.is_err());
    }

    #[test]
    fn rejects_mismatched_lattices() {
        let c = PhysicalConstants::new(24.16).unwrap();
        let a = mesh_panel(Vec3::ZERO, Vec3::X, Vec3::Y, 10.0, 10.0, 2.0).unwrap();
        let b = mesh_panel(Vec3::new(0.0, 0.0, 5.0), Vec3::X, Vec3::Y, 12.0, 10.0, 2.0).unwrap();
        assert!(LatticePropagator::new(&a, &b, Medium::free_space(&c)).is_err());
    }
}
