//! Induced currents from incident fields (MECA) and Fresnel coefficients.

use num_complex::Complex64;

use super::{decaying_sqrt, CurrentSheet, FieldSample};
use crate::error::{Error, Result};
use crate::geometry::{real_cross, CVec3, Vec3};
use crate::mesh::SurfaceMesh;
use crate::scene::{ComplexPermittivity, ETA0};

/// What lies on the far side of a surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    Pec,
    Dielectric(ComplexPermittivity),
}

/// TE and TM reflection coefficients for a wave in medium 1 hitting medium 2
/// at incidence angle `theta_inc` (non-magnetic media).
pub fn fresnel(
    theta_inc: f64,
    eps1: ComplexPermittivity,
    eps2: ComplexPermittivity,
) -> (Complex64, Complex64) {
    let cos_i = theta_inc.cos();
    let sin_i = theta_inc.sin();
    fresnel_cos(cos_i, sin_i, eps1.value(), eps2.value())
}

fn fresnel_cos(cos_i: f64, sin_i: f64, e1: Complex64, e2: Complex64) -> (Complex64, Complex64) {
    let ratio = e2 / e1;
    // q = n cosθ_t = k_z2 / (k0 n1). A radicand with Re ≥ 0 is a travelling
    // wave and keeps the outgoing root; otherwise the decaying root.
    let n1 = decaying_sqrt(e1);
    let rad = e2 - e1 * (sin_i * sin_i);
    let kz = if rad.re >= 0.0 { rad.sqrt() } else { decaying_sqrt(rad) };
    let q = kz / n1;
    let r_te = (cos_i - q) / (cos_i + q);
    let r_tm = (q - ratio * cos_i) / (q + ratio * cos_i);
    (r_te, r_tm)
}

/// MECA currents for a locally plane wave `(e, h)` incident on a facet with
/// unit normal `n` (pointing into the incident medium).
///
/// `k_hat` is the propagation direction, `e_te` the TE unit vector
/// (perpendicular to the plane of incidence), `eta1` the impedance of the
/// incident medium.
pub fn meca_currents(
    e: CVec3,
    n: Vec3,
    k_hat: Vec3,
    e_te: Vec3,
    r_te: Complex64,
    r_tm: Complex64,
    eta1: Complex64,
) -> (CVec3, CVec3) {
    let cos_t = -n.dot(k_hat);
    let e_tm = e_te.cross(k_hat);
    let a_te = e.dot_real(e_te);
    let a_tm = e.dot_real(e_tm);
    let one = Complex64::new(1.0, 0.0);
    let n_x_te = n.cross(e_te);
    let te_x_n = e_te.cross(n);
    let j = (e_te * (a_te * cos_t * (one - r_te)) + n_x_te * (a_tm * (one - r_tm))) * (one / eta1);
    let m = te_x_n * (a_te * (one + r_te)) + e_te * (a_tm * cos_t * (one + r_tm));
    (j, m)
}

/// Any unit vector perpendicular to `n`.
fn any_tangent(n: Vec3) -> Vec3 {
    let trial = if n.x.abs() < 0.9 { Vec3::X } else { Vec3::Y };
    n.cross(trial).normalized().expect("non-parallel trial vector")
}

/// Induced currents on `surface` from the incident field sampled at every
/// facet centroid. `eps_outer` is the medium the normals point into.
///
/// A facet is lit when the incident Poynting vector points into the surface
/// (`n̂·S < 0`); shadowed facets carry no current.
pub fn induce_currents(
    incident: &[FieldSample],
    surface: &SurfaceMesh,
    eps_outer: ComplexPermittivity,
    inner: Boundary,
) -> Result<CurrentSheet> {
    if incident.len() != surface.len() {
        return Err(Error::LengthMismatch {
            expected: surface.len(),
            got: incident.len(),
        });
    }
    let eta1 = ETA0 / eps_outer.index();
    let mut js = Vec::with_capacity(surface.len());
    let mut ms = Vec::with_capacity(surface.len());
    for (index, (f, facet)) in incident.iter().zip(&surface.facets).enumerate() {
        let n = facet.normal;
        let nn = n.norm();
        if (nn - 1.0).abs() > 1e-9 {
            return Err(Error::NonUnitNormal { index, norm: nn });
        }
        let s = f.e.cross(f.h.conj()).re();
        let lit = n.dot(s) < 0.0;
        let (j, m) = match (lit, inner) {
            (false, _) => (CVec3::ZERO, CVec3::ZERO),
            (true, Boundary::Pec) => (real_cross(n, f.h) * 2.0, CVec3::ZERO),
            (true, Boundary::Dielectric(eps2)) => {
                let k_hat = s.normalized().expect("lit facet has non-zero flux");
                let cos_i = (-n.dot(k_hat)).min(1.0);
                let sin_i = (1.0 - cos_i * cos_i).max(0.0).sqrt();
                let e_te = match k_hat.cross(n).normalized() {
                    Some(t) if sin_i > 1e-9 => t,
                    _ => {
                        // Normal incidence: follow the incident polarization.
                        let et = f.e - n * f.e.dot_real(n);
                        et.re()
                            .normalized()
                            .or_else(|| et.im().normalized())
                            .unwrap_or_else(|| any_tangent(n))
                    }
                };
                let (r_te, r_tm) = fresnel_cos(cos_i, sin_i, eps_outer.value(), eps2.value());
                meca_currents(f.e, n, k_hat, e_te, r_te, r_tm, eta1)
            }
        };
        js.push(j);
        ms.push(m);
    }
    CurrentSheet::new(surface, js, ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::mesh_rectangle;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    const AIR: ComplexPermittivity = ComplexPermittivity::AIR;

    fn eps(re: f64, im: f64) -> ComplexPermittivity {
        ComplexPermittivity::new(re, im).unwrap()
    }

    #[test]
    fn matched_media_do_not_reflect() {
        let (a, b) = fresnel(0.0, AIR, AIR);
        assert_eq!((a, b), (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
        let (a, b) = fresnel(0.7, eps(3.0, 0.1), eps(3.0, 0.1));
        assert!(a.norm() < 1e-15 && b.norm() < 1e-15);
    }

    #[test]
    fn normal_incidence_on_eps4() {
        let (te, tm) = fresnel(0.0, AIR, eps(4.0, 0.0));
        assert!((te - Complex64::new(-1.0 / 3.0, 0.0)).norm() < 1e-15);
        // Both coefficients reduce to (1 - n) / (1 + n) at normal incidence.
        assert!((tm - te).norm() < 1e-15);
    }

    #[test]
    fn grazing_limit() {
        let (te, _) = fresnel(FRAC_PI_2 - 1e-9, AIR, eps(4.0, 0.0));
        assert!((te + 1.0).norm() < 1e-6);
    }

    #[test]
    fn brewster_angle_zeroes_tm() {
        let theta = 2.0_f64.atan();
        let (_, tm) = fresnel(theta, AIR, eps(4.0, 0.0));
        assert!(tm.norm() < 1e-12);
    }

    #[test]
    fn total_internal_reflection_is_lossless() {
        let (te, tm) = fresnel(1.0, eps(4.0, 0.0), AIR);
        assert!((te.norm() - 1.0).abs() < 1e-12);
        assert!((tm.norm() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn lossless_energy_bound(theta in 0.0..1.5707, e1 in 1.0..10.0, e2 in 1.0..10.0) {
            let (te, tm) = fresnel(theta, eps(e1, 0.0), eps(e2, 0.0));
            prop_assert!(te.norm_sqr() <= 1.0 + 1e-12);
            prop_assert!(tm.norm_sqr() <= 1.0 + 1e-12);
        }

        #[test]
        fn lossy_media_still_bounded(theta in 0.0..1.5707, e2 in 1.0..10.0, loss in 0.0..2.0) {
            let (te, tm) = fresnel(theta, AIR, eps(e2, loss));
            prop_assert!(te.norm() <= 1.0 + 1e-12);
            prop_assert!(tm.norm() <= 1.0 + 1e-12);
        }
    }

    /// Plane wave travelling along `k_hat` with polarization `pol`.
    fn plane_wave(k_hat: Vec3, pol: Vec3, at: Vec3) -> FieldSample {
        let e = pol.to_complex();
        FieldSample {
            position: at,
            e,
            h: real_cross(k_hat, e) * (1.0 / ETA0),
        }
    }

    fn single_facet_mesh() -> SurfaceMesh {
        // One facet, normal +z.
        let mut m = mesh_rectangle(1.0, 1.0, 10.0).unwrap();
        m.facets.truncate(1);
        m.grid = None;
        m
    }

    #[test]
    fn pec_limit_matches_formula() {
        let mesh = single_facet_mesh();
        let n = mesh.facets[0].normal;
        for (kx, pol) in [(0.0, Vec3::X), (0.5, Vec3::Y), (0.6, Vec3::new(0.8, 0.0, 0.6))] {
            let k_hat = Vec3::new(kx, 0.0, -(1.0 - kx * kx as f64).sqrt());
            let pol = (pol - k_hat * pol.dot(k_hat)).normalized().unwrap();
            let f = plane_wave(k_hat, pol, mesh.facets[0].centroid);
            let one = Complex64::new(-1.0, 0.0);
            let e_te = k_hat.cross(n).normalized().unwrap_or(pol);
            let (j, m) = meca_currents(f.e, n, k_hat, e_te, one, one, Complex64::new(ETA0, 0.0));
            let direct = real_cross(n, f.h) * 2.0;
            assert!((j - direct).norm() < 1e-12 * direct.norm());
            assert_eq!(m, CVec3::ZERO);

            let sheet = induce_currents(&[f], &mesh, AIR, Boundary::Pec).unwrap();
            assert!((sheet.j[0] - direct).norm() < 1e-15);
            assert_eq!(sheet.m[0], CVec3::ZERO);
        }
    }

    #[test]
    fn matched_medium_is_field_continuation() {
        let mesh = single_facet_mesh();
        let n = mesh.facets[0].normal;
        let k_hat = Vec3::new(0.3, 0.2, -(1.0f64 - 0.13).sqrt());
        let pol = Vec3::Y.cross(k_hat).normalized().unwrap();
        let f = plane_wave(k_hat, pol, mesh.facets[0].centroid);
        let sheet = induce_currents(&[f], &mesh, AIR, Boundary::Dielectric(AIR)).unwrap();
        // Equivalence-principle currents J = n̂×H, M = E×n̂.
        assert!((sheet.j[0] - real_cross(n, f.h)).norm() < 1e-12 * sheet.j[0].norm());
        assert!((sheet.m[0] - f.e.cross_real(n)).norm() < 1e-12 * sheet.m[0].norm());
    }

    #[test]
    fn normal_incidence_dielectric() {
        let mesh = single_facet_mesh();
        let n = mesh.facets[0].normal;
        let f = plane_wave(-Vec3::Z, Vec3::X, mesh.facets[0].centroid);
        let sheet = induce_currents(&[f], &mesh, AIR, Boundary::Dielectric(eps(4.0, 0.0))).unwrap();
        let r = -1.0 / 3.0;
        // J = (1 - R) n̂×H, M = (1 + R) E×n̂
        let j = real_cross(n, f.h) * (1.0 - r);
        let m = f.e.cross_real(n) * (1.0 + r);
        assert!((sheet.j[0] - j).norm() < 1e-12 * j.norm());
        assert!((sheet.m[0] - m).norm() < 1e-12 * m.norm());
    }

    #[test]
    fn shadowed_facet_has_no_current() {
        let mesh = single_facet_mesh();
        let f = plane_wave(Vec3::Z, Vec3::X, mesh.facets[0].centroid);
        for b in [Boundary::Pec, Boundary::Dielectric(eps(2.0, 0.0))] {
            let sheet = induce_currents(&[f], &mesh, AIR, b).unwrap();
            assert_eq!(sheet.j[0], CVec3::ZERO);
            assert_eq!(sheet.m[0], CVec3::ZERO);
        }
    }

    #[test]
    fn lossy_to_lossless_normal_incidence() {
        // n1 = sqrt(4 - 0.2j) into air: R_TE = (n1 - 1)/(n1 + 1)
        let e1 = ComplexPermittivity::new(4.0, 0.2).unwrap();
        let n1 = e1.index();
        let (te, tm) = fresnel(0.0, e1, AIR);
        let expect = (n1 - 1.0) / (n1 + 1.0);
        assert!((te - expect).norm() < 1e-12, "{te} vs {expect}");
        assert!((tm - te).norm() < 1e-12);
        for theta in [0.1, 0.3, 0.45] {
            let (te, tm) = fresnel(theta, e1, AIR);
            assert!(te.norm() <= 1.0 + 1e-9 && tm.norm() <= 1.0 + 1e-9, "{theta}: {te} {tm}");
        }
    }

    #[test]
    fn non_unit_normal_rejected() {
        let mut mesh = single_facet_mesh();
        mesh.facets[0].normal = Vec3::new(0.0, 0.0, 2.0);
        let f = plane_wave(-Vec3::Z, Vec3::X, mesh.facets[0].centroid);
        assert!(matches!(
            induce_currents(&[f], &mesh, AIR, Boundary::Pec),
            Err(Error::NonUnitNormal { index: 0, .. })
        ));
    }
}
