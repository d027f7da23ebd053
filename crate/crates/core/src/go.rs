//! Ray-optics forward model: feed → patch → slab → patch → feed, with the
//! slab's reflection (including all internal bounces) given by a
//! transmission-line model of the layered target.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::em::decaying_sqrt;
use crate::error::{Error, Result};
use crate::geometry::{Vec3, CZERO};
use crate::reflectarray::{binary_phase, PhaseMask};
use crate::scene::{ComplexPermittivity, Scene};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Te,
    Tm,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Layer {
    pub eps: ComplexPermittivity,
    /// mm, > 0
    pub thickness: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Termination {
    Pec,
    /// Semi-infinite medium; only used to build matched test stacks.
    HalfSpace(ComplexPermittivity),
}

/// Layers behind an air half-space, front to back.
#[derive(Debug, Clone, PartialEq)]
pub struct TLStack {
    pub layers: Vec<Layer>,
    pub termination: Termination,
}

impl TLStack {
    pub fn new(layers: Vec<Layer>, termination: Termination) -> Result<Self> {
        for l in &layers {
            if !(l.thickness > 0.0) || !l.thickness.is_finite() {
                return Err(Error::NonPositive {
                    what: "layer thickness",
                    value: l.thickness,
                });
            }
        }
        Ok(Self { layers, termination })
    }

    /// Bare conducting plate.
    pub fn pec() -> Self {
        Self {
            layers: Vec::new(),
            termination: Termination::Pec,
        }
    }

    /// Slab of thickness `t` on an optional air gap over a conducting plate.
    /// Zero-thickness layers are omitted.
    pub fn slab_on_pec(eps: ComplexPermittivity, t: f64, air_gap: f64) -> Self {
        let mut layers = Vec::with_capacity(2);
        if t > 0.0 {
            layers.push(Layer { eps, thickness: t });
        }
        if air_gap > 0.0 {
            layers.push(Layer {
                eps: ComplexPermittivity::AIR,
                thickness: air_gap,
            });
        }
        Self {
            layers,
            termination: Termination::Pec,
        }
    }
}

enum Load {
    Short,
    Admittance(Complex64),
}

/// Normalized `k_z / k0` in a medium of permittivity `eps` for `sin²θ`.
fn kz_norm(eps: Complex64, sin2: f64) -> Complex64 {
    decaying_sqrt(eps - sin2)
}

fn admittance(eps: Complex64, kz: Complex64, mode: Mode) -> Complex64 {
    match mode {
        Mode::Te => kz,
        Mode::Tm => eps / kz,
    }
}

fn reflection_sin2(stack: &TLStack, sin2: f64, mode: Mode, k0: f64) -> Complex64 {
    let j = Complex64::i();
    let mut load = match stack.termination {
        Termination::Pec => Load::Short,
        Termination::HalfSpace(eps) => {
            let e = eps.value();
            Load::Admittance(admittance(e, kz_norm(e, sin2), mode))
        }
    };
    for layer in stack.layers.iter().rev() {
        let e = layer.eps.value();
        let kz = kz_norm(e, sin2);
        let y = admittance(e, kz, mode);
        let t = (kz * (k0 * layer.thickness)).tan();
        load = Load::Admittance(match load {
            Load::Short => -j * y / t,
            Load::Admittance(yl) => y * (yl + j * y * t) / (y + j * yl * t),
        });
    }
    let y1 = admittance(Complex64::new(1.0, 0.0), kz_norm(Complex64::new(1.0, 0.0), sin2), mode);
    match load {
        Load::Short => Complex64::new(-1.0, 0.0),
        Load::Admittance(yin) => (y1 - yin) / (y1 + yin),
    }
}

/// Reflection coefficient of a plane wave incident from air at
/// `theta_inc` on the stack. Admittances are normalized to free space.
pub fn tl_reflection(stack: &TLStack, theta_inc: f64, mode: Mode, k0: f64) -> Complex64 {
    let s = theta_inc.sin();
    reflection_sin2(stack, s * s, mode, k0)
}

/// Reflection of a slab over an optional air gap on a conductor, split into
/// the parts that do not depend on the slab thickness. For thickness `t`,
/// `Γ = (r + b e) / (1 + r b e)` with `e = e^{-2j k_z k0 t}`, which equals the
/// admittance recursion of [`tl_reflection`] for the same stack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlabReflection {
    /// Normalized `k_z` in the slab.
    pub kz: Complex64,
    /// Air→slab reflection, `[TE, TM]`.
    pub front: [Complex64; 2],
    /// Reflection seen from inside the slab looking towards the plate.
    pub back: [Complex64; 2],
}

impl SlabReflection {
    pub fn new(eps: ComplexPermittivity, air_gap: f64, sin2: f64, k0: f64) -> Self {
        let e = eps.value();
        let one = Complex64::new(1.0, 0.0);
        let kz = kz_norm(e, sin2);
        let kz0 = kz_norm(one, sin2);
        let modes = [Mode::Te, Mode::Tm];
        let front = modes.map(|m| {
            let y0 = admittance(one, kz0, m);
            let y = admittance(e, kz, m);
            (y0 - y) / (y0 + y)
        });
        let back = if air_gap > 0.0 {
            let eg = (Complex64::new(0.0, -2.0 * k0 * air_gap) * kz0).exp();
            // slab→gap is −front; the gap ends on the conductor (−1)
            [0, 1].map(|i| {
                let r = -front[i];
                (r - eg) / (one - r * eg)
            })
        } else {
            [-one, -one]
        };
        Self { kz, front, back }
    }

    /// `e^{-2j k_z k0 t}`.
    pub fn phase(&self, t: f64, k0: f64) -> Complex64 {
        (Complex64::new(0.0, -2.0 * k0 * t) * self.kz).exp()
    }

    /// `[Γ_TE, Γ_TM]` for the thickness whose [`phase`](Self::phase) is `e`.
    pub fn with_phase(&self, e: Complex64) -> [Complex64; 2] {
        let one = Complex64::new(1.0, 0.0);
        [0, 1].map(|i| {
            let be = self.back[i] * e;
            (self.front[i] + be) / (one + self.front[i] * be)
        })
    }
}

/// Ray amplitude spreading along the return legs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spreading {
    /// `1 + r3/r3` on the slab→patch leg and `1 + r4/r5` on the final leg.
    #[default]
    Verbatim,
    /// Spherical spreading from the feed along the unfolded path.
    Textbook,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayPath {
    pub feed: usize,
    pub patch: usize,
    pub focus: Vec3,
    pub r_obj: Vec3,
    pub theta_inc: f64,
    /// Receiving `(p′, m′)`; `None` when the return ray misses every array.
    pub ret: Option<(usize, usize)>,
}

/// Follows the ray from patch `m` of array `p` towards `focus` to the plane
/// `z = z_front` and back to the array plane.
pub fn trace_ray(scene: &Scene, p: usize, m: usize, focus: Vec3, z_front: f64) -> RayPath {
    let patch = scene.faras[p].array.patches[m].position;
    let d = (focus - patch).normalized().unwrap_or(Vec3::Z);
    let cos_t = d.z;
    let theta_inc = cos_t.clamp(-1.0, 1.0).acos();
    let r_obj = patch + d * ((z_front - patch.z) / cos_t);
    // specular reflection off a plane of constant z
    let back = Vec3::new(d.x, d.y, -d.z);
    let z_arr = scene.array_plane_z();
    let hit = r_obj + back * ((z_arr - r_obj.z) / back.z);
    let mut best: Option<(usize, usize, f64)> = None;
    for (q, fara) in scene.faras.iter().enumerate() {
        if let Some((mm, dist)) = fara.array.nearest_patch(hit) {
            if best.map_or(true, |(_, _, bd)| dist < bd) {
                best = Some((q, mm, dist));
            }
        }
    }
    RayPath {
        feed: p,
        patch: m,
        focus,
        r_obj,
        theta_inc,
        ret: best.map(|(q, mm, _)| (q, mm)),
    }
}

/// One contributing ray with everything but the reflection coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayTerm {
    /// Flat `(p, m)` index of the launching patch over all arrays.
    pub ray: usize,
    pub sin2: f64,
    /// Fraction of the ray's power in the TE mode.
    pub w_te: f64,
    pub amplitude: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    pub terms: Vec<RayTerm>,
    pub dropped: usize,
}

impl RaySet {
    pub fn traced(&self) -> usize {
        self.terms.len() + self.dropped
    }

    /// `Σ A (w_TE Γ_TE + w_TM Γ_TM)` in fixed ray order.
    pub fn evaluate(&self, stack: &TLStack, k0: f64) -> Complex64 {
        let mut acc = CZERO;
        for t in &self.terms {
            let g = if t.w_te >= 1.0 {
                reflection_sin2(stack, t.sin2, Mode::Te, k0)
            } else if t.w_te <= 0.0 {
                reflection_sin2(stack, t.sin2, Mode::Tm, k0)
            } else {
                reflection_sin2(stack, t.sin2, Mode::Te, k0) * t.w_te
                    + reflection_sin2(stack, t.sin2, Mode::Tm, k0) * (1.0 - t.w_te)
            };
            acc += t.amplitude * g;
        }
        acc
    }
}

/// Ray-optics predictor for one scene geometry.
pub struct GoModel<'a> {
    scene: &'a Scene,
    pub spreading: Spreading,
    /// Air layer between slab and plate assumed by the predictions.
    pub air_gap: f64,
}

impl<'a> GoModel<'a> {
    pub fn new(scene: &'a Scene) -> Self {
        Self {
            scene,
            spreading: Spreading::Verbatim,
            air_gap: scene.target.map_or(0.0, |t| t.air_gap),
        }
    }

    pub fn with_spreading(mut self, spreading: Spreading) -> Self {
        self.spreading = spreading;
        self
    }

    pub fn scene(&self) -> &Scene {
        self.scene
    }

    pub fn k0(&self) -> f64 {
        self.scene.constants.k0
    }

    pub fn masks(&self, focus: Vec3) -> Vec<PhaseMask> {
        self.scene
            .faras
            .iter()
            .enumerate()
            .map(|(p, f)| binary_phase(&f.feed, p, &f.array, focus, self.k0()))
            .collect()
    }

    /// Front face of a slab of thickness `t` mounted per this model.
    pub fn front_z(&self, t: f64) -> f64 {
        self.scene.plate.z_bg - self.air_gap - t
    }

    pub fn stack(&self, eps: ComplexPermittivity, t: f64) -> TLStack {
        TLStack::slab_on_pec(eps, t, self.air_gap)
    }

    /// Traces all `P·M` rays for `focus` onto the plane `z_front`.
    pub fn rays(&self, focus: Vec3, z_front: f64) -> RaySet {
        let masks = self.masks(focus);
        self.rays_with_masks(focus, z_front, &masks)
    }

    pub fn rays_with_masks(&self, focus: Vec3, z_front: f64, masks: &[PhaseMask]) -> RaySet {
        let scene = self.scene;
        let k0 = self.k0();
        let j = Complex64::i();
        let mut terms = Vec::new();
        let mut dropped = 0;
        let mut ray_index = 0;
        for (p, fara) in scene.faras.iter().enumerate() {
            let feed = fara.feed.aperture_center;
            let pol = fara.feed.polarization;
            for (m, patch) in fara.array.patches.iter().enumerate() {
                let ray = trace_ray(scene, p, m, focus, z_front);
                let index = ray_index;
                ray_index += 1;
                let Some((q, mq)) = ray.ret else {
                    dropped += 1;
                    continue;
                };
                let patch = patch.position;
                let patch2 = scene.faras[q].array.patches[mq].position;
                let feed2 = scene.faras[q].feed.aperture_center;
                let r1 = patch.distance(feed);
                let r2 = ray.r_obj.distance(patch);
                let r3 = patch2.distance(ray.r_obj);
                let r4 = feed2.distance(patch2);
                let r5 = patch2.distance(focus);
                let e_patch = (-j * (k0 * r1)).exp() / r1;
                let e_obj = -e_patch * (-j * (k0 * r2)).exp() * masks[p].factor(m) / (1.0 + r2 / r1);
                let (s3, s4) = match self.spreading {
                    Spreading::Verbatim => (1.0 + r3 / r3, 1.0 + r4 / r5),
                    Spreading::Textbook => ((r1 + r2 + r3) / (r1 + r2), (r1 + r2 + r3 + r4) / (r1 + r2 + r3)),
                };
                let e_patch2 = e_obj * (-j * (k0 * r3)).exp() / s3;
                let amplitude = -e_patch2 * (-j * (k0 * r4)).exp() * masks[q].factor(mq) / s4;

                let d = (focus - patch).normalized().unwrap_or(Vec3::Z);
                let sin2 = (1.0 - d.z * d.z).max(0.0);
                let w_te = match d.cross(Vec3::Z).normalized() {
                    Some(te) => {
                        let tm = te.cross(d);
                        let a = pol.dot(te).powi(2);
                        let b = pol.dot(tm).powi(2);
                        if a + b > 0.0 {
                            a / (a + b)
                        } else {
                            0.5
                        }
                    }
                    None => 1.0,
                };
                debug_assert!(ray.theta_inc < FRAC_PI_2);
                terms.push(RayTerm {
                    ray: index,
                    sin2,
                    w_te,
                    amplitude,
                });
            }
        }
        RaySet { terms, dropped }
    }

    /// Predicted received amplitude for a slab `(eps, t)` with the beam
    /// focused at `focus`.
    pub fn predict(&self, focus: Vec3, eps: ComplexPermittivity, t: f64) -> Complex64 {
        let rays = self.rays(focus, self.front_z(t));
        rays.evaluate(&self.stack(eps, t), self.k0())
    }

    /// Predictions for several focus points (evaluated in parallel).
    pub fn predict_trace(&self, foci: &[Vec3], eps: ComplexPermittivity, t: f64) -> Vec<Complex64> {
        foci.par_iter().map(|&f| self.predict(f, eps, t)).collect()
    }

    /// Calibration amplitude: bare plate, beam focused on the plate at
    /// `(x, y, z_bg)`.
    pub fn calibration(&self, x: f64, y: f64) -> Complex64 {
        let z_bg = self.scene.plate.z_bg;
        let rays = self.rays(Vec3::new(x, y, z_bg), z_bg);
        rays.evaluate(&TLStack::pec(), self.k0())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::{build_scene, PhysicalConstants, Scale, SceneConfig, TargetConfig};
    use proptest::prelude::*;

    fn k0() -> f64 {
        PhysicalConstants::new(24.16).unwrap().k0
    }

    fn eps(re: f64, im: f64) -> ComplexPermittivity {
        ComplexPermittivity::new(re, im).unwrap()
    }

    /// Independent oracle: tangential-field transfer matrices. Each layer
    /// maps (E_t, H_t) at its back face to the front face; the PEC wall
    /// imposes E_t = 0.
    fn transfer_matrix_gamma(stack: &TLStack, theta: f64, mode: Mode, k0: f64) -> Complex64 {
        let j = Complex64::i();
        let s2 = theta.sin().powi(2);
        let y_of = |e: Complex64| {
            let kz = decaying_sqrt(e - s2);
            match mode {
                Mode::Te => kz,
                Mode::Tm => e / kz,
            }
        };
        // state (E, H) at the back wall
        let (mut e, mut h) = match stack.termination {
            Termination::Pec => (Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)),
            Termination::HalfSpace(eps) => (Complex64::new(1.0, 0.0), y_of(eps.value())),
        };
        for l in stack.layers.iter().rev() {
            let ev = l.eps.value();
            let kz = decaying_sqrt(ev - s2);
            let y = y_of(ev);
            let phi = kz * k0 * l.thickness;
            let (c, s) = (phi.cos(), phi.sin());
            let e2 = c * e + j * s / y * h;
            let h2 = j * y * s * e + c * h;
            e = e2;
            h = h2;
        }
        let y1 = y_of(Complex64::new(1.0, 0.0));
        // E = a + b, H = y1 (a - b)
        let a = 0.5 * (e + h / y1);
        let b = 0.5 * (e - h / y1);
        b / a
    }

    #[test]
    fn bare_pec_is_minus_one() {
        for mode in [Mode::Te, Mode::Tm] {
            assert_eq!(tl_reflection(&TLStack::pec(), 0.4, mode, k0()), Complex64::new(-1.0, 0.0));
            let s = TLStack::slab_on_pec(eps(4.0, 0.1), 0.0, 0.0);
            assert_eq!(tl_reflection(&s, 0.0, mode, k0()), Complex64::new(-1.0, 0.0));
        }
    }

    #[test]
    fn half_wave_slab_is_invisible() {
        let lambda0 = 2.0 * std::f64::consts::PI / k0();
        let s = TLStack::slab_on_pec(eps(4.0, 0.0), lambda0 / 4.0, 0.0);
        for mode in [Mode::Te, Mode::Tm] {
            let g = tl_reflection(&s, 0.0, mode, k0());
            assert!((g + 1.0).norm() < 1e-12, "{g}");
            let o = transfer_matrix_gamma(&s, 0.0, mode, k0());
            assert!((o + 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn four_layer_stack_matches_transfer_matrix() {
        let s = TLStack::slab_on_pec(eps(3.0, 0.0), 37.0, 1.0);
        assert_eq!(s.layers.len(), 2);
        for theta in [0.0, 0.2, 0.5, 0.9, 1.3] {
            for mode in [Mode::Te, Mode::Tm] {
                let g = tl_reflection(&s, theta, mode, k0());
                let o = transfer_matrix_gamma(&s, theta, mode, k0());
                assert!((g - o).norm() < 1e-10, "{theta} {mode:?}: {g} vs {o}");
            }
        }
    }

    #[test]
    fn matched_half_space_reflects_nothing() {
        let s = TLStack::new(
            vec![Layer { eps: ComplexPermittivity::AIR, thickness: 5.0 }],
            Termination::HalfSpace(ComplexPermittivity::AIR),
        )
        .unwrap();
        assert!(tl_reflection(&s, 0.3, Mode::Te, k0()).norm() < 1e-15);
    }

    #[test]
    fn continuity_over_angle() {
        for s in [
            TLStack::slab_on_pec(eps(8.0, 0.0), 20.0, 0.0),
            TLStack::slab_on_pec(eps(2.0, 0.0), 40.0, 0.0),
            TLStack::slab_on_pec(eps(4.0, 0.2), 40.0, 0.0),
            TLStack::slab_on_pec(eps(3.0, 0.01), 37.0, 1.0),
        ] {
            for mode in [Mode::Te, Mode::Tm] {
                let mut prev = tl_reflection(&s, 0.0, mode, k0()).norm();
                for i in 1..=800 {
                    let th = (i as f64 * 0.1).to_radians();
                    let g = tl_reflection(&s, th, mode, k0()).norm();
                    assert!((g - prev).abs() < 0.01);
                    prev = g;
                }
            }
        }
    }

    proptest! {
        #[test]
        fn lossless_stacks_are_unimodular(theta in 0.0..1.55f64, e in 1.0..10.0f64, t in 0.0..60.0f64, gap in 0.0..3.0f64) {
            let s = TLStack::slab_on_pec(eps(e, 0.0), t, gap);
            for mode in [Mode::Te, Mode::Tm] {
                let g = tl_reflection(&s, theta, mode, k0());
                prop_assert!((g.norm() - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn te_tm_degenerate_at_normal_incidence(e in 1.0..10.0f64, l in 0.0..0.5f64, t in 0.1..60.0f64) {
            let s = TLStack::slab_on_pec(eps(e, l), t, 0.0);
            let a = tl_reflection(&s, 0.0, Mode::Te, k0());
            let b = tl_reflection(&s, 0.0, Mode::Tm, k0());
            prop_assert!((a - b).norm() < 1e-12);
        }

        #[test]
        fn separable_slab_matches_recursion(theta in 0.0..1.4f64, e in 1.0..10.0f64, l in 0.0..0.5f64, t in 0.0..60.0f64, gap in prop::sample::select(vec![0.0, 1.0, 2.5])) {
            let slab = SlabReflection::new(eps(e, l), gap, theta.sin().powi(2), k0());
            let g = slab.with_phase(slab.phase(t, k0()));
            let s = TLStack::slab_on_pec(eps(e, l), t, gap);
            for (i, mode) in [Mode::Te, Mode::Tm].into_iter().enumerate() {
                let o = transfer_matrix_gamma(&s, theta, mode, k0());
                prop_assert!((g[i] - o).norm() < 1e-10, "{:?} {} {}", mode, g[i], o);
            }
        }

        #[test]
        fn oracle_agreement_lossy(theta in 0.0..1.4f64, e in 1.0..10.0f64, l in 0.0..0.5f64, t in 0.0..60.0f64) {
            let s = TLStack::slab_on_pec(eps(e, l), t, 1.0);
            for mode in [Mode::Te, Mode::Tm] {
                let g = tl_reflection(&s, theta, mode, k0());
                let o = transfer_matrix_gamma(&s, theta, mode, k0());
                prop_assert!((g - o).norm() < 1e-10);
            }
        }
    }

    fn reduced(target: Option<TargetConfig>) -> Scene {
        let mut cfg = SceneConfig::two_array(Scale::Reduced);
        cfg.target = target;
        build_scene(&cfg).unwrap()
    }

    #[test]
    fn normal_incidence_retroreflects() {
        let mut cfg = SceneConfig::two_array(Scale::Reduced);
        cfg.faras.truncate(1);
        let scene = build_scene(&cfg).unwrap();
        let a = &scene.faras[0].array;
        let m = a.per_side / 2 * a.per_side + a.per_side / 2;
        let above = a.patches[m].position + Vec3::new(0.0, 0.0, 700.0);
        let ray = trace_ray(&scene, 0, m, above, 790.0);
        assert_eq!(ray.theta_inc, 0.0);
        assert_eq!(ray.ret, Some((0, m)));
        assert!((ray.r_obj - Vec3::new(above.x, above.y, 790.0)).norm() < 1e-9);
    }

    #[test]
    fn oblique_ray_geometry() {
        let scene = reduced(None);
        let focus = Vec3::new(500.0, 920.0, 800.0);
        let a = &scene.faras[0].array;
        for m in [0, 17, a.patch_count() - 1] {
            let patch = a.patches[m].position;
            let ray = trace_ray(&scene, 0, m, focus, 800.0);
            let v = focus - patch;
            let expect = (v.z / v.norm()).acos();
            assert!((ray.theta_inc - expect).abs() < 1e-12);
            // T = 0: the hit point is on the plate, here the focus itself
            assert!((ray.r_obj.z - 800.0).abs() < 1e-9);
            assert!((ray.r_obj - focus).norm() < 1e-9);
        }
    }

    #[test]
    fn ray_count_conservation() {
        let scene = reduced(Some(TargetConfig::object1()));
        let go = GoModel::new(&scene);
        let total: usize = scene.faras.iter().map(|f| f.array.patch_count()).sum();
        for z in [770.0, 780.0, 790.0] {
            let rays = go.rays(Vec3::new(500.0, 920.0, z), go.front_z(20.0));
            assert_eq!(rays.traced(), total);
            assert!(!rays.terms.is_empty());
        }
    }

    #[test]
    fn absorbing_stack_predicts_zero() {
        let scene = reduced(Some(TargetConfig::object1()));
        let go = GoModel::new(&scene);
        let rays = go.rays(Vec3::new(500.0, 920.0, 780.0), 780.0);
        let matched = TLStack::new(vec![], Termination::HalfSpace(ComplexPermittivity::AIR)).unwrap();
        assert_eq!(rays.evaluate(&matched, go.k0()), CZERO);
    }

    #[test]
    fn ambiguity_pair_traces_differ() {
        let scene = reduced(Some(TargetConfig::object1()));
        let go = GoModel::new(&scene);
        let foci: Vec<Vec3> = (0..=40).map(|i| Vec3::new(500.0, 920.0, 600.0 + 10.0 * i as f64)).collect();
        let a = go.predict_trace(&foci, eps(8.0, 0.0), 20.0);
        let b = go.predict_trace(&foci, eps(2.0, 0.0), 40.0);
        let max_rel = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x.norm() - y.norm()).abs() / x.norm().max(y.norm()))
            .fold(0.0, f64::max);
        assert!(max_rel > 0.05, "{max_rel}");
    }
}
