//! 1-bit phase masks that make a reflectarray focus its feed's wave on a
//! chosen point.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use num_complex::Complex64;

use crate::em::CurrentSheet;
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::scene::{HornFeed, Reflectarray, Roi};

/// Per-patch phase shift, either 0 or π.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMask {
    /// `true` where the patch adds π.
    pub bits: Vec<bool>,
    pub focus: Vec3,
    pub feed: usize,
}

impl PhaseMask {
    pub fn uniform(len: usize, flipped: bool, feed: usize, focus: Vec3) -> Self {
        Self {
            bits: vec![flipped; len],
            focus,
            feed,
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Δψ of patch `m` in radians.
    pub fn phase(&self, m: usize) -> f64 {
        if self.bits[m] {
            PI
        } else {
            0.0
        }
    }

    /// `e^{jΔψ}` of patch `m`, exactly ±1.
    pub fn factor(&self, m: usize) -> f64 {
        if self.bits[m] {
            -1.0
        } else {
            1.0
        }
    }
}

/// 1-bit quantization of a path phase `k0 L`: π when the wrapped phase lies
/// strictly between π/2 and 3π/2, else 0.
pub fn phase_bit(k0_l: f64) -> bool {
    let v = k0_l.rem_euclid(TAU);
    v > FRAC_PI_2 && v < 3.0 * FRAC_PI_2
}

/// Mask focusing `feed` through `array` on `focus`.
pub fn binary_phase(
    feed: &HornFeed,
    feed_index: usize,
    array: &Reflectarray,
    focus: Vec3,
    k0: f64,
) -> PhaseMask {
    let bits = array
        .patches
        .iter()
        .map(|p| {
            let l = feed.aperture_center.distance(p.position) + p.position.distance(focus);
            phase_bit(k0 * l)
        })
        .collect();
    PhaseMask {
        bits,
        focus,
        feed: feed_index,
    }
}

/// Multiplies patch currents by `e^{jΔψ}`. The sheet holds either one entry
/// per patch or the same number of consecutive facets for every patch.
/// Magnetic currents are left untouched.
pub fn apply_mask(currents: &CurrentSheet, mask: &PhaseMask) -> Result<CurrentSheet> {
    let m = mask.len();
    if m == 0 || currents.len() % m != 0 {
        return Err(Error::LengthMismatch {
            expected: m,
            got: currents.len(),
        });
    }
    let per = currents.len() / m;
    let mut out = currents.clone();
    for (i, j) in out.j.iter_mut().enumerate() {
        if mask.bits[i / per] {
            *j = -*j;
        }
    }
    Ok(out)
}

/// Complex `e^{jΔψ}` for callers working with phasors.
pub fn mask_phasor(mask: &PhaseMask, m: usize) -> Complex64 {
    Complex64::new(mask.factor(m), 0.0)
}

/// Ordered focus points, all inside the region of interest.
#[derive(Debug, Clone, PartialEq)]
pub struct FocusGrid {
    pub points: Vec<Vec3>,
}

impl FocusGrid {
    pub fn new(points: Vec<Vec3>, roi: &Roi) -> Result<Self> {
        for p in &points {
            roi.check(*p)?;
        }
        Ok(Self { points })
    }

    /// Points `(x, y, z_start + i Δz)` up to and including `z_end`.
    pub fn z_line(x: f64, y: f64, z_start: f64, z_end: f64, dz: f64, roi: &Roi) -> Result<Self> {
        Self::new(z_samples(z_start, z_end, dz)?.into_iter().map(|z| Vec3::new(x, y, z)).collect(), roi)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `z_start, z_start + dz, …` not exceeding `z_end` (within rounding).
pub fn z_samples(z_start: f64, z_end: f64, dz: f64) -> Result<Vec<f64>> {
    if !(dz > 0.0) {
        return Err(Error::NonPositive { what: "dz", value: dz });
    }
    if z_end < z_start {
        return Err(Error::InvalidConfig(format!(
            "empty z range [{z_start}, {z_end}]"
        )));
    }
    let n = ((z_end - z_start) / dz + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| z_start + i as f64 * dz).collect())
}
