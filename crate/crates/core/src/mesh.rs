//! Triangular facet meshes for planar rectangular panels.
//!
//! Panels are triangulated as a regular grid of cells, each cell split along
//! its diagonal into two right triangles. The cell size is chosen so that the
//! diagonal (the longest edge) never exceeds the requested maximum edge.
//! Because the facets sit on a lattice, [`RectGrid`] records the layout so
//! that plane-to-plane propagation can be evaluated as a convolution.

use crate::error::{Error, Result};
use crate::geometry::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct Facet {
    pub vertices: [Vec3; 3],
    pub centroid: Vec3,
    pub area: f64,
    pub normal: Vec3,
}

impl Facet {
    /// Builds a facet from three vertices; the normal follows the
    /// right-hand rule `(b - a) × (c - a)`. Returns `None` for degenerate
    /// triangles.
    pub fn new(a: Vec3, b: Vec3, c: Vec3) -> Option<Self> {
        let cr = (b - a).cross(c - a);
        let twice_area = cr.norm();
        if !(twice_area > 0.0) {
            return None;
        }
        Some(Self {
            vertices: [a, b, c],
            centroid: (a + b + c) * (1.0 / 3.0),
            area: 0.5 * twice_area,
            normal: cr * (1.0 / twice_area),
        })
    }

    pub fn max_edge(&self) -> f64 {
        let [a, b, c] = self.vertices;
        a.distance(b).max(b.distance(c)).max(c.distance(a))
    }

    fn flipped(&self) -> Self {
        let [a, b, c] = self.vertices;
        Self {
            vertices: [a, c, b],
            centroid: self.centroid,
            area: self.area,
            normal: -self.normal,
        }
    }
}

/// Lattice layout of a panel produced by [`mesh_panel`].
///
/// Facet `2 * (iy * nx + ix) + t` is triangle `t` of cell `(ix, iy)`.
/// Cell corners are `origin + ix * du * u + iy * dv * v`; triangle 0 has its
/// centroid at `(2/3, 1/3)` of the cell, triangle 1 at `(1/3, 2/3)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RectGrid {
    pub origin: Vec3,
    pub u: Vec3,
    pub v: Vec3,
    pub nx: usize,
    pub ny: usize,
    pub du: f64,
    pub dv: f64,
}

impl RectGrid {
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    /// Offset of triangle `t`'s centroid within a cell, in cell units.
    pub fn centroid_offset(t: usize) -> (f64, f64) {
        if t == 0 {
            (2.0 / 3.0, 1.0 / 3.0)
        } else {
            (1.0 / 3.0, 2.0 / 3.0)
        }
    }

    /// True when `other` is the same lattice translated by a vector.
    pub fn is_translate_of(&self, other: &RectGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && (self.du - other.du).abs() < 1e-12
            && (self.dv - other.dv).abs() < 1e-12
            && (self.u - other.u).norm() < 1e-12
            && (self.v - other.v).norm() < 1e-12
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceMesh {
    pub facets: Vec<Facet>,
    pub target_edge_length: f64,
    pub grid: Option<RectGrid>,
}

impl SurfaceMesh {
    pub fn empty(target_edge_length: f64) -> Self {
        Self {
            facets: Vec::new(),
            target_edge_length,
            grid: None,
        }
    }

    pub fn len(&self) -> usize {
        self.facets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facets.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        // Kahan-compensated; panels can hold 10^5 facets.
        let mut sum = 0.0;
        let mut c = 0.0;
        for f in &self.facets {
            let y = f.area - c;
            let t = sum + y;
            c = (t - sum) - y;
            sum = t;
        }
        sum
    }

    pub fn max_edge(&self) -> f64 {
        self.facets.iter().map(Facet::max_edge).fold(0.0, f64::max)
    }

    pub fn centroids(&self) -> Vec<Vec3> {
        self.facets.iter().map(|f| f.centroid).collect()
    }

    /// Same facets with reversed orientation (normals negated). Centroids and
    /// facet order are unchanged, so the lattice descriptor still applies.
    pub fn flipped(&self) -> Self {
        Self {
            facets: self.facets.iter().map(Facet::flipped).collect(),
            target_edge_length: self.target_edge_length,
            grid: self.grid,
        }
    }

    /// Rigid translation. The lattice descriptor is preserved.
    pub fn translated(&self, by: Vec3) -> Self {
        Self {
            facets: self
                .facets
                .iter()
                .map(|f| {
                    let [a, b, c] = f.vertices;
                    Facet {
                        vertices: [a + by, b + by, c + by],
                        centroid: f.centroid + by,
                        area: f.area,
                        normal: f.normal,
                    }
                })
                .collect(),
            target_edge_length: self.target_edge_length,
            grid: self.grid.map(|g| RectGrid {
                origin: g.origin + by,
                ..g
            }),
        }
    }

    /// Concatenation; the result carries no lattice descriptor.
    pub fn merged(parts: &[&SurfaceMesh]) -> Self {
        let edge = parts
            .iter()
            .map(|m| m.target_edge_length)
            .fold(0.0, f64::max);
        Self {
            facets: parts.iter().flat_map(|m| m.facets.iter().cloned()).collect(),
            target_edge_length: edge,
            grid: None,
        }
    }
}

/// Meshes a `width × height` rectangle centred on the origin in the z = 0
/// plane with normal +z.
pub fn mesh_rectangle(width: f64, height: f64, max_edge: f64) -> Result<SurfaceMesh> {
    mesh_panel(Vec3::ZERO, Vec3::X, Vec3::Y, width, height, max_edge)
}

/// Meshes a rectangular panel centred at `center` spanned by the orthonormal
/// axes `u` (width) and `v` (height). The facet normal is `u × v`.
pub fn mesh_panel(
    center: Vec3,
    u: Vec3,
    v: Vec3,
    width: f64,
    height: f64,
    max_edge: f64,
) -> Result<SurfaceMesh> {
    for (what, value) in [("width", width), ("height", height), ("max_edge", max_edge)] {
        if !(value > 0.0) || !value.is_finite() {
            return Err(Error::NonPositive { what, value });
        }
    }
    // Right triangles: the diagonal is the longest edge. A square cell of side
    // max_edge/sqrt(2) is the largest that keeps it within bounds; the small
    // relative slack absorbs rounding so the bound holds exactly.
    let cell = max_edge / std::f64::consts::SQRT_2 * (1.0 - 1e-12);
    let nx = (width / cell).ceil().max(1.0) as usize;
    let ny = (height / cell).ceil().max(1.0) as usize;
    let origin = center - u * (0.5 * width) - v * (0.5 * height);
    mesh_grid(
        RectGrid {
            origin,
            u,
            v,
            nx,
            ny,
            du: width / nx as f64,
            dv: height / ny as f64,
        },
        max_edge,
    )
}

/// Meshes every cell of `grid` as two right triangles, cell by cell in
/// row-major order.
pub fn mesh_grid(grid: RectGrid, max_edge: f64) -> Result<SurfaceMesh> {
    let RectGrid { origin, u, v, nx, ny, du, dv } = grid;
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidConfig("empty mesh grid".into()));
    }
    let corner = |ix: usize, iy: usize| origin + u * (ix as f64 * du) + v * (iy as f64 * dv);
    let mut facets = Vec::with_capacity(2 * nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let p00 = corner(ix, iy);
            let p10 = corner(ix + 1, iy);
            let p11 = corner(ix + 1, iy + 1);
            let p01 = corner(ix, iy + 1);
            let t0 = Facet::new(p00, p10, p11);
            let t1 = Facet::new(p00, p11, p01);
            match (t0, t1) {
                (Some(a), Some(b)) => {
                    facets.push(a);
                    facets.push(b);
                }
                _ => return Err(Error::Numerical("degenerate mesh cell".into())),
            }
        }
    }
    Ok(SurfaceMesh {
        facets,
        target_edge_length: max_edge,
        grid: Some(grid),
    })
}
