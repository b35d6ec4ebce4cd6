//! Regular prism meshes and observation stations.
//!
//! Coordinates are in meters with z positive downward. Cells are indexed
//! with depth varying fastest: `index = (i * ny + j) * nz + k` where `i`, `j`
//! and `k` count cells along x, y and z.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Axis-aligned right rectangular prism, `min` and `max` corners in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prism {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Prism {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Result<Self> {
        let prism = Prism { min, max };
        if (0..3).any(|a| !(max[a] - min[a] > 0.0) || !min[a].is_finite() || !max[a].is_finite()) {
            return Err(Error::DegeneratePrism);
        }
        Ok(prism)
    }

    pub fn center(&self) -> [f64; 3] {
        [
            0.5 * (self.min[0] + self.max[0]),
            0.5 * (self.min[1] + self.max[1]),
            0.5 * (self.min[2] + self.max[2]),
        ]
    }

    pub fn volume(&self) -> f64 {
        (self.max[0] - self.min[0]) * (self.max[1] - self.min[1]) * (self.max[2] - self.min[2])
    }

    /// True when `p` lies strictly inside the prism.
    pub fn contains_strictly(&self, p: [f64; 3]) -> bool {
        (0..3).all(|a| p[a] > self.min[a] && p[a] < self.max[a])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    counts: [usize; 3],
    cell: [f64; 3],
    origin: [f64; 3],
}

const AXES: [char; 3] = ['x', 'y', 'z'];

impl Mesh {
    /// Mesh from cell counts, cell edge lengths and the shallowest
    /// south-west corner.
    pub fn new(counts: [usize; 3], cell: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        for a in 0..3 {
            if counts[a] == 0 {
                return Err(Error::InvalidMesh(format!("cell count along {} is zero", AXES[a])));
            }
            if !(cell[a] > 0.0) || !cell[a].is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "cell size along {} must be positive, got {}",
                    AXES[a], cell[a]
                )));
            }
            if !origin[a].is_finite() {
                return Err(Error::InvalidMesh(format!("origin {} is not finite", AXES[a])));
            }
        }
        if origin[2] < 0.0 {
            return Err(Error::InvalidMesh(format!(
                "mesh top at depth {} m lies above the observation plane",
                origin[2]
            )));
        }
        Ok(Mesh {
            counts,
            cell,
            origin,
        })
    }

    /// Mesh covering `extent` with cells of size `cell`. Each extent must be
    /// an integer multiple of the matching cell size.
    pub fn from_extent(extent: [f64; 3], cell: [f64; 3], origin: [f64; 3]) -> Result<Self> {
        let mut counts = [0usize; 3];
        for a in 0..3 {
            if !(extent[a] > 0.0) || !(cell[a] > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "extent and cell size along {} must be positive",
                    AXES[a]
                )));
            }
            let ratio = extent[a] / cell[a];
            let whole = libm::round(ratio);
            if whole < 1.0 || libm::fabs(ratio - whole) > 1e-9 * ratio.max(1.0) {
                let remainder = extent[a] - libm::floor(ratio) * cell[a];
                return Err(Error::NonDivisibleExtent {
                    axis: AXES[a],
                    extent: extent[a],
                    cell: cell[a],
                    remainder,
                });
            }
            counts[a] = whole as usize;
        }
        Mesh::new(counts, cell, origin)
    }

    pub fn counts(&self) -> [usize; 3] {
        self.counts
    }

    pub fn cell_size(&self) -> [f64; 3] {
        self.cell
    }

    pub fn origin(&self) -> [f64; 3] {
        self.origin
    }

    pub fn extent(&self) -> [f64; 3] {
        [
            self.counts[0] as f64 * self.cell[0],
            self.counts[1] as f64 * self.cell[1],
            self.counts[2] as f64 * self.cell[2],
        ]
    }

    /// Number of cells `n`.
    pub fn len(&self) -> usize {
        self.counts[0] * self.counts[1] * self.counts[2]
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        debug_assert!(i < self.counts[0] && j < self.counts[1] && k < self.counts[2]);
        (i * self.counts[1] + j) * self.counts[2] + k
    }

    pub fn ijk(&self, index: usize) -> (usize, usize, usize) {
        let nz = self.counts[2];
        let ny = self.counts[1];
        let k = index % nz;
        let j = (index / nz) % ny;
        let i = index / (nz * ny);
        (i, j, k)
    }

    /// Coordinate of grid node `idx` along `axis` (node 0 is the origin).
    #[inline]
    pub fn node(&self, axis: usize, idx: usize) -> f64 {
        self.origin[axis] + idx as f64 * self.cell[axis]
    }

    pub fn cell_bounds(&self, index: usize) -> Prism {
        let (i, j, k) = self.ijk(index);
        Prism {
            min: [self.node(0, i), self.node(1, j), self.node(2, k)],
            max: [self.node(0, i + 1), self.node(1, j + 1), self.node(2, k + 1)],
        }
    }

    pub fn cell_center(&self, index: usize) -> [f64; 3] {
        self.cell_bounds(index).center()
    }

    /// Depth of the top of the shallowest layer.
    pub fn top(&self) -> f64 {
        self.origin[2]
    }

    /// Same mesh shifted horizontally.
    pub fn translated(&self, dx: f64, dy: f64) -> Mesh {
        let mut out = self.clone();
        out.origin[0] += dx;
        out.origin[1] += dy;
        out
    }
}

/// Observation points, meters, z positive downward.
#[derive(Debug, Clone, PartialEq)]
pub struct StationSet {
    points: Vec<[f64; 3]>,
}

impl StationSet {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidStations("at least one station is required".into()));
        }
        if let Some(p) = points.iter().find(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidStations(format!("non-finite station {p:?}")));
        }
        Ok(StationSet { points })
    }

    /// Regular `nx` by `ny` grid on the plane `z`, first point at `start`,
    /// x varying slowest.
    pub fn grid(nx: usize, ny: usize, spacing: [f64; 2], start: [f64; 2], z: f64) -> Result<Self> {
        let mut points = Vec::with_capacity(nx * ny);
        for i in 0..nx {
            for j in 0..ny {
                points.push([
                    start[0] + i as f64 * spacing[0],
                    start[1] + j as f64 * spacing[1],
                    z,
                ]);
            }
        }
        StationSet::new(points)
    }

    /// One station above every column of the mesh, at the column center on
    /// the plane `z`.
    pub fn above_cells(mesh: &Mesh, z: f64) -> Result<Self> {
        let [nx, ny, _] = mesh.counts();
        let [dx, dy, _] = mesh.cell_size();
        let [x0, y0, _] = mesh.origin();
        StationSet::grid(nx, ny, [dx, dy], [x0 + 0.5 * dx, y0 + 0.5 * dy], z)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    /// Checks that no station sits below the mesh top. Stations lying on the
    /// top plane are accepted: the prism formula has a finite limit on a
    /// face.
    pub fn check_above(&self, mesh: &Mesh) -> Result<()> {
        match self.points.iter().find(|p| p[2] > mesh.top()) {
            Some(p) => Err(Error::InvalidStations(format!(
                "station {p:?} lies below the mesh top at {} m",
                mesh.top()
            ))),
            None => Ok(()),
        }
    }

    pub fn translated(&self, dx: f64, dy: f64) -> StationSet {
        StationSet {
            points: self.points.iter().map(|p| [p[0] + dx, p[1] + dy, p[2]]).collect(),
        }
    }
}
