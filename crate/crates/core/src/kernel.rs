//! Closed-form prism gravity, dense kernel assembly, depth weighting and
//! forward modelling.
//!
//! Units: densities in g/cm³, distances in meters, gravity in mGal. The
//! vertical component is positive downward, so a buried positive contrast
//! produces positive data.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, MatRef};
use crate::mesh::{Mesh, Prism, StationSet};
use crate::{Error, Result};

/// Newtonian constant of gravitation, m³ kg⁻¹ s⁻².
pub const GRAVITATIONAL_CONSTANT: f64 = 6.674e-11;

/// γ times the g/cm³ → kg/m³ factor (10³) times the m/s² → mGal factor (10⁵).
const MGAL_PER_UNIT_DENSITY: f64 = GRAVITATIONAL_CONSTANT * 1.0e3 * 1.0e5;

/// Default ceiling on the bytes a dense kernel may occupy (8 GiB).
pub const DEFAULT_MEMORY_CAP: u64 = 8 << 30;

/// Indefinite integral of the vertical attraction at relative corner
/// coordinates. Limits on faces and edges are taken as zero where the
/// multiplying coordinate vanishes.
#[inline]
fn corner_term(x: f64, y: f64, z: f64) -> f64 {
    let r = libm::sqrt(x * x + y * y + z * z);
    if r == 0.0 {
        return 0.0;
    }
    let mut value = 0.0;
    if z != 0.0 {
        value += z * libm::atan(x * y / (z * r));
    }
    if x != 0.0 {
        value -= x * log_sum(y, r, x * x + z * z);
    }
    if y != 0.0 {
        value -= y * log_sum(x, r, y * y + z * z);
    }
    value
}

/// ln(a + r) with r = sqrt(a² + rest), rewritten for a < 0 to avoid the
/// cancellation in a + r.
#[inline]
fn log_sum(a: f64, r: f64, rest: f64) -> f64 {
    if a >= 0.0 {
        libm::log(a + r)
    } else {
        libm::log(rest / (r - a))
    }
}

/// Signed eight-corner sum over cached corner values `f[k][j][i]`,
/// `i, j, k ∈ {0 = min, 1 = max}` for x, y, z.
#[inline]
fn corner_sum(f: [[[f64; 2]; 2]; 2]) -> f64 {
    let mut sum = 0.0;
    for (k, fk) in f.iter().enumerate() {
        for (j, fj) in fk.iter().enumerate() {
            for (i, value) in fj.iter().enumerate() {
                // (-1)^(i+j+k) with 1-based indices
                if (i + j + k) % 2 == 1 {
                    sum += value;
                } else {
                    sum -= value;
                }
            }
        }
    }
    sum
}

/// Vertical gravity (mGal) at `station` due to `prism` with unit density
/// contrast (1 g/cm³).
pub fn prism_gz(prism: &Prism, station: [f64; 3]) -> Result<f64> {
    let prism = Prism::new(prism.min, prism.max)?;
    if prism.contains_strictly(station) {
        return Err(Error::StationInsidePrism {
            x: station[0],
            y: station[1],
            z: station[2],
        });
    }
    let mut f = [[[0.0; 2]; 2]; 2];
    let bounds = [prism.min, prism.max];
    for (k, fk) in f.iter_mut().enumerate() {
        let z = bounds[k][2] - station[2];
        for (j, fj) in fk.iter_mut().enumerate() {
            let y = bounds[j][1] - station[1];
            for (i, value) in fj.iter_mut().enumerate() {
                let x = bounds[i][0] - station[0];
                *value = corner_term(x, y, z);
            }
        }
    }
    Ok(MGAL_PER_UNIT_DENSITY * corner_sum(f))
}

/// Dense m×n sensitivity matrix, row-major (one row per station).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl KernelMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "kernel storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        Ok(KernelMatrix { rows, cols, data })
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn view(&self) -> MatRef<'_> {
        MatRef::row_major(&self.data, self.rows, self.cols)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelOptions {
    pub memory_cap: u64,
    /// Lifts the cap entirely.
    pub unlock: bool,
}

impl Default for KernelOptions {
    fn default() -> Self {
        KernelOptions {
            memory_cap: DEFAULT_MEMORY_CAP,
            unlock: false,
        }
    }
}

/// Assembles G with `G[i][j] = prism_gz(cell j, station i)`.
pub fn assemble_kernel(mesh: &Mesh, stations: &StationSet) -> Result<KernelMatrix> {
    assemble_kernel_with(mesh, stations, &KernelOptions::default())
}

pub fn assemble_kernel_with(
    mesh: &Mesh,
    stations: &StationSet,
    options: &KernelOptions,
) -> Result<KernelMatrix> {
    stations.check_above(mesh)?;
    let m = stations.len();
    let n = mesh.len();
    let required = (m as u64)
        .saturating_mul(n as u64)
        .saturating_mul(core::mem::size_of::<f64>() as u64);
    if !options.unlock && required > options.memory_cap {
        return Err(Error::MemoryCap {
            required,
            cap: options.memory_cap,
        });
    }
    let mut data = vec![0.0; m * n];
    fill_rows(mesh, stations, &mut data);
    KernelMatrix::from_row_major(m, n, data)
}

#[cfg(feature = "std")]
fn fill_rows(mesh: &Mesh, stations: &StationSet, data: &mut [f64]) {
    use rayon::prelude::*;
    let n = mesh.len();
    data.par_chunks_mut(n)
        .zip(stations.points().par_iter())
        .for_each(|(row, station)| kernel_row(mesh, *station, row));
}

#[cfg(not(feature = "std"))]
fn fill_rows(mesh: &Mesh, stations: &StationSet, data: &mut [f64]) {
    let n = mesh.len();
    for (row, station) in data.chunks_mut(n).zip(stations.points()) {
        kernel_row(mesh, *station, row);
    }
}

/// One kernel row. Corner terms are evaluated once per mesh node and
/// shared by the eight cells meeting there; each cell sums the same values
/// in the same order as [`prism_gz`], so the results agree bitwise.
fn kernel_row(mesh: &Mesh, station: [f64; 3], row: &mut [f64]) {
    let [nx, ny, nz] = mesh.counts();
    let (px, py, pz) = (nx + 1, ny + 1, nz + 1);
    let xs: Vec<f64> = (0..px).map(|i| mesh.node(0, i) - station[0]).collect();
    let ys: Vec<f64> = (0..py).map(|j| mesh.node(1, j) - station[1]).collect();
    let zs: Vec<f64> = (0..pz).map(|k| mesh.node(2, k) - station[2]).collect();

    let mut nodes = vec![0.0; px * py * pz];
    for (i, &x) in xs.iter().enumerate() {
        for (j, &y) in ys.iter().enumerate() {
            let base = (i * py + j) * pz;
            for (k, &z) in zs.iter().enumerate() {
                nodes[base + k] = corner_term(x, y, z);
            }
        }
    }
    let at = |i: usize, j: usize, k: usize| nodes[(i * py + j) * pz + k];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                let f = [
                    [
                        [at(i, j, k), at(i + 1, j, k)],
                        [at(i, j + 1, k), at(i + 1, j + 1, k)],
                    ],
                    [
                        [at(i, j, k + 1), at(i + 1, j, k + 1)],
                        [at(i, j + 1, k + 1), at(i + 1, j + 1, k + 1)],
                    ],
                ];
                row[mesh.index(i, j, k)] = MGAL_PER_UNIT_DENSITY * corner_sum(f);
            }
        }
    }
}

/// Diagonal depth weights `(z_center + z0)^(-beta)`.
pub fn depth_weighting(mesh: &Mesh, beta: f64, z0: f64) -> Result<Vec<f64>> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(alloc::format!(
            "depth weighting exponent must be positive, got {beta}"
        )));
    }
    if !(z0 >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "depth weighting offset must be non-negative, got {z0}"
        )));
    }
    (0..mesh.len())
        .map(|j| {
            let depth = mesh.cell_center(j)[2] + z0;
            if !(depth > 0.0) {
                Err(Error::InvalidParameter(alloc::format!(
                    "cell {j} has zero weighting depth"
                )))
            } else {
                Ok(libm::pow(depth, -beta))
            }
        })
        .collect()
}

/// Predicted data `G·model` in mGal.
pub fn forward(kernel: &KernelMatrix, model: &[f64]) -> Result<Vec<f64>> {
    if model.len() != kernel.ncols() {
        return Err(Error::DimensionMismatch {
            context: "forward model length",
            expected: kernel.ncols(),
            found: model.len(),
        });
    }
    Ok(linalg::matvec(kernel.view(), model))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Midpoint-rule point-mass sum over `per_axis³` sub-cells.
    fn point_mass_oracle(prism: &Prism, station: [f64; 3], per_axis: usize) -> f64 {
        let h = [
            (prism.max[0] - prism.min[0]) / per_axis as f64,
            (prism.max[1] - prism.min[1]) / per_axis as f64,
            (prism.max[2] - prism.min[2]) / per_axis as f64,
        ];
        let dv = h[0] * h[1] * h[2];
        let mut sum = 0.0;
        for a in 0..per_axis {
            let x = prism.min[0] + (a as f64 + 0.5) * h[0] - station[0];
            for b in 0..per_axis {
                let y = prism.min[1] + (b as f64 + 0.5) * h[1] - station[1];
                let rxy = x * x + y * y;
                for c in 0..per_axis {
                    let z = prism.min[2] + (c as f64 + 0.5) * h[2] - station[2];
                    let r2 = rxy + z * z;
                    sum += z / (r2 * libm::sqrt(r2));
                }
            }
        }
        MGAL_PER_UNIT_DENSITY * sum * dv
    }

    #[test]
    fn matches_point_mass_quadrature() {
        let prism = Prism::new([-150.0, -150.0, 50.0], [150.0, 150.0, 250.0]).unwrap();
        let exact = prism_gz(&prism, [0.0, 0.0, 0.0]).unwrap();
        let oracle = point_mass_oracle(&prism, [0.0, 0.0, 0.0], 100);
        assert!(exact > 0.0);
        assert!(((exact - oracle) / oracle).abs() < 5e-3, "{exact} vs {oracle}");
    }

    #[test]
    fn degenerate_and_interior_rejected() {
        let flat = Prism {
            min: [0.0, 0.0, 10.0],
            max: [10.0, 10.0, 10.0],
        };
        assert_eq!(prism_gz(&flat, [0.0; 3]), Err(Error::DegeneratePrism));
        let cube = Prism::new([0.0, 0.0, 10.0], [10.0, 10.0, 20.0]).unwrap();
        assert!(matches!(
            prism_gz(&cube, [5.0, 5.0, 15.0]),
            Err(Error::StationInsidePrism { .. })
        ));
    }

    #[test]
    fn mirror_symmetric_stations_agree() {
        let cube = Prism::new([-100.0, -100.0, 40.0], [100.0, 100.0, 240.0]).unwrap();
        let a = prism_gz(&cube, [130.0, 70.0, 0.0]).unwrap();
        let b = prism_gz(&cube, [-130.0, 70.0, 0.0]).unwrap();
        let c = prism_gz(&cube, [130.0, -70.0, 0.0]).unwrap();
        let d = prism_gz(&cube, [70.0, 130.0, 0.0]).unwrap();
        for other in [b, c, d] {
            assert!(((a - other) / a).abs() < 1e-12);
        }
    }

    #[test]
    fn station_on_top_face_is_finite_and_continuous() {
        let cube = Prism::new([0.0, 0.0, 0.0], [50.0, 50.0, 50.0]).unwrap();
        let on_face = prism_gz(&cube, [25.0, 25.0, 0.0]).unwrap();
        let above = prism_gz(&cube, [25.0, 25.0, -1e-6]).unwrap();
        assert!(on_face.is_finite() && on_face > 0.0);
        assert!(((on_face - above) / on_face).abs() < 1e-6);
        let on_corner = prism_gz(&cube, [0.0, 0.0, 0.0]).unwrap();
        assert!(on_corner.is_finite() && on_corner > 0.0);
    }

    #[test]
    fn single_cell_kernel_equals_prism_gz() {
        let mesh = Mesh::new([1, 1, 1], [30.0, 40.0, 20.0], [5.0, -3.0, 10.0]).unwrap();
        let stations = StationSet::new(vec![[17.0, 2.0, 0.0]]).unwrap();
        let g = assemble_kernel(&mesh, &stations).unwrap();
        assert_eq!(g.nrows(), 1);
        assert_eq!(g.ncols(), 1);
        let direct = prism_gz(&mesh.cell_bounds(0), [17.0, 2.0, 0.0]).unwrap();
        assert_eq!(g.get(0, 0), direct);
    }

    #[test]
    fn assembled_entries_match_per_cell_formula_bitwise() {
        let mesh = Mesh::new([4, 3, 3], [50.0; 3], [0.0, 0.0, 0.0]).unwrap();
        let stations = StationSet::above_cells(&mesh, 0.0).unwrap();
        let g = assemble_kernel(&mesh, &stations).unwrap();
        for (i, s) in stations.points().iter().enumerate() {
            for j in 0..mesh.len() {
                assert_eq!(g.get(i, j), prism_gz(&mesh.cell_bounds(j), *s).unwrap());
                assert!(g.get(i, j) > 0.0);
            }
        }
    }

    #[test]
    fn memory_cap_rejects_with_required_bytes() {
        let mesh = Mesh::new([10, 10, 10], [1.0; 3], [0.0; 3]).unwrap();
        let stations = StationSet::above_cells(&mesh, 0.0).unwrap();
        let opts = KernelOptions {
            memory_cap: 1024,
            unlock: false,
        };
        match assemble_kernel_with(&mesh, &stations, &opts) {
            Err(Error::MemoryCap { required, cap }) => {
                assert_eq!(required, 100 * 1000 * 8);
                assert_eq!(cap, 1024);
            }
            other => panic!("unexpected {other:?}"),
        }
        let unlocked = KernelOptions {
            unlock: true,
            ..opts
        };
        assert!(assemble_kernel_with(&mesh, &stations, &unlocked).is_ok());
    }

    #[test]
    fn depth_weights_ratio_and_monotonicity() {
        let mesh = Mesh::new([1, 1, 6], [50.0; 3], [0.0; 3]).unwrap();
        let w = depth_weighting(&mesh, 0.8, 0.0).unwrap();
        // centers at 25, 75, ..., 275
        let ratio = w[1] / w[5];
        assert!((ratio - 2.8275946049147893).abs() < 1e-12);
        assert!(w.windows(2).all(|p| p[1] < p[0]));

        let layer = Mesh::new([3, 2, 1], [50.0; 3], [0.0; 3]).unwrap();
        let w = depth_weighting(&layer, 0.8, 25.0).unwrap();
        assert!(w.iter().all(|&v| v == w[0]));

        assert!(depth_weighting(&mesh, 0.0, 1.0).is_err());
        assert!(depth_weighting(&mesh, 0.8, -1.0).is_err());
    }

    #[test]
    fn forward_basics() {
        let mesh = Mesh::new([3, 2, 2], [50.0; 3], [0.0; 3]).unwrap();
        let stations = StationSet::above_cells(&mesh, 0.0).unwrap();
        let g = assemble_kernel(&mesh, &stations).unwrap();
        let zero = forward(&g, &vec![0.0; mesh.len()]).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let mut e = vec![0.0; mesh.len()];
        e[5] = 1.0;
        assert_eq!(forward(&g, &e).unwrap(), g.column(5));
        assert!(forward(&g, &[1.0]).is_err());
    }
}
