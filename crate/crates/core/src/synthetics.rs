//! Synthetic density models and the data noise model.
//!
//! Bodies are boxes of uniform density snapped to the mesh: a cell belongs
//! to a body when its center lies inside the box. Box faces must fall on
//! grid nodes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg;
use crate::mesh::{Mesh, StationSet};
use crate::{Error, Result};

/// Density of every synthetic body in g/cm³.
pub const BODY_DENSITY: f64 = 1.0;

const SNAP_TOLERANCE: f64 = 1e-6;

/// Box `[min, max]` in meters with a uniform density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BodySpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
    pub density: f64,
}

impl BodySpec {
    pub fn new(min: [f64; 3], max: [f64; 3]) -> Self {
        BodySpec {
            min,
            max,
            density: BODY_DENSITY,
        }
    }
}

/// Density vector with the bodies painted in order (later bodies win).
pub fn rasterize(mesh: &Mesh, bodies: &[BodySpec]) -> Result<Vec<f64>> {
    let [ex, ey, ez] = mesh.extent();
    let origin = mesh.origin();
    let cell = mesh.cell_size();
    for (b, body) in bodies.iter().enumerate() {
        for a in 0..3 {
            let limit = [ex, ey, ez][a];
            for v in [body.min[a], body.max[a]] {
                let offset = (v - origin[a]) / cell[a];
                if (offset - libm::round(offset)).abs() > SNAP_TOLERANCE
                    || offset < -SNAP_TOLERANCE
                    || v - origin[a] > limit + SNAP_TOLERANCE * cell[a]
                {
                    return Err(Error::InvalidParameter(format!(
                        "body {b} face {v} m is not a mesh node along axis {a}"
                    )));
                }
            }
            if !(body.max[a] > body.min[a]) {
                return Err(Error::InvalidParameter(format!("body {b} is empty along axis {a}")));
            }
        }
    }
    let mut model = vec![0.0; mesh.len()];
    for (idx, rho) in model.iter_mut().enumerate() {
        let c = mesh.cell_center(idx);
        for body in bodies {
            if (0..3).all(|a| c[a] > body.min[a] && c[a] < body.max[a]) {
                *rho = body.density;
            }
        }
    }
    Ok(model)
}

/// Two-cube test mesh: 30×20×10 cells of 50 m.
pub fn two_cube_mesh() -> Mesh {
    Mesh::new([30, 20, 10], [50.0; 3], [0.0; 3]).expect("fixed mesh is valid")
}

/// Multi-body test mesh: 100×55×12 cells of 50 m.
pub fn multibody_mesh() -> Mesh {
    Mesh::new([100, 55, 12], [50.0; 3], [0.0; 3]).expect("fixed mesh is valid")
}

/// Multi-body mesh with half the cells along x (50×55×12).
pub fn multibody_mesh_half() -> Mesh {
    Mesh::new([50, 55, 12], [50.0; 3], [0.0; 3]).expect("fixed mesh is valid")
}

/// Stations at the column centers on the mesh top.
pub fn surface_stations(mesh: &Mesh) -> StationSet {
    StationSet::above_cells(mesh, mesh.top()).expect("mesh columns give valid stations")
}

/// Two 300×300×200 m cubes from 50 to 250 m depth, centered at one and
/// two thirds of the x extent on the y midline.
pub fn two_cube_bodies(mesh: &Mesh) -> Vec<BodySpec> {
    let [ex, ey, _] = mesh.extent();
    let [x0, y0, z0] = mesh.origin();
    let yc = y0 + 0.5 * ey;
    [1.0 / 3.0, 2.0 / 3.0]
        .iter()
        .map(|f| {
            let xc = x0 + f * ex;
            BodySpec::new(
                [xc - 150.0, yc - 150.0, z0 + 50.0],
                [xc + 150.0, yc + 150.0, z0 + 250.0],
            )
        })
        .collect()
}

pub fn two_cube_model(mesh: &Mesh) -> Result<Vec<f64>> {
    rasterize(mesh, &two_cube_bodies(mesh))
}

/// Six bodies of differing shape and depth. Horizontal positions are laid
/// out on a 5000×2750 m footprint and scaled to the extent of `mesh`;
/// depths are absolute.
pub fn multibody_bodies(mesh: &Mesh) -> Vec<BodySpec> {
    let [ex, ey, _] = mesh.extent();
    let [x0, y0, z0] = mesh.origin();
    let (sx, sy) = (ex / 5000.0, ey / 2750.0);
    let b = |x: [f64; 2], y: [f64; 2], z: [f64; 2]| {
        BodySpec::new(
            [x0 + sx * x[0], y0 + sy * y[0], z0 + z[0]],
            [x0 + sx * x[1], y0 + sy * y[1], z0 + z[1]],
        )
    };
    vec![
        // dike
        b([500.0, 700.0], [500.0, 2250.0], [50.0, 350.0]),
        // shallow cube
        b([1200.0, 1600.0], [400.0, 800.0], [50.0, 250.0]),
        // stepped block
        b([2100.0, 2700.0], [1500.0, 2100.0], [100.0, 200.0]),
        b([2100.0, 2400.0], [1500.0, 2100.0], [200.0, 400.0]),
        // deep block
        b([3000.0, 3500.0], [400.0, 1000.0], [200.0, 400.0]),
        // thin slab
        b([3800.0, 4500.0], [1700.0, 2300.0], [50.0, 150.0]),
        // dipping staircase
        b([3800.0, 4000.0], [300.0, 800.0], [150.0, 250.0]),
        b([4000.0, 4200.0], [300.0, 800.0], [200.0, 300.0]),
        b([4200.0, 4400.0], [300.0, 800.0], [250.0, 350.0]),
    ]
}

pub fn multibody_model(mesh: &Mesh) -> Result<Vec<f64>> {
    rasterize(mesh, &multibody_bodies(mesh))
}

/// Noise standard deviations `ηᵢ = a·dᵢ + b·‖d‖`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub relative: f64,
    pub norm_fraction: f64,
    pub seed: u64,
    /// Use `|dᵢ|` in the relative term.
    pub absolute: bool,
}

impl NoiseSpec {
    pub fn new(relative: f64, norm_fraction: f64, seed: u64) -> Self {
        NoiseSpec {
            relative,
            norm_fraction,
            seed,
            absolute: false,
        }
    }

    pub fn std_devs(&self, data: &[f64]) -> Result<Vec<f64>> {
        if self.relative == 0.0 && self.norm_fraction == 0.0 {
            return Err(Error::InvalidParameter(
                "noise model needs a non-zero relative or norm term".into(),
            ));
        }
        let norm = linalg::norm2(data);
        let eta: Vec<f64> = data
            .iter()
            .map(|d| {
                let d = if self.absolute { d.abs() } else { *d };
                self.relative * d + self.norm_fraction * norm
            })
            .collect();
        if let Some((index, &value)) = eta.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
            return Err(Error::NonPositiveNoise { index, value });
        }
        Ok(eta)
    }
}

/// Noisy data `d + η∘ζ` with standard normal `ζ`, and `η`.
pub fn add_noise(data: &[f64], spec: &NoiseSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    let eta = spec.std_devs(data)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noisy = data
        .iter()
        .zip(&eta)
        .map(|(d, e)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            d + e * z
        })
        .collect();
    Ok((noisy, eta))
}

/// Number of 6-connected groups of non-zero cells.
pub fn connected_components(mesh: &Mesh, model: &[f64]) -> usize {
    let [nx, ny, nz] = mesh.counts();
    let mut seen = vec![false; model.len()];
    let mut stack = Vec::new();
    let mut count = 0;
    for start in 0..model.len() {
        if model[start] == 0.0 || seen[start] {
            continue;
        }
        count += 1;
        seen[start] = true;
        stack.push(start);
        while let Some(idx) = stack.pop() {
            let (i, j, k) = mesh.ijk(idx);
            let mut visit = |i: usize, j: usize, k: usize| {
                let n = mesh.index(i, j, k);
                if model[n] != 0.0 && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(i - 1, j, k);
            }
            if i + 1 < nx {
                visit(i + 1, j, k);
            }
            if j > 0 {
                visit(i, j - 1, k);
            }
            if j + 1 < ny {
                visit(i, j + 1, k);
            }
            if k > 0 {
                visit(i, j, k - 1);
            }
            if k + 1 < nz {
                visit(i, j, k + 1);
            }
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cubes_cover_288_cells() {
        let mesh = two_cube_mesh();
        let model = two_cube_model(&mesh).unwrap();
        assert_eq!(model.iter().filter(|v| **v != 0.0).count(), 288);
        assert_eq!(connected_components(&mesh, &model), 2);
        let bodies = two_cube_bodies(&mesh);
        assert_eq!(bodies[0].min, [350.0, 350.0, 50.0]);
        assert_eq!(bodies[1].max, [1150.0, 650.0, 250.0]);
        assert_eq!(surface_stations(&mesh).len(), 600);
    }

    #[test]
    fn multibody_layout() {
        for mesh in [multibody_mesh(), multibody_mesh_half()] {
            let model = multibody_model(&mesh).unwrap();
            assert_eq!(connected_components(&mesh, &model), 6);
            let filled = model.iter().filter(|v| **v != 0.0).count();
            assert!((filled as f64) < 0.1 * mesh.len() as f64);
            let depths: Vec<f64> = (0..mesh.len())
                .filter(|&i| model[i] != 0.0)
                .map(|i| mesh.cell_center(i)[2])
                .collect();
            let shallow = depths.iter().cloned().fold(f64::INFINITY, f64::min);
            let deep = depths.iter().cloned().fold(0.0, f64::max);
            assert!(shallow < 100.0 && deep > 300.0);
        }
        assert_eq!(multibody_mesh().len(), 66000);
        assert_eq!(multibody_mesh_half().len(), 33000);
    }

    #[test]
    fn off_grid_body_rejected() {
        let mesh = two_cube_mesh();
        let body = BodySpec::new([10.0, 0.0, 0.0], [100.0, 50.0, 50.0]);
        assert!(rasterize(&mesh, &[body]).is_err());
        let outside = BodySpec::new([0.0, 0.0, 0.0], [100.0, 50.0, 600.0]);
        assert!(rasterize(&mesh, &[outside]).is_err());
    }

    #[test]
    fn noise_statistics() {
        let data: Vec<f64> = (0..2000).map(|i| 1.0 + (i as f64 * 0.01).sin()).collect();
        let spec = NoiseSpec::new(0.02, 0.002, 7);
        let (noisy, eta) = add_noise(&data, &spec).unwrap();
        let chi2: f64 = noisy
            .iter()
            .zip(&data)
            .zip(&eta)
            .map(|((o, d), e)| ((o - d) / e).powi(2))
            .sum();
        let m = data.len() as f64;
        assert!((chi2 - m).abs() < 3.0 * (2.0 * m).sqrt());
        let again = add_noise(&data, &spec).unwrap();
        assert_eq!(again.0, noisy);
        let other = add_noise(&data, &NoiseSpec::new(0.02, 0.002, 8)).unwrap();
        assert_ne!(other.0, noisy);
    }

    #[test]
    fn noise_rejections() {
        assert!(NoiseSpec::new(0.0, 0.0, 1).std_devs(&[1.0]).is_err());
        assert_eq!(
            NoiseSpec::new(0.02, 0.0, 1).std_devs(&[1.0, -1.0]),
            Err(Error::NonPositiveNoise {
                index: 1,
                value: -0.02
            })
        );
        let abs = NoiseSpec {
            absolute: true,
            ..NoiseSpec::new(0.02, 0.0, 1)
        };
        assert!(abs.std_devs(&[1.0, -1.0]).is_ok());
    }
}
