//! Subcommand implementations.

use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use gravinv_core::kernel::{assemble_kernel_with, depth_weighting, forward};
use gravinv_core::lsqr;
use gravinv_core::operator::ScaledKernel;
use gravinv_core::randsvd::{self, RsvdConfig};
use gravinv_core::synthetics::{self, add_noise};
use gravinv_core::{invert, InversionProblem, InversionResult, KernelMatrix, Mesh, StationSet};

use crate::config::{Case, Config, SolverKind, StabilizerKind};
use crate::io::{self, CompareRow, DataSet};

pub const CONFIG_FILE: &str = "config.toml";

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default, clap::Args)]
pub struct Overrides {
    /// Config file; defaults to config.toml in the input directory.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Experiment preset used when no config file is found.
    #[arg(long, value_enum)]
    pub case: Option<Case>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverKind>,
    /// RSVD target rank.
    #[arg(long)]
    pub q: Option<usize>,
    /// LSQR subspace dimension.
    #[arg(long)]
    pub t: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Focusing parameter in g/cm³.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Depth-weighting exponent.
    #[arg(long)]
    pub beta: Option<f64>,
    /// First-iteration α as a multiple of σ₁.
    #[arg(long = "alpha1-factor")]
    pub alpha1_factor: Option<f64>,
    #[arg(long, value_enum)]
    pub stabilizer: Option<StabilizerKind>,
}

impl Overrides {
    /// Config from `--config`, else `<dir>/config.toml`, else the preset,
    /// with the flags applied on top.
    pub fn resolve(&self, dir: Option<&Path>) -> Result<Config> {
        let fallback = self.case.unwrap_or(Case::TwoCube);
        let file = match (&self.config, dir) {
            (Some(path), _) => Some(path.clone()),
            (None, Some(d)) if d.join(CONFIG_FILE).is_file() => Some(d.join(CONFIG_FILE)),
            _ => None,
        };
        let mut cfg = match file {
            Some(path) => {
                let cfg = Config::load(&path, fallback)?;
                if let Some(case) = self.case {
                    ensure!(
                        case == cfg.case,
                        "--case {case:?} conflicts with case {:?} in {}",
                        cfg.case,
                        path.display()
                    );
                }
                cfg
            }
            None => Config::preset(fallback),
        };
        if let Some(v) = self.solver {
            cfg.solver = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = self.t {
            cfg.t = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.epsilon {
            cfg.epsilon = v;
        }
        if let Some(v) = self.beta {
            cfg.depth_beta = v;
        }
        if let Some(v) = self.alpha1_factor {
            cfg.alpha1_factor = v;
        }
        if let Some(v) = self.stabilizer {
            cfg.stabilizer = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn true_model(cfg: &Config, mesh: &Mesh) -> Result<Vec<f64>> {
    Ok(match cfg.case {
        Case::TwoCube => synthetics::two_cube_model(mesh)?,
        Case::Multibody | Case::MultibodyHalf => synthetics::multibody_model(mesh)?,
    })
}

fn kernel(cfg: &Config, mesh: &Mesh, stations: &StationSet) -> Result<KernelMatrix> {
    stations.check_above(mesh)?;
    Ok(assemble_kernel_with(mesh, stations, &cfg.kernel_options())?)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

/// Writes the resolved config, stations, true model and noisy data.
pub fn synth(cfg: &Config, out_dir: &Path) -> Result<DataSet> {
    create_dir(out_dir)?;
    let mesh = cfg.mesh()?;
    let stations = StationSet::above_cells(&mesh, cfg.station_z)?;
    let model = true_model(cfg, &mesh)?;
    let g = kernel(cfg, &mesh, &stations)?;
    let exact = forward(&g, &model)?;
    let (gz, std) = add_noise(&exact, &cfg.noise())?;
    let data = DataSet { stations, gz, std };

    std::fs::write(out_dir.join(CONFIG_FILE), cfg.to_toml())?;
    io::write_stations(&out_dir.join("stations.csv"), &data.stations)?;
    io::write_model(&out_dir.join("model.csv"), &mesh, &model)?;
    io::write_data(&out_dir.join("data.csv"), &data)?;
    Ok(data)
}

/// Exact data of `model_path` at the stations of `stations_path`, with the
/// configured noise deviations, optionally noise-contaminated.
pub fn forward_data(
    cfg: &Config,
    stations_path: &Path,
    model_path: &Path,
    out_dir: &Path,
    noisy: bool,
) -> Result<DataSet> {
    let mesh = cfg.mesh()?;
    let stations = io::read_stations(stations_path)?;
    let model = io::read_model(model_path, &mesh)?;
    let g = kernel(cfg, &mesh, &stations)?;
    let exact = forward(&g, &model)?;
    let (gz, std) = if noisy {
        add_noise(&exact, &cfg.noise())?
    } else if cfg.noise_relative == 0.0 && cfg.noise_norm == 0.0 {
        let zeros = vec![0.0; exact.len()];
        (exact, zeros)
    } else {
        let std = cfg.noise().std_devs(&exact)?;
        (exact, std)
    };
    let data = DataSet { stations, gz, std };
    create_dir(out_dir)?;
    io::write_data(&out_dir.join("data.csv"), &data)?;
    Ok(data)
}

/// Inputs shared by the inversion-type subcommands.
pub struct Prepared {
    pub mesh: Mesh,
    pub data: DataSet,
    pub kernel: KernelMatrix,
    pub data_weights: Vec<f64>,
    pub depth: Vec<f64>,
    pub truth: Option<Vec<f64>>,
}

impl Prepared {
    pub fn load(cfg: &Config, in_dir: &Path) -> Result<Prepared> {
        let mesh = cfg.mesh()?;
        let data = io::read_data(&in_dir.join("data.csv"))?;
        if let Some((i, s)) = data.std.iter().enumerate().find(|(_, s)| !(**s > 0.0)) {
            bail!("data.csv row {}: std_mgal must be positive, found {s}", i + 1);
        }
        let kernel = kernel(cfg, &mesh, &data.stations)?;
        let data_weights = data.std.iter().map(|s| 1.0 / s).collect();
        let depth = depth_weighting(&mesh, cfg.depth_beta, cfg.depth_offset())?;
        let truth_path = in_dir.join("model.csv");
        let truth = if truth_path.is_file() {
            Some(io::read_model(&truth_path, &mesh)?)
        } else {
            None
        };
        Ok(Prepared {
            mesh,
            data,
            kernel,
            data_weights,
            depth,
            truth,
        })
    }

    pub fn run(&self, cfg: &Config) -> Result<InversionResult> {
        let n = self.mesh.len();
        let prior = vec![0.0; n];
        let hard = vec![1.0; n];
        let problem = InversionProblem {
            kernel: &self.kernel,
            data: &self.data.gz,
            data_weights: &self.data_weights,
            prior: &prior,
            hard: &hard,
            depth: &self.depth,
            truth: self.truth.as_deref(),
        };
        Ok(invert(&problem, &cfg.inversion()?)?)
    }
}

fn distinct_dirs(in_dir: &Path, out_dir: &Path) -> Result<()> {
    let same = match (in_dir.canonicalize(), out_dir.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    ensure!(
        !same,
        "output directory {} would overwrite the inputs; choose another --out-dir",
        out_dir.display()
    );
    Ok(())
}

pub fn invert_run(cfg: &Config, in_dir: &Path, out_dir: &Path) -> Result<InversionResult> {
    distinct_dirs(in_dir, out_dir)?;
    let prep = Prepared::load(cfg, in_dir)?;
    let result = prep.run(cfg)?;
    create_dir(out_dir)?;
    io::write_model(&out_dir.join("model.csv"), &prep.mesh, &result.model)?;
    io::write_log(&out_dir.join("log.csv"), &result.records)?;
    io::write_spectrum(&out_dir.join("spectrum.csv"), &result.last().sigma)?;
    for rec in &result.records {
        if let Some(grid) = &rec.upre {
            io::write_upre(&out_dir.join(format!("upre_{}.csv", rec.iteration)), grid)?;
        }
    }
    Ok(result)
}

/// Spectra of the first-iteration system: RSVD at rank q, the Krylov
/// projection after t steps, and optionally the full SVD.
pub fn spectra(cfg: &Config, in_dir: &Path, out_dir: &Path, dense: bool) -> Result<()> {
    let prep = Prepared::load(cfg, in_dir)?;
    let inverse_depth: Vec<f64> = prep.depth.iter().map(|w| 1.0 / w).collect();
    let op = ScaledKernel::new(&prep.kernel, &prep.data_weights, inverse_depth)?;
    create_dir(out_dir)?;

    let rsvd_cfg = RsvdConfig {
        oversampling: cfg.oversampling,
        ..RsvdConfig::new(cfg.q, cfg.seed)
    };
    let sketch = randsvd::rsvd(&op, &rsvd_cfg)?;
    io::write_spectrum(&out_dir.join("spectrum.csv"), &sketch.sigma)?;

    let residual: Vec<f64> =
        prep.data.gz.iter().zip(&prep.data_weights).map(|(d, w)| d * w).collect();
    let krylov = lsqr::subspace_svd(&lsqr::gkb(&op, &residual, cfg.t, true)?);
    io::write_spectrum(&out_dir.join("spectrum_lsqr.csv"), &krylov.sigma)?;

    if dense {
        let full = randsvd::dense_svd_underdetermined(&op)?;
        io::write_spectrum(&out_dir.join("spectrum_dense.csv"), &full.sigma)?;
    }
    Ok(())
}

/// Runs RSVD at q and LSQR at t (and the full SVD when asked) on the same
/// inputs.
pub fn compare(cfg: &Config, in_dir: &Path, out_dir: &Path, dense: bool) -> Result<Vec<CompareRow>> {
    let prep = Prepared::load(cfg, in_dir)?;
    create_dir(out_dir)?;
    let mut solvers = vec![(SolverKind::Rsvd, cfg.q), (SolverKind::Lsqr, cfg.t)];
    if dense {
        solvers.push((SolverKind::Fsvd, prep.data.gz.len()));
    }
    let mut out = Vec::new();
    for (solver, subspace) in solvers {
        let run_cfg = Config {
            solver,
            ..cfg.clone()
        };
        let result = prep.run(&run_cfg)?;
        let name = run_cfg.inversion()?.solver.name();
        io::write_log(&out_dir.join(format!("log_{name}.csv")), &result.records)?;
        let last = result.last();
        out.push(CompareRow {
            solver: name.to_owned(),
            subspace,
            re: last.relative_error,
            k: result.iterations(),
            seconds: last.seconds,
        });
    }
    io::write_compare(&out_dir.join("compare.csv"), &out)?;
    Ok(out)
}
