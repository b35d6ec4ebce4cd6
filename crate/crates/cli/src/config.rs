//! Flat key-value experiment configuration.
//!
//! A config file names a `case` whose preset supplies every key; any other
//! key in the file overrides the preset. Unknown keys are rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use gravinv_core::inversion::{InversionConfig, ReweightReference, Solver, Stabilizer};
use gravinv_core::kernel::KernelOptions;
use gravinv_core::randsvd::SmallFactorization;
use gravinv_core::regparam::InitialAlpha;
use gravinv_core::synthetics::NoiseSpec;
use gravinv_core::Mesh;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Case {
    TwoCube,
    Multibody,
    MultibodyHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Rsvd,
    Lsqr,
    Fsvd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum StabilizerKind {
    L1,
    Ms,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SmallKind {
    Gram,
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Alpha1Rule {
    /// `alpha1_factor·σ₁`
    SigmaMultiple,
    /// `(n/m)^3.5·σ₁/mean(σ)`
    SizeRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub case: Case,
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub x0: f64,
    pub y0: f64,
    pub z0: f64,
    pub station_z: f64,
    pub noise_relative: f64,
    pub noise_norm: f64,
    pub noise_absolute: bool,
    pub seed: u64,
    pub solver: SolverKind,
    pub q: usize,
    pub t: usize,
    pub oversampling: usize,
    pub small_factorization: SmallKind,
    pub epsilon: f64,
    pub depth_beta: f64,
    /// Defaults to `dz/2` when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_z0: Option<f64>,
    pub alpha1_rule: Alpha1Rule,
    pub alpha1_factor: f64,
    pub truncation_threshold: f64,
    pub stabilizer: StabilizerKind,
    pub reweight_against_prior: bool,
    pub rho_min: f64,
    pub rho_max: f64,
    pub max_iterations: usize,
    pub record_upre: bool,
    pub memory_cap_gib: f64,
    pub unlock_memory: bool,
}

impl Config {
    pub fn preset(case: Case) -> Config {
        let base = Config {
            case,
            nx: 30,
            ny: 20,
            nz: 10,
            dx: 50.0,
            dy: 50.0,
            dz: 50.0,
            x0: 0.0,
            y0: 0.0,
            z0: 0.0,
            station_z: 0.0,
            noise_relative: 0.02,
            noise_norm: 0.002,
            noise_absolute: false,
            seed: 1,
            solver: SolverKind::Rsvd,
            q: 100,
            t: 100,
            oversampling: 10,
            small_factorization: SmallKind::Gram,
            epsilon: 3e-4,
            depth_beta: 1.5,
            depth_z0: None,
            alpha1_rule: Alpha1Rule::SigmaMultiple,
            alpha1_factor: 50.0,
            truncation_threshold: 3e-2,
            stabilizer: StabilizerKind::L1,
            reweight_against_prior: false,
            rho_min: 0.0,
            rho_max: 1.0,
            max_iterations: 50,
            record_upre: false,
            memory_cap_gib: 8.0,
            unlock_memory: false,
        };
        match case {
            Case::TwoCube => base,
            Case::Multibody => Config {
                nx: 100,
                ny: 55,
                nz: 12,
                noise_norm: 0.001,
                q: 1000,
                t: 1000,
                epsilon: 1e-4,
                depth_beta: 0.8,
                ..base
            },
            Case::MultibodyHalf => Config {
                nx: 50,
                ny: 55,
                nz: 12,
                noise_norm: 0.001,
                q: 460,
                t: 460,
                epsilon: 1e-4,
                depth_beta: 0.8,
                ..base
            },
        }
    }

    /// Parses a config text over the preset of its `case` (or of
    /// `fallback` when the text names none).
    pub fn from_toml(text: &str, fallback: Case) -> Result<Config> {
        let table: toml::Table = toml::from_str(text).context("malformed config")?;
        let case = match table.get("case") {
            Some(v) => Case::deserialize(v.clone()).context("invalid case")?,
            None => fallback,
        };
        let mut merged = toml::Table::try_from(Config::preset(case))?;
        merged.extend(table);
        let config: Config = merged.try_into().context("invalid config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path, fallback: Case) -> Result<Config> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Config::from_toml(&text, fallback).with_context(|| format!("in {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_relative < 0.0 || self.noise_norm < 0.0 {
            bail!("noise factors must be non-negative");
        }
        if !(self.memory_cap_gib > 0.0) {
            bail!("memory_cap_gib must be positive");
        }
        if self.alpha1_rule == Alpha1Rule::SigmaMultiple && !(self.alpha1_factor > 0.0) {
            bail!("alpha1_factor must be positive");
        }
        if self.depth_beta <= 0.0 {
            bail!("depth_beta must be positive");
        }
        self.inversion()?.validate()?;
        self.mesh()?;
        Ok(())
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Ok(Mesh::new(
            [self.nx, self.ny, self.nz],
            [self.dx, self.dy, self.dz],
            [self.x0, self.y0, self.z0],
        )?)
    }

    pub fn depth_offset(&self) -> f64 {
        self.depth_z0.unwrap_or(0.5 * self.dz)
    }

    pub fn noise(&self) -> NoiseSpec {
        NoiseSpec {
            absolute: self.noise_absolute,
            ..NoiseSpec::new(self.noise_relative, self.noise_norm, self.seed)
        }
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            memory_cap: (self.memory_cap_gib * (1u64 << 30) as f64) as u64,
            unlock: self.unlock_memory,
        }
    }

    pub fn solver(&self) -> Solver {
        match self.solver {
            SolverKind::Rsvd => Solver::Rsvd { rank: self.q },
            SolverKind::Lsqr => Solver::Lsqr { steps: self.t },
            SolverKind::Fsvd => Solver::Fsvd,
        }
    }

    pub fn inversion(&self) -> Result<InversionConfig> {
        let cfg = InversionConfig {
            epsilon: self.epsilon,
            rho_min: self.rho_min,
            rho_max: self.rho_max,
            max_iterations: self.max_iterations,
            stabilizer: match self.stabilizer {
                StabilizerKind::L1 => Stabilizer::L1,
                StabilizerKind::Ms => Stabilizer::MinimumSupport,
            },
            reweight_reference: if self.reweight_against_prior {
                ReweightReference::Prior
            } else {
                ReweightReference::PreviousIterate
            },
            solver: self.solver(),
            oversampling: self.oversampling,
            seed: self.seed,
            small_factorization: match self.small_factorization {
                SmallKind::Gram => SmallFactorization::Gram,
                SmallKind::Direct => SmallFactorization::Direct,
            },
            initial_alpha: match self.alpha1_rule {
                Alpha1Rule::SigmaMultiple => InitialAlpha::SigmaMultiple(self.alpha1_factor),
                Alpha1Rule::SizeRatio => InitialAlpha::SizeRatio,
            },
            truncation_threshold: self.truncation_threshold,
            record_upre: self.record_upre,
            ..InversionConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_round_trip() {
        for case in [Case::TwoCube, Case::Multibody, Case::MultibodyHalf] {
            let cfg = Config::preset(case);
            let back = Config::from_toml(&cfg.to_toml(), Case::TwoCube).unwrap();
            assert_eq!(back, cfg);
        }
    }

    #[test]
    fn overrides_and_typos() {
        let cfg = Config::from_toml("case = \"multibody-half\"\nq = 50\n# note\n", Case::TwoCube)
            .unwrap();
        assert_eq!(cfg.nx, 50);
        assert_eq!(cfg.q, 50);
        let cfg = Config::from_toml("depth_z0 = 0.0", Case::TwoCube).unwrap();
        assert_eq!(cfg.depth_offset(), 0.0);
        assert_eq!(Config::preset(Case::TwoCube).depth_offset(), 25.0);
        let err = Config::from_toml("epsilonn = 1.0", Case::TwoCube).unwrap_err();
        assert!(format!("{err:#}").contains("epsilonn"));
        assert!(Config::from_toml("epsilon = -1.0", Case::TwoCube).is_err());
        assert!(Config::from_toml("rho_min = 2.0", Case::TwoCube).is_err());
        assert!(Config::from_toml("case = \"three-cube\"", Case::TwoCube).is_err());
    }
}
