//! Iteratively reweighted focused inversion.
//!
//! The weighted objective
//! `‖Wd(G·m − d)‖² + α²‖W(m − m_apr)‖²` with the diagonal
//! `W = W_L1·Wz·Wh` is rewritten at every iteration in standard form with
//! system matrix `Wd·G·W⁻¹`. The standard-form system is factored at rank
//! q (randomized SVD, dense SVD, or a Golub-Kahan subspace), the parameter
//! α is chosen, and the filtered increment
//!
//! ```text
//! h = Σᵢ σᵢ²/(σᵢ² + α²) · (uᵢᵀ r̃ / σᵢ) · vᵢ
//! ```
//!
//! updates the model as `m⁽ᵏ⁾ = m⁽ᵏ⁻¹⁾ + W⁻¹ h`. Densities are clamped to
//! the bounds and the focusing weight is refreshed from the model change
//! `m⁽ᵏ⁾ − m⁽ᵏ⁻¹⁾`. The loop stops when `χ² ≤ m + √(2m)`, when the model
//! stagnates, or after the iteration cap.

use alloc::vec;
use alloc::vec::Vec;

use crate::kernel::{self, KernelMatrix};
use crate::linalg::{self, MatRef};
use crate::lsqr;
use crate::operator::{ScaledKernel, SystemMatrix, VisitCounts};
use crate::randsvd::{self, QApplication, RsvdConfig, SmallFactorization, SvdTriple};
use crate::regparam::{self, AlphaSearch, InitialAlpha, UpreInput};
use crate::{Error, Result};

/// Default focusing parameter ε in g/cm³.
pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Default `Wh` entry for cells pinned to their prior density.
pub const DEFAULT_PINNED_WEIGHT: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stabilizer {
    /// `((Δm)² + ε²)^(-1/4)`
    #[default]
    L1,
    /// `((Δm)² + ε²)^(-1/2)`
    MinimumSupport,
}

/// Model the focusing weight is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReweightReference {
    /// `m⁽ᵏ⁾ − m⁽ᵏ⁻¹⁾`
    #[default]
    PreviousIterate,
    /// `m⁽ᵏ⁾ − m_apr`
    Prior,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Solver {
    /// Randomized SVD at target rank `rank`.
    Rsvd { rank: usize },
    /// Golub-Kahan subspace of dimension `steps` with truncated UPRE.
    Lsqr { steps: usize },
    /// Full thin SVD.
    Fsvd,
}

impl Solver {
    pub fn name(&self) -> &'static str {
        match self {
            Solver::Rsvd { .. } => "rsvd",
            Solver::Lsqr { .. } => "lsqr",
            Solver::Fsvd => "fsvd",
        }
    }

    /// Subspace dimension (`q`, `t`, or 0 for the full SVD).
    pub fn subspace(&self) -> usize {
        match self {
            Solver::Rsvd { rank } => *rank,
            Solver::Lsqr { steps } => *steps,
            Solver::Fsvd => 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionConfig {
    pub epsilon: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub max_iterations: usize,
    pub stabilizer: Stabilizer,
    pub reweight_reference: ReweightReference,
    pub solver: Solver,
    pub oversampling: usize,
    pub seed: u64,
    pub small_factorization: SmallFactorization,
    pub q_application: QApplication,
    /// Rule for α at the first iteration.
    pub initial_alpha: InitialAlpha,
    pub search: AlphaSearch,
    /// Relative threshold for truncating Krylov spectra before the UPRE.
    pub truncation_threshold: f64,
    /// Relative model change below which the iteration stops.
    pub stagnation_tolerance: f64,
    pub reorthogonalize: bool,
    /// Keep the UPRE grid of every iteration in the records.
    pub record_upre: bool,
    /// Keep every iterate in the records.
    pub record_models: bool,
    /// Fixed α for every iteration (α = 0 gives the subspace pseudo-inverse).
    pub fixed_alpha: Option<f64>,
}

impl Default for InversionConfig {
    fn default() -> Self {
        InversionConfig {
            epsilon: DEFAULT_EPSILON,
            rho_min: 0.0,
            rho_max: 1.0,
            max_iterations: 50,
            stabilizer: Stabilizer::L1,
            reweight_reference: ReweightReference::PreviousIterate,
            solver: Solver::Rsvd { rank: 100 },
            oversampling: randsvd::DEFAULT_OVERSAMPLING,
            seed: 0,
            small_factorization: SmallFactorization::Gram,
            q_application: QApplication::Explicit,
            initial_alpha: InitialAlpha::default(),
            search: AlphaSearch::default(),
            truncation_threshold: regparam::DEFAULT_TRUNCATION_THRESHOLD,
            stagnation_tolerance: 1e-6,
            reorthogonalize: true,
            record_upre: false,
            record_models: false,
            fixed_alpha: None,
        }
    }
}

impl InversionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: alloc::string::String| Err(Error::InvalidParameter(msg));
        if !(self.epsilon > 0.0) {
            return bad(alloc::format!("epsilon must be positive, got {}", self.epsilon));
        }
        if !(self.rho_min < self.rho_max) {
            return bad(alloc::format!(
                "density bounds must satisfy rho_min < rho_max, got [{}, {}]",
                self.rho_min,
                self.rho_max
            ));
        }
        if self.max_iterations == 0 {
            return bad("iteration cap must be at least 1".into());
        }
        if let InitialAlpha::SigmaMultiple(c) = self.initial_alpha {
            if !(c > 0.0) {
                return bad(alloc::format!("first-iteration factor must be positive, got {c}"));
            }
        }
        if let Some(a) = self.fixed_alpha {
            if !(a >= 0.0) {
                return bad(alloc::format!("fixed alpha must be non-negative, got {a}"));
            }
        }
        match self.solver {
            Solver::Rsvd { rank: 0 } | Solver::Lsqr { steps: 0 } => {
                bad("subspace dimension must be at least 1".into())
            }
            _ => Ok(()),
        }
    }
}

/// Inputs of one inversion. All diagonal weights are given by their
/// entries.
#[derive(Debug, Clone, Copy)]
pub struct InversionProblem<'a> {
    pub kernel: &'a KernelMatrix,
    pub data: &'a [f64],
    /// `Wd` entries, `1/ηᵢ`.
    pub data_weights: &'a [f64],
    pub prior: &'a [f64],
    /// `Wh` entries.
    pub hard: &'a [f64],
    /// `Wz` entries.
    pub depth: &'a [f64],
    /// True model, when known, for relative errors.
    pub truth: Option<&'a [f64]>,
}

impl InversionProblem<'_> {
    fn validate(&self) -> Result<()> {
        let (m, n) = (self.kernel.nrows(), self.kernel.ncols());
        let check = |context: &'static str, expected: usize, found: usize| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                })
            }
        };
        check("observed data", m, self.data.len())?;
        check("data weights", m, self.data_weights.len())?;
        check("prior model", n, self.prior.len())?;
        check("hard-constraint weights", n, self.hard.len())?;
        check("depth weights", n, self.depth.len())?;
        if let Some(t) = self.truth {
            check("true model", n, t.len())?;
        }
        let positive = |w: &[f64]| w.iter().all(|v| *v > 0.0 && v.is_finite());
        if !positive(self.data_weights) || !positive(self.hard) || !positive(self.depth) {
            return Err(Error::InvalidParameter(
                "diagonal weights must be positive and finite".into(),
            ));
        }
        Ok(())
    }
}

/// The diagonal weights of one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSet {
    pub data: Vec<f64>,
    pub depth: Vec<f64>,
    pub hard: Vec<f64>,
    pub focusing: Vec<f64>,
}

impl WeightSet {
    /// `W = W_L1·Wz·Wh`.
    pub fn composite(&self) -> Vec<f64> {
        self.focusing
            .iter()
            .zip(&self.depth)
            .zip(&self.hard)
            .map(|((f, d), h)| f * d * h)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    NoiseLevel,
    MaxIterations,
    Stagnation,
}

impl Termination {
    pub fn as_str(&self) -> &'static str {
        match self {
            Termination::NoiseLevel => "noise-level",
            Termination::MaxIterations => "max-iterations",
            Termination::Stagnation => "stagnation",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub alpha: f64,
    pub chi2: f64,
    pub relative_error: Option<f64>,
    /// Wall time since the start of the inversion.
    pub seconds: f64,
    /// Spectrum of the factored standard-form system.
    pub sigma: Vec<f64>,
    /// Passes over the kernel made by the factorization.
    pub visits: VisitCounts,
    /// `(α, U(α))` grid when requested.
    pub upre: Option<Vec<(f64, f64)>>,
    /// The iterate itself when requested.
    pub model: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub model: Vec<f64>,
    pub records: Vec<IterationRecord>,
    pub termination: Termination,
}

impl InversionResult {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("an inversion runs at least one iteration")
    }
}

/// Monotone wall clock in seconds.
pub trait Clock {
    fn seconds(&self) -> f64;
}

/// Clock that always reads zero.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoClock;

impl Clock for NoClock {
    fn seconds(&self) -> f64 {
        0.0
    }
}

#[cfg(feature = "std")]
#[derive(Debug, Clone, Copy)]
pub struct WallClock(std::time::Instant);

#[cfg(feature = "std")]
impl Default for WallClock {
    fn default() -> Self {
        WallClock(std::time::Instant::now())
    }
}

#[cfg(feature = "std")]
impl Clock for WallClock {
    fn seconds(&self) -> f64 {
        self.0.elapsed().as_secs_f64()
    }
}

/// Filtered subspace solution for the residual `r̃`.
pub fn filtered_solve(svd: &SvdTriple, residual: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if residual.len() != svd.u.nrows() {
        return Err(Error::DimensionMismatch {
            context: "standard-form residual",
            expected: svd.u.nrows(),
            found: residual.len(),
        });
    }
    filtered_solve_projected(svd, &svd.project(residual), alpha)
}

/// As [`filtered_solve`] with the projections `uᵢᵀ r̃` already computed.
pub fn filtered_solve_projected(svd: &SvdTriple, beta: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "regularization parameter must be non-negative, got {alpha}"
        )));
    }
    if beta.len() != svd.rank() {
        return Err(Error::DimensionMismatch {
            context: "projected residual",
            expected: svd.rank(),
            found: beta.len(),
        });
    }
    let a2 = alpha * alpha;
    let coeffs: Vec<f64> = svd
        .sigma
        .iter()
        .zip(beta)
        .map(|(s, b)| s * b / (s * s + a2))
        .collect();
    Ok(linalg::matvec(MatRef::from(&svd.v), &coeffs))
}

/// Focusing weights from the model change.
pub fn update_l1_weights(
    current: &[f64],
    reference: &[f64],
    epsilon: f64,
    stabilizer: Stabilizer,
) -> Result<Vec<f64>> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidParameter(alloc::format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    if current.len() != reference.len() {
        return Err(Error::DimensionMismatch {
            context: "focusing weight models",
            expected: current.len(),
            found: reference.len(),
        });
    }
    let e2 = epsilon * epsilon;
    let exponent = match stabilizer {
        Stabilizer::L1 => -0.25,
        Stabilizer::MinimumSupport => -0.5,
    };
    Ok(current
        .iter()
        .zip(reference)
        .map(|(a, b)| {
            let d = a - b;
            libm::pow(d * d + e2, exponent)
        })
        .collect())
}

/// Clamps every density into `[rho_min, rho_max]`.
pub fn project_bounds(model: &mut [f64], rho_min: f64, rho_max: f64) {
    for v in model.iter_mut() {
        *v = v.clamp(rho_min, rho_max);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquared {
    pub value: f64,
    pub threshold: f64,
    pub satisfied: bool,
}

/// `m + √(2m)`.
pub fn chi2_threshold(m: usize) -> f64 {
    m as f64 + libm::sqrt(2.0 * m as f64)
}

/// Weighted misfit from a residual `d_obs − G·m`.
pub fn chi_squared_from_residual(data_weights: &[f64], residual: &[f64]) -> ChiSquared {
    let value: f64 = data_weights
        .iter()
        .zip(residual)
        .map(|(w, r)| (w * r) * (w * r))
        .sum();
    let threshold = chi2_threshold(residual.len());
    ChiSquared {
        value,
        threshold,
        satisfied: value <= threshold,
    }
}

pub fn chi_squared(
    data_weights: &[f64],
    data: &[f64],
    kernel: &KernelMatrix,
    model: &[f64],
) -> Result<ChiSquared> {
    if data.len() != kernel.nrows() || data_weights.len() != kernel.nrows() {
        return Err(Error::DimensionMismatch {
            context: "data length",
            expected: kernel.nrows(),
            found: data.len().min(data_weights.len()),
        });
    }
    let predicted = kernel::forward(kernel, model)?;
    let residual: Vec<f64> = data.iter().zip(&predicted).map(|(d, p)| d - p).collect();
    Ok(chi_squared_from_residual(data_weights, &residual))
}

/// `‖exact − model‖ / ‖exact‖`.
pub fn relative_error(exact: &[f64], model: &[f64]) -> Result<f64> {
    if exact.len() != model.len() {
        return Err(Error::DimensionMismatch {
            context: "relative error",
            expected: exact.len(),
            found: model.len(),
        });
    }
    let denom = linalg::norm2(exact);
    if denom == 0.0 {
        return Err(Error::ZeroReference);
    }
    let diff: Vec<f64> = exact.iter().zip(model).map(|(a, b)| a - b).collect();
    Ok(linalg::norm2(&diff) / denom)
}

#[cfg(feature = "std")]
type DefaultClock = WallClock;
#[cfg(not(feature = "std"))]
type DefaultClock = NoClock;

/// Runs the reweighted inversion with the solver named in `cfg`.
pub fn invert(problem: &InversionProblem<'_>, cfg: &InversionConfig) -> Result<InversionResult> {
    invert_with_clock(problem, cfg, &DefaultClock::default())
}

pub fn invert_with_clock<C: Clock>(
    problem: &InversionProblem<'_>,
    cfg: &InversionConfig,
    clock: &C,
) -> Result<InversionResult> {
    problem.validate()?;
    cfg.validate()?;
    let start = clock.seconds();
    let n = problem.kernel.ncols();
    let mut weights = WeightSet {
        data: problem.data_weights.to_vec(),
        depth: problem.depth.to_vec(),
        hard: problem.hard.to_vec(),
        focusing: vec![1.0; n],
    };

    let mut previous = problem.prior.to_vec();
    let mut residual = data_residual(problem, &previous)?;
    let mut scaled_residual = weighted(&weights.data, &residual);
    let mut records = Vec::new();

    for k in 1..=cfg.max_iterations {
        let w = weights.composite();
        let inverse_w: Vec<f64> = w.iter().map(|v| 1.0 / v).collect();
        let op = ScaledKernel::new(problem.kernel, problem.data_weights, inverse_w.clone())?;

        let svd = factorize(&op, &scaled_residual, cfg, k).map_err(|e| e.at_iteration(k))?;
        let visits = op.visits();
        let beta = svd.project(&scaled_residual);

        let (alpha, upre) = choose_alpha(&svd, &beta, cfg, k).map_err(|e| e.at_iteration(k))?;
        let h = filtered_solve_projected(&svd, &beta, alpha)?;

        let mut model: Vec<f64> = previous
            .iter()
            .zip(h.iter().zip(&inverse_w))
            .map(|(p, (h, iw))| p + h * iw)
            .collect();
        project_bounds(&mut model, cfg.rho_min, cfg.rho_max);
        if let Some(cell) = model.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteModel { iteration: k, cell });
        }

        residual = data_residual(problem, &model)?;
        let chi2 = chi_squared_from_residual(&weights.data, &residual);
        let relative_error = problem
            .truth
            .map(|t| relative_error(t, &model))
            .transpose()?;
        records.push(IterationRecord {
            iteration: k,
            alpha,
            chi2: chi2.value,
            relative_error,
            seconds: clock.seconds() - start,
            sigma: svd.sigma.clone(),
            visits,
            upre: if cfg.record_upre { upre } else { None },
            model: cfg.record_models.then(|| model.clone()),
        });

        let termination = if chi2.satisfied {
            Some(Termination::NoiseLevel)
        } else if stagnated(&model, &previous, cfg.stagnation_tolerance) {
            Some(Termination::Stagnation)
        } else if k == cfg.max_iterations {
            Some(Termination::MaxIterations)
        } else {
            None
        };
        if let Some(termination) = termination {
            return Ok(InversionResult {
                model,
                records,
                termination,
            });
        }

        scaled_residual = weighted(&weights.data, &residual);
        let reference = match cfg.reweight_reference {
            ReweightReference::PreviousIterate => &previous,
            ReweightReference::Prior => problem.prior,
        };
        weights.focusing = update_l1_weights(&model, reference, cfg.epsilon, cfg.stabilizer)?;
        previous = model;
    }
    unreachable!("the loop returns on its last iteration")
}

fn data_residual(problem: &InversionProblem<'_>, model: &[f64]) -> Result<Vec<f64>> {
    let predicted = kernel::forward(problem.kernel, model)?;
    Ok(problem.data.iter().zip(&predicted).map(|(d, p)| d - p).collect())
}

fn weighted(w: &[f64], r: &[f64]) -> Vec<f64> {
    w.iter().zip(r).map(|(a, b)| a * b).collect()
}

fn stagnated(model: &[f64], previous: &[f64], tolerance: f64) -> bool {
    let base = linalg::norm2(previous);
    if base == 0.0 {
        return false;
    }
    let change: Vec<f64> = model.iter().zip(previous).map(|(a, b)| a - b).collect();
    linalg::norm2(&change) / base < tolerance
}

fn factorize<A: SystemMatrix>(
    op: &A,
    scaled_residual: &[f64],
    cfg: &InversionConfig,
    iteration: usize,
) -> Result<SvdTriple> {
    match cfg.solver {
        Solver::Rsvd { rank } => {
            let rsvd_cfg = RsvdConfig {
                rank,
                oversampling: cfg.oversampling,
                // fresh, reproducible sketch every iteration
                seed: cfg.seed.wrapping_add(iteration as u64),
                small: cfg.small_factorization,
                q_application: cfg.q_application,
            };
            randsvd::rsvd(op, &rsvd_cfg)
        }
        Solver::Fsvd => randsvd::dense_svd_underdetermined(op),
        Solver::Lsqr { steps } => {
            let gkb = lsqr::gkb(op, scaled_residual, steps, cfg.reorthogonalize)?;
            Ok(lsqr::subspace_svd(&gkb))
        }
    }
}

type UpreGrid = Option<Vec<(f64, f64)>>;

fn choose_alpha(
    svd: &SvdTriple,
    beta: &[f64],
    cfg: &InversionConfig,
    iteration: usize,
) -> Result<(f64, UpreGrid)> {
    if let Some(alpha) = cfg.fixed_alpha {
        return Ok((alpha, None));
    }
    if iteration == 1 {
        let alpha = match cfg.initial_alpha {
            InitialAlpha::SizeRatio => {
                regparam::size_ratio_alpha(&svd.sigma, svd.u.nrows(), svd.v.nrows())?
            }
            InitialAlpha::SigmaMultiple(c) => regparam::initial_alpha(&svd.sigma, c)?,
        };
        return Ok((alpha, None));
    }
    let input = UpreInput::new(svd.sigma.clone(), beta.to_vec())?;
    let choice = match cfg.solver {
        Solver::Lsqr { .. } => {
            let trunc = regparam::truncation_index(&svd.sigma, cfg.truncation_threshold);
            regparam::truncated_upre(&input, trunc, &cfg.search)?
        }
        _ => regparam::minimize_upre(&input, &cfg.search)?,
    };
    Ok((choice.alpha, Some(choice.grid)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    fn random(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn filtered_solve_matches_normal_equations() {
        let a = random(20, 50, 1);
        let r: Vec<f64> = random(20, 1, 2).as_slice().to_vec();
        let svd = randsvd::dense_svd_underdetermined(&a).unwrap();
        assert_eq!(svd.rank(), 20);
        let alpha = 0.7;
        let h = filtered_solve(&svd, &r, alpha).unwrap();
        // (AᵀA + α²I) h = Aᵀ r
        let lhs = a.transpose() * &a + DMatrix::identity(50, 50) * (alpha * alpha);
        let rhs = a.transpose() * nalgebra::DVector::from_column_slice(&r);
        let oracle = lhs.lu().solve(&rhs).unwrap();
        let diff = (nalgebra::DVector::from_column_slice(&h) - &oracle).norm();
        assert!(diff <= 1e-8 * oracle.norm());
    }

    #[test]
    fn filtered_solve_limits() {
        let a = random(10, 30, 3);
        let r: Vec<f64> = random(10, 1, 4).as_slice().to_vec();
        let svd = randsvd::dense_svd_underdetermined(&a).unwrap();
        let huge = 1e8 * svd.sigma[0];
        let h = filtered_solve(&svd, &r, huge).unwrap();
        let beta = svd.project(&r);
        let bound = beta.iter().map(|b| b.abs()).sum::<f64>() * svd.sigma[0] / (huge * huge);
        assert!(linalg::norm2(&h) <= bound);
        // α = 0 reproduces the pseudo-inverse solution
        let h0 = filtered_solve(&svd, &r, 0.0).unwrap();
        let fit = &a * nalgebra::DVector::from_column_slice(&h0);
        for i in 0..10 {
            assert!((fit[i] - r[i]).abs() < 1e-9);
        }
        assert!(filtered_solve(&svd, &r, -1.0).is_err());
        assert!(filtered_solve(&svd, &r[..3], 1.0).is_err());
    }

    #[test]
    fn focusing_weights() {
        let eps = 0.01;
        let w = update_l1_weights(&[0.0, 0.0], &[0.0, 0.0], eps, Stabilizer::L1).unwrap();
        assert!(w.iter().all(|v| (v - 10.0).abs() < 1e-12));
        let w = update_l1_weights(&[0.0], &[0.0], eps, Stabilizer::MinimumSupport).unwrap();
        assert!((w[0] - 100.0).abs() < 1e-9);
        let w = update_l1_weights(&[0.1], &[0.0], eps, Stabilizer::L1).unwrap();
        assert!((w[0] - 3.1544210090125717).abs() < 1e-12);
        let w = update_l1_weights(&[0.0, 0.1, -0.3, 1.0], &[0.0; 4], eps, Stabilizer::L1).unwrap();
        assert!(w[0] > w[1] && w[1] > w[2] && w[2] > w[3]);
        assert!(update_l1_weights(&[0.0], &[0.0], 0.0, Stabilizer::L1).is_err());
    }

    #[test]
    fn bound_projection() {
        let mut m = vec![-0.2, 0.5, 1.4];
        project_bounds(&mut m, 0.0, 1.0);
        assert_eq!(m, vec![0.0, 0.5, 1.0]);
        let snapshot = m.clone();
        project_bounds(&mut m, 0.0, 1.0);
        assert_eq!(m, snapshot);
    }

    #[test]
    fn chi2_rule() {
        assert!((chi2_threshold(600) - 634.6410161513776).abs() < 1e-9);
        let eta = vec![0.5; 600];
        let w: Vec<f64> = eta.iter().map(|e| 1.0 / e).collect();
        let chi = chi_squared_from_residual(&w, &eta);
        assert!((chi.value - 600.0).abs() < 1e-9);
        assert!(chi.satisfied);
        let zero = chi_squared_from_residual(&w, &[0.0; 600]);
        assert_eq!(zero.value, 0.0);
        assert!(zero.satisfied);
    }

    #[test]
    fn relative_error_cases() {
        let exact = [1.0, 0.0, 2.0];
        assert_eq!(relative_error(&exact, &exact).unwrap(), 0.0);
        assert_eq!(relative_error(&exact, &[0.0; 3]).unwrap(), 1.0);
        assert_eq!(relative_error(&[0.0; 3], &exact), Err(Error::ZeroReference));
    }

    #[test]
    fn composite_weight() {
        let ws = WeightSet {
            data: vec![1.0],
            depth: vec![2.0, 3.0],
            hard: vec![1.0, 100.0],
            focusing: vec![0.5, 2.0],
        };
        assert_eq!(ws.composite(), vec![1.0, 600.0]);
    }

    #[test]
    fn config_validation() {
        let mut cfg = InversionConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.rho_min = 1.0;
        assert!(cfg.validate().is_err());
        let cfg = InversionConfig {
            epsilon: 0.0,
            ..InversionConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = InversionConfig {
            max_iterations: 0,
            ..InversionConfig::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = InversionConfig {
            solver: Solver::Rsvd { rank: 0 },
            ..InversionConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
