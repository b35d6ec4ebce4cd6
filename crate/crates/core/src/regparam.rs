//! Regularization parameter selection by the unbiased predictive risk
//! estimator (UPRE) on a projected spectrum.
//!
//! For singular values `σᵢ` and projected data `βᵢ = uᵢᵀ·r̃`,
//!
//! ```text
//! U(α) = Σᵢ (1 / (σᵢ²/α² + 1))² βᵢ² + 2 Σᵢ σᵢ² / (σᵢ² + α²) − q
//! ```
//!
//! is evaluated on a log-spaced grid between the extreme singular values
//! and refined by golden-section search around the best grid point.

use alloc::format;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Default multiplier for the first-iteration parameter `α₁ = c·σ₁`.
pub const DEFAULT_ALPHA1_FACTOR: f64 = 50.0;

/// Default relative threshold for truncating a Krylov spectrum.
pub const DEFAULT_TRUNCATION_THRESHOLD: f64 = 1e-3;

/// Spectrum and projected data for one UPRE evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct UpreInput {
    sigma: Vec<f64>,
    beta: Vec<f64>,
}

impl UpreInput {
    pub fn new(sigma: Vec<f64>, beta: Vec<f64>) -> Result<Self> {
        if sigma.is_empty() {
            return Err(Error::InvalidParameter("empty spectrum".into()));
        }
        if sigma.len() != beta.len() {
            return Err(Error::DimensionMismatch {
                context: "UPRE projected data",
                expected: sigma.len(),
                found: beta.len(),
            });
        }
        if sigma.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "singular values must be positive and finite".into(),
            ));
        }
        if sigma.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter(
                "singular values must be sorted descending".into(),
            ));
        }
        Ok(UpreInput { sigma, beta })
    }

    pub fn len(&self) -> usize {
        self.sigma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sigma.is_empty()
    }

    pub fn sigma(&self) -> &[f64] {
        &self.sigma
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Leading `count` entries.
    pub fn truncated(&self, count: usize) -> Result<UpreInput> {
        if count == 0 || count > self.len() {
            return Err(Error::InvalidParameter(format!(
                "truncation index {count} outside 1..={}",
                self.len()
            )));
        }
        Ok(UpreInput {
            sigma: self.sigma[..count].to_vec(),
            beta: self.beta[..count].to_vec(),
        })
    }
}

pub fn upre_value(alpha: f64, input: &UpreInput) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "regularization parameter must be positive, got {alpha}"
        )));
    }
    Ok(upre_unchecked(alpha, input))
}

fn upre_unchecked(alpha: f64, input: &UpreInput) -> f64 {
    let a2 = alpha * alpha;
    let mut fit = 0.0;
    let mut trace = 0.0;
    for (s, b) in input.sigma.iter().zip(&input.beta) {
        let s2 = s * s;
        let residual_filter = 1.0 / (s2 / a2 + 1.0);
        fit += residual_filter * residual_filter * b * b;
        trace += s2 / (s2 + a2);
    }
    fit + 2.0 * trace - input.len() as f64
}

/// Search settings for [`minimize_upre`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlphaSearch {
    pub grid_size: usize,
    /// Explicit `[lo, hi]`; defaults to `[σ_q, σ₁]`.
    pub range: Option<(f64, f64)>,
    /// Relative tolerance of the golden-section refinement, `None` to keep
    /// the grid argmin.
    pub refine_tolerance: Option<f64>,
}

impl Default for AlphaSearch {
    fn default() -> Self {
        AlphaSearch {
            grid_size: 100,
            range: None,
            refine_tolerance: Some(1e-10),
        }
    }
}

/// Result of a UPRE minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaChoice {
    pub alpha: f64,
    pub value: f64,
    /// Index of the best grid point.
    pub grid_index: usize,
    pub grid: Vec<(f64, f64)>,
    /// The grid minimum sits on an end of the range.
    pub boundary: bool,
    /// Every grid value was equal; `alpha` is the largest grid point.
    pub degenerate: bool,
}

/// Log-spaced grid with `size` points on `[lo, hi]`, ascending.
pub fn log_grid(lo: f64, hi: f64, size: usize) -> Vec<f64> {
    let (llo, lhi) = (libm::log(lo), libm::log(hi));
    let step = (lhi - llo) / (size - 1) as f64;
    (0..size)
        .map(|i| {
            if i == size - 1 {
                hi
            } else if i == 0 {
                lo
            } else {
                libm::exp(llo + step * i as f64)
            }
        })
        .collect()
}

fn search_range(input: &UpreInput, search: &AlphaSearch) -> Result<(f64, f64)> {
    let (lo, hi) = match search.range {
        Some(r) => r,
        None => {
            let hi = input.sigma[0];
            let lo = input.sigma[input.len() - 1];
            if lo == hi {
                // single distinct singular value: open a decade either side
                (lo / 10.0, hi * 10.0)
            } else {
                (lo, hi)
            }
        }
    };
    if !(lo > 0.0) || !(hi > lo) || !hi.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "invalid regularization search range [{lo}, {hi}]"
        )));
    }
    Ok((lo, hi))
}

pub fn minimize_upre(input: &UpreInput, search: &AlphaSearch) -> Result<AlphaChoice> {
    if search.grid_size < 2 {
        return Err(Error::InvalidParameter("search grid needs at least 2 points".into()));
    }
    let (lo, hi) = search_range(input, search)?;
    let alphas = log_grid(lo, hi, search.grid_size);
    let grid: Vec<(f64, f64)> = alphas.iter().map(|&a| (a, upre_unchecked(a, input))).collect();

    // ties resolve toward the larger alpha
    let mut best = 0;
    for (i, &(_, u)) in grid.iter().enumerate() {
        if u <= grid[best].1 {
            best = i;
        }
    }
    let (vmin, vmax) = grid
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &(_, u)| (a.min(u), b.max(u)));
    let degenerate = vmax - vmin <= 1e-14 * vmax.abs().max(1.0);
    if degenerate {
        let last = grid.len() - 1;
        return Ok(AlphaChoice {
            alpha: grid[last].0,
            value: grid[last].1,
            grid_index: last,
            grid,
            boundary: true,
            degenerate: true,
        });
    }

    let boundary = best == 0 || best == grid.len() - 1;
    let (mut alpha, mut value) = grid[best];
    if let Some(tol) = search.refine_tolerance {
        let left = grid[best.saturating_sub(1)].0;
        let right = grid[(best + 1).min(grid.len() - 1)].0;
        let (a, u) = golden_section(|a| upre_unchecked(a, input), left, right, tol);
        if u < value {
            alpha = a;
            value = u;
        }
    }
    Ok(AlphaChoice {
        alpha,
        value,
        grid_index: best,
        grid,
        boundary,
        degenerate: false,
    })
}

/// Golden-section minimization in log α on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, lo: f64, hi: f64, tol: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (libm::log(lo), libm::log(hi));
    let eval = |t: f64| f(libm::exp(t));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (eval(c), eval(d));
    // log-space width equals the relative width of the bracket
    let mut guard = 0;
    while b - a > tol && guard < 200 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d);
        }
        guard += 1;
    }
    if fc <= fd {
        (libm::exp(c), fc)
    } else {
        (libm::exp(d), fd)
    }
}

/// First-iteration regularization parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitialAlpha {
    /// `(n/m)^3.5 · σ₁ / mean(σ)` for an m×n system.
    SizeRatio,
    /// `c·σ₁`.
    SigmaMultiple(f64),
}

impl Default for InitialAlpha {
    fn default() -> Self {
        InitialAlpha::SigmaMultiple(DEFAULT_ALPHA1_FACTOR)
    }
}

/// `(n/m)^3.5 · σ₁ / mean(σ)`.
pub fn size_ratio_alpha(sigma: &[f64], m: usize, n: usize) -> Result<f64> {
    let top = sigma
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameter("empty spectrum".into()))?;
    if m == 0 || n == 0 {
        return Err(Error::InvalidParameter("system dimensions must be positive".into()));
    }
    let mean = sigma.iter().sum::<f64>() / sigma.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::InvalidParameter("spectrum must be positive".into()));
    }
    Ok(libm::pow(n as f64 / m as f64, 3.5) * top / mean)
}

/// `α₁ = factor·σ₁`.
pub fn initial_alpha(sigma: &[f64], factor: f64) -> Result<f64> {
    let top = sigma
        .first()
        .copied()
        .ok_or_else(|| Error::InvalidParameter("empty spectrum".into()))?;
    if !(factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "first-iteration factor must be positive, got {factor}"
        )));
    }
    Ok(factor * top)
}

/// Number of leading singular values kept: entries before the first
/// `σᵢ < threshold·σ₁`.
pub fn truncation_index(sigma: &[f64], threshold: f64) -> usize {
    let top = sigma.first().copied().unwrap_or(0.0);
    sigma
        .iter()
        .position(|&s| s < threshold * top)
        .unwrap_or(sigma.len())
        .max(1)
        .min(sigma.len())
}

/// UPRE minimized over the leading `trunc` entries only.
pub fn truncated_upre(input: &UpreInput, trunc: usize, search: &AlphaSearch) -> Result<AlphaChoice> {
    minimize_upre(&input.truncated(trunc)?, search)
}
