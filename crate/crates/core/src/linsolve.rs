//! Weighted sparse linear regression.
//!
//! Minimizes `Σᵢ wᵢ (yᵢ − β₀ − β·xᵢ)² + λ‖β‖₁` with an unpenalized
//! intercept. [`weighted_lasso_cd`] is the production solver;
//! [`weighted_ols_oracle`] solves the λ = 0 normal equations directly and
//! exists to cross-check it.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error("problem needs at least one sample and one feature")]
    EmptyProblem,
    #[error("design has {found} entries, expected {rows} × {cols}")]
    Shape {
        rows: usize,
        cols: usize,
        found: usize,
    },
    #[error("{what} has length {found}, expected {expected}")]
    Length {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("sample weights must be non-negative")]
    NegativeWeight,
    #[error("all sample weights are zero")]
    ZeroWeights,
    #[error("l1 strength {0} must be non-negative")]
    NegativeL1(f64),
    #[error("oracle requires l1 = 0, got {0}")]
    OracleL1(f64),
    #[error("singular normal equations (pivot {pivot:e} in column {column})")]
    Singular { column: usize, pivot: f64 },
}

/// Row-major design with per-row targets and sample weights.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedProblem {
    design: Vec<f64>,
    n_features: usize,
    targets: Vec<f64>,
    weights: Vec<f64>,
    l1: f64,
}

impl WeightedProblem {
    pub fn new(
        design: Vec<f64>,
        n_features: usize,
        targets: Vec<f64>,
        weights: Vec<f64>,
        l1: f64,
    ) -> Result<Self, SolverError> {
        let rows = targets.len();
        if rows == 0 || n_features == 0 {
            return Err(SolverError::EmptyProblem);
        }
        if design.len() != rows * n_features {
            return Err(SolverError::Shape {
                rows,
                cols: n_features,
                found: design.len(),
            });
        }
        if weights.len() != rows {
            return Err(SolverError::Length {
                what: "sample_weights",
                expected: rows,
                found: weights.len(),
            });
        }
        if design.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("design"));
        }
        if targets.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("targets"));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(SolverError::NonFinite("sample_weights"));
        }
        if weights.iter().any(|&w| w < 0.0) {
            return Err(SolverError::NegativeWeight);
        }
        if !weights.iter().any(|&w| w > 0.0) {
            return Err(SolverError::ZeroWeights);
        }
        if !(l1.is_finite() && l1 >= 0.0) {
            return Err(SolverError::NegativeL1(l1));
        }
        Ok(Self {
            design,
            n_features,
            targets,
            weights,
            l1,
        })
    }

    /// Builds a problem from fixed-width rows.
    pub fn from_rows<const D: usize>(
        rows: &[[f64; D]],
        targets: Vec<f64>,
        weights: Vec<f64>,
        l1: f64,
    ) -> Result<Self, SolverError> {
        let design = rows.iter().flatten().copied().collect();
        Self::new(design, D, targets, weights, l1)
    }

    pub fn n_samples(&self) -> usize {
        self.targets.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn sample_weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.design[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn with_l1(&self, l1: f64) -> Result<Self, SolverError> {
        let mut p = self.clone();
        if !(l1.is_finite() && l1 >= 0.0) {
            return Err(SolverError::NegativeL1(l1));
        }
        p.l1 = l1;
        Ok(p)
    }

    pub fn predict(&self, coefficients: &[f64], intercept: f64) -> Vec<f64> {
        (0..self.n_samples())
            .map(|i| intercept + dot(self.row(i), coefficients))
            .collect()
    }

    /// Weighted squared loss alone.
    pub fn weighted_loss(&self, coefficients: &[f64], intercept: f64) -> f64 {
        self.predict(coefficients, intercept)
            .iter()
            .zip(&self.targets)
            .zip(&self.weights)
            .map(|((g, y), w)| w * (y - g) * (y - g))
            .sum()
    }

    /// Weighted squared loss plus `λ‖β‖₁`.
    pub fn objective(&self, coefficients: &[f64], intercept: f64) -> f64 {
        self.weighted_loss(coefficients, intercept)
            + self.l1 * coefficients.iter().map(|b| b.abs()).sum::<f64>()
    }

    /// Smallest λ at which every coefficient is zero: `2·maxⱼ |Σᵢ wᵢ xᵢⱼ (yᵢ − ȳ_w)|`.
    pub fn lambda_max(&self) -> f64 {
        let wsum: f64 = self.weights.iter().sum();
        let ybar = dot(&self.weights, &self.targets) / wsum;
        (0..self.n_features)
            .map(|j| {
                let c: f64 = (0..self.n_samples())
                    .map(|i| self.weights[i] * self.row(i)[j] * (self.targets[i] - ybar))
                    .sum();
                2.0 * c.abs()
            })
            .fold(0.0, f64::max)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Coordinate sweeps performed (1 for the direct oracle).
    pub iterations: usize,
    pub converged: bool,
    /// Penalized objective at the returned parameters.
    pub objective: f64,
    /// Penalized objective before the first sweep and after each sweep.
    pub history: Vec<f64>,
}

/// `sign(z)·max(|z| − γ, 0)`.
pub fn soft_threshold(z: f64, gamma: f64) -> f64 {
    if z > gamma {
        z - gamma
    } else if z < -gamma {
        z + gamma
    } else {
        0.0
    }
}

/// Cyclic coordinate descent with soft-thresholding.
///
/// Columns are centered by their weighted means internally, which makes the
/// closed-form intercept `ȳ_w` independent of the coefficients; the
/// reported intercept is mapped back to the uncentered design. Each
/// coordinate step is an exact minimization, so the objective is
/// non-increasing sweep to sweep. Converged when no coefficient moves by
/// more than `tol` in a sweep.
pub fn weighted_lasso_cd(p: &WeightedProblem, tol: f64, max_iter: usize) -> LinearFit {
    let n = p.n_samples();
    let d = p.n_features;
    let w = &p.weights;
    let wsum: f64 = w.iter().sum();
    let ybar = dot(w, &p.targets) / wsum;
    let xbar: Vec<f64> = (0..d)
        .map(|j| (0..n).map(|i| w[i] * p.row(i)[j]).sum::<f64>() / wsum)
        .collect();

    // centered design, column-major for the inner loop
    let cols: Vec<Vec<f64>> = (0..d)
        .map(|j| (0..n).map(|i| p.row(i)[j] - xbar[j]).collect())
        .collect();
    let col_norm: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().zip(w).map(|(x, wi)| wi * x * x).sum())
        .collect();

    let mut beta = vec![0.0; d];
    let mut resid: Vec<f64> = p.targets.iter().map(|y| y - ybar).collect();
    let half_l1 = 0.5 * p.l1;
    let intercept_of = |beta: &[f64]| ybar - dot(beta, &xbar);

    let mut history = vec![p.objective(&beta, intercept_of(&beta))];
    let mut converged = false;
    let mut sweeps = 0;
    while sweeps < max_iter {
        sweeps += 1;
        let mut max_change = 0.0f64;
        for j in 0..d {
            if col_norm[j] <= 0.0 {
                continue;
            }
            let col = &cols[j];
            let rho: f64 = (0..n)
                .map(|i| w[i] * col[i] * (resid[i] + col[i] * beta[j]))
                .sum();
            let new = soft_threshold(rho, half_l1) / col_norm[j];
            let delta = new - beta[j];
            if delta != 0.0 {
                for i in 0..n {
                    resid[i] -= delta * col[i];
                }
                beta[j] = new;
            }
            max_change = max_change.max(delta.abs());
        }
        history.push(p.objective(&beta, intercept_of(&beta)));
        if max_change < tol {
            converged = true;
            break;
        }
    }
    let intercept = intercept_of(&beta);
    LinearFit {
        objective: p.objective(&beta, intercept),
        coefficients: beta,
        intercept,
        iterations: sweeps,
        converged,
        history,
    }
}

/// Solves `XᵀWX β = XᵀWy` with an appended all-ones column by Gaussian
/// elimination with partial pivoting.
pub fn weighted_ols_oracle(p: &WeightedProblem) -> Result<LinearFit, SolverError> {
    if p.l1 != 0.0 {
        return Err(SolverError::OracleL1(p.l1));
    }
    let d = p.n_features;
    let m = d + 1;
    // augmented matrix [A | b], m × (m + 1); intercept is the last unknown
    let mut a = vec![vec![0.0; m + 1]; m];
    for i in 0..p.n_samples() {
        let wi = p.weights[i];
        if wi == 0.0 {
            continue;
        }
        let mut row = p.row(i).to_vec();
        row.push(1.0);
        for r in 0..m {
            for c in 0..m {
                a[r][c] += wi * row[r] * row[c];
            }
            a[r][m] += wi * row[r] * p.targets[i];
        }
    }
    for col in 0..m {
        let pivot_row = (col..m)
            .max_by(|&x, &y| a[x][col].abs().partial_cmp(&a[y][col].abs()).unwrap())
            .unwrap();
        let pivot = a[pivot_row][col];
        if pivot.abs() < 1e-12 {
            return Err(SolverError::Singular { column: col, pivot });
        }
        a.swap(col, pivot_row);
        for r in col + 1..m {
            let factor = a[r][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=m {
                    a[r][c] -= factor * a[col][c];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let tail: f64 = (r + 1..m).map(|c| a[r][c] * x[c]).sum();
        x[r] = (a[r][m] - tail) / a[r][r];
    }
    let intercept = x.pop().unwrap();
    let objective = p.objective(&x, intercept);
    Ok(LinearFit {
        coefficients: x,
        intercept,
        iterations: 1,
        converged: true,
        objective,
        history: vec![objective],
    })
}
