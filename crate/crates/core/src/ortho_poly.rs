//! Discrete orthogonal polynomials on a sample grid and the least-squares
//! projection they induce.
//!
//! The basis is generated by the three-term (Stieltjes) recurrence
//!
//! ```text
//! p_{-1} = 0,  p_0 = 1
//! p_{j+1}[n] = (t_n - a_j) p_j[n] - b_j p_{j-1}[n]
//! a_j = Σ t_n p_j[n]² / q_j,   b_j = q_j / q_{j-1},   q_j = Σ p_j[n]²
//! ```
//!
//! Rows are kept unnormalized; their squared norms form the diagonal of
//! `Q = PᵀP`, so the projection is `H = P Q⁻¹ Pᵀ` with entries
//! `ξ_nm = Σ_j p_j[n] p_j[m] / q_j`.

use std::ops::RangeInclusive;
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sequence::Sequence;

/// Squared norms at or below this are treated as a collapsed recurrence.
pub const NORM_FLOOR: f64 = 1e-300;

/// Tolerance on the symmetry of a covariance matrix handed to
/// [`error_covariance`].
pub const COVARIANCE_SYMMETRY_TOL: f64 = 1e-9;

/// Sample abscissas `t_0 < t_1 < … < t_{N-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleGrid {
    points: Vec<f64>,
    spacing: Option<f64>,
}

impl SampleGrid {
    /// Uniform grid `t_n = n·dt`.
    pub fn uniform(n: usize, dt: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {n}")));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidGrid(format!("spacing must be positive, got {dt}")));
        }
        let points = (0..n).map(|i| i as f64 * dt).collect();
        Ok(SampleGrid {
            points,
            spacing: Some(dt),
        })
    }

    /// Arbitrary strictly increasing abscissas.
    pub fn from_points(points: Vec<f64>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidGrid("non-finite abscissa".into()));
        }
        if let Some(w) = points.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid(format!(
                "abscissas not strictly increasing at index {}",
                w + 1
            )));
        }
        Ok(SampleGrid {
            points,
            spacing: None,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Spacing `T` when the grid was built as `t_n = n·T`.
    pub fn spacing(&self) -> Option<f64> {
        self.spacing
    }
}

/// The table `p_j[t_n]` for `j < J` together with the norms `q_j` and the
/// recurrence coefficients that produced it.
#[derive(Debug, Clone)]
pub struct PolynomialBasis {
    grid: SampleGrid,
    rows: Vec<Vec<f64>>,
    norms: Vec<f64>,
    alpha: Vec<f64>,
    beta: Vec<f64>,
}

impl PolynomialBasis {
    pub fn grid(&self) -> &SampleGrid {
        &self.grid
    }

    /// Number of polynomials `J`.
    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    /// Values of `p_j` on the grid.
    pub fn row(&self, j: usize) -> &[f64] {
        &self.rows[j]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// `q_j = Σ_n p_j[n]²`, the diagonal of `Q`.
    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    /// Recurrence centres `a_j`, one per row.
    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// Recurrence ratios `b_j = q_j / q_{j-1}` with `b_0 = 0`.
    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    /// Least-squares coefficients `c_j = Σ_m p_j[m] x[m] / q_j`.
    pub fn coefficients(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_len(x.len())?;
        Ok(self
            .rows
            .iter()
            .zip(&self.norms)
            .map(|(p, q)| dot(p, x) / q)
            .collect())
    }

    /// Evaluate `Σ_j c_j p_j[n]` on the grid.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<Vec<f64>> {
        if coeffs.len() != self.order() {
            return Err(Error::Dimension {
                expected: self.order(),
                got: coeffs.len(),
            });
        }
        let mut y = vec![0.0; self.len()];
        for (p, c) in self.rows.iter().zip(coeffs) {
            for (yn, pn) in y.iter_mut().zip(p) {
                *yn += c * pn;
            }
        }
        Ok(y)
    }

    /// Restrict to the first `order` rows. The recurrence is nested, so the
    /// result is identical to building with that order directly.
    pub fn truncated(&self, order: usize) -> Result<PolynomialBasis> {
        if order < 1 || order > self.order() {
            return Err(Error::OrderOutOfRange {
                order,
                max: self.order(),
            });
        }
        Ok(PolynomialBasis {
            grid: self.grid.clone(),
            rows: self.rows[..order].to_vec(),
            norms: self.norms[..order].to_vec(),
            alpha: self.alpha[..order].to_vec(),
            beta: self.beta[..order].to_vec(),
        })
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got,
            });
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Build `J` discrete orthogonal polynomials on `grid`.
///
/// Each new row from the recurrence is passed twice through a classical
/// Gram-Schmidt correction against the earlier rows. In exact arithmetic the
/// correction is zero; in floating point it keeps the rows orthogonal to
/// working precision all the way up to `J = N`, where the bare recurrence
/// loses orthogonality completely.
pub fn build_basis(grid: &SampleGrid, order: usize) -> Result<PolynomialBasis> {
    let n = grid.len();
    if order < 1 || order > n {
        return Err(Error::OrderOutOfRange { order, max: n });
    }
    let t = grid.points();

    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(order);
    let mut norms = Vec::with_capacity(order);
    let mut alpha = Vec::with_capacity(order);
    let mut beta = Vec::with_capacity(order);

    rows.push(vec![1.0; n]);
    norms.push(n as f64);

    for j in 0..order {
        let p = &rows[j];
        let q = norms[j];
        let a = t.iter().zip(p).map(|(tn, pn)| tn * pn * pn).sum::<f64>() / q;
        let b = if j == 0 { 0.0 } else { q / norms[j - 1] };
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::DegenerateGrid(format!(
                "non-finite recurrence coefficient at degree {j}"
            )));
        }
        alpha.push(a);
        beta.push(b);
        if j + 1 == order {
            break;
        }

        let mut next: Vec<f64> = if j == 0 {
            t.iter().map(|tn| tn - a).collect()
        } else {
            let prev = &rows[j - 1];
            t.iter()
                .zip(p)
                .zip(prev)
                .map(|((tn, pn), pp)| (tn - a) * pn - b * pp)
                .collect()
        };
        for _ in 0..2 {
            for (row, qk) in rows.iter().zip(&norms) {
                let c = dot(&next, row) / qk;
                for (v, r) in next.iter_mut().zip(row) {
                    *v -= c * r;
                }
            }
        }
        let q_next = next.iter().map(|v| v * v).sum::<f64>();
        if !q_next.is_finite() || q_next <= NORM_FLOOR {
            return Err(Error::DegenerateGrid(format!(
                "squared norm of degree {} collapsed to {q_next:e}",
                j + 1
            )));
        }
        rows.push(next);
        norms.push(q_next);
    }

    Ok(PolynomialBasis {
        grid: grid.clone(),
        rows,
        norms,
        alpha,
        beta,
    })
}

/// The projection `H = P Q⁻¹ Pᵀ` onto polynomials of degree `< J`.
///
/// Applying it goes through the basis coefficients (`O(NJ)`); the dense
/// `N×N` matrix of `ξ_nm` is only formed when [`ProjectionOperator::xi`] is
/// called.
#[derive(Debug)]
pub struct ProjectionOperator {
    basis: PolynomialBasis,
    dense: OnceLock<DMatrix<f64>>,
}

impl Clone for ProjectionOperator {
    fn clone(&self) -> Self {
        ProjectionOperator {
            basis: self.basis.clone(),
            dense: self.dense.clone(),
        }
    }
}

impl ProjectionOperator {
    pub fn basis(&self) -> &PolynomialBasis {
        &self.basis
    }

    pub fn order(&self) -> usize {
        self.basis.order()
    }

    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    pub fn grid(&self) -> &SampleGrid {
        self.basis.grid()
    }

    /// Single coefficient `ξ_nm`, evaluated from the basis.
    pub fn entry(&self, n: usize, m: usize) -> f64 {
        self.basis
            .rows
            .iter()
            .zip(&self.basis.norms)
            .map(|(p, q)| p[n] * p[m] / q)
            .sum()
    }

    /// Dense `ξ` matrix. Only the upper triangle is computed; the lower one
    /// is mirrored so the result is exactly symmetric.
    pub fn xi(&self) -> &DMatrix<f64> {
        self.dense.get_or_init(|| {
            let n = self.len();
            let mut h = DMatrix::zeros(n, n);
            for r in 0..n {
                for c in r..n {
                    let v = self.entry(r, c);
                    h[(r, c)] = v;
                    h[(c, r)] = v;
                }
            }
            h
        })
    }

    /// `H·x` by dense matrix-vector product. Reference route for checking
    /// [`transform`].
    pub fn apply_dense(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.basis.check_len(x.len())?;
        let h = self.xi();
        Ok((0..self.len())
            .map(|r| h.row(r).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `H·x` through the coefficient route.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.basis.coefficients(x)?;
        self.basis.synthesize(&c)
    }

    pub fn trace(&self) -> f64 {
        (0..self.len()).map(|n| self.entry(n, n)).sum()
    }
}

pub fn projection_operator(basis: &PolynomialBasis) -> ProjectionOperator {
    ProjectionOperator {
        basis: basis.clone(),
        dense: OnceLock::new(),
    }
}

/// `y = H·x`: the least-squares polynomial fit of `x` evaluated on the grid.
pub fn transform(op: &ProjectionOperator, x: &Sequence) -> Result<Sequence> {
    op.apply(x.values()).map(Sequence::from_vec_unchecked)
}

/// Covariance of `e = H·w` given the covariance of `w`: `H Σ_w Hᵀ`.
pub fn error_covariance(op: &ProjectionOperator, noise_cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = op.len();
    if noise_cov.nrows() != n || noise_cov.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if noise_cov.nrows() != n {
                noise_cov.nrows()
            } else {
                noise_cov.ncols()
            },
        });
    }
    let mut asym = 0.0f64;
    for r in 0..n {
        for c in (r + 1)..n {
            asym = asym.max((noise_cov[(r, c)] - noise_cov[(c, r)]).abs());
        }
    }
    if asym > COVARIANCE_SYMMETRY_TOL || noise_cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidCovariance(format!(
            "asymmetry {asym:e} exceeds {COVARIANCE_SYMMETRY_TOL:e}"
        )));
    }
    let h = op.xi();
    let mut out = h * noise_cov * h.transpose();
    // H Σ Hᵀ is symmetric in exact arithmetic.
    for r in 0..n {
        for c in (r + 1)..n {
            let v = 0.5 * (out[(r, c)] + out[(c, r)]);
            out[(r, c)] = v;
            out[(c, r)] = v;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    Oracle,
    Penalized,
    Fixed,
}

/// Inputs for [`select_order`].
#[derive(Debug, Clone, Copy)]
pub enum OrderCriterion<'a> {
    /// Known clean signal and noise variance:
    /// `risk(J) = ‖(I−H_J)g‖²/N + σ²J/N`.
    Oracle { signal: &'a [f64], noise_var: f64 },
    /// Observed data and noise variance:
    /// `risk(J) = ‖(I−H_J)x‖²/N + 2σ²J/N`.
    Penalized { observed: &'a [f64], noise_var: f64 },
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderSelection {
    pub order: usize,
    pub mode: SelectionMode,
    /// `(J, risk)` for every candidate order, ascending in `J`.
    pub risk_curve: Vec<(usize, f64)>,
}

/// Choose the approximation order that minimizes the error variance.
/// Ties go to the smaller order.
pub fn select_order(
    grid: &SampleGrid,
    criterion: OrderCriterion<'_>,
    range: RangeInclusive<usize>,
) -> Result<OrderSelection> {
    let n = grid.len();
    let (data, noise_var, penalty, mode) = match criterion {
        OrderCriterion::Fixed(order) => {
            if order < 1 || order > n {
                return Err(Error::OrderOutOfRange { order, max: n });
            }
            return Ok(OrderSelection {
                order,
                mode: SelectionMode::Fixed,
                risk_curve: vec![(order, f64::NAN)],
            });
        }
        OrderCriterion::Oracle { signal, noise_var } => (signal, noise_var, 1.0, SelectionMode::Oracle),
        OrderCriterion::Penalized {
            observed,
            noise_var,
        } => (observed, noise_var, 2.0, SelectionMode::Penalized),
    };

    if range.is_empty() {
        return Err(Error::Config("empty order range".into()));
    }
    let (lo, hi) = (*range.start(), *range.end());
    if lo < 1 || hi > n {
        return Err(Error::OrderOutOfRange {
            order: if lo < 1 { lo } else { hi },
            max: n,
        });
    }
    if !(noise_var >= 0.0) || !noise_var.is_finite() {
        return Err(Error::Config(format!("noise variance must be >= 0, got {noise_var}")));
    }
    if data.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: data.len(),
        });
    }

    let basis = build_basis(grid, hi)?;
    let nf = n as f64;
    let mut residual = data.to_vec();
    let mut curve = Vec::with_capacity(hi - lo + 1);
    for (j, (p, q)) in basis.rows().iter().zip(basis.norms()).enumerate() {
        let c = dot(p, &residual) / q;
        for (r, pn) in residual.iter_mut().zip(p) {
            *r -= c * pn;
        }
        let order = j + 1;
        if order >= lo {
            let bias = residual.iter().map(|r| r * r).sum::<f64>() / nf;
            curve.push((order, bias + penalty * noise_var * order as f64 / nf));
        }
    }

    let mut best = curve[0];
    for &(order, risk) in &curve[1..] {
        if risk < best.1 {
            best = (order, risk);
        }
    }
    Ok(OrderSelection {
        order: best.0,
        mode,
        risk_curve: curve,
    })
}
