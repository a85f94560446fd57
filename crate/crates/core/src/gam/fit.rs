//! Penalized least squares with grouped k-fold selection of the smoothing
//! parameters.
//!
//! Each term's basis columns are centered over the training rows and its last
//! column is dropped. Because the coefficients of a B-spline basis that sum to
//! a constant shift the function by that constant, this removes exactly the
//! intercept direction while leaving the difference penalty unchanged. The
//! objective is `RSS / n + sum_i lambda_i * |D2 c_i|^2`, so duplicating every
//! row leaves the fit unchanged.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::basis::CubicBasis;
use super::model::{GamModel, SmoothTerm, TrainingMeta};
use super::{FeatureRow, FEATURES};
use crate::error::{Error, Result};
use crate::parallel::{map_indexed, Execution};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GamOptions {
    /// Interior knots per term, placed at feature quantiles.
    pub knots: usize,
    /// Candidate smoothing parameters, searched independently per term.
    pub lambda_grid: Vec<f64>,
    pub cv_folds: usize,
    pub seed: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for GamOptions {
    fn default() -> Self {
        GamOptions {
            knots: 10,
            lambda_grid: vec![1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3],
            cv_folds: 5,
            seed: DEFAULT_SEED,
            execution: Execution::default(),
        }
    }
}

impl GamOptions {
    /// Basis functions across all four terms before knot deduplication.
    pub fn nominal_basis_size(&self) -> usize {
        FEATURES.len() * (self.knots + 4)
    }

    pub fn min_rows(&self) -> usize {
        10 * self.nominal_basis_size()
    }
}

struct TermDesign {
    breakpoints: Vec<f64>,
    min: f64,
    max: f64,
    /// `None` for a feature that is constant over the training rows.
    basis: Option<CubicBasis>,
    means: Vec<f64>,
    offset: usize,
}

impl TermDesign {
    fn columns(&self) -> usize {
        self.basis.as_ref().map_or(0, |b| b.size() - 1)
    }
}

struct Design {
    x: DMatrix<f64>,
    y: DVector<f64>,
    terms: Vec<TermDesign>,
    penalties: Vec<DMatrix<f64>>,
}

/// Sufficient statistics of a row subset.
#[derive(Clone)]
struct Moments {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    count: usize,
}

impl Moments {
    fn of(x: &DMatrix<f64>, y: &DVector<f64>) -> Self {
        Moments { gram: x.tr_mul(x), xty: x.tr_mul(y), yty: y.dot(y), count: y.len() }
    }

    fn minus(&self, other: &Moments) -> Moments {
        Moments {
            gram: &self.gram - &other.gram,
            xty: &self.xty - &other.xty,
            yty: self.yty - other.yty,
            count: self.count - other.count,
        }
    }
}

fn quantile_breakpoints(values: &[f64], interior: usize) -> (f64, f64, Vec<f64>) {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let (min, max) = (sorted[0], sorted[n - 1]);
    let mut breakpoints = vec![min];
    for i in 1..=interior {
        // inverse empirical CDF at i / (interior + 1); non-decreasing in i
        let rank = (i * n).div_ceil(interior + 1);
        let q = sorted[rank.max(1) - 1];
        if q > breakpoints[breakpoints.len() - 1] && q < max {
            breakpoints.push(q);
        }
    }
    breakpoints.push(max);
    (min, max, breakpoints)
}

fn second_difference_penalty(size: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(size.saturating_sub(2), size);
    for r in 0..size.saturating_sub(2) {
        d[(r, r)] = 1.0;
        d[(r, r + 1)] = -2.0;
        d[(r, r + 2)] = 1.0;
    }
    let full = d.tr_mul(&d);
    full.view((0, 0), (size - 1, size - 1)).into_owned()
}

fn check_rows(rows: &[FeatureRow], options: &GamOptions) -> Result<()> {
    if options.knots == 0 {
        return Err(Error::InvalidArgument("knots per term must be positive".into()));
    }
    if options.lambda_grid.is_empty() || options.lambda_grid.iter().any(|l| !l.is_finite() || *l <= 0.0) {
        return Err(Error::InvalidArgument("lambda grid must be non-empty and positive".into()));
    }
    let required = options.min_rows();
    if rows.len() < required {
        return Err(Error::TooFewRows { rows: rows.len(), required });
    }
    for (i, row) in rows.iter().enumerate() {
        let target = row
            .target_percentile
            .ok_or_else(|| Error::InvalidArgument(format!("row {i} has no target")))?;
        if row.features().iter().chain([&target]).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("row {i} has a non-finite value")));
        }
    }
    Ok(())
}

fn design(rows: &[FeatureRow], options: &GamOptions) -> Result<Design> {
    let n = rows.len();
    let mut terms = Vec::with_capacity(FEATURES.len());
    let mut offset = 1;
    for f in 0..FEATURES.len() {
        let values: Vec<f64> = rows.iter().map(|r| r.features()[f]).collect();
        let (min, max, breakpoints) = quantile_breakpoints(&values, options.knots);
        let term = if min == max {
            log::warn!("feature {} is constant over the training rows; its term is zero", FEATURES[f]);
            TermDesign { breakpoints: vec![min - 0.5, min + 0.5], min, max, basis: None, means: Vec::new(), offset }
        } else {
            let basis = CubicBasis::new(&breakpoints)?;
            let mut means = vec![0.0; basis.size()];
            for &x in &values {
                let (first, local) = basis.eval_local(x);
                for (r, v) in local.iter().enumerate() {
                    means[first + r] += v;
                }
            }
            means.iter_mut().for_each(|m| *m /= n as f64);
            TermDesign { breakpoints, min, max, basis: Some(basis), means, offset }
        };
        offset += term.columns();
        terms.push(term);
    }

    let mut x = DMatrix::zeros(n, offset);
    for (i, row) in rows.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (term, value) in terms.iter().zip(row.features()) {
            let Some(basis) = &term.basis else { continue };
            let full = basis.eval(value);
            for j in 0..basis.size() - 1 {
                x[(i, term.offset + j)] = full[j] - term.means[j];
            }
        }
    }
    let y = DVector::from_iterator(n, rows.iter().map(|r| r.target_percentile.expect("checked")));
    let penalties = terms
        .iter()
        .map(|t| t.basis.as_ref().map_or_else(|| DMatrix::zeros(0, 0), |b| second_difference_penalty(b.size())))
        .collect();
    Ok(Design { x, y, terms, penalties })
}

fn solve(m: &Moments, design: &Design, lambdas: &[f64]) -> Result<DVector<f64>> {
    let scale = 1.0 / m.count as f64;
    let mut lhs = &m.gram * scale;
    for ((term, penalty), &lambda) in design.terms.iter().zip(&design.penalties).zip(lambdas) {
        let k = term.columns();
        if k == 0 {
            continue;
        }
        let mut block = lhs.view_mut((term.offset, term.offset), (k, k));
        block += penalty * lambda;
    }
    let rhs = &m.xty * scale;
    let chol = lhs.cholesky().ok_or(Error::RankDeficient)?;
    Ok(chol.solve(&rhs))
}

/// Squared error of `beta` on the rows summarized by `m`.
fn sse(m: &Moments, beta: &DVector<f64>) -> f64 {
    let quad = beta.dot(&(&m.gram * beta));
    (m.yty - 2.0 * beta.dot(&m.xty) + quad).max(0.0)
}

fn folds(rows: &[FeatureRow], options: &GamOptions) -> (usize, Vec<Vec<usize>>) {
    let mut groups: Vec<usize> = rows.iter().map(|r| r.group).collect::<BTreeSet<_>>().into_iter().collect();
    let n_groups = groups.len();
    let k = options.cv_folds.min(n_groups);
    if k < 2 {
        return (n_groups, Vec::new());
    }
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(options.seed));
    let fold_of: std::collections::HashMap<usize, usize> =
        groups.iter().enumerate().map(|(pos, &g)| (g, pos % k)).collect();
    let mut out = vec![Vec::new(); k];
    for (i, row) in rows.iter().enumerate() {
        out[fold_of[&row.group]].push(i);
    }
    (n_groups, out)
}

fn assemble(design: &Design, beta: &DVector<f64>, lambdas: &[f64], meta: TrainingMeta) -> Result<GamModel> {
    let mut terms = Vec::with_capacity(FEATURES.len());
    for ((term, name), &lambda) in design.terms.iter().zip(FEATURES).zip(lambdas) {
        let coefficients = match &term.basis {
            None => vec![0.0; term.breakpoints.len() + 2],
            Some(basis) => {
                let mut c: Vec<f64> = beta.rows(term.offset, term.columns()).iter().copied().collect();
                c.push(0.0);
                let shift: f64 = c.iter().zip(&term.means).map(|(c, m)| c * m).sum();
                debug_assert_eq!(c.len(), basis.size());
                c.into_iter().map(|c| c - shift).collect()
            }
        };
        terms.push(SmoothTerm::new(
            name.to_string(),
            term.breakpoints.clone(),
            coefficients,
            lambda,
            term.min,
            term.max,
        )?);
    }
    GamModel::new(beta[0], terms, meta)
}

/// Fits with fixed per-term smoothing parameters; no cross-validation.
pub fn fit_gam_with_lambdas(rows: &[FeatureRow], options: &GamOptions, lambdas: [f64; 4]) -> Result<GamModel> {
    let grid_check = GamOptions { lambda_grid: lambdas.to_vec(), ..options.clone() };
    check_rows(rows, &grid_check)?;
    let design = design(rows, options)?;
    let all = Moments::of(&design.x, &design.y);
    let beta = solve(&all, &design, &lambdas)?;
    let (groups, _) = folds(rows, options);
    let meta = TrainingMeta {
        rows: rows.len(),
        groups,
        folds: 0,
        seed: options.seed,
        lambda_grid: lambdas.to_vec(),
        cv_mse: None,
    };
    assemble(&design, &beta, &lambdas, meta)
}

/// Fits the model, choosing each term's smoothing parameter from the grid by
/// minimizing cross-validated mean squared error over all grid combinations.
/// Folds are formed from whole row groups (prompts), shuffled by `seed`.
pub fn fit_gam(rows: &[FeatureRow], options: &GamOptions) -> Result<GamModel> {
    check_rows(rows, options)?;
    let design = design(rows, options)?;
    let all = Moments::of(&design.x, &design.y);
    let (groups, fold_rows) = folds(rows, options);

    let active: Vec<usize> = (0..FEATURES.len()).filter(|&t| design.terms[t].columns() > 0).collect();
    let grid = &options.lambda_grid;
    let combos = grid.len().pow(active.len() as u32);
    let lambdas_of = |mut c: usize| {
        let mut lambdas = [0.0; 4];
        for &t in active.iter().rev() {
            lambdas[t] = grid[c % grid.len()];
            c /= grid.len();
        }
        lambdas
    };

    let (chosen, cv_mse) = if fold_rows.is_empty() {
        if combos > 1 {
            return Err(Error::InvalidArgument(format!(
                "cross-validation needs at least two row groups and two folds, have {groups} groups"
            )));
        }
        (lambdas_of(0), None)
    } else {
        let splits: Vec<(Moments, Moments)> = fold_rows
            .iter()
            .map(|idx| {
                let held = Moments::of(&design.x.select_rows(idx), &design.y.select_rows(idx));
                (all.minus(&held), held)
            })
            .collect();
        let scores = map_indexed(combos, options.execution, |c| {
            let lambdas = lambdas_of(c);
            let mut total = 0.0;
            for (train, held) in &splits {
                let beta = solve(train, &design, &lambdas)?;
                total += sse(held, &beta);
            }
            Ok(total / rows.len() as f64)
        });
        let mut best: Option<(usize, f64)> = None;
        for (c, score) in scores.into_iter().enumerate() {
            let score = score?;
            if best.map_or(true, |(_, s)| score < s) {
                best = Some((c, score));
            }
        }
        let (c, score) = best.expect("at least one combination");
        (lambdas_of(c), Some(score))
    };

    let beta = solve(&all, &design, &chosen)?;
    let meta = TrainingMeta {
        rows: rows.len(),
        groups,
        folds: fold_rows.len(),
        seed: options.seed,
        lambda_grid: grid.clone(),
        cv_mse,
    };
    assemble(&design, &beta, &chosen, meta)
}
