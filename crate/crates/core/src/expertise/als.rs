//! Alternating least squares factorization of the sparse expertise matrix.
//!
//! Each sweep solves exact ridge-regularized least squares per member row
//! and then per skill row, so the objective
//! `sum_observed (e - m.s)^2 + lambda(|M|^2 + |S|^2)` never increases.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::optim::cholesky_solve;

/// Confident expertise estimates, keyed by (member row, skill index).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseExpertiseMatrix {
    pub entries: BTreeMap<(usize, usize), f64>,
    pub n_members: usize,
    pub n_skills: usize,
}

impl SparseExpertiseMatrix {
    /// Fraction of cells observed.
    pub fn density(&self) -> f64 {
        let cells = self.n_members * self.n_skills;
        if cells == 0 {
            0.0
        } else {
            self.entries.len() as f64 / cells as f64
        }
    }
}

/// Learned K-dimensional member and skill factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertiseFactors {
    pub member_factors: Vec<Vec<f64>>,
    pub skill_factors: Vec<Vec<f64>>,
    pub k: usize,
    pub lambda: f64,
}

/// Objective trace of a factorization run. `objectives[0]` is the value at
/// initialization; one entry follows per completed sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorizeReport {
    pub objectives: Vec<f64>,
    pub sweeps: usize,
    pub converged: bool,
}

fn objective(e0: &SparseExpertiseMatrix, m: &[Vec<f64>], s: &[Vec<f64>], lambda: f64) -> f64 {
    let mut total = 0.0;
    for (&(i, j), &e) in &e0.entries {
        let pred: f64 = m[i].iter().zip(&s[j]).map(|(a, b)| a * b).sum();
        total += (e - pred) * (e - pred);
    }
    let frob = |rows: &[Vec<f64>]| -> f64 { rows.iter().flatten().map(|x| x * x).sum() };
    total + lambda * (frob(m) + frob(s))
}

/// Solves the ridge least-squares update for every row of one side.
/// `obs[row]` lists (other-side row, observed value).
fn solve_side(
    rows: &mut [Vec<f64>],
    other: &[Vec<f64>],
    obs: &[Vec<(usize, f64)>],
    k: usize,
    lambda: f64,
) -> Result<()> {
    let mut a = vec![0.0; k * k];
    let mut b = vec![0.0; k];
    for (row, cells) in rows.iter_mut().zip(obs) {
        if cells.is_empty() && lambda > 0.0 {
            for x in row.iter_mut() {
                *x = 0.0;
            }
            continue;
        }
        a.iter_mut().for_each(|x| *x = 0.0);
        b.iter_mut().for_each(|x| *x = 0.0);
        for &(j, e) in cells {
            let v = &other[j];
            for p in 0..k {
                b[p] += e * v[p];
                for q in 0..=p {
                    a[p * k + q] += v[p] * v[q];
                }
            }
        }
        for p in 0..k {
            for q in p + 1..k {
                a[p * k + q] = a[q * k + p];
            }
            a[p * k + p] += lambda;
        }
        cholesky_solve(&mut a, &mut b, k)?;
        row.copy_from_slice(&b);
    }
    Ok(())
}

/// Factorizes `e0` into K-dimensional member and skill factors by ALS.
/// Initialization is seeded and deterministic; the sweep loop stops when
/// the relative objective decrease falls below `tol` or after
/// `max_sweeps`.
pub fn factorize(
    e0: &SparseExpertiseMatrix,
    k: usize,
    lambda: f64,
    max_sweeps: usize,
    tol: f64,
    seed: u64,
) -> Result<(ExpertiseFactors, FactorizeReport)> {
    if k == 0 {
        return Err(Error::Input("factorization rank K must be >= 1".into()));
    }
    if !(lambda >= 0.0) {
        return Err(Error::Input("lambda must be >= 0".into()));
    }
    if e0.entries.is_empty() {
        return Err(Error::Input(
            "expertise matrix has no observed entries; build it before factorizing".into(),
        ));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / (k as f64).sqrt();
    let mut member_factors: Vec<Vec<f64>> = (0..e0.n_members)
        .map(|_| (0..k).map(|_| scale * rng.gen::<f64>()).collect())
        .collect();
    let mut skill_factors: Vec<Vec<f64>> = (0..e0.n_skills)
        .map(|_| (0..k).map(|_| scale * rng.gen::<f64>()).collect())
        .collect();

    let mut member_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); e0.n_members];
    let mut skill_obs: Vec<Vec<(usize, f64)>> = vec![Vec::new(); e0.n_skills];
    for (&(i, j), &e) in &e0.entries {
        member_obs[i].push((j, e));
        skill_obs[j].push((i, e));
    }

    let mut objectives = vec![objective(e0, &member_factors, &skill_factors, lambda)];
    let mut converged = false;
    let mut sweeps = 0;
    for _ in 0..max_sweeps {
        solve_side(&mut member_factors, &skill_factors, &member_obs, k, lambda)?;
        solve_side(&mut skill_factors, &member_factors, &skill_obs, k, lambda)?;
        sweeps += 1;
        let prev = *objectives.last().unwrap();
        let cur = objective(e0, &member_factors, &skill_factors, lambda);
        objectives.push(cur);
        if prev <= f64::EPSILON || (prev - cur) / prev < tol {
            converged = true;
            break;
        }
    }

    Ok((
        ExpertiseFactors {
            member_factors,
            skill_factors,
            k,
            lambda,
        },
        FactorizeReport {
            objectives,
            sweeps,
            converged,
        },
    ))
}
