use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::SparseGenerator;
use crate::error::{Error, Result};
use crate::rng::{hash4, unit_open};

/// Largest dimension handled with dense factorizations.
pub const DENSE_LIMIT: usize = 2048;
/// Largest dimension for which the singular-value uniqueness check runs.
pub const SVD_LIMIT: usize = 1024;

const GS_TOLERANCE: f64 = 1e-14;
const GS_MAX_SWEEPS: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    pub probabilities: Vec<f64>,
    /// Second-smallest singular value of the generator, when computed.
    pub second_singular_value: Option<f64>,
    /// Max-norm of `μ G`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInfo {
    pub gap: f64,
}

impl SpectralInfo {
    /// Operator-norm bound of the walker perturbation, `2|ε|`.
    pub fn perturbation_bound(&self, epsilon: f64) -> f64 {
        2.0 * epsilon.abs()
    }

    /// `2|ε| / gap`, the geometric ratio of the series bound.
    pub fn ratio(&self, epsilon: f64) -> f64 {
        self.perturbation_bound(epsilon) / self.gap
    }
}

/// Unique invariant law of an irreducible generator.
pub fn stationary_distribution(g: &SparseGenerator) -> Result<ExactDistribution> {
    if !g.is_irreducible() {
        return Err(Error::ModelConstruction("generator is reducible".into()));
    }
    let n = g.dim();
    let (mut p, sv) = if n <= DENSE_LIMIT {
        dense_stationary(g)?
    } else {
        (gauss_seidel_stationary(g)?, None)
    };
    if let Some(s) = sv {
        if s <= 1e-10 {
            return Err(Error::ModelConstruction(format!(
                "second-smallest singular value {s:e}: invariant law not unique"
            )));
        }
    }
    if p.iter().any(|&v| v < -1e-12) {
        return Err(Error::Numerical("negative stationary weight".into()));
    }
    p.iter_mut().for_each(|v| *v = v.max(0.0));
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= z);
    let residual = g.apply_left(&p).iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(ExactDistribution {
        probabilities: p,
        second_singular_value: sv,
        residual,
    })
}

fn dense_stationary(g: &SparseGenerator) -> Result<(Vec<f64>, Option<f64>)> {
    let n = g.dim();
    let dense = g.to_dense();
    let mut a = dense.transpose();
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    let x = a
        .lu()
        .solve(&b)
        .ok_or_else(|| Error::ModelConstruction("singular stationary system".into()))?;
    let sv = if n <= SVD_LIMIT {
        let mut s: Vec<f64> = dense.singular_values().iter().copied().collect();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(s[1])
    } else {
        None
    };
    Ok((x.iter().copied().collect(), sv))
}

fn gauss_seidel_stationary(g: &SparseGenerator) -> Result<Vec<f64>> {
    let n = g.dim();
    // incoming rates per state
    let mut incoming: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (j, r) in g.row(i) {
            incoming[j].push((i, r));
        }
    }
    let mut p = vec![1.0 / n as f64; n];
    for _ in 0..GS_MAX_SWEEPS {
        for j in 0..n {
            let inflow: f64 = incoming[j].iter().map(|&(i, r)| p[i] * r).sum();
            p[j] = inflow / -g.diag()[j];
        }
        let z: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= z);
        let res = g.apply_left(&p).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if res < GS_TOLERANCE {
            return Ok(p);
        }
    }
    Err(Error::Numerical("Gauss-Seidel did not converge".into()))
}

/// Spectral gap of a reversible generator, computed on the symmetrized
/// matrix `ν^{1/2} G ν^{-1/2}`.
pub fn spectral_gap(g: &SparseGenerator) -> Result<SpectralInfo> {
    let nu = stationary_distribution(g)?.probabilities;
    let scale = g.diag().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let defect = g.detailed_balance_defect(&nu);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(Error::Numerical(format!(
            "generator is not reversible (detailed-balance defect {defect:e})"
        )));
    }
    let sq: Vec<f64> = nu.iter().map(|v| v.sqrt()).collect();
    let gap = if g.dim() <= DENSE_LIMIT {
        dense_gap(g, &sq)
    } else {
        lanczos_gap(g, &sq)?
    };
    if !(gap > 0.0) {
        return Err(Error::Numerical(format!("non-positive gap {gap:e}")));
    }
    Ok(SpectralInfo { gap })
}

fn dense_gap(g: &SparseGenerator, sq: &[f64]) -> f64 {
    let n = g.dim();
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        s[(i, i)] = -g.diag()[i];
        for (j, r) in g.row(i) {
            s[(i, j)] -= sq[i] * r / sq[j];
        }
    }
    let sym = (&s + s.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev[1]
}

/// Smallest eigenvalue of `-S` on the complement of the null vector, by
/// Lanczos with full reorthogonalization.
fn lanczos_gap(g: &SparseGenerator, sq: &[f64]) -> Result<f64> {
    let n = g.dim();
    let op = |v: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                -g.diag()[i] * v[i] - g.row(i).map(|(j, r)| sq[i] * r / sq[j] * v[j]).sum::<f64>()
            })
            .collect()
    };
    let project = |v: &mut Vec<f64>| {
        let c: f64 = v.iter().zip(sq).map(|(a, b)| a * b).sum();
        v.iter_mut().zip(sq).for_each(|(a, b)| *a -= c * b);
    };
    let normalize = |v: &mut Vec<f64>| -> f64 {
        let nrm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= nrm);
        nrm
    };
    let mut q: Vec<f64> = (0..n).map(|i| unit_open(hash4(1, 2, i as u64, 3)) - 0.5).collect();
    project(&mut q);
    normalize(&mut q);
    let max_iter = n.min(800);
    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut last = f64::INFINITY;
    for k in 0..max_iter {
        let mut w = op(&basis[k]);
        let a: f64 = w.iter().zip(&basis[k]).map(|(x, y)| x * y).sum();
        alpha.push(a);
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = w.iter().zip(b).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            project(&mut w);
        }
        let bnext = normalize(&mut w);
        if (k + 1) % 10 == 0 || bnext < 1e-12 || k + 1 == max_iter {
            let m = alpha.len();
            let mut t = DMatrix::zeros(m, m);
            for i in 0..m {
                t[(i, i)] = alpha[i];
                if i + 1 < m {
                    t[(i, i + 1)] = beta[i];
                    t[(i + 1, i)] = beta[i];
                }
            }
            let low = SymmetricEigen::new(t)
                .eigenvalues
                .iter()
                .copied()
                .fold(f64::INFINITY, f64::min);
            if (low - last).abs() < 1e-13 * low.abs().max(1e-3) || bnext < 1e-12 {
                return Ok(low);
            }
            last = low;
        }
        beta.push(bnext);
        basis.push(w);
    }
    if last.is_finite() {
        Ok(last)
    } else {
        Err(Error::Numerical("Lanczos did not converge".into()))
    }
}
