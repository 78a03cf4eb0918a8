//! Exact finite-state computations on small rings.
//!
//! Configurations of `Ring(L)` are encoded as `L`-bit integers, bit `x`
//! holding `η(x)`; shifts are bit rotations. Generators are stored sparse
//! and densified only for the linear algebra.

mod expm;
mod series;
mod solve;

pub use expm::expm;
pub use series::{
    check_even_terms, resolvent_kappa, resolvent_series_terms, series_term, series_terms,
    truncated_kappa, KappaSolve, SeriesOptions, SeriesTerms, MAX_SERIES_ORDER,
};
pub use solve::{spectral_gap, stationary_distribution, ExactDistribution, SpectralInfo};

use crate::env::{flip_rate, EnvKind, SpinConfiguration, Topology};
use crate::error::{invalid, Result};
use crate::walkers::validate_epsilon;

pub const MIN_SITES: usize = 3;
pub const MAX_SITES: usize = 14;

/// Enumeration of the configurations of a ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    len: usize,
    excludes_full: bool,
    codes: Vec<u32>,
    index: Vec<u32>,
}

impl StateSpace {
    pub fn new(len: usize, excludes_full: bool) -> Result<Self> {
        if !(MIN_SITES..=MAX_SITES).contains(&len) {
            return Err(invalid(
                "L",
                format!("exact computations need {MIN_SITES} <= L <= {MAX_SITES}, got {len}"),
            ));
        }
        let n = 1u32 << len;
        let full = n - 1;
        let mut codes = Vec::with_capacity(n as usize);
        let mut index = vec![u32::MAX; n as usize];
        for code in 0..n {
            if excludes_full && code == full {
                continue;
            }
            index[code as usize] = codes.len() as u32;
            codes.push(code);
        }
        Ok(StateSpace {
            len,
            excludes_full,
            codes,
            index,
        })
    }

    pub fn for_kind(kind: EnvKind, len: usize) -> Result<Self> {
        Self::new(len, kind.is_constrained())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.codes.len()
    }

    pub fn excludes_full(&self) -> bool {
        self.excludes_full
    }

    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn index_of(&self, code: u32) -> Option<usize> {
        match self.index.get(code as usize) {
            Some(&i) if i != u32::MAX => Some(i as usize),
            _ => None,
        }
    }

    /// `η(x)` for a site index taken modulo `L`.
    #[inline]
    pub fn occ(&self, code: u32, x: i64) -> u8 {
        ((code >> x.rem_euclid(self.len as i64)) & 1) as u8
    }

    /// Code of `τ_k η`, where `τ_k η(y) = η(y + k)`.
    #[inline]
    pub fn shift(&self, code: u32, k: i64) -> u32 {
        let l = self.len as u32;
        let k = k.rem_euclid(self.len as i64) as u32;
        if k == 0 {
            return code;
        }
        let mask = (1u32 << l) - 1;
        ((code >> k) | (code << (l - k))) & mask
    }

    pub fn configuration(&self, code: u32) -> SpinConfiguration {
        let bits = (0..self.len).map(|x| ((code >> x) & 1) as u8).collect();
        SpinConfiguration::new(bits, Topology::Ring(self.len)).expect("valid ring size")
    }

    /// Evaluates `f` on every state.
    pub fn observable(&self, f: impl Fn(u32) -> f64) -> Vec<f64> {
        self.codes.iter().map(|&c| f(c)).collect()
    }

    /// Occupation of site `x` as a vector.
    pub fn occupation(&self, x: i64) -> Vec<f64> {
        self.observable(|c| f64::from(self.occ(c, x)))
    }

    /// Bernoulli(rho) product weights, conditioned on the state space.
    pub fn product_measure(&self, rho: f64) -> Vec<f64> {
        let mut w = self.observable(|c| {
            let k = c.count_ones() as i32;
            rho.powi(k) * (1.0 - rho).powi(self.len as i32 - k)
        });
        let z: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= z);
        w
    }
}

/// Sparse generator: off-diagonal rates in CSR form plus the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGenerator {
    space: StateSpace,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseGenerator {
    /// Assembles a generator from per-row transition lists. Self-loops are
    /// dropped and duplicate targets merged.
    pub fn from_rows(space: StateSpace, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        let dim = space.dim();
        if rows.len() != dim {
            return Err(invalid("generator", "one transition list per state"));
        }
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut diag = Vec::with_capacity(dim);
        row_ptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.retain(|&(j, r)| j != i && r != 0.0);
            row.sort_by_key(|&(j, _)| j);
            let mut total = 0.0;
            let start = cols.len();
            for (j, r) in row {
                if r < 0.0 || !r.is_finite() {
                    return Err(invalid("generator", format!("rate {r} from state {i}")));
                }
                if j >= dim {
                    return Err(invalid("generator", format!("target {j} outside the state space")));
                }
                total += r;
                if cols.len() > start && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += r;
                } else {
                    cols.push(j);
                    vals.push(r);
                }
            }
            diag.push(-total);
            row_ptr.push(cols.len());
        }
        Ok(SparseGenerator {
            space,
            row_ptr,
            cols,
            vals,
            diag,
        })
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Off-diagonal entries of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    /// `(G f)(i) = Σ_j G_ij f_j`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.diag[i] * f[i] + self.row(i).map(|(j, r)| r * f[j]).sum::<f64>())
            .collect()
    }

    /// `(μ G)(j) = Σ_i μ_i G_ij`.
    pub fn apply_left(&self, mu: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = mu.iter().zip(&self.diag).map(|(m, d)| m * d).collect();
        for i in 0..self.dim() {
            for (j, r) in self.row(i) {
                out[j] += mu[i] * r;
            }
        }
        out
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.dim();
        let mut m = nalgebra::DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for (j, r) in self.row(i) {
                m[(i, j)] += r;
            }
        }
        m
    }

    /// Entrywise difference `self - other` as a dense matrix.
    pub fn dense_difference(&self, other: &SparseGenerator) -> nalgebra::DMatrix<f64> {
        self.to_dense() - other.to_dense()
    }

    /// Largest absolute row sum.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim())
            .map(|i| (self.diag[i] + self.row(i).map(|(_, r)| r).sum::<f64>()).abs())
            .fold(0.0, f64::max)
    }

    pub fn min_off_diagonal(&self) -> f64 {
        self.vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Whether every state reaches every other state.
    pub fn is_irreducible(&self) -> bool {
        let n = self.dim();
        if n == 0 {
            return false;
        }
        let reach = |forward: bool| {
            let mut adj = vec![Vec::new(); n];
            for i in 0..n {
                for (j, _) in self.row(i) {
                    if forward {
                        adj[i].push(j);
                    } else {
                        adj[j].push(i);
                    }
                }
            }
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(i) = stack.pop() {
                for &j in &adj[i] {
                    if !seen[j] {
                        seen[j] = true;
                        stack.push(j);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Largest violation of detailed balance `ν_i G_ij = ν_j G_ji`.
    pub fn detailed_balance_defect(&self, nu: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, r) in self.row(i) {
                let back = self.entry(j, i);
                worst = worst.max((nu[i] * r - nu[j] * back).abs());
            }
        }
        worst
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }
}

fn check_density(rho: f64) -> Result<()> {
    crate::env::validate_density(rho)
}

fn env_rows(kind: EnvKind, space: &StateSpace, rho: f64) -> Result<Vec<Vec<(usize, f64)>>> {
    let l = space.len();
    let mut rows = Vec::with_capacity(space.dim());
    for &code in space.codes() {
        let config = space.configuration(code);
        let mut row = Vec::with_capacity(l);
        for x in 0..l {
            let r = flip_rate(kind, &config, x as i64, rho)?;
            if r > 0.0 {
                let target = space
                    .index_of(code ^ (1 << x))
                    .ok_or_else(|| invalid("generator", "transition leaves the state space"))?;
                row.push((target, r));
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Generator of the spin dynamics on `Ring(len)`.
pub fn build_env_generator(kind: EnvKind, len: usize, rho: f64) -> Result<SparseGenerator> {
    kind.validate()?;
    check_density(rho)?;
    let space = StateSpace::for_kind(kind, len)?;
    let rows = env_rows(kind, &space, rho)?;
    SparseGenerator::from_rows(space, rows)
}

/// Generator of the environment seen from the ε-walker: spin flips plus
/// the shifts `η -> τ_{±1} η` at the walker's jump rates.
pub fn build_ew_generator(kind: EnvKind, len: usize, rho: f64, epsilon: f64) -> Result<SparseGenerator> {
    kind.validate()?;
    check_density(rho)?;
    validate_epsilon(epsilon)?;
    let space = StateSpace::for_kind(kind, len)?;
    let mut rows = env_rows(kind, &space, rho)?;
    for (i, &code) in space.codes().iter().enumerate() {
        let s = epsilon * (2.0 * f64::from(space.occ(code, 0)) - 1.0);
        let right = space.index_of(space.shift(code, 1)).expect("shifts preserve the space");
        let left = space.index_of(space.shift(code, -1)).expect("shifts preserve the space");
        rows[i].push((right, 0.5 + s));
        rows[i].push((left, 0.5 - s));
    }
    SparseGenerator::from_rows(space, rows)
}

/// Local drift `2ε(2η(0) - 1)` as a vector.
pub fn drift_vector(space: &StateSpace, epsilon: f64) -> Vec<f64> {
    space.observable(|c| 2.0 * epsilon * (2.0 * f64::from(space.occ(c, 0)) - 1.0))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Stationary velocity `μ_ε(j^(ε))`.
pub fn exact_velocity(kind: EnvKind, len: usize, rho: f64, epsilon: f64) -> Result<f64> {
    if epsilon == 0.0 {
        validate_epsilon(epsilon)?;
        StateSpace::for_kind(kind, len)?;
        return Ok(0.0);
    }
    let g = build_ew_generator(kind, len, rho, epsilon)?;
    let mu = stationary_distribution(&g)?;
    Ok(dot(&mu.probabilities, &drift_vector(g.space(), epsilon)))
}

/// Stationary density profile `μ_ε(η(x))` for `x` in `offsets`.
pub fn exact_profile(
    kind: EnvKind,
    len: usize,
    rho: f64,
    epsilon: f64,
    offsets: &[i64],
) -> Result<Vec<f64>> {
    let g = build_ew_generator(kind, len, rho, epsilon)?;
    let mu = stationary_distribution(&g)?;
    Ok(offsets
        .iter()
        .map(|&x| dot(&mu.probabilities, &g.space().occupation(x)))
        .collect())
}
