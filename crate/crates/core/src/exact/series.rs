//! Perturbation-series terms of the stationary law of the environment seen
//! from the walker, and the third-order velocity coefficient.
//!
//! With `G0` the unperturbed generator, `S(t) = exp(t G0)` and `L̂` the
//! walker perturbation, the iterates satisfy
//! `d/dt S^(k) f = G0 S^(k) f + L̂ S^(k-1) f`. Stacking `S^(0) f, …, S^(n) f`
//! with accumulators for `∫ μ(L̂ S^(k) f)` gives one linear system whose
//! exponential is evaluated on the doubling grid `T / 2^K, …, T / 2, T`.

use nalgebra::{DMatrix, DVector};

use super::{
    build_env_generator, build_ew_generator, dot, expm, spectral_gap, stationary_distribution,
    SparseGenerator, StateSpace,
};
use crate::env::EnvKind;
use crate::error::{invalid, Error, Result};

pub const MAX_SERIES_ORDER: usize = 6;
pub const DEFAULT_THRESHOLD: f64 = 1e-14;
/// Default horizon in units of the inverse environment gap.
pub const DEFAULT_HORIZON_GAPS: f64 = 40.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Integration horizon; `None` means `40 / gap`.
    pub horizon: Option<f64>,
    /// The outer integral is truncated once the integrand is below this.
    pub threshold: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        SeriesOptions {
            horizon: None,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeriesTerms {
    /// `terms[n] = ∫_0^∞ μ(L̂ S^(n)(s) f) ds`.
    pub terms: Vec<f64>,
    /// `μ(f)` under the unperturbed law.
    pub mean: f64,
    /// `‖f - μ(f)‖` in `L²(μ)`.
    pub centered_norm: f64,
    /// Spectral gap of the environment on the same ring.
    pub env_gap: f64,
    /// Time at which the integrals were truncated.
    pub truncated_at: f64,
    /// Largest integrand magnitude at the truncation time.
    pub final_integrand: f64,
}

impl SeriesTerms {
    /// `μ(f) + Σ_{k ≤ n} terms[k]`.
    pub fn partial_sum(&self, n: usize) -> f64 {
        self.mean + self.terms[..=n].iter().sum::<f64>()
    }
}

fn check_vector(space: &StateSpace, f: &[f64]) -> Result<()> {
    if f.len() != space.dim() {
        return Err(invalid(
            "f",
            format!("{} values for {} states", f.len(), space.dim()),
        ));
    }
    Ok(())
}

struct Model {
    g0: SparseGenerator,
    lhat: DMatrix<f64>,
    mu: Vec<f64>,
    env_gap: f64,
}

fn model(kind: EnvKind, len: usize, rho: f64, epsilon: f64) -> Result<Model> {
    let g0 = build_ew_generator(kind, len, rho, 0.0)?;
    let ge = build_ew_generator(kind, len, rho, epsilon)?;
    let mu = stationary_distribution(&g0)?.probabilities;
    let env_gap = spectral_gap(&build_env_generator(kind, len, rho)?)?.gap;
    Ok(Model {
        lhat: ge.dense_difference(&g0),
        g0,
        mu,
        env_gap,
    })
}

/// Terms `0..=n_max` of the series for the observable `f`.
pub fn series_terms(
    kind: EnvKind,
    len: usize,
    rho: f64,
    epsilon: f64,
    n_max: usize,
    f: &[f64],
    options: SeriesOptions,
) -> Result<SeriesTerms> {
    if n_max > MAX_SERIES_ORDER {
        return Err(invalid("n", format!("at most {MAX_SERIES_ORDER}, got {n_max}")));
    }
    let m = model(kind, len, rho, epsilon)?;
    check_vector(m.g0.space(), f)?;
    let d = m.g0.dim();
    let blocks = n_max + 1;
    let size = blocks * d + blocks;
    let g0 = m.g0.to_dense();
    let mu_l = DVector::from_row_slice(&m.mu).transpose() * &m.lhat;

    let mut big = DMatrix::<f64>::zeros(size, size);
    for k in 0..blocks {
        big.view_mut((k * d, k * d), (d, d)).copy_from(&g0);
        if k > 0 {
            big.view_mut((k * d, (k - 1) * d), (d, d)).copy_from(&m.lhat);
        }
        big.view_mut((blocks * d + k, k * d), (1, d)).copy_from(&mu_l);
    }

    let horizon = options
        .horizon
        .unwrap_or(DEFAULT_HORIZON_GAPS / m.env_gap);
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    let norm = big
        .column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let doublings = (norm * horizon).log2().ceil().max(0.0) as i32;
    let mut t = horizon / 2f64.powi(doublings);
    let mut prop = expm(&(&big * t));
    let mut z0 = DVector::<f64>::zeros(size);
    z0.rows_mut(0, d).copy_from_slice(f);

    let mean = dot(&m.mu, f);
    let centered_norm = m
        .mu
        .iter()
        .zip(f)
        .map(|(p, v)| p * (v - mean).powi(2))
        .sum::<f64>()
        .sqrt();

    // two consecutive grid points below the threshold guard against
    // stopping at a sign change of the integrand
    let mut below_before = false;
    loop {
        let z = &prop * &z0;
        let integrand = (0..blocks)
            .map(|k| (mu_l.columns(0, d) * z.rows(k * d, d))[(0, 0)].abs())
            .fold(0.0, f64::max);
        let last = t >= horizon * (1.0 - 1e-12);
        let below = integrand < options.threshold;
        if (below && below_before) || last {
            if integrand >= options.threshold {
                return Err(Error::Horizon {
                    horizon,
                    integrand,
                    threshold: options.threshold,
                });
            }
            return Ok(SeriesTerms {
                terms: (0..blocks).map(|k| z[blocks * d + k]).collect(),
                mean,
                centered_norm,
                env_gap: m.env_gap,
                truncated_at: t,
                final_integrand: integrand,
            });
        }
        below_before = below;
        prop = &prop * &prop;
        t *= 2.0;
    }
}

/// Single term `∫_0^∞ μ(L̂ S^(n)(s) f) ds`.
pub fn series_term(
    kind: EnvKind,
    len: usize,
    rho: f64,
    epsilon: f64,
    n: usize,
    f: &[f64],
    horizon: Option<f64>,
) -> Result<f64> {
    let opts = SeriesOptions {
        horizon,
        ..SeriesOptions::default()
    };
    Ok(series_terms(kind, len, rho, epsilon, n, f, opts)?.terms[n])
}

/// Same terms from the resolvent: `term_n = μ((L̂ R0)^{n+1} f)` with
/// `R0 = (-G0)^{-1}` on mean-zero functions.
pub fn resolvent_series_terms(
    kind: EnvKind,
    len: usize,
    rho: f64,
    epsilon: f64,
    n_max: usize,
    f: &[f64],
) -> Result<Vec<f64>> {
    let m = model(kind, len, rho, epsilon)?;
    check_vector(m.g0.space(), f)?;
    let solver = MeanZeroSolver::new(&m.g0, &m.mu)?;
    let mut v = DVector::from_row_slice(f);
    let mut out = Vec::with_capacity(n_max + 1);
    for _ in 0..=n_max {
        let centered = center(&v, &m.mu);
        let r = solver.solve(&centered)?;
        v = &m.lhat * r;
        out.push(dot(&m.mu, v.as_slice()));
    }
    Ok(out)
}

fn center(v: &DVector<f64>, mu: &[f64]) -> DVector<f64> {
    let mean = dot(mu, v.as_slice());
    v.map(|x| x - mean)
}

/// Solves `-G0 g = h` for mean-zero `h` through the nonsingular bordered
/// matrix `-G0 + 1 μᵀ`; the solution has `μ(g) = 0`.
struct MeanZeroSolver {
    lu: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    mu: Vec<f64>,
}

impl MeanZeroSolver {
    fn new(g0: &SparseGenerator, mu: &[f64]) -> Result<Self> {
        let d = g0.dim();
        let mut a = -g0.to_dense();
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] += mu[j];
            }
        }
        Ok(MeanZeroSolver {
            lu: a.lu(),
            mu: mu.to_vec(),
        })
    }

    fn solve(&self, h: &DVector<f64>) -> Result<DVector<f64>> {
        let mean = dot(&self.mu, h.as_slice());
        let scale = h.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        if mean.abs() > 1e-10 * scale {
            return Err(Error::Projection { mean });
        }
        self.lu
            .solve(h)
            .ok_or_else(|| Error::Numerical("bordered generator is singular".into()))
    }
}

/// Terms of even index `0, 2, …, 2·n_max` for the local drift; they vanish
/// identically, so the values returned are residuals.
pub fn check_even_terms(
    kind: EnvKind,
    len: usize,
    rho: f64,
    epsilon: f64,
    n_max: usize,
) -> Result<Vec<f64>> {
    if n_max > 2 {
        return Err(invalid("n_max", format!("at most 2, got {n_max}")));
    }
    let space = StateSpace::for_kind(kind, len)?;
    let j = super::drift_vector(&space, epsilon);
    let terms = series_terms(
        kind,
        len,
        rho,
        epsilon,
        2 * n_max,
        &j,
        SeriesOptions::default(),
    )?;
    Ok((0..=n_max).map(|k| terms.terms[2 * k]).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KappaSolve {
    pub kappa: f64,
    /// `g = (-G0)^{-1} h0` with `h0(η) = η(1) - η(-1)`, indexed like the
    /// state space.
    pub g: Vec<f64>,
    pub mu: Vec<f64>,
    pub space: StateSpace,
}

/// `κ = -8 μ((2η(0) - 1) g²)` with `-G0 g = η(1) - η(-1)`.
pub fn resolvent_kappa(kind: EnvKind, len: usize, rho: f64) -> Result<KappaSolve> {
    if rho != 0.5 {
        return Err(invalid("rho", "the cubic coefficient is defined at rho = 1/2"));
    }
    let g0 = build_ew_generator(kind, len, rho, 0.0)?;
    let mu = stationary_distribution(&g0)?.probabilities;
    let space = g0.space().clone();
    let h = DVector::from_vec(space.observable(|c| {
        f64::from(space.occ(c, 1)) - f64::from(space.occ(c, -1))
    }));
    let g = MeanZeroSolver::new(&g0, &mu)?.solve(&h)?;
    let kappa = kappa_functional(&space, &mu, g.as_slice());
    Ok(KappaSolve {
        kappa,
        g: g.as_slice().to_vec(),
        mu,
        space,
    })
}

fn kappa_functional(space: &StateSpace, mu: &[f64], g: &[f64]) -> f64 {
    -8.0 * space
        .codes()
        .iter()
        .zip(mu)
        .zip(g)
        .map(|((&c, p), v)| p * (2.0 * f64::from(space.occ(c, 0)) - 1.0) * v * v)
        .sum::<f64>()
}

/// Value of the κ functional with the time integral cut at `horizon`:
/// `g_T = ∫_0^T S(s) h0 ds = g - S(T) g`.
pub fn truncated_kappa(kind: EnvKind, len: usize, rho: f64, horizon: f64) -> Result<f64> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be finite and nonnegative, got {horizon}")));
    }
    let full = resolvent_kappa(kind, len, rho)?;
    let g0 = build_ew_generator(kind, len, rho, 0.0)?.to_dense();
    let g = DVector::from_row_slice(&full.g);
    let gt = &g - expm(&(g0 * horizon)) * &g;
    Ok(kappa_functional(&full.space, &full.mu, gt.as_slice()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn time_domain_terms_match_resolvent_terms() {
        let space = StateSpace::for_kind(EnvKind::East, 6).unwrap();
        let f = space.occupation(0);
        let time = series_terms(EnvKind::East, 6, 0.5, 0.05, 4, &f, SeriesOptions::default()).unwrap();
        let res = resolvent_series_terms(EnvKind::East, 6, 0.5, 0.05, 4, &f).unwrap();
        for (a, b) in time.terms.iter().zip(&res) {
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn truncated_kappa_converges() {
        let k = resolvent_kappa(EnvKind::East, 6, 0.5).unwrap().kappa;
        let k0 = truncated_kappa(EnvKind::East, 6, 0.5, 0.0).unwrap();
        let k_long = truncated_kappa(EnvKind::East, 6, 0.5, 500.0).unwrap();
        assert_eq!(k0, 0.0);
        assert!((k_long - k).abs() < 1e-10);
    }

    #[test]
    fn projection_error_for_non_centered_input() {
        let g0 = build_ew_generator(EnvKind::East, 5, 0.5, 0.0).unwrap();
        let mu = stationary_distribution(&g0).unwrap().probabilities;
        let solver = MeanZeroSolver::new(&g0, &mu).unwrap();
        let ones = DVector::from_element(g0.dim(), 1.0);
        assert!(matches!(solver.solve(&ones), Err(Error::Projection { .. })));
    }
}
