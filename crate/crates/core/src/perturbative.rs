//! Heat kernel of the rate-1 simple random walk, the first-order density
//! profile and the nested Monte Carlo for the cubic velocity coefficient.

use crate::env::{sample_equilibrium, EnvKind, EnvParams};
use crate::error::{invalid, Error, Result};
use crate::estimators::{
    batch_means, run_replicas, EstimateWithCI, Replica, ReplicaPlan, USurvivalEstimate,
};
use crate::rng::{derive_seed, seeded_rng};
use crate::walkers::JointProcess;

/// Poisson tail mass at which the uniformization series is cut.
pub const POISSON_TAIL: f64 = 1e-14;
/// Largest tail contribution tolerated in the first-order profile.
pub const PROFILE_TAIL: f64 = 1e-4;
/// Step of the quadrature grid for the profile kernel.
pub const PROFILE_STEP: f64 = 0.01;

fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(0.0);
    let mut acc = 0.0;
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// `p_t(y)` for the walk jumping to each neighbour at rate 1/2, by
/// uniformization: `Σ_n e^{-t} t^n / n! · P_n(y)`.
pub fn heat_kernel(t: f64, y: i64) -> Result<f64> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(invalid("t", format!("must be finite and nonnegative, got {t}")));
    }
    let y = y.unsigned_abs() as usize;
    if t == 0.0 {
        return Ok(if y == 0 { 1.0 } else { 0.0 });
    }
    let n_max = (t + 12.0 * t.sqrt() + 60.0).ceil() as usize;
    let lf = ln_factorials(n_max);
    let ln_t = t.ln();
    let ln2 = std::f64::consts::LN_2;
    let mut mass = 0.0;
    let mut sum = 0.0;
    for n in 0..=n_max {
        let ln_pois = -t + n as f64 * ln_t - lf[n];
        let pois = ln_pois.exp();
        mass += pois;
        if n >= y && (n - y) % 2 == 0 {
            let k = (n + y) / 2;
            let ln_step = lf[n] - lf[k] - lf[n - k] - n as f64 * ln2;
            sum += (ln_pois + ln_step).exp();
        }
        if n as f64 > t && 1.0 - mass < POISSON_TAIL {
            return Ok(sum);
        }
    }
    Ok(sum)
}

/// Tail bound `2 ρ (1-ρ)^{1/2} e^{-λ T_u} ∫_0^∞ |p_s(x-1) - p_s(x+1)| ds`
/// of the profile integral beyond `T_u`. For `x != 0` the kernel has one
/// sign and integrates to `a(|x|+1) - a(|x|-1) = 2`, `a(y) = |y|` being the
/// potential kernel of the walk.
pub fn profile_tail_bound(rho: f64, gap: f64, horizon: f64) -> f64 {
    4.0 * rho * (1.0 - rho).sqrt() * (-gap * horizon).exp()
}

/// Smallest integer horizon whose profile tail bound is below
/// [`PROFILE_TAIL`].
pub fn profile_horizon(rho: f64, gap: f64) -> f64 {
    ((4.0 * rho * (1.0 - rho).sqrt() / PROFILE_TAIL).ln() / gap).floor() + 1.0
}

/// Cumulative integral `C(s) = ∫_0^s [p_r(x-1) - p_r(x+1)] dr` on the grid
/// `0, h, 2h, …`, by the trapezoidal rule.
fn kernel_primitive(x: i64, horizon: f64, h: f64) -> Result<Vec<f64>> {
    let n = (horizon / h).ceil() as usize;
    let mut c = Vec::with_capacity(n + 1);
    c.push(0.0);
    let k = |s: f64| -> Result<f64> { Ok(heat_kernel(s, x - 1)? - heat_kernel(s, x + 1)?) };
    let mut prev = k(0.0)?;
    for i in 1..=n {
        let cur = k(i as f64 * h)?;
        c.push(c[i - 1] + 0.5 * h * (prev + cur));
        prev = cur;
    }
    Ok(c)
}

fn interpolate(c: &[f64], h: f64, s: f64) -> f64 {
    let pos = s / h;
    let i = pos.floor() as usize;
    if i + 1 >= c.len() {
        return *c.last().unwrap();
    }
    let frac = pos - i as f64;
    c[i] + frac * (c[i + 1] - c[i])
}

/// First-order profile coefficient
/// `D(x) = 2 ∫_0^{T_u} u(s) [p_s(x-1) - p_s(x+1)] ds`.
///
/// Each replica of `u` contributes `-ρ(1-ρ) 1{T_0 > s}`, so the integral is
/// a linear functional of the replica's `T_0`; the standard error comes
/// from batch means over these per-replica functionals. `gap` is the decay
/// rate used for the tail bound.
pub fn first_order_profile(
    u: &USurvivalEstimate,
    x: i64,
    horizon: f64,
    gap: f64,
) -> Result<EstimateWithCI> {
    if !(gap > 0.0) {
        return Err(invalid("gap", format!("must be positive, got {gap}")));
    }
    let s_max = *u.s_grid.last().ok_or_else(|| invalid("s_grid", "empty grid"))?;
    if horizon > s_max + 1e-12 {
        return Err(invalid(
            "horizon",
            format!("u is only resolved up to {s_max}, horizon is {horizon}"),
        ));
    }
    let tail = profile_tail_bound(u.rho, gap, horizon);
    if tail >= PROFILE_TAIL {
        return Err(Error::Horizon {
            horizon,
            integrand: tail,
            threshold: PROFILE_TAIL,
        });
    }
    let budget = u.values.first().map(|v| v.budget).unwrap_or_default();
    if x == 0 {
        return Ok(EstimateWithCI::exact(0.0, budget));
    }
    let c = kernel_primitive(x, horizon, PROFILE_STEP)?;
    let scale = -u.rho * (1.0 - u.rho);
    let values: Vec<f64> = u
        .first_ring_times
        .iter()
        .map(|&t0| 2.0 * scale * interpolate(&c, PROFILE_STEP, t0.min(horizon)))
        .collect();
    batch_means(&values, budget)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaEstimate {
    pub value: EstimateWithCI,
    pub inner_horizon: f64,
    pub outer_samples: usize,
    pub inner_pairs: usize,
}

/// `∫_0^T [ξ_s(X_s + 1) - ξ_s(X_s - 1)] ds` along one symmetric-walker run.
fn gradient_integral(process: &mut JointProcess, horizon: f64) -> f64 {
    let mut acc = 0.0;
    process.run_holding(horizon, |state, dt| {
        acc += dt * (f64::from(state.seen(1)) - f64::from(state.seen(-1)));
    });
    acc
}

/// Two-replica estimator of the cubic velocity coefficient: for each
/// equilibrium draw `η`, two independent symmetric-walker runs from `η`
/// give `Ĝ_1, Ĝ_2`, and `-8 (2η(0) - 1) Ĝ_1 Ĝ_2` is unbiased for the
/// horizon-`T` truncation of `κ`.
pub fn estimate_kappa(
    env: &EnvParams,
    inner_horizon: f64,
    plan: &ReplicaPlan,
) -> Result<KappaEstimate> {
    env.validate()?;
    if env.rho != 0.5 {
        return Err(invalid("rho", "the cubic coefficient is defined at rho = 1/2"));
    }
    if !env.topology.is_ring() {
        return Err(invalid("topology", "the walker runs on a ring"));
    }
    if !(inner_horizon > 0.0 && inner_horizon.is_finite()) {
        return Err(invalid(
            "inner_horizon",
            format!("must be positive, got {inner_horizon}"),
        ));
    }
    let (values, budget) = run_replicas(plan, "kappa", |_, seed| {
        let eta = sample_equilibrium(env, &mut seeded_rng(derive_seed(seed, "outer", 0)))?;
        let sign = 2.0 * f64::from(eta.bits()[0]) - 1.0;
        let mut events = 0;
        let mut g = [0.0; 2];
        for (k, gk) in g.iter_mut().enumerate() {
            let inner = derive_seed(seed, "inner", k as u64);
            let mut p = JointProcess::new(env, 0.0, inner_horizon, inner, Some(eta.clone()))?;
            *gk = gradient_integral(&mut p, inner_horizon);
            events += p.events();
        }
        Ok(Replica {
            value: -8.0 * sign * g[0] * g[1],
            events,
        })
    })?;
    Ok(KappaEstimate {
        value: batch_means(&values, budget)?,
        inner_horizon,
        outer_samples: plan.replicas,
        inner_pairs: 1,
    })
}

/// Kind used for the zero-κ control: independent spin flips at rate 1.
pub fn spin_flip_control() -> EnvKind {
    EnvKind::IndependentSpinFlip { gamma: 1.0 }
}
