//! Replica-parallel estimators with batch-means confidence intervals.

use std::time::Instant;

use rayon::prelude::*;

use crate::env::{sample_equilibrium, EnvKind, EnvParams, SpinConfiguration, Topology};
use crate::error::{invalid, Error, Result};
use crate::exact::{build_env_generator, spectral_gap};
use crate::graphical::{first_legal_ring_time, EnvProcess, EventSchedule};
use crate::rng::{derive_seed, seeded_rng};
use crate::walkers::{coupled_run, validate_epsilon, JointProcess};

pub const MIN_BATCHES: usize = 20;
pub const Z95: f64 = 1.96;
pub const Z99: f64 = 2.576;
/// Ring size of the exact gap used for default burn-in and decay rates.
pub const REFERENCE_GAP_SITES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Budget {
    pub events: u64,
    pub wall_clock: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithCI {
    pub value: f64,
    pub se: f64,
    pub n_batches: usize,
    pub ci95: (f64, f64),
    pub budget: Budget,
}

impl EstimateWithCI {
    /// Symmetric normal interval at quantile `z`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (self.value - z * self.se, self.value + z * self.se)
    }

    pub fn ci99(&self) -> (f64, f64) {
        self.interval(Z99)
    }

    /// Exact value with zero uncertainty.
    pub fn exact(value: f64, budget: Budget) -> Self {
        EstimateWithCI {
            value,
            se: 0.0,
            n_batches: MIN_BATCHES,
            ci95: (value, value),
            budget,
        }
    }
}

/// Combined standard error of a difference or sum of independent estimates.
pub fn combined_se(a: &EstimateWithCI, b: &EstimateWithCI) -> f64 {
    a.se.hypot(b.se)
}

/// Batch means over replica values: `max(20, n / 50)` contiguous batches,
/// value = grand mean, se = sd(batch means) / sqrt(batches).
pub fn batch_means(values: &[f64], budget: Budget) -> Result<EstimateWithCI> {
    let n = values.len();
    if n < MIN_BATCHES {
        return Err(Error::InsufficientBudget {
            reason: format!("{n} replicas, need at least {MIN_BATCHES}"),
        });
    }
    let nb = MIN_BATCHES.max(n / 50);
    let (base, extra) = (n / nb, n % nb);
    let mut means = Vec::with_capacity(nb);
    let mut start = 0;
    for b in 0..nb {
        let size = base + usize::from(b < extra);
        let chunk = &values[start..start + size];
        means.push(chunk.iter().sum::<f64>() / size as f64);
        start += size;
    }
    let value = values.iter().sum::<f64>() / n as f64;
    let bm = means.iter().sum::<f64>() / nb as f64;
    let var = means.iter().map(|m| (m - bm).powi(2)).sum::<f64>() / (nb - 1) as f64;
    let se = (var / nb as f64).sqrt();
    Ok(EstimateWithCI {
        value,
        se,
        n_batches: nb,
        ci95: (value - Z95 * se, value + Z95 * se),
        budget,
    })
}

/// Replica count, master seed and worker count of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicaPlan {
    pub replicas: usize,
    pub seed: u64,
    /// `None` uses the available parallelism.
    pub workers: Option<usize>,
}

impl ReplicaPlan {
    pub fn new(replicas: usize, seed: u64) -> Self {
        ReplicaPlan {
            replicas,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: Option<usize>) -> Self {
        self.workers = workers;
        self
    }

    fn check(&self) -> Result<()> {
        if self.replicas < MIN_BATCHES {
            return Err(Error::InsufficientBudget {
                reason: format!("{} replicas, need at least {MIN_BATCHES}", self.replicas),
            });
        }
        Ok(())
    }
}

/// One replica's output and the events it consumed.
pub struct Replica<T> {
    pub value: T,
    pub events: u64,
}

/// Runs `job(index, seed)` for every replica on a pool of `plan.workers`
/// threads. Seeds depend only on `(master, tag, index)` and results come
/// back in index order.
pub fn run_replicas<T, F>(plan: &ReplicaPlan, tag: &str, job: F) -> Result<(Vec<T>, Budget)>
where
    T: Send,
    F: Fn(usize, u64) -> Result<Replica<T>> + Sync,
{
    let start = Instant::now();
    let work = || {
        (0..plan.replicas)
            .into_par_iter()
            .map(|i| job(i, derive_seed(plan.seed, tag, i as u64)))
            .collect::<Result<Vec<_>>>()
    };
    let out = match plan.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?
            .install(work)?,
        None => work()?,
    };
    let events = out.iter().map(|r| r.events).sum();
    let values = out.into_iter().map(|r| r.value).collect();
    Ok((
        values,
        Budget {
            events,
            wall_clock: start.elapsed().as_secs_f64(),
        },
    ))
}

/// Exact spectral gap of the environment on a ring of
/// [`REFERENCE_GAP_SITES`] sites.
pub fn reference_gap(kind: EnvKind, rho: f64) -> Result<f64> {
    Ok(spectral_gap(&build_env_generator(kind, REFERENCE_GAP_SITES, rho)?)?.gap)
}

/// Default burn-in `10 / gap`.
pub fn default_burn_in(kind: EnvKind, rho: f64) -> Result<f64> {
    Ok(10.0 / reference_gap(kind, rho)?)
}

fn check_window(horizon: f64, burn_in: f64) -> Result<()> {
    if !(horizon > 0.0 && horizon.is_finite()) {
        return Err(invalid("horizon", format!("must be positive, got {horizon}")));
    }
    if !(burn_in >= 0.0 && burn_in < horizon) {
        return Err(invalid(
            "burn_in",
            format!("must lie in [0, horizon), got {burn_in}"),
        ));
    }
    Ok(())
}

fn check_ring(env: &EnvParams) -> Result<()> {
    env.validate()?;
    if !env.topology.is_ring() {
        return Err(invalid("topology", "walker estimators run on a ring"));
    }
    Ok(())
}

/// Velocity `(X_T - X_b) / (T - b)` averaged over replicas.
pub fn estimate_velocity(
    env: &EnvParams,
    epsilon: f64,
    horizon: f64,
    burn_in: f64,
    plan: &ReplicaPlan,
) -> Result<EstimateWithCI> {
    check_ring(env)?;
    validate_epsilon(epsilon)?;
    check_window(horizon, burn_in)?;
    plan.check()?;
    let (values, budget) = run_replicas(plan, "velocity", |_, seed| {
        let mut p = JointProcess::new(env, epsilon, horizon, seed, None)?;
        p.run_until(burn_in, &mut ());
        let x0 = p.state().position();
        p.run_until(horizon, &mut ());
        Ok(Replica {
            value: (p.state().position() - x0) as f64 / (horizon - burn_in),
            events: p.events(),
        })
    })?;
    batch_means(&values, budget)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileEstimate {
    pub window: usize,
    pub offsets: Vec<i64>,
    pub values: Vec<EstimateWithCI>,
}

impl ProfileEstimate {
    pub fn at(&self, x: i64) -> Option<&EstimateWithCI> {
        self.offsets.iter().position(|&o| o == x).map(|i| &self.values[i])
    }
}

/// Time-averaged occupation `ξ_t(X_t + x)` over `[burn_in, horizon]` for
/// `|x| <= window`.
pub fn estimate_profile(
    env: &EnvParams,
    epsilon: f64,
    window: usize,
    horizon: f64,
    burn_in: f64,
    plan: &ReplicaPlan,
) -> Result<ProfileEstimate> {
    check_ring(env)?;
    validate_epsilon(epsilon)?;
    check_window(horizon, burn_in)?;
    plan.check()?;
    if window > env.topology.len() / 4 {
        return Err(invalid(
            "window",
            format!("must be at most L/4 = {}, got {window}", env.topology.len() / 4),
        ));
    }
    let w = window as i64;
    let offsets: Vec<i64> = (-w..=w).collect();
    let span = horizon - burn_in;
    let (rows, budget) = run_replicas(plan, "profile", |_, seed| {
        let mut p = JointProcess::new(env, epsilon, horizon, seed, None)?;
        p.run_until(burn_in, &mut ());
        let mut acc = vec![0.0; offsets.len()];
        p.run_holding(horizon, |state, dt| {
            if dt > 0.0 {
                for (a, &x) in acc.iter_mut().zip(&offsets) {
                    *a += dt * f64::from(state.seen(x));
                }
            }
        });
        acc.iter_mut().for_each(|a| *a /= span);
        Ok(Replica {
            value: acc,
            events: p.events(),
        })
    })?;
    let values = (0..offsets.len())
        .map(|k| {
            let column: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            batch_means(&column, budget)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProfileEstimate {
        window,
        offsets,
        values,
    })
}

/// Bulk measurement setup on an East segment: the anchor sits at `L/2` and
/// only sites to its right are simulated, which is exact for the East
/// dynamics since the evolution of `[a, L)` does not depend on sites `< a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentSetup {
    pub rho: f64,
    pub len: usize,
}

impl SegmentSetup {
    pub fn new(rho: f64, len: usize) -> Result<Self> {
        EnvParams::new(EnvKind::East, rho, Topology::Segment(len))?;
        Ok(SegmentSetup { rho, len })
    }

    pub fn anchor(&self) -> usize {
        self.len / 2
    }

    /// Requires `L >= 64 max(time, 1)`.
    pub fn check_time(&self, time: f64) -> Result<()> {
        let need = 64.0 * time.max(1.0);
        if (self.len as f64) < need {
            return Err(invalid(
                "L",
                format!("bulk measurement to time {time} needs L >= {need}, got {}", self.len),
            ));
        }
        Ok(())
    }

    fn start(&self, seed: u64, horizon: f64) -> Result<(SpinConfiguration, EventSchedule)> {
        let params = EnvParams::new(EnvKind::East, self.rho, Topology::Segment(self.len))?;
        let config = sample_equilibrium(&params, &mut seeded_rng(derive_seed(seed, "init", 0)))?;
        let schedule = EventSchedule::new(seed, horizon.max(f64::MIN_POSITIVE), self.len, self.rho)?
            .with_active_range(self.anchor()..self.len);
        Ok((config, schedule))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct USurvivalEstimate {
    pub rho: f64,
    pub s_grid: Vec<f64>,
    pub values: Vec<EstimateWithCI>,
    /// First legal ring time at the anchor for every replica (`inf` when
    /// beyond the last grid point).
    pub first_ring_times: Vec<f64>,
}

fn check_grid(name: &'static str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "empty grid"));
    }
    if grid.iter().any(|&s| !(s >= 0.0 && s.is_finite())) {
        return Err(invalid(name, "grid points must be finite and nonnegative"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}

/// `u(s) = -ρ(1-ρ) P(T_0 > s)` with `T_0` the first legal ring at the
/// anchor of an East segment started from equilibrium.
pub fn estimate_u(
    setup: &SegmentSetup,
    s_grid: &[f64],
    plan: &ReplicaPlan,
) -> Result<USurvivalEstimate> {
    check_grid("s_grid", s_grid)?;
    plan.check()?;
    let s_max = *s_grid.last().unwrap();
    setup.check_time(s_max)?;
    let a = setup.anchor();
    let (times, budget) = run_replicas(plan, "u-survival", |_, seed| {
        let (config, schedule) = setup.start(seed, s_max)?;
        let t0 = first_legal_ring_time(&config, EnvKind::East, &schedule, a)?;
        Ok(Replica {
            value: t0,
            events: 0,
        })
    })?;
    let scale = -setup.rho * (1.0 - setup.rho);
    let values = s_grid
        .iter()
        .map(|&s| {
            let col: Vec<f64> = times
                .iter()
                .map(|&t0| if t0 > s { scale } else { 0.0 })
                .collect();
            batch_means(&col, budget)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(USurvivalEstimate {
        rho: setup.rho,
        s_grid: s_grid.to_vec(),
        values,
        first_ring_times: times,
    })
}

fn check_positive(name: &'static str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and nonnegative, got {v}")))
    }
}

/// `E[ξ_0(a) (2ξ_t(a+y) - 1) ξ_{t+s}(a)]` at the bulk anchor `a`.
pub fn correlator3(
    setup: &SegmentSetup,
    t: f64,
    s: f64,
    y: usize,
    plan: &ReplicaPlan,
) -> Result<EstimateWithCI> {
    check_positive("t", t)?;
    check_positive("s", s)?;
    if y == 0 {
        return Err(invalid("y", "must be at least 1"));
    }
    setup.check_time(t + s)?;
    plan.check()?;
    let a = setup.anchor();
    let (values, budget) = run_replicas(plan, "criterion", |_, seed| {
        let (config, schedule) = setup.start(seed, t + s)?;
        let first = f64::from(config.bits()[a]);
        let mut env = EnvProcess::new(config, EnvKind::East, &schedule)?;
        env.run_until(t);
        let mid = 2.0 * f64::from(env.config().bits()[a + y]) - 1.0;
        env.run_until(t + s);
        let last = f64::from(env.config().bits()[a]);
        Ok(Replica {
            value: first * mid * last,
            events: env.events(),
        })
    })?;
    batch_means(&values, budget)
}

/// `E[f(ξ_0(a)) ξ_t(a+y)]` for every `y` in `ys`, from shared replicas.
fn two_time(
    setup: &SegmentSetup,
    t: f64,
    ys: &[usize],
    plan: &ReplicaPlan,
    tag: &str,
    f: impl Fn(f64) -> f64 + Sync,
) -> Result<Vec<EstimateWithCI>> {
    check_positive("t", t)?;
    if ys.contains(&0) {
        return Err(invalid("y", "must be at least 1"));
    }
    setup.check_time(t)?;
    plan.check()?;
    let a = setup.anchor();
    let (rows, budget) = run_replicas(plan, tag, |_, seed| {
        let (config, schedule) = setup.start(seed, t)?;
        let first = f(f64::from(config.bits()[a]));
        let mut env = EnvProcess::new(config, EnvKind::East, &schedule)?;
        env.run_until(t);
        let row: Vec<f64> = ys
            .iter()
            .map(|&y| first * f64::from(env.config().bits()[a + y]))
            .collect();
        Ok(Replica {
            value: row,
            events: env.events(),
        })
    })?;
    (0..ys.len())
        .map(|k| {
            let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
            batch_means(&col, budget)
        })
        .collect()
}

/// `E[(ξ_0(a) - ρ) ξ_t(a+y)]` for each `y`.
pub fn orientation_test(
    setup: &SegmentSetup,
    t: f64,
    ys: &[usize],
    plan: &ReplicaPlan,
) -> Result<Vec<EstimateWithCI>> {
    let rho = setup.rho;
    two_time(setup, t, ys, plan, "orientation", move |v| v - rho)
}

/// `E[ξ_0(a) ξ_t(a+y)]` for each `y`.
pub fn two_point(
    setup: &SegmentSetup,
    t: f64,
    ys: &[usize],
    plan: &ReplicaPlan,
) -> Result<Vec<EstimateWithCI>> {
    two_time(setup, t, ys, plan, "two-point", |v| v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontEstimate {
    /// `Y_T / T` for the degenerate edge walker.
    pub walker: EstimateWithCI,
    /// `F_T / T` for the front.
    pub front: EstimateWithCI,
    pub invariant_violations: u64,
    /// Smallest number of events seen by a replica.
    pub min_events: u64,
    /// Replicas dropped after the walker or front came near the boundary.
    pub censored: usize,
}

/// Coupled edge walker and front on an East segment, started at the first
/// edge right of `origin`. Boundary-hitting replicas are censored.
pub fn estimate_front(
    rho: f64,
    len: usize,
    origin: usize,
    horizon: f64,
    plan: &ReplicaPlan,
) -> Result<FrontEstimate> {
    EnvParams::new(EnvKind::East, rho, Topology::Segment(len))?;
    if origin >= len {
        return Err(invalid("origin", format!("must be below L = {len}")));
    }
    check_window(horizon, 0.0)?;
    plan.check()?;
    let (runs, budget) = run_replicas(plan, "front", |_, seed| {
        match coupled_run(rho, len, origin, horizon, seed) {
            Ok(run) => {
                let y0 = run.walker.positions[0] as f64 + 0.5;
                let f0 = run.front.positions[0] as f64;
                let y = run.walker.last() as f64 + 0.5;
                let f = run.front.last() as f64;
                Ok(Replica {
                    value: Some(((y - y0) / horizon, (f - f0) / horizon, run.invariant_violations, run.events)),
                    events: run.events,
                })
            }
            Err(Error::BoundaryHit { .. }) => Ok(Replica {
                value: None,
                events: 0,
            }),
            Err(e) => Err(e),
        }
    })?;
    let kept: Vec<_> = runs.iter().flatten().copied().collect();
    let censored = runs.len() - kept.len();
    let ys: Vec<f64> = kept.iter().map(|r| r.0).collect();
    let fs: Vec<f64> = kept.iter().map(|r| r.1).collect();
    Ok(FrontEstimate {
        walker: batch_means(&ys, budget)?,
        front: batch_means(&fs, budget)?,
        invariant_violations: kept.iter().map(|r| r.2).sum(),
        min_events: kept.iter().map(|r| r.3).min().unwrap_or(0),
        censored,
    })
}
