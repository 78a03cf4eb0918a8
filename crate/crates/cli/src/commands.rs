use std::time::Instant;

use eastwalk_core::env::validate_density;
use eastwalk_core::estimators::{
    correlator3, default_burn_in, estimate_front, estimate_profile, estimate_u,
    estimate_velocity, orientation_test, reference_gap, two_point, ReplicaPlan, SegmentSetup,
    MIN_BATCHES,
};
use eastwalk_core::exact::{
    build_env_generator, build_ew_generator, dot, exact_velocity, resolvent_kappa,
    resolvent_series_terms, series_terms, spectral_gap, stationary_distribution,
    truncated_kappa, SeriesOptions, StateSpace, MAX_SERIES_ORDER, MAX_SITES, MIN_SITES,
};
use eastwalk_core::perturbative::estimate_kappa;
use eastwalk_core::walkers::validate_epsilon;
use eastwalk_core::{EnvKind, EnvParams, Topology};

use crate::config::Params;
use crate::error::CliError;
use crate::output::{ResultRecord, RunInfo, Series};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandName {
    Simulate,
    Profile,
    USurvival,
    Kappa,
    Criterion,
    Front,
    Exact,
    SeriesCheck,
    Figure3,
    Figure6,
}

impl CommandName {
    pub fn as_str(&self) -> &'static str {
        match self {
            CommandName::Simulate => "simulate",
            CommandName::Profile => "profile",
            CommandName::USurvival => "u-survival",
            CommandName::Kappa => "kappa",
            CommandName::Criterion => "criterion",
            CommandName::Front => "front",
            CommandName::Exact => "exact",
            CommandName::SeriesCheck => "series-check",
            CommandName::Figure3 => "figure3",
            CommandName::Figure6 => "figure6",
        }
    }
}

pub struct Report {
    pub records: Vec<ResultRecord>,
    pub plot: Option<Series<'static>>,
    /// Set when a checking command ran to completion but a check failed.
    pub failure: Option<CliError>,
}

impl Report {
    fn rows(records: Vec<ResultRecord>) -> Self {
        Report {
            records,
            plot: None,
            failure: None,
        }
    }
}

pub type Job = Box<dyn FnOnce() -> Result<Report, CliError>>;

/// Validates every parameter of `command` and returns the work to run.
pub fn prepare(command: CommandName, params: Params) -> Result<Job, CliError> {
    let inp = Inputs { p: params, command };
    match command {
        CommandName::Simulate => simulate(&inp),
        CommandName::Profile => profile(&inp, 5, 0.1, 2000.0),
        CommandName::Figure6 => profile(&inp, 10, 0.1, 4000.0),
        CommandName::USurvival => u_survival(&inp),
        CommandName::Kappa => kappa(&inp),
        CommandName::Criterion => criterion(&inp),
        CommandName::Front => front(&inp),
        CommandName::Exact => exact_suite(&inp),
        CommandName::SeriesCheck => series_check(&inp),
        CommandName::Figure3 => figure3(&inp),
    }
}

struct Inputs {
    p: Params,
    command: CommandName,
}

fn check<T>(r: eastwalk_core::Result<T>) -> Result<T, CliError> {
    r.map_err(CliError::from_validation)
}

impl Inputs {
    fn kind(&self) -> Result<EnvKind, CliError> {
        let kind = match self.p.kind.as_deref().unwrap_or("east") {
            "east" => EnvKind::East,
            "west" => EnvKind::West,
            "fa1f" => EnvKind::FA1f,
            "isf" => EnvKind::IndependentSpinFlip {
                gamma: self.p.gamma.unwrap_or(1.0),
            },
            other => {
                return Err(CliError::invalid(
                    "kind",
                    format!("unknown kind `{other}`, expected east, west, fa1f or isf"),
                ))
            }
        };
        check(kind.validate())?;
        Ok(kind)
    }

    fn east_only(&self) -> Result<(), CliError> {
        match self.p.kind.as_deref() {
            None | Some("east") => Ok(()),
            Some(other) => Err(CliError::invalid(
                "kind",
                format!("{} runs on the East model only, got `{other}`", self.command.as_str()),
            )),
        }
    }

    fn topology(&self, needed: &str) -> Result<(), CliError> {
        match self.p.topology.as_deref() {
            None => Ok(()),
            Some(t) if t == needed => Ok(()),
            Some(t) => Err(CliError::invalid(
                "topology",
                format!("{} needs a {needed}, got `{t}`", self.command.as_str()),
            )),
        }
    }

    fn rho(&self, default: f64) -> Result<f64, CliError> {
        let rho = self.p.rho.unwrap_or(default);
        check(validate_density(rho))?;
        Ok(rho)
    }

    fn epsilon(&self, default: f64) -> Result<f64, CliError> {
        let eps = self.p.epsilon.unwrap_or(default);
        check(validate_epsilon(eps))?;
        Ok(eps)
    }

    fn sites(&self, default: usize) -> usize {
        self.p.sites.unwrap_or(default)
    }

    fn exact_sites(&self, default: usize) -> Result<usize, CliError> {
        let l = self.sites(default);
        if !(MIN_SITES..=MAX_SITES).contains(&l) {
            return Err(CliError::invalid(
                "sites",
                format!("the exact oracle handles {MIN_SITES}..={MAX_SITES} sites, got {l}"),
            ));
        }
        Ok(l)
    }

    fn positive(key: &str, v: f64) -> Result<f64, CliError> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(CliError::invalid(key, format!("must be positive and finite, got {v}")))
        }
    }

    fn horizon(&self, default: f64) -> Result<f64, CliError> {
        Self::positive("horizon", self.p.horizon.unwrap_or(default))
    }

    /// Explicit burn-in, checked against the horizon; `None` means the
    /// gap-based default, resolved when the job runs.
    fn burn_in(&self, horizon: f64) -> Result<Option<f64>, CliError> {
        match self.p.burn_in {
            Some(b) if b >= 0.0 && b < horizon => Ok(Some(b)),
            Some(b) => Err(CliError::invalid(
                "burn-in",
                format!("must lie in [0, horizon = {horizon}), got {b}"),
            )),
            None => Ok(None),
        }
    }

    fn plan(&self, default: usize) -> Result<ReplicaPlan, CliError> {
        let n = self.p.replicas.unwrap_or(default);
        if n < MIN_BATCHES {
            return Err(CliError::invalid(
                "replicas",
                format!("need at least {MIN_BATCHES}, got {n}"),
            ));
        }
        if self.p.workers == Some(0) {
            return Err(CliError::invalid("workers", "must be at least 1"));
        }
        Ok(ReplicaPlan::new(n, self.seed()).with_workers(self.p.workers))
    }

    fn seed(&self) -> u64 {
        self.p.seed.unwrap_or(1)
    }

    fn grid(key: &str, values: Option<&Vec<f64>>, default: Vec<f64>) -> Result<Vec<f64>, CliError> {
        let g = values.cloned().unwrap_or(default);
        if g.is_empty() {
            return Err(CliError::invalid(key, "empty grid"));
        }
        if g.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(CliError::invalid(key, "entries must be finite and nonnegative"));
        }
        if g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::invalid(key, "entries must be strictly increasing"));
        }
        Ok(g)
    }

    fn run(&self, kind: EnvKind, rho: Option<f64>, len: usize, topology: &'static str) -> RunInfo {
        RunInfo {
            command: self.command.as_str().to_string(),
            kind: kind.name().to_string(),
            rho,
            epsilon: None,
            len,
            topology,
            horizon: None,
            replicas: self.p.replicas,
            seed: None,
        }
    }
}

fn burn_in_or_default(burn: Option<f64>, kind: EnvKind, rho: f64, horizon: f64) -> Result<f64, CliError> {
    let b = match burn {
        Some(b) => b,
        None => default_burn_in(kind, rho)?,
    };
    if b >= horizon {
        return Err(CliError::invalid(
            "burn-in",
            format!("default burn-in {b:.1} is not below the horizon {horizon}; pass --burn-in"),
        ));
    }
    Ok(b)
}

fn segment(rho: f64, len: usize) -> Result<SegmentSetup, CliError> {
    check(SegmentSetup::new(rho, len))
}

/// Smallest segment length that keeps bulk measurements to time `t` clear
/// of the boundary.
fn bulk_len(t: f64) -> usize {
    (64.0 * t.max(1.0)).ceil() as usize
}

fn simulate(inp: &Inputs) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let kind = inp.kind()?;
    let rho = inp.rho(0.5)?;
    let eps = inp.epsilon(0.3)?;
    let len = inp.sites(256);
    let env = check(EnvParams::new(kind, rho, Topology::Ring(len)))?;
    let horizon = inp.horizon(1000.0)?;
    let burn = inp.burn_in(horizon)?;
    let plan = inp.plan(40)?;
    let mut run = inp.run(kind, Some(rho), len, "ring");
    run.epsilon = Some(eps);
    run.horizon = Some(horizon);
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let b = burn_in_or_default(burn, kind, rho, horizon)?;
        let v = estimate_velocity(&env, eps, horizon, b, &plan)?;
        Ok(Report::rows(vec![ResultRecord::estimate(&run, &v).at([Some(b), None, None])]))
    }))
}

fn profile(inp: &Inputs, window: usize, eps: f64, horizon: f64) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let kind = inp.kind()?;
    let rho = inp.rho(0.5)?;
    let eps = inp.epsilon(eps)?;
    let len = inp.sites(256);
    let env = check(EnvParams::new(kind, rho, Topology::Ring(len)))?;
    let window = inp.p.window.unwrap_or(window);
    if window > len / 4 {
        return Err(CliError::invalid(
            "window",
            format!("must be at most L/4 = {}, got {window}", len / 4),
        ));
    }
    let horizon = inp.horizon(horizon)?;
    let burn = inp.burn_in(horizon)?;
    let plan = inp.plan(40)?;
    let mut run = inp.run(kind, Some(rho), len, "ring");
    run.epsilon = Some(eps);
    run.horizon = Some(horizon);
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let b = burn_in_or_default(burn, kind, rho, horizon)?;
        let p = estimate_profile(&env, eps, window, horizon, b, &plan)?;
        let records = p
            .offsets
            .iter()
            .zip(&p.values)
            .map(|(&x, e)| ResultRecord::estimate(&run, e).at([Some(x as f64), None, None]))
            .collect();
        let points = p
            .offsets
            .iter()
            .zip(&p.values)
            .map(|(&x, e)| (x as f64, e.value, 1.96 * e.se))
            .collect();
        Ok(Report {
            records,
            plot: Some(Series {
                title: "Environment profile seen from the walker",
                x_label: "offset x",
                y_label: "occupation",
                points,
            }),
            failure: None,
        })
    }))
}

fn u_survival(inp: &Inputs) -> Result<Job, CliError> {
    inp.east_only()?;
    inp.topology("segment")?;
    let rho = inp.rho(0.5)?;
    let grid = Inputs::grid("s-grid", inp.p.s_grid.as_ref(), (0..=20).map(f64::from).collect())?;
    let s_max = *grid.last().unwrap();
    let setup = segment(rho, inp.sites(bulk_len(s_max)))?;
    check(setup.check_time(s_max))?;
    let plan = inp.plan(10_000)?;
    let mut run = inp.run(EnvKind::East, Some(rho), setup.len, "segment");
    run.horizon = Some(s_max);
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let u = estimate_u(&setup, &grid, &plan)?;
        let gap = reference_gap(EnvKind::East, rho)?;
        let mut records: Vec<ResultRecord> = grid
            .iter()
            .zip(&u.values)
            .map(|(&s, e)| ResultRecord::estimate(&run, e).at([Some(s), None, None]))
            .collect();
        for &s in &grid {
            let bound = rho * (1.0 - rho).sqrt() * (-gap * s).exp();
            records.push(
                ResultRecord::exact(&run, bound)
                    .named("bound")
                    .at([Some(s), None, None]),
            );
        }
        let points = grid
            .iter()
            .zip(&u.values)
            .map(|(&s, e)| (s, e.value, 1.96 * e.se))
            .collect();
        Ok(Report {
            records,
            plot: Some(Series {
                title: "u(s) = -rho(1-rho) P(T0 > s)",
                x_label: "s",
                y_label: "u(s)",
                points,
            }),
            failure: None,
        })
    }))
}

fn kappa(inp: &Inputs) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let kind = inp.kind()?;
    let rho = inp.rho(0.5)?;
    if rho != 0.5 {
        return Err(CliError::invalid("rho", "the cubic coefficient is defined at rho = 1/2"));
    }
    let len = inp.sites(128);
    let env = check(EnvParams::new(kind, rho, Topology::Ring(len)))?;
    let inner = match inp.p.inner_horizon {
        Some(t) => Some(Inputs::positive("inner-horizon", t)?),
        None => None,
    };
    let plan = inp.plan(10_000)?;
    let mut run = inp.run(kind, Some(rho), len, "ring");
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let t = match inner {
            Some(t) => t,
            None => 12.0 / reference_gap(kind, rho)?,
        };
        run.horizon = Some(t);
        let est = estimate_kappa(&env, t, &plan)?;
        let mut records = vec![ResultRecord::estimate(&run, &est.value).at([Some(t), None, None])];
        if len <= 10 {
            let started = Instant::now();
            let k = resolvent_kappa(kind, len, rho)?.kappa;
            let kt = truncated_kappa(kind, len, rho, t)?;
            let secs = started.elapsed().as_secs_f64();
            records.push(ResultRecord::exact(&run, k).named("resolvent").timed(secs));
            records.push(
                ResultRecord::exact(&run, kt)
                    .named("truncated")
                    .at([Some(t), None, None])
                    .timed(secs),
            );
        }
        Ok(Report::rows(records))
    }))
}

fn criterion(inp: &Inputs) -> Result<Job, CliError> {
    inp.east_only()?;
    inp.topology("segment")?;
    let rho = inp.rho(0.5)?;
    let ts = Inputs::grid("t-grid", inp.p.t_grid.as_ref(), vec![0.5, 1.0, 2.0])?;
    let ss = Inputs::grid("s-grid", inp.p.s_grid.as_ref(), vec![0.5, 1.0, 2.0])?;
    let ys = inp.p.y_grid.clone().unwrap_or_else(|| vec![1, 2, 3]);
    if ys.is_empty() || ys.contains(&0) {
        return Err(CliError::invalid("y-grid", "entries must be at least 1"));
    }
    let t_max = ts.last().unwrap() + ss.last().unwrap();
    let setup = segment(rho, inp.sites(bulk_len(t_max)))?;
    check(setup.check_time(t_max))?;
    if setup.anchor() + ys.iter().max().unwrap() >= setup.len {
        return Err(CliError::invalid("y-grid", "offsets reach past the segment"));
    }
    let plan = inp.plan(10_000)?;
    let mut run = inp.run(EnvKind::East, Some(rho), setup.len, "segment");
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let mut records = Vec::new();
        for &t in &ts {
            for &s in &ss {
                for &y in &ys {
                    let e = correlator3(&setup, t, s, y, &plan)?;
                    records.push(ResultRecord::estimate(&run, &e).at([Some(t), Some(s), Some(y as f64)]));
                }
            }
            let orient = orientation_test(&setup, t, &ys, &plan)?;
            let two = two_point(&setup, t, &ys, &plan)?;
            for ((&y, o), p) in ys.iter().zip(&orient).zip(&two) {
                let at = [Some(t), None, Some(y as f64)];
                records.push(ResultRecord::estimate(&run, o).named("orientation").at(at));
                records.push(ResultRecord::estimate(&run, p).named("two-point").at(at));
            }
        }
        Ok(Report::rows(records))
    }))
}

fn front(inp: &Inputs) -> Result<Job, CliError> {
    inp.east_only()?;
    inp.topology("segment")?;
    let rho = inp.rho(0.5)?;
    let len = inp.sites(4096);
    check(EnvParams::new(EnvKind::East, rho, Topology::Segment(len)))?;
    let origin = inp.p.origin.unwrap_or(len.saturating_sub(200));
    if origin >= len {
        return Err(CliError::invalid("origin", format!("must be below L = {len}")));
    }
    let horizon = inp.horizon(200.0)?;
    let plan = inp.plan(100)?;
    let mut run = inp.run(EnvKind::East, Some(rho), len, "segment");
    run.horizon = Some(horizon);
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let est = estimate_front(rho, len, origin, horizon, &plan)?;
        let secs = est.walker.budget.wall_clock;
        let at = [Some(origin as f64), None, None];
        Ok(Report::rows(vec![
            ResultRecord::estimate(&run, &est.walker).named("walker").at(at),
            ResultRecord::estimate(&run, &est.front).named("front").at(at),
            ResultRecord::exact(&run, est.invariant_violations as f64)
                .named("violations")
                .timed(secs),
            ResultRecord::exact(&run, est.min_events as f64)
                .named("min-events")
                .timed(secs),
            ResultRecord::exact(&run, est.censored as f64)
                .named("censored")
                .timed(secs),
        ]))
    }))
}

const EXACT_TOL: f64 = 1e-10;
const REVERSIBILITY_TOL: f64 = 1e-12;

fn exact_suite(inp: &Inputs) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let len = inp.exact_sites(6)?;
    let rhos = inp.p.rho_grid.clone().unwrap_or_else(|| vec![0.3, 0.5, 0.7]);
    for &r in &rhos {
        check(validate_density(r))?;
    }
    let epss = inp
        .p
        .eps_grid
        .clone()
        .unwrap_or_else(|| vec![0.05, 0.1, 0.2, 0.3]);
    for &e in &epss {
        check(validate_epsilon(e))?;
    }
    let info = |kind: EnvKind, rho: f64| inp.run(kind, Some(rho), len, "ring");
    let kinds = [
        EnvKind::East,
        EnvKind::West,
        EnvKind::FA1f,
        EnvKind::IndependentSpinFlip { gamma: 1.0 },
    ];
    let runs: Vec<Vec<RunInfo>> = rhos
        .iter()
        .map(|&r| kinds.iter().map(|&k| info(k, r)).collect())
        .collect();
    Ok(Box::new(move || {
        let mut records = Vec::new();
        let mut failed = Vec::new();
        let mut expect = |name: &str, value: f64, tol: f64| {
            if !(value.abs() < tol) {
                failed.push(format!("{name} = {value:e}"));
            }
        };
        for (&rho, runs) in rhos.iter().zip(&runs) {
            for (&kind, run) in kinds.iter().zip(runs) {
                let started = Instant::now();
                let g = build_env_generator(kind, len, rho)?;
                let nu = g.space().product_measure(rho);
                let defect = g.detailed_balance_defect(&nu);
                let gap = spectral_gap(&g)?.gap;
                let secs = started.elapsed().as_secs_f64();
                expect("reversibility defect", defect, REVERSIBILITY_TOL);
                records.push(ResultRecord::exact(run, defect).named("reversibility").timed(secs));
                records.push(ResultRecord::exact(run, gap).named("gap").timed(secs));
                for &eps in &epss {
                    let started = Instant::now();
                    let v = exact_velocity(kind, len, rho, eps)?;
                    let odd = v + exact_velocity(kind, len, rho, -eps)?;
                    let secs = started.elapsed().as_secs_f64();
                    expect("antisymmetry residual", odd, EXACT_TOL);
                    let row = |q, x| ResultRecord::exact(run, x).named(q).with_epsilon(eps).timed(secs);
                    records.push(row("velocity", v));
                    records.push(row("antisymmetry", odd));
                    if kind == EnvKind::East {
                        let west = exact_velocity(EnvKind::West, len, rho, eps)?;
                        expect("east-west difference", v - west, EXACT_TOL);
                        records.push(row("east-west", v - west));
                    }
                    if !kind.is_constrained() && rho == 0.5 {
                        expect("spin-flip velocity", v, EXACT_TOL);
                    }
                }
            }
        }
        let failure = (!failed.is_empty()).then(|| CliError::Runtime {
            code: "oracle-check",
            message: failed.join("; "),
        });
        Ok(Report {
            records,
            plot: None,
            failure,
        })
    }))
}

fn series_check(inp: &Inputs) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let kind = inp.kind()?;
    let len = inp.exact_sites(6)?;
    let rho = inp.rho(0.5)?;
    let eps = inp.epsilon(0.05)?;
    let order = inp.p.order.unwrap_or(4);
    if order > MAX_SERIES_ORDER {
        return Err(CliError::invalid(
            "order",
            format!("at most {MAX_SERIES_ORDER}, got {order}"),
        ));
    }
    let mut run = inp.run(kind, Some(rho), len, "ring");
    run.epsilon = Some(eps);
    Ok(Box::new(move || {
        let started = Instant::now();
        let space = StateSpace::for_kind(kind, len)?;
        let f = space.occupation(0);
        let terms = series_terms(kind, len, rho, eps, order, &f, SeriesOptions::default())?;
        let resolvent = resolvent_series_terms(kind, len, rho, eps, order, &f)?;
        let mu = stationary_distribution(&build_ew_generator(kind, len, rho, eps)?)?.probabilities;
        let exact = dot(&mu, &f);
        let secs = started.elapsed().as_secs_f64();
        let ratio = 2.0 * eps.abs() / terms.env_gap;
        let mut records = Vec::new();
        let mut failed = Vec::new();
        for (n, (&t, &r)) in terms.terms.iter().zip(&resolvent).enumerate() {
            let at = [Some(n as f64), None, None];
            let bound = ratio.powi(n as i32 + 1) * terms.centered_norm;
            if t.abs() > bound + 1e-8 {
                failed.push(format!("term {n} = {t:e} exceeds its bound {bound:e}"));
            }
            records.push(ResultRecord::exact(&run, t).named("term").at(at).timed(secs));
            records.push(ResultRecord::exact(&run, r).named("resolvent-term").at(at).timed(secs));
            records.push(ResultRecord::exact(&run, bound).named("bound").at(at).timed(secs));
        }
        records.push(ResultRecord::exact(&run, exact).named("exact-mean").timed(secs));
        records.push(
            ResultRecord::exact(&run, terms.partial_sum(order))
                .named("partial-sum")
                .at([Some(order as f64), None, None])
                .timed(secs),
        );
        records.push(ResultRecord::exact(&run, ratio).named("ratio").timed(secs));
        records.push(
            ResultRecord::exact(&run, terms.truncated_at)
                .named("truncation-time")
                .timed(secs),
        );
        let failure = (!failed.is_empty()).then(|| CliError::Runtime {
            code: "series-bound",
            message: failed.join("; "),
        });
        Ok(Report {
            records,
            plot: None,
            failure,
        })
    }))
}

fn figure3(inp: &Inputs) -> Result<Job, CliError> {
    inp.topology("ring")?;
    let kind = inp.kind()?;
    let rho = inp.rho(0.5)?;
    let len = inp.sites(256);
    let env = check(EnvParams::new(kind, rho, Topology::Ring(len)))?;
    let grid = inp
        .p
        .eps_grid
        .clone()
        .unwrap_or_else(|| (-8..=8).map(|i| f64::from(i) * 0.05).collect());
    for &e in &grid {
        check(validate_epsilon(e))?;
    }
    let horizon = inp.horizon(2000.0)?;
    let burn = inp.burn_in(horizon)?;
    let plan = inp.plan(20)?;
    let mut run = inp.run(kind, Some(rho), len, "ring");
    run.horizon = Some(horizon);
    run.replicas = Some(plan.replicas);
    run.seed = Some(plan.seed);
    Ok(Box::new(move || {
        let b = burn_in_or_default(burn, kind, rho, horizon)?;
        let mut records = Vec::new();
        let mut points = Vec::new();
        for &eps in &grid {
            let v = estimate_velocity(&env, eps, horizon, b, &plan)?;
            records.push(ResultRecord::estimate(&run, &v).with_epsilon(eps).at([Some(b), None, None]));
            points.push((eps, v.value, 1.96 * v.se));
        }
        Ok(Report {
            records,
            plot: Some(Series {
                title: "Walker velocity against epsilon",
                x_label: "epsilon",
                y_label: "velocity",
                points,
            }),
            failure: None,
        })
    }))
}
