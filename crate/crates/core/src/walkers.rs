//! Walkers on top of the spin dynamics: the ε-random walk, the degenerate
//! edge walker and the East front.

use crate::env::{sample_equilibrium, EnvKind, EnvParams, SpinConfiguration, Topology};
use crate::error::{invalid, Error, Result};
use crate::graphical::{
    apply_event_in_place, ClockEvent, EventCursor, EventOutcome, EventSchedule, SiteKey,
};
use crate::rng::{derive_seed, seeded_rng, MarkedClock};

/// Stream index of the walker clock. Site streams use indices below 2^32.
const WALKER_STREAM: u64 = u64::MAX;

/// Sites a degenerate walker or front must keep from either end of a segment.
pub const BOUNDARY_MARGIN: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WalkerParams {
    pub epsilon: f64,
}

impl WalkerParams {
    pub fn new(epsilon: f64) -> Result<Self> {
        validate_epsilon(epsilon)?;
        Ok(WalkerParams { epsilon })
    }
}

pub fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.abs() <= 0.5 {
        Ok(())
    } else {
        Err(invalid(
            "epsilon",
            format!("must lie in [-1/2, 1/2], got {epsilon}"),
        ))
    }
}

/// Jump rates `(right, left)` of the ε-walker standing on a site with
/// occupation `occ`. They always sum to 1.
pub fn walker_rates(epsilon: f64, occ: u8) -> Result<(f64, f64)> {
    validate_epsilon(epsilon)?;
    let s = 2.0 * f64::from(occ.min(1)) - 1.0;
    Ok((0.5 + epsilon * s, 0.5 - epsilon * s))
}

/// Mean displacement rate `2ε(2occ - 1)`.
pub fn local_drift(epsilon: f64, occ: u8) -> Result<f64> {
    validate_epsilon(epsilon)?;
    Ok(2.0 * epsilon * (2.0 * f64::from(occ.min(1)) - 1.0))
}

/// Environment plus walker on a ring. The unwrapped position is kept as
/// `winding * L + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState {
    pub config: SpinConfiguration,
    pub winding: i64,
    pub offset: usize,
    pub t: f64,
}

impl JointState {
    pub fn position(&self) -> i64 {
        self.winding * self.config.len() as i64 + self.offset as i64
    }

    /// Occupation at `x` sites from the walker.
    #[inline]
    pub fn seen(&self, x: i64) -> u8 {
        self.config.occ(self.offset as i64 + x)
    }
}

/// A state change of the joint process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum JointChange {
    Env {
        event: ClockEvent,
        outcome: EventOutcome,
    },
    Walker {
        step: i8,
    },
}

/// Receives every state change of a joint process.
pub trait JointObserver {
    fn observe(&mut self, change: &JointChange, state: &JointState);
}

impl JointObserver for () {
    fn observe(&mut self, _: &JointChange, _: &JointState) {}
}

impl<F: FnMut(&JointChange, &JointState)> JointObserver for F {
    fn observe(&mut self, change: &JointChange, state: &JointState) {
        self(change, state)
    }
}

/// The joint process (environment, ε-walker) driven by a graphical schedule
/// and an independent rate-1 walker clock.
#[derive(Debug, Clone)]
pub struct JointProcess {
    kind: EnvKind,
    epsilon: f64,
    mirrored: bool,
    state: JointState,
    env: EventCursor,
    walker: MarkedClock,
    horizon: f64,
    walker_jumps: u64,
}

impl JointProcess {
    /// Starts from `initial`, or from an equilibrium draw when `None`.
    pub fn new(
        params: &EnvParams,
        epsilon: f64,
        horizon: f64,
        seed: u64,
        initial: Option<SpinConfiguration>,
    ) -> Result<Self> {
        params.validate()?;
        let config = match initial {
            Some(c) => c,
            None => sample_equilibrium(params, &mut seeded_rng(derive_seed(seed, "init", 0)))?,
        };
        if config.topology() != params.topology {
            return Err(invalid("config", "topology does not match the parameters"));
        }
        let schedule =
            EventSchedule::for_kind(seed, horizon, config.len(), params.rho, params.kind)?;
        Self::with_schedule(params.kind, epsilon, schedule, seed, config)
    }

    /// Runs on an explicit schedule; the walker clock is keyed on
    /// `walker_seed`.
    pub fn with_schedule(
        kind: EnvKind,
        epsilon: f64,
        schedule: EventSchedule,
        walker_seed: u64,
        config: SpinConfiguration,
    ) -> Result<Self> {
        validate_epsilon(epsilon)?;
        kind.validate()?;
        if !config.topology().is_ring() {
            return Err(invalid("topology", "the ε-walker runs on a ring"));
        }
        if schedule.len() != config.len() {
            return Err(invalid("schedule", "schedule and configuration sizes differ"));
        }
        Ok(JointProcess {
            kind,
            epsilon,
            mirrored: false,
            horizon: schedule.horizon(),
            env: schedule.cursor(),
            walker: MarkedClock::new(walker_seed, WALKER_STREAM, 1.0, 0.0),
            state: JointState {
                config,
                winding: 0,
                offset: 0,
                t: 0.0,
            },
            walker_jumps: 0,
        })
    }

    /// Reads the walker marks against the left rate instead of the right
    /// one. Together with a reflected schedule this realizes the mirror
    /// image of a process pathwise.
    pub fn mirrored(mut self) -> Self {
        self.mirrored = true;
        self
    }

    pub fn state(&self) -> &JointState {
        &self.state
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Environment rings plus walker jumps processed so far.
    pub fn events(&self) -> u64 {
        self.env.delivered() + self.walker_jumps
    }

    /// Time of the next state change, infinite past the horizon.
    #[inline]
    pub fn next_time(&self) -> f64 {
        let w = self.walker.peek().0;
        let w = if w > self.horizon { f64::INFINITY } else { w };
        w.min(self.env.peek_time())
    }

    /// Processes the next event, or returns `None` past the horizon.
    #[inline]
    pub fn step(&mut self) -> Option<JointChange> {
        let env_t = self.env.peek_time();
        let (walk_t, mark) = self.walker.peek();
        if walk_t < env_t {
            if walk_t > self.horizon {
                return None;
            }
            let occ = self.state.config.bits()[self.state.offset];
            let s = self.epsilon * (2.0 * f64::from(occ) - 1.0);
            let step = if self.mirrored {
                if mark < 0.5 - s {
                    -1
                } else {
                    1
                }
            } else if mark < 0.5 + s {
                1
            } else {
                -1
            };
            self.move_walker(step);
            self.state.t = walk_t;
            self.walker.advance();
            self.walker_jumps += 1;
            Some(JointChange::Walker { step })
        } else {
            let event = self.env.next_event()?;
            let outcome = apply_event_in_place(&mut self.state.config, self.kind, &event);
            self.state.t = event.time;
            Some(JointChange::Env { event, outcome })
        }
    }

    #[inline]
    fn move_walker(&mut self, step: i8) {
        let l = self.state.config.len();
        if step > 0 {
            self.state.offset += 1;
            if self.state.offset == l {
                self.state.offset = 0;
                self.state.winding += 1;
            }
        } else if self.state.offset == 0 {
            self.state.offset = l - 1;
            self.state.winding -= 1;
        } else {
            self.state.offset -= 1;
        }
    }

    /// Processes every event up to time `t` (capped at the horizon) and
    /// sets the clock to `t`.
    pub fn run_until<O: JointObserver + ?Sized>(&mut self, t: f64, observer: &mut O) {
        let t = t.min(self.horizon);
        while self.next_time() <= t {
            match self.step() {
                Some(change) => observer.observe(&change, &self.state),
                None => break,
            }
        }
        self.state.t = t;
    }

    /// Runs to time `t` (capped at the horizon), calling `hold(state, dt)`
    /// for every interval of length `dt` during which `state` is constant.
    pub fn run_holding<H: FnMut(&JointState, f64)>(&mut self, t: f64, mut hold: H) {
        let t = t.min(self.horizon);
        let mut last = self.state.t;
        loop {
            let next = self.next_time();
            if next > t {
                break;
            }
            hold(&self.state, next - last);
            last = next;
            if self.step().is_none() {
                break;
            }
        }
        hold(&self.state, t - last);
        self.state.t = t;
    }
}

/// Runs the joint process to `horizon` from an equilibrium draw, feeding
/// every state change to `observer`, and returns the final state.
pub fn evolve_joint<O: JointObserver + ?Sized>(
    params: &EnvParams,
    epsilon: f64,
    horizon: f64,
    seed: u64,
    observer: &mut O,
) -> Result<JointState> {
    let mut process = JointProcess::new(params, epsilon, horizon, seed, None)?;
    process.run_until(horizon, observer);
    Ok(process.state().clone())
}

/// Space-reflected companion of a ring run: West dynamics on the mirrored
/// configuration, walker with `-epsilon`, clocks read through the
/// reflection. Its walker position is exactly the negative of the East
/// walker's, event for event.
pub fn reflected_process(
    east: &EnvParams,
    epsilon: f64,
    horizon: f64,
    seed: u64,
    initial: &SpinConfiguration,
) -> Result<(JointProcess, JointProcess)> {
    if east.kind != EnvKind::East {
        return Err(invalid("kind", "the reflection pairs an East run with a West run"));
    }
    let l = initial.len();
    let schedule = EventSchedule::for_kind(seed, horizon, l, east.rho, east.kind)?;
    let forward =
        JointProcess::with_schedule(EnvKind::East, epsilon, schedule.clone(), seed, initial.clone())?;
    let mirror = JointProcess::with_schedule(
        EnvKind::West,
        -epsilon,
        schedule.with_site_key(SiteKey::RingReflection),
        seed,
        initial.reflected_about_origin(),
    )?
    .mirrored();
    Ok((forward, mirror))
}

/// Degenerate walker sitting on a particle-hole edge. `left` is the
/// particle site; the walker position is `left + 1/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWalkerState {
    pub config: SpinConfiguration,
    pub left: i64,
    pub t: f64,
}

impl EdgeWalkerState {
    pub fn y(&self) -> f64 {
        self.left as f64 + 0.5
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontState {
    pub config: SpinConfiguration,
    pub f: i64,
    pub t: f64,
}

/// Jump times and positions of a tracked process, starting with `(0, x0)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    pub times: Vec<f64>,
    pub positions: Vec<i64>,
}

impl Path {
    fn start(x0: i64) -> Self {
        Path {
            times: vec![0.0],
            positions: vec![x0],
        }
    }

    fn push(&mut self, t: f64, x: i64) {
        self.times.push(t);
        self.positions.push(x);
    }

    pub fn last(&self) -> i64 {
        *self.positions.last().expect("paths start non-empty")
    }

    /// Position at time `t` (right-continuous).
    pub fn at(&self, t: f64) -> i64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.positions[i.saturating_sub(1)]
    }
}

fn check_margin(x: i64, len: usize, time: f64) -> Result<()> {
    let m = BOUNDARY_MARGIN as i64;
    if x < m || x > len as i64 - 1 - m {
        Err(Error::BoundaryHit {
            time,
            margin: BOUNDARY_MARGIN,
        })
    } else {
        Ok(())
    }
}

fn check_east_segment(kind: EnvKind, topology: Topology) -> Result<()> {
    if kind != EnvKind::East {
        return Err(invalid("kind", "edge walker and front follow the East dynamics"));
    }
    if topology.is_ring() {
        return Err(invalid("topology", "edge walker and front live on a segment"));
    }
    Ok(())
}

/// First edge at or to the right of `origin`: lowest `k >= origin` with
/// `config(k) = 1`, `config(k + 1) = 0`.
pub fn first_edge(config: &SpinConfiguration, origin: usize) -> Result<i64> {
    let l = config.len() as i64;
    let mut k = origin as i64;
    while k + 1 < l {
        if config.occ(k) == 1 && config.occ(k + 1) == 0 {
            check_margin(k, config.len(), 0.0)?;
            return Ok(k);
        }
        k += 1;
    }
    Err(Error::BoundaryHit {
        time: 0.0,
        margin: BOUNDARY_MARGIN,
    })
}

/// Edge-walker update for one processed ring; returns the new particle
/// site of the edge.
fn edge_update(
    left: i64,
    config: &SpinConfiguration,
    event: &ClockEvent,
    outcome: &EventOutcome,
) -> Result<i64> {
    if !outcome.flipped {
        return Ok(left);
    }
    let s = event.site as i64;
    if s == left && outcome.new_value == 0 {
        let mut k = left - 1;
        while k >= BOUNDARY_MARGIN as i64 {
            if config.occ(k) == 1 {
                return Ok(k);
            }
            k -= 1;
        }
        Err(Error::BoundaryHit {
            time: event.time,
            margin: BOUNDARY_MARGIN,
        })
    } else if s == left + 1 && outcome.new_value == 1 {
        check_margin(left + 1, config.len(), event.time)?;
        Ok(left + 1)
    } else {
        Ok(left)
    }
}

/// Front update for one processed ring.
fn front_update(f: i64, config: &SpinConfiguration, event: &ClockEvent, outcome: &EventOutcome) -> Result<i64> {
    let s = event.site as i64;
    let next = if s == f && outcome.legal && event.coin == 1 {
        f + 1
    } else if s == f - 1 && event.coin == 0 {
        f - 1
    } else {
        return Ok(f);
    };
    check_margin(next, config.len(), event.time)?;
    Ok(next)
}

/// Draws the initial segment configuration and the schedule shared by the
/// edge walker and the front.
pub fn segment_start(
    rho: f64,
    len: usize,
    horizon: f64,
    seed: u64,
) -> Result<(SpinConfiguration, EventSchedule)> {
    let params = EnvParams::new(EnvKind::East, rho, Topology::Segment(len))?;
    let config = sample_equilibrium(&params, &mut seeded_rng(derive_seed(seed, "init", 0)))?;
    let schedule = EventSchedule::new(seed, horizon, len, rho)?;
    Ok((config, schedule))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeWalkerRun {
    pub state: EdgeWalkerState,
    pub path: Path,
    pub events: u64,
}

/// Runs the degenerate edge walker started at the first edge at or to the
/// right of `origin`.
pub fn evolve_degenerate(
    rho: f64,
    topology: Topology,
    origin: usize,
    horizon: f64,
    seed: u64,
) -> Result<EdgeWalkerRun> {
    check_east_segment(EnvKind::East, topology)?;
    let (config, schedule) = segment_start(rho, topology.len(), horizon, seed)?;
    evolve_degenerate_from(config, &schedule, origin)
}

pub fn evolve_degenerate_from(
    mut config: SpinConfiguration,
    schedule: &EventSchedule,
    origin: usize,
) -> Result<EdgeWalkerRun> {
    check_east_segment(EnvKind::East, config.topology())?;
    let mut left = first_edge(&config, origin)?;
    let mut path = Path::start(left);
    let mut cursor = schedule.cursor();
    while let Some(ev) = cursor.next_event() {
        let out = apply_event_in_place(&mut config, EnvKind::East, &ev);
        let next = edge_update(left, &config, &ev, &out)?;
        if next != left {
            left = next;
            path.push(ev.time, left);
        }
    }
    Ok(EdgeWalkerRun {
        state: EdgeWalkerState {
            config,
            left,
            t: schedule.horizon(),
        },
        path,
        events: cursor.delivered(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrontRun {
    pub state: FrontState,
    pub path: Path,
    pub events: u64,
}

/// Runs the front from site `f0`, which must hold a zero.
pub fn evolve_front(
    mut config: SpinConfiguration,
    schedule: &EventSchedule,
    f0: i64,
) -> Result<FrontRun> {
    check_east_segment(EnvKind::East, config.topology())?;
    check_margin(f0, config.len(), 0.0)?;
    if config.occ(f0) != 0 {
        return Err(invalid("front", format!("site {f0} is occupied")));
    }
    let mut f = f0;
    let mut path = Path::start(f);
    let mut cursor = schedule.cursor();
    while let Some(ev) = cursor.next_event() {
        let out = apply_event_in_place(&mut config, EnvKind::East, &ev);
        let next = front_update(f, &config, &ev, &out)?;
        if next != f {
            f = next;
            path.push(ev.time, f);
        }
    }
    Ok(FrontRun {
        state: FrontState {
            config,
            f,
            t: schedule.horizon(),
        },
        path,
        events: cursor.delivered(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledRun {
    /// Particle site of the walker edge (`Y = left + 1/2`).
    pub walker: Path,
    pub front: Path,
    pub invariant_violations: u64,
    pub events: u64,
    pub config: SpinConfiguration,
}

/// Edge walker and front driven by one schedule with `F_0 = Y_0 + 1/2`.
/// Counts the events after which `F < Y + 1/2`.
pub fn coupled_run(rho: f64, len: usize, origin: usize, horizon: f64, seed: u64) -> Result<CoupledRun> {
    let (config, schedule) = segment_start(rho, len, horizon, seed)?;
    coupled_run_from(config, &schedule, origin)
}

pub fn coupled_run_from(
    mut config: SpinConfiguration,
    schedule: &EventSchedule,
    origin: usize,
) -> Result<CoupledRun> {
    check_east_segment(EnvKind::East, config.topology())?;
    let mut left = first_edge(&config, origin)?;
    let mut f = left + 1;
    let mut walker = Path::start(left);
    let mut front = Path::start(f);
    let mut violations = 0u64;
    let mut cursor = schedule.cursor();
    while let Some(ev) = cursor.next_event() {
        let out = apply_event_in_place(&mut config, EnvKind::East, &ev);
        let nl = edge_update(left, &config, &ev, &out)?;
        let nf = front_update(f, &config, &ev, &out)?;
        if nl != left {
            left = nl;
            walker.push(ev.time, left);
        }
        if nf != f {
            f = nf;
            front.push(ev.time, f);
        }
        // F >= Y + 1/2 with Y = left + 1/2
        if f < left + 1 {
            violations += 1;
        }
    }
    Ok(CoupledRun {
        walker,
        front,
        invariant_violations: violations,
        events: cursor.delivered(),
        config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_table() {
        assert_eq!(walker_rates(0.3, 1).unwrap(), (0.8, 0.2));
        let (r, l) = walker_rates(0.3, 0).unwrap();
        assert!((r - 0.2).abs() < 1e-15 && (l - 0.8).abs() < 1e-15);
        assert_eq!(walker_rates(0.0, 1).unwrap(), (0.5, 0.5));
        assert!(walker_rates(0.7, 1).is_err());
        assert!((local_drift(0.1, 1).unwrap() - 0.2).abs() < 1e-15);
        assert!((local_drift(0.1, 0).unwrap() + 0.2).abs() < 1e-15);
        assert_eq!(local_drift(0.0, 1).unwrap(), 0.0);
    }

    #[test]
    fn winding_tracks_unwrapped_position() {
        let p = EnvParams::new(EnvKind::East, 0.5, Topology::Ring(5)).unwrap();
        let mut proc = JointProcess::new(&p, 0.2, 200.0, 3, None).unwrap();
        let mut x = 0i64;
        while let Some(change) = proc.step() {
            if let JointChange::Walker { step } = change {
                x += i64::from(step);
                assert_eq!(proc.state().position(), x);
                assert_eq!(proc.state().offset as i64, x.rem_euclid(5));
            }
        }
    }

    #[test]
    fn edge_walker_left_jump_scans_to_next_particle() {
        let c = SpinConfiguration::from_str_bits("0110010000", Topology::Segment(10)).unwrap();
        assert_eq!(first_edge(&c, 0).unwrap(), 2);
        let mut after = c.clone();
        after.set(5, 0).unwrap();
        let ev = ClockEvent {
            time: 1.0,
            site: 5,
            coin: 0,
        };
        let out = EventOutcome {
            legal: true,
            flipped: true,
            old_value: 1,
            new_value: 0,
        };
        assert_eq!(edge_update(5, &after, &ev, &out).unwrap(), 2);
    }

    #[test]
    fn edge_walker_right_jump() {
        let mut c = SpinConfiguration::from_str_bits("0001000000", Topology::Segment(10)).unwrap();
        let ev = ClockEvent {
            time: 1.0,
            site: 4,
            coin: 1,
        };
        let out = apply_event_in_place(&mut c, EnvKind::East, &ev);
        assert!(out.flipped);
        assert_eq!(edge_update(3, &c, &ev, &out).unwrap(), 4);
    }

    #[test]
    fn front_moves_and_stays_on_a_zero() {
        let mut c = SpinConfiguration::from_str_bits("1110001111", Topology::Segment(10)).unwrap();
        let up = ClockEvent {
            time: 1.0,
            site: 4,
            coin: 1,
        };
        let out = apply_event_in_place(&mut c, EnvKind::East, &up);
        let f = front_update(4, &c, &up, &out).unwrap();
        assert_eq!(f, 5);
        assert_eq!(c.occ(f), 0);
        let down = ClockEvent {
            time: 2.0,
            site: 4,
            coin: 0,
        };
        let out = apply_event_in_place(&mut c, EnvKind::East, &down);
        assert!(out.legal);
        assert_eq!(front_update(5, &c, &down, &out).unwrap(), 4);
    }

    #[test]
    fn coupling_starts_half_a_site_apart_and_holds() {
        let run = coupled_run(0.5, 512, 400, 40.0, 17).unwrap();
        assert_eq!(run.front.positions[0], run.walker.positions[0] + 1);
        assert_eq!(run.invariant_violations, 0);
        assert!(run.events > 10_000);
    }
}
