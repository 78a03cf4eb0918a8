//! Graphical construction of the spin dynamics.
//!
//! Every site carries a Poisson clock; each ring carries a Bernoulli(rho)
//! coin. A ring is *legal* when the kinetic constraint holds at that
//! instant, and a legal ring overwrites the site with its coin. Clock times
//! and coins are counter-based functions of `(seed, site, ring index)`, so a
//! schedule is never stored and any number of processes can be driven by
//! the same one.

use std::ops::Range;

use crate::env::{constraint_at, EnvKind, SpinConfiguration};
use crate::error::{invalid, Error, Result};
use crate::rng::{index_hash, lane_hash, stream_key, unit_open};

/// Largest admissible horizon.
pub const MAX_HORIZON: f64 = 1_099_511_627_776.0; // 2^40

/// One clock ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClockEvent {
    pub time: f64,
    pub site: usize,
    pub coin: u8,
}

/// What a ring did to the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EventOutcome {
    pub legal: bool,
    pub flipped: bool,
    pub old_value: u8,
    pub new_value: u8,
}

/// How lattice sites are mapped onto clock streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SiteKey {
    /// Site `x` reads stream `x`.
    Direct,
    /// Site `x` reads stream `-x mod L` (reflection of a ring about site 0).
    RingReflection,
    /// Site `x` reads stream `L - 1 - x` (mirror image of a segment).
    Mirror,
}

/// Lazily generated family of per-site clock streams.
#[derive(Debug, Clone, PartialEq)]
pub struct EventSchedule {
    seed: u64,
    horizon: f64,
    rho: f64,
    rate: f64,
    len: usize,
    active: Range<usize>,
    key: SiteKey,
}

impl EventSchedule {
    /// Rate-1 clocks on `len` sites with Bernoulli(`rho`) coins.
    pub fn new(seed: u64, horizon: f64, len: usize, rho: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon <= MAX_HORIZON) {
            return Err(invalid("horizon", format!("must lie in (0, 2^40], got {horizon}")));
        }
        crate::env::validate_density(rho)?;
        if len == 0 {
            return Err(invalid("L", "empty lattice"));
        }
        Ok(EventSchedule {
            seed,
            horizon,
            rho,
            rate: 1.0,
            len,
            active: 0..len,
            key: SiteKey::Direct,
        })
    }

    /// Clock schedule matching the ring rate of `kind`.
    pub fn for_kind(seed: u64, horizon: f64, len: usize, rho: f64, kind: EnvKind) -> Result<Self> {
        Ok(Self::new(seed, horizon, len, rho)?.with_rate(kind.ring_rate()))
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = rate;
        self
    }

    pub fn with_site_key(mut self, key: SiteKey) -> Self {
        self.key = key;
        self
    }

    /// Restricts the clocks to the sites in `range`; all other sites never
    /// ring. For the East model on a segment, restricting to `[a, L)` leaves
    /// the evolution of the sites `>= a` unchanged, event for event.
    pub fn with_active_range(mut self, range: Range<usize>) -> Self {
        self.active = range.start.min(self.len)..range.end.min(self.len);
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn active_range(&self) -> Range<usize> {
        self.active.clone()
    }

    #[inline]
    fn stream_of(&self, site: usize) -> u64 {
        let key = match self.key {
            SiteKey::Direct => site,
            SiteKey::RingReflection => (self.len - site) % self.len,
            SiteKey::Mirror => self.len - 1 - site,
        };
        key as u64
    }

    /// Waiting time and coin of ring `index` of the stream with key `key`.
    #[inline]
    fn draw(&self, key: u64, index: u64) -> (f64, u8) {
        let c = index_hash(key, index);
        let gap = -unit_open(lane_hash(c, 0)).ln() / self.rate;
        let coin = u8::from(unit_open(lane_hash(c, 1)) < self.rho);
        (gap, coin)
    }

    /// Time-ordered iterator over all rings up to the horizon.
    pub fn cursor(&self) -> EventCursor {
        EventCursor::new(self.clone())
    }

    /// Earliest ring strictly after `after`; ties go to the lower site.
    pub fn next_event(&self, after: f64) -> Result<ClockEvent> {
        let exhausted = Error::ScheduleExhausted {
            after,
            horizon: self.horizon,
        };
        if after >= self.horizon {
            return Err(exhausted);
        }
        let mut cursor = self.cursor();
        while let Some(ev) = cursor.next_event() {
            if ev.time > after {
                return Ok(ev);
            }
        }
        Err(exhausted)
    }

    /// All rings of one site up to the horizon, in time order.
    pub fn site_events(&self, site: usize) -> Vec<ClockEvent> {
        let key = stream_key(self.seed, self.stream_of(site));
        let mut out = Vec::new();
        let mut t = 0.0;
        let mut k = 0u64;
        loop {
            let (gap, coin) = self.draw(key, k);
            t += gap;
            if t > self.horizon {
                return out;
            }
            out.push(ClockEvent {
                time: t,
                site,
                coin,
            });
            k += 1;
        }
    }
}

/// Merges the per-site streams of a schedule in time order.
///
/// The pending ring of every site sits in the leaves of a winner tree whose
/// nodes store `(time, site)` of the earliest ring below them (lower site on
/// ties); a pop replays the matches on one leaf-to-root path only.
#[derive(Debug, Clone)]
pub struct EventCursor {
    schedule: EventSchedule,
    tree: Vec<(f64, u32)>,
    leaves: usize,
    /// Per site: index and coin of the pending ring, the gap and coin of
    /// the ring after it (drawn one step ahead so the tree update does not
    /// wait on the hash), and the stream key.
    index: Vec<u64>,
    coins: Vec<u8>,
    ahead: Vec<(f64, u8)>,
    keys: Vec<u64>,
    delivered: u64,
}

#[inline]
fn earlier(a: (f64, u32), b: (f64, u32)) -> (f64, u32) {
    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

impl EventCursor {
    fn new(schedule: EventSchedule) -> Self {
        let len = schedule.len;
        let keys: Vec<u64> = (0..len)
            .map(|s| stream_key(schedule.seed, schedule.stream_of(s)))
            .collect();
        let leaves = len.next_power_of_two();
        let mut tree = vec![(f64::INFINITY, u32::MAX); 2 * leaves];
        let mut coins = vec![0u8; len];
        let mut ahead = vec![(f64::INFINITY, 0u8); len];
        for site in 0..len {
            tree[leaves + site] = (f64::INFINITY, site as u32);
        }
        for site in schedule.active.clone() {
            let (t, coin) = schedule.draw(keys[site], 0);
            tree[leaves + site].0 = t;
            coins[site] = coin;
            ahead[site] = schedule.draw(keys[site], 1);
        }
        for n in (1..leaves).rev() {
            tree[n] = earlier(tree[2 * n], tree[2 * n + 1]);
        }
        EventCursor {
            schedule,
            tree,
            leaves,
            index: vec![0u64; len],
            coins,
            ahead,
            keys,
            delivered: 0,
        }
    }

    pub fn schedule(&self) -> &EventSchedule {
        &self.schedule
    }

    /// Number of rings delivered so far.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    /// Time of the next ring, or infinity once the horizon is passed.
    #[inline]
    pub fn peek_time(&self) -> f64 {
        let t = self.tree[1].0;
        if t > self.schedule.horizon {
            f64::INFINITY
        } else {
            t
        }
    }

    /// Pops the next ring, or `None` past the horizon.
    #[inline]
    pub fn next_event(&mut self) -> Option<ClockEvent> {
        let (time, site) = self.tree[1];
        if time > self.schedule.horizon {
            return None;
        }
        let s = site as usize;
        let coin = self.coins[s];
        let (gap, next_coin) = self.ahead[s];
        let k = self.index[s] + 1;
        self.index[s] = k;
        self.coins[s] = next_coin;
        self.ahead[s] = self.schedule.draw(self.keys[s], k + 1);
        let mut n = self.leaves + s;
        let mut best = (time + gap, site);
        self.tree[n] = best;
        while n > 1 {
            best = earlier(best, self.tree[n ^ 1]);
            n >>= 1;
            self.tree[n] = best;
        }
        self.delivered += 1;
        Some(ClockEvent {
            time,
            site: s,
            coin,
        })
    }
}

/// A configuration advanced incrementally through a schedule.
#[derive(Debug, Clone)]
pub struct EnvProcess {
    kind: EnvKind,
    config: SpinConfiguration,
    cursor: EventCursor,
}

impl EnvProcess {
    pub fn new(config: SpinConfiguration, kind: EnvKind, schedule: &EventSchedule) -> Result<Self> {
        check_schedule(&config, schedule)?;
        Ok(EnvProcess {
            kind,
            config,
            cursor: schedule.cursor(),
        })
    }

    pub fn config(&self) -> &SpinConfiguration {
        &self.config
    }

    pub fn events(&self) -> u64 {
        self.cursor.delivered()
    }

    /// Applies every ring up to time `t`.
    pub fn run_until(&mut self, t: f64) {
        while self.cursor.peek_time() <= t {
            match self.cursor.next_event() {
                Some(ev) => {
                    apply_event_in_place(&mut self.config, self.kind, &ev);
                }
                None => break,
            }
        }
    }
}

/// Receives every processed ring together with the post-event configuration.
pub trait Observer {
    fn observe(
        &mut self,
        time: f64,
        event: &ClockEvent,
        outcome: &EventOutcome,
        config: &SpinConfiguration,
    );
}

impl Observer for () {
    fn observe(&mut self, _: f64, _: &ClockEvent, _: &EventOutcome, _: &SpinConfiguration) {}
}

impl<F> Observer for F
where
    F: FnMut(f64, &ClockEvent, &EventOutcome, &SpinConfiguration),
{
    fn observe(&mut self, t: f64, e: &ClockEvent, o: &EventOutcome, c: &SpinConfiguration) {
        self(t, e, o, c)
    }
}

impl<A: Observer, B: Observer> Observer for (A, B) {
    fn observe(&mut self, t: f64, e: &ClockEvent, o: &EventOutcome, c: &SpinConfiguration) {
        self.0.observe(t, e, o, c);
        self.1.observe(t, e, o, c);
    }
}

impl Observer for [&mut dyn Observer] {
    fn observe(&mut self, t: f64, e: &ClockEvent, o: &EventOutcome, c: &SpinConfiguration) {
        for obs in self.iter_mut() {
            obs.observe(t, e, o, c);
        }
    }
}

/// Applies one ring in place.
#[inline]
pub fn apply_event_in_place(
    config: &mut SpinConfiguration,
    kind: EnvKind,
    event: &ClockEvent,
) -> EventOutcome {
    let old = config.bits()[event.site];
    let legal = constraint_at(kind, config, event.site as i64) == 1;
    let new = if legal { event.coin } else { old };
    if new != old {
        config.set_unchecked(event.site, new);
    }
    EventOutcome {
        legal,
        flipped: new != old,
        old_value: old,
        new_value: new,
    }
}

/// Applies one ring, returning the new configuration.
pub fn apply_event(
    config: &SpinConfiguration,
    kind: EnvKind,
    event: &ClockEvent,
) -> Result<(SpinConfiguration, EventOutcome)> {
    if event.site >= config.len() {
        return Err(Error::SiteOutOfRange {
            site: event.site as i64,
            len: config.len(),
        });
    }
    let mut next = config.clone();
    let outcome = apply_event_in_place(&mut next, kind, event);
    Ok((next, outcome))
}

fn check_schedule(config: &SpinConfiguration, schedule: &EventSchedule) -> Result<()> {
    if schedule.len() != config.len() {
        return Err(invalid(
            "schedule",
            format!("{} clock streams for {} sites", schedule.len(), config.len()),
        ));
    }
    Ok(())
}

/// Runs the dynamics over the whole schedule, feeding every ring to
/// `observer`.
pub fn evolve<O: Observer + ?Sized>(
    config: &SpinConfiguration,
    kind: EnvKind,
    schedule: &EventSchedule,
    observer: &mut O,
) -> Result<SpinConfiguration> {
    check_schedule(config, schedule)?;
    let mut state = config.clone();
    let mut cursor = schedule.cursor();
    while let Some(ev) = cursor.next_event() {
        let outcome = apply_event_in_place(&mut state, kind, &ev);
        observer.observe(ev.time, &ev, &outcome, &state);
    }
    Ok(state)
}

/// Time of the first legal ring at `site`, or `+inf` if none occurs before
/// the horizon. Evolution stops as soon as the ring is found.
pub fn first_legal_ring_time(
    config: &SpinConfiguration,
    kind: EnvKind,
    schedule: &EventSchedule,
    site: usize,
) -> Result<f64> {
    check_schedule(config, schedule)?;
    if site >= config.len() {
        return Err(Error::SiteOutOfRange {
            site: site as i64,
            len: config.len(),
        });
    }
    let mut state = config.clone();
    let mut cursor = schedule.cursor();
    while let Some(ev) = cursor.next_event() {
        let outcome = apply_event_in_place(&mut state, kind, &ev);
        if ev.site == site && outcome.legal {
            return Ok(ev.time);
        }
    }
    Ok(f64::INFINITY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::Topology;

    fn ring(s: &str) -> SpinConfiguration {
        SpinConfiguration::from_str_bits(s, Topology::Ring(s.len())).unwrap()
    }

    #[test]
    fn next_event_is_reproducible() {
        let s = EventSchedule::new(9, 10.0, 16, 0.5).unwrap();
        let a = s.next_event(0.3).unwrap();
        let b = s.next_event(0.3).unwrap();
        assert_eq!(a, b);
        assert!(a.time > 0.3);
        assert!(matches!(s.next_event(10.0), Err(Error::ScheduleExhausted { .. })));
    }

    #[test]
    fn cursor_is_time_ordered_and_matches_site_streams() {
        let s = EventSchedule::new(3, 20.0, 12, 0.4).unwrap();
        let mut c = s.cursor();
        let mut last = 0.0;
        let mut per_site = vec![Vec::new(); 12];
        while let Some(ev) = c.next_event() {
            assert!(ev.time >= last);
            last = ev.time;
            per_site[ev.site].push(ev);
        }
        for (site, evs) in per_site.iter().enumerate() {
            assert_eq!(evs, &s.site_events(site));
        }
    }

    #[test]
    fn event_count_is_poisson() {
        let (l, t) = (64usize, 50.0);
        let s = EventSchedule::new(21, t, l, 0.5).unwrap();
        let mut c = s.cursor();
        let mut n = 0.0;
        while c.next_event().is_some() {
            n += 1.0;
        }
        let mean = l as f64 * t;
        assert!((n - mean).abs() < 3.0 * mean.sqrt(), "{n}");
    }

    #[test]
    fn blocked_ring_leaves_configuration_unchanged() {
        let c = ring("0110");
        for coin in [0, 1] {
            let ev = ClockEvent {
                time: 1.0,
                site: 1,
                coin,
            };
            let (next, out) = apply_event(&c, EnvKind::East, &ev).unwrap();
            assert!(!out.legal && !out.flipped);
            assert_eq!(next, c);
        }
    }

    #[test]
    fn legal_ring_refreshes_to_coin() {
        let c = ring("0010");
        let ev = ClockEvent {
            time: 1.0,
            site: 0,
            coin: 1,
        };
        let (next, out) = apply_event(&c, EnvKind::East, &ev).unwrap();
        assert_eq!(
            out,
            EventOutcome {
                legal: true,
                flipped: true,
                old_value: 0,
                new_value: 1
            }
        );
        assert_eq!(next.to_string(), "1010");
        let same = ClockEvent { coin: 0, ..ev };
        let (_, out) = apply_event(&c, EnvKind::East, &same).unwrap();
        assert!(out.legal && !out.flipped);
    }

    #[test]
    fn observers_do_not_change_the_evolution() {
        let c = ring("0101100100");
        let s = EventSchedule::new(77, 30.0, 10, 0.5).unwrap();
        let plain = evolve(&c, EnvKind::East, &s, &mut ()).unwrap();
        let mut count = 0usize;
        let mut counter = |_: f64, _: &ClockEvent, o: &EventOutcome, _: &SpinConfiguration| {
            if o.flipped {
                count += 1;
            }
        };
        let watched = evolve(&c, EnvKind::East, &s, &mut counter).unwrap();
        assert_eq!(plain, watched);
        assert!(count > 0);
    }

    #[test]
    fn no_events_before_first_ring() {
        let c = ring("010");
        let s = EventSchedule::new(1, 1e-9, 3, 0.5).unwrap();
        assert_eq!(evolve(&c, EnvKind::East, &s, &mut ()).unwrap(), c);
        assert_eq!(
            first_legal_ring_time(&c, EnvKind::East, &s, 0).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn legality_matches_constraint() {
        let c = ring("0110100111");
        let s = EventSchedule::new(5, 40.0, 10, 0.5).unwrap();
        let mut state = c.clone();
        let mut cursor = s.cursor();
        while let Some(ev) = cursor.next_event() {
            let expected = crate::env::constraint(EnvKind::FA1f, &state, ev.site as i64).unwrap();
            let out = apply_event_in_place(&mut state, EnvKind::FA1f, &ev);
            assert_eq!(out.legal, expected == 1);
        }
    }
}
