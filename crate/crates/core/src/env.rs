//! Environment kinds, kinetic constraints, lattice topologies and
//! equilibrium sampling.

use rand::Rng;

use crate::error::{invalid, Error, Result};

/// Hard cap on rejection-sampling attempts for ring configurations.
pub const SAMPLING_RETRY_CAP: u64 = 1_000_000;

/// The four supported spin dynamics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvKind {
    /// Site `x` may refresh only when `x + 1` is empty.
    East,
    /// Site `x` may refresh only when `x - 1` is empty.
    West,
    /// Site `x` may refresh when at least one neighbour is empty.
    FA1f,
    /// Unconstrained spins. At density 1/2 every spin flips at rate `gamma`.
    IndependentSpinFlip { gamma: f64 },
}

impl EnvKind {
    pub fn is_constrained(&self) -> bool {
        !matches!(self, EnvKind::IndependentSpinFlip { .. })
    }

    /// Rate of the Poisson clock attached to each site in the graphical
    /// construction. A legal ring refreshes the spin to a Bernoulli(rho) coin.
    pub fn ring_rate(&self) -> f64 {
        match *self {
            EnvKind::IndependentSpinFlip { gamma } => 2.0 * gamma,
            _ => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EnvKind::East => "east",
            EnvKind::West => "west",
            EnvKind::FA1f => "fa1f",
            EnvKind::IndependentSpinFlip { .. } => "isf",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let EnvKind::IndependentSpinFlip { gamma } = *self {
            if !(gamma > 0.0 && gamma.is_finite()) {
                return Err(invalid("gamma", format!("must be positive, got {gamma}")));
            }
        }
        Ok(())
    }
}

/// Finite realization of the one-dimensional lattice.
///
/// On a `Segment` the sites just outside `[0, L)` are permanently empty
/// ghost sites.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Ring(usize),
    Segment(usize),
}

impl Topology {
    pub fn len(&self) -> usize {
        match *self {
            Topology::Ring(l) | Topology::Segment(l) => l,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_ring(&self) -> bool {
        matches!(self, Topology::Ring(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Topology::Ring(_) => "ring",
            Topology::Segment(_) => "segment",
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.len() < 3 {
            return Err(invalid("L", format!("need at least 3 sites, got {}", self.len())));
        }
        if self.len() > u32::MAX as usize {
            return Err(invalid("L", "lattice too large"));
        }
        Ok(())
    }

    /// Wraps (ring) or range-checks (segment) a site index.
    pub fn resolve(&self, site: i64) -> Result<usize> {
        match *self {
            Topology::Ring(l) => Ok(site.rem_euclid(l as i64) as usize),
            Topology::Segment(l) => {
                if site >= 0 && (site as usize) < l {
                    Ok(site as usize)
                } else {
                    Err(Error::SiteOutOfRange { site, len: l })
                }
            }
        }
    }
}

/// Occupation variables of a finite lattice window, one byte per site
/// holding 0 or 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpinConfiguration {
    bits: Vec<u8>,
    topology: Topology,
}

impl SpinConfiguration {
    pub fn new(bits: Vec<u8>, topology: Topology) -> Result<Self> {
        topology.validate()?;
        if bits.len() != topology.len() {
            return Err(invalid(
                "config",
                format!("{} values for {} sites", bits.len(), topology.len()),
            ));
        }
        if let Some(v) = bits.iter().find(|&&b| b > 1) {
            return Err(invalid("config", format!("occupation {v} is not 0/1")));
        }
        Ok(SpinConfiguration { bits, topology })
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_str_bits(s: &str, topology: Topology) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0),
                '1' => Ok(1),
                other => Err(invalid("config", format!("unexpected character {other:?}"))),
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::new(bits, topology)
    }

    pub fn filled(value: u8, topology: Topology) -> Result<Self> {
        Self::new(vec![value.min(1); topology.len()], topology)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Occupation at an in-range site.
    pub fn get(&self, site: i64) -> Result<u8> {
        let i = self.topology.resolve(site)?;
        Ok(self.bits[i])
    }

    /// Occupation at any integer position: wraps on a ring, ghost sites
    /// outside a segment read as empty.
    #[inline]
    pub fn occ(&self, site: i64) -> u8 {
        let l = self.bits.len() as i64;
        match self.topology {
            Topology::Ring(_) => self.bits[site.rem_euclid(l) as usize],
            Topology::Segment(_) => {
                if site < 0 || site >= l {
                    0
                } else {
                    self.bits[site as usize]
                }
            }
        }
    }

    #[inline]
    pub(crate) fn set_unchecked(&mut self, site: usize, value: u8) {
        self.bits[site] = value;
    }

    pub fn set(&mut self, site: i64, value: u8) -> Result<()> {
        let i = self.topology.resolve(site)?;
        self.bits[i] = value.min(1);
        Ok(())
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 1).count()
    }

    /// Mirror image `x -> L - 1 - x`.
    pub fn reversed(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.reverse();
        SpinConfiguration {
            bits,
            topology: self.topology,
        }
    }

    /// Mirror image about site 0 on a ring: `x -> -x mod L`.
    pub fn reflected_about_origin(&self) -> Self {
        let l = self.bits.len();
        let bits = (0..l).map(|x| self.bits[(l - x) % l]).collect();
        SpinConfiguration {
            bits,
            topology: self.topology,
        }
    }
}

impl std::fmt::Display for SpinConfiguration {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.bits {
            write!(f, "{b}")?;
        }
        Ok(())
    }
}

/// Model parameters of the environment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvParams {
    pub kind: EnvKind,
    pub rho: f64,
    pub topology: Topology,
}

impl EnvParams {
    pub fn new(kind: EnvKind, rho: f64, topology: Topology) -> Result<Self> {
        let p = EnvParams {
            kind,
            rho,
            topology,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.kind.validate()?;
        validate_density(self.rho)?;
        self.topology.validate()
    }

    /// Whether the all-ones configuration must be excluded.
    pub fn excludes_full(&self) -> bool {
        self.topology.is_ring() && self.kind.is_constrained()
    }
}

pub fn validate_density(rho: f64) -> Result<()> {
    if rho > 0.0 && rho < 1.0 {
        Ok(())
    } else {
        Err(invalid("rho", format!("must lie in the open interval (0, 1), got {rho}")))
    }
}

/// Draws from the Bernoulli(rho) product measure. On a ring with a
/// constrained kind the all-ones draw is rejected and redrawn.
pub fn sample_equilibrium<R: Rng + ?Sized>(
    params: &EnvParams,
    rng: &mut R,
) -> Result<SpinConfiguration> {
    params.validate()?;
    let l = params.topology.len();
    let mut bits = vec![0u8; l];
    for _ in 0..SAMPLING_RETRY_CAP {
        for b in bits.iter_mut() {
            *b = u8::from(rng.random::<f64>() < params.rho);
        }
        if !(params.excludes_full() && bits.iter().all(|&b| b == 1)) {
            return Ok(SpinConfiguration {
                bits,
                topology: params.topology,
            });
        }
    }
    Err(Error::SamplingFailure {
        attempts: SAMPLING_RETRY_CAP,
    })
}

/// Kinetic constraint indicator at `site`.
pub fn constraint(kind: EnvKind, config: &SpinConfiguration, site: i64) -> Result<u8> {
    let x = config.topology.resolve(site)? as i64;
    Ok(constraint_at(kind, config, x))
}

#[inline]
pub(crate) fn constraint_at(kind: EnvKind, config: &SpinConfiguration, x: i64) -> u8 {
    match kind {
        EnvKind::East => 1 - config.occ(x + 1),
        EnvKind::West => 1 - config.occ(x - 1),
        EnvKind::FA1f => 1 - config.occ(x - 1) * config.occ(x + 1),
        EnvKind::IndependentSpinFlip { .. } => 1,
    }
}

/// Rate at which `site` flips in configuration `config`.
pub fn flip_rate(kind: EnvKind, config: &SpinConfiguration, site: i64, rho: f64) -> Result<f64> {
    let c = constraint(kind, config, site)?;
    let v = config.get(site)?;
    Ok(flip_rate_from(kind, c, v, rho))
}

#[inline]
pub(crate) fn flip_rate_from(kind: EnvKind, c: u8, v: u8, rho: f64) -> f64 {
    let target = if v == 0 { rho } else { 1.0 - rho };
    kind.ring_rate() * f64::from(c) * target
}
