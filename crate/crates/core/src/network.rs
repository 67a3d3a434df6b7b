//! Immutable power-network model.
//!
//! A [`PowerNetwork`] is a connected, lossless graph of buses and lines with
//! per-unit injections, voltage magnitudes, rotational inertias, and damping
//! coefficients. Construction validates every invariant once; afterwards the
//! network is immutable and safe to share across threads.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::math;
use crate::{Error, Result};

/// Whether a bus hosts rotating generation or is a load/composite node.
///
/// The distinction matters for fault handling: a faulted generator keeps
/// accelerating under its mechanical input, while a faulted load is
/// reconstructed from power balance once the fault clears.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BusKind {
    Generator,
    Load,
}

/// A network node with its injection and machine parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    /// External bus number (case-file numbering, not necessarily contiguous).
    pub id: usize,
    pub kind: BusKind,
    /// Net per-unit active injection: generation minus load.
    pub p: f64,
    /// Per-unit voltage magnitude, held constant.
    pub v: f64,
    /// Rotational inertia M, per-unit * s^2. Must be positive everywhere so
    /// kinetic energy is defined at every node.
    pub inertia: f64,
    /// Damping / frequency response, per-unit * s. Non-negative.
    pub damping: f64,
}

/// A lossless transmission line with its protective-relay angle limit.
#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    /// External id of one endpoint.
    pub from: usize,
    /// External id of the other endpoint.
    pub to: usize,
    /// Series susceptance, per-unit, positive.
    pub susceptance: f64,
    /// Largest angle difference the relay tolerates, radians, in (0, pi/2].
    pub relay_limit: f64,
}

/// Validated, immutable network.
///
/// Bus order is preserved from construction; phase and frequency vectors used
/// throughout the crate are indexed by bus *position* in [`buses`], not by
/// external id. One bus is the angle reference and its phase is fixed to 0.
///
/// [`buses`]: PowerNetwork::buses
#[derive(Debug, Clone, PartialEq)]
pub struct PowerNetwork {
    buses: Vec<Bus>,
    lines: Vec<Line>,
    reference_bus: usize,
    reference_index: usize,
    index: BTreeMap<usize, usize>,
    /// Positional endpoints per line.
    ends: Vec<(usize, usize)>,
    /// Effective coupling b_kh = susceptance * v_k * v_h per line.
    couplings: Vec<f64>,
    /// Per bus position: (neighbor position, coupling).
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl PowerNetwork {
    /// Builds a network, requiring injections to sum to zero within 1e-9.
    pub fn new(buses: Vec<Bus>, lines: Vec<Line>, reference_bus: usize) -> Result<Self> {
        Self::build(buses, lines, reference_bus, true)
    }

    /// Builds a network after moving any injection residual onto the
    /// reference bus, so the result is balanced exactly.
    pub fn new_balancing_reference(
        mut buses: Vec<Bus>,
        lines: Vec<Line>,
        reference_bus: usize,
    ) -> Result<Self> {
        let residual: f64 = buses.iter().map(|b| b.p).sum();
        let slack = buses
            .iter_mut()
            .find(|b| b.id == reference_bus)
            .ok_or_else(|| Error::Topology(format!("reference bus {reference_bus} not found")))?;
        slack.p -= residual;
        Self::build(buses, lines, reference_bus, true)
    }

    /// Builds a reduced system that may be unbalanced (fault-on topology).
    pub(crate) fn new_unbalanced(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        reference_bus: usize,
    ) -> Result<Self> {
        Self::build(buses, lines, reference_bus, false)
    }

    fn build(
        buses: Vec<Bus>,
        lines: Vec<Line>,
        reference_bus: usize,
        require_balance: bool,
    ) -> Result<Self> {
        if buses.is_empty() {
            return Err(Error::Topology("network has no buses".to_string()));
        }
        let mut index = BTreeMap::new();
        for (pos, bus) in buses.iter().enumerate() {
            if index.insert(bus.id, pos).is_some() {
                return Err(Error::Topology(format!("duplicate bus id {}", bus.id)));
            }
            if !(bus.v.is_finite() && bus.v > 0.0) {
                return Err(Error::Domain(format!("bus {}: voltage must be > 0", bus.id)));
            }
            if !(bus.inertia.is_finite() && bus.inertia > 0.0) {
                return Err(Error::Domain(format!("bus {}: inertia must be > 0", bus.id)));
            }
            if !(bus.damping.is_finite() && bus.damping >= 0.0) {
                return Err(Error::Domain(format!("bus {}: damping must be >= 0", bus.id)));
            }
            if !bus.p.is_finite() {
                return Err(Error::Domain(format!("bus {}: non-finite injection", bus.id)));
            }
        }
        let reference_index = *index
            .get(&reference_bus)
            .ok_or_else(|| Error::Topology(format!("reference bus {reference_bus} not found")))?;

        // Merge parallel circuits by susceptance addition; the flow equations
        // are linear in susceptance for identical endpoints. The merged line
        // keeps the most restrictive relay limit.
        let mut merged: Vec<Line> = Vec::new();
        let mut ends: Vec<(usize, usize)> = Vec::new();
        let mut by_key: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for line in &lines {
            let a = *index
                .get(&line.from)
                .ok_or_else(|| Error::Topology(format!("line endpoint {} not found", line.from)))?;
            let b = *index
                .get(&line.to)
                .ok_or_else(|| Error::Topology(format!("line endpoint {} not found", line.to)))?;
            if a == b {
                return Err(Error::Topology(format!(
                    "line {}-{} connects a bus to itself",
                    line.from, line.to
                )));
            }
            if !(line.susceptance.is_finite() && line.susceptance > 0.0) {
                return Err(Error::Domain(format!(
                    "line {}-{}: susceptance must be > 0",
                    line.from, line.to
                )));
            }
            if !(line.relay_limit > 0.0 && line.relay_limit <= FRAC_PI_2 + 1e-12) {
                return Err(Error::Domain(format!(
                    "line {}-{}: relay limit must lie in (0, pi/2]",
                    line.from, line.to
                )));
            }
            let relay_limit = line.relay_limit.min(FRAC_PI_2);
            let key = (a.min(b), a.max(b));
            match by_key.get(&key) {
                Some(&li) => {
                    merged[li].susceptance += line.susceptance;
                    merged[li].relay_limit = merged[li].relay_limit.min(relay_limit);
                }
                None => {
                    by_key.insert(key, merged.len());
                    merged.push(Line { relay_limit, ..line.clone() });
                    ends.push((a, b));
                }
            }
        }

        let n = buses.len();
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        let mut couplings = Vec::with_capacity(merged.len());
        for (line, &(a, b)) in merged.iter().zip(&ends) {
            let c = line.susceptance * buses[a].v * buses[b].v;
            couplings.push(c);
            adjacency[a].push((b, c));
            adjacency[b].push((a, c));
        }

        if !connected(n, &ends) {
            return Err(Error::Topology("network graph is disconnected".to_string()));
        }

        if require_balance {
            let total: f64 = buses.iter().map(|b| b.p).sum();
            if total.abs() >= 1e-9 {
                return Err(Error::Domain(format!(
                    "injections sum to {total:e}, expected balance within 1e-9"
                )));
            }
        }

        Ok(Self {
            buses,
            lines: merged,
            reference_bus,
            reference_index,
            index,
            ends,
            couplings,
            adjacency,
        })
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    pub fn lines(&self) -> &[Line] {
        &self.lines
    }

    /// External id of the angle-reference bus.
    pub fn reference_bus(&self) -> usize {
        self.reference_bus
    }

    /// Position of the reference bus in [`buses`](Self::buses).
    pub fn reference_index(&self) -> usize {
        self.reference_index
    }

    /// Position of an external bus id, if present.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.index.get(&id).copied()
    }

    /// Positional endpoints of line `li`.
    pub fn line_ends(&self, li: usize) -> (usize, usize) {
        self.ends[li]
    }

    /// Effective coupling `susceptance * v_from * v_to` of line `li`.
    pub fn coupling(&self, li: usize) -> f64 {
        self.couplings[li]
    }

    /// Per-position adjacency list with effective couplings.
    pub fn adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.adjacency
    }

    /// Relay limits in line order.
    pub fn relay_limits(&self) -> Vec<f64> {
        self.lines.iter().map(|l| l.relay_limit).collect()
    }

    /// Copy of the network with every relay limit replaced by `theta_max`.
    pub fn with_uniform_relay_limit(&self, theta_max: f64) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max <= FRAC_PI_2 + 1e-12) {
            return Err(Error::Domain(
                "relay limit must lie in (0, pi/2]".to_string(),
            ));
        }
        let lines = self
            .lines
            .iter()
            .map(|l| Line { relay_limit: theta_max.min(FRAC_PI_2), ..l.clone() })
            .collect();
        Self::build(self.buses.clone(), lines, self.reference_bus, false)
    }

    pub(crate) fn check_dimension(&self, len: usize) -> Result<()> {
        if len != self.buses.len() {
            return Err(Error::Dimension { expected: self.buses.len(), got: len });
        }
        Ok(())
    }
}

fn connected(n: usize, ends: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in ends {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                stack.push(w);
            }
        }
    }
    count == n
}

/// Relay angle limit for a zone-2 distance relay with security parameter
/// `beta_relay`, clamped to pi/2.
///
/// The limit is `2 * asin(1 / sqrt(2 * beta_relay))`; the parameter must
/// exceed 0.5 for the arcsine argument to stay below one. Typical settings
/// are near 1.2, giving a limit of about 1.4 rad.
pub fn relay_limit_from_security(beta_relay: f64) -> Result<f64> {
    if !(beta_relay.is_finite() && beta_relay > 0.5) {
        return Err(Error::Domain(
            "relay security parameter must be > 0.5".to_string(),
        ));
    }
    let raw = 2.0 * math::asin(1.0 / math::sqrt(2.0 * beta_relay));
    Ok(raw.min(FRAC_PI_2))
}
