//! Swing-equation integration, fault application, and clearing.
//!
//! The fault model is a three-phase fault at one bus: during the fault-on
//! interval the faulted bus and its lines are removed and the rest of the
//! system evolves from the pre-fault equilibrium. Clearing restores the full
//! topology instantaneously; phases and frequencies of non-faulted buses are
//! continuous, while the faulted bus is reconstructed according to its kind.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::energy::{energy_breakdown, EnergyBreakdown, Equilibrium};
use crate::math;
use crate::network::{BusKind, Line, PowerNetwork};
use crate::{Error, Result};

/// Phase and frequency-deviation vectors at one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub time: f64,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
}

impl SystemState {
    pub fn new(time: f64, theta: Vec<f64>, omega: Vec<f64>) -> Self {
        Self { time, theta, omega }
    }
}

/// A three-phase fault at one bus lasting `duration` seconds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaultScenario {
    /// External id of the faulted bus.
    pub faulted_bus: usize,
    /// Fault-on duration, seconds, positive.
    pub duration: f64,
}

/// Sampled trajectory with energies recomputed from each stored state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<SystemState>,
    pub energies: Vec<EnergyBreakdown>,
}

/// First relay-limit crossing found along a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SecurityViolation {
    pub time: f64,
    /// Line index in network order.
    pub line: usize,
    /// Angle difference magnitude at the violating sample.
    pub angle: f64,
}

/// The reduced system used while a fault is on.
#[derive(Debug, Clone)]
pub struct FaultOnSystem {
    /// Reduced network: the faulted bus and incident lines removed. The
    /// surviving injections are unchanged, so this network is deliberately
    /// unbalanced; nothing downstream may assume its injections sum to zero.
    pub network: PowerNetwork,
    /// For each reduced position, the position in the original network.
    pub kept: Vec<usize>,
    /// Position of the faulted bus in the original network.
    pub faulted: usize,
}

/// Right-hand side of the swing equations.
///
/// `dtheta_i = omega_i` and
/// `domega_i = (p_i - sum_j b_ij sin(theta_i - theta_j) - gamma_i omega_i) / M_i`.
pub fn swing_rhs(net: &PowerNetwork, state: &SystemState) -> Result<(Vec<f64>, Vec<f64>)> {
    net.check_dimension(state.theta.len())?;
    net.check_dimension(state.omega.len())?;
    let mut dtheta = vec![0.0; net.n()];
    let mut domega = vec![0.0; net.n()];
    rhs_into(net, &state.theta, &state.omega, &mut dtheta, &mut domega);
    Ok((dtheta, domega))
}

fn rhs_into(net: &PowerNetwork, theta: &[f64], omega: &[f64], dtheta: &mut [f64], domega: &mut [f64]) {
    for (i, bus) in net.buses().iter().enumerate() {
        dtheta[i] = omega[i];
        domega[i] = bus.p - bus.damping * omega[i];
    }
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        let flow = net.coupling(li) * math::sin(theta[a] - theta[b]);
        domega[a] -= flow;
        domega[b] += flow;
    }
    for (i, bus) in net.buses().iter().enumerate() {
        domega[i] /= bus.inertia;
    }
}

/// Integrates the swing equations with classical fixed-step RK4.
///
/// The final step is shortened to land exactly on `t_end`. States are
/// recorded every `sample_stride` steps; the initial and final states are
/// always recorded. Returns an error with the blow-up time if the state
/// stops being finite.
pub fn integrate(
    net: &PowerNetwork,
    state0: &SystemState,
    t_end: f64,
    dt: f64,
    sample_stride: usize,
) -> Result<Trajectory> {
    net.check_dimension(state0.theta.len())?;
    net.check_dimension(state0.omega.len())?;
    if !(dt > 0.0) {
        return Err(Error::Domain("time step must be positive".to_string()));
    }
    if !(t_end > state0.time) {
        return Err(Error::Domain("t_end must exceed the initial time".to_string()));
    }
    if sample_stride == 0 {
        return Err(Error::Domain("sample stride must be at least 1".to_string()));
    }

    let n = net.n();
    let mut theta = state0.theta.clone();
    let mut omega = state0.omega.clone();
    let mut t = state0.time;

    let mut k_theta = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut k_omega = [vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    let mut tmp_theta = vec![0.0; n];
    let mut tmp_omega = vec![0.0; n];

    let mut samples = Vec::new();
    samples.push(SystemState::new(t, theta.clone(), omega.clone()));

    let mut step_index = 0usize;
    while t < t_end - 1e-15 {
        let h = dt.min(t_end - t);

        rhs_into(net, &theta, &omega, &mut k_theta[0], &mut k_omega[0]);
        for i in 0..n {
            tmp_theta[i] = theta[i] + 0.5 * h * k_theta[0][i];
            tmp_omega[i] = omega[i] + 0.5 * h * k_omega[0][i];
        }
        rhs_into(net, &tmp_theta, &tmp_omega, &mut k_theta[1], &mut k_omega[1]);
        for i in 0..n {
            tmp_theta[i] = theta[i] + 0.5 * h * k_theta[1][i];
            tmp_omega[i] = omega[i] + 0.5 * h * k_omega[1][i];
        }
        rhs_into(net, &tmp_theta, &tmp_omega, &mut k_theta[2], &mut k_omega[2]);
        for i in 0..n {
            tmp_theta[i] = theta[i] + h * k_theta[2][i];
            tmp_omega[i] = omega[i] + h * k_omega[2][i];
        }
        rhs_into(net, &tmp_theta, &tmp_omega, &mut k_theta[3], &mut k_omega[3]);

        let w = h / 6.0;
        let mut finite = true;
        for i in 0..n {
            theta[i] += w * (k_theta[0][i] + 2.0 * k_theta[1][i] + 2.0 * k_theta[2][i] + k_theta[3][i]);
            omega[i] += w * (k_omega[0][i] + 2.0 * k_omega[1][i] + 2.0 * k_omega[2][i] + k_omega[3][i]);
            finite &= theta[i].is_finite() && omega[i].is_finite();
        }
        t += h;
        step_index += 1;
        if !finite {
            return Err(Error::Divergence { time: t });
        }

        let done = t >= t_end - 1e-15;
        if done || step_index % sample_stride == 0 {
            let time = if done { t_end } else { t };
            samples.push(SystemState::new(time, theta.clone(), omega.clone()));
            if done {
                break;
            }
        }
    }

    let mut energies = Vec::with_capacity(samples.len());
    for s in &samples {
        energies.push(energy_breakdown(net, &s.theta, &s.omega)?);
    }
    Ok(Trajectory { samples, energies })
}

/// Removes the faulted bus and its incident lines.
///
/// The surviving buses keep their injections, so the reduced system is
/// unbalanced by exactly the removed injection. Errors if the bus does not
/// exist or its removal disconnects the rest of the grid.
pub fn faulted_network(net: &PowerNetwork, faulted_bus: usize) -> Result<FaultOnSystem> {
    let faulted = net
        .index_of(faulted_bus)
        .ok_or_else(|| Error::Topology(format!("faulted bus {faulted_bus} not found")))?;
    if net.n() < 3 {
        return Err(Error::Topology(
            "cannot remove a bus from a network with fewer than 3 buses".to_string(),
        ));
    }
    let kept: Vec<usize> = (0..net.n()).filter(|&i| i != faulted).collect();
    let buses = kept.iter().map(|&i| net.buses()[i].clone()).collect();
    let lines: Vec<Line> = net
        .lines()
        .iter()
        .enumerate()
        .filter(|(li, _)| {
            let (a, b) = net.line_ends(*li);
            a != faulted && b != faulted
        })
        .map(|(_, l)| l.clone())
        .collect();
    let reference = if net.reference_index() == faulted {
        net.buses()[kept[0]].id
    } else {
        net.reference_bus()
    };
    let network = PowerNetwork::new_unbalanced(buses, lines, reference).map_err(|e| match e {
        Error::Topology(_) => Error::Topology(format!(
            "removing bus {faulted_bus} disconnects the network"
        )),
        other => other,
    })?;
    Ok(FaultOnSystem { network, kept, faulted })
}

/// Integrates the fault-on interval and returns the full-network state at
/// the instant just before clearing.
///
/// The surviving buses start from the pre-fault equilibrium at rest and
/// follow the reduced dynamics. The faulted bus is not part of the reduced
/// system: a faulted load holds its pre-fault phase as a placeholder, while
/// a faulted generator accelerates freely under its mechanical input,
/// `theta_k(t) = theta_k_pre + p_k t^2 / (2 M_k)`, `omega_k(t) = p_k t / M_k`.
pub fn simulate_fault_on(
    net: &PowerNetwork,
    pre: &Equilibrium,
    scenario: &FaultScenario,
    dt: f64,
) -> Result<SystemState> {
    net.check_dimension(pre.theta_min.len())?;
    if !pre.interior {
        return Err(Error::Domain(
            "pre-fault equilibrium sits on the pi/2 boundary; refusing to simulate".to_string(),
        ));
    }
    if !(scenario.duration > 0.0) {
        return Err(Error::Domain("fault duration must be positive".to_string()));
    }
    let reduced = faulted_network(net, scenario.faulted_bus)?;
    let n_red = reduced.network.n();
    let theta0: Vec<f64> = reduced.kept.iter().map(|&i| pre.theta_min[i]).collect();
    let start = SystemState::new(0.0, theta0, vec![0.0; n_red]);
    let traj = integrate(&reduced.network, &start, scenario.duration, dt, usize::MAX)?;
    let end = traj.samples.last().expect("integration records the final state");

    let mut theta = vec![0.0; net.n()];
    let mut omega = vec![0.0; net.n()];
    for (ri, &orig) in reduced.kept.iter().enumerate() {
        theta[orig] = end.theta[ri];
        omega[orig] = end.omega[ri];
    }
    let f = reduced.faulted;
    let bus = &net.buses()[f];
    match bus.kind {
        BusKind::Load => {
            theta[f] = pre.theta_min[f];
            omega[f] = 0.0;
        }
        BusKind::Generator => {
            let tau = scenario.duration;
            theta[f] = pre.theta_min[f] + bus.p * tau * tau / (2.0 * bus.inertia);
            omega[f] = bus.p * tau / bus.inertia;
        }
    }
    Ok(SystemState::new(scenario.duration, theta, omega))
}

/// Reconstructs the state at the instant just after clearing.
///
/// Non-faulted buses are continuous. A faulted generator takes the frequency
/// from the fault-on energy balance `p tau_f = M omega^2 / 2` (damping is
/// negligible against inertia over the fault interval). A faulted load keeps
/// its frequency and gets its phase from instantaneous power balance against
/// the neighboring phases; among the solutions the one closest to the
/// pre-fault phase is selected.
pub fn clear_fault(
    net: &PowerNetwork,
    state_minus: &SystemState,
    scenario: &FaultScenario,
) -> Result<SystemState> {
    net.check_dimension(state_minus.theta.len())?;
    let f = net
        .index_of(scenario.faulted_bus)
        .ok_or_else(|| Error::Topology(format!("faulted bus {} not found", scenario.faulted_bus)))?;
    let mut theta = state_minus.theta.clone();
    let mut omega = state_minus.omega.clone();
    let bus = &net.buses()[f];
    match bus.kind {
        BusKind::Generator => {
            let w = math::sqrt(2.0 * bus.p.abs() * scenario.duration / bus.inertia);
            omega[f] = if bus.p >= 0.0 { w } else { -w };
        }
        BusKind::Load => {
            theta[f] = reconstruct_load_phase(net, f, &state_minus.theta)?;
            // omega[f] is continuous across clearing and already in place.
        }
    }
    Ok(SystemState::new(state_minus.time, theta, omega))
}

/// Solves `p_i = sum_j b_ij sin(theta_i - phi_j)` for the faulted load phase.
///
/// The flow sum collapses to `A sin(theta_i - phase)`, so the two solution
/// branches are enumerated exactly and the one nearest the pre-fault phase
/// (held in `theta[i]`) wins.
fn reconstruct_load_phase(net: &PowerNetwork, i: usize, theta: &[f64]) -> Result<f64> {
    let mut c = 0.0;
    let mut s = 0.0;
    for &(j, coupling) in &net.adjacency()[i] {
        c += coupling * math::cos(theta[j]);
        s += coupling * math::sin(theta[j]);
    }
    let amplitude = math::hypot(c, s);
    let phase = math::atan2(s, c);
    let p = net.buses()[i].p;
    let prev = theta[i];
    if amplitude < 1e-15 {
        if p.abs() < 1e-12 {
            return Ok(prev);
        }
        return Err(Error::Reconstruction(format!(
            "bus {}: no neighbor coupling can carry injection {p}",
            net.buses()[i].id
        )));
    }
    if p.abs() > amplitude * (1.0 + 1e-12) {
        return Err(Error::Reconstruction(format!(
            "bus {}: injection {p} exceeds maximum transferable power {amplitude}",
            net.buses()[i].id
        )));
    }
    let asin = math::asin((p / amplitude).clamp(-1.0, 1.0));
    let near = |mut root: f64| {
        // shift by whole turns to land within half a turn of the old phase
        while root - prev > PI {
            root -= TAU;
        }
        while root - prev < -PI {
            root += TAU;
        }
        root
    };
    let a = near(phase + asin);
    let b = near(phase + PI - asin);
    Ok(if (a - prev).abs() <= (b - prev).abs() { a } else { b })
}

/// Total energy of the post-clearing state over the full network.
///
/// With the state inside the pi/2 box this can never drop below the
/// equilibrium energy; the debug assertion guards that invariant.
pub fn post_fault_energy(
    net: &PowerNetwork,
    state_plus: &SystemState,
    e_min: f64,
) -> Result<EnergyBreakdown> {
    let e = energy_breakdown(net, &state_plus.theta, &state_plus.omega)?;
    debug_assert!(
        e.total >= e_min - 1e-9,
        "post-fault energy {} below equilibrium energy {e_min}",
        e.total
    );
    Ok(e)
}

/// Scans a trajectory for the first relay-limit crossing.
///
/// Returns the earliest sample and lowest-index line with
/// `|theta_i - theta_j| >= relay_limit`, or `None` when the whole trajectory
/// stays clear.
pub fn check_trajectory_security(traj: &Trajectory, net: &PowerNetwork) -> Option<SecurityViolation> {
    for sample in &traj.samples {
        for (li, line) in net.lines().iter().enumerate() {
            let (a, b) = net.line_ends(li);
            let angle = (sample.theta[a] - sample.theta[b]).abs();
            if angle >= line.relay_limit {
                return Some(SecurityViolation { time: sample.time, line: li, angle });
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::energy::{potential_energy, solve_equilibrium};
    use crate::network::Bus;
    use core::f64::consts::FRAC_PI_2;

    fn bus(id: usize, kind: BusKind, p: f64, m: f64, gamma: f64) -> Bus {
        Bus { id, kind, p, v: 1.0, inertia: m, damping: gamma }
    }

    fn line(from: usize, to: usize, b: f64) -> Line {
        Line { from, to, susceptance: b, relay_limit: FRAC_PI_2 }
    }

    fn two_bus(gamma: f64) -> PowerNetwork {
        PowerNetwork::new(
            vec![
                bus(1, BusKind::Generator, 0.0, 1.0, gamma),
                bus(2, BusKind::Load, 0.0, 1.0, gamma),
            ],
            vec![line(1, 2, 1.0)],
            1,
        )
        .unwrap()
    }

    fn triangle(p1: f64, p2: f64, gamma: f64) -> PowerNetwork {
        PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Generator, p1, 1.0, gamma),
                bus(2, BusKind::Generator, p2, 1.0, gamma),
                bus(3, BusKind::Load, 0.0, 1.0, gamma),
            ],
            vec![line(1, 3, 1.25), line(2, 3, 1.0 / 1.2), line(1, 2, 1.0)],
            3,
        )
        .unwrap()
    }

    #[test]
    fn rhs_vanishes_at_equilibrium() {
        let net = triangle(0.03, 0.06, 0.0);
        let eq = solve_equilibrium(&net).unwrap();
        let state = SystemState::new(0.0, eq.theta_min.clone(), vec![0.0; 3]);
        let (dtheta, domega) = swing_rhs(&net, &state).unwrap();
        assert!(dtheta.iter().all(|x| x.abs() < 1e-10));
        assert!(domega.iter().all(|x| x.abs() < 1e-10));
    }

    #[test]
    fn rhs_two_bus_analytic() {
        let net = two_bus(0.0);
        let x = 0.3;
        let state = SystemState::new(0.0, vec![x, 0.0], vec![0.0, 0.0]);
        let (_, domega) = swing_rhs(&net, &state).unwrap();
        assert!((domega[0] + x.sin()).abs() < 1e-15);
        assert!((domega[1] - x.sin()).abs() < 1e-15);
    }

    #[test]
    fn rhs_matches_momentum_form() {
        // M * domega_i must equal -dU/dtheta_i - (gamma_i / M_i) * (M_i omega_i)
        let net = triangle(0.4, -0.7, 0.3);
        let state = SystemState::new(0.0, vec![0.2, -0.1, 0.0], vec![0.5, -0.2, 0.1]);
        let (_, domega) = swing_rhs(&net, &state).unwrap();
        let g = crate::energy::grad_potential(&net, &state.theta).unwrap();
        for (i, b) in net.buses().iter().enumerate() {
            let lhs = domega[i] * b.inertia;
            let rhs = -g[i] - b.damping * state.omega[i];
            assert!((lhs - rhs).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_at_equilibrium() {
        // the zero-injection equilibrium is exactly stationary
        let net = triangle(0.0, 0.0, 0.0);
        let start = SystemState::new(0.0, vec![0.0; 3], vec![0.0; 3]);
        let traj = integrate(&net, &start, 1.0, 1e-3, 100).unwrap();
        for s in &traj.samples {
            for i in 0..3 {
                assert!(s.theta[i].abs() < 1e-12);
                assert!(s.omega[i].abs() < 1e-12);
            }
        }
        // a solved equilibrium is stationary up to its gradient tolerance
        let net = triangle(0.03, 0.06, 0.0);
        let eq = solve_equilibrium(&net).unwrap();
        let start = SystemState::new(0.0, eq.theta_min.clone(), vec![0.0; 3]);
        let traj = integrate(&net, &start, 1.0, 1e-3, 100).unwrap();
        for s in &traj.samples {
            for i in 0..3 {
                assert!((s.theta[i] - eq.theta_min[i]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn two_bus_small_oscillation_period() {
        let net = two_bus(0.0);
        let start = SystemState::new(0.0, vec![0.01, 0.0], vec![0.0, 0.0]);
        let traj = integrate(&net, &start, 10.0, 1e-3, 1).unwrap();
        // relative angle crosses zero every half period
        let mut crossings = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for s in &traj.samples {
            let d = s.theta[0] - s.theta[1];
            if let Some((tp, dp)) = prev {
                if dp > 0.0 && d <= 0.0 || dp < 0.0 && d >= 0.0 {
                    let frac = dp / (dp - d);
                    crossings.push(tp + frac * (s.time - tp));
                }
            }
            prev = Some((s.time, d));
        }
        assert!(crossings.len() >= 3, "too few crossings: {}", crossings.len());
        let half = crossings[1] - crossings[0];
        let period = 2.0 * half;
        let expected = TAU / 2.0f64.sqrt();
        assert!(
            (period - expected).abs() / expected < 0.01,
            "period {period} vs {expected}"
        );
    }

    #[test]
    fn energy_conserved_without_damping() {
        let net = triangle(0.03, 0.06, 0.0);
        let start = SystemState::new(0.0, vec![0.4, -0.3, 0.0], vec![0.1, 0.0, -0.1]);
        let traj = integrate(&net, &start, 10.0, 1e-3, 50).unwrap();
        let e0 = traj.energies[0].total;
        for e in &traj.energies {
            assert!(
                (e.total - e0).abs() < 1e-4 * (1.0 + e0.abs()),
                "drift {} at some sample",
                e.total - e0
            );
        }
    }

    #[test]
    fn energy_dissipates_with_damping() {
        let net = triangle(0.03, 0.06, 0.5);
        let start = SystemState::new(0.0, vec![0.4, -0.3, 0.0], vec![0.1, 0.0, -0.1]);
        let traj = integrate(&net, &start, 5.0, 1e-3, 20).unwrap();
        for pair in traj.energies.windows(2) {
            assert!(pair[1].total <= pair[0].total + 1e-8);
        }
        // potential never exceeds total, total never exceeds the start
        let e0 = traj.energies[0].total;
        for e in &traj.energies {
            assert!(e.potential <= e.total + 1e-12);
            assert!(e.total <= e0 + 1e-8);
        }
    }

    #[test]
    fn rk4_order_on_two_bus() {
        let net = two_bus(0.0);
        let start = SystemState::new(0.0, vec![0.5, 0.0], vec![0.0, 0.0]);
        let fine = integrate(&net, &start, 2.0, 1e-4, usize::MAX).unwrap();
        let reference = &fine.samples.last().unwrap().theta;
        let err = |dt: f64| {
            let traj = integrate(&net, &start, 2.0, dt, usize::MAX).unwrap();
            let end = &traj.samples.last().unwrap().theta;
            (end[0] - reference[0]).abs().max((end[1] - reference[1]).abs())
        };
        let e1 = err(4e-2);
        let e2 = err(2e-2);
        let ratio = e1 / e2;
        assert!((8.0..=32.0).contains(&ratio), "order ratio {ratio}");
    }

    #[test]
    fn divergence_is_detected() {
        // a frequency near the float limit overflows within one step
        let net = two_bus(0.0);
        let start = SystemState::new(0.0, vec![0.0, 0.0], vec![f64::MAX, -f64::MAX]);
        let err = integrate(&net, &start, 30.0, 10.0, usize::MAX).unwrap_err();
        match err {
            Error::Divergence { time } => assert!((time - 10.0).abs() < 1e-9),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn faulted_triangle_leaves_single_line() {
        let net = triangle(0.03, 0.06, 0.0);
        let reduced = faulted_network(&net, 1).unwrap();
        assert_eq!(reduced.network.n(), 2);
        assert_eq!(reduced.network.lines().len(), 1);
        assert_eq!(reduced.kept, vec![1, 2]);
        let imbalance: f64 = reduced.network.buses().iter().map(|b| b.p).sum();
        assert!((imbalance - (-0.03)).abs() < 1e-12);
    }

    #[test]
    fn removing_path_middle_disconnects() {
        let net = PowerNetwork::new(
            vec![
                bus(1, BusKind::Generator, 0.2, 1.0, 0.0),
                bus(2, BusKind::Load, -0.1, 1.0, 0.0),
                bus(3, BusKind::Load, -0.1, 1.0, 0.0),
            ],
            vec![line(1, 2, 1.0), line(2, 3, 1.0)],
            1,
        )
        .unwrap();
        assert!(matches!(faulted_network(&net, 2), Err(Error::Topology(_))));
        // removing a leaf keeps the rest connected and unbalanced by its p
        let reduced = faulted_network(&net, 3).unwrap();
        let imbalance: f64 = reduced.network.buses().iter().map(|b| b.p).sum();
        assert!((imbalance - 0.1).abs() < 1e-12);
    }

    #[test]
    fn fault_on_limit_of_vanishing_duration() {
        let net = triangle(0.03, 0.06, 0.0);
        let eq = solve_equilibrium(&net).unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 1e-9 };
        let s = simulate_fault_on(&net, &eq, &scenario, 1e-3).unwrap();
        for i in 0..3 {
            assert!((s.theta[i] - eq.theta_min[i]).abs() < 1e-8);
            assert!(s.omega[i].abs() < 1e-6);
        }
    }

    #[test]
    fn faulted_generator_closed_form() {
        // generator with M = 1, p = 1 held at fault for 0.5 s
        let net = PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Generator, 1.0, 1.0, 0.0),
                bus(2, BusKind::Load, -0.5, 1.0, 0.0),
                bus(3, BusKind::Load, -0.5, 1.0, 0.0),
            ],
            vec![line(1, 2, 2.0), line(2, 3, 2.0), line(1, 3, 2.0)],
            2,
        )
        .unwrap();
        let eq = solve_equilibrium(&net).unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 0.5 };
        let s = simulate_fault_on(&net, &eq, &scenario, 1e-3).unwrap();
        assert!((s.omega[0] - 0.5).abs() < 1e-12);
        assert!((s.theta[0] - eq.theta_min[0] - 0.125).abs() < 1e-12);

        // kinetic energy of the faulted machine grows with the square of time
        let s2 = simulate_fault_on(&net, &eq, &FaultScenario { faulted_bus: 1, duration: 1.0 }, 1e-3)
            .unwrap();
        let w1 = 0.5 * s.omega[0] * s.omega[0];
        let w2 = 0.5 * s2.omega[0] * s2.omega[0];
        assert!((w2 / w1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn clearing_reconstructs_load_phase() {
        // faulted load with a single neighbor at phase zero
        let net = PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Load, 0.5, 1.0, 0.0),
                bus(2, BusKind::Generator, 0.0, 1.0, 0.0),
                bus(3, BusKind::Generator, 0.0, 1.0, 0.0),
            ],
            vec![line(1, 2, 1.0), line(2, 3, 5.0)],
            2,
        )
        .unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 0.1 };
        let minus = SystemState::new(0.1, vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]);
        let plus = clear_fault(&net, &minus, &scenario).unwrap();
        assert!((plus.theta[0] - core::f64::consts::FRAC_PI_6).abs() < 1e-12);
        assert_eq!(plus.omega[0], 0.0);
        // non-faulted entries are untouched
        assert_eq!(plus.theta[1], 0.0);
        assert_eq!(plus.theta[2], 0.0);
    }

    #[test]
    fn clearing_zero_injection_load_takes_neighbor_phase() {
        let net = PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Load, 0.0, 1.0, 0.0),
                bus(2, BusKind::Generator, 0.3, 1.0, 0.0),
                bus(3, BusKind::Generator, -0.3, 1.0, 0.0),
            ],
            vec![line(1, 2, 1.0), line(1, 3, 1.0), line(2, 3, 1.0)],
            2,
        )
        .unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 0.1 };
        let minus = SystemState::new(0.1, vec![0.0, 0.4, 0.4], vec![0.0, 0.0, 0.0]);
        let plus = clear_fault(&net, &minus, &scenario).unwrap();
        assert!((plus.theta[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn clearing_fails_when_injection_exceeds_capacity() {
        let net = PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Load, 1.5, 1.0, 0.0),
                bus(2, BusKind::Generator, 0.0, 1.0, 0.0),
                bus(3, BusKind::Generator, 0.0, 1.0, 0.0),
            ],
            vec![line(1, 2, 1.0), line(2, 3, 5.0)],
            2,
        )
        .unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 0.1 };
        let minus = SystemState::new(0.1, vec![0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0]);
        assert!(matches!(
            clear_fault(&net, &minus, &scenario),
            Err(Error::Reconstruction(_))
        ));
    }

    #[test]
    fn faulted_generator_clearing_uses_energy_balance() {
        let net = PowerNetwork::new_balancing_reference(
            vec![
                bus(1, BusKind::Generator, 1.0, 2.0, 0.0),
                bus(2, BusKind::Load, -0.5, 1.0, 0.0),
                bus(3, BusKind::Load, -0.5, 1.0, 0.0),
            ],
            vec![line(1, 2, 2.0), line(2, 3, 2.0), line(1, 3, 2.0)],
            2,
        )
        .unwrap();
        let eq = solve_equilibrium(&net).unwrap();
        let scenario = FaultScenario { faulted_bus: 1, duration: 0.4 };
        let minus = simulate_fault_on(&net, &eq, &scenario, 1e-3).unwrap();
        let plus = clear_fault(&net, &minus, &scenario).unwrap();
        // p tau = M omega^2 / 2  =>  omega = sqrt(2 p tau / M)
        let expected = (2.0 * 1.0 * 0.4 / 2.0f64).sqrt();
        assert!((plus.omega[0] - expected).abs() < 1e-12);
        assert_eq!(plus.theta[0], minus.theta[0]);
    }

    #[test]
    fn post_fault_energy_degenerate_fault() {
        let net = triangle(0.03, 0.06, 0.0);
        let eq = solve_equilibrium(&net).unwrap();
        let state = SystemState::new(0.0, eq.theta_min.clone(), vec![0.0; 3]);
        let e = post_fault_energy(&net, &state, eq.e_min).unwrap();
        assert!((e.total - eq.e_min).abs() < 1e-12);
        assert_eq!(e.kinetic, 0.0);

        // a vanishing fault duration approaches the equilibrium energy
        let scenario = FaultScenario { faulted_bus: 1, duration: 1e-6 };
        let minus = simulate_fault_on(&net, &eq, &scenario, 1e-6).unwrap();
        let plus = clear_fault(&net, &minus, &scenario).unwrap();
        let e = post_fault_energy(&net, &plus, eq.e_min).unwrap();
        assert!((e.total - eq.e_min).abs() < 1e-6);
    }

    #[test]
    fn hand_built_state_energy() {
        let net = triangle(0.03, 0.06, 0.0);
        let state = SystemState::new(0.0, vec![FRAC_PI_2, 0.0, 0.0], vec![0.0; 3]);
        let e = post_fault_energy(&net, &state, 0.0).unwrap();
        assert!((e.total - 2.202_876_110_196_443).abs() < 1e-12);
        assert_eq!(e.total, e.kinetic + e.potential);
    }

    #[test]
    fn security_scan_reports_first_crossing() {
        let mut net = triangle(0.0, 0.0, 0.0);
        net = net.with_uniform_relay_limit(0.5).unwrap();
        let eq = solve_equilibrium(&net).unwrap();
        let calm = SystemState::new(0.0, eq.theta_min.clone(), vec![0.0; 3]);
        let traj = integrate(&net, &calm, 0.5, 1e-2, 1).unwrap();
        assert!(check_trajectory_security(&traj, &net).is_none());

        let synthetic = Trajectory {
            samples: vec![
                SystemState::new(0.0, vec![0.1, 0.0, 0.0], vec![0.0; 3]),
                SystemState::new(1.0, vec![0.6, 0.0, 0.0], vec![0.0; 3]),
            ],
            energies: Vec::new(),
        };
        let hit = check_trajectory_security(&synthetic, &net).unwrap();
        assert_eq!(hit.time, 1.0);
        assert_eq!(hit.line, 0);
        assert!((hit.angle - 0.6).abs() < 1e-15);
    }

    #[test]
    fn potential_stays_below_total_on_undamped_run() {
        let net = triangle(0.03, 0.06, 0.0);
        let start = SystemState::new(0.0, vec![0.3, -0.2, 0.0], vec![0.2, -0.1, 0.0]);
        let traj = integrate(&net, &start, 3.0, 1e-3, 10).unwrap();
        let e0 = traj.energies[0].total;
        for (s, e) in traj.samples.iter().zip(&traj.energies) {
            let u = potential_energy(&net, &s.theta).unwrap();
            assert!(u <= e.total + 1e-12);
            assert!(e.total <= e0 + 1e-4);
        }
    }
}
