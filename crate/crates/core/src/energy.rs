//! Energy function of the swing dynamics and the convex equilibrium solve.
//!
//! The total energy splits into kinetic energy stored in rotating machines
//! and potential energy stored in line flows minus the work of injections:
//!
//! ```text
//! W = sum_i M_i w_i^2 / 2
//! U = sum_{lines} b_kh (1 - cos(theta_k - theta_h)) - sum_i p_i theta_i
//! ```
//!
//! with `b_kh = susceptance * v_k * v_h`. Inside the box where every line
//! angle difference stays within pi/2, `U` is convex, so the stationary power
//! flow is the unique minimizer there and a damped Newton iteration finds it.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::math;
use crate::network::PowerNetwork;
use crate::{Error, Result};

/// Gradient infinity-norm below which the equilibrium is accepted.
pub const EQUILIBRIUM_TOL: f64 = 1e-10;

/// Distance from the pi/2 box boundary below which a solution is treated as
/// sitting on the boundary.
const BOUNDARY_TOL: f64 = 1e-9;

const MAX_NEWTON_ITERATIONS: usize = 200;

/// Kinetic, potential, and total energy of one state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub kinetic: f64,
    pub potential: f64,
    pub total: f64,
}

/// Stationary solution of the power-flow equations inside the pi/2 box.
#[derive(Debug, Clone, PartialEq)]
pub struct Equilibrium {
    /// Minimizing phase vector, reference entry exactly 0.
    pub theta_min: Vec<f64>,
    /// Potential energy at the minimizer.
    pub e_min: f64,
    /// True when every line angle difference is strictly inside pi/2.
    /// On the boundary the uniqueness and stability guarantees are lost,
    /// so callers should refuse to screen.
    pub interior: bool,
}

/// Potential energy of a phase vector.
pub fn potential_energy(net: &PowerNetwork, theta: &[f64]) -> Result<f64> {
    net.check_dimension(theta.len())?;
    let mut u = 0.0;
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        u += net.coupling(li) * (1.0 - math::cos(theta[a] - theta[b]));
    }
    for (bus, th) in net.buses().iter().zip(theta) {
        u -= bus.p * th;
    }
    Ok(u)
}

/// Kinetic energy of a frequency-deviation vector. Always non-negative.
pub fn kinetic_energy(net: &PowerNetwork, omega: &[f64]) -> Result<f64> {
    net.check_dimension(omega.len())?;
    Ok(net
        .buses()
        .iter()
        .zip(omega)
        .map(|(bus, w)| 0.5 * bus.inertia * w * w)
        .sum())
}

/// Kinetic, potential, and total energy of a (theta, omega) pair.
///
/// The total is computed as the sum of the two parts in this one place so
/// that `total == kinetic + potential` holds exactly.
pub fn energy_breakdown(net: &PowerNetwork, theta: &[f64], omega: &[f64]) -> Result<EnergyBreakdown> {
    let kinetic = kinetic_energy(net, omega)?;
    let potential = potential_energy(net, theta)?;
    Ok(EnergyBreakdown { kinetic, potential, total: kinetic + potential })
}

/// Gradient of the potential energy.
///
/// Component `i` is `sum_j b_ij sin(theta_i - theta_j) - p_i`, the negated
/// electrical acceleration at zero frequency.
pub fn grad_potential(net: &PowerNetwork, theta: &[f64]) -> Result<Vec<f64>> {
    net.check_dimension(theta.len())?;
    let mut g: Vec<f64> = net.buses().iter().map(|b| -b.p).collect();
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        let flow = net.coupling(li) * math::sin(theta[a] - theta[b]);
        g[a] += flow;
        g[b] -= flow;
    }
    Ok(g)
}

/// Dense Hessian of the potential energy: a Laplacian weighted by
/// `b_ij cos(theta_i - theta_j)`, positive semidefinite inside the box.
fn hessian(net: &PowerNetwork, theta: &[f64], out: &mut [f64]) {
    let n = net.n();
    out.fill(0.0);
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        let w = net.coupling(li) * math::cos(theta[a] - theta[b]);
        out[a * n + a] += w;
        out[b * n + b] += w;
        out[a * n + b] -= w;
        out[b * n + a] -= w;
    }
}

/// Solves the stationary power flow by minimizing `U` over the pi/2 box.
///
/// Damped Newton iteration on the reduced system (reference angle
/// eliminated) from a flat start: the step is first clipped so no trial
/// iterate leaves the box, then halved until the potential decreases.
/// Converged when the gradient infinity-norm drops below 1e-10.
pub fn solve_equilibrium(net: &PowerNetwork) -> Result<Equilibrium> {
    let n = net.n();
    let r = net.reference_index();
    let mut theta = vec![0.0; n];
    let mut h_full = vec![0.0; n * n];
    let m = n - 1;
    let mut h_red = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    // positions of the free (non-reference) buses
    let free: Vec<usize> = (0..n).filter(|&i| i != r).collect();

    let mut u = potential_energy(net, &theta)?;
    for _ in 0..MAX_NEWTON_ITERATIONS {
        let g = grad_potential(net, &theta)?;
        let gnorm = g.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if gnorm < EQUILIBRIUM_TOL {
            return Ok(finish(net, theta, u));
        }

        hessian(net, &theta, &mut h_full);
        for (ri, &i) in free.iter().enumerate() {
            rhs[ri] = -g[i];
            for (ci, &j) in free.iter().enumerate() {
                h_red[ri * m + ci] = h_full[i * n + j];
            }
        }
        // Near the box boundary the reduced Hessian can lose definiteness;
        // retry with growing diagonal shifts before giving up.
        let mut solved = false;
        let mut shift = 0.0;
        let scale = (0..m).fold(1e-12, |acc: f64, k| acc.max(h_red[k * m + k].abs()));
        for _ in 0..8 {
            let mut a = h_red.clone();
            if shift > 0.0 {
                for k in 0..m {
                    a[k * m + k] += shift;
                }
            }
            let mut d = rhs.clone();
            if cholesky_solve(&mut a, m, &mut d) {
                rhs.copy_from_slice(&d);
                solved = true;
                break;
            }
            shift = if shift == 0.0 { 1e-12 * scale } else { shift * 100.0 };
        }
        if !solved {
            return Err(Error::Numerical(
                "equilibrium Hessian is not positive definite".into(),
            ));
        }

        let mut step = vec![0.0; n];
        for (ri, &i) in free.iter().enumerate() {
            step[i] = rhs[ri];
        }

        // Clip the step so every line angle difference stays within pi/2.
        let mut t = 1.0f64;
        for (li, _) in net.lines().iter().enumerate() {
            let (a, b) = net.line_ends(li);
            let d = step[a] - step[b];
            if d.abs() > 0.0 {
                let cur = theta[a] - theta[b];
                let room = if d > 0.0 { FRAC_PI_2 - cur } else { cur + FRAC_PI_2 };
                t = t.min((room / d.abs()).max(0.0));
            }
        }

        let mut trial = vec![0.0; n];
        let mut accepted = false;
        for _ in 0..60 {
            for i in 0..n {
                trial[i] = theta[i] + t * step[i];
            }
            let u_trial = potential_energy(net, &trial)?;
            if u_trial < u {
                theta.copy_from_slice(&trial);
                u = u_trial;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            // No decrease even for tiny steps: we are at the constrained
            // minimum up to rounding, typically on the box boundary.
            let eq = finish(net, theta, u);
            if eq.interior && gnorm > 1e-8 {
                return Err(Error::Convergence { iterations: MAX_NEWTON_ITERATIONS });
            }
            return Ok(eq);
        }
    }
    Err(Error::Convergence { iterations: MAX_NEWTON_ITERATIONS })
}

fn finish(net: &PowerNetwork, theta: Vec<f64>, u: f64) -> Equilibrium {
    let mut interior = true;
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        if (theta[a] - theta[b]).abs() >= FRAC_PI_2 - BOUNDARY_TOL {
            interior = false;
        }
    }
    Equilibrium { theta_min: theta, e_min: u, interior }
}

/// In-place Cholesky factorization and solve for a symmetric positive
/// definite system. Returns false when a non-positive pivot shows up.
fn cholesky_solve(a: &mut [f64], n: usize, b: &mut [f64]) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = math::sqrt(d);
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    // forward then backward substitution
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= a[i * n + k] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in (i + 1)..n {
            s -= a[k * n + i] * b[k];
        }
        b[i] = s / a[i * n + i];
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{Bus, BusKind, Line, PowerNetwork};

    fn triangle(p1: f64, p2: f64) -> PowerNetwork {
        let bus = |id, p| Bus { id, kind: BusKind::Load, p, v: 1.0, inertia: 1.0, damping: 0.0 };
        let line = |from, to, x: f64| Line {
            from,
            to,
            susceptance: 1.0 / x,
            relay_limit: FRAC_PI_2,
        };
        PowerNetwork::new_balancing_reference(
            vec![bus(1, p1), bus(2, p2), bus(3, 0.0)],
            vec![line(1, 3, 0.8), line(2, 3, 1.2), line(1, 2, 1.0)],
            3,
        )
        .unwrap()
    }

    #[test]
    fn potential_zero_at_flat_profile() {
        let net = triangle(0.03, 0.06);
        assert_eq!(potential_energy(&net, &[0.0; 3]).unwrap(), 0.0);
    }

    #[test]
    fn potential_at_quarter_turn() {
        // 1.25 + 0 + 1 - 0.03 * pi/2
        let net = triangle(0.03, 0.06);
        let u = potential_energy(&net, &[FRAC_PI_2, 0.0, 0.0]).unwrap();
        assert!((u - 2.202_876_110_196_443).abs() < 1e-12, "got {u}");
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let net = triangle(0.0, 0.0);
        assert!(matches!(
            potential_energy(&net, &[0.0; 2]),
            Err(Error::Dimension { expected: 3, got: 2 })
        ));
        assert!(kinetic_energy(&net, &[0.0; 4]).is_err());
        assert!(grad_potential(&net, &[0.0; 1]).is_err());
    }

    #[test]
    fn kinetic_single_machine() {
        let net = PowerNetwork::new(
            vec![
                Bus { id: 1, kind: BusKind::Generator, p: 0.0, v: 1.0, inertia: 2.0, damping: 0.0 },
                Bus { id: 2, kind: BusKind::Load, p: 0.0, v: 1.0, inertia: 1.0, damping: 0.0 },
            ],
            vec![Line { from: 1, to: 2, susceptance: 1.0, relay_limit: FRAC_PI_2 }],
            1,
        )
        .unwrap();
        let w = kinetic_energy(&net, &[3.0, 0.0]).unwrap();
        assert!((w - 9.0).abs() < 1e-15);
        let w_neg = kinetic_energy(&net, &[-3.0, 0.0]).unwrap();
        assert_eq!(w, w_neg);
    }

    #[test]
    fn gradient_two_bus_analytic() {
        let net = PowerNetwork::new(
            vec![
                Bus { id: 1, kind: BusKind::Load, p: 0.0, v: 1.0, inertia: 1.0, damping: 0.0 },
                Bus { id: 2, kind: BusKind::Load, p: 0.0, v: 1.0, inertia: 1.0, damping: 0.0 },
            ],
            vec![Line { from: 1, to: 2, susceptance: 1.0, relay_limit: FRAC_PI_2 }],
            1,
        )
        .unwrap();
        let g = grad_potential(&net, &[0.2, 0.0]).unwrap();
        assert!((g[0] - 0.2f64.sin()).abs() < 1e-15);
        assert!((g[1] + 0.2f64.sin()).abs() < 1e-15);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let net = triangle(0.3, -0.4);
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for _ in 0..20 {
            let theta: Vec<f64> = (0..3).map(|_| (rand01() - 0.5) * 1.2).collect();
            let g = grad_potential(&net, &theta).unwrap();
            for i in 0..3 {
                let h = 1e-6;
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[i] += h;
                tm[i] -= h;
                let fd = (potential_energy(&net, &tp).unwrap()
                    - potential_energy(&net, &tm).unwrap())
                    / (2.0 * h);
                let denom = g[i].abs().max(1.0);
                assert!(
                    (g[i] - fd).abs() / denom < 1e-6,
                    "component {i}: analytic {} vs fd {fd}",
                    g[i]
                );
            }
        }
    }

    #[test]
    fn equilibrium_zero_injection() {
        let net = triangle(0.0, 0.0);
        let eq = solve_equilibrium(&net).unwrap();
        assert!(eq.theta_min.iter().all(|t| t.abs() < 1e-12));
        assert!(eq.e_min.abs() < 1e-15);
        assert!(eq.interior);
    }

    #[test]
    fn equilibrium_case1() {
        let net = triangle(0.03, 0.06);
        let eq = solve_equilibrium(&net).unwrap();
        assert!(eq.e_min.abs() < 0.01, "e_min = {}", eq.e_min);
        assert!((eq.e_min + 0.002_136_368_34).abs() < 1e-6, "e_min = {}", eq.e_min);
        assert!(eq.interior);
        let g = grad_potential(&net, &eq.theta_min).unwrap();
        assert!(g.iter().all(|x| x.abs() < 1e-10));
        assert_eq!(eq.theta_min[net.reference_index()], 0.0);
    }

    #[test]
    fn equilibrium_case2() {
        let net = triangle(1.2, -1.5);
        let eq = solve_equilibrium(&net).unwrap();
        assert!((eq.e_min + 0.70).abs() < 0.02, "e_min = {}", eq.e_min);
        assert!((eq.e_min + 0.706_555_231_8).abs() < 1e-6, "e_min = {}", eq.e_min);
        assert!(eq.interior);
        assert!((eq.theta_min[0] - 0.255_032_735).abs() < 1e-6);
        assert!((eq.theta_min[1] + 0.830_717_858).abs() < 1e-6);
    }

    #[test]
    fn equilibrium_is_global_minimum_on_samples() {
        let net = triangle(1.2, -1.5);
        let eq = solve_equilibrium(&net).unwrap();
        let mut state = 0x51ab_de3au64;
        let mut rand01 = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        let mut checked = 0;
        while checked < 1000 {
            let t1 = (rand01() - 0.5) * core::f64::consts::PI;
            let t2 = (rand01() - 0.5) * core::f64::consts::PI;
            if (t1 - t2).abs() > FRAC_PI_2 {
                continue;
            }
            checked += 1;
            let u = potential_energy(&net, &[t1, t2, 0.0]).unwrap();
            assert!(u >= eq.e_min - 1e-12);
        }
    }

    #[test]
    fn gauge_shift_leaves_potential_unchanged() {
        let net = triangle(1.2, -1.5);
        let theta = [0.3, -0.2, 0.0];
        let shifted = [0.3 + 0.7, -0.2 + 0.7, 0.7];
        let u0 = potential_energy(&net, &theta).unwrap();
        let u1 = potential_energy(&net, &shifted).unwrap();
        assert!((u0 - u1).abs() < 1e-12);
    }
}
