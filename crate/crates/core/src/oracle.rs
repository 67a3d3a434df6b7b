//! Brute-force references for networks with two free angles.
//!
//! Every quantity the screening engine certifies can be recomputed on a
//! three-bus system by exhaustive scanning of the two free phases. These
//! scans are the independent ground truth the engine is tested against;
//! they share no code with the LP path.

use alloc::string::ToString;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::math;
use crate::network::PowerNetwork;
use crate::{Error, Result};

/// Uniform scan grid over the two free phases, each in `[-pi/2, pi/2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AngleGrid2D {
    resolution: usize,
}

impl Default for AngleGrid2D {
    fn default() -> Self {
        Self { resolution: 2001 }
    }
}

/// How one line's angle difference reads off the two grid axes.
#[derive(Clone, Copy)]
enum LineAxis {
    First,
    Second,
    Difference,
}

struct Scan {
    axis: Vec<f64>,
    cos_axis: Vec<f64>,
    sin_axis: Vec<f64>,
    kinds: Vec<LineAxis>,
    couplings: Vec<f64>,
    p0: f64,
    p1: f64,
    /// Free-bus positions, in network order.
    free: [usize; 2],
    step: f64,
}

impl AngleGrid2D {
    /// A grid with `resolution` points per axis; at least 101 and odd, so
    /// zero is always a grid point.
    pub fn new(resolution: usize) -> Result<Self> {
        if resolution < 101 || resolution % 2 == 0 {
            return Err(Error::Domain(
                "grid resolution must be odd and at least 101".to_string(),
            ));
        }
        Ok(Self { resolution })
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn scan(&self, net: &PowerNetwork) -> Result<Scan> {
        let free: Vec<usize> =
            (0..net.n()).filter(|&i| i != net.reference_index()).collect();
        if free.len() != 2 {
            return Err(Error::Dimension { expected: 2, got: free.len() });
        }
        let mut kinds = Vec::with_capacity(net.lines().len());
        let mut couplings = Vec::with_capacity(net.lines().len());
        for (li, _) in net.lines().iter().enumerate() {
            let (a, b) = net.line_ends(li);
            let kind = if a == free[0] && b == free[1] || a == free[1] && b == free[0] {
                LineAxis::Difference
            } else if a == free[0] || b == free[0] {
                LineAxis::First
            } else {
                LineAxis::Second
            };
            kinds.push(kind);
            couplings.push(net.coupling(li));
        }
        let n = self.resolution;
        let step = core::f64::consts::PI / (n - 1) as f64;
        let mut axis = Vec::with_capacity(n);
        let mut cos_axis = Vec::with_capacity(n);
        let mut sin_axis = Vec::with_capacity(n);
        for k in 0..n {
            let t = -FRAC_PI_2 + step * k as f64;
            axis.push(t);
            cos_axis.push(math::cos(t));
            sin_axis.push(math::sin(t));
        }
        Ok(Scan {
            axis,
            cos_axis,
            sin_axis,
            kinds,
            couplings,
            p0: net.buses()[free[0]].p,
            p1: net.buses()[free[1]].p,
            free: [free[0], free[1]],
            step,
        })
    }

    /// Exhaustive minimum of the potential over the grid restricted to the
    /// `pi/2` box. Returns the full phase vector of the minimizer and its
    /// potential.
    pub fn grid_min_potential(&self, net: &PowerNetwork) -> Result<(Vec<f64>, f64)> {
        let scan = self.scan(net)?;
        let mut best = f64::INFINITY;
        let mut arg = (0usize, 0usize);
        self.visit(&scan, |i, j, u, _| {
            if u < best {
                best = u;
                arg = (i, j);
            }
        });
        let mut theta = alloc::vec![0.0; net.n()];
        theta[scan.free[0]] = scan.axis[arg.0];
        theta[scan.free[1]] = scan.axis[arg.1];
        Ok((theta, best))
    }

    /// Minimum potential within one grid cell of any surface
    /// `|theta_diff| = theta_max`, inside the `pi/2` box: the lowest energy
    /// at which the accessible set touches the limit surface.
    pub fn boundary_min_potential(&self, net: &PowerNetwork, theta_max: &[f64]) -> Result<f64> {
        if theta_max.len() != net.lines().len() {
            return Err(Error::Dimension { expected: net.lines().len(), got: theta_max.len() });
        }
        let scan = self.scan(net)?;
        let mut best = f64::INFINITY;
        self.visit(&scan, |_, _, u, diffs| {
            for (li, &d) in diffs.iter().enumerate() {
                let tol = match scan.kinds[li] {
                    LineAxis::Difference => 2.0 * scan.step,
                    _ => scan.step,
                };
                if (d.abs() - theta_max[li]).abs() <= tol {
                    if u < best {
                        best = u;
                    }
                    break;
                }
            }
        });
        if best.is_finite() {
            Ok(best)
        } else {
            Err(Error::Numerical("no grid point near the limit surface".to_string()))
        }
    }

    /// True maximum of one line's angle difference over the grid points that
    /// are energy-accessible (`U <= e_star`) and within every limit. `None`
    /// when no grid point qualifies.
    pub fn grid_max_angle(
        &self,
        net: &PowerNetwork,
        e_star: f64,
        theta_max: &[f64],
        line: usize,
    ) -> Result<Option<f64>> {
        if theta_max.len() != net.lines().len() {
            return Err(Error::Dimension { expected: net.lines().len(), got: theta_max.len() });
        }
        if line >= net.lines().len() {
            return Err(Error::Model(alloc::format!("no line with index {line}")));
        }
        let scan = self.scan(net)?;
        let mut best: Option<f64> = None;
        self.visit(&scan, |_, _, u, diffs| {
            if u > e_star {
                return;
            }
            for (li, &d) in diffs.iter().enumerate() {
                if d.abs() > theta_max[li] + 1e-12 {
                    return;
                }
            }
            let angle = diffs[line].abs();
            if best.is_none_or(|b| angle > b) {
                best = Some(angle);
            }
        });
        Ok(best)
    }

    /// Streams `(theta_0, theta_1, U)` over the grid restricted to the box,
    /// row-major, for external contour plotting.
    pub fn for_each_potential<F: FnMut(f64, f64, f64)>(
        &self,
        net: &PowerNetwork,
        mut f: F,
    ) -> Result<()> {
        let scan = self.scan(net)?;
        self.visit(&scan, |i, j, u, _| f(scan.axis[i], scan.axis[j], u));
        Ok(())
    }

    /// Scans the grid, invoking the callback on every point inside the box
    /// with its potential and per-line angle differences.
    fn visit<F: FnMut(usize, usize, f64, &[f64])>(&self, scan: &Scan, mut f: F) {
        let n = self.resolution;
        let mut diffs = alloc::vec![0.0; scan.kinds.len()];
        for i in 0..n {
            let t0 = scan.axis[i];
            let (c0, s0) = (scan.cos_axis[i], scan.sin_axis[i]);
            for j in 0..n {
                let t1 = scan.axis[j];
                // cos(t0 - t1) from the per-axis tables
                let cos_diff = c0 * scan.cos_axis[j] + s0 * scan.sin_axis[j];
                if (t0 - t1).abs() > FRAC_PI_2 + 1e-12 {
                    continue;
                }
                let mut u = -scan.p0 * t0 - scan.p1 * t1;
                for (li, kind) in scan.kinds.iter().enumerate() {
                    let (d, c) = match kind {
                        LineAxis::First => (t0, c0),
                        LineAxis::Second => (t1, scan.cos_axis[j]),
                        LineAxis::Difference => (t0 - t1, cos_diff),
                    };
                    diffs[li] = d;
                    u += scan.couplings[li] * (1.0 - c);
                }
                f(i, j, u, &diffs);
            }
        }
    }
}
