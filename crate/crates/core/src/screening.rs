//! Per-line cutting-plane certification of post-fault security.
//!
//! For every line the engine asks: over all states whose potential energy
//! stays within the post-fault budget `E*`, how large can this line's angle
//! difference get? The nonconvex `1 - cos` term is replaced by an auxiliary
//! variable bounded below by tangent cuts, which turns each question into a
//! small LP whose value upper-bounds the true maximum. Cuts are added where
//! the linearization is weak until the bound either certifies the line is
//! clear of its relay limit or converges onto it.
//!
//! Because every tangent line under-estimates `1 - cos` everywhere in the
//! box, cuts remain valid across target lines, objective signs, and energy
//! levels; the [`CutPool`] is therefore shared and only ever grows.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_PI_2;

use crate::energy::Equilibrium;
use crate::lp::{Constraint, LpModel, Objective, Relation, Sense, Simplex, SolveStatus};
use crate::math;
use crate::network::PowerNetwork;
use crate::{Error, Result};

/// Tolerances and mesh parameters of the cutting-plane loop.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningConfig {
    /// Cut tolerance: a cut is added where the linearization gap exceeds it.
    pub epsilon: f64,
    /// Early-exit margin: a line whose bound stays below
    /// `(1 - delta) * relay_limit` is declared clear.
    pub delta: f64,
    /// Mesh growth factor, slightly above 1.
    pub lambda: f64,
    /// First mesh point is `relay_limit / rho_divisor`.
    pub rho_divisor: f64,
    /// Cap on cutting-plane rounds per line and objective sign.
    pub max_iterations: usize,
    /// Floor of the shrink schedule used to certify infeasibility.
    pub epsilon_min: f64,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            delta: 1e-3,
            lambda: 1.05,
            rho_divisor: 10.0,
            max_iterations: 100,
            epsilon_min: 1e-8,
        }
    }
}

impl ScreeningConfig {
    fn validate(&self) -> Result<()> {
        let positive = self.epsilon > 0.0
            && self.delta > 0.0
            && self.delta < 1.0
            && self.rho_divisor > 0.0
            && self.max_iterations > 0
            && self.epsilon_min > 0.0;
        if !positive {
            return Err(Error::Domain("screening tolerances must be positive".to_string()));
        }
        if !(self.lambda > 1.0) {
            return Err(Error::Domain("mesh growth lambda must exceed 1.0".to_string()));
        }
        Ok(())
    }
}

/// Per-line linearization points for the `1 - cos` envelope.
///
/// Initialized with a sign-symmetric geometric mesh that is densest near
/// zero (where the function is flattest) plus the zero point itself; the
/// cutting-plane loop appends the iterates it cuts off. All points stay in
/// `[-pi/2, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CutPool {
    points: Vec<Vec<f64>>,
}

impl CutPool {
    /// Geometric initial mesh per line: `0` and
    /// `+/- rho * (1 + lambda)^(t-1)` for `t = 1, 2, ...` while the point
    /// stays within the line's relay limit.
    pub fn initial(net: &PowerNetwork, cfg: &ScreeningConfig) -> Self {
        let mut points = Vec::with_capacity(net.lines().len());
        for line in net.lines() {
            let theta_max = line.relay_limit;
            let rho = theta_max / cfg.rho_divisor;
            let mut pts = vec![0.0];
            let mut t = rho;
            while t <= theta_max * (1.0 + 1e-12) {
                pts.push(t);
                pts.push(-t);
                t *= 1.0 + cfg.lambda;
            }
            pts.sort_by(|a, b| a.partial_cmp(b).expect("mesh points are finite"));
            points.push(pts);
        }
        Self { points }
    }

    pub fn points(&self, line: usize) -> &[f64] {
        &self.points[line]
    }

    pub fn lines(&self) -> usize {
        self.points.len()
    }

    pub fn total_points(&self) -> usize {
        self.points.iter().map(|p| p.len()).sum()
    }

    /// Records a linearization point; returns false when an equal point
    /// (within 1e-12) is already present.
    pub fn insert(&mut self, line: usize, point: f64) -> bool {
        let point = point.clamp(-FRAC_PI_2, FRAC_PI_2);
        let pts = &mut self.points[line];
        let pos = pts.partition_point(|&x| x < point);
        let dup = (pos < pts.len() && (pts[pos] - point).abs() <= 1e-12)
            || (pos > 0 && (pts[pos - 1] - point).abs() <= 1e-12);
        if dup {
            return false;
        }
        pts.insert(pos, point);
        true
    }
}

/// How a per-line run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    /// The optimum fell below `(1 - delta) * relay_limit` and the loop
    /// exited before the linearization converged.
    EarlyInterior,
    /// No more cuts were violated; `theta_hat` is the converged bound.
    CutConverged,
    /// The LP itself is infeasible: the energy budget is below the
    /// equilibrium energy.
    Infeasible,
}

/// Certified upper bound on one line's angle difference.
#[derive(Debug, Clone, PartialEq)]
pub struct LineScreenResult {
    /// Line index in network order.
    pub line: usize,
    /// Upper bound on `max |theta_i - theta_j|` over the energy-accessible
    /// set; `-inf` when that set is certified empty.
    pub theta_hat: f64,
    /// Whether the bound reaches `(1 - delta) * relay_limit`.
    pub at_boundary: bool,
    pub termination: Termination,
    /// Cutting-plane rounds used (largest of the two objective signs).
    pub iterations: usize,
    /// Tangent cuts added while this line was the target.
    pub cuts_added: usize,
    /// Phase vector attaining `theta_hat`, when one exists.
    pub phases: Option<Vec<f64>>,
}

/// Overall classification of one energy level.
#[derive(Debug, Clone, PartialEq)]
pub enum ScreenStatus {
    /// Every line is certified strictly inside its relay limit: the
    /// post-fault dynamics cannot trip another relay.
    Secure,
    /// The listed lines reached their relay boundary; nothing is certified
    /// either way.
    Inconclusive(Vec<usize>),
    /// The energy budget is below the equilibrium energy.
    BelowMinEnergy,
}

/// Result of screening one post-fault energy level.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningVerdict {
    pub status: ScreenStatus,
    pub per_line: Vec<LineScreenResult>,
    pub e_star: f64,
    pub e_min: f64,
}

impl ScreeningVerdict {
    pub fn is_secure(&self) -> bool {
        matches!(self.status, ScreenStatus::Secure)
    }

    /// Line with the largest bound; index ties go to the lower line index.
    pub fn worst_line(&self) -> Option<&LineScreenResult> {
        self.per_line
            .iter()
            .filter(|r| r.theta_hat.is_finite())
            .max_by(|a, b| {
                a.theta_hat
                    .partial_cmp(&b.theta_hat)
                    .expect("theta_hat is finite")
                    .then(b.line.cmp(&a.line))
            })
    }
}

/// Outcome of the dedicated infeasibility certification.
#[derive(Debug, Clone, PartialEq)]
pub enum InfeasibilityCheck {
    /// The LP turned infeasible at this cut tolerance: the energy budget is
    /// certified below the equilibrium energy.
    Infeasible { epsilon: f64 },
    /// Still feasible at the tolerance floor; nothing is certified.
    FeasibleAtFloor { theta_hat: f64 },
}

/// Result of the maximum-secure-energy search.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxSecureEnergy {
    /// Largest energy level screened Secure (within the search tolerance).
    pub e_bar: f64,
    /// True when even the energy cap - at which every relay boundary is
    /// energetically reachable - screened Secure; the relay limits are then
    /// unreachable and `e_bar` is the cap itself.
    pub capped: bool,
    /// Verdict at the first insecure level above `e_bar`, when one exists.
    pub boundary_verdict: Option<ScreeningVerdict>,
}

/// Builds the per-line LP: maximize `sign * (theta_i - theta_j)` subject to
/// the energy budget, the `pi/2` line boxes, and one tangent cut per pool
/// point. The tangent at zero is flat and already implied by `psi >= 0`, so
/// it is skipped.
pub fn build_line_lp(
    net: &PowerNetwork,
    e_star: f64,
    target_line: usize,
    sign: f64,
    pool: &CutPool,
) -> Result<LpModel> {
    if !e_star.is_finite() {
        return Err(Error::Domain("energy budget must be finite".to_string()));
    }
    if target_line >= net.lines().len() {
        return Err(Error::Model(format!("no line with index {target_line}")));
    }
    let mut model = LpModel::new();
    let (theta_cols, psi_cols) = add_screen_variables(net, &mut model)?;
    for row in screen_rows(net, e_star, pool, &theta_cols, &psi_cols) {
        model.add_constraint(row)?;
    }
    model.set_objective(line_objective(net, target_line, sign, &theta_cols))?;
    Ok(model)
}

fn add_screen_variables(
    net: &PowerNetwork,
    model: &mut LpModel,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut theta_cols = Vec::with_capacity(net.n());
    for (pos, bus) in net.buses().iter().enumerate() {
        let (lo, hi) = if pos == net.reference_index() {
            (0.0, 0.0)
        } else {
            (f64::NEG_INFINITY, f64::INFINITY)
        };
        theta_cols.push(model.add_variable(&format!("th_{}", bus.id), lo, hi)?);
    }
    let mut psi_cols = Vec::with_capacity(net.lines().len());
    for line in net.lines() {
        let cap = 1.0 - math::cos(line.relay_limit);
        let name = format!("psi_{}_{}", line.from, line.to);
        psi_cols.push(model.add_variable(&name, 0.0, cap)?);
    }
    Ok((theta_cols, psi_cols))
}

/// Base row layout: energy budget first, then both half-boxes per line,
/// then the pool cuts grouped by line in point order.
fn screen_rows(
    net: &PowerNetwork,
    e_star: f64,
    pool: &CutPool,
    theta_cols: &[usize],
    psi_cols: &[usize],
) -> Vec<Constraint> {
    let mut rows = Vec::new();
    let mut energy = Vec::new();
    for (li, _) in net.lines().iter().enumerate() {
        energy.push((psi_cols[li], net.coupling(li)));
    }
    for (pos, bus) in net.buses().iter().enumerate() {
        if bus.p != 0.0 {
            energy.push((theta_cols[pos], -bus.p));
        }
    }
    rows.push(Constraint { terms: energy, relation: Relation::Le, rhs: e_star });
    for (li, _) in net.lines().iter().enumerate() {
        let (a, b) = net.line_ends(li);
        rows.push(Constraint {
            terms: vec![(theta_cols[a], 1.0), (theta_cols[b], -1.0)],
            relation: Relation::Le,
            rhs: FRAC_PI_2,
        });
        rows.push(Constraint {
            terms: vec![(theta_cols[a], -1.0), (theta_cols[b], 1.0)],
            relation: Relation::Le,
            rhs: FRAC_PI_2,
        });
    }
    for (li, _) in net.lines().iter().enumerate() {
        for &point in pool.points(li) {
            if point != 0.0 {
                rows.push(cut_row(net, li, point, theta_cols, psi_cols));
            }
        }
    }
    rows
}

/// Tangent of `1 - cos` at `point`, written as a row:
/// `sin(p) theta_a - sin(p) theta_b - psi <= p sin(p) - (1 - cos(p))`.
fn cut_row(
    net: &PowerNetwork,
    line: usize,
    point: f64,
    theta_cols: &[usize],
    psi_cols: &[usize],
) -> Constraint {
    let (a, b) = net.line_ends(line);
    let s = math::sin(point);
    Constraint {
        terms: vec![(theta_cols[a], s), (theta_cols[b], -s), (psi_cols[line], -1.0)],
        relation: Relation::Le,
        rhs: point * s - (1.0 - math::cos(point)),
    }
}

fn line_objective(
    net: &PowerNetwork,
    target_line: usize,
    sign: f64,
    theta_cols: &[usize],
) -> Objective {
    let (i, j) = net.line_ends(target_line);
    Objective {
        terms: vec![(theta_cols[i], sign), (theta_cols[j], -sign)],
        sense: Sense::Maximize,
    }
}

/// A live LP session shared by every line of one screening run.
struct LineLpDriver<'n> {
    net: &'n PowerNetwork,
    session: Simplex,
    theta_cols: Vec<usize>,
    psi_cols: Vec<usize>,
}

enum SignOutcome {
    Early { value: f64, iterations: usize, phases: Vec<f64> },
    Converged { value: f64, iterations: usize, phases: Vec<f64> },
    Infeasible { iterations: usize },
}

impl<'n> LineLpDriver<'n> {
    fn new(net: &'n PowerNetwork, e_star: f64, pool: &CutPool) -> Result<Self> {
        if !e_star.is_finite() {
            return Err(Error::Domain("energy budget must be finite".to_string()));
        }
        let mut model = LpModel::new();
        let (theta_cols, psi_cols) = add_screen_variables(net, &mut model)?;
        for row in screen_rows(net, e_star, pool, &theta_cols, &psi_cols) {
            model.add_constraint(row)?;
        }
        let session = Simplex::new(&model)?;
        Ok(Self { net, session, theta_cols, psi_cols })
    }

    fn set_e_star(&mut self, e_star: f64) -> Result<()> {
        self.session.set_rhs(0, e_star)
    }

    /// One cutting-plane loop for a fixed objective sign.
    ///
    /// Step 1 solves the LP; step 2 exits on infeasibility; step 3 (unless
    /// disabled) exits early once the optimum certifies the line clear;
    /// step 4 cuts off the iterate at every line where the envelope is more
    /// than `epsilon` loose; step 5 stops when no cuts were added.
    #[allow(clippy::too_many_arguments)]
    fn drive_sign(
        &mut self,
        target_line: usize,
        sign: f64,
        epsilon: f64,
        delta: f64,
        max_iterations: usize,
        early_exit: bool,
        pool: &mut CutPool,
        cuts_added: &mut usize,
    ) -> Result<SignOutcome> {
        self.session
            .set_objective(&line_objective(self.net, target_line, sign, &self.theta_cols))?;
        let theta_max = self.net.lines()[target_line].relay_limit;
        let mut last_value = f64::NAN;
        for iteration in 1..=max_iterations {
            let out = self.session.solve()?;
            match out.status {
                SolveStatus::Infeasible => {
                    return Ok(SignOutcome::Infeasible { iterations: iteration })
                }
                SolveStatus::Unbounded => {
                    return Err(Error::Numerical(
                        "screening LP is unbounded; the line boxes are missing".to_string(),
                    ))
                }
                SolveStatus::Optimal => {}
            }
            let value = out.objective_value;
            last_value = value;
            if early_exit && value <= (1.0 - delta) * theta_max {
                let phases = self.theta_cols.iter().map(|&c| out.values[c]).collect();
                return Ok(SignOutcome::Early { value, iterations: iteration, phases });
            }
            let mut added = 0usize;
            for (li, _) in self.net.lines().iter().enumerate() {
                let (a, b) = self.net.line_ends(li);
                let diff = out.values[self.theta_cols[a]] - out.values[self.theta_cols[b]];
                let psi = out.values[self.psi_cols[li]];
                if psi + epsilon < 1.0 - math::cos(diff) && pool.insert(li, diff) {
                    let row = cut_row(self.net, li, diff, &self.theta_cols, &self.psi_cols);
                    self.session.add_constraint(&row)?;
                    added += 1;
                }
            }
            *cuts_added += added;
            if added == 0 {
                let phases = self.theta_cols.iter().map(|&c| out.values[c]).collect();
                return Ok(SignOutcome::Converged { value, iterations: iteration, phases });
            }
        }
        Err(Error::Numerical(format!(
            "cutting-plane cap of {max_iterations} rounds exceeded; last bound {last_value:.6}"
        )))
    }

    /// Runs both objective signs and folds them into one line result.
    fn run_line(
        &mut self,
        target_line: usize,
        epsilon: f64,
        cfg: &ScreeningConfig,
        early_exit: bool,
        pool: &mut CutPool,
    ) -> Result<LineScreenResult> {
        let theta_max = self.net.lines()[target_line].relay_limit;
        let mut cuts_added = 0usize;
        let mut theta_hat = f64::NEG_INFINITY;
        let mut iterations = 0usize;
        let mut phases: Option<Vec<f64>> = None;
        let mut all_early = true;
        for sign in [1.0, -1.0] {
            let outcome = self.drive_sign(
                target_line,
                sign,
                epsilon,
                cfg.delta,
                cfg.max_iterations,
                early_exit,
                pool,
                &mut cuts_added,
            )?;
            match outcome {
                SignOutcome::Infeasible { iterations: it } => {
                    // an empty feasible set is empty for every objective
                    return Ok(LineScreenResult {
                        line: target_line,
                        theta_hat: f64::NEG_INFINITY,
                        at_boundary: false,
                        termination: Termination::Infeasible,
                        iterations: it,
                        cuts_added,
                        phases: None,
                    });
                }
                SignOutcome::Early { value, iterations: it, phases: ph } => {
                    iterations = iterations.max(it);
                    if value > theta_hat {
                        theta_hat = value;
                        phases = Some(ph);
                    }
                }
                SignOutcome::Converged { value, iterations: it, phases: ph } => {
                    all_early = false;
                    iterations = iterations.max(it);
                    if value > theta_hat {
                        theta_hat = value;
                        phases = Some(ph);
                    }
                }
            }
        }
        Ok(LineScreenResult {
            line: target_line,
            theta_hat,
            at_boundary: theta_hat >= (1.0 - cfg.delta) * theta_max,
            termination: if all_early {
                Termination::EarlyInterior
            } else {
                Termination::CutConverged
            },
            iterations,
            cuts_added,
            phases,
        })
    }
}

fn line_is_secure(result: &LineScreenResult, theta_max: f64, delta: f64) -> bool {
    match result.termination {
        Termination::EarlyInterior => true,
        Termination::CutConverged => result.theta_hat < (1.0 - delta) * theta_max,
        Termination::Infeasible => false,
    }
}

/// Runs the cutting-plane loop for a single line against a shared pool.
///
/// Cuts recorded in the pool by earlier runs are reused; cuts added here are
/// recorded back. The result is identical to running inside [`screen`] with
/// the same pool contents.
pub fn cutting_plane_line(
    net: &PowerNetwork,
    e_star: f64,
    target_line: usize,
    cfg: &ScreeningConfig,
    pool: &mut CutPool,
) -> Result<LineScreenResult> {
    cfg.validate()?;
    if target_line >= net.lines().len() {
        return Err(Error::Model(format!("no line with index {target_line}")));
    }
    let mut driver = LineLpDriver::new(net, e_star, pool)?;
    driver.run_line(target_line, cfg.epsilon, cfg, true, pool)
}

/// Screens one post-fault energy level against every relay limit.
///
/// Energies below the equilibrium energy are classified immediately without
/// touching the LP. Lines that converge within `2 * delta` of their relay
/// limit are re-run at a tightened cut tolerance before the verdict is
/// assembled, so near-boundary calls are not decided by a loose envelope.
pub fn screen(
    net: &PowerNetwork,
    equilibrium: &Equilibrium,
    e_star: f64,
    cfg: &ScreeningConfig,
) -> Result<ScreeningVerdict> {
    cfg.validate()?;
    if !equilibrium.interior {
        return Err(Error::Domain(
            "equilibrium sits on the pi/2 boundary; refusing to screen".to_string(),
        ));
    }
    if e_star < equilibrium.e_min - 1e-9 {
        return Ok(ScreeningVerdict {
            status: ScreenStatus::BelowMinEnergy,
            per_line: Vec::new(),
            e_star,
            e_min: equilibrium.e_min,
        });
    }
    let mut pool = CutPool::initial(net, cfg);
    let mut driver = LineLpDriver::new(net, e_star, &pool)?;
    screen_in_driver(&mut driver, &mut pool, equilibrium.e_min, e_star, cfg)
}

fn screen_in_driver(
    driver: &mut LineLpDriver<'_>,
    pool: &mut CutPool,
    e_min: f64,
    e_star: f64,
    cfg: &ScreeningConfig,
) -> Result<ScreeningVerdict> {
    let net = driver.net;
    let mut per_line = Vec::with_capacity(net.lines().len());
    for li in 0..net.lines().len() {
        per_line.push(driver.run_line(li, cfg.epsilon, cfg, true, pool)?);
    }
    // near-boundary regime: re-run converged lines close to their limit at
    // a tightened tolerance so the call is not an artifact of the envelope
    let tight = cfg.epsilon.min(1e-4);
    if tight < cfg.epsilon {
        for li in 0..net.lines().len() {
            let near = per_line[li].termination == Termination::CutConverged
                && per_line[li].theta_hat
                    >= (1.0 - 2.0 * cfg.delta) * net.lines()[li].relay_limit;
            if near {
                per_line[li] = driver.run_line(li, tight, cfg, true, pool)?;
            }
        }
    }
    let infeasible = per_line.iter().any(|r| r.termination == Termination::Infeasible);
    let status = if infeasible {
        ScreenStatus::BelowMinEnergy
    } else {
        let boundary: Vec<usize> = per_line
            .iter()
            .filter(|r| !line_is_secure(r, net.lines()[r.line].relay_limit, cfg.delta))
            .map(|r| r.line)
            .collect();
        if boundary.is_empty() {
            ScreenStatus::Secure
        } else {
            ScreenStatus::Inconclusive(boundary)
        }
    };
    Ok(ScreeningVerdict { status, per_line, e_star, e_min })
}

/// Certifies `E* < E_min` without knowing the equilibrium, by shrinking the
/// cut tolerance geometrically until the LP relaxation turns infeasible.
///
/// The early exit of step 3 is disabled: the loop is only after feasibility,
/// so it keeps cutting until either the relaxation collapses (certificate)
/// or the tolerance floor is reached (no certificate; a sufficiently small
/// tolerance always exists when the budget really is below the equilibrium
/// energy, but how small depends on the gap).
pub fn certify_below_min_energy(
    net: &PowerNetwork,
    e_star: f64,
    cfg: &ScreeningConfig,
) -> Result<InfeasibilityCheck> {
    cfg.validate()?;
    if net.lines().is_empty() {
        return Err(Error::Topology("network has no lines".to_string()));
    }
    let mut pool = CutPool::initial(net, cfg);
    let mut driver = LineLpDriver::new(net, e_star, &pool)?;
    let mut epsilon = cfg.epsilon;
    loop {
        let result = driver.run_line(0, epsilon, cfg, false, &mut pool)?;
        if result.termination == Termination::Infeasible {
            return Ok(InfeasibilityCheck::Infeasible { epsilon });
        }
        if epsilon <= cfg.epsilon_min {
            return Ok(InfeasibilityCheck::FeasibleAtFloor { theta_hat: result.theta_hat });
        }
        epsilon = (epsilon * 0.1).max(cfg.epsilon_min);
    }
}

/// Largest energy level with every screened energy below it Secure.
///
/// Brackets the boundary by doubling the offset above the equilibrium
/// energy, then bisects to `tol_e`. The bracket is capped at an energy that
/// provably reaches every relay boundary; a Secure verdict at the cap means
/// the relay limits are unreachable at any accessible energy.
pub fn find_max_secure_energy(
    net: &PowerNetwork,
    equilibrium: &Equilibrium,
    cfg: &ScreeningConfig,
    tol_e: f64,
) -> Result<MaxSecureEnergy> {
    cfg.validate()?;
    if !(tol_e > 0.0) {
        return Err(Error::Domain("energy tolerance must be positive".to_string()));
    }
    if !equilibrium.interior {
        return Err(Error::Domain(
            "equilibrium sits on the pi/2 boundary; refusing to screen".to_string(),
        ));
    }
    // a budget this large admits a point on every relay boundary: a single
    // bus pushed to its limit costs at most the full cosine terms plus the
    // work of its injection over the box
    let cap: f64 = net
        .lines()
        .iter()
        .enumerate()
        .map(|(li, l)| net.coupling(li) * (1.0 - math::cos(l.relay_limit)))
        .sum::<f64>()
        + net.buses().iter().map(|b| b.p.abs()).sum::<f64>() * FRAC_PI_2;

    let e_min = equilibrium.e_min;
    let mut pool = CutPool::initial(net, cfg);
    let mut driver = LineLpDriver::new(net, e_min, &pool)?;

    let mut lo = e_min;
    let mut offset = 0.1;
    let bracket = loop {
        let e = (e_min + offset).min(cap);
        driver.set_e_star(e)?;
        let verdict = screen_in_driver(&mut driver, &mut pool, e_min, e, cfg)?;
        if verdict.is_secure() {
            lo = e;
            if e >= cap {
                return Ok(MaxSecureEnergy { e_bar: cap, capped: true, boundary_verdict: None });
            }
            offset *= 2.0;
        } else {
            break (e, verdict);
        }
    };
    let (mut hi, mut boundary_verdict) = bracket;
    while hi - lo > tol_e {
        let mid = 0.5 * (lo + hi);
        driver.set_e_star(mid)?;
        let verdict = screen_in_driver(&mut driver, &mut pool, e_min, mid, cfg)?;
        if verdict.is_secure() {
            lo = mid;
        } else {
            hi = mid;
            boundary_verdict = verdict;
        }
    }
    Ok(MaxSecureEnergy { e_bar: lo, capped: false, boundary_verdict: Some(boundary_verdict) })
}
