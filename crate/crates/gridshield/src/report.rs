//! Machine-readable report writers: trajectory CSV, verdict JSON and CSV,
//! and a minimal static SVG line chart for quick visual checks.
//!
//! Reports are deterministic byte for byte given identical inputs: floats
//! print in shortest round-trip form and every ordering is fixed by index.

use std::fmt::Write as _;

use gridshield_core::dynamics::Trajectory;
use gridshield_core::network::PowerNetwork;
use gridshield_core::screening::{ScreenStatus, ScreeningVerdict, Termination};

/// Trajectory CSV with one row per sample:
/// `time,theta_<id>...,omega_<id>...,W,U,E`.
pub fn trajectory_csv(net: &PowerNetwork, traj: &Trajectory) -> String {
    let mut out = String::new();
    out.push_str("time");
    for bus in net.buses() {
        let _ = write!(out, ",theta_{}", bus.id);
    }
    for bus in net.buses() {
        let _ = write!(out, ",omega_{}", bus.id);
    }
    out.push_str(",W,U,E\n");
    for (sample, energy) in traj.samples.iter().zip(&traj.energies) {
        let _ = write!(out, "{}", sample.time);
        for t in &sample.theta {
            let _ = write!(out, ",{t}");
        }
        for w in &sample.omega {
            let _ = write!(out, ",{w}");
        }
        let _ = writeln!(out, ",{},{},{}", energy.kinetic, energy.potential, energy.total);
    }
    out
}

fn status_tag(status: &ScreenStatus) -> &'static str {
    match status {
        ScreenStatus::Secure => "secure",
        ScreenStatus::Inconclusive(_) => "inconclusive",
        ScreenStatus::BelowMinEnergy => "below_min_energy",
    }
}

fn termination_tag(t: Termination) -> &'static str {
    match t {
        Termination::EarlyInterior => "early_interior",
        Termination::CutConverged => "cut_converged",
        Termination::Infeasible => "infeasible",
    }
}

fn json_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        "null".to_string()
    }
}

/// Verdict report as a JSON document with per-line bounds.
pub fn verdict_json(net: &PowerNetwork, verdict: &ScreeningVerdict) -> String {
    let mut out = String::new();
    out.push_str("{\n");
    let _ = writeln!(out, "  \"status\": \"{}\",", status_tag(&verdict.status));
    let _ = writeln!(out, "  \"e_star\": {},", json_f64(verdict.e_star));
    let _ = writeln!(out, "  \"e_min\": {},", json_f64(verdict.e_min));
    if let ScreenStatus::Inconclusive(lines) = &verdict.status {
        let ids: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
        let _ = writeln!(out, "  \"boundary_lines\": [{}],", ids.join(", "));
    }
    out.push_str("  \"per_line\": [\n");
    for (k, r) in verdict.per_line.iter().enumerate() {
        let line = &net.lines()[r.line];
        let _ = write!(
            out,
            "    {{\"line\": {}, \"from\": {}, \"to\": {}, \"theta_hat\": {}, \
             \"theta_max\": {}, \"termination\": \"{}\", \"iterations\": {}, \
             \"cuts_added\": {}, \"at_boundary\": {}}}",
            r.line,
            line.from,
            line.to,
            json_f64(r.theta_hat),
            json_f64(line.relay_limit),
            termination_tag(r.termination),
            r.iterations,
            r.cuts_added,
            r.at_boundary,
        );
        out.push_str(if k + 1 < verdict.per_line.len() { ",\n" } else { "\n" });
    }
    out.push_str("  ]\n}\n");
    out
}

/// Verdict summary as a CSV table, one row per line.
pub fn verdict_csv(net: &PowerNetwork, verdict: &ScreeningVerdict) -> String {
    let mut out = String::from("line,from,to,theta_hat,theta_max,termination,iterations,cuts_added,at_boundary\n");
    for r in &verdict.per_line {
        let line = &net.lines()[r.line];
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.line,
            line.from,
            line.to,
            if r.theta_hat.is_finite() { format!("{}", r.theta_hat) } else { "-inf".into() },
            line.relay_limit,
            termination_tag(r.termination),
            r.iterations,
            r.cuts_added,
            r.at_boundary,
        );
    }
    out
}

/// Minimal static SVG line chart of named series, for eyeballing
/// trajectories without external tooling.
pub fn svg_chart(title: &str, series: &[(&str, Vec<(f64, f64)>)]) -> String {
    const W: f64 = 900.0;
    const H: f64 = 480.0;
    const PAD: f64 = 50.0;
    let palette = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];

    let mut xmin = f64::INFINITY;
    let mut xmax = f64::NEG_INFINITY;
    let mut ymin = f64::INFINITY;
    let mut ymax = f64::NEG_INFINITY;
    for (_, pts) in series {
        for &(x, y) in pts {
            xmin = xmin.min(x);
            xmax = xmax.max(x);
            ymin = ymin.min(y);
            ymax = ymax.max(y);
        }
    }
    if !(xmin.is_finite() && ymin.is_finite()) || xmax <= xmin {
        xmin = 0.0;
        xmax = 1.0;
    }
    if ymax <= ymin {
        ymax = ymin + 1.0;
    }
    let sx = (W - 2.0 * PAD) / (xmax - xmin);
    let sy = (H - 2.0 * PAD) / (ymax - ymin);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">"
    );
    let _ = writeln!(out, "<rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<text x=\"{}\" y=\"24\" font-family=\"monospace\" font-size=\"16\">{title}</text>",
        PAD
    );
    let _ = writeln!(
        out,
        "<rect x=\"{PAD}\" y=\"{PAD}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"#999\"/>",
        W - 2.0 * PAD,
        H - 2.0 * PAD
    );
    for (k, (name, pts)) in series.iter().enumerate() {
        if pts.is_empty() {
            continue;
        }
        let color = palette[k % palette.len()];
        let mut path = String::new();
        for (n, &(x, y)) in pts.iter().enumerate() {
            let px = PAD + (x - xmin) * sx;
            let py = H - PAD - (y - ymin) * sy;
            let _ = write!(path, "{}{px:.2},{py:.2}", if n == 0 { "M" } else { " L" });
        }
        let _ = writeln!(out, "<path d=\"{path}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.2\"/>");
        let _ = writeln!(
            out,
            "<text x=\"{}\" y=\"{}\" font-family=\"monospace\" font-size=\"12\" fill=\"{color}\">{name}</text>",
            W - PAD + 4.0 - 40.0,
            PAD + 16.0 * (k as f64 + 1.0)
        );
    }
    out.push_str("</svg>\n");
    out
}
