//! Tolerant parser for the MATPOWER case subset used by the screening
//! pipeline.
//!
//! Only the columns the lossless model needs are read: bus number, type,
//! Pd, and Vm from the bus table; bus and Pg from the generator table; and
//! fbus, tbus, x, status from the branch table. Resistance, shunts, ratings,
//! transformer taps, and everything else are ignored.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use gridshield_core::network::{Bus, BusKind, Line, PowerNetwork};
use serde::Deserialize;

use crate::{Error, Result};

/// Machine parameters MATPOWER files do not carry.
///
/// Inertia is in per-unit * s^2 and damping in per-unit * s, both on the
/// case MVA base. Loads default to one hundredth of the generator inertia
/// so kinetic energy stays defined at every node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DynamicsDefaults {
    pub m_gen: f64,
    pub m_load: f64,
    pub gamma_gen: f64,
    pub gamma_load: f64,
}

impl Default for DynamicsDefaults {
    fn default() -> Self {
        Self { m_gen: 0.2, m_load: 0.002, gamma_gen: 0.02, gamma_load: 0.002 }
    }
}

/// Optional per-bus overrides for inertia and damping, keyed by bus id.
///
/// Sidecar files look like `{"10": {"m": 0.4, "gamma": 0.05}, "59": ...}`;
/// either field may be omitted to keep the default.
pub type DynamicsSidecar = BTreeMap<usize, SidecarEntry>;

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct SidecarEntry {
    #[serde(default)]
    pub m: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
}

pub fn parse_sidecar(text: &str) -> Result<DynamicsSidecar> {
    let raw: BTreeMap<String, SidecarEntry> = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("dynamics sidecar: {e}")))?;
    let mut map = BTreeMap::new();
    for (key, entry) in raw {
        let id: usize = key
            .parse()
            .map_err(|_| Error::Parse(format!("dynamics sidecar: bad bus id {key:?}")))?;
        map.insert(id, entry);
    }
    Ok(map)
}

/// Parses a MATPOWER case into a validated network.
///
/// Susceptance is `1/x` per the lossless assumption. Out-of-service
/// branches are dropped; parallel circuits merge by susceptance addition.
/// Any injection residual lands on the reference bus, which is the first
/// type-3 bus. Relay limits start at `pi/2` (the widest admissible value);
/// callers narrow them afterwards.
pub fn parse_matpower(
    text: &str,
    dynamics: &DynamicsDefaults,
    sidecar: Option<&DynamicsSidecar>,
) -> Result<PowerNetwork> {
    let clean = strip_comments(text);
    let base_mva = parse_base_mva(&clean)?;
    let bus_rows = parse_matrix(&clean, "mpc.bus")?;
    let gen_rows = parse_matrix(&clean, "mpc.gen")?;
    let branch_rows = parse_matrix(&clean, "mpc.branch")?;

    let mut pg_by_bus: BTreeMap<usize, f64> = BTreeMap::new();
    for (i, row) in gen_rows.iter().enumerate() {
        if row.len() < 2 {
            return Err(Error::Parse(format!("gen row {i}: expected at least 2 columns")));
        }
        let bus = as_bus_id(row[0], &format!("gen row {i}"))?;
        *pg_by_bus.entry(bus).or_insert(0.0) += row[1];
    }

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut reference = None;
    for (i, row) in bus_rows.iter().enumerate() {
        if row.len() < 8 {
            return Err(Error::Parse(format!("bus row {i}: expected at least 8 columns")));
        }
        let id = as_bus_id(row[0], &format!("bus row {i}"))?;
        let bus_type = row[1] as i64;
        let pd = row[2];
        let vm = row[7];
        if vm <= 0.0 {
            return Err(Error::Parse(format!("bus {id}: voltage magnitude must be positive")));
        }
        let kind = match bus_type {
            2 | 3 => BusKind::Generator,
            _ => BusKind::Load,
        };
        if bus_type == 3 && reference.is_none() {
            reference = Some(id);
        }
        let p = (pg_by_bus.get(&id).copied().unwrap_or(0.0) - pd) / base_mva;
        let (mut inertia, mut damping) = match kind {
            BusKind::Generator => (dynamics.m_gen, dynamics.gamma_gen),
            BusKind::Load => (dynamics.m_load, dynamics.gamma_load),
        };
        if let Some(entry) = sidecar.and_then(|s| s.get(&id)) {
            if let Some(m) = entry.m {
                inertia = m;
            }
            if let Some(g) = entry.gamma {
                damping = g;
            }
        }
        buses.push(Bus { id, kind, p, v: vm, inertia, damping });
    }
    let reference =
        reference.ok_or_else(|| Error::Parse("no reference (type 3) bus in case".into()))?;

    let mut lines = Vec::new();
    for (i, row) in branch_rows.iter().enumerate() {
        if row.len() < 11 {
            return Err(Error::Parse(format!("branch row {i}: expected at least 11 columns")));
        }
        if row[10] == 0.0 {
            continue;
        }
        let from = as_bus_id(row[0], &format!("branch row {i}"))?;
        let to = as_bus_id(row[1], &format!("branch row {i}"))?;
        let x = row[3];
        if x <= 0.0 {
            return Err(Error::Parse(format!(
                "branch {from}-{to}: nonpositive reactance {x}"
            )));
        }
        lines.push(Line { from, to, susceptance: 1.0 / x, relay_limit: FRAC_PI_2 });
    }

    Ok(PowerNetwork::new_balancing_reference(buses, lines, reference)?)
}

fn strip_comments(text: &str) -> String {
    text.lines()
        .map(|line| match line.find('%') {
            Some(pos) => &line[..pos],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}

fn parse_base_mva(text: &str) -> Result<f64> {
    let key = "mpc.baseMVA";
    let start = text
        .find(key)
        .ok_or_else(|| Error::Parse("missing mpc.baseMVA".into()))?;
    let rest = &text[start + key.len()..];
    let rest = rest.trim_start().strip_prefix('=').ok_or_else(|| {
        Error::Parse("malformed mpc.baseMVA assignment".into())
    })?;
    let end = rest.find(';').unwrap_or(rest.len());
    let value: f64 = rest[..end]
        .trim()
        .parse()
        .map_err(|_| Error::Parse("malformed mpc.baseMVA value".into()))?;
    if value <= 0.0 {
        return Err(Error::Parse("baseMVA must be positive".into()));
    }
    Ok(value)
}

/// Extracts the numeric rows of `NAME = [ ... ];`, tolerating arbitrary
/// whitespace, newlines between rows, and trailing semicolons per row.
fn parse_matrix(text: &str, name: &str) -> Result<Vec<Vec<f64>>> {
    let start = text
        .find(name)
        .ok_or_else(|| Error::Parse(format!("missing {name} table")))?;
    let rest = &text[start + name.len()..];
    let open = rest
        .find('[')
        .ok_or_else(|| Error::Parse(format!("{name}: missing '['")))?;
    let rest = &rest[open + 1..];
    let close = rest
        .find(']')
        .ok_or_else(|| Error::Parse(format!("{name}: missing ']'")))?;
    let body = &rest[..close];
    let mut rows = Vec::new();
    for raw in body.split(';') {
        let mut row = Vec::new();
        for field in raw.split([' ', '\t', ',', '\n', '\r']) {
            let field = field.trim();
            if field.is_empty() {
                continue;
            }
            let value: f64 = field.parse().map_err(|_| {
                Error::Parse(format!("{name}: unreadable number {field:?}"))
            })?;
            row.push(value);
        }
        if !row.is_empty() {
            rows.push(row);
        }
    }
    if rows.is_empty() {
        return Err(Error::Parse(format!("{name}: empty table")));
    }
    Ok(rows)
}

fn as_bus_id(value: f64, context: &str) -> Result<usize> {
    if value.fract() != 0.0 || value < 0.0 || value > u32::MAX as f64 {
        return Err(Error::Parse(format!("{context}: bad bus id {value}")));
    }
    Ok(value as usize)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_BUS: &str = r#"
function mpc = two_bus
mpc.version = '2';
mpc.baseMVA = 100;
mpc.bus = [
    1  3  0   0  0 0 1 1.0 0 138 1 1.06 0.94;
    2  1  50  10 0 0 1 1.0 0 138 1 1.06 0.94;
];
mpc.gen = [
    1 50 0 300 -300 1.0 100 1 100 0;
];
mpc.branch = [
    1 2 0.01 0.4 0 0 0 0 0 0 1 -360 360;
];
"#;

    #[test]
    fn parses_the_two_bus_fixture() {
        let net = parse_matpower(TWO_BUS, &DynamicsDefaults::default(), None).unwrap();
        assert_eq!(net.n(), 2);
        assert_eq!(net.lines().len(), 1);
        assert!((net.lines()[0].susceptance - 2.5).abs() < 1e-12);
        assert!((net.buses()[0].p - 0.5).abs() < 1e-12);
        assert!((net.buses()[1].p + 0.5).abs() < 1e-12);
        assert_eq!(net.buses()[0].kind, BusKind::Generator);
        assert_eq!(net.buses()[1].kind, BusKind::Load);
        assert_eq!(net.reference_bus(), 1);
    }

    #[test]
    fn out_of_service_branch_disconnects() {
        let text = TWO_BUS.replace("0 0 1 -360 360", "0 0 0 -360 360");
        let err = parse_matpower(&text, &DynamicsDefaults::default(), None).unwrap_err();
        assert!(matches!(err, Error::Core(gridshield_core::Error::Topology(_))), "{err}");
    }

    #[test]
    fn nonpositive_reactance_is_rejected() {
        let text = TWO_BUS.replace("0.01 0.4", "0.01 -0.4");
        let err = parse_matpower(&text, &DynamicsDefaults::default(), None).unwrap_err();
        assert!(matches!(err, Error::Parse(_)), "{err}");
    }

    #[test]
    fn missing_tables_are_parse_errors() {
        let text = TWO_BUS.replace("mpc.gen", "mpc.whatever");
        assert!(matches!(
            parse_matpower(&text, &DynamicsDefaults::default(), None),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn parallel_branches_merge() {
        let text = TWO_BUS.replace(
            "    1 2 0.01 0.4 0 0 0 0 0 0 1 -360 360;",
            "    1 2 0.01 0.4 0 0 0 0 0 0 1 -360 360;\n    2 1 0.01 0.8 0 0 0 0 0 0 1 -360 360;",
        );
        let net = parse_matpower(&text, &DynamicsDefaults::default(), None).unwrap();
        assert_eq!(net.lines().len(), 1);
        assert!((net.lines()[0].susceptance - 3.75).abs() < 1e-12);
    }

    #[test]
    fn residual_lands_on_the_reference_bus() {
        // generation exceeds load by 10 MW; the slack absorbs it
        let text = TWO_BUS.replace("1 50 0 300", "1 60 0 300");
        let net = parse_matpower(&text, &DynamicsDefaults::default(), None).unwrap();
        let total: f64 = net.buses().iter().map(|b| b.p).sum();
        assert!(total.abs() < 1e-12);
        assert!((net.buses()[0].p - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sidecar_overrides_defaults() {
        let sidecar = parse_sidecar(r#"{"2": {"m": 0.7}, "1": {"gamma": 0.5}}"#).unwrap();
        let defaults = DynamicsDefaults::default();
        let net = parse_matpower(TWO_BUS, &defaults, Some(&sidecar)).unwrap();
        assert_eq!(net.buses()[0].inertia, defaults.m_gen);
        assert_eq!(net.buses()[0].damping, 0.5);
        assert_eq!(net.buses()[1].inertia, 0.7);
        assert_eq!(net.buses()[1].damping, defaults.gamma_load);
    }

    #[test]
    fn load_inertia_default_is_a_hundredth_of_generator() {
        let d = DynamicsDefaults::default();
        assert!((d.m_load / d.m_gen - 0.01).abs() < 1e-12);
    }
}
