//! Native JSON case format: the canonical fixture format for tests.
//!
//! Unlike MATPOWER files it carries everything the model needs, including
//! inertia, damping, and per-line relay limits, and it must be balanced as
//! written. Serializing a parsed network and parsing it back reproduces the
//! network field for field.

use gridshield_core::network::{Bus, BusKind, Line, PowerNetwork};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct CaseFile {
    buses: Vec<BusEntry>,
    lines: Vec<LineEntry>,
    reference_bus: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct BusEntry {
    id: usize,
    kind: KindTag,
    p: f64,
    v: f64,
    #[serde(rename = "M")]
    m: f64,
    gamma: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum KindTag {
    Generator,
    Load,
}

#[derive(Debug, Serialize, Deserialize)]
struct LineEntry {
    from: usize,
    to: usize,
    b: f64,
    theta_max: f64,
}

/// Parses the native JSON case format.
pub fn parse_json_case(text: &str) -> Result<PowerNetwork> {
    let case: CaseFile =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("json case: {e}")))?;
    let buses = case
        .buses
        .into_iter()
        .map(|b| Bus {
            id: b.id,
            kind: match b.kind {
                KindTag::Generator => BusKind::Generator,
                KindTag::Load => BusKind::Load,
            },
            p: b.p,
            v: b.v,
            inertia: b.m,
            damping: b.gamma,
        })
        .collect();
    let lines = case
        .lines
        .into_iter()
        .map(|l| Line { from: l.from, to: l.to, susceptance: l.b, relay_limit: l.theta_max })
        .collect();
    Ok(PowerNetwork::new(buses, lines, case.reference_bus)?)
}

/// Serializes a network into the native JSON case format.
pub fn write_json_case(net: &PowerNetwork) -> String {
    let case = CaseFile {
        buses: net
            .buses()
            .iter()
            .map(|b| BusEntry {
                id: b.id,
                kind: match b.kind {
                    BusKind::Generator => KindTag::Generator,
                    BusKind::Load => KindTag::Load,
                },
                p: b.p,
                v: b.v,
                m: b.inertia,
                gamma: b.damping,
            })
            .collect(),
        lines: net
            .lines()
            .iter()
            .map(|l| LineEntry {
                from: l.from,
                to: l.to,
                b: l.susceptance,
                theta_max: l.relay_limit,
            })
            .collect(),
        reference_bus: net.reference_bus(),
    };
    serde_json::to_string_pretty(&case).expect("case serialization cannot fail")
}
