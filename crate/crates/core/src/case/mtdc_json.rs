//! JSON format for the VSC MT-HVDC overlay.
//!
//! ```json
//! {"converters":[{"id":1,"ac_bus":1,"dc_node":1,"role":"primary","control_mode":"PQ",
//!   "p_set":0.2,"q_set":0.1,"v_set":null,"vdc_set":null,"rsh":0.002,"xsh":0.1,
//!   "loss_a":0,"loss_b":0,"loss_c":0,"vsh_min":0.95,"vsh_max":1.0,"ish_max":1.0}],
//!  "dc_nodes":[{"id":1,"vdc_init":1.0}],
//!  "dc_lines":[{"from":1,"to":2,"r":1.0}]}
//! ```
//!
//! Loss coefficients default to zero. `control_mode` is required for primary
//! converters and ignored for secondary ones.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{DcLineRecord, DcNodeRecord, MtdcSystem, VscControl, VscRecord, VscRole};
use crate::error::CaseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
enum ModeTag {
    #[serde(rename = "PQ")]
    Pq,
    #[serde(rename = "PV")]
    Pv,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConverterEntry {
    id: u32,
    ac_bus: u32,
    dc_node: u32,
    role: VscRole,
    #[serde(default)]
    control_mode: Option<ModeTag>,
    #[serde(default)]
    p_set: Option<f64>,
    #[serde(default)]
    q_set: Option<f64>,
    #[serde(default)]
    v_set: Option<f64>,
    #[serde(default)]
    vdc_set: Option<f64>,
    rsh: f64,
    xsh: f64,
    #[serde(default)]
    loss_a: f64,
    #[serde(default)]
    loss_b: f64,
    #[serde(default)]
    loss_c: f64,
    vsh_min: f64,
    vsh_max: f64,
    ish_max: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeEntry {
    id: u32,
    #[serde(default = "unit_voltage")]
    vdc_init: f64,
}

fn unit_voltage() -> f64 {
    1.0
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineEntry {
    from: u32,
    to: u32,
    r: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OverlayFile {
    converters: Vec<ConverterEntry>,
    #[serde(default)]
    dc_nodes: Vec<NodeEntry>,
    #[serde(default)]
    dc_lines: Vec<LineEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dc_base_kv: Option<f64>,
}

fn require(value: Option<f64>, field: &str, id: u32) -> Result<f64, CaseError> {
    value.ok_or_else(|| CaseError::Schema(format!("converter {id}: missing {field}")))
}

fn control_of(entry: &ConverterEntry) -> Result<VscControl, CaseError> {
    let id = entry.id;
    match entry.role {
        VscRole::Primary => match entry.control_mode {
            Some(ModeTag::Pq) => Ok(VscControl::PrimaryPq {
                p_set: require(entry.p_set, "p_set", id)?,
                q_set: require(entry.q_set, "q_set", id)?,
            }),
            Some(ModeTag::Pv) => Ok(VscControl::PrimaryPv {
                p_set: require(entry.p_set, "p_set", id)?,
                v_set: require(entry.v_set, "v_set", id)?,
            }),
            None => Err(CaseError::Schema(format!(
                "converter {id}: primary converter needs control_mode PQ or PV"
            ))),
        },
        VscRole::Secondary => Ok(VscControl::Secondary {
            v_set: require(entry.v_set, "v_set", id)?,
            vdc_set: require(entry.vdc_set, "vdc_set", id)?,
        }),
    }
}

/// Parses the overlay JSON and checks its internal DC structure: unique ids,
/// resolvable node references, one converter per node and exactly one
/// secondary converter per DC island.
pub fn parse_vsc_extension(text: &str) -> Result<MtdcSystem, CaseError> {
    let file: OverlayFile = serde_json::from_str(text)?;

    let mut node_ids = HashSet::new();
    for node in &file.dc_nodes {
        if !node_ids.insert(node.id) {
            return Err(CaseError::Schema(format!("duplicate DC node id {}", node.id)));
        }
    }
    for line in &file.dc_lines {
        for end in [line.from, line.to] {
            if !node_ids.contains(&end) {
                return Err(CaseError::Schema(format!(
                    "DC line {}-{} references unknown node {end}",
                    line.from, line.to
                )));
            }
        }
    }

    let mut converter_ids = HashSet::new();
    let mut per_node: HashMap<u32, usize> = HashMap::new();
    let mut converters = Vec::with_capacity(file.converters.len());
    for entry in &file.converters {
        if !converter_ids.insert(entry.id) {
            return Err(CaseError::DuplicateConverter(entry.id));
        }
        if !node_ids.contains(&entry.dc_node) {
            return Err(CaseError::Schema(format!(
                "converter {} references unknown DC node {}",
                entry.id, entry.dc_node
            )));
        }
        *per_node.entry(entry.dc_node).or_default() += 1;
        converters.push(VscRecord {
            id: entry.id,
            ac_bus: entry.ac_bus,
            dc_node: entry.dc_node,
            control: control_of(entry)?,
            rsh: entry.rsh,
            xsh: entry.xsh,
            loss_a: entry.loss_a,
            loss_b: entry.loss_b,
            loss_c: entry.loss_c,
            vsh_min: entry.vsh_min,
            vsh_max: entry.vsh_max,
            ish_max: entry.ish_max,
        });
    }
    for node in &file.dc_nodes {
        let count = per_node.get(&node.id).copied().unwrap_or(0);
        if count != 1 {
            return Err(CaseError::Schema(format!(
                "DC node {} is referenced by {count} converters, expected exactly one",
                node.id
            )));
        }
    }

    let system = MtdcSystem {
        converters,
        dc_nodes: file
            .dc_nodes
            .iter()
            .map(|n| DcNodeRecord {
                id: n.id,
                vdc_init: n.vdc_init,
            })
            .collect(),
        dc_lines: file
            .dc_lines
            .iter()
            .map(|l| DcLineRecord {
                from: l.from,
                to: l.to,
                r: l.r,
            })
            .collect(),
        dc_base_kv: file.dc_base_kv,
    };

    for island in system.dc_islands() {
        let ids: HashSet<u32> = island.iter().map(|&i| system.dc_nodes[i].id).collect();
        let secondaries = system
            .converters
            .iter()
            .filter(|c| ids.contains(&c.dc_node) && c.control.role() == VscRole::Secondary)
            .count();
        let first = system.dc_nodes[island[0]].id;
        match secondaries {
            1 => {}
            0 => {
                return Err(CaseError::DcDisconnected(format!(
                    "DC node {first} has no path to a secondary converter"
                )))
            }
            count => return Err(CaseError::SecondaryCount { node: first, count }),
        }
    }
    Ok(system)
}

/// Serializes an overlay in the same schema [`parse_vsc_extension`] reads.
pub fn write_vsc_extension(system: &MtdcSystem) -> String {
    let converters = system
        .converters
        .iter()
        .map(|c| {
            let (mode, p, q, v, vdc) = match c.control {
                VscControl::PrimaryPq { p_set, q_set } => (Some(ModeTag::Pq), Some(p_set), Some(q_set), None, None),
                VscControl::PrimaryPv { p_set, v_set } => (Some(ModeTag::Pv), Some(p_set), None, Some(v_set), None),
                VscControl::Secondary { v_set, vdc_set } => (None, None, None, Some(v_set), Some(vdc_set)),
            };
            ConverterEntry {
                id: c.id,
                ac_bus: c.ac_bus,
                dc_node: c.dc_node,
                role: c.control.role(),
                control_mode: mode,
                p_set: p,
                q_set: q,
                v_set: v,
                vdc_set: vdc,
                rsh: c.rsh,
                xsh: c.xsh,
                loss_a: c.loss_a,
                loss_b: c.loss_b,
                loss_c: c.loss_c,
                vsh_min: c.vsh_min,
                vsh_max: c.vsh_max,
                ish_max: c.ish_max,
            }
        })
        .collect();
    let file = OverlayFile {
        converters,
        dc_nodes: system
            .dc_nodes
            .iter()
            .map(|n| NodeEntry {
                id: n.id,
                vdc_init: n.vdc_init,
            })
            .collect(),
        dc_lines: system
            .dc_lines
            .iter()
            .map(|l| LineEntry {
                from: l.from,
                to: l.to,
                r: l.r,
            })
            .collect(),
        dc_base_kv: system.dc_base_kv,
    };
    serde_json::to_string_pretty(&file).expect("overlay serialization cannot fail")
}
