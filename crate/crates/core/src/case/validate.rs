use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{connected_components, BusKind, MtdcSystem, NetworkCase, VscRole};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Finding {
    pub severity: Severity,
    pub message: String,
}

/// Outcome of [`validate`]. The structure is solvable iff there are no errors.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    fn error(&mut self, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Error,
            message: message.into(),
        });
    }

    fn warning(&mut self, message: impl Into<String>) {
        self.findings.push(Finding {
            severity: Severity::Warning,
            message: message.into(),
        });
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn is_ok(&self) -> bool {
        self.errors().next().is_none()
    }

    /// True if some error message contains `needle`.
    pub fn has_error(&self, needle: &str) -> bool {
        self.errors().any(|f| f.message.contains(needle))
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let errors: Vec<&str> = self.errors().map(|e| e.message.as_str()).collect();
        if errors.is_empty() {
            write!(f, "no errors")
        } else {
            write!(f, "{}", errors.join("; "))
        }
    }
}

/// Checks that the AC case and overlay form a solvable structure.
pub fn validate(case: &NetworkCase, mtdc: &MtdcSystem) -> ValidationReport {
    let mut report = ValidationReport::default();
    check_ac(case, &mut report);
    check_mtdc(case, mtdc, &mut report);
    report
}

fn check_ac(case: &NetworkCase, report: &mut ValidationReport) {
    if !(case.base_mva > 0.0) {
        report.error(format!("nonpositive base_mva {}", case.base_mva));
    }
    let mut ids = HashSet::new();
    for bus in &case.buses {
        if !ids.insert(bus.id) {
            report.error(format!("duplicate bus id {}", bus.id));
        }
        if !(bus.v_init > 0.0) {
            report.error(format!("bus {}: nonpositive initial voltage", bus.id));
        }
    }
    let lookup = case.bus_lookup();

    let mut gen_buses = HashSet::new();
    for (k, g) in case.generators.iter().enumerate() {
        if !lookup.contains_key(&g.bus) {
            report.error(format!("generator {k}: unresolved bus {}", g.bus));
            continue;
        }
        if !g.in_service {
            continue;
        }
        gen_buses.insert(g.bus);
        if g.q_min > g.q_max {
            report.error(format!("generator at bus {}: q_min > q_max", g.bus));
        }
        if !(g.v_set > 0.0) {
            report.error(format!("generator at bus {}: nonpositive v_set", g.bus));
        }
    }

    let mut edges = Vec::new();
    for br in &case.branches {
        let (Some(&f), Some(&t)) = (lookup.get(&br.from), lookup.get(&br.to)) else {
            report.error(format!("branch {}-{}: unresolved bus reference", br.from, br.to));
            continue;
        };
        if !br.in_service {
            continue;
        }
        if br.r == 0.0 && br.x == 0.0 {
            report.error(format!("branch {}-{}: zero impedance", br.from, br.to));
        }
        if !(br.tap > 0.0) {
            report.error(format!("branch {}-{}: nonpositive tap", br.from, br.to));
        }
        edges.push((f, t));
    }

    for bus in &case.buses {
        if bus.kind == BusKind::Pv && !gen_buses.contains(&bus.id) {
            report.warning(format!("PV bus {} has no in-service generator, treated as PQ", bus.id));
        }
        if bus.kind == BusKind::Slack && !gen_buses.contains(&bus.id) {
            report.error(format!("slack bus {} has no in-service generator", bus.id));
        }
    }

    for island in connected_components(case.buses.len(), &edges) {
        let slacks = island.iter().filter(|&&i| case.buses[i].kind == BusKind::Slack).count();
        let first = case.buses[island[0]].id;
        if slacks == 0 {
            report.error(format!("AC island containing bus {first} has no slack bus"));
        } else if slacks > 1 {
            report.error(format!("AC island containing bus {first} has {slacks} slack buses"));
        }
    }
}

fn check_mtdc(case: &NetworkCase, mtdc: &MtdcSystem, report: &mut ValidationReport) {
    let bus_lookup = case.bus_lookup();
    let node_lookup = mtdc.node_lookup();

    let mut node_ids = HashSet::new();
    for node in &mtdc.dc_nodes {
        if !node_ids.insert(node.id) {
            report.error(format!("duplicate DC node id {}", node.id));
        }
        if !(node.vdc_init > 0.0) {
            report.error(format!("DC node {}: nonpositive vdc_init", node.id));
        }
    }
    for line in &mtdc.dc_lines {
        if !node_lookup.contains_key(&line.from) || !node_lookup.contains_key(&line.to) {
            report.error(format!("DC line {}-{}: unresolved dc node", line.from, line.to));
        }
        if !(line.r > 0.0) {
            report.error(format!("DC line {}-{}: nonpositive DC resistance", line.from, line.to));
        }
    }

    let voltage_controlled_by_gen: HashSet<u32> = case
        .buses
        .iter()
        .filter(|b| {
            matches!(b.kind, BusKind::Pv | BusKind::Slack)
                && case.generators.iter().any(|g| g.in_service && g.bus == b.id)
        })
        .map(|b| b.id)
        .collect();

    let mut converter_ids = HashSet::new();
    let mut per_node: HashMap<u32, usize> = HashMap::new();
    let mut vsc_voltage_buses: HashMap<u32, u32> = HashMap::new();
    for c in &mtdc.converters {
        if !converter_ids.insert(c.id) {
            report.error(format!("duplicate converter id {}", c.id));
        }
        if !bus_lookup.contains_key(&c.ac_bus) {
            report.error(format!("converter {}: unresolved ac_bus {}", c.id, c.ac_bus));
        }
        if !node_lookup.contains_key(&c.dc_node) {
            report.error(format!("converter {}: unresolved dc_node {}", c.id, c.dc_node));
        }
        *per_node.entry(c.dc_node).or_default() += 1;
        if !(c.vsh_min > 0.0 && c.vsh_min < c.vsh_max) {
            report.error(format!("converter {}: requires 0 < vsh_min < vsh_max", c.id));
        }
        if !(c.ish_max > 0.0) {
            report.error(format!("converter {}: nonpositive ish_max", c.id));
        }
        if !(c.rsh * c.rsh + c.xsh * c.xsh > 0.0) {
            report.error(format!("converter {}: zero coupling impedance", c.id));
        }
        if c.loss_a < 0.0 || c.loss_b < 0.0 || c.loss_c < 0.0 {
            report.warning(format!("converter {}: negative loss coefficient", c.id));
        }
        if let Some(v) = c.control.ac_voltage_setpoint() {
            if !(v > 0.0) {
                report.error(format!("converter {}: nonpositive voltage setpoint", c.id));
            }
            if voltage_controlled_by_gen.contains(&c.ac_bus) {
                report.error(format!(
                    "converter {}: conflicting voltage control at bus {} (already generator controlled)",
                    c.id, c.ac_bus
                ));
            }
            if let Some(other) = vsc_voltage_buses.insert(c.ac_bus, c.id) {
                report.error(format!(
                    "converters {other} and {}: conflicting voltage control at bus {}",
                    c.id, c.ac_bus
                ));
            }
        }
        if let super::VscControl::Secondary { vdc_set, .. } = c.control {
            if !(vdc_set > 0.0) {
                report.error(format!("converter {}: nonpositive vdc_set", c.id));
            }
        }
    }
    for node in &mtdc.dc_nodes {
        let count = per_node.get(&node.id).copied().unwrap_or(0);
        if count != 1 {
            report.error(format!(
                "DC node {} is referenced by {count} converters, expected exactly one",
                node.id
            ));
        }
    }

    for island in mtdc.dc_islands() {
        let ids: HashSet<u32> = island.iter().map(|&i| mtdc.dc_nodes[i].id).collect();
        let secondaries = mtdc
            .converters
            .iter()
            .filter(|c| ids.contains(&c.dc_node) && c.control.role() == VscRole::Secondary)
            .count();
        let first = mtdc.dc_nodes[island[0]].id;
        if secondaries != 1 {
            report.error(format!(
                "DC island containing node {first} has {secondaries} secondary converters, expected exactly one"
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{BranchRecord, BusRecord, DcLineRecord, DcNodeRecord, GeneratorRecord, VscControl, VscRecord};

    fn bus(id: u32, kind: BusKind) -> BusRecord {
        BusRecord {
            id,
            kind,
            v_init: 1.0,
            theta_init: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            g_shunt: 0.0,
            b_shunt: 0.0,
            base_kv: 0.0,
        }
    }

    fn three_bus() -> NetworkCase {
        let line = |from, to| BranchRecord {
            from,
            to,
            r: 0.01,
            x: 0.1,
            b_charging: 0.0,
            tap: 1.0,
            shift: 0.0,
            in_service: true,
        };
        NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(1, BusKind::Slack), bus(2, BusKind::Pq), bus(3, BusKind::Pq)],
            generators: vec![GeneratorRecord {
                bus: 1,
                p_set: 0.0,
                q_init: 0.0,
                v_set: 1.0,
                q_min: -1.0,
                q_max: 1.0,
                in_service: true,
            }],
            branches: vec![line(1, 2), line(2, 3)],
        }
    }

    fn converter(id: u32, ac_bus: u32, control: VscControl) -> VscRecord {
        VscRecord {
            id,
            ac_bus,
            dc_node: id,
            control,
            rsh: 0.002,
            xsh: 0.1,
            loss_a: 0.0,
            loss_b: 0.0,
            loss_c: 0.0,
            vsh_min: 0.9,
            vsh_max: 1.1,
            ish_max: 1.0,
        }
    }

    fn two_terminal() -> MtdcSystem {
        MtdcSystem {
            converters: vec![
                converter(1, 2, VscControl::PrimaryPq { p_set: 0.1, q_set: 0.0 }),
                converter(
                    2,
                    3,
                    VscControl::Secondary {
                        v_set: 1.0,
                        vdc_set: 1.0,
                    },
                ),
            ],
            dc_nodes: vec![
                DcNodeRecord { id: 1, vdc_init: 1.0 },
                DcNodeRecord { id: 2, vdc_init: 1.0 },
            ],
            dc_lines: vec![DcLineRecord { from: 1, to: 2, r: 1.0 }],
            dc_base_kv: None,
        }
    }

    #[test]
    fn clean_structure_passes() {
        let report = validate(&three_bus(), &two_terminal());
        assert!(report.is_ok(), "{report}");
    }

    #[test]
    fn unresolved_ac_bus() {
        let mut mtdc = two_terminal();
        mtdc.converters[0].ac_bus = 99;
        let report = validate(&three_bus(), &mtdc);
        assert!(report.has_error("unresolved ac_bus"));
    }

    #[test]
    fn zero_dc_resistance() {
        let mut mtdc = two_terminal();
        mtdc.dc_lines[0].r = 0.0;
        let report = validate(&three_bus(), &mtdc);
        assert!(report.has_error("nonpositive DC resistance"));
    }

    #[test]
    fn disconnected_ac_island_without_slack() {
        let mut case = three_bus();
        case.branches[1].in_service = false;
        let report = validate(&case, &MtdcSystem::default());
        assert!(report.has_error("no slack bus"));
    }

    #[test]
    fn zero_impedance_branch() {
        let mut case = three_bus();
        case.branches[0].r = 0.0;
        case.branches[0].x = 0.0;
        assert!(validate(&case, &MtdcSystem::default()).has_error("zero impedance"));
        case.branches[0].in_service = false;
        case.branches.push(case.branches[1].clone());
        case.branches[2].from = 1;
        assert!(validate(&case, &MtdcSystem::default()).is_ok());
    }

    #[test]
    fn voltage_control_conflict_with_generator() {
        let mut mtdc = two_terminal();
        mtdc.converters[1].ac_bus = 1;
        assert!(validate(&three_bus(), &mtdc).has_error("conflicting voltage control"));
    }

    #[test]
    fn converter_limits_checked() {
        let mut mtdc = two_terminal();
        mtdc.converters[0].vsh_min = 1.2;
        mtdc.converters[1].ish_max = 0.0;
        let report = validate(&three_bus(), &mtdc);
        assert!(report.has_error("vsh_min < vsh_max"));
        assert!(report.has_error("ish_max"));
    }

    #[test]
    fn missing_secondary() {
        let mut mtdc = two_terminal();
        mtdc.converters[1].control = VscControl::PrimaryPq { p_set: 0.0, q_set: 0.0 };
        assert!(validate(&three_bus(), &mtdc).has_error("secondary"));
    }

    #[test]
    fn pv_bus_without_generator_warns() {
        let mut case = three_bus();
        case.buses[2].kind = BusKind::Pv;
        let report = validate(&case, &MtdcSystem::default());
        assert!(report.is_ok());
        assert_eq!(report.warnings().count(), 1);
    }
}
