//! Input data: the AC network case and the VSC MT-HVDC overlay.
//!
//! Both types are plain data. All powers are per-unit on `base_mva`, all
//! angles are radians. Parsing lives in [`matpower`] and [`mtdc_json`];
//! structural checks that need both halves live in [`validate`].

pub mod matpower;
pub mod mtdc_json;
pub mod validate;

use std::collections::HashMap;

pub use matpower::{parse_matpower_case, write_matpower_case};
pub use mtdc_json::{parse_vsc_extension, write_vsc_extension};
pub use validate::{validate, Finding, ValidationReport};

/// Bus classification taken from the MATPOWER bus-type column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BusKind {
    Pq,
    Pv,
    Slack,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BusRecord {
    pub id: u32,
    pub kind: BusKind,
    pub v_init: f64,
    pub theta_init: f64,
    pub p_load: f64,
    pub q_load: f64,
    /// Shunt conductance, per-unit at V = 1.
    pub g_shunt: f64,
    /// Shunt susceptance, per-unit at V = 1.
    pub b_shunt: f64,
    pub base_kv: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorRecord {
    pub bus: u32,
    pub p_set: f64,
    /// Reactive output from the case file. Used as a fixed injection only for
    /// generators sitting on PQ buses.
    pub q_init: f64,
    pub v_set: f64,
    pub q_min: f64,
    pub q_max: f64,
    pub in_service: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchRecord {
    pub from: u32,
    pub to: u32,
    pub r: f64,
    pub x: f64,
    pub b_charging: f64,
    /// Off-nominal turns ratio; 1.0 for lines.
    pub tap: f64,
    /// Phase shift in radians.
    pub shift: f64,
    pub in_service: bool,
}

/// The AC side of a power-flow problem.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkCase {
    pub base_mva: f64,
    pub buses: Vec<BusRecord>,
    pub generators: Vec<GeneratorRecord>,
    pub branches: Vec<BranchRecord>,
}

impl NetworkCase {
    /// Map from external bus id to position in `buses`.
    pub fn bus_lookup(&self) -> HashMap<u32, usize> {
        self.buses.iter().enumerate().map(|(i, b)| (b.id, i)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VscRole {
    Primary,
    Secondary,
}

/// Control objective of a converter while no limit is binding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VscControl {
    /// Holds active and reactive power drawn from the AC bus.
    PrimaryPq { p_set: f64, q_set: f64 },
    /// Holds active power and the AC bus voltage magnitude.
    PrimaryPv { p_set: f64, v_set: f64 },
    /// DC slack: holds the AC bus voltage and its DC node voltage.
    Secondary { v_set: f64, vdc_set: f64 },
}

impl VscControl {
    pub fn role(&self) -> VscRole {
        match self {
            VscControl::PrimaryPq { .. } | VscControl::PrimaryPv { .. } => VscRole::Primary,
            VscControl::Secondary { .. } => VscRole::Secondary,
        }
    }

    /// AC voltage setpoint if this converter regulates its bus voltage.
    pub fn ac_voltage_setpoint(&self) -> Option<f64> {
        match *self {
            VscControl::PrimaryPv { v_set, .. } | VscControl::Secondary { v_set, .. } => Some(v_set),
            VscControl::PrimaryPq { .. } => None,
        }
    }
}

/// One converter with its coupling transformer and ratings.
#[derive(Debug, Clone, PartialEq)]
pub struct VscRecord {
    pub id: u32,
    pub ac_bus: u32,
    pub dc_node: u32,
    pub control: VscControl,
    pub rsh: f64,
    pub xsh: f64,
    /// Constant loss term.
    pub loss_a: f64,
    /// Loss term linear in the converter current.
    pub loss_b: f64,
    /// Loss term quadratic in the converter current.
    pub loss_c: f64,
    pub vsh_min: f64,
    pub vsh_max: f64,
    pub ish_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcNodeRecord {
    pub id: u32,
    pub vdc_init: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcLineRecord {
    pub from: u32,
    pub to: u32,
    pub r: f64,
}

/// Converters, DC nodes and DC lines layered on top of a [`NetworkCase`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MtdcSystem {
    pub converters: Vec<VscRecord>,
    pub dc_nodes: Vec<DcNodeRecord>,
    pub dc_lines: Vec<DcLineRecord>,
    /// Declared DC voltage base, informational only.
    pub dc_base_kv: Option<f64>,
}

impl MtdcSystem {
    pub fn is_empty(&self) -> bool {
        self.converters.is_empty() && self.dc_nodes.is_empty() && self.dc_lines.is_empty()
    }

    pub fn node_lookup(&self) -> HashMap<u32, usize> {
        self.dc_nodes.iter().enumerate().map(|(i, n)| (n.id, i)).collect()
    }

    /// Connected components of the DC graph, as lists of node positions.
    /// Lines referencing unknown nodes are ignored.
    pub fn dc_islands(&self) -> Vec<Vec<usize>> {
        let lookup = self.node_lookup();
        let edges: Vec<(usize, usize)> = self
            .dc_lines
            .iter()
            .filter_map(|l| Some((*lookup.get(&l.from)?, *lookup.get(&l.to)?)))
            .collect();
        connected_components(self.dc_nodes.len(), &edges)
    }
}

/// Components of an undirected graph; each component is sorted and the list
/// is ordered by smallest member.
pub(crate) fn connected_components(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let mut adjacency = vec![Vec::new(); n];
    for &(a, b) in edges {
        adjacency[a].push(b);
        adjacency[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut components = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components
}

/// Finds a float `z` close to `guess` with `forward(z) == target`, so that
/// unit conversions written out to text come back bit-identical when read.
/// Falls back to `guess` when no such value lies within a few ulps.
pub(crate) fn exact_preimage(target: f64, guess: f64, forward: impl Fn(f64) -> f64) -> f64 {
    if !guess.is_finite() || forward(guess) == target {
        return guess;
    }
    let step = |z: f64, up: bool| -> f64 {
        if z == 0.0 {
            return if up { f64::from_bits(1) } else { -f64::from_bits(1) };
        }
        let bits = z.to_bits();
        let away = (z > 0.0) == up;
        f64::from_bits(if away { bits + 1 } else { bits - 1 })
    };
    let (mut lo, mut hi) = (guess, guess);
    for _ in 0..64 {
        hi = step(hi, true);
        if forward(hi) == target {
            return hi;
        }
        lo = step(lo, false);
        if forward(lo) == target {
            return lo;
        }
    }
    guess
}
