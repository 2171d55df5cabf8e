//! Solve results, serializable as JSON.

use serde::{Deserialize, Serialize};

use crate::newton::linsolve::SolverStats;
use crate::vsc::{ControlQuantity, LimitStage, PinnedLimit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Converged,
    MaxIter,
    Diverged,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    Max,
    Min,
}

/// A limit transition applied during the iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LimitEvent {
    /// A generator unit left voltage control; its reactive output is fixed.
    GeneratorPinned { bus: u32, bound: Bound, q: f64, limit: f64 },
    /// A generator unit at a limit returned to voltage control.
    GeneratorReleased { bus: u32, bound: Bound, v: f64, v_set: f64 },
    /// A converter control was dropped and a terminal quantity fixed.
    ConverterPinned {
        converter: u32,
        released: ControlQuantity,
        pinned: PinnedLimit,
        value: f64,
        bound: f64,
    },
}

/// A limit active in the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BindingLimit {
    GeneratorQ { bus: u32, bound: Bound, q: f64 },
    ConverterVsh { converter: u32, bound: Bound, v_sh: f64 },
    ConverterIsh { converter: u32, i_sh: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BusResult {
    pub id: u32,
    pub v: f64,
    pub theta: f64,
    pub p_gen: f64,
    pub q_gen: f64,
    pub p_load: f64,
    pub q_load: f64,
    /// Reactive limit the bus's generators are held at, if any.
    pub q_limit: Option<Bound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConverterResult {
    pub id: u32,
    pub ac_bus: u32,
    pub dc_node: u32,
    pub p_sh: f64,
    pub q_sh: f64,
    pub p_dc_prime: f64,
    pub p_dc: f64,
    pub v_m: f64,
    pub v_sh: f64,
    pub theta_sh: f64,
    pub i_sh: f64,
    pub stage: LimitStage,
    pub pinned: Vec<PinnedLimit>,
    pub released: Vec<ControlQuantity>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DcNodeResult {
    pub id: u32,
    pub vdc: f64,
    /// Sum of converter Pdc at the node.
    pub p_dc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Evaluation number; 1 is the initial point.
    pub iteration: usize,
    pub residual_norm: f64,
    pub events: Vec<LimitEvent>,
    /// Hash of the Jacobian entry positions assembled after this evaluation.
    pub pattern_hash: Option<u64>,
}

/// Wall-clock durations in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    /// Reading input files; filled in by callers that parse.
    pub parse_ms: f64,
    /// Validation, model setup and initialization.
    pub analyze_ms: f64,
    /// The Newton loop.
    pub iterate_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub status: Status,
    /// Newton updates applied.
    pub iterations: usize,
    pub residual_norm: f64,
    pub base_mva: f64,
    pub dimension: usize,
    pub jacobian_nnz: usize,
    pub buses: Vec<BusResult>,
    pub converters: Vec<ConverterResult>,
    pub dc_nodes: Vec<DcNodeResult>,
    pub binding_limits: Vec<BindingLimit>,
    pub iteration_log: Vec<IterationRecord>,
    pub timings: Timings,
    pub solver_stats: SolverStats,
    /// Reason for a non-converged status.
    pub failure: Option<String>,
}

impl Solution {
    pub fn bus(&self, id: u32) -> Option<&BusResult> {
        self.buses.iter().find(|b| b.id == id)
    }

    pub fn converter(&self, id: u32) -> Option<&ConverterResult> {
        self.converters.iter().find(|c| c.id == id)
    }

    pub fn dc_node(&self, id: u32) -> Option<&DcNodeResult> {
        self.dc_nodes.iter().find(|n| n.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serializes")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}
