use serde::{Deserialize, Serialize};

use super::AcModel;
use crate::newton::layout::VariableLayout;
use crate::newton::state::SolverState;
use crate::solution::{Bound, LimitEvent};

/// What a generator unit's control row currently enforces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenMode {
    VoltageControl,
    AtQMax,
    AtQMin,
}

/// Applies generator reactive-limit transitions to `state`.
///
/// Units at a limit whose bus voltage has moved past the setpoint in the
/// relieving direction return to voltage control. Then at most `budget`
/// voltage-controlled units outside `[q_min, q_max]` are pinned to the
/// violated limit, largest violation first. Slack units are never limited.
pub fn pv_limit_update(
    ac: &AcModel,
    layout: &VariableLayout,
    state: &mut SolverState,
    budget: usize,
) -> Vec<LimitEvent> {
    let mut events = Vec::new();
    let mut candidates = Vec::new();
    for (u, unit) in ac.units.iter().enumerate() {
        if unit.slack {
            continue;
        }
        let v = state.x[layout.vm(unit.bus)];
        let qg = state.x[layout.qg(u)];
        let bus = ac.bus_ids[unit.bus];
        match state.gen_modes[u] {
            GenMode::AtQMax if v > unit.v_set => {
                state.gen_modes[u] = GenMode::VoltageControl;
                events.push(LimitEvent::GeneratorReleased {
                    bus,
                    bound: Bound::Max,
                    v,
                    v_set: unit.v_set,
                });
            }
            GenMode::AtQMin if v < unit.v_set => {
                state.gen_modes[u] = GenMode::VoltageControl;
                events.push(LimitEvent::GeneratorReleased {
                    bus,
                    bound: Bound::Min,
                    v,
                    v_set: unit.v_set,
                });
            }
            GenMode::VoltageControl if qg > unit.q_max => candidates.push((qg - unit.q_max, u, Bound::Max)),
            GenMode::VoltageControl if qg < unit.q_min => candidates.push((unit.q_min - qg, u, Bound::Min)),
            _ => {}
        }
    }
    candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    for &(_, u, bound) in candidates.iter().take(budget) {
        let unit = &ac.units[u];
        let (mode, limit) = match bound {
            Bound::Max => (GenMode::AtQMax, unit.q_max),
            Bound::Min => (GenMode::AtQMin, unit.q_min),
        };
        let q = state.x[layout.qg(u)];
        state.gen_modes[u] = mode;
        state.x[layout.qg(u)] = limit;
        events.push(LimitEvent::GeneratorPinned {
            bus: ac.bus_ids[unit.bus],
            bound,
            q,
            limit,
        });
    }
    events
}
