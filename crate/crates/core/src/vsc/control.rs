//! Converter control slots and the per-converter limit state machine.
//!
//! Each converter owns two control rows. While no limit binds they hold the
//! control objectives; a released slot's row pins the violated quantity to
//! its bound instead. Primaries give up reactive or AC voltage control first
//! and active power second. Secondaries give up AC voltage first and DC
//! voltage second.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Converter, MtdcModel};
use crate::case::VscControl;
use crate::newton::layout::{VariableLayout, VscVar};
use crate::newton::state::SolverState;
use crate::solution::LimitEvent;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitStage {
    #[default]
    AllControlsActive,
    FirstReleased,
    SecondReleased,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PinnedLimit {
    VshAtMax,
    VshAtMin,
    IshAtMax,
}

impl PinnedLimit {
    fn is_vsh(self) -> bool {
        matches!(self, PinnedLimit::VshAtMax | PinnedLimit::VshAtMin)
    }

    pub fn bound(self, conv: &Converter) -> f64 {
        match self {
            PinnedLimit::VshAtMax => conv.vsh_max,
            PinnedLimit::VshAtMin => conv.vsh_min,
            PinnedLimit::IshAtMax => conv.ish_max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlQuantity {
    ActivePower,
    ReactivePower,
    AcVoltage,
    DcVoltage,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlSlot {
    Ctrl1,
    Ctrl2,
}

/// Latched release state of one converter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct VscLimitState {
    pub stage: LimitStage,
    pub ctrl1: Option<PinnedLimit>,
    pub ctrl2: Option<PinnedLimit>,
}

impl VscLimitState {
    pub fn pinned(&self, slot: ControlSlot) -> Option<PinnedLimit> {
        match slot {
            ControlSlot::Ctrl1 => self.ctrl1,
            ControlSlot::Ctrl2 => self.ctrl2,
        }
    }

    pub fn pinned_limits(&self) -> impl Iterator<Item = PinnedLimit> {
        self.ctrl1.into_iter().chain(self.ctrl2)
    }

    fn pin(&mut self, slot: ControlSlot, limit: PinnedLimit) {
        match slot {
            ControlSlot::Ctrl1 => self.ctrl1 = Some(limit),
            ControlSlot::Ctrl2 => self.ctrl2 = Some(limit),
        }
        self.stage = match self.stage {
            LimitStage::AllControlsActive => LimitStage::FirstReleased,
            _ => LimitStage::SecondReleased,
        };
    }
}

/// Quantity a slot regulates while active.
pub fn slot_quantity(control: &VscControl, slot: ControlSlot) -> ControlQuantity {
    use ControlQuantity::*;
    match (control, slot) {
        (VscControl::PrimaryPq { .. }, ControlSlot::Ctrl1) => ActivePower,
        (VscControl::PrimaryPq { .. }, ControlSlot::Ctrl2) => ReactivePower,
        (VscControl::PrimaryPv { .. }, ControlSlot::Ctrl1) => ActivePower,
        (VscControl::PrimaryPv { .. }, ControlSlot::Ctrl2) => AcVoltage,
        (VscControl::Secondary { .. }, ControlSlot::Ctrl1) => AcVoltage,
        (VscControl::Secondary { .. }, ControlSlot::Ctrl2) => DcVoltage,
    }
}

/// Slots in the order they are released.
pub fn release_order(control: &VscControl) -> [ControlSlot; 2] {
    match control {
        VscControl::Secondary { .. } => [ControlSlot::Ctrl1, ControlSlot::Ctrl2],
        _ => [ControlSlot::Ctrl2, ControlSlot::Ctrl1],
    }
}

/// Controls given up so far, in release order.
pub fn released_controls(control: &VscControl, limits: &VscLimitState) -> Vec<ControlQuantity> {
    release_order(control)
        .into_iter()
        .filter(|&slot| limits.pinned(slot).is_some())
        .map(|slot| slot_quantity(control, slot))
        .collect()
}

/// Quantities a control row may depend on, in [`CONTROL_COLUMNS`] order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlInputs {
    pub p_sh: f64,
    pub q_sh: f64,
    pub v: f64,
    pub vdc: f64,
    pub v_sh: f64,
    pub i_sh: f64,
}

impl ControlInputs {
    fn as_array(&self) -> [f64; 6] {
        [self.p_sh, self.q_sh, self.v, self.vdc, self.v_sh, self.i_sh]
    }
}

/// Columns every control row allocates, so a release only rewrites values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlColumn {
    Psh,
    Qsh,
    BusVoltage,
    DcVoltage,
    Vsh,
    Ish,
}

pub const CONTROL_COLUMNS: [ControlColumn; 6] = [
    ControlColumn::Psh,
    ControlColumn::Qsh,
    ControlColumn::BusVoltage,
    ControlColumn::DcVoltage,
    ControlColumn::Vsh,
    ControlColumn::Ish,
];

/// Selector and target of one slot row: residual = `inputs[index] - target`.
fn slot_target(conv: &Converter, limits: &VscLimitState, slot: ControlSlot) -> (usize, f64) {
    if let Some(pin) = limits.pinned(slot) {
        let index = if pin.is_vsh() { 4 } else { 5 };
        return (index, pin.bound(conv));
    }
    match (conv.control, slot) {
        (VscControl::PrimaryPq { p_set, .. }, ControlSlot::Ctrl1)
        | (VscControl::PrimaryPv { p_set, .. }, ControlSlot::Ctrl1) => (0, p_set),
        (VscControl::PrimaryPq { q_set, .. }, ControlSlot::Ctrl2) => (1, q_set),
        (VscControl::PrimaryPv { v_set, .. }, ControlSlot::Ctrl2)
        | (VscControl::Secondary { v_set, .. }, ControlSlot::Ctrl1) => (2, v_set),
        (VscControl::Secondary { vdc_set, .. }, ControlSlot::Ctrl2) => (3, vdc_set),
    }
}

/// Residuals of both control rows under the current limit state.
pub fn control_residuals(conv: &Converter, limits: &VscLimitState, inputs: &ControlInputs) -> (f64, f64) {
    let values = inputs.as_array();
    let eval = |slot| {
        let (i, target) = slot_target(conv, limits, slot);
        values[i] - target
    };
    (eval(ControlSlot::Ctrl1), eval(ControlSlot::Ctrl2))
}

/// Partials of one control row over [`CONTROL_COLUMNS`].
pub fn control_gradient(conv: &Converter, limits: &VscLimitState, slot: ControlSlot) -> [f64; 6] {
    let mut grad = [0.0; 6];
    grad[slot_target(conv, limits, slot).0] = 1.0;
    grad
}

/// Moves the converter terminal voltage along the current phasor so that the
/// coupling current magnitude equals `ish_max`, and sets Ish to the limit.
fn project_to_current_limit(conv: &Converter, k: usize, layout: &VariableLayout, x: &mut [f64]) {
    let bus = Complex64::from_polar(x[layout.vm(conv.bus)], x[layout.theta(conv.bus)]);
    let vsh_at = layout.vsc(k, VscVar::Vsh);
    let theta_sh_at = layout.vsc(k, VscVar::ThetaSh);
    let drop = bus - Complex64::from_polar(x[vsh_at], x[theta_sh_at]);
    let current = drop.norm() / conv.coupling.z;
    if current > 0.0 {
        let (v_sh, theta_sh) = (bus - drop * (conv.ish_max / current)).to_polar();
        x[vsh_at] = v_sh;
        x[theta_sh_at] = theta_sh;
    }
    x[layout.vsc(k, VscVar::Ish)] = conv.ish_max;
}

/// Releases converter controls whose paired limits are violated.
///
/// A converter with all controls active releases its first slot when Vsh
/// leaves `[vsh_min, vsh_max]` or Ish exceeds `ish_max`, pinning the violated
/// quantity. If both are violated at once the larger relative violation is
/// pinned. A converter with one released slot releases the second when the
/// other quantity is violated. Releases are never undone within a solve.
///
/// A pinned Vsh is set to its bound. A pinned current moves the terminal
/// voltage onto the current limit, see [`project_to_current_limit`].
pub fn vsc_limit_update(mtdc: &MtdcModel, layout: &VariableLayout, state: &mut SolverState) -> Vec<LimitEvent> {
    let mut events = Vec::new();
    for (k, conv) in mtdc.converters.iter().enumerate() {
        let limits = state.vsc_limits[k];
        let vsh = state.x[layout.vsc(k, VscVar::Vsh)];
        let ish = state.x[layout.vsc(k, VscVar::Ish)];
        let vsh_violation = if vsh > conv.vsh_max {
            Some((PinnedLimit::VshAtMax, (vsh - conv.vsh_max) / conv.vsh_max))
        } else if vsh < conv.vsh_min {
            Some((PinnedLimit::VshAtMin, (conv.vsh_min - vsh) / conv.vsh_min))
        } else {
            None
        };
        let ish_violation = (ish > conv.ish_max).then(|| (PinnedLimit::IshAtMax, (ish - conv.ish_max) / conv.ish_max));

        let order = release_order(&conv.control);
        let (slot, pin) = match limits.stage {
            LimitStage::AllControlsActive => {
                let pin = match (vsh_violation, ish_violation) {
                    (Some(v), Some(i)) => Some(if i.1 > v.1 { i.0 } else { v.0 }),
                    (Some(v), None) => Some(v.0),
                    (None, Some(i)) => Some(i.0),
                    (None, None) => None,
                };
                (order[0], pin)
            }
            LimitStage::FirstReleased => {
                let first_was_vsh = limits.pinned(order[0]).is_some_and(PinnedLimit::is_vsh);
                let pin = if first_was_vsh { ish_violation } else { vsh_violation };
                (order[1], pin.map(|p| p.0))
            }
            LimitStage::SecondReleased => continue,
        };
        let Some(pin) = pin else { continue };

        let var = if pin.is_vsh() { VscVar::Vsh } else { VscVar::Ish };
        let value = state.x[layout.vsc(k, var)];
        let bound = pin.bound(conv);
        state.vsc_limits[k].pin(slot, pin);
        match pin {
            PinnedLimit::IshAtMax => project_to_current_limit(conv, k, layout, &mut state.x),
            _ => state.x[layout.vsc(k, var)] = bound,
        }
        events.push(LimitEvent::ConverterPinned {
            converter: conv.id,
            released: slot_quantity(&conv.control, slot),
            pinned: pin,
            value,
            bound,
        });
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vsc::Coupling;

    fn converter(control: VscControl) -> Converter {
        Converter {
            id: 1,
            bus: 0,
            node: 0,
            control,
            coupling: Coupling::new(0.002, 0.1).unwrap(),
            loss_a: 0.0,
            loss_b: 0.0,
            loss_c: 0.0,
            vsh_min: 0.9,
            vsh_max: 1.1,
            ish_max: 0.5,
        }
    }

    fn inputs() -> ControlInputs {
        ControlInputs {
            p_sh: 0.2,
            q_sh: 0.1,
            v: 1.035,
            vdc: 1.0,
            v_sh: 1.12,
            i_sh: 0.3,
        }
    }

    #[test]
    fn active_controls_at_setpoint() {
        let conv = converter(VscControl::PrimaryPq { p_set: 0.2, q_set: 0.1 });
        assert_eq!(
            control_residuals(&conv, &VscLimitState::default(), &inputs()),
            (0.0, 0.0)
        );
        let sec = converter(VscControl::Secondary {
            v_set: 1.035,
            vdc_set: 1.0,
        });
        assert_eq!(
            control_residuals(&sec, &VscLimitState::default(), &inputs()),
            (0.0, 0.0)
        );
    }

    #[test]
    fn released_slot_pins_vsh() {
        let conv = converter(VscControl::PrimaryPq { p_set: 0.2, q_set: 0.1 });
        let limits = VscLimitState {
            stage: LimitStage::FirstReleased,
            ctrl1: None,
            ctrl2: Some(PinnedLimit::VshAtMax),
        };
        let (r1, r2) = control_residuals(&conv, &limits, &inputs());
        assert_eq!(r1, 0.0);
        assert!((r2 - (1.12 - 1.1)).abs() < 1e-15);
        assert_eq!(
            control_gradient(&conv, &limits, ControlSlot::Ctrl2),
            [0.0, 0.0, 0.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn slot_quantities() {
        let pv = VscControl::PrimaryPv { p_set: 0.1, v_set: 1.0 };
        let sec = VscControl::Secondary {
            v_set: 1.0,
            vdc_set: 1.0,
        };
        assert_eq!(slot_quantity(&pv, release_order(&pv)[0]), ControlQuantity::AcVoltage);
        assert_eq!(slot_quantity(&pv, release_order(&pv)[1]), ControlQuantity::ActivePower);
        assert_eq!(slot_quantity(&sec, release_order(&sec)[0]), ControlQuantity::AcVoltage);
        assert_eq!(slot_quantity(&sec, release_order(&sec)[1]), ControlQuantity::DcVoltage);
    }

    #[test]
    fn current_projection_lands_on_the_limit() {
        let conv = converter(VscControl::PrimaryPq { p_set: 0.2, q_set: 0.1 });
        let layout = VariableLayout {
            n_bus: 1,
            n_units: 0,
            n_slack: 0,
            n_vsc: 1,
            n_dc: 1,
        };
        let mut x = vec![0.0; layout.dim()];
        x[layout.theta(0)] = 0.1;
        x[layout.vm(0)] = 1.0;
        x[layout.vsc(0, VscVar::Vsh)] = 1.1;
        let bus = Complex64::from_polar(1.0, 0.1);
        let before = bus - Complex64::from_polar(1.1, 0.0);

        project_to_current_limit(&conv, 0, &layout, &mut x);
        let (v_sh, theta_sh) = (x[layout.vsc(0, VscVar::Vsh)], x[layout.vsc(0, VscVar::ThetaSh)]);
        let flows = crate::vsc::TerminalFlows::eval(1.0, 0.1, v_sh, theta_sh, &conv.coupling);
        assert!((flows.i_sh - 0.5).abs() < 1e-12);
        assert_eq!(x[layout.vsc(0, VscVar::Ish)], 0.5);
        let after = bus - Complex64::from_polar(v_sh, theta_sh);
        assert!((after.arg() - before.arg()).abs() < 1e-12);
    }
}
