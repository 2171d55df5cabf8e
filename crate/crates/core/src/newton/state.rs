use crate::ac::{AcModel, GenMode};
use crate::case::VscControl;
use crate::newton::layout::{VariableLayout, VscVar};
use crate::vsc::{MtdcModel, TerminalFlows, VscLimitState};

/// Values of all unknowns plus the per-device limit states of one solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub x: Vec<f64>,
    pub gen_modes: Vec<GenMode>,
    pub vsc_limits: Vec<VscLimitState>,
    /// Newton updates applied so far.
    pub iteration: usize,
    /// Residual infinity norm at each evaluation, in order.
    pub norm_history: Vec<f64>,
}

impl SolverState {
    pub fn theta(&self, layout: &VariableLayout, bus: usize) -> f64 {
        self.x[layout.theta(bus)]
    }

    pub fn vm(&self, layout: &VariableLayout, bus: usize) -> f64 {
        self.x[layout.vm(bus)]
    }

    pub fn vsc(&self, layout: &VariableLayout, k: usize, var: VscVar) -> f64 {
        self.x[layout.vsc(k, var)]
    }
}

/// Initial point: case angles and magnitudes, controlled bus voltages at
/// their setpoints, generator outputs at zero except the slack schedule,
/// converter terminals at the bus angle with Vsh clamped into its range, and
/// converter powers at their setpoints.
pub fn initialize_state(ac: &AcModel, mtdc: &MtdcModel, layout: &VariableLayout) -> SolverState {
    let mut x = vec![0.0; layout.dim()];
    for i in 0..layout.n_bus {
        x[layout.theta(i)] = ac.theta_init[i];
        x[layout.vm(i)] = ac.v_init[i];
    }
    for unit in &ac.units {
        x[layout.vm(unit.bus)] = unit.v_set;
        if let Some(s) = unit.slack_slot {
            x[layout.pg(s)] = unit.p_set;
        }
    }
    for conv in &mtdc.converters {
        if let Some(v) = conv.control.ac_voltage_setpoint() {
            x[layout.vm(conv.bus)] = v;
        }
    }
    for (n, &v) in mtdc.vdc_init.iter().enumerate() {
        x[layout.vdc(n)] = v;
    }
    for (k, conv) in mtdc.converters.iter().enumerate() {
        let theta = x[layout.theta(conv.bus)];
        let v = x[layout.vm(conv.bus)];
        let vsh = 1.0_f64.clamp(conv.vsh_min, conv.vsh_max);
        let (p, q) = match conv.control {
            VscControl::PrimaryPq { p_set, q_set } => (p_set, q_set),
            VscControl::PrimaryPv { p_set, .. } => (p_set, 0.0),
            VscControl::Secondary { .. } => (0.0, 0.0),
        };
        let flows = TerminalFlows::eval(v, theta, vsh, theta, &conv.coupling);
        x[layout.vsc(k, VscVar::ThetaSh)] = theta;
        x[layout.vsc(k, VscVar::Vsh)] = vsh;
        x[layout.vsc(k, VscVar::Psh)] = p;
        x[layout.vsc(k, VscVar::Qsh)] = q;
        x[layout.vsc(k, VscVar::PdcPrime)] = -p;
        x[layout.vsc(k, VscVar::Pdc)] = -p;
        x[layout.vsc(k, VscVar::Ish)] = flows.i_sh;
    }
    SolverState {
        x,
        gen_modes: vec![GenMode::VoltageControl; ac.units.len()],
        vsc_limits: vec![VscLimitState::default(); mtdc.converters.len()],
        iteration: 0,
        norm_history: Vec::new(),
    }
}
