//! VSC converters and the DC network they share.
//!
//! Each converter contributes seven unknowns (θsh, Vsh, Psh, Qsh, Pdc′, Pdc,
//! Ish) and seven rows: the Psh, Qsh and Pdc′ definitions, the loss balance,
//! the current magnitude, and two control rows. Each DC node contributes its
//! voltage and a current balance. Psh and Qsh are drawn from the converter's
//! AC bus as load.

pub mod control;
pub mod dc;
pub mod equations;

use std::collections::HashMap;

use crate::case::{MtdcSystem, VscControl};
use crate::newton::layout::{VariableLayout, VscEq, VscVar};
use crate::newton::sparse::EntrySink;
use crate::newton::state::SolverState;

pub use control::{
    control_gradient, control_residuals, released_controls, vsc_limit_update, ControlInputs, ControlQuantity,
    ControlSlot, LimitStage, PinnedLimit, VscLimitState, CONTROL_COLUMNS,
};
pub use dc::{dc_network_matrix, dc_node_balance, DcNetworkMatrix};
pub use equations::{converter_loss, converter_throughput, ish_magnitude, shunt_power_flow, Coupling, TerminalFlows};

/// A converter with references resolved to positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Converter {
    pub id: u32,
    /// AC bus position.
    pub bus: usize,
    /// DC node position.
    pub node: usize,
    pub control: VscControl,
    pub coupling: Coupling,
    pub loss_a: f64,
    pub loss_b: f64,
    pub loss_c: f64,
    pub vsh_min: f64,
    pub vsh_max: f64,
    pub ish_max: f64,
}

/// Resolved converter and DC network data used during iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct MtdcModel {
    pub converters: Vec<Converter>,
    pub node_ids: Vec<u32>,
    pub vdc_init: Vec<f64>,
    pub ydc: DcNetworkMatrix,
    /// Converters attached to each node.
    pub node_converters: Vec<Vec<usize>>,
}

impl MtdcModel {
    pub fn empty() -> Self {
        MtdcModel {
            converters: Vec::new(),
            node_ids: Vec::new(),
            vdc_init: Vec::new(),
            ydc: dc_network_matrix(0, &[], |_| 0).expect("empty network"),
            node_converters: Vec::new(),
        }
    }

    /// Resolves `mtdc` against AC bus positions. Expects a validated overlay.
    pub fn new(mtdc: &MtdcSystem, bus_lookup: &HashMap<u32, usize>) -> Result<Self, String> {
        let nodes = mtdc.node_lookup();
        let ydc = dc_network_matrix(mtdc.dc_nodes.len(), &mtdc.dc_lines, |id| nodes[&id])?;
        let mut node_converters = vec![Vec::new(); mtdc.dc_nodes.len()];
        let mut converters = Vec::with_capacity(mtdc.converters.len());
        for (k, rec) in mtdc.converters.iter().enumerate() {
            let bus = *bus_lookup
                .get(&rec.ac_bus)
                .ok_or_else(|| format!("converter {}: unresolved ac_bus {}", rec.id, rec.ac_bus))?;
            let node = *nodes
                .get(&rec.dc_node)
                .ok_or_else(|| format!("converter {}: unresolved dc node {}", rec.id, rec.dc_node))?;
            let coupling = Coupling::new(rec.rsh, rec.xsh)
                .ok_or_else(|| format!("converter {}: zero coupling impedance", rec.id))?;
            node_converters[node].push(k);
            converters.push(Converter {
                id: rec.id,
                bus,
                node,
                control: rec.control,
                coupling,
                loss_a: rec.loss_a,
                loss_b: rec.loss_b,
                loss_c: rec.loss_c,
                vsh_min: rec.vsh_min,
                vsh_max: rec.vsh_max,
                ish_max: rec.ish_max,
            });
        }
        Ok(MtdcModel {
            converters,
            node_ids: mtdc.dc_nodes.iter().map(|n| n.id).collect(),
            vdc_init: mtdc.dc_nodes.iter().map(|n| n.vdc_init).collect(),
            ydc,
            node_converters,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.node_ids.len()
    }
}

fn flows_at(conv: &Converter, k: usize, layout: &VariableLayout, x: &[f64]) -> TerminalFlows {
    TerminalFlows::eval(
        x[layout.vm(conv.bus)],
        x[layout.theta(conv.bus)],
        x[layout.vsc(k, VscVar::Vsh)],
        x[layout.vsc(k, VscVar::ThetaSh)],
        &conv.coupling,
    )
}

/// Writes converter and DC node rows into `g` and subtracts converter draws
/// from the AC bus balances. Expects the AC rows already written.
pub fn vsc_mismatch(mtdc: &MtdcModel, layout: &VariableLayout, state: &SolverState, g: &mut [f64]) {
    let x = &state.x;
    for (k, conv) in mtdc.converters.iter().enumerate() {
        let var = |v| x[layout.vsc(k, v)];
        let row = |e| layout.row_vsc(k, e);
        let t = flows_at(conv, k, layout, x);
        let i_sh = var(VscVar::Ish);

        g[layout.row_p(conv.bus)] -= var(VscVar::Psh);
        g[layout.row_q(conv.bus)] -= var(VscVar::Qsh);

        g[row(VscEq::Psh)] = t.p_sh - var(VscVar::Psh);
        g[row(VscEq::Qsh)] = t.q_sh - var(VscVar::Qsh);
        g[row(VscEq::PdcPrime)] = t.p_dc_prime - var(VscVar::PdcPrime);
        g[row(VscEq::Loss)] =
            var(VscVar::PdcPrime) - var(VscVar::Pdc) - converter_loss(conv.loss_a, conv.loss_b, conv.loss_c, i_sh);
        g[row(VscEq::Ish)] = i_sh - t.i_sh;

        let inputs = control_inputs(conv, k, layout, x);
        let (c1, c2) = control_residuals(conv, &state.vsc_limits[k], &inputs);
        g[row(VscEq::Ctrl1)] = c1;
        g[row(VscEq::Ctrl2)] = c2;
    }

    let vdc: Vec<f64> = (0..mtdc.n_nodes()).map(|n| x[layout.vdc(n)]).collect();
    let p_dc: Vec<f64> = mtdc
        .node_converters
        .iter()
        .map(|ks| ks.iter().map(|&k| x[layout.vsc(k, VscVar::Pdc)]).sum())
        .collect();
    for (n, r) in dc_node_balance(&p_dc, &vdc, &mtdc.ydc).into_iter().enumerate() {
        g[layout.row_dc(n)] = r;
    }
}

fn control_inputs(conv: &Converter, k: usize, layout: &VariableLayout, x: &[f64]) -> ControlInputs {
    ControlInputs {
        p_sh: x[layout.vsc(k, VscVar::Psh)],
        q_sh: x[layout.vsc(k, VscVar::Qsh)],
        v: x[layout.vm(conv.bus)],
        vdc: x[layout.vdc(conv.node)],
        v_sh: x[layout.vsc(k, VscVar::Vsh)],
        i_sh: x[layout.vsc(k, VscVar::Ish)],
    }
}

/// Emits the exact partial derivatives of every row written by
/// [`vsc_mismatch`], including the bus balance coupling. The emitted
/// positions do not depend on limit states.
pub fn vsc_jacobian(mtdc: &MtdcModel, layout: &VariableLayout, state: &SolverState, sink: &mut dyn EntrySink) {
    let x = &state.x;
    for (k, conv) in mtdc.converters.iter().enumerate() {
        let col = |v| layout.vsc(k, v);
        let row = |e| layout.row_vsc(k, e);
        let t = flows_at(conv, k, layout, x);
        let terminal = [
            layout.theta(conv.bus),
            layout.vm(conv.bus),
            col(VscVar::ThetaSh),
            col(VscVar::Vsh),
        ];

        sink.add(layout.row_p(conv.bus), col(VscVar::Psh), -1.0);
        sink.add(layout.row_q(conv.bus), col(VscVar::Qsh), -1.0);

        for (eq, var, grad) in [
            (VscEq::Psh, VscVar::Psh, t.d_p_sh),
            (VscEq::Qsh, VscVar::Qsh, t.d_q_sh),
            (VscEq::PdcPrime, VscVar::PdcPrime, t.d_p_dc_prime),
        ] {
            for (c, d) in terminal.iter().zip(grad) {
                sink.add(row(eq), *c, d);
            }
            sink.add(row(eq), col(var), -1.0);
        }

        let i_sh = x[col(VscVar::Ish)];
        sink.add(row(VscEq::Loss), col(VscVar::PdcPrime), 1.0);
        sink.add(row(VscEq::Loss), col(VscVar::Pdc), -1.0);
        sink.add(
            row(VscEq::Loss),
            col(VscVar::Ish),
            -(conv.loss_b + 2.0 * conv.loss_c * i_sh),
        );

        sink.add(row(VscEq::Ish), col(VscVar::Ish), 1.0);
        for (c, d) in terminal.iter().zip(t.d_i_sh) {
            sink.add(row(VscEq::Ish), *c, -d);
        }

        let columns = [
            col(VscVar::Psh),
            col(VscVar::Qsh),
            layout.vm(conv.bus),
            layout.vdc(conv.node),
            col(VscVar::Vsh),
            col(VscVar::Ish),
        ];
        for (eq, slot) in [(VscEq::Ctrl1, ControlSlot::Ctrl1), (VscEq::Ctrl2, ControlSlot::Ctrl2)] {
            let grad = control_gradient(conv, &state.vsc_limits[k], slot);
            for (c, d) in columns.iter().zip(grad) {
                sink.add(row(eq), *c, d);
            }
        }
    }

    for n in 0..mtdc.n_nodes() {
        let r = layout.row_dc(n);
        let vdc = x[layout.vdc(n)];
        let mut p_total = 0.0;
        for &k in &mtdc.node_converters[n] {
            p_total += x[layout.vsc(k, VscVar::Pdc)];
            sink.add(r, layout.vsc(k, VscVar::Pdc), 1.0 / vdc);
        }
        for &(j, y) in mtdc.ydc.row(n) {
            let d = if j == n { -y - p_total / (vdc * vdc) } else { -y };
            sink.add(r, layout.vdc(j), d);
        }
    }
}
