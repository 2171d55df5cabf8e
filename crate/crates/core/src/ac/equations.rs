use super::{AcModel, GenMode};
use crate::newton::layout::VariableLayout;
use crate::newton::sparse::EntrySink;
use crate::newton::state::SolverState;

/// Diagonal added on each generator-variable column in its control row so
/// the factorization never sees a structurally empty pivot.
pub const REGULARIZATION: f64 = 1e-6;

/// Writes bus balances, unit control rows and slack angle rows into `g`.
///
/// Bus balances are scheduled minus calculated injection:
/// `g_p = Pgen - Pload - P(V, θ)`, likewise for `g_q`. Converter draws are
/// subtracted afterwards by the converter equations.
pub fn ac_mismatch(ac: &AcModel, layout: &VariableLayout, state: &SolverState, g: &mut [f64]) {
    let nb = layout.n_bus;
    let (vm, theta) = (&state.x[nb..2 * nb], &state.x[..nb]);
    let (p, q) = ac.ybus.injections(vm, theta);
    for i in 0..nb {
        g[layout.row_p(i)] = ac.p_gen_fixed[i] - ac.p_load[i] - p[i];
        g[layout.row_q(i)] = ac.q_gen_fixed[i] - ac.q_load[i] - q[i];
    }
    for (u, unit) in ac.units.iter().enumerate() {
        let qg = state.x[layout.qg(u)];
        g[layout.row_q(unit.bus)] += qg;
        match unit.slack_slot {
            Some(s) => g[layout.row_p(unit.bus)] += state.x[layout.pg(s)],
            None => g[layout.row_p(unit.bus)] += unit.p_set,
        }
        g[layout.row_unit(u)] = match state.gen_modes[u] {
            GenMode::VoltageControl => vm[unit.bus] - unit.v_set,
            GenMode::AtQMax => qg - unit.q_max,
            GenMode::AtQMin => qg - unit.q_min,
        };
    }
    for (s, &u) in ac.slack_units.iter().enumerate() {
        g[layout.row_slack(s)] = theta[ac.units[u].bus] - ac.slack_theta[s];
    }
}

/// Emits the exact partial derivatives of every row written by
/// [`ac_mismatch`]. The emitted positions do not depend on generator modes.
pub fn ac_jacobian(ac: &AcModel, layout: &VariableLayout, state: &SolverState, sink: &mut dyn EntrySink) {
    let nb = layout.n_bus;
    let (vm, theta) = (&state.x[nb..2 * nb], &state.x[..nb]);
    for i in 0..nb {
        // a = Σ V_k (G cos + B sin), c = Σ V_k (G sin - B cos); P_i = V_i a, Q_i = V_i c.
        let (mut a, mut c) = (0.0, 0.0);
        for (k, gk, bk) in ac.ybus.row(i) {
            let (s, co) = (theta[i] - theta[k]).sin_cos();
            a += vm[k] * (gk * co + bk * s);
            c += vm[k] * (gk * s - bk * co);
        }
        let (rp, rq) = (layout.row_p(i), layout.row_q(i));
        for (k, gk, bk) in ac.ybus.row(i) {
            let (dp_dth, dp_dv, dq_dth, dq_dv) = if k == i {
                (
                    -vm[i] * c - bk * vm[i] * vm[i],
                    a + gk * vm[i],
                    vm[i] * a - gk * vm[i] * vm[i],
                    c - bk * vm[i],
                )
            } else {
                let (s, co) = (theta[i] - theta[k]).sin_cos();
                let vv = vm[i] * vm[k];
                (
                    vv * (gk * s - bk * co),
                    vm[i] * (gk * co + bk * s),
                    -vv * (gk * co + bk * s),
                    vm[i] * (gk * s - bk * co),
                )
            };
            sink.add(rp, layout.theta(k), -dp_dth);
            sink.add(rp, layout.vm(k), -dp_dv);
            sink.add(rq, layout.theta(k), -dq_dth);
            sink.add(rq, layout.vm(k), -dq_dv);
        }
    }
    for (u, unit) in ac.units.iter().enumerate() {
        sink.add(layout.row_q(unit.bus), layout.qg(u), 1.0);
        if let Some(s) = unit.slack_slot {
            sink.add(layout.row_p(unit.bus), layout.pg(s), 1.0);
        }
        let (d_v, d_q) = match state.gen_modes[u] {
            GenMode::VoltageControl => (1.0, 0.0),
            GenMode::AtQMax | GenMode::AtQMin => (0.0, 1.0),
        };
        let row = layout.row_unit(u);
        sink.add(row, layout.vm(unit.bus), d_v);
        sink.add(row, layout.qg(u), d_q);
    }
    for (s, &u) in ac.slack_units.iter().enumerate() {
        let row = layout.row_slack(s);
        sink.add(row, layout.theta(ac.units[u].bus), 1.0);
        sink.add(row, layout.pg(s), 0.0);
    }
}

/// Emits [`REGULARIZATION`] on every generator-variable column in its own
/// control row.
pub fn ac_regularization(ac: &AcModel, layout: &VariableLayout, sink: &mut dyn EntrySink) {
    for u in 0..ac.units.len() {
        sink.add(layout.row_unit(u), layout.qg(u), REGULARIZATION);
    }
    for s in 0..ac.slack_units.len() {
        sink.add(layout.row_slack(s), layout.pg(s), REGULARIZATION);
    }
}
