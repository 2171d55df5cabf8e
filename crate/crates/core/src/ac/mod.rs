//! AC network side of the extended Newton formulation.
//!
//! Generator reactive outputs (and slack active output) are solution
//! variables, each paired with a control row. A voltage-controlled unit's row
//! is `V - V_set`; once its reactive output hits a limit the same row is
//! rewritten to `Qg - Q_limit`, which keeps the Jacobian shape fixed.

pub mod admittance;
pub mod equations;
pub mod qlim;

use std::collections::HashMap;

use log::warn;

use crate::case::{BusKind, NetworkCase};

pub use admittance::AdmittanceMatrix;
pub use equations::{ac_jacobian, ac_mismatch, ac_regularization, REGULARIZATION};
pub use qlim::{pv_limit_update, GenMode};

/// All in-service generators at one voltage-controlled bus, acting as a
/// single reactive source.
#[derive(Debug, Clone, PartialEq)]
pub struct GenUnit {
    /// Bus position.
    pub bus: usize,
    pub slack: bool,
    pub v_set: f64,
    pub q_min: f64,
    pub q_max: f64,
    /// Scheduled active output, summed over the unit's generators.
    pub p_set: f64,
    /// Position among slack units, for slack units.
    pub slack_slot: Option<usize>,
    /// Indices into `NetworkCase::generators`.
    pub generators: Vec<usize>,
}

/// Resolved AC data used during iteration.
#[derive(Debug, Clone)]
pub struct AcModel {
    pub bus_ids: Vec<u32>,
    pub lookup: HashMap<u32, usize>,
    pub ybus: AdmittanceMatrix,
    pub p_load: Vec<f64>,
    pub q_load: Vec<f64>,
    /// Fixed generation at buses without voltage control.
    pub p_gen_fixed: Vec<f64>,
    pub q_gen_fixed: Vec<f64>,
    pub units: Vec<GenUnit>,
    /// Unit index of every slack unit, in slack-slot order.
    pub slack_units: Vec<usize>,
    /// Angle reference of each slack unit's bus.
    pub slack_theta: Vec<f64>,
    pub v_init: Vec<f64>,
    pub theta_init: Vec<f64>,
}

impl AcModel {
    /// Builds the resolved model. Expects a validated case.
    pub fn new(case: &NetworkCase) -> Self {
        let n = case.buses.len();
        let lookup = case.bus_lookup();
        let mut p_load = Vec::with_capacity(n);
        let mut q_load = Vec::with_capacity(n);
        for bus in &case.buses {
            p_load.push(bus.p_load);
            q_load.push(bus.q_load);
        }

        let mut per_bus: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (k, g) in case.generators.iter().enumerate() {
            if g.in_service {
                per_bus[lookup[&g.bus]].push(k);
            }
        }

        let mut p_gen_fixed = vec![0.0; n];
        let mut q_gen_fixed = vec![0.0; n];
        let mut units = Vec::new();
        let mut slack_units = Vec::new();
        let mut slack_theta = Vec::new();
        for (i, bus) in case.buses.iter().enumerate() {
            let gens = &per_bus[i];
            let controlled = match bus.kind {
                BusKind::Slack => true,
                BusKind::Pv if !gens.is_empty() => true,
                BusKind::Pv => {
                    warn!("PV bus {} has no in-service generator, treated as PQ", bus.id);
                    false
                }
                BusKind::Pq => false,
            };
            if !controlled {
                for &k in gens {
                    p_gen_fixed[i] += case.generators[k].p_set;
                    q_gen_fixed[i] += case.generators[k].q_init;
                }
                continue;
            }
            let slack = bus.kind == BusKind::Slack;
            let slack_slot = slack.then(|| {
                slack_units.push(units.len());
                slack_theta.push(bus.theta_init);
                slack_units.len() - 1
            });
            units.push(GenUnit {
                bus: i,
                slack,
                v_set: case.generators[gens[0]].v_set,
                q_min: gens.iter().map(|&k| case.generators[k].q_min).sum(),
                q_max: gens.iter().map(|&k| case.generators[k].q_max).sum(),
                p_set: gens.iter().map(|&k| case.generators[k].p_set).sum(),
                slack_slot,
                generators: gens.clone(),
            });
        }

        AcModel {
            bus_ids: case.buses.iter().map(|b| b.id).collect(),
            lookup,
            ybus: AdmittanceMatrix::build(case),
            p_load,
            q_load,
            p_gen_fixed,
            q_gen_fixed,
            units,
            slack_units,
            slack_theta,
            v_init: case.buses.iter().map(|b| b.v_init).collect(),
            theta_init: case.buses.iter().map(|b| b.theta_init).collect(),
        }
    }

    pub fn n_bus(&self) -> usize {
        self.bus_ids.len()
    }

    /// Unit controlling bus `i`, if any.
    pub fn unit_at(&self, bus: usize) -> Option<usize> {
        self.units.iter().position(|u| u.bus == bus)
    }
}
