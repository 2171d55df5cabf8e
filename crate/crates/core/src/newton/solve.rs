use std::time::Instant;

use log::{debug, warn};

use super::layout::{VariableLayout, VscVar};
use super::linsolve::LinearSolver;
use super::sparse::{EntrySink, SystemMatrix};
use super::state::{initialize_state, SolverState};
use crate::ac::{ac_jacobian, ac_mismatch, ac_regularization, pv_limit_update, AcModel, GenMode};
use crate::case::{validate, MtdcSystem, NetworkCase};
use crate::error::SolveError;
use crate::solution::{
    BindingLimit, Bound, BusResult, ConverterResult, DcNodeResult, IterationRecord, LimitEvent, Solution, Status,
    Timings,
};
use crate::vsc::{released_controls, vsc_jacobian, vsc_limit_update, vsc_mismatch, MtdcModel, PinnedLimit};

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Convergence threshold on the residual infinity norm.
    pub tol: f64,
    /// Maximum number of Newton updates.
    pub max_iter: usize,
    /// First evaluation at which limits are checked every iteration.
    pub enforce_start_iter: usize,
    /// Generator units allowed to reach a limit per iteration.
    pub max_pv_per_iter: usize,
    pub qlim_enforcement: bool,
    /// Residual norm above which the solve is declared diverged.
    pub divergence_norm: f64,
    /// Step scale in (0, 1]; `None` applies full Newton steps.
    pub damping: Option<f64>,
    /// Reserved: reuse of a stale Jacobian across iterations. Not supported.
    pub dishonest_newton: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-8,
            max_iter: 50,
            enforce_start_iter: 4,
            max_pv_per_iter: 1,
            qlim_enforcement: true,
            divergence_norm: 1e6,
            damping: None,
            dishonest_newton: false,
        }
    }
}

impl SolverOptions {
    pub fn check(&self) -> Result<(), SolveError> {
        if self.dishonest_newton {
            return Err(SolveError::Unsupported("dishonest Newton"));
        }
        if !(self.tol > 0.0) {
            return Err(SolveError::Options(format!("tol must be positive, got {}", self.tol)));
        }
        if self.max_iter < 1 {
            return Err(SolveError::Options("max_iter must be at least 1".into()));
        }
        if !(self.divergence_norm > self.tol) {
            return Err(SolveError::Options("divergence_norm must exceed tol".into()));
        }
        if let Some(d) = self.damping {
            if !(d > 0.0 && d <= 1.0) {
                return Err(SolveError::Options(format!("damping must lie in (0, 1], got {d}")));
            }
        }
        Ok(())
    }
}

/// Resolved models and layout of one AC/DC power-flow problem.
#[derive(Debug, Clone)]
pub struct PowerFlowProblem {
    pub base_mva: f64,
    pub ac: AcModel,
    pub mtdc: MtdcModel,
    pub layout: VariableLayout,
}

impl PowerFlowProblem {
    /// Validates the inputs and resolves them.
    pub fn new(case: &NetworkCase, mtdc: &MtdcSystem) -> Result<Self, SolveError> {
        let report = validate(case, mtdc);
        for w in report.warnings() {
            warn!("{}", w.message);
        }
        if !report.is_ok() {
            return Err(SolveError::Validation(report));
        }
        let ac = AcModel::new(case);
        let mtdc_model = MtdcModel::new(mtdc, &ac.lookup).map_err(SolveError::Options)?;
        let layout = VariableLayout::new(&ac, &mtdc_model);
        debug_assert!(layout.audit().is_ok());
        Ok(PowerFlowProblem {
            base_mva: case.base_mva,
            ac,
            mtdc: mtdc_model,
            layout,
        })
    }

    pub fn initial_state(&self) -> SolverState {
        initialize_state(&self.ac, &self.mtdc, &self.layout)
    }

    pub fn residual(&self, state: &SolverState) -> Vec<f64> {
        let mut g = vec![0.0; self.layout.dim()];
        ac_mismatch(&self.ac, &self.layout, state, &mut g);
        vsc_mismatch(&self.mtdc, &self.layout, state, &mut g);
        g
    }

    /// Exact partial derivatives of [`Self::residual`].
    pub fn exact_jacobian(&self, state: &SolverState, sink: &mut dyn EntrySink) {
        ac_jacobian(&self.ac, &self.layout, state, sink);
        vsc_jacobian(&self.mtdc, &self.layout, state, sink);
    }

    /// Iteration matrix: exact partials plus the generator-column
    /// regularization.
    pub fn jacobian(&self, state: &SolverState, sink: &mut dyn EntrySink) {
        self.exact_jacobian(state, sink);
        ac_regularization(&self.ac, &self.layout, sink);
    }

    /// Runs the limit checks scheduled for one iteration.
    pub fn limit_update(&self, state: &mut SolverState, options: &SolverOptions) -> Vec<LimitEvent> {
        let mut events = Vec::new();
        if options.qlim_enforcement {
            events.extend(pv_limit_update(&self.ac, &self.layout, state, options.max_pv_per_iter));
        }
        events.extend(vsc_limit_update(&self.mtdc, &self.layout, state));
        events
    }

    /// Newton iteration from the initial state.
    ///
    /// Each pass evaluates the residual, with limit checks first from
    /// `enforce_start_iter` on, and stops when the norm reaches `tol`. A
    /// point that meets `tol` before enforcement starts is still checked
    /// against the limits so that no converged point violates one.
    pub fn solve(&self, options: &SolverOptions) -> Result<Solution, SolveError> {
        options.check()?;
        let start = Instant::now();
        let mut state = self.initial_state();
        let mut matrix = SystemMatrix::new(self.layout.dim());
        let mut solver = LinearSolver::new();
        let mut log: Vec<IterationRecord> = Vec::new();
        let mut failure = None;

        let status = loop {
            let iteration = state.iteration + 1;
            let mut events = Vec::new();
            if iteration >= options.enforce_start_iter {
                events.extend(self.limit_update(&mut state, options));
            }
            let mut g = self.residual(&state);
            let mut norm = inf_norm(&g);
            if norm <= options.tol && iteration < options.enforce_start_iter {
                let late = self.limit_update(&mut state, options);
                if !late.is_empty() {
                    events.extend(late);
                    g = self.residual(&state);
                    norm = inf_norm(&g);
                }
            }
            state.norm_history.push(norm);
            debug!("iteration {iteration}: |g| = {norm:.3e}, {} events", events.len());
            log.push(IterationRecord {
                iteration,
                residual_norm: norm,
                events,
                pattern_hash: None,
            });

            if !norm.is_finite() || norm > options.divergence_norm {
                failure = Some(format!("residual norm {norm:e} at iteration {iteration}"));
                break Status::Diverged;
            }
            if norm <= options.tol {
                break Status::Converged;
            }
            if state.iteration >= options.max_iter {
                failure = Some(format!("no convergence after {} updates", state.iteration));
                break Status::MaxIter;
            }

            if let Err(e) = matrix.assemble(|sink| self.jacobian(&state, sink)) {
                failure = Some(format!("iteration {iteration}: {e}"));
                break Status::Diverged;
            }
            log.last_mut().unwrap().pattern_hash = Some(matrix.last_emission_hash());
            match solver.solve(&matrix, &g) {
                Ok(dx) => {
                    let scale = options.damping.unwrap_or(1.0);
                    for (x, d) in state.x.iter_mut().zip(dx) {
                        *x += scale * d;
                    }
                    state.iteration += 1;
                }
                Err(e) => {
                    failure = Some(format!("iteration {iteration}: {e}"));
                    break Status::Diverged;
                }
            }
        };

        let iterate_ms = start.elapsed().as_secs_f64() * 1e3;
        let mut solution = self.report(&state, status, log, matrix.nnz());
        solution.timings.iterate_ms = iterate_ms;
        solution.solver_stats = solver.stats();
        solution.failure = failure;
        Ok(solution)
    }

    fn report(&self, state: &SolverState, status: Status, log: Vec<IterationRecord>, nnz: usize) -> Solution {
        let (ac, l, x) = (&self.ac, &self.layout, &state.x);
        let nb = l.n_bus;
        let mut buses: Vec<BusResult> = (0..nb)
            .map(|i| BusResult {
                id: ac.bus_ids[i],
                v: x[l.vm(i)],
                theta: x[l.theta(i)],
                p_gen: ac.p_gen_fixed[i],
                q_gen: ac.q_gen_fixed[i],
                p_load: ac.p_load[i],
                q_load: ac.q_load[i],
                q_limit: None,
            })
            .collect();
        let mut binding = Vec::new();
        for (u, unit) in ac.units.iter().enumerate() {
            let bus = &mut buses[unit.bus];
            bus.p_gen += unit.slack_slot.map_or(unit.p_set, |s| x[l.pg(s)]);
            let q = x[l.qg(u)];
            bus.q_gen += q;
            let bound = match state.gen_modes[u] {
                GenMode::VoltageControl => None,
                GenMode::AtQMax => Some(Bound::Max),
                GenMode::AtQMin => Some(Bound::Min),
            };
            if let Some(bound) = bound {
                bus.q_limit = Some(bound);
                binding.push(BindingLimit::GeneratorQ { bus: bus.id, bound, q });
            }
        }

        let mut converters = Vec::new();
        for (k, conv) in self.mtdc.converters.iter().enumerate() {
            let var = |v| x[l.vsc(k, v)];
            let limits = state.vsc_limits[k];
            for pin in limits.pinned_limits() {
                binding.push(match pin {
                    PinnedLimit::VshAtMax => BindingLimit::ConverterVsh {
                        converter: conv.id,
                        bound: Bound::Max,
                        v_sh: var(VscVar::Vsh),
                    },
                    PinnedLimit::VshAtMin => BindingLimit::ConverterVsh {
                        converter: conv.id,
                        bound: Bound::Min,
                        v_sh: var(VscVar::Vsh),
                    },
                    PinnedLimit::IshAtMax => BindingLimit::ConverterIsh {
                        converter: conv.id,
                        i_sh: var(VscVar::Ish),
                    },
                });
            }
            converters.push(ConverterResult {
                id: conv.id,
                ac_bus: ac.bus_ids[conv.bus],
                dc_node: self.mtdc.node_ids[conv.node],
                p_sh: var(VscVar::Psh),
                q_sh: var(VscVar::Qsh),
                p_dc_prime: var(VscVar::PdcPrime),
                p_dc: var(VscVar::Pdc),
                v_m: x[l.vm(conv.bus)],
                v_sh: var(VscVar::Vsh),
                theta_sh: var(VscVar::ThetaSh),
                i_sh: var(VscVar::Ish),
                stage: limits.stage,
                pinned: limits.pinned_limits().collect(),
                released: released_controls(&conv.control, &limits),
            });
        }

        let dc_nodes = (0..self.mtdc.n_nodes())
            .map(|n| DcNodeResult {
                id: self.mtdc.node_ids[n],
                vdc: x[l.vdc(n)],
                p_dc: self.mtdc.node_converters[n]
                    .iter()
                    .map(|&k| x[l.vsc(k, VscVar::Pdc)])
                    .sum(),
            })
            .collect();

        Solution {
            status,
            iterations: state.iteration,
            residual_norm: state.norm_history.last().copied().unwrap_or(f64::NAN),
            base_mva: self.base_mva,
            dimension: l.dim(),
            jacobian_nnz: nnz,
            buses,
            converters,
            dc_nodes,
            binding_limits: binding,
            iteration_log: log,
            timings: Timings::default(),
            solver_stats: Default::default(),
            failure: None,
        }
    }
}

/// Largest absolute entry; NaN if any entry is NaN.
pub fn inf_norm(g: &[f64]) -> f64 {
    let mut norm = 0.0_f64;
    for v in g {
        if v.is_nan() {
            return f64::NAN;
        }
        norm = norm.max(v.abs());
    }
    norm
}

/// Validates, sets up and solves one case.
pub fn newton_solve(case: &NetworkCase, mtdc: &MtdcSystem, options: &SolverOptions) -> Result<Solution, SolveError> {
    options.check()?;
    let start = Instant::now();
    let problem = PowerFlowProblem::new(case, mtdc)?;
    let analyze_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut solution = problem.solve(options)?;
    solution.timings.analyze_ms = analyze_ms;
    Ok(solution)
}
