#![allow(dead_code)]

//! Test support: data loading, an independent dense Newton power flow, and
//! finite-difference Jacobian checks.

use std::collections::HashMap;
use std::path::PathBuf;

use acdcflow::case::{parse_matpower_case, parse_vsc_extension, BusKind, MtdcSystem, NetworkCase};
use acdcflow::newton::{PowerFlowProblem, SolverState};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub fn read_data(name: &str) -> String {
    let path = data_path(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn load_case(name: &str) -> NetworkCase {
    parse_matpower_case(&read_data(name)).unwrap()
}

pub fn load_overlay(name: &str) -> MtdcSystem {
    parse_vsc_extension(&read_data(name)).unwrap()
}

/// Bus results of [`reference_power_flow`], keyed by bus id.
#[derive(Debug, Clone)]
pub struct ReferenceResult {
    pub iterations: usize,
    pub v: HashMap<u32, f64>,
    pub theta: HashMap<u32, f64>,
    /// Net reactive generation at each bus.
    pub q_gen: HashMap<u32, f64>,
    pub p_slack: f64,
}

/// Dense bus admittance matrix in the standard branch pi model.
pub fn dense_ybus(case: &NetworkCase) -> DMatrix<Complex64> {
    let n = case.buses.len();
    let idx = case.bus_lookup();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (idx[&br.from], idx[&br.to]);
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b_charging / 2.0);
        let ratio = if br.tap == 0.0 { 1.0 } else { br.tap };
        let a = Complex64::from_polar(ratio, br.shift);
        y[(f, f)] += (ys + half) / (ratio * ratio);
        y[(t, t)] += ys + half;
        y[(f, t)] -= ys / a.conj();
        y[(t, f)] -= ys / a;
    }
    for (i, bus) in case.buses.iter().enumerate() {
        y[(i, i)] += Complex64::new(bus.g_shunt, bus.b_shunt);
    }
    y
}

/// Polar Newton power flow on the plain AC case, with generators at the buses
/// in `fixed_q` held at the given total reactive output instead of their
/// voltage setpoint. Independent of the library's model and layout.
pub fn reference_power_flow(case: &NetworkCase, fixed_q: &HashMap<u32, f64>, tol: f64) -> ReferenceResult {
    let n = case.buses.len();
    let idx = case.bus_lookup();
    let y = dense_ybus(case);

    let mut p_spec: Vec<f64> = case.buses.iter().map(|b| -b.p_load).collect();
    let mut q_spec: Vec<f64> = case.buses.iter().map(|b| -b.q_load).collect();
    let mut vm: Vec<f64> = case.buses.iter().map(|b| b.v_init).collect();
    let va: Vec<f64> = case.buses.iter().map(|b| b.theta_init).collect();
    let mut kind: Vec<BusKind> = case.buses.iter().map(|b| b.kind).collect();
    let mut has_gen = vec![false; n];
    for g in case.generators.iter().filter(|g| g.in_service) {
        let i = idx[&g.bus];
        p_spec[i] += g.p_set;
        if kind[i] == BusKind::Pq {
            q_spec[i] += g.q_init;
        } else if !has_gen[i] {
            vm[i] = g.v_set;
        }
        has_gen[i] = true;
    }
    for i in 0..n {
        if kind[i] == BusKind::Pv && !has_gen[i] {
            kind[i] = BusKind::Pq;
        }
    }
    for (&bus, &q) in fixed_q {
        let i = idx[&bus];
        assert_eq!(kind[i], BusKind::Pv, "bus {bus} is not a PV bus");
        kind[i] = BusKind::Pq;
        q_spec[i] += q;
    }

    let angle_idx: Vec<usize> = (0..n).filter(|&i| kind[i] != BusKind::Slack).collect();
    let mag_idx: Vec<usize> = (0..n).filter(|&i| kind[i] == BusKind::Pq).collect();
    let (na, nm) = (angle_idx.len(), mag_idx.len());
    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();

    let injection = |v: &[Complex64]| -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let current: Complex64 = (0..n).map(|k| y[(i, k)] * v[k]).sum();
                v[i] * current.conj()
            })
            .collect()
    };

    let mut iterations = 0;
    loop {
        let s = injection(&v);
        let mut f = DVector::<f64>::zeros(na + nm);
        for (r, &i) in angle_idx.iter().enumerate() {
            f[r] = s[i].re - p_spec[i];
        }
        for (r, &i) in mag_idx.iter().enumerate() {
            f[na + r] = s[i].im - q_spec[i];
        }
        if f.amax() < tol {
            break;
        }
        assert!(iterations < 30, "reference power flow did not converge");

        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V)),
        // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|).
        let current: Vec<Complex64> = (0..n).map(|i| (0..n).map(|k| y[(i, k)] * v[k]).sum()).collect();
        let unit: Vec<Complex64> = v.iter().map(|x| x / x.norm()).collect();
        let d_angle = |i: usize, k: usize| {
            let diag = if i == k { current[i] } else { Complex64::new(0.0, 0.0) };
            Complex64::i() * v[i] * (diag - y[(i, k)] * v[k]).conj()
        };
        let d_mag = |i: usize, k: usize| {
            let diag = if i == k {
                current[i].conj() * unit[i]
            } else {
                Complex64::new(0.0, 0.0)
            };
            v[i] * (y[(i, k)] * unit[k]).conj() + diag
        };
        let mut jac = DMatrix::<f64>::zeros(na + nm, na + nm);
        for (r, &i) in angle_idx.iter().enumerate() {
            for (c, &k) in angle_idx.iter().enumerate() {
                jac[(r, c)] = d_angle(i, k).re;
            }
            for (c, &k) in mag_idx.iter().enumerate() {
                jac[(r, na + c)] = d_mag(i, k).re;
            }
        }
        for (r, &i) in mag_idx.iter().enumerate() {
            for (c, &k) in angle_idx.iter().enumerate() {
                jac[(na + r, c)] = d_angle(i, k).im;
            }
            for (c, &k) in mag_idx.iter().enumerate() {
                jac[(na + r, na + c)] = d_mag(i, k).im;
            }
        }
        let dx = jac.lu().solve(&(-f)).expect("reference Jacobian singular");
        for (r, &i) in angle_idx.iter().enumerate() {
            v[i] *= Complex64::from_polar(1.0, dx[r]);
        }
        for (r, &i) in mag_idx.iter().enumerate() {
            let m = v[i].norm();
            v[i] *= (m + dx[na + r]) / m;
        }
        iterations += 1;
    }

    let s = injection(&v);
    let ids = case.buses.iter().map(|b| b.id);
    let slack = (0..n).find(|&i| kind[i] == BusKind::Slack).unwrap();
    ReferenceResult {
        iterations,
        v: ids.clone().zip(v.iter().map(|x| x.norm())).collect(),
        theta: ids.clone().zip(v.iter().map(|x| x.arg())).collect(),
        q_gen: ids.zip((0..n).map(|i| s[i].im + case.buses[i].q_load)).collect(),
        p_slack: s[slack].re + case.buses[slack].p_load,
    }
}

pub fn dense_jacobian(problem: &PowerFlowProblem, state: &SolverState) -> DMatrix<f64> {
    let n = problem.layout.dim();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    problem.exact_jacobian(state, &mut entries);
    let mut j = DMatrix::zeros(n, n);
    for (r, c, v) in entries {
        j[(r, c)] += v;
    }
    j
}

/// Central-difference Jacobian of the residual.
pub fn finite_difference_jacobian(problem: &PowerFlowProblem, state: &SolverState, h: f64) -> DMatrix<f64> {
    let n = problem.layout.dim();
    let mut j = DMatrix::zeros(n, n);
    let mut probe = state.clone();
    for c in 0..n {
        let x0 = state.x[c];
        probe.x[c] = x0 + h;
        let up = problem.residual(&probe);
        probe.x[c] = x0 - h;
        let down = problem.residual(&probe);
        probe.x[c] = x0;
        for r in 0..n {
            j[(r, c)] = (up[r] - down[r]) / (2.0 * h);
        }
    }
    j
}

/// Largest entrywise error of the analytic Jacobian against central
/// differences, relative to `max(1, |entry|)`.
pub fn jacobian_error(problem: &PowerFlowProblem, state: &SolverState) -> f64 {
    let exact = dense_jacobian(problem, state);
    let fd = finite_difference_jacobian(problem, state, 1e-6);
    exact
        .iter()
        .zip(fd.iter())
        .map(|(a, b)| (a - b).abs() / a.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// A random operating point around the initial state, with random generator
/// and converter limit states.
pub fn random_state(problem: &PowerFlowProblem, rng: &mut impl Rng) -> SolverState {
    use acdcflow::ac::GenMode;
    use acdcflow::newton::VscVar;
    use acdcflow::vsc::{LimitStage, PinnedLimit, VscLimitState};

    let l = &problem.layout;
    let mut s = problem.initial_state();
    for i in 0..l.n_bus {
        s.x[l.theta(i)] = rng.gen_range(-0.5..0.5);
        s.x[l.vm(i)] = rng.gen_range(0.9..1.1);
    }
    for u in 0..l.n_units {
        s.x[l.qg(u)] = rng.gen_range(-1.0..1.0);
        s.gen_modes[u] = [GenMode::VoltageControl, GenMode::AtQMax, GenMode::AtQMin][rng.gen_range(0..3)];
    }
    for k in 0..l.n_slack {
        s.x[l.pg(k)] = rng.gen_range(0.0..3.0);
    }
    for k in 0..l.n_vsc {
        let bus = problem.mtdc.converters[k].bus;
        s.x[l.vsc(k, VscVar::ThetaSh)] = s.x[l.theta(bus)] + rng.gen_range(-0.3..0.3);
        s.x[l.vsc(k, VscVar::Vsh)] = rng.gen_range(0.85..1.15);
        for var in [VscVar::Psh, VscVar::Qsh, VscVar::PdcPrime, VscVar::Pdc] {
            s.x[l.vsc(k, var)] = rng.gen_range(-1.0..1.0);
        }
        s.x[l.vsc(k, VscVar::Ish)] = rng.gen_range(0.05..1.0);
        let pins = [
            None,
            Some(PinnedLimit::VshAtMax),
            Some(PinnedLimit::VshAtMin),
            Some(PinnedLimit::IshAtMax),
        ];
        let (ctrl1, ctrl2) = (pins[rng.gen_range(0..4)], pins[rng.gen_range(0..4)]);
        let stage = match (ctrl1.is_some(), ctrl2.is_some()) {
            (false, false) => LimitStage::AllControlsActive,
            (true, true) => LimitStage::SecondReleased,
            _ => LimitStage::FirstReleased,
        };
        s.vsc_limits[k] = VscLimitState { stage, ctrl1, ctrl2 };
    }
    for n in 0..l.n_dc {
        s.x[l.vdc(n)] = rng.gen_range(0.95..1.05);
    }
    s
}

/// Power dissipated in the DC lines at the given node voltages.
pub fn dc_line_losses(mtdc: &MtdcSystem, vdc: &HashMap<u32, f64>) -> f64 {
    mtdc.dc_lines
        .iter()
        .map(|l| (vdc[&l.from] - vdc[&l.to]).powi(2) / l.r)
        .sum()
}

/// Jacobian check restricted to the given columns, for systems too large
/// for a dense comparison. Same error measure as [`jacobian_error`].
pub fn column_jacobian_error(problem: &PowerFlowProblem, state: &SolverState, columns: &[usize]) -> f64 {
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    problem.exact_jacobian(state, &mut entries);
    let mut by_column: HashMap<usize, HashMap<usize, f64>> = HashMap::new();
    for (r, c, v) in entries {
        *by_column.entry(c).or_default().entry(r).or_default() += v;
    }
    let h = 1e-6;
    let mut probe = state.clone();
    let mut worst = 0.0_f64;
    for &c in columns {
        let x0 = state.x[c];
        probe.x[c] = x0 + h;
        let up = problem.residual(&probe);
        probe.x[c] = x0 - h;
        let down = problem.residual(&probe);
        probe.x[c] = x0;
        let exact = by_column.get(&c);
        for r in 0..up.len() {
            let fd = (up[r] - down[r]) / (2.0 * h);
            let a = exact.and_then(|m| m.get(&r)).copied().unwrap_or(0.0);
            worst = worst.max((a - fd).abs() / a.abs().max(1.0));
        }
    }
    worst
}
