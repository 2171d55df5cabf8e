use std::collections::HashMap;

use num_complex::Complex64;

use crate::case::NetworkCase;

/// Bus admittance matrix in compressed-row form with separate real and
/// imaginary value arrays. Column indices within a row are sorted; parallel
/// branches share one structural entry.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmittanceMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    g: Vec<f64>,
    b: Vec<f64>,
}

impl AdmittanceMatrix {
    /// Assembles the bus admittance matrix from in-service branches (series
    /// impedance, line charging, off-nominal taps, phase shifts) and bus
    /// shunts. Bus order follows `case.buses`.
    ///
    /// In-service branches with zero impedance are expected to have been
    /// rejected by validation; they would produce infinite entries here.
    pub fn build(case: &NetworkCase) -> Self {
        let n = case.buses.len();
        let lookup: HashMap<u32, usize> = case.bus_lookup();
        let mut triplets: Vec<(usize, usize, Complex64)> = Vec::with_capacity(n + 4 * case.branches.len());
        for (i, bus) in case.buses.iter().enumerate() {
            triplets.push((i, i, Complex64::new(bus.g_shunt, bus.b_shunt)));
        }
        for br in case.branches.iter().filter(|br| br.in_service) {
            let (f, t) = (lookup[&br.from], lookup[&br.to]);
            let ys = Complex64::new(br.r, br.x).inv();
            let charging = Complex64::new(0.0, br.b_charging / 2.0);
            let tap = Complex64::from_polar(br.tap, br.shift);
            let ytt = ys + charging;
            let yff = ytt / (br.tap * br.tap);
            let yft = -ys / tap.conj();
            let ytf = -ys / tap;
            triplets.push((f, f, yff));
            triplets.push((f, t, yft));
            triplets.push((t, f, ytf));
            triplets.push((t, t, ytt));
        }
        triplets.sort_by_key(|&(r, c, _)| (r, c));

        let mut row_ptr = vec![0usize; n + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut g = Vec::with_capacity(triplets.len());
        let mut b = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, y) in triplets {
            if last == Some((r, c)) {
                *g.last_mut().unwrap() += y.re;
                *b.last_mut().unwrap() += y.im;
            } else {
                col_idx.push(c);
                g.push(y.re);
                b.push(y.im);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        AdmittanceMatrix {
            n,
            row_ptr,
            col_idx,
            g,
            b,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Number of structural nonzeros.
    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Iterates `(column, G, B)` over row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        range.map(move |k| (self.col_idx[k], self.g[k], self.b[k]))
    }

    /// Conductance part of entry (i, j); zero if structurally absent.
    pub fn g(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.g[k])
    }

    /// Susceptance part of entry (i, j); zero if structurally absent.
    pub fn b(&self, i: usize, j: usize) -> f64 {
        self.find(i, j).map_or(0.0, |k| self.b[k])
    }

    pub fn contains(&self, i: usize, j: usize) -> bool {
        self.find(i, j).is_some()
    }

    fn find(&self, i: usize, j: usize) -> Option<usize> {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[range.clone()]
            .binary_search(&j)
            .ok()
            .map(|k| range.start + k)
    }

    /// Active and reactive power injected into the network at every bus,
    /// S = V (Y V)*, expanded in polar form.
    pub fn injections(&self, vm: &[f64], theta: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let mut p = vec![0.0; self.n];
        let mut q = vec![0.0; self.n];
        for i in 0..self.n {
            let (mut pi, mut qi) = (0.0, 0.0);
            for (k, g, b) in self.row(i) {
                let (s, c) = (theta[i] - theta[k]).sin_cos();
                pi += vm[k] * (g * c + b * s);
                qi += vm[k] * (g * s - b * c);
            }
            p[i] = vm[i] * pi;
            q[i] = vm[i] * qi;
        }
        (p, q)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{BranchRecord, BusKind, BusRecord};

    fn bus(id: u32) -> BusRecord {
        BusRecord {
            id,
            kind: if id == 1 { BusKind::Slack } else { BusKind::Pq },
            v_init: 1.0,
            theta_init: 0.0,
            p_load: 0.0,
            q_load: 0.0,
            g_shunt: 0.0,
            b_shunt: 0.0,
            base_kv: 0.0,
        }
    }

    fn branch(from: u32, to: u32, r: f64, x: f64) -> BranchRecord {
        BranchRecord {
            from,
            to,
            r,
            x,
            b_charging: 0.0,
            tap: 1.0,
            shift: 0.0,
            in_service: true,
        }
    }

    fn case(branches: Vec<BranchRecord>) -> NetworkCase {
        NetworkCase {
            base_mva: 100.0,
            buses: vec![bus(1), bus(2)],
            generators: vec![],
            branches,
        }
    }

    #[test]
    fn single_reactance() {
        let y = AdmittanceMatrix::build(&case(vec![branch(1, 2, 0.0, 0.1)]));
        for (i, j, expected) in [(0, 0, -10.0), (0, 1, 10.0), (1, 0, 10.0), (1, 1, -10.0)] {
            assert_eq!(y.g(i, j), 0.0);
            assert!((y.b(i, j) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_service_branch_contributes_nothing() {
        let mut off = branch(1, 2, 0.01, 0.05);
        off.in_service = false;
        let with = AdmittanceMatrix::build(&case(vec![branch(1, 2, 0.0, 0.1), off]));
        let without = AdmittanceMatrix::build(&case(vec![branch(1, 2, 0.0, 0.1)]));
        assert_eq!(with, without);
    }

    #[test]
    fn parallel_branches_share_entries() {
        let y = AdmittanceMatrix::build(&case(vec![branch(1, 2, 0.0, 0.2), branch(1, 2, 0.0, 0.2)]));
        assert_eq!(y.nnz(), 4);
        assert!((y.b(0, 1) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn row_sums_equal_shunts_without_charging() {
        let mut c = case(vec![branch(1, 2, 0.02, 0.1)]);
        c.buses[1].g_shunt = 0.05;
        c.buses[1].b_shunt = 0.19;
        let y = AdmittanceMatrix::build(&c);
        let sums: Vec<(f64, f64)> = (0..2)
            .map(|i| y.row(i).fold((0.0, 0.0), |acc, (_, g, b)| (acc.0 + g, acc.1 + b)))
            .collect();
        assert!(sums[0].0.abs() < 1e-12 && sums[0].1.abs() < 1e-12);
        assert!((sums[1].0 - 0.05).abs() < 1e-12 && (sums[1].1 - 0.19).abs() < 1e-12);
    }

    #[test]
    fn tap_scales_from_side() {
        let mut br = branch(1, 2, 0.0, 0.1);
        br.tap = 0.5;
        let y = AdmittanceMatrix::build(&case(vec![br]));
        assert!((y.b(0, 0) + 40.0).abs() < 1e-9);
        assert!((y.b(0, 1) - 20.0).abs() < 1e-9);
        assert!((y.b(1, 1) + 10.0).abs() < 1e-9);
    }
}
