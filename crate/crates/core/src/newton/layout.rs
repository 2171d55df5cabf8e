use crate::ac::AcModel;
use crate::vsc::MtdcModel;

/// Per-converter variables, in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VscVar {
    ThetaSh = 0,
    Vsh = 1,
    Psh = 2,
    Qsh = 3,
    PdcPrime = 4,
    Pdc = 5,
    Ish = 6,
}

/// Per-converter equations, in block order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VscEq {
    Psh = 0,
    Qsh = 1,
    PdcPrime = 2,
    Loss = 3,
    Ish = 4,
    Ctrl1 = 5,
    Ctrl2 = 6,
}

pub const VSC_BLOCK: usize = 7;

/// Index map between named quantities and positions in the solution vector.
///
/// Variables are ordered θ (buses), V (buses), Qg (units), Pg (slack units),
/// one block of [`VSC_BLOCK`] per converter, then Vdc (DC nodes). Equation
/// rows use the same offsets: bus P and Q balances, unit control rows, slack
/// angle rows, converter blocks, DC node balances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VariableLayout {
    pub n_bus: usize,
    pub n_units: usize,
    pub n_slack: usize,
    pub n_vsc: usize,
    pub n_dc: usize,
}

impl VariableLayout {
    pub fn new(ac: &AcModel, mtdc: &MtdcModel) -> Self {
        VariableLayout {
            n_bus: ac.n_bus(),
            n_units: ac.units.len(),
            n_slack: ac.slack_units.len(),
            n_vsc: mtdc.converters.len(),
            n_dc: mtdc.n_nodes(),
        }
    }

    pub fn dim(&self) -> usize {
        self.vdc(0) + self.n_dc
    }

    pub fn ac_dim(&self) -> usize {
        self.vsc_base(0)
    }

    pub fn theta(&self, bus: usize) -> usize {
        bus
    }

    pub fn vm(&self, bus: usize) -> usize {
        self.n_bus + bus
    }

    pub fn qg(&self, unit: usize) -> usize {
        2 * self.n_bus + unit
    }

    pub fn pg(&self, slack: usize) -> usize {
        2 * self.n_bus + self.n_units + slack
    }

    fn vsc_base(&self, k: usize) -> usize {
        2 * self.n_bus + self.n_units + self.n_slack + VSC_BLOCK * k
    }

    pub fn vsc(&self, k: usize, var: VscVar) -> usize {
        self.vsc_base(k) + var as usize
    }

    pub fn vdc(&self, node: usize) -> usize {
        self.vsc_base(self.n_vsc) + node
    }

    pub fn row_p(&self, bus: usize) -> usize {
        bus
    }

    pub fn row_q(&self, bus: usize) -> usize {
        self.n_bus + bus
    }

    /// Voltage-or-reactive control row of a generator unit.
    pub fn row_unit(&self, unit: usize) -> usize {
        self.qg(unit)
    }

    /// Angle reference row of a slack unit.
    pub fn row_slack(&self, slack: usize) -> usize {
        self.pg(slack)
    }

    pub fn row_vsc(&self, k: usize, eq: VscEq) -> usize {
        self.vsc_base(k) + eq as usize
    }

    pub fn row_dc(&self, node: usize) -> usize {
        self.vdc(node)
    }

    /// Human-readable name of a variable position.
    pub fn describe_var(&self, index: usize) -> String {
        let (nb, nu, ns) = (self.n_bus, self.n_units, self.n_slack);
        if index < nb {
            format!("theta[{index}]")
        } else if index < 2 * nb {
            format!("V[{}]", index - nb)
        } else if index < 2 * nb + nu {
            format!("Qg[{}]", index - 2 * nb)
        } else if index < 2 * nb + nu + ns {
            format!("Pg[{}]", index - 2 * nb - nu)
        } else if index < self.vdc(0) {
            const NAMES: [&str; VSC_BLOCK] = ["theta_sh", "Vsh", "Psh", "Qsh", "Pdc'", "Pdc", "Ish"];
            let off = index - self.vsc_base(0);
            format!("{}[{}]", NAMES[off % VSC_BLOCK], off / VSC_BLOCK)
        } else if index < self.dim() {
            format!("Vdc[{}]", index - self.vdc(0))
        } else {
            format!("out of range ({index})")
        }
    }

    /// Human-readable name of an equation row.
    pub fn describe_row(&self, index: usize) -> String {
        let (nb, nu, ns) = (self.n_bus, self.n_units, self.n_slack);
        if index < nb {
            format!("P balance[{index}]")
        } else if index < 2 * nb {
            format!("Q balance[{}]", index - nb)
        } else if index < 2 * nb + nu {
            format!("unit control[{}]", index - 2 * nb)
        } else if index < 2 * nb + nu + ns {
            format!("slack angle[{}]", index - 2 * nb - nu)
        } else if index < self.vdc(0) {
            const NAMES: [&str; VSC_BLOCK] = ["Psh", "Qsh", "Pdc'", "loss", "Ish", "ctrl1", "ctrl2"];
            let off = index - self.vsc_base(0);
            format!("{} eq[{}]", NAMES[off % VSC_BLOCK], off / VSC_BLOCK)
        } else if index < self.dim() {
            format!("DC balance[{}]", index - self.vdc(0))
        } else {
            format!("out of range ({index})")
        }
    }

    /// Every variable position is produced by exactly one accessor and every
    /// row by exactly one row accessor, and the two sets have equal size.
    pub fn audit(&self) -> Result<(), String> {
        let n = self.dim();
        let mut vars = Vec::with_capacity(n);
        vars.extend((0..self.n_bus).map(|i| self.theta(i)));
        vars.extend((0..self.n_bus).map(|i| self.vm(i)));
        vars.extend((0..self.n_units).map(|u| self.qg(u)));
        vars.extend((0..self.n_slack).map(|s| self.pg(s)));
        for k in 0..self.n_vsc {
            for v in [
                VscVar::ThetaSh,
                VscVar::Vsh,
                VscVar::Psh,
                VscVar::Qsh,
                VscVar::PdcPrime,
                VscVar::Pdc,
                VscVar::Ish,
            ] {
                vars.push(self.vsc(k, v));
            }
        }
        vars.extend((0..self.n_dc).map(|d| self.vdc(d)));

        let mut rows = Vec::with_capacity(n);
        rows.extend((0..self.n_bus).map(|i| self.row_p(i)));
        rows.extend((0..self.n_bus).map(|i| self.row_q(i)));
        rows.extend((0..self.n_units).map(|u| self.row_unit(u)));
        rows.extend((0..self.n_slack).map(|s| self.row_slack(s)));
        for k in 0..self.n_vsc {
            for e in [
                VscEq::Psh,
                VscEq::Qsh,
                VscEq::PdcPrime,
                VscEq::Loss,
                VscEq::Ish,
                VscEq::Ctrl1,
                VscEq::Ctrl2,
            ] {
                rows.push(self.row_vsc(k, e));
            }
        }
        rows.extend((0..self.n_dc).map(|d| self.row_dc(d)));

        for (what, list) in [("variables", vars), ("equations", rows)] {
            if list.len() != n {
                return Err(format!("{} {what} for dimension {n}", list.len()));
            }
            let mut seen = vec![false; n];
            for i in list {
                if i >= n || std::mem::replace(&mut seen[i], true) {
                    return Err(format!("{what}: index {i} repeated or out of range"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn layout(n_vsc: usize, n_dc: usize) -> VariableLayout {
        VariableLayout {
            n_bus: 14,
            n_units: 5,
            n_slack: 1,
            n_vsc,
            n_dc,
        }
    }

    #[test]
    fn ac_only_dimension() {
        let l = layout(0, 0);
        assert_eq!(l.dim(), 34);
        assert_eq!(l.ac_dim(), 34);
        l.audit().unwrap();
    }

    #[test]
    fn four_terminal_dimension() {
        let l = layout(4, 4);
        assert_eq!(l.dim() - l.ac_dim(), 4 * 7 + 4);
        assert_eq!(l.dim(), 66);
        l.audit().unwrap();
    }

    #[test]
    fn names() {
        let l = layout(4, 4);
        assert_eq!(l.describe_var(l.vsc(2, VscVar::Ish)), "Ish[2]");
        assert_eq!(l.describe_var(l.vdc(3)), "Vdc[3]");
        assert_eq!(l.describe_row(l.row_vsc(1, VscEq::Ctrl2)), "ctrl2 eq[1]");
        assert_eq!(l.describe_row(l.row_unit(0)), "unit control[0]");
    }
}
