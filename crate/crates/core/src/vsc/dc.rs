use crate::case::DcLineRecord;

/// DC nodal conductance matrix, row-compressed with sorted columns. Every
/// row stores its diagonal even for a node without lines.
#[derive(Debug, Clone, PartialEq)]
pub struct DcNetworkMatrix {
    rows: Vec<Vec<(usize, f64)>>,
}

/// Builds the conductance matrix over `n` nodes. `index` maps a node id to
/// its position. Fails on a nonpositive or non-finite resistance.
pub fn dc_network_matrix(
    n: usize,
    lines: &[DcLineRecord],
    index: impl Fn(u32) -> usize,
) -> Result<DcNetworkMatrix, String> {
    let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(i, 0.0)]).collect();
    let add =
        |rows: &mut Vec<Vec<(usize, f64)>>, i: usize, j: usize, v: f64| match rows[i].iter_mut().find(|(c, _)| *c == j)
        {
            Some(entry) => entry.1 += v,
            None => rows[i].push((j, v)),
        };
    for line in lines {
        if !(line.r > 0.0 && line.r.is_finite()) {
            return Err(format!("nonpositive DC resistance on line {}-{}", line.from, line.to));
        }
        let (a, b) = (index(line.from), index(line.to));
        let y = 1.0 / line.r;
        add(&mut rows, a, a, y);
        add(&mut rows, b, b, y);
        add(&mut rows, a, b, -y);
        add(&mut rows, b, a, -y);
    }
    for row in &mut rows {
        row.sort_by_key(|&(c, _)| c);
    }
    Ok(DcNetworkMatrix { rows })
}

impl DcNetworkMatrix {
    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|(c, _)| *c == j).map_or(0.0, |&(_, v)| v)
    }

    /// Network current injected at each node, `Y · vdc`.
    pub fn currents(&self, vdc: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().map(|&(j, y)| y * vdc[j]).sum())
            .collect()
    }
}

/// Current balance at each DC node: converter current `p_dc / v_dc` minus the
/// network current. `p_dc[m]` is the total converter power at node `m`.
pub fn dc_node_balance(p_dc: &[f64], vdc: &[f64], y: &DcNetworkMatrix) -> Vec<f64> {
    y.currents(vdc)
        .into_iter()
        .enumerate()
        .map(|(m, i_net)| p_dc[m] / vdc[m] - i_net)
        .collect()
}
