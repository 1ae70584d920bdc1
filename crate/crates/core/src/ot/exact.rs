//! Exact transportation-simplex solver for small discrete problems.
//!
//! The basis is a spanning tree of the bipartite graph between supply rows
//! and demand columns, seeded by the northwest-corner rule. Entering cells use
//! the most negative reduced cost; after a run of degenerate pivots the rule
//! switches to lowest-index (Bland) selection, which cannot cycle. All ties
//! are broken by lowest row-major index.

use super::{check_dims, CostMatrix, ProbVector, TransportPlan};
use crate::error::{Error, Result};

const DEGENERATE_STREAK: usize = 64;

#[derive(Debug, Clone)]
pub struct ExactSolution {
    /// Optimal value of the transportation program (squared W2 distance).
    pub w2_squared: f64,
    pub plan: TransportPlan,
    pub pivots: usize,
}

/// Exact optimal transport between `a` and `b` under cost `d`.
pub fn exact_ot(a: &ProbVector, b: &ProbVector, d: &CostMatrix) -> Result<ExactSolution> {
    check_dims(a, b, d)?;
    let len = d.len();
    let rows: Vec<usize> = (0..len).filter(|&i| a[i] > 0.0).collect();
    let cols: Vec<usize> = (0..len).filter(|&j| b[j] > 0.0).collect();
    let supply: Vec<f64> = rows.iter().map(|&i| a[i]).collect();
    let demand: Vec<f64> = cols.iter().map(|&j| b[j]).collect();
    let cost: Vec<f64> = rows
        .iter()
        .flat_map(|&i| cols.iter().map(move |&j| d.get(i, j)))
        .collect();

    let mut tableau = Tableau::northwest(&supply, &demand, cost);
    let pivots = tableau.optimize()?;

    let mut mass = vec![0.0; len * len];
    let mut w2_squared = 0.0;
    for cell in &tableau.basis {
        let (i, j) = (rows[cell.row], cols[cell.col]);
        mass[i * len + j] += cell.flow;
    }
    for (m, c) in mass.iter().zip(d.entries()) {
        w2_squared += m * c;
    }
    Ok(ExactSolution {
        w2_squared,
        plan: TransportPlan::from_raw(len, len, mass),
        pivots,
    })
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    row: usize,
    col: usize,
    flow: f64,
}

struct Tableau {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    basis: Vec<Cell>,
    in_basis: Vec<bool>,
}

impl Tableau {
    fn northwest(supply: &[f64], demand: &[f64], cost: Vec<f64>) -> Self {
        let (m, n) = (supply.len(), demand.len());
        let mut s = supply.to_vec();
        let mut d = demand.to_vec();
        let mut basis = Vec::with_capacity(m + n - 1);
        let mut in_basis = vec![false; m * n];
        let (mut i, mut j) = (0, 0);
        loop {
            let flow = s[i].min(d[j]).max(0.0);
            s[i] -= flow;
            d[j] -= flow;
            basis.push(Cell { row: i, col: j, flow });
            in_basis[i * n + j] = true;
            if i == m - 1 && j == n - 1 {
                break;
            }
            if i == m - 1 {
                j += 1;
            } else if j == n - 1 || s[i] <= d[j] {
                i += 1;
            } else {
                j += 1;
            }
        }
        // Rounding residue from the staircase lands on the final cell.
        if let Some(last) = basis.last_mut() {
            last.flow += s[m - 1].min(d[n - 1]).max(0.0);
        }
        Tableau { m, n, cost, basis, in_basis }
    }

    /// Node ids: rows are `0..m`, columns are `m..m+n`.
    fn adjacency(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.m + self.n];
        for (e, c) in self.basis.iter().enumerate() {
            adj[c.row].push((self.m + c.col, e));
            adj[self.m + c.col].push((c.row, e));
        }
        adj
    }

    fn potentials(&self, adj: &[Vec<(usize, usize)>]) -> (Vec<f64>, Vec<f64>) {
        let total = self.m + self.n;
        let mut pot = vec![0.0; total];
        let mut seen = vec![false; total];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(node) = stack.pop() {
            for &(next, e) in &adj[node] {
                if seen[next] {
                    continue;
                }
                let c = self.basis[e];
                let cost = self.cost[c.row * self.n + c.col];
                // u_row + v_col = cost
                pot[next] = cost - pot[node];
                seen[next] = true;
                stack.push(next);
            }
        }
        let v = pot.split_off(self.m);
        (pot, v)
    }

    /// Basis edges on the tree path from column node `col` to row node `row`,
    /// ordered starting next to the column.
    fn tree_path(&self, adj: &[Vec<(usize, usize)>], row: usize, col: usize) -> Vec<usize> {
        let total = self.m + self.n;
        let start = self.m + col;
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; total];
        let mut seen = vec![false; total];
        let mut queue = std::collections::VecDeque::from([start]);
        seen[start] = true;
        while let Some(node) = queue.pop_front() {
            if node == row {
                break;
            }
            for &(next, e) in &adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, e));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = row;
        while let Some((prev, e)) = parent[node] {
            path.push(e);
            node = prev;
        }
        path.reverse();
        path
    }

    fn optimize(&mut self) -> Result<usize> {
        let scale = self.cost.iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
        let tol = 1e-12 * scale;
        let max_pivots = 50 * (self.m + self.n) * (self.m + self.n) + 1000;
        let mut degenerate_run = 0;
        let mut pivots = 0;
        loop {
            let adj = self.adjacency();
            let (u, v) = self.potentials(&adj);
            let bland = degenerate_run >= DEGENERATE_STREAK;
            let mut entering: Option<(usize, usize, f64)> = None;
            'scan: for i in 0..self.m {
                for j in 0..self.n {
                    if self.in_basis[i * self.n + j] {
                        continue;
                    }
                    let reduced = self.cost[i * self.n + j] - u[i] - v[j];
                    if reduced < -tol && entering.is_none_or(|(_, _, r)| reduced < r) {
                        entering = Some((i, j, reduced));
                        if bland {
                            break 'scan;
                        }
                    }
                }
            }
            let Some((row, col, _)) = entering else {
                return Ok(pivots);
            };
            pivots += 1;
            if pivots > max_pivots {
                return Err(Error::InvalidInput(format!(
                    "transportation simplex did not terminate after {max_pivots} pivots"
                )));
            }

            // Edges alternate -, +, -, ... starting next to the column;
            // the path length is odd so the edge next to the row is also -.
            let path = self.tree_path(&adj, row, col);
            let mut leave: Option<usize> = None;
            for &e in path.iter().step_by(2) {
                let c = self.basis[e];
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let cur = self.basis[l];
                        c.flow < cur.flow
                            || (c.flow == cur.flow && (c.row, c.col) < (cur.row, cur.col))
                    }
                };
                if better {
                    leave = Some(e);
                }
            }
            let leave = leave.expect("cycle has at least one decreasing edge");
            let theta = self.basis[leave].flow;
            for (k, &e) in path.iter().enumerate() {
                let f = &mut self.basis[e].flow;
                if k % 2 == 0 {
                    *f = (*f - theta).max(0.0);
                } else {
                    *f += theta;
                }
            }
            degenerate_run = if theta <= 1e-15 { degenerate_run + 1 } else { 0 };

            let old = self.basis[leave];
            self.in_basis[old.row * self.n + old.col] = false;
            self.in_basis[row * self.n + col] = true;
            self.basis[leave] = Cell { row, col, flow: theta };
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_marginals_cost_nothing() {
        let a = ProbVector::new(vec![0.1, 0.6, 0.3]).unwrap();
        let d = CostMatrix::from_entries(3, vec![0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]).unwrap();
        let sol = exact_ot(&a, &a, &d).unwrap();
        assert_abs_diff_eq!(sol.w2_squared, 0.0, epsilon = 1e-15);
        for i in 0..3 {
            assert_abs_diff_eq!(sol.plan.get(i, i), a[i], epsilon = 1e-15);
        }
    }

    #[test]
    fn only_one_feasible_plan() {
        let a = ProbVector::new(vec![1.0, 0.0]).unwrap();
        let b = ProbVector::new(vec![0.0, 1.0]).unwrap();
        let d = CostMatrix::from_entries(2, vec![0.0, 3.5, 3.5, 0.0]).unwrap();
        let sol = exact_ot(&a, &b, &d).unwrap();
        assert_eq!(sol.w2_squared, 3.5);
        assert_eq!(sol.plan.get(0, 1), 1.0);
    }

    #[test]
    fn shift_along_a_line() {
        let a = ProbVector::new(vec![0.5, 0.5, 0.0]).unwrap();
        let b = ProbVector::new(vec![0.0, 0.5, 0.5]).unwrap();
        let d = CostMatrix::from_entries(3, vec![0.0, 1.0, 4.0, 1.0, 0.0, 1.0, 4.0, 1.0, 0.0]).unwrap();
        let sol = exact_ot(&a, &b, &d).unwrap();
        assert_abs_diff_eq!(sol.w2_squared, 1.0, epsilon = 1e-12);
    }
}
