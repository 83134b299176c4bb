//! Exact reconstruction of an optimal primal–dual pair from an entropic iterate.
//!
//! Supported pairs of the entropic plan are sorted by mass and a maximum-weight
//! spanning forest is taken over the graph whose vertices are interior rows,
//! interior columns and a single ground vertex standing for both boundary nodes
//! (potential zero). Potentials follow from tightness `f_i + g_j = c̃_ij` along
//! tree edges; trees not touching the ground carry one free gauge, fixed by mass
//! balance. Flows follow by peeling leaves. The candidate is accepted only if all
//! flows are non-negative and every dual constraint holds, which certifies it as
//! an exact optimum. Violations drive a few active-set repairs before giving up.

use crate::transport::columns::Columns;
use crate::transport::cost::CostMatrix;
use crate::transport::scaling::DualState;

#[derive(Debug, Clone)]
pub struct PolishResult {
    pub gamma: Vec<f64>,
    pub state: DualState,
    pub max_dual_violation: f64,
    pub repairs: usize,
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    row: usize,
    col: usize,
    /// Graph endpoints: row-role vertex and column-role vertex.
    a: usize,
    b: usize,
    weight: f64,
}

struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}

const MAX_REPAIRS: usize = 60;

/// Attempts the exact polish; `None` when no certified optimum is found.
pub fn polish(
    cost: &CostMatrix,
    mu: &[f64],
    cols: &Columns<'_>,
    gamma_entropic: &[f64],
    support_floor: f64,
    dual_tol: f64,
) -> Option<PolishResult> {
    let n = mu.len();
    let nn = cost.n_nodes;
    let ground = 2 * n;
    let mut candidates: Vec<Edge> = Vec::new();
    for i in 0..nn {
        for j in 0..nn {
            if cost.is_forbidden(i, j) {
                continue;
            }
            let w = gamma_entropic[i * nn + j];
            if w > support_floor {
                let a = if i < n { i } else { ground };
                let b = if j < n { n + j } else { ground };
                candidates.push(Edge { row: i, col: j, a, b, weight: w });
            }
        }
    }
    let mut forced: Vec<(usize, usize)> = Vec::new();
    let mut banned: Vec<(usize, usize)> = Vec::new();
    for repairs in 0..=MAX_REPAIRS {
        let mut order: Vec<Edge> = candidates
            .iter()
            .copied()
            .filter(|e| !banned.contains(&(e.row, e.col)))
            .collect();
        for &(r, c) in &forced {
            if !order.iter().any(|e| e.row == r && e.col == c) {
                let a = if r < n { r } else { ground };
                let b = if c < n { n + c } else { ground };
                order.push(Edge { row: r, col: c, a, b, weight: 0.0 });
            }
        }
        order.sort_by(|x, y| {
            let fx = forced.contains(&(x.row, x.col));
            let fy = forced.contains(&(y.row, y.col));
            fy.cmp(&fx).then(y.weight.partial_cmp(&x.weight).unwrap_or(std::cmp::Ordering::Equal))
        });
        let mut dsu = Dsu::new(2 * n + 1);
        let mut tree: Vec<Edge> = Vec::new();
        for e in order {
            if e.a == ground && e.b == ground {
                continue;
            }
            if dsu.union(e.a, e.b) {
                tree.push(e);
            }
        }
        match attempt(cost, mu, cols, &tree, dual_tol) {
            Attempt::Ok(mut res) => {
                res.repairs = repairs;
                return Some(res);
            }
            Attempt::NegativeFlow(r, c) => {
                forced.retain(|&x| x != (r, c));
                banned.push((r, c));
            }
            Attempt::DualViolation(r, c) => {
                banned.retain(|&x| x != (r, c));
                if forced.contains(&(r, c)) {
                    return None;
                }
                forced.push((r, c));
            }
            Attempt::Fail => return None,
        }
    }
    None
}

enum Attempt {
    Ok(PolishResult),
    NegativeFlow(usize, usize),
    DualViolation(usize, usize),
    Fail,
}

fn attempt(cost: &CostMatrix, mu: &[f64], cols: &Columns<'_>, tree: &[Edge], dual_tol: f64) -> Attempt {
    let n = mu.len();
    let nn = cost.n_nodes;
    let nv = 2 * n + 1;
    let ground = 2 * n;
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); nv];
    for (k, e) in tree.iter().enumerate() {
        adj[e.a].push(k);
        adj[e.b].push(k);
    }
    let mut pot = vec![f64::NAN; nv];
    let mut comp = vec![usize::MAX; nv];
    let mut parent_edge = vec![usize::MAX; nv];
    let mut orders: Vec<Vec<usize>> = Vec::new();
    let mut roots = vec![ground];
    roots.extend(0..2 * n);
    for root in roots {
        if comp[root] != usize::MAX {
            continue;
        }
        let cid = orders.len();
        let mut order = vec![root];
        comp[root] = cid;
        pot[root] = 0.0;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &k in &adj[u] {
                let e = tree[k];
                let w = if e.a == u { e.b } else { e.a };
                if comp[w] != usize::MAX {
                    continue;
                }
                comp[w] = cid;
                parent_edge[w] = k;
                pot[w] = cost.get(e.row, e.col) - pot[u];
                order.push(w);
            }
        }
        orders.push(order);
    }

    for (cid, order) in orders.iter().enumerate() {
        if comp[ground] == cid {
            continue;
        }
        let rows: Vec<usize> = order.iter().copied().filter(|&v| v < n).collect();
        let cols_k: Vec<(usize, f64)> = order.iter().filter(|&&v| v >= n && v < 2 * n).map(|&v| (v - n, pot[v])).collect();
        // A column without supported pairs receives no mass; its potential is
        // then fixed by `m_j = 0`.
        if cols_k.is_empty() {
            return Attempt::Fail;
        }
        let supply: f64 = rows.iter().map(|&i| mu[i]).sum();
        let Some(t) = cols.solve_gauge(&cols_k, supply) else { return Attempt::Fail };
        for &v in order {
            if v < n {
                pot[v] += t;
            } else {
                pot[v] -= t;
            }
        }
    }

    let mut flow = vec![0.0; tree.len()];
    let mut worst_neg = (0.0f64, usize::MAX);
    let total: f64 = mu.iter().sum();
    for order in &orders {
        for &u in order.iter().rev() {
            if u == ground {
                continue;
            }
            let need = if u < n { mu[u] } else { cols.mass(u - n, -pot[u]) };
            let mut rest = need;
            for &k in &adj[u] {
                if k != parent_edge[u] {
                    rest -= flow[k];
                }
            }
            let pk = parent_edge[u];
            if pk == usize::MAX {
                if rest.abs() > 1e-9 * total.max(1.0) {
                    return Attempt::Fail;
                }
                continue;
            }
            flow[pk] = rest;
            if rest < worst_neg.0 {
                worst_neg = (rest, pk);
            }
        }
    }
    if worst_neg.0 < -1e-13 * total.max(1.0) {
        let e = tree[worst_neg.1];
        return Attempt::NegativeFlow(e.row, e.col);
    }

    let f: Vec<f64> = (0..n).map(|i| pot[i]).collect();
    let g: Vec<f64> = (0..n).map(|j| pot[n + j]).collect();
    let fr = |i: usize| if i < n { f[i] } else { 0.0 };
    let gc = |j: usize| if j < n { g[j] } else { 0.0 };
    let mut worst = (0.0f64, 0usize, 0usize);
    for i in 0..nn {
        for j in 0..nn {
            if cost.is_forbidden(i, j) {
                continue;
            }
            let c = cost.get(i, j);
            let viol = fr(i) + gc(j) - c;
            let scale = dual_tol * (1.0 + c.abs());
            if viol > scale && viol > worst.0 {
                worst = (viol, i, j);
            }
        }
    }
    if worst.0 > 0.0 {
        return Attempt::DualViolation(worst.1, worst.2);
    }
    let mut max_viol = f64::NEG_INFINITY;
    for i in 0..nn {
        for j in 0..nn {
            if !cost.is_forbidden(i, j) {
                max_viol = max_viol.max(fr(i) + gc(j) - cost.get(i, j));
            }
        }
    }
    let mut gamma = vec![0.0; nn * nn];
    for (k, e) in tree.iter().enumerate() {
        gamma[e.row * nn + e.col] = flow[k].max(0.0);
    }
    Attempt::Ok(PolishResult { gamma, state: DualState { f, g }, max_dual_violation: max_viol.max(0.0), repairs: 0 })
}
