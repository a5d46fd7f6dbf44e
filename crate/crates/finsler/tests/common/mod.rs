//! Shared finite-difference oracle for integration tests.
//!
//! Mixed partial derivatives are approximated by tensor products of
//! one-dimensional central stencils whose weights come from the Fornberg
//! recurrence, at eighth-order accuracy. Wide high-accuracy stencils at a
//! moderate step beat nested small-step differences for derivatives up to
//! order six in double precision.

/// Weights for the m-th derivative at 0 from nodes `z` (Fornberg's
/// recurrence, all derivative orders 0..=m computed, row m returned).
pub fn fornberg_weights(m: usize, z: &[f64]) -> Vec<f64> {
    let nn = z.len();
    // c[k][j]: weight of node j for the k-th derivative.
    let mut c = vec![vec![0.0f64; nn]; m + 1];
    let mut c1 = 1.0f64;
    let mut c4 = z[0];
    c[0][0] = 1.0;
    for i in 1..nn {
        let mn = i.min(m);
        let mut c2 = 1.0f64;
        let c5 = c4;
        c4 = z[i];
        for j in 0..i {
            let c3 = z[i] - z[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c[m].clone()
}

/// One-dimensional stencil for derivative order `m`: symmetric nodes
/// −r..r scaled by `h`, sixth-order accurate for low orders and
/// eighth-order for m ≥ 4 (where truncation bites hardest).
fn stencil(m: usize, h: f64) -> (Vec<f64>, Vec<f64>) {
    let r = m.div_ceil(2) + if m <= 2 { 2 } else { 3 };
    let nodes: Vec<f64> = (-(r as isize)..=r as isize).map(|k| k as f64 * h).collect();
    let weights = fornberg_weights(m, &nodes);
    (nodes, weights)
}

/// Mixed partial ∂^α f at `at`, with per-variable base steps `h`.
pub fn fd_partial<F>(f: &F, at: &[f64], alpha: &[usize], h: &[f64]) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    let plan: Vec<(usize, Vec<f64>, Vec<f64>)> = alpha
        .iter()
        .enumerate()
        .filter(|(_, &a)| a > 0)
        .map(|(v, &a)| {
            let (nodes, weights) = stencil(a, h[v]);
            (v, nodes, weights)
        })
        .collect();
    let mut point = at.to_vec();
    fd_rec(f, &mut point, &plan, 0)
}

fn fd_rec<F>(f: &F, point: &mut Vec<f64>, plan: &[(usize, Vec<f64>, Vec<f64>)], depth: usize) -> f64
where
    F: Fn(&[f64]) -> f64,
{
    if depth == plan.len() {
        return f(point);
    }
    let (var, ref nodes, ref weights) = plan[depth];
    let saved = point[var];
    let mut acc = 0.0;
    for (z, w) in nodes.iter().zip(weights) {
        if *w == 0.0 {
            continue;
        }
        point[var] = saved + z;
        acc += w * fd_rec(f, point, plan, depth + 1);
    }
    point[var] = saved;
    acc
}

/// Relative deviation with a unit floor: |a − b| / max(1, |a|, |b|).
pub fn rel_dev(a: f64, b: f64) -> f64 {
    (a - b).abs() / 1.0f64.max(a.abs()).max(b.abs())
}

/// All multi-indices over `vars` variables with 1 ≤ |α| ≤ `max_order`.
pub fn multi_indices(vars: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = vec![0usize; vars];
    fn walk(cur: &mut Vec<usize>, pos: usize, left: usize, out: &mut Vec<Vec<usize>>) {
        if pos == cur.len() {
            if cur.iter().any(|&a| a > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for a in 0..=left {
            cur[pos] = a;
            walk(cur, pos + 1, left - a, out);
        }
        cur[pos] = 0;
    }
    walk(&mut cur, 0, max_order, &mut out);
    out
}
