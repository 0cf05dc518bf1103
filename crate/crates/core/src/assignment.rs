//! Exact min-cost bipartite assignment on integer cost matrices.
//!
//! Three independent solvers live here on purpose: the Hungarian algorithm
//! is the production path, a successive-shortest-path min-cost flow provides
//! an algorithmically independent cross-check, and a bitmask dynamic program
//! serves as a brute-force oracle for small instances. The labeling design
//! additionally needs a canonical (lexicographically minimal) optimum and
//! bounded enumeration of all optima; both are driven by the tight-arc graph
//! that complementary slackness carves out of an optimal dual.

use crate::error::{Error, Result};

pub const FORBIDDEN: i128 = i128::MAX / 4;
const INF: i128 = i128::MAX / 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    /// Column assigned to each row.
    pub row_to_col: Vec<usize>,
    pub total: i128,
}

/// Hungarian algorithm (shortest augmenting paths with potentials),
/// returning the assignment together with an optimal dual pair
/// (`u[i] + v[j] <= cost[i][j]`, tight on matched arcs).
pub fn hungarian_with_duals(cost: &[Vec<i128>]) -> (Assignment, Vec<i128>, Vec<i128>) {
    let n = cost.len();
    assert!(cost.iter().all(|r| r.len() == n), "square matrix required");
    // Columns are 0..n with a virtual column n used to seed each phase.
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut p = vec![n; n + 1]; // p[j] = row matched to column j (n = free)
    let mut way = vec![0usize; n + 1];
    for i in 0..n {
        p[n] = i;
        let mut j0 = n;
        let mut minv = vec![INF; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = INF;
            let mut j1 = n;
            for j in 0..n {
                if !used[j] {
                    let cur = cost[i0][j] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            debug_assert!(delta < INF, "augmenting path must exist");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == n {
                break;
            }
        }
        // Unwind the alternating path.
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == n {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; n];
    for j in 0..n {
        if p[j] < n {
            row_to_col[p[j]] = j;
        }
    }
    let total = (0..n).map(|i| cost[i][row_to_col[i]]).sum();
    let (u, v) = (u[..n].to_vec(), v[..n].to_vec());
    (Assignment { row_to_col, total }, u, v)
}

pub fn hungarian(cost: &[Vec<i128>]) -> Assignment {
    hungarian_with_duals(cost).0
}

/// Successive-shortest-path min-cost flow, used as an independent exact
/// check on the Hungarian result. Bellman-Ford (queue-based) path search on
/// the residual graph; all arc capacities are 1.
pub fn ssp_min_cost(cost: &[Vec<i128>]) -> Assignment {
    let n = cost.len();
    // Node ids: 0 = source, 1..=n rows, n+1..=2n cols, 2n+1 sink.
    let source = 0usize;
    let sink = 2 * n + 1;
    struct Arc {
        to: usize,
        cap: i64,
        cost: i128,
        rev: usize,
    }
    let mut graph: Vec<Vec<Arc>> = (0..2 * n + 2).map(|_| Vec::new()).collect();
    let add = |graph: &mut Vec<Vec<Arc>>, a: usize, b: usize, cost: i128| {
        let ra = graph[b].len();
        let rb = graph[a].len();
        graph[a].push(Arc { to: b, cap: 1, cost, rev: ra });
        graph[b].push(Arc { to: a, cap: 0, cost: -cost, rev: rb });
    };
    for i in 0..n {
        add(&mut graph, source, 1 + i, 0);
        add(&mut graph, n + 1 + i, sink, 0);
        for j in 0..n {
            if cost[i][j] < FORBIDDEN {
                add(&mut graph, 1 + i, n + 1 + j, cost[i][j]);
            }
        }
    }
    let mut total = 0i128;
    for _ in 0..n {
        // Bellman-Ford with a deque (SPFA).
        let mut dist = vec![INF; 2 * n + 2];
        let mut in_queue = vec![false; 2 * n + 2];
        let mut prev: Vec<(usize, usize)> = vec![(usize::MAX, usize::MAX); 2 * n + 2];
        dist[source] = 0;
        let mut queue = std::collections::VecDeque::new();
        queue.push_back(source);
        in_queue[source] = true;
        while let Some(x) = queue.pop_front() {
            in_queue[x] = false;
            for (k, arc) in graph[x].iter().enumerate() {
                if arc.cap > 0 && dist[x] + arc.cost < dist[arc.to] {
                    dist[arc.to] = dist[x] + arc.cost;
                    prev[arc.to] = (x, k);
                    if !in_queue[arc.to] {
                        queue.push_back(arc.to);
                        in_queue[arc.to] = true;
                    }
                }
            }
        }
        assert!(dist[sink] < INF, "flow must saturate for a square instance");
        total += dist[sink];
        let mut x = sink;
        while x != source {
            let (px, pk) = prev[x];
            let rev = graph[px][pk].rev;
            graph[px][pk].cap -= 1;
            graph[x][rev].cap += 1;
            x = px;
        }
    }
    let mut row_to_col = vec![usize::MAX; n];
    for i in 0..n {
        for arc in &graph[1 + i] {
            if arc.to != source && arc.cap == 0 && arc.to >= n + 1 && arc.to <= 2 * n {
                row_to_col[i] = arc.to - n - 1;
            }
        }
    }
    Assignment { row_to_col, total }
}

/// Brute-force oracle: exact minimum over all permutations by bitmask
/// dynamic programming. Only for `n <= 20`.
pub fn brute_force_min_cost(cost: &[Vec<i128>]) -> i128 {
    let n = cost.len();
    assert!(n <= 20, "bitmask oracle is for small instances");
    let full = 1usize << n;
    let mut dp = vec![INF; full];
    dp[0] = 0;
    for mask in 0..full {
        if dp[mask] == INF {
            continue;
        }
        let i = mask.count_ones() as usize;
        if i == n {
            continue;
        }
        for j in 0..n {
            if mask & (1 << j) == 0 {
                let cand = dp[mask] + cost[i][j];
                let m2 = mask | (1 << j);
                if cand < dp[m2] {
                    dp[m2] = cand;
                }
            }
        }
    }
    dp[full - 1]
}

/// Arcs with zero reduced cost against an optimal dual. By complementary
/// slackness the perfect matchings of this graph are exactly the optimal
/// assignments.
pub fn tight_graph(cost: &[Vec<i128>], u: &[i128], v: &[i128]) -> Vec<Vec<usize>> {
    let n = cost.len();
    (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cost[i][j] < FORBIDDEN && cost[i][j] - u[i] - v[j] == 0)
                .collect()
        })
        .collect()
}

/// Kuhn's augmenting-path max matching restricted to allowed rows.
fn try_augment(
    adj: &[Vec<usize>],
    row: usize,
    seen: &mut [bool],
    col_to_row: &mut [usize],
    skip_col: &[bool],
) -> bool {
    for &c in &adj[row] {
        if skip_col[c] || seen[c] {
            continue;
        }
        seen[c] = true;
        if col_to_row[c] == usize::MAX
            || try_augment(adj, col_to_row[c], seen, col_to_row, skip_col)
        {
            col_to_row[c] = row;
            return true;
        }
    }
    false
}

/// Lexicographically minimal optimal assignment: rows in index order each
/// take the smallest tight column that still leaves the remaining rows
/// perfectly matchable.
pub fn canonical_optimal_assignment(cost: &[Vec<i128>]) -> Result<Assignment> {
    let n = cost.len();
    let (base, u, v) = hungarian_with_duals(cost);
    let adj = tight_graph(cost, &u, &v);
    let mut fixed_col = vec![usize::MAX; n];
    let mut col_taken = vec![false; n];
    for i in 0..n {
        let mut done = false;
        for &c in &adj[i] {
            if col_taken[c] {
                continue;
            }
            // Feasibility: rows i+1..n must be matchable into the columns
            // not taken by fixed rows and not c.
            let mut col_to_row = vec![usize::MAX; n];
            let mut skip = col_taken.clone();
            skip[c] = true;
            let mut ok = true;
            for r in i + 1..n {
                let mut seen = vec![false; n];
                if !try_augment(&adj, r, &mut seen, &mut col_to_row, &skip) {
                    ok = false;
                    break;
                }
            }
            if ok {
                fixed_col[i] = c;
                col_taken[c] = true;
                done = true;
                break;
            }
        }
        if !done {
            return Err(Error::construction(
                "tight graph lost feasibility; duals are inconsistent",
            ));
        }
    }
    let total = (0..n).map(|i| cost[i][fixed_col[i]]).sum::<i128>();
    debug_assert_eq!(total, base.total);
    Ok(Assignment {
        row_to_col: fixed_col,
        total,
    })
}

/// All optimal assignments (perfect matchings of the tight graph), up to
/// `cap`. Deterministic order: depth-first by row with ascending columns.
pub fn enumerate_optimal_assignments(cost: &[Vec<i128>], cap: usize) -> Vec<Assignment> {
    let n = cost.len();
    let (base, u, v) = hungarian_with_duals(cost);
    let adj = tight_graph(cost, &u, &v);
    let mut out = vec![];
    let mut col_taken = vec![false; n];
    let mut cur = vec![usize::MAX; n];
    fn feasible(adj: &[Vec<usize>], from_row: usize, n: usize, col_taken: &[bool]) -> bool {
        let mut col_to_row = vec![usize::MAX; n];
        for r in from_row..n {
            let mut seen = vec![false; n];
            if !try_augment(adj, r, &mut seen, &mut col_to_row, col_taken) {
                return false;
            }
        }
        true
    }
    fn rec(
        adj: &[Vec<usize>],
        row: usize,
        n: usize,
        cap: usize,
        col_taken: &mut Vec<bool>,
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if out.len() >= cap {
            return;
        }
        if row == n {
            out.push(cur.clone());
            return;
        }
        for ci in 0..adj[row].len() {
            let c = adj[row][ci];
            if col_taken[c] {
                continue;
            }
            col_taken[c] = true;
            cur[row] = c;
            if feasible(adj, row + 1, n, col_taken) {
                rec(adj, row + 1, n, cap, col_taken, cur, out);
            }
            col_taken[c] = false;
            cur[row] = usize::MAX;
            if out.len() >= cap {
                return;
            }
        }
    }
    let mut found = vec![];
    rec(&adj, 0, n, cap, &mut col_taken, &mut cur, &mut found);
    for f in found {
        let total = (0..n).map(|i| cost[i][f[i]]).sum::<i128>();
        debug_assert_eq!(total, base.total);
        out.push(Assignment {
            row_to_col: f,
            total,
        });
    }
    out
}
