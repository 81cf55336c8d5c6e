//! Detection events, the matching graph, and syndrome decoding.
//!
//! Each memory basis is decoded in its own sector: the Z basis watches Z
//! checks (which flag X-type errors), the X basis watches X checks. Detection
//! events are XORs of consecutive syndrome rows, with round 0 compared
//! against the prepared all-plus-one reference and the perfect transversal
//! readout included as the last row.
//!
//! The matching graph puts a node at every (round, check) pair plus one
//! virtual boundary node. Base edges are space edges between checks sharing a
//! data qubit, time edges between consecutive rounds of the same check, and
//! boundary edges from checks with a data qubit no other same-type check
//! sees. The default graph costs every base edge 1; the weighted variant
//! costs space and time edges by the log-likelihood of their underlying error
//! (data flip vs measurement flip), which matters when a channel drives the
//! two rates far apart. Each base edge carries a parity bit marking whether
//! the underlying single-qubit error flips the fixed logical representative;
//! all-pairs shortest paths (deterministic order) fold those bits into a
//! per-pair path parity.
//!
//! Decoding is minimum-weight perfect matching over the events, boundary
//! pairings allowed: exact subset dynamic programming up to
//! [`EXACT_MATCHING_CAP`] events, greedy nearest-pair beyond. Ties prefer the
//! lexicographically smallest pairing (boundary ordered after all events) so
//! identical inputs always give identical parity. The decoded correction
//! parity XORed with the transversal logical readout adjudicates failure.

use crate::surface::{Basis, RotatedSurfaceCode, StabKind, SyndromeRecord};
use crate::{PfsrError, Result};

/// Largest event set decoded by exact subset DP; beyond this the greedy
/// nearest-pair fallback engages. 2^14 subsets keeps the worst case cheap.
pub const EXACT_MATCHING_CAP: usize = 14;

/// Where consecutive syndrome rows disagree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DetectionEvents {
    /// Number of syndrome rows the record held (graph time extent).
    pub levels: usize,
    /// `(round, stabilizer)` pairs, ascending; stabilizer indices are global.
    pub events: Vec<(usize, usize)>,
}

impl DetectionEvents {
    /// Debug dump, one `round,stabilizer` line per event.
    pub fn csv_lines(&self) -> Vec<String> {
        self.events.iter().map(|(r, s)| format!("{r},{s}")).collect()
    }
}

/// XOR consecutive rows of the record over the basis-type checks.
pub fn extract_events(
    record: &SyndromeRecord,
    code: &RotatedSurfaceCode,
) -> Result<DetectionEvents> {
    let m = code.num_stabilizers();
    if record.d != code.distance() {
        return Err(PfsrError::InvalidParameter(format!(
            "record distance {} does not match code distance {}",
            record.d,
            code.distance()
        )));
    }
    if record.rows.is_empty() || record.rows.iter().any(|r| r.len() != m) {
        return Err(PfsrError::InvalidParameter(
            "syndrome record rows are missing or ragged".into(),
        ));
    }
    let relevant = relevant_kind(record.basis);
    let mut events = Vec::new();
    let mut prev = vec![false; m];
    for (level, row) in record.rows.iter().enumerate() {
        for (i, s) in code.stabilizers().iter().enumerate() {
            if s.kind == relevant && (row[i] ^ prev[i]) {
                events.push((level, i));
            }
        }
        prev.clone_from(row);
    }
    Ok(DetectionEvents {
        levels: record.rows.len(),
        events,
    })
}

fn relevant_kind(basis: Basis) -> StabKind {
    match basis {
        Basis::Z => StabKind::Z,
        Basis::X => StabKind::X,
    }
}

/// Shortest-path metric over (round, check) nodes plus a boundary.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    levels: usize,
    /// Global indices of the decoded checks, ascending.
    stabs: Vec<usize>,
    /// Global stabilizer index -> rank in `stabs`.
    rank_of: Vec<Option<usize>>,
    /// Node count including the boundary (always the last node).
    n: usize,
    dist: Vec<f64>,
    parity: Vec<bool>,
}

/// Base edges of one sector: sorted neighbor lists `(node, parity, weight)`
/// over the real (round, check) nodes, plus each node's boundary-edge parity
/// where one exists (boundary edges cost `w_space`). Shared by the builder
/// and the test oracles.
fn sector_edges(
    code: &RotatedSurfaceCode,
    levels: usize,
    basis: Basis,
    rank_of: &[Option<usize>],
    m: usize,
    w_space: f64,
    w_time: f64,
) -> (Vec<Vec<(usize, bool, f64)>>, Vec<Option<bool>>) {
    let n_real = levels * m;
    let logical = code.logical_support(basis);
    let mut adj: Vec<Vec<(usize, bool, f64)>> = vec![Vec::new(); n_real];
    let mut bedge: Vec<Option<bool>> = vec![None; n_real];
    for q in 0..code.num_data_qubits() {
        let owners: Vec<usize> = (0..code.num_stabilizers())
            .filter_map(|i| {
                (code.stabilizers()[i].support.contains(&q)).then_some(rank_of[i]).flatten()
            })
            .collect();
        let p = logical.contains(&q);
        for level in 0..levels {
            match owners.as_slice() {
                [a, b] => {
                    adj[level * m + a].push((level * m + b, p, w_space));
                    adj[level * m + b].push((level * m + a, p, w_space));
                }
                [a] => {
                    let slot = &mut bedge[level * m + a];
                    // A check's dangling qubits sit on one lattice side, so
                    // their crossing bits agree; keep the first.
                    debug_assert!(slot.is_none() || *slot == Some(p));
                    slot.get_or_insert(p);
                }
                other => unreachable!("qubit {q} has {} same-type checks", other.len()),
            }
        }
    }
    for level in 0..levels.saturating_sub(1) {
        for r in 0..m {
            adj[level * m + r].push(((level + 1) * m + r, false, w_time));
            adj[(level + 1) * m + r].push((level * m + r, false, w_time));
        }
    }
    for list in &mut adj {
        list.sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    }
    (adj, bedge)
}

/// Dijkstra distances over (node, crossing parity) states, real edges only.
/// Entry `2t + parity` is the cheapest cost of a path to `t` with that
/// crossing parity. Simple quadratic selection keeps it deterministic; the
/// graphs are small.
fn doubled_dijkstra(adj: &[Vec<(usize, bool, f64)>], starts: &[(usize, bool, f64)]) -> Vec<f64> {
    let nn = 2 * adj.len();
    let mut dist = vec![f64::INFINITY; nn];
    let mut done = vec![false; nn];
    for &(node, parity, d) in starts {
        let s = 2 * node + usize::from(parity);
        if d < dist[s] {
            dist[s] = d;
        }
    }
    loop {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for (v, &dv) in dist.iter().enumerate() {
            if !done[v] && dv < best {
                best = dv;
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        let (node, pu) = (u / 2, u % 2 == 1);
        for &(v, p, w) in &adj[node] {
            let t = 2 * v + usize::from(pu ^ p);
            let nd = best + w;
            if nd < dist[t] {
                dist[t] = nd;
            }
        }
    }
    dist
}

/// Pick (distance, parity) from per-parity distances: the cheaper class
/// wins; an exact tie is genuinely ambiguous and resolves to even.
fn pick(d0: f64, d1: f64) -> (f64, bool) {
    if d1 < d0 {
        (d1, true)
    } else {
        (d0, false)
    }
}

fn build_graph(
    code: &RotatedSurfaceCode,
    rounds: usize,
    basis: Basis,
    w_space: f64,
    w_time: f64,
) -> MatchingGraph {
    let relevant = relevant_kind(basis);
    let mut rank_of = vec![None; code.num_stabilizers()];
    let mut stabs = Vec::new();
    for (i, s) in code.stabilizers().iter().enumerate() {
        if s.kind == relevant {
            rank_of[i] = Some(stabs.len());
            stabs.push(i);
        }
    }
    let m = stabs.len();
    let n_real = rounds * m;
    let n = n_real + 1;
    let (adj, bedge) = sector_edges(code, rounds, basis, &rank_of, m, w_space, w_time);
    let mut dist = vec![0.0f64; n * n];
    let mut parity = vec![false; n * n];
    // Boundary row: expand from every boundary edge at its own cost.
    let starts: Vec<(usize, bool, f64)> = bedge
        .iter()
        .enumerate()
        .filter_map(|(v, p)| p.map(|p| (v, p, w_space)))
        .collect();
    let from_b = doubled_dijkstra(&adj, &starts);
    let boundary = n - 1;
    for t in 0..n_real {
        let (d, p) = pick(from_b[2 * t], from_b[2 * t + 1]);
        dist[boundary * n + t] = d;
        dist[t * n + boundary] = d;
        parity[boundary * n + t] = p;
        parity[t * n + boundary] = p;
    }
    for src in 0..n_real {
        let real = doubled_dijkstra(&adj, &[(src, false, 0.0)]);
        let (b_src, pb_src) = (dist[boundary * n + src], parity[boundary * n + src]);
        for t in 0..n_real {
            let (rd, rp) = pick(real[2 * t], real[2 * t + 1]);
            let split = b_src + dist[boundary * n + t];
            let (d, p) = if rd <= split {
                (rd, rp)
            } else {
                (split, pb_src ^ parity[boundary * n + t])
            };
            dist[src * n + t] = d;
            parity[src * n + t] = p;
        }
    }
    MatchingGraph {
        levels: rounds,
        stabs,
        rank_of,
        n,
        dist,
        parity,
    }
}

/// Build the unit-cost decoding metric for `rounds` syndrome rows in `basis`.
///
/// Distances are full-graph shortest paths (boundary transit allowed), so
/// the triangle inequality holds everywhere. Parity prefers a boundary-free
/// path whenever one achieves the distance: a matched pair corrects a single
/// error chain, and only when the boundary shortcut is strictly cheaper does
/// the pairing degenerate into two boundary chains (where the decode cost
/// ties the explicit boundary split anyway).
pub fn build_matching_graph(
    code: &RotatedSurfaceCode,
    rounds: usize,
    basis: Basis,
) -> MatchingGraph {
    build_graph(code, rounds, basis, 1.0, 1.0)
}

/// Probability bounds for [`build_weighted_matching_graph`]: rates are
/// clamped inside (0, 1/2) so every edge weight stays positive and finite.
const MIN_EDGE_RATE: f64 = 1e-9;
const MAX_EDGE_RATE: f64 = 0.4999;

/// Build the decoding metric with space and time edges weighted by the
/// log-likelihood ln((1-p)/p) of their underlying error: `p_space` is the
/// per-round probability that a data qubit takes a basis-flipping error,
/// `p_time` the probability that a recorded outcome is flipped. With equal
/// rates this reduces to a rescaled [`build_matching_graph`]; when the two
/// rates differ strongly (amplitude damping's readout flips run at twice
/// its basis-flip rate) the weighting places the threshold correctly.
pub fn build_weighted_matching_graph(
    code: &RotatedSurfaceCode,
    rounds: usize,
    basis: Basis,
    p_space: f64,
    p_time: f64,
) -> MatchingGraph {
    let w = |p: f64| {
        let p = p.clamp(MIN_EDGE_RATE, MAX_EDGE_RATE);
        ((1.0 - p) / p).ln()
    };
    build_graph(code, rounds, basis, w(p_space), w(p_time))
}

impl MatchingGraph {
    /// Nodes including the virtual boundary.
    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Checks this graph decodes, as global stabilizer indices.
    pub fn stabilizers(&self) -> &[usize] {
        &self.stabs
    }

    fn node(&self, level: usize, stab: usize) -> usize {
        let rank = self.rank_of[stab].expect("event on a check of the other type");
        debug_assert!(level < self.levels);
        level * self.stabs.len() + rank
    }

    fn boundary(&self) -> usize {
        self.n - 1
    }

    /// Shortest-path cost between two nodes.
    pub fn pair_distance(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.n + b]
    }

    /// Logical-crossing parity of the chosen shortest path.
    pub fn pair_parity(&self, a: usize, b: usize) -> bool {
        self.parity[a * self.n + b]
    }
}

/// Minimum-weight matching of the events (boundary pairings allowed);
/// returns the total logical-crossing parity of the matched paths.
pub fn decode(events: &DetectionEvents, graph: &MatchingGraph) -> bool {
    let nodes: Vec<usize> = events
        .events
        .iter()
        .map(|&(level, stab)| graph.node(level, stab))
        .collect();
    if nodes.is_empty() {
        return false;
    }
    if nodes.len() <= EXACT_MATCHING_CAP {
        match_exact(&nodes, graph).1
    } else {
        match_greedy(&nodes, graph).1
    }
}

/// Exact minimum over all perfect matchings via subset DP. Within each
/// subproblem the lowest event pairs with the smallest partner that achieves
/// the minimum (boundary ordered last), which makes the overall pairing the
/// lexicographically smallest minimizer.
fn match_exact(nodes: &[usize], graph: &MatchingGraph) -> (f64, bool) {
    let k = nodes.len();
    let boundary = graph.boundary();
    let mut f: Vec<(f64, bool)> = vec![(f64::INFINITY, false); 1 << k];
    f[0] = (0.0, false);
    for s in 1usize..(1 << k) {
        let i = s.trailing_zeros() as usize;
        let rest = s & !(1 << i);
        let mut best = (f64::INFINITY, false);
        let mut j = rest;
        while j != 0 {
            let jj = j.trailing_zeros() as usize;
            j &= j - 1;
            let sub = f[rest & !(1 << jj)];
            let cost = sub.0 + graph.pair_distance(nodes[i], nodes[jj]);
            if cost < best.0 {
                best = (cost, sub.1 ^ graph.pair_parity(nodes[i], nodes[jj]));
            }
        }
        let sub = f[rest];
        let cost = sub.0 + graph.pair_distance(nodes[i], boundary);
        if cost < best.0 {
            best = (cost, sub.1 ^ graph.pair_parity(nodes[i], boundary));
        }
        f[s] = best;
    }
    f[(1 << k) - 1]
}

/// Nearest-pair greedy matching for oversized event sets. Ties resolve by
/// ascending (cost, first event, partner), boundary last.
fn match_greedy(nodes: &[usize], graph: &MatchingGraph) -> (f64, bool) {
    let boundary = graph.boundary();
    let mut alive: Vec<usize> = (0..nodes.len()).collect();
    let mut total = 0.0f64;
    let mut parity = false;
    while !alive.is_empty() {
        // (cost, ai, aj); aj == alive.len() means boundary.
        let mut best: Option<(f64, usize, usize)> = None;
        let consider = |cand: (f64, usize, usize), best: &mut Option<(f64, usize, usize)>| {
            let better = best.is_none_or(|b| {
                cand.0
                    .total_cmp(&b.0)
                    .then(cand.1.cmp(&b.1))
                    .then(cand.2.cmp(&b.2))
                    .is_lt()
            });
            if better {
                *best = Some(cand);
            }
        };
        for ai in 0..alive.len() {
            for aj in ai + 1..alive.len() {
                let c = graph.pair_distance(nodes[alive[ai]], nodes[alive[aj]]);
                consider((c, ai, aj), &mut best);
            }
            let c = graph.pair_distance(nodes[alive[ai]], boundary);
            consider((c, ai, alive.len()), &mut best);
        }
        let (cost, ai, aj) = best.expect("nonempty event set");
        total += cost;
        if aj == alive.len() {
            parity ^= graph.pair_parity(nodes[alive[ai]], boundary);
            alive.remove(ai);
        } else {
            parity ^= graph.pair_parity(nodes[alive[ai]], nodes[alive[aj]]);
            alive.remove(aj);
            alive.remove(ai);
        }
    }
    (total, parity)
}

/// Did the trajectory end in a logical error after correction? The prepared
/// logical value is 0, so failure is readout XOR correction.
pub fn logical_failure(record: &SyndromeRecord, correction: bool) -> bool {
    record.logical ^ correction
}

/// Extract, decode, and adjudicate one record against a prebuilt graph.
pub fn decode_record(
    record: &SyndromeRecord,
    code: &RotatedSurfaceCode,
    graph: &MatchingGraph,
) -> Result<bool> {
    let events = extract_events(record, code)?;
    if events.levels != graph.levels() {
        return Err(PfsrError::InvalidParameter(format!(
            "record has {} rows but the graph was built for {}",
            events.levels,
            graph.levels()
        )));
    }
    Ok(logical_failure(record, decode(&events, graph)))
}
