//! Finite higher-rank graphs given by commuting adjacency matrices, their
//! structural validation, and their joint Perron–Frobenius data.
//!
//! A rank-`k` graph over `n` vertices is stored as `k` square non-negative
//! integer matrices `A_1, ..., A_k`; `A_i(v, w)` counts the colour-`i` edges
//! with range `v` and source `w`.  For a strongly connected graph the family
//! has a common strictly positive eigenvector `x` with `A_i x = rho_i x`,
//! where `rho_i` is the spectral radius of `A_i`; all measures and weights in
//! the rest of the crate are built from `(rho_1, ..., rho_k, x)`.
//!
//! The product `A = A_1 * ... * A_k` drives the level structure of the path
//! space.  Its normalised powers `A^m / rho^m` (with `rho = rho_1...rho_k`)
//! do not converge when `A` has period `p > 1`, but each residue class
//! `m = j (mod p)` does; those `p` limit matrices are what
//! [`period_and_cesaro`] computes, and the Dixmier-trace closed forms consume
//! them directly.

use nalgebra::DMatrix;
use num_integer::Integer;
use serde::Serialize;

use crate::error::KgsError;
use crate::linalg::{max_abs, IntMat};

/// Default tolerance for the iterative eigen-computations.
pub const DEFAULT_TOL: f64 = 1e-13;
/// Default iteration cap for the iterative eigen-computations.
pub const DEFAULT_MAX_ITER: u64 = 1_000_000;

/// How much larger than `tol` the per-vertex spread of `(A_i x)_v / x_v`
/// may be before the family is rejected as having no common eigenvector.
const SPREAD_FACTOR: f64 = 1e4;

/// A finite rank-`k` graph: `k` commuting non-negative integer adjacency
/// matrices over a common vertex list.
///
/// Vertex order is the order of the `vertices` list and is preserved by
/// every operation in the crate; all reported vectors and matrices are
/// indexed accordingly.
#[derive(Debug, Clone)]
pub struct KGraph {
    vertices: Vec<String>,
    adj: Vec<IntMat>,
    adj_f64: Vec<DMatrix<f64>>,
    delta_default: Option<f64>,
}

impl KGraph {
    /// Build a graph from vertex labels and `k` row-major adjacency
    /// matrices (`adjacency[i][row][col]`).  Rejects non-square input and
    /// negative entries; semantic checks (commutation, connectivity, ...)
    /// are done by [`validate`].
    pub fn new(
        vertices: Vec<String>,
        adjacency: Vec<Vec<Vec<i64>>>,
        delta_default: Option<f64>,
    ) -> Result<Self, KgsError> {
        let n = vertices.len();
        assert!(n > 0, "vertex list must be non-empty");
        assert!(!adjacency.is_empty(), "at least one adjacency matrix required");
        let mut adj = Vec::with_capacity(adjacency.len());
        for (idx, mat) in adjacency.iter().enumerate() {
            if mat.len() != n {
                return Err(KgsError::DimensionMismatch {
                    index: idx,
                    rows: mat.len(),
                    cols: mat.first().map_or(0, |r| r.len()),
                    expected: n,
                });
            }
            let mut data = Vec::with_capacity(n * n);
            for (r, row) in mat.iter().enumerate() {
                if row.len() != n {
                    return Err(KgsError::DimensionMismatch {
                        index: idx,
                        rows: mat.len(),
                        cols: row.len(),
                        expected: n,
                    });
                }
                for (c, &v) in row.iter().enumerate() {
                    if v < 0 {
                        return Err(KgsError::NegativeEntry {
                            index: idx,
                            row: r,
                            col: c,
                            value: v,
                        });
                    }
                    data.push(v as u64);
                }
            }
            adj.push(IntMat::from_rows(n, data));
        }
        let adj_f64 = adj.iter().map(IntMat::to_f64).collect();
        Ok(KGraph {
            vertices,
            adj,
            adj_f64,
            delta_default,
        })
    }

    /// Convenience constructor for tests and examples: vertices are named
    /// `v0, v1, ...`.
    pub fn from_adjacency(adjacency: Vec<Vec<Vec<i64>>>) -> Result<Self, KgsError> {
        let n = adjacency
            .first()
            .map(|m| m.len())
            .expect("at least one matrix");
        let vertices = (0..n).map(|i| format!("v{i}")).collect();
        KGraph::new(vertices, adjacency, None)
    }

    /// Rank `k` (number of colours).
    pub fn k(&self) -> usize {
        self.adj.len()
    }

    /// Number of vertices.
    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    /// Adjacency matrix of colour `i` (1-based, matching the colour labels
    /// used throughout).
    pub fn adjacency(&self, color: usize) -> &IntMat {
        assert!(
            (1..=self.k()).contains(&color),
            "colour must lie in 1..=k"
        );
        &self.adj[color - 1]
    }

    /// Same matrix as `f64`, for spectral work.
    pub fn adjacency_f64(&self, color: usize) -> &DMatrix<f64> {
        assert!(
            (1..=self.k()).contains(&color),
            "colour must lie in 1..=k"
        );
        &self.adj_f64[color - 1]
    }

    /// Default scaling exponent attached to the graph document, if any.
    pub fn delta_default(&self) -> Option<f64> {
        self.delta_default
    }

    /// Vertex-wise sum `S = A_1 + ... + A_k`.
    fn colour_sum(&self) -> IntMat {
        let n = self.num_vertices();
        let mut data = vec![0u64; n * n];
        for m in &self.adj {
            for i in 0..n {
                for j in 0..n {
                    data[i * n + j] += m.get(i, j);
                }
            }
        }
        IntMat::from_rows(n, data)
    }

    /// Support digraph product `A = A_1 * ... * A_k` as a boolean matrix.
    fn product_support(&self) -> IntMat {
        let mut acc = IntMat::identity(self.num_vertices());
        for m in &self.adj {
            acc = acc.support_mul(m);
        }
        acc
    }

    /// Whether the support digraph of `A = A_1 * ... * A_k` is strongly
    /// connected.  The union digraph being strongly connected does not
    /// imply this; the closed-form trace functionals only coincide with
    /// the cylinder measure when it holds.
    pub(crate) fn product_irreducible(&self) -> bool {
        strong_connectivity_witness(&self.product_support()).is_none()
    }

    /// `A = A_1 * ... * A_k` in `f64`.
    pub(crate) fn product_f64(&self) -> DMatrix<f64> {
        let n = self.num_vertices();
        let mut acc = DMatrix::<f64>::identity(n, n);
        for m in &self.adj_f64 {
            acc = acc * m;
        }
        acc
    }
}

/// Outcome of a single validation check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub passed: bool,
    /// Human-readable diagnostic; names the offending matrices/entries on
    /// failure, empty on success.
    pub detail: String,
}

impl CheckOutcome {
    fn pass() -> Self {
        CheckOutcome {
            passed: true,
            detail: String::new(),
        }
    }

    fn fail(detail: String) -> Self {
        CheckOutcome {
            passed: false,
            detail,
        }
    }
}

/// Result of [`validate`]: one outcome per structural hypothesis.
///
/// * `commuting`, `source_free`, `strongly_connected` gate every
///   path/measure operation;
/// * `rho_exceeds_one` additionally gates weight construction;
/// * `diameter_hypothesis` additionally gates the operations that identify
///   cylinder weights with cylinder diameters (zeta, Dixmier, Laplacian,
///   Dirac).
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub commuting: CheckOutcome,
    pub source_free: CheckOutcome,
    pub strongly_connected: CheckOutcome,
    pub rho_exceeds_one: CheckOutcome,
    pub diameter_hypothesis: CheckOutcome,
}

impl ValidationReport {
    /// Checks required for path enumeration, Perron data, and the cylinder
    /// measure.
    pub fn structurally_valid(&self) -> bool {
        self.commuting.passed && self.source_free.passed && self.strongly_connected.passed
    }

    /// All checks, as required by the spectral-triple operations.
    pub fn admitted(&self) -> bool {
        self.structurally_valid() && self.rho_exceeds_one.passed && self.diameter_hypothesis.passed
    }
}

/// Joint Perron–Frobenius data of the commuting family, optionally extended
/// with the period and Cesàro limits of `A = A_1 * ... * A_k`.
///
/// [`perron`] fills `rho`, `x`, `iterations`, `residual` and leaves the
/// Cesàro part empty; [`period_and_cesaro`] completes it.
#[derive(Debug, Clone)]
pub struct SpectralData {
    /// Per-colour spectral radii `rho_i`, in colour order.
    pub rho: Vec<f64>,
    /// Product `rho_1 * ... * rho_k`, the spectral radius of `A`.
    pub rho_total: f64,
    /// Common Perron eigenvector, strictly positive, normalised to sum 1.
    pub x: Vec<f64>,
    /// Power-iteration steps taken.
    pub iterations: u64,
    /// Final max-norm eigen-residual `max_i ||A_i x - rho_i x||_inf`.
    pub residual: f64,
    /// Period `p` of `A`; `0` until [`period_and_cesaro`] has run.
    pub period: usize,
    /// Cesàro limits `A^{(j)} = lim_m A^{mp+j} / rho^{mp+j}`, `j = 0..p-1`;
    /// empty until [`period_and_cesaro`] has run.
    pub cesaro: Vec<DMatrix<f64>>,
}

impl SpectralData {
    /// Whether the Cesàro part has been filled in.
    pub fn has_cesaro(&self) -> bool {
        self.period > 0 && self.cesaro.len() == self.period
    }
}

/// Run the five structural checks.  Pure in the matrices: repeated calls
/// return identical reports.
pub fn validate(g: &KGraph) -> ValidationReport {
    let k = g.k();
    let n = g.num_vertices();

    // Pairwise commutation, in exact integer arithmetic.
    let mut commuting = CheckOutcome::pass();
    'outer: for i in 0..k {
        for j in (i + 1)..k {
            if let Some((r, c, ab, ba)) = g.adj[i].commutes_with(&g.adj[j]) {
                commuting = CheckOutcome::fail(format!(
                    "A_{} and A_{} differ at ({r},{c}): A_{}A_{} = {ab}, A_{}A_{} = {ba}",
                    i + 1,
                    j + 1,
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1,
                ));
                break 'outer;
            }
        }
    }

    // Source-freeness: every vertex emits at least one edge of every colour,
    // i.e. every row sum of every matrix is positive.
    let mut source_free = CheckOutcome::pass();
    'sf: for i in 0..k {
        for v in 0..n {
            if g.adj[i].row_sum(v) == 0 {
                source_free =
                    CheckOutcome::fail(format!("A_{} row {v} sums to 0", i + 1));
                break 'sf;
            }
        }
    }

    // Strong connectivity of the one-coloured union digraph.
    let s = g.colour_sum();
    let strongly_connected = match strong_connectivity_witness(&s) {
        None => CheckOutcome::pass(),
        Some((from, to)) => CheckOutcome::fail(format!(
            "vertex {from} does not reach vertex {to} in the union digraph"
        )),
    };

    // Diameter hypothesis: at least two edges of every colour out of every
    // vertex (row sums >= 2), which makes cylinder weights equal diameters.
    let mut diameter_hypothesis = CheckOutcome::pass();
    'dh: for i in 0..k {
        for v in 0..n {
            let sum = g.adj[i].row_sum(v);
            if sum < 2 {
                diameter_hypothesis = CheckOutcome::fail(format!(
                    "A_{} row {v} has sum {sum} < 2",
                    i + 1
                ));
                break 'dh;
            }
        }
    }

    // Per-colour spectral radius > 1; needs the Perron data, so it is only
    // evaluated once the prerequisites for that computation hold.
    let rho_exceeds_one = if commuting.passed && source_free.passed && strongly_connected.passed {
        match perron(g, DEFAULT_TOL, DEFAULT_MAX_ITER) {
            Ok(sd) => {
                match sd.rho.iter().position(|&r| r <= 1.0) {
                    None => CheckOutcome::pass(),
                    Some(i) => CheckOutcome::fail(format!(
                        "rho_{} = {} is not > 1",
                        i + 1,
                        sd.rho[i]
                    )),
                }
            }
            Err(e) => CheckOutcome::fail(format!("Perron data unavailable: {e}")),
        }
    } else {
        CheckOutcome::fail("not evaluated: structural checks failed".to_string())
    };

    ValidationReport {
        commuting,
        source_free,
        strongly_connected,
        rho_exceeds_one,
        diameter_hypothesis,
    }
}

/// If the support digraph of `s` is strongly connected return `None`, else
/// a witness pair `(from, to)` with no directed path `from -> to`.
fn strong_connectivity_witness(s: &IntMat) -> Option<(usize, usize)> {
    let n = s.n();
    // forward reachability from 0
    let reach_fwd = reachable(n, |u, v| s.get(u, v) > 0);
    if let Some(v) = (0..n).find(|&v| !reach_fwd[v]) {
        return Some((0, v));
    }
    // backward reachability (everything reaches 0)
    let reach_bwd = reachable(n, |u, v| s.get(v, u) > 0);
    if let Some(v) = (0..n).find(|&v| !reach_bwd[v]) {
        return Some((v, 0));
    }
    None
}

fn reachable(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if !seen[v] && edge(u, v) {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    seen
}

/// Compute the common Perron eigenvector and per-colour spectral radii by
/// power iteration on `S + I` (the identity shift keeps the iteration
/// convergent even when the union digraph is periodic; the eigenvectors are
/// unchanged).
///
/// Preconditions: the graph should pass the commutation, source-freeness and
/// strong-connectivity checks; on non-commuting input the fixed point is not
/// a joint eigenvector and [`KgsError::NotCommonEigenvector`] is returned.
pub fn perron(g: &KGraph, tol: f64, max_iter: u64) -> Result<SpectralData, KgsError> {
    let n = g.num_vertices();
    let k = g.k();
    let s = g.colour_sum().to_f64();

    let mut x = DMatrix::from_element(n, 1, 1.0 / n as f64);
    let mut iterations = 0u64;
    let mut prev_resid = f64::MAX;
    let mut within_tol = false;
    loop {
        // y = (S + I) x, normalised to sum 1
        let mut y = &s * &x + &x;
        let total: f64 = y.iter().sum();
        y /= total;
        // eigen-residual of the shifted matrix at the current iterate
        let lambda: f64 = (&s * &y + &y).iter().sum();
        let resid = {
            let r = &s * &y + &y - &y * lambda;
            max_abs(&r)
        };
        x = y;
        iterations += 1;
        within_tol = within_tol || resid <= tol * lambda.max(1.0);
        // once within tolerance, keep going while the residual still
        // improves: the radii feed long products downstream, where an
        // error of order `tol` compounds, so resolve the fixed point to
        // its roundoff floor (a few extra iterations at most)
        if within_tol && resid >= prev_resid {
            break;
        }
        if iterations >= max_iter {
            if within_tol {
                break;
            }
            return Err(KgsError::NoConvergence {
                what: "Perron power iteration".to_string(),
                iterations,
            });
        }
        prev_resid = resid;
    }

    // Per-colour radii from the fixed point; they must be constant across
    // vertices for a genuinely commuting family.
    let mut rho = Vec::with_capacity(k);
    let mut worst_resid = 0.0f64;
    for c in 1..=k {
        let ax = g.adjacency_f64(c) * &x;
        let ratios: Vec<f64> = (0..n).map(|v| ax[(v, 0)] / x[(v, 0)]).collect();
        let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
        let spread = hi - lo;
        let rho_c: f64 = ax.iter().sum(); // sum((A_c x)_v) / sum(x_v), and sum(x) = 1
        if spread > SPREAD_FACTOR * tol * rho_c.max(1.0) {
            return Err(KgsError::NotCommonEigenvector { color: c, spread });
        }
        let resid = max_abs(&(&ax - &x * rho_c));
        worst_resid = worst_resid.max(resid);
        rho.push(rho_c);
    }

    let x_vec: Vec<f64> = x.iter().cloned().collect();
    let rho_total = rho.iter().product();
    Ok(SpectralData {
        rho,
        rho_total,
        x: x_vec,
        iterations,
        residual: worst_resid,
        period: 0,
        cesaro: Vec::new(),
    })
}

/// Fill in the period `p` of `A = A_1 * ... * A_k` and the `p` Cesàro limit
/// matrices `A^{(j)} = lim_m A^{mp+j} / rho^{mp+j}`.
///
/// The period is the gcd of all directed cycle lengths in the support
/// digraph of `A` (computed per strongly connected component).  The limits
/// satisfy `A * A^{(j)} = rho * A^{(j+1 mod p)}` and every row of every
/// `A^{(j)}` has a positive entry; both facts are exercised by the tests.
pub fn period_and_cesaro(
    g: &KGraph,
    sd: SpectralData,
    tol: f64,
    max_iter: u64,
) -> Result<SpectralData, KgsError> {
    let n = g.num_vertices();
    let support = g.product_support();
    let period = digraph_period(&support).ok_or_else(|| KgsError::NotAdmitted {
        check: "source-free".to_string(),
        detail: "product digraph has no directed cycle".to_string(),
    })?;

    let a = g.product_f64();
    let rho = sd.rho_total;

    // Iterate B_m = A^m / rho^m and stop once every residue class mod p has
    // stabilised under one more full period.
    let mut history: Vec<Option<DMatrix<f64>>> = vec![None; period];
    let mut limits: Vec<Option<DMatrix<f64>>> = vec![None; period];
    let mut b = DMatrix::<f64>::identity(n, n);
    let mut m = 0u64;
    let mut residual = f64::MAX;
    loop {
        let j = (m as usize) % period;
        let done = if let Some(prev) = &history[j] {
            let diff = max_abs(&(&b - prev));
            if j == 0 || residual == f64::MAX {
                residual = diff;
            } else {
                residual = residual.max(diff);
            }
            limits[j] = Some(b.clone());
            // the residue classes are visited cyclically; a full pass with
            // small diffs means all classes are stable
            j == period - 1 && residual <= tol
        } else {
            false
        };
        history[j] = Some(b.clone());
        if done {
            break;
        }
        if m >= max_iter {
            return Err(KgsError::NoConvergence {
                what: "Cesaro limit iteration".to_string(),
                iterations: m,
            });
        }
        b = (&b * &a) / rho;
        m += 1;
    }

    let cesaro: Vec<DMatrix<f64>> = limits.into_iter().map(|l| l.unwrap()).collect();
    Ok(SpectralData {
        period,
        cesaro,
        ..sd
    })
}

/// Period (gcd of directed cycle lengths) of a boolean digraph, or `None`
/// if the digraph has no cycle at all.
fn digraph_period(support: &IntMat) -> Option<usize> {
    let n = support.n();
    // Tarjan-style SCC via iterative Kosaraju: order by finish time, then
    // sweep the transpose.
    let order = finish_order(n, |u, v| support.get(u, v) > 0);
    let mut comp = vec![usize::MAX; n];
    let mut ncomp = 0usize;
    for &u in order.iter().rev() {
        if comp[u] != usize::MAX {
            continue;
        }
        let mut stack = vec![u];
        comp[u] = ncomp;
        while let Some(w) = stack.pop() {
            for v in 0..n {
                if support.get(v, w) > 0 && comp[v] == usize::MAX {
                    comp[v] = ncomp;
                    stack.push(v);
                }
            }
        }
        ncomp += 1;
    }

    let mut overall: Option<usize> = None;
    for c in 0..ncomp {
        let members: Vec<usize> = (0..n).filter(|&v| comp[v] == c).collect();
        let has_edge = members
            .iter()
            .any(|&u| members.iter().any(|&v| support.get(u, v) > 0));
        if !has_edge {
            continue;
        }
        // BFS levels within the component; gcd of (level(u) + 1 - level(v))
        // over intra-component edges is the component period.
        let root = members[0];
        let mut level = vec![i64::MIN; n];
        level[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                if comp[v] == c && support.get(u, v) > 0 && level[v] == i64::MIN {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        let mut p: i64 = 0;
        for &u in &members {
            for &v in &members {
                if support.get(u, v) > 0 {
                    p = p.gcd(&(level[u] + 1 - level[v]));
                }
            }
        }
        let p = p.unsigned_abs() as usize;
        overall = Some(match overall {
            None => p,
            Some(q) => q.gcd(&p),
        });
    }
    overall
}

/// DFS finish order (for Kosaraju).
fn finish_order(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for start in 0..n {
        if visited[start] {
            continue;
        }
        // iterative DFS with explicit post-visit
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&(u, next)) = stack.last() {
            let mut cursor = next;
            let mut found = None;
            while cursor < n {
                let v = cursor;
                cursor += 1;
                if edge(u, v) && !visited[v] {
                    found = Some(v);
                    break;
                }
            }
            stack.last_mut().unwrap().1 = cursor;
            match found {
                Some(v) => {
                    visited[v] = true;
                    stack.push((v, 0));
                }
                None => {
                    order.push(u);
                    stack.pop();
                }
            }
        }
    }
    order
}
