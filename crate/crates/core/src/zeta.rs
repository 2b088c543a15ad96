//! Zeta function of the weighted path space, Dixmier-trace functionals,
//! and Hausdorff dimension estimates.
//!
//! The zeta function attached to the weight `w_delta` is
//! `zeta(s) = sum over all finite paths p of w_delta(p)^s`.  Grouping by
//! path length `n` turns each level into a matrix-power expression: with
//! `P_n` the ordered product of the level matrices, the level-`n` term is
//! `(1^T P_n x_s) * scale(n)^(-s/delta)` where `x_s = (x_b^s)_b`.  Level
//! sums therefore behave like `rho^{q(1 - s/delta)}` up to the periodic
//! structure of `A = A_1 ... A_k`, which gives everything in this module:
//!
//! * the series converges iff `s > delta` (the abscissa of convergence is
//!   the scaling exponent itself), detected by per-period block-sum ratios;
//! * the Dixmier-type limit `N_p(s) / zeta(s)` as `s -> delta+` defines a
//!   measure on cylinders with a closed form in terms of the Cesàro limit
//!   matrices `A^{(j)}`, computable without any series at all;
//! * covering the space by all cylinders of a fixed square depth bounds the
//!   Hausdorff measure in dimension `s`, and the decay/growth switch of
//!   those cover sums pins the Hausdorff dimension at `delta`.
//!
//! All level sums are accumulated in log space so that classification stays
//! meaningful far past the range where the raw sums overflow.

use nalgebra::{DMatrix, DVector, RowDVector};

use crate::bratteli::{color_of_level, FinitePath};
use crate::error::KgsError;
use crate::measure::WeightContext;

/// Verdict on the partial sums of a series at the probe depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeriesClass {
    /// Per-period block sums decay geometrically; a tail bound is available.
    Converged,
    /// Block sums are bounded away from zero (or grow).
    Diverged,
    /// Not enough depth, or the ratios straddle the threshold.
    Undecided,
}

impl std::fmt::Display for SeriesClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            SeriesClass::Converged => "converged",
            SeriesClass::Diverged => "diverged",
            SeriesClass::Undecided => "undecided",
        };
        f.write_str(name)
    }
}

/// A per-period block ratio below this is read as geometric decay; at or
/// above it, as non-decay.  The misclassification band around the abscissa
/// this induces is far narrower than the advertised estimate tolerances.
const RATIO_THRESHOLD: f64 = 0.999;

/// Number of trailing block-sum ratios that must agree for a verdict.
const RATIOS_REQUIRED: usize = 10;

/// One zeta evaluation at a fixed exponent.
#[derive(Debug, Clone)]
pub struct ZetaEvaluation {
    pub s: f64,
    pub delta: f64,
    /// Largest path length included.
    pub depth: usize,
    /// Level sums for lengths `0..=depth` (may overflow to infinity at
    /// extreme depths; classification works from logs and is unaffected).
    pub level_sums: Vec<f64>,
    /// Sum of the level sums.
    pub partial_sum: f64,
    pub class: SeriesClass,
    /// Largest trailing per-period block ratio, when a verdict was reached.
    pub geometric_ratio: Option<f64>,
    /// `B * r / (1 - r)` bound on the discarded tail, when converged.
    pub tail_bound: Option<f64>,
}

/// How a Dixmier-trace value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DixmierRoute {
    /// Cesàro-limit closed form, no series truncation at all.
    Closed,
    /// Ratio probes `s_j -> delta+` with Richardson extrapolation.
    Numeric,
}

/// A Dixmier-trace cylinder value, with provenance and notes.
#[derive(Debug, Clone)]
pub struct DixmierResult {
    pub gamma: FinitePath,
    pub value: f64,
    pub route: DixmierRoute,
    /// `(s_j, N_gamma(s_j) / zeta(s_j))` probe pairs (numeric route only).
    pub probes: Vec<(f64, f64)>,
    pub diagnostics: Vec<String>,
}

/// Log of the weighted level sums
/// `T_n = sum_{paths of length n extending the start} w_delta(path)^s`
/// for `n = n0 ..= depth`.
///
/// `start = Some(v)` walks extensions of a fixed path ending at vertex `v`
/// at level `n0` (the values are then relative to that path's own scale
/// factor, which is exactly what the ratio functionals need); `start = None`
/// with `n0 = 0` walks all paths.  The row vector is renormalised by the
/// per-colour radius at every level, so the walk never overflows.
fn level_log_values(
    ctx: &WeightContext,
    s: f64,
    n0: usize,
    start: Option<usize>,
    depth: usize,
) -> Vec<f64> {
    let g = ctx.graph();
    let nv = g.num_vertices();
    let sd = ctx.spectral();
    let xs = DVector::from_iterator(nv, sd.x.iter().map(|&x| x.powf(s)));
    let mut u = RowDVector::from_fn(nv, |_, j| match start {
        Some(v) => {
            if j == v {
                1.0
            } else {
                0.0
            }
        }
        None => 1.0,
    });
    let one_minus = 1.0 - s / ctx.delta();
    let base = ctx.log_scale(n0);
    let mut out = Vec::with_capacity(depth + 1 - n0);
    for lvl in n0..=depth {
        if lvl > n0 {
            let c = color_of_level(g.k(), lvl);
            u = (&u * g.adjacency_f64(c)) / sd.rho[c - 1];
        }
        let dot = (&u * &xs)[(0, 0)];
        out.push(dot.ln() + one_minus * ctx.log_scale(lvl) - base);
    }
    out
}

/// Log-sum-exp over a slice.
fn log_sum_exp(logs: &[f64]) -> f64 {
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    m + logs.iter().map(|&l| (l - m).exp()).sum::<f64>().ln()
}

/// Classify a series from the logs of its level terms, using per-period
/// block sums: `RATIOS_REQUIRED` consecutive trailing block ratios all
/// below [`RATIO_THRESHOLD`] mean convergence, all at-or-above it mean
/// divergence, anything else is undecided.
fn classify_blocks(level_logs: &[f64], block_len: usize) -> (SeriesClass, Option<f64>, Option<f64>) {
    let blocks: Vec<f64> = level_logs
        .chunks_exact(block_len)
        .map(log_sum_exp)
        .collect();
    if blocks.len() < RATIOS_REQUIRED + 1 {
        return (SeriesClass::Undecided, None, None);
    }
    let tail = &blocks[blocks.len() - (RATIOS_REQUIRED + 1)..];
    let ratios: Vec<f64> = tail.windows(2).map(|w| (w[1] - w[0]).exp()).collect();
    if ratios.iter().any(|r| !r.is_finite()) {
        return (SeriesClass::Undecided, None, None);
    }
    let max_ratio = ratios.iter().cloned().fold(0.0f64, f64::max);
    if max_ratio < RATIO_THRESHOLD {
        let last_block = tail[tail.len() - 1].exp();
        let bound = last_block * max_ratio / (1.0 - max_ratio);
        (SeriesClass::Converged, Some(max_ratio), Some(bound))
    } else if ratios.iter().all(|&r| r >= RATIO_THRESHOLD) {
        (SeriesClass::Diverged, Some(max_ratio), None)
    } else {
        (SeriesClass::Undecided, Some(max_ratio), None)
    }
}

/// Evaluate the zeta partial sum at exponent `s` over all path lengths
/// `0..=depth`, with the block-ratio classification of the design above.
pub fn zeta_eval(ctx: &WeightContext, s: f64, depth: usize) -> Result<ZetaEvaluation, KgsError> {
    ctx.require_diameter()?;
    let logs = level_log_values(ctx, s, 0, None, depth);
    let level_sums: Vec<f64> = logs.iter().map(|&l| l.exp()).collect();
    let partial_sum = level_sums.iter().sum();
    let block_len = ctx.graph().k() * ctx.spectral().period.max(1);
    let (class, geometric_ratio, tail_bound) = classify_blocks(&logs, block_len);
    Ok(ZetaEvaluation {
        s,
        delta: ctx.delta(),
        depth,
        level_sums,
        partial_sum,
        class,
        geometric_ratio,
        tail_bound,
    })
}

/// Depth (in levels) used by one classification probe: enough levels for a
/// comfortable run of full period blocks.
fn probe_depth(ctx: &WeightContext) -> usize {
    let block_len = ctx.graph().k() * ctx.spectral().period.max(1);
    block_len * (RATIOS_REQUIRED + 30)
}

fn classify_at(ctx: &WeightContext, s: f64) -> SeriesClass {
    let depth = probe_depth(ctx);
    let logs = level_log_values(ctx, s, 0, None, depth);
    let block_len = ctx.graph().k() * ctx.spectral().period.max(1);
    classify_blocks(&logs, block_len).0
}

/// Estimate the abscissa of convergence of the zeta function by bisecting
/// the converged/diverged boundary.  The result should match the scaling
/// exponent `delta` to within `tol`; an `Undecided` classification at any
/// probe aborts with an error rather than guessing.
pub fn abscissa_estimate(ctx: &WeightContext, tol: f64) -> Result<f64, KgsError> {
    ctx.require_diameter()?;
    assert!(tol > 0.0, "tolerance must be positive");
    let mut lo = ctx.delta() / 2.0;
    let mut hi = 1.5f64;
    match classify_at(ctx, lo) {
        SeriesClass::Diverged => {}
        c => {
            return Err(KgsError::Undecided {
                what: format!("zeta at s = {lo} classified {c}, expected divergence"),
            })
        }
    }
    match classify_at(ctx, hi) {
        SeriesClass::Converged => {}
        c => {
            return Err(KgsError::Undecided {
                what: format!("zeta at s = {hi} classified {c}, expected convergence"),
            })
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        match classify_at(ctx, mid) {
            SeriesClass::Converged => hi = mid,
            SeriesClass::Diverged => lo = mid,
            SeriesClass::Undecided => {
                return Err(KgsError::Undecided {
                    what: format!("zeta classification ambiguous at s = {mid}"),
                })
            }
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Closed-form Dixmier-trace measure of the cylinder `[gamma]`.
///
/// Writing `|gamma| = q0*k + t0`, the value is assembled from the vector
/// `Y_a = sum_t (rho_1...rho_t)^{-1} [C G_t x_delta]_a` with
/// `C = sum_j A^{(j)}`, `G_t = A_1...A_t`, `x_delta = (x_b^delta)_b`:
///
/// * `t0 = 0`:  `rho^{-q0} * Y_{s(gamma)} / Y_total`;
/// * `t0 > 0`:  `(A_{t0+1}...A_k Y)_{s(gamma)} / (rho^{q0+1} * Y_total)`.
///
/// No series truncation is involved.  When `A = A_1...A_k` is irreducible
/// this measure equals the cylinder measure `M` and does not depend on
/// `delta`; when `A` is reducible the value is still computed but a
/// diagnostic notes that the identification with `M` is not guaranteed.
pub fn dixmier_closed(ctx: &WeightContext, gamma: &FinitePath) -> Result<DixmierResult, KgsError> {
    ctx.require_diameter()?;
    let g = ctx.graph();
    gamma.validate_against(g)?;
    let sd = ctx.spectral();
    debug_assert!(sd.has_cesaro(), "context always carries Cesàro data");
    let nv = g.num_vertices();
    let k = g.k();
    let delta = ctx.delta();

    let mut c_sum = DMatrix::<f64>::zeros(nv, nv);
    for m in &sd.cesaro {
        c_sum += m;
    }
    let x_delta = DVector::from_iterator(nv, sd.x.iter().map(|&x| x.powf(delta)));

    // Y = sum_t (rho_1..rho_t)^{-1} C * (A_1..A_t) * x_delta
    let mut y = DVector::<f64>::zeros(nv);
    let mut g_t_x = x_delta.clone();
    let mut rho_prefix = 1.0;
    for t in 0..k {
        if t > 0 {
            g_t_x = g.adjacency_f64(t) * &g_t_x;
            rho_prefix *= sd.rho[t - 1];
        }
        y += &c_sum * &g_t_x / rho_prefix;
    }
    let y_total: f64 = y.iter().sum();

    let (q0, t0) = (gamma.len() / k, gamma.len() % k);
    let v = gamma.source();
    let value = if t0 == 0 {
        sd.rho_total.powi(-(q0 as i32)) * y[v] / y_total
    } else {
        // H = A_{t0+1} ... A_k applied to Y
        let mut h_y = y.clone();
        for c in ((t0 + 1)..=k).rev() {
            h_y = g.adjacency_f64(c) * &h_y;
        }
        h_y[v] / (sd.rho_total.powi(q0 as i32 + 1) * y_total)
    };

    let mut diagnostics = Vec::new();
    if !g.product_irreducible() {
        diagnostics.push(
            "product matrix A_1...A_k is reducible: closed-form value reported, \
             but its identification with the cylinder measure is not guaranteed"
                .to_string(),
        );
    }
    Ok(DixmierResult {
        gamma: gamma.clone(),
        value,
        route: DixmierRoute::Closed,
        probes: Vec::new(),
        diagnostics,
    })
}

/// Numeric Dixmier-trace measure of `[gamma]`: evaluate
/// `N_gamma(s) / zeta(s)` at probes `s_j = delta * (1 + 2^{-j})`,
/// `j = 1..=steps`, truncating both series at the same level depth, then
/// Richardson-extrapolate the last two probes.  Errors with `Undecided`
/// if the probe sequence is not Cauchy at `1e-4` by the end.
pub fn dixmier_numeric(
    ctx: &WeightContext,
    gamma: &FinitePath,
    steps: usize,
    depth: usize,
) -> Result<DixmierResult, KgsError> {
    ctx.require_diameter()?;
    let g = ctx.graph();
    gamma.validate_against(g)?;
    assert!(steps >= 2, "need at least two probes to extrapolate");
    if depth <= gamma.len() {
        return Err(KgsError::BadPath {
            reason: format!(
                "truncation depth {depth} does not exceed the cylinder length {}",
                gamma.len()
            ),
        });
    }
    let delta = ctx.delta();

    let mut probes = Vec::with_capacity(steps);
    for j in 1..=steps {
        let s = delta * (1.0 + 0.5f64.powi(j as i32));
        // numerator: every path extending gamma, i.e. a walk started from
        // gamma's source at gamma's own level; denominator: all paths.
        // Both truncate at the same absolute level.
        let num_logs = level_log_values(ctx, s, gamma.len(), Some(gamma.source()), depth);
        let den_logs = level_log_values(ctx, s, 0, None, depth);
        let ratio = (log_sum_exp(&num_logs) - log_sum_exp(&den_logs)).exp();
        probes.push((s, ratio));
    }

    let r_last = probes[probes.len() - 1].1;
    let r_prev = probes[probes.len() - 2].1;
    let gap = (r_last - r_prev).abs();
    if !(gap <= 1e-4) {
        return Err(KgsError::Undecided {
            what: format!(
                "Dixmier probe sequence not Cauchy: last gap {gap:e} exceeds 1e-4"
            ),
        });
    }
    let value = 2.0 * r_last - r_prev;
    Ok(DixmierResult {
        gamma: gamma.clone(),
        value,
        route: DixmierRoute::Numeric,
        probes,
        diagnostics: Vec::new(),
    })
}

/// Cover sum `sum over |p| = q*k of w_delta(p)^s`, by matrix powers.
pub fn hausdorff_sum(ctx: &WeightContext, q: usize, s: f64) -> Result<f64, KgsError> {
    ctx.require_diameter()?;
    let depth = q * ctx.graph().k();
    let logs = level_log_values(ctx, s, 0, None, depth);
    Ok(logs[depth].exp())
}

/// Estimate the Hausdorff dimension of the path space by bisecting the
/// exponent at which the square-depth cover sums switch from growth to
/// decay.  The result should match `delta` to within `tol`.
pub fn hausdorff_dim_estimate(ctx: &WeightContext, tol: f64) -> Result<f64, KgsError> {
    ctx.require_diameter()?;
    assert!(tol > 0.0, "tolerance must be positive");
    let k = ctx.graph().k();
    let p = ctx.spectral().period.max(1);
    let q_max = p * (RATIOS_REQUIRED + 20);

    // stride ratios H(q + p) / H(q) decay below the threshold iff s is on
    // the > delta side
    let decays = |s: f64| -> bool {
        let logs = level_log_values(ctx, s, 0, None, q_max * k);
        let h: Vec<f64> = (0..=q_max).map(|q| logs[q * k]).collect();
        let start = h.len() - 1 - p * RATIOS_REQUIRED;
        let mut max_ratio = 0.0f64;
        for i in 0..RATIOS_REQUIRED {
            let a = h[start + i * p];
            let b = h[start + (i + 1) * p];
            max_ratio = max_ratio.max((b - a).exp());
        }
        max_ratio < RATIO_THRESHOLD
    };

    let mut lo = ctx.delta() / 2.0;
    let mut hi = 1.5f64;
    if decays(lo) {
        return Err(KgsError::Undecided {
            what: format!("cover sums already decay at s = {lo}"),
        });
    }
    let mut grow_guard = 0;
    while !decays(hi) {
        hi *= 2.0;
        grow_guard += 1;
        if grow_guard > 8 {
            return Err(KgsError::Undecided {
                what: "cover sums do not decay even at very large exponents".to_string(),
            });
        }
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if decays(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::enumerate_paths;
    use crate::kgraph::KGraph;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn rank_one_doubling() -> KGraph {
        KGraph::from_adjacency(vec![vec![vec![2]]]).unwrap()
    }

    fn rank_two_single_vertex() -> KGraph {
        KGraph::from_adjacency(vec![vec![vec![2]], vec![vec![3]]]).unwrap()
    }

    fn rank_one_two_vertices() -> KGraph {
        KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 1]]]).unwrap()
    }

    fn rank_two_two_vertices() -> KGraph {
        KGraph::from_adjacency(vec![
            vec![vec![1, 1], vec![1, 1]],
            vec![vec![2, 0], vec![0, 2]],
        ])
        .unwrap()
    }

    #[test]
    fn zeta_matches_closed_form_rank_one() {
        // level sums are 2^n * (2^{-n/delta})^s = 2^{-n} here, so the full
        // series is the plain geometric sum 2
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let z = zeta_eval(&ctx, 1.0, 60).unwrap();
        assert_relative_eq!(z.partial_sum, 2.0, max_relative = 1e-12);
        assert_eq!(z.class, SeriesClass::Converged);
        assert_relative_eq!(z.geometric_ratio.unwrap(), 0.5, max_relative = 1e-9);
        assert!(z.tail_bound.unwrap() < 1e-12);
    }

    #[test]
    fn zeta_matches_closed_form_rank_two() {
        // levels pair up as 6^{-q} and 6^{-q}/2, summing to (3/2)/(5/6)
        let ctx = WeightContext::new(&rank_two_single_vertex(), 0.5).unwrap();
        let z = zeta_eval(&ctx, 1.0, 80).unwrap();
        assert_relative_eq!(z.partial_sum, 1.8, max_relative = 1e-12);
        assert_eq!(z.class, SeriesClass::Converged);
    }

    #[test]
    fn zeta_levels_match_brute_force_enumeration() {
        let g = rank_two_two_vertices();
        let ctx = WeightContext::new(&g, 0.7).unwrap();
        let s = 0.9;
        let z = zeta_eval(&ctx, s, 5).unwrap();
        for n in 0..=5 {
            let brute: f64 = enumerate_paths(&g, n, None)
                .unwrap()
                .iter()
                .map(|p| ctx.weight(p).unwrap().powf(s))
                .sum();
            assert_relative_eq!(z.level_sums[n], brute, max_relative = 1e-10);
        }
    }

    #[test]
    fn zeta_diverges_at_and_below_the_exponent() {
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let at = zeta_eval(&ctx, 0.5, 60).unwrap();
        assert_eq!(at.class, SeriesClass::Diverged);
        // every level term is exactly 1 on the boundary
        assert_abs_diff_eq!(at.partial_sum, 61.0);
        let below = zeta_eval(&ctx, 0.3, 60).unwrap();
        assert_eq!(below.class, SeriesClass::Diverged);
    }

    #[test]
    fn abscissa_estimate_recovers_exponent() {
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let est = abscissa_estimate(&ctx, 0.01).unwrap();
        assert!((est - 0.5).abs() <= 0.01, "estimate {est} not near 0.5");

        let ctx = WeightContext::new(&rank_two_two_vertices(), 0.8).unwrap();
        let est = abscissa_estimate(&ctx, 0.01).unwrap();
        assert!((est - 0.8).abs() <= 0.01, "estimate {est} not near 0.8");
    }

    #[test]
    fn hausdorff_cover_sums_exactly_one_at_critical_exponent() {
        // all exponents vanish identically, so the sums are bit-exact ones
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        for q in 0..=20 {
            assert_eq!(hausdorff_sum(&ctx, q, 0.5).unwrap(), 1.0);
        }
    }

    #[test]
    fn hausdorff_dim_estimate_recovers_exponent() {
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let est = hausdorff_dim_estimate(&ctx, 0.02).unwrap();
        assert!((est - 0.5).abs() <= 0.02, "estimate {est} not near 0.5");

        let ctx = WeightContext::new(&rank_two_two_vertices(), 0.8).unwrap();
        let est = hausdorff_dim_estimate(&ctx, 0.02).unwrap();
        assert!((est - 0.8).abs() <= 0.02, "estimate {est} not near 0.8");
    }

    #[test]
    fn dixmier_closed_matches_hand_computed_values() {
        // doubling graph, square cylinder of length 2: 2^{-2} * 1 = 1/4
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let gamma = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 1)]).unwrap();
        let r = dixmier_closed(&ctx, &gamma).unwrap();
        assert_relative_eq!(r.value, 0.25, max_relative = 1e-12);
        assert_eq!(r.route, DixmierRoute::Closed);
        assert!(r.probes.is_empty());
        assert!(r.diagnostics.is_empty());

        // rank two, one vertex: length 1 has 2 cylinders of mass 1/2 each,
        // length 2 has 6 cylinders of mass 1/6 each
        let ctx = WeightContext::new(&rank_two_single_vertex(), 0.5).unwrap();
        let len1 = FinitePath::new(0, vec![(0, 0, 1)]).unwrap();
        assert_relative_eq!(
            dixmier_closed(&ctx, &len1).unwrap().value,
            0.5,
            max_relative = 1e-12
        );
        let len2 = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 2)]).unwrap();
        assert_relative_eq!(
            dixmier_closed(&ctx, &len2).unwrap().value,
            1.0 / 6.0,
            max_relative = 1e-12
        );

        // two vertices, all row sums 2: vertex cylinders have mass 1/2,
        // edge cylinders 1/4, independently of the chosen exponent
        let ctx = WeightContext::new(&rank_one_two_vertices(), 0.6).unwrap();
        let vertex = FinitePath::vertex(0);
        assert_relative_eq!(
            dixmier_closed(&ctx, &vertex).unwrap().value,
            0.5,
            max_relative = 1e-12
        );
        let edge = FinitePath::new(0, vec![(0, 1, 0)]).unwrap();
        assert_relative_eq!(
            dixmier_closed(&ctx, &edge).unwrap().value,
            0.25,
            max_relative = 1e-12
        );
    }

    #[test]
    fn dixmier_closed_agrees_with_cylinder_measure_any_exponent() {
        let g = rank_two_two_vertices();
        let mut per_delta: Vec<Vec<f64>> = Vec::new();
        for delta in [0.4, 0.85] {
            let ctx = WeightContext::new(&g, delta).unwrap();
            let mut values = Vec::new();
            for p in enumerate_paths(&g, 3, None).unwrap() {
                let r = dixmier_closed(&ctx, &p).unwrap();
                assert!(r.diagnostics.is_empty());
                assert_abs_diff_eq!(r.value, ctx.measure(&p).unwrap(), epsilon = 1e-12);
                values.push(r.value);
            }
            per_delta.push(values);
        }
        for (a, b) in per_delta[0].iter().zip(&per_delta[1]) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn dixmier_closed_notes_reducible_product() {
        // colour matrices commute and the union digraph is strongly
        // connected, but the product is diagonal, hence reducible
        let g = KGraph::from_adjacency(vec![
            vec![vec![0, 2], vec![2, 0]],
            vec![vec![0, 3], vec![3, 0]],
        ])
        .unwrap();
        let ctx = WeightContext::new(&g, 0.5).unwrap();
        let r = dixmier_closed(&ctx, &FinitePath::vertex(0)).unwrap();
        assert!(r.value.is_finite());
        assert_eq!(r.diagnostics.len(), 1);
        assert!(r.diagnostics[0].contains("reducible"));
    }

    #[test]
    fn dixmier_numeric_agrees_with_closed_form() {
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let gamma = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 1)]).unwrap();
        let numeric = dixmier_numeric(&ctx, &gamma, 12, 20_000).unwrap();
        assert_eq!(numeric.route, DixmierRoute::Numeric);
        assert_eq!(numeric.probes.len(), 12);
        assert!((numeric.value - 0.25).abs() <= 1e-3);

        let g = rank_two_two_vertices();
        let ctx = WeightContext::new(&g, 0.8).unwrap();
        let gamma = FinitePath::new(0, vec![(0, 1, 0)]).unwrap();
        let closed = dixmier_closed(&ctx, &gamma).unwrap().value;
        let numeric = dixmier_numeric(&ctx, &gamma, 12, 20_000).unwrap();
        assert!(
            (numeric.value - closed).abs() <= 1e-3,
            "numeric {} vs closed {closed}",
            numeric.value
        );
    }

    #[test]
    fn dixmier_numeric_rejects_bad_inputs() {
        let ctx = WeightContext::new(&rank_one_doubling(), 0.5).unwrap();
        let gamma = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 1)]).unwrap();
        let err = dixmier_numeric(&ctx, &gamma, 12, 2).unwrap_err();
        assert!(matches!(err, KgsError::BadPath { .. }));
        // two far-from-critical probes differ by much more than the gate
        let err = dixmier_numeric(&ctx, &gamma, 2, 2_000).unwrap_err();
        assert!(matches!(err, KgsError::Undecided { .. }));
    }

    #[test]
    fn series_operations_require_diameter_hypothesis() {
        // one row sum is 1, so vertex weights need not dominate cylinders
        let g = KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 0]]]).unwrap();
        let ctx = WeightContext::new(&g, 0.5).unwrap();
        let gamma = FinitePath::vertex(0);
        assert!(matches!(
            zeta_eval(&ctx, 1.0, 10),
            Err(KgsError::DiameterHypothesisFailed { .. })
        ));
        assert!(matches!(
            hausdorff_sum(&ctx, 3, 0.5),
            Err(KgsError::DiameterHypothesisFailed { .. })
        ));
        assert!(matches!(
            dixmier_closed(&ctx, &gamma),
            Err(KgsError::DiameterHypothesisFailed { .. })
        ));
    }
}
