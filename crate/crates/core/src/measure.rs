//! Weights, the ultrametric, and the natural measure on the path space.
//!
//! Fix a strongly connected rank-`k` graph with Perron data
//! `(rho_1, ..., rho_k, x)` and a scaling exponent `delta` in `(0, 1)`.
//! Write `scale(n) = rho^q * rho_1 ... rho_t` for a path length
//! `n = q*k + t`, where `rho = rho_1 ... rho_k`.  Then for a finite path
//! `p` of length `n` with source vertex `s(p)`:
//!
//! * the weight is `w_delta(p) = scale(n)^(-1/delta) * x_{s(p)}`, and
//!   `d(x, y) = w_delta(meet of x and y)` is an ultrametric on the infinite
//!   path space (0 for equal paths, 1 for paths with different roots);
//! * the cylinder measure is `M([p]) = scale(n)^(-1) * x_{s(p)}`, a
//!   probability measure at every depth.
//!
//! When every vertex emits at least two edges of every colour, the weight
//! of a cylinder equals its diameter in the ultrametric; operations that
//! rely on that identification call [`WeightContext::require_diameter`]
//! and refuse to run otherwise.

use crate::bratteli::{
    common_prefix, enumerate_paths_in, ColorOrder, CommonPrefix, FinitePath, LazyInfinitePath,
    DEFAULT_MAX_PATHS,
};
use crate::error::KgsError;
use crate::kgraph::{perron, period_and_cesaro, validate, KGraph, SpectralData};
use crate::kgraph::{DEFAULT_MAX_ITER, DEFAULT_TOL};

/// Everything needed to evaluate weights, distances, and measures: the
/// graph, its spectral data (Perron vector, radii, period, Cesàro limits),
/// and the scaling exponent `delta`.
#[derive(Debug, Clone)]
pub struct WeightContext {
    g: KGraph,
    sd: SpectralData,
    delta: f64,
    /// `prefix_prod[t] = rho_1 * ... * rho_t` (so `prefix_prod[0] = 1`).
    prefix_prod: Vec<f64>,
    /// Diameter-hypothesis failure witness, if any: `(matrix, row, sum)`.
    diameter_failure: Option<(usize, usize, u64)>,
}

impl WeightContext {
    /// Validate the graph, compute its spectral data, and package the
    /// context.  Fails if `delta` is outside `(0, 1)`, if a structural
    /// check (commutation, source-freeness, strong connectivity) fails, or
    /// if some colour has spectral radius `<= 1`.
    pub fn new(g: &KGraph, delta: f64) -> Result<Self, KgsError> {
        WeightContext::with_tolerances(g, delta, DEFAULT_TOL, DEFAULT_MAX_ITER)
    }

    /// As [`WeightContext::new`] with explicit iteration controls.
    pub fn with_tolerances(
        g: &KGraph,
        delta: f64,
        tol: f64,
        max_iter: u64,
    ) -> Result<Self, KgsError> {
        if !(delta > 0.0 && delta < 1.0) || !delta.is_finite() {
            return Err(KgsError::InvalidDelta { delta });
        }
        let report = validate(g);
        for (name, outcome) in [
            ("commutation", &report.commuting),
            ("source-free", &report.source_free),
            ("strong connectivity", &report.strongly_connected),
        ] {
            if !outcome.passed {
                return Err(KgsError::NotAdmitted {
                    check: name.to_string(),
                    detail: outcome.detail.clone(),
                });
            }
        }
        let sd = perron(g, tol, max_iter)?;
        let sd = period_and_cesaro(g, sd, tol, max_iter)?;
        if let Some(i) = sd.rho.iter().position(|&r| r <= 1.0) {
            return Err(KgsError::RhoNotContracting {
                color: i + 1,
                rho: sd.rho[i],
            });
        }
        let mut prefix_prod = Vec::with_capacity(g.k() + 1);
        prefix_prod.push(1.0);
        for &r in &sd.rho {
            prefix_prod.push(prefix_prod.last().unwrap() * r);
        }
        let diameter_failure = (0..g.k()).find_map(|i| {
            (0..g.num_vertices()).find_map(|v| {
                let s = g.adjacency(i + 1).row_sum(v);
                (s < 2).then_some((i + 1, v, s))
            })
        });
        Ok(WeightContext {
            g: g.clone(),
            sd,
            delta,
            prefix_prod,
            diameter_failure,
        })
    }

    pub fn graph(&self) -> &KGraph {
        &self.g
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.sd
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Whether cylinder weights are cylinder diameters for this graph.
    pub fn diameter_ok(&self) -> bool {
        self.diameter_failure.is_none()
    }

    /// Error out (with the offending matrix row) unless the diameter
    /// hypothesis holds.
    pub fn require_diameter(&self) -> Result<(), KgsError> {
        match self.diameter_failure {
            None => Ok(()),
            Some((index, row, sum)) => Err(KgsError::DiameterHypothesisFailed { index, row, sum }),
        }
    }

    /// `scale(len) = rho^q * rho_1 ... rho_t` for `len = q*k + t`.
    pub fn scale(&self, len: usize) -> f64 {
        let k = self.g.k();
        let (q, t) = (len / k, len % k);
        self.sd.rho_total.powi(q as i32) * self.prefix_prod[t]
    }

    /// `ln scale(len)`, for log-space accumulation at large depths.
    pub fn log_scale(&self, len: usize) -> f64 {
        let k = self.g.k();
        let (q, t) = (len / k, len % k);
        q as f64 * self.sd.rho_total.ln() + self.prefix_prod[t].ln()
    }

    /// Weight of a cylinder given its path length and source vertex.
    pub(crate) fn weight_of(&self, len: usize, source: usize) -> f64 {
        self.scale(len).powf(-1.0 / self.delta) * self.sd.x[source]
    }

    /// Measure of a cylinder given its path length and source vertex.
    pub(crate) fn measure_of(&self, len: usize, source: usize) -> f64 {
        self.sd.x[source] / self.scale(len)
    }

    /// Weight `w_delta(p)` of a finite path.  Strictly decreasing along
    /// extensions because every `rho_i > 1`.
    pub fn weight(&self, p: &FinitePath) -> Result<f64, KgsError> {
        p.validate_against(&self.g)?;
        Ok(self.weight_of(p.len(), p.source()))
    }

    /// Cylinder measure `M([p])`; sums to 1 over all paths of any fixed
    /// length.
    pub fn measure(&self, p: &FinitePath) -> Result<f64, KgsError> {
        p.validate_against(&self.g)?;
        Ok(self.measure_of(p.len(), p.source()))
    }

    /// Ultrametric distance between two infinite paths: the weight of
    /// their longest common initial segment (0 if equal, 1 if the roots
    /// already differ).
    pub fn distance(&self, x: &LazyInfinitePath, y: &LazyInfinitePath) -> f64 {
        match common_prefix(x, y) {
            CommonPrefix::Equal => 0.0,
            CommonPrefix::Disjoint => 1.0,
            CommonPrefix::Path(p) => self.weight_of(p.len(), p.source()),
        }
    }

    /// Diameter of the cylinder `[p]`.  Equal to the weight, but only
    /// under the diameter hypothesis; otherwise the identification fails
    /// and an error is returned.
    pub fn diam(&self, p: &FinitePath) -> Result<f64, KgsError> {
        self.require_diameter()?;
        self.weight(p)
    }
}

/// All cylinder measures at one depth, in enumeration order.
#[derive(Debug, Clone)]
pub struct CylinderMeasureTable {
    len: usize,
    paths: Vec<FinitePath>,
    measures: Vec<f64>,
}

impl CylinderMeasureTable {
    /// Tabulate `M` over every length-`len` cylinder.
    pub fn new(ctx: &WeightContext, len: usize, cap: u128) -> Result<Self, KgsError> {
        let order = ColorOrder::rainbow(ctx.g.k());
        let paths = enumerate_paths_in(&ctx.g, &order, len, None, cap)?;
        let measures = paths
            .iter()
            .map(|p| ctx.measure_of(p.len(), p.source()))
            .collect();
        Ok(CylinderMeasureTable {
            len,
            paths,
            measures,
        })
    }

    /// As [`CylinderMeasureTable::new`] with the default path cap.
    pub fn with_default_cap(ctx: &WeightContext, len: usize) -> Result<Self, KgsError> {
        CylinderMeasureTable::new(ctx, len, DEFAULT_MAX_PATHS)
    }

    pub fn path_len(&self) -> usize {
        self.len
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FinitePath, f64)> {
        self.paths.iter().zip(self.measures.iter().copied())
    }

    pub fn get(&self, p: &FinitePath) -> Option<f64> {
        self.paths
            .iter()
            .position(|q| q == p)
            .map(|i| self.measures[i])
    }

    /// Total mass at this depth; 1 up to rounding.
    pub fn total(&self) -> f64 {
        self.measures.iter().sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bratteli::{concat, enumerate_paths};
    use approx::assert_abs_diff_eq;

    fn ctx_single_vertex_2_3(delta: f64) -> WeightContext {
        let g = KGraph::from_adjacency(vec![vec![vec![2]], vec![vec![3]]]).unwrap();
        WeightContext::new(&g, delta).unwrap()
    }

    fn ctx_two_vertex_full(delta: f64) -> WeightContext {
        let g = KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 1]]]).unwrap();
        WeightContext::new(&g, delta).unwrap()
    }

    #[test]
    fn delta_bounds_are_enforced() {
        let g = KGraph::from_adjacency(vec![vec![vec![2]]]).unwrap();
        for bad in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(
                WeightContext::new(&g, bad),
                Err(KgsError::InvalidDelta { .. })
            ));
        }
    }

    #[test]
    fn non_contracting_colour_is_rejected() {
        // rho = 1: single loop
        let g = KGraph::from_adjacency(vec![vec![vec![0, 1], vec![1, 0]]]).unwrap();
        assert!(matches!(
            WeightContext::new(&g, 0.5),
            Err(KgsError::RhoNotContracting { color: 1, .. })
        ));
    }

    #[test]
    fn weights_match_hand_values() {
        let ctx = ctx_single_vertex_2_3(0.5);
        let p1 = enumerate_paths(ctx.graph(), 1, None).unwrap().remove(0);
        let p2 = enumerate_paths(ctx.graph(), 2, None).unwrap().remove(0);
        let p3 = enumerate_paths(ctx.graph(), 3, None).unwrap().remove(0);
        // length 1: scale = rho_1 = 2, w = 2^{-2} = 1/4
        assert_abs_diff_eq!(ctx.weight(&p1).unwrap(), 0.25, epsilon = 1e-12);
        // length 2: scale = 6, w = 6^{-2} = 1/36
        assert_abs_diff_eq!(ctx.weight(&p2).unwrap(), 1.0 / 36.0, epsilon = 1e-12);
        // length 3: scale = 12, M = 1/12
        assert_abs_diff_eq!(ctx.measure(&p3).unwrap(), 1.0 / 12.0, epsilon = 1e-12);
        // delta enters the weight but not the measure
        let ctx8 = ctx_single_vertex_2_3(0.8);
        assert_abs_diff_eq!(ctx8.measure(&p3).unwrap(), 1.0 / 12.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            ctx8.weight(&p1).unwrap(),
            2f64.powf(-1.0 / 0.8),
            epsilon = 1e-12
        );
    }

    #[test]
    fn vertex_weight_is_perron_entry() {
        let ctx = ctx_two_vertex_full(0.5);
        let v = FinitePath::vertex(0);
        assert_abs_diff_eq!(ctx.weight(&v).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(ctx.diam(&v).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn measures_are_probabilities_at_every_depth() {
        for delta in [0.3, 0.7] {
            let ctx = ctx_single_vertex_2_3(delta);
            for len in 0..=6 {
                let table = CylinderMeasureTable::with_default_cap(&ctx, len).unwrap();
                assert_abs_diff_eq!(table.total(), 1.0, epsilon = 1e-12);
            }
        }
        let ctx = ctx_two_vertex_full(0.4);
        for len in 0..=8 {
            let table = CylinderMeasureTable::with_default_cap(&ctx, len).unwrap();
            assert_abs_diff_eq!(table.total(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn measure_scales_by_full_periods() {
        // M([lambda eta]) = rho^{-(|lambda|/k)} M([eta]) when |lambda| is a
        // multiple of k
        let ctx = ctx_single_vertex_2_3(0.5);
        let g = ctx.graph();
        let lambda = enumerate_paths(g, 2, None).unwrap().remove(3);
        let eta = enumerate_paths(g, 3, None).unwrap().remove(7);
        let joined = concat(g, &lambda, &eta).unwrap();
        let lhs = ctx.measure(&joined).unwrap();
        let rhs = ctx.measure(&eta).unwrap() / ctx.spectral().rho_total;
        assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-15);
    }

    #[test]
    fn distance_reflects_meet_depth() {
        let ctx = ctx_single_vertex_2_3(0.5);
        let g = ctx.graph();
        // two paths agreeing for exactly one level, then diverging forever
        let shared = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 0)]).unwrap();
        let other = FinitePath::new(0, vec![(0, 0, 0), (0, 0, 1)]).unwrap();
        let x = LazyInfinitePath::new(g, FinitePath::vertex(0), shared).unwrap();
        let y = LazyInfinitePath::new(g, FinitePath::vertex(0), other).unwrap();
        // meet = first edge only: w = (rho_1)^{-1/delta} = 2^{-2} = 0.25
        assert_abs_diff_eq!(ctx.distance(&x, &y), 0.25, epsilon = 1e-12);
        assert_eq!(ctx.distance(&x, &x), 0.0);
    }

    #[test]
    fn diam_requires_thick_rows() {
        // A_1 row sums are 2 but one row of A_2 has a single edge
        let g = KGraph::from_adjacency(vec![
            vec![vec![2, 0], vec![0, 2]],
            vec![vec![1, 1], vec![1, 1]],
        ])
        .unwrap();
        // swap colours so the thin matrix is colour 1
        let ctx = WeightContext::new(&g, 0.5).unwrap();
        assert!(ctx.diameter_ok());

        let g2 = KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 1]], vec![vec![2, 0], vec![0, 2]]])
            .unwrap();
        let ctx2 = WeightContext::new(&g2, 0.5).unwrap();
        assert!(ctx2.diameter_ok());

        let thin = KGraph::from_adjacency(vec![vec![vec![1, 1], vec![1, 0]]]).unwrap();
        let ctx3 = WeightContext::new(&thin, 0.5);
        // rho of [[1,1],[1,0]] is the golden ratio > 1, so the context
        // builds; diam must still refuse
        let ctx3 = ctx3.unwrap();
        assert!(!ctx3.diameter_ok());
        let v = FinitePath::vertex(0);
        assert!(matches!(
            ctx3.diam(&v),
            Err(KgsError::DiameterHypothesisFailed { index: 1, row: 1, sum: 1 })
        ));
        // weight and measure still work
        assert!(ctx3.weight(&v).is_ok());
        assert!(ctx3.measure(&v).is_ok());
    }
}
