//! A Dirac-type operator built from the conditional expectations onto the
//! coarse-cylinder subspaces, plus finite-depth matrix models for the
//! generator relations and commutator norms.
//!
//! Writing `Ξ_q` for the orthogonal projection onto `V_q` (functions
//! constant on full-period cylinders of depth `q`), the operator is the
//! telescoping sum `D = Σ_{q>=1} α_q (Ξ_q - Ξ_{q-1})` for a positive,
//! strictly increasing eigenvalue sequence `α`.  On `V_0` it acts as zero
//! and on the wavelet layer `W_{q-1} = V_q ∩ V_{q-1}^⊥` as multiplication
//! by `α_q`, so its spectrum and multiplicities are read off from the
//! layer dimensions.  Restricted to any `V_Q` the tail of the sum drops
//! out, which makes the finite matrix model exact rather than a
//! truncation.
//!
//! All matrices here are expressed in measure-orthonormal coordinates
//! (cylinder indicators divided by the square roots of their measures), so
//! operator norms and angles are the honest Hilbert-space ones.  The
//! module provides the operator itself, a spectral report against the
//! wavelet layers, residuals for the four generator relations of the
//! path-space algebra, and `‖[D, S_λ S_μ*]‖` for prefix shifts.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bratteli::{ColorOrder, FinitePath};
use crate::error::KgsError;
use crate::harmonic::{
    apply_s, apply_s_star, m_span, rainbow_table, scale_chain, wavelet_basis, StepFunction,
};
use crate::linalg::{jacobi_eigen, max_principal_angle};
use crate::measure::WeightContext;

/// Absolute gap below which two computed eigenvalues are treated as the
/// same spectral point when clustering multiplicities.
const CLUSTER_TOL: f64 = 1e-6;

/// Eigenvalue scale sequence `α_1, α_2, ...` for the Dirac-type operator.
///
/// The sequence must be positive and strictly increasing; the growth rate
/// decides which prefix shifts get bounded commutators (linear growth is
/// the standard choice).
#[derive(Debug, Clone, PartialEq)]
pub enum AlphaSequence {
    /// `α_q = offset + q`; the offset must exceed `-1` so that `α_1 > 0`.
    Linear { offset: f64 },
    /// Explicit values `α_1, α_2, ...` in order.
    Custom(Vec<f64>),
}

impl AlphaSequence {
    /// The default linear sequence `α_q = q`.
    pub fn linear(offset: f64) -> AlphaSequence {
        AlphaSequence::Linear { offset }
    }

    /// The first `need` values, validated to be positive and strictly
    /// increasing.
    pub fn values(&self, need: usize) -> Result<Vec<f64>, KgsError> {
        match self {
            AlphaSequence::Linear { offset } => {
                if !(*offset > -1.0) || !offset.is_finite() {
                    return Err(KgsError::AlphaNotMonotone { index: 0 });
                }
                Ok((1..=need).map(|q| offset + q as f64).collect())
            }
            AlphaSequence::Custom(v) => {
                if v.len() < need {
                    return Err(KgsError::AlphaTooShort {
                        have: v.len(),
                        need,
                    });
                }
                let vals = v[..need].to_vec();
                for (i, &a) in vals.iter().enumerate() {
                    let prev = if i == 0 { 0.0 } else { vals[i - 1] };
                    if !(a > prev) || !a.is_finite() {
                        return Err(KgsError::AlphaNotMonotone { index: i });
                    }
                }
                Ok(vals)
            }
        }
    }
}

/// Cylinder measures at the given length, in path-enumeration order.
fn measures_at(ctx: &WeightContext, levels: usize) -> Result<Vec<f64>, KgsError> {
    let order = ColorOrder::rainbow(ctx.graph().k());
    let table = rainbow_table(ctx, levels)?;
    let chain = scale_chain(ctx, &order, levels);
    let x = &ctx.spectral().x;
    Ok(table
        .paths()
        .iter()
        .map(|p| x[p.source()] / chain[levels])
        .collect())
}

/// Conditional expectation `Ξ_q`: the orthogonal projection onto the
/// functions constant on full-period cylinders of depth `q`, returned at
/// cylinder length `q*k`.  Each output coefficient is the measure-weighted
/// average of the input over the corresponding cylinder.
pub fn project_r(
    ctx: &WeightContext,
    q: usize,
    f: &StepFunction,
) -> Result<StepFunction, KgsError> {
    let k = ctx.graph().k();
    let target = q * k;
    if f.levels() <= target {
        return f.refine(ctx, target);
    }
    let coarse = rainbow_table(ctx, target)?;
    let fine = rainbow_table(ctx, f.levels())?;
    let blocks = coarse.child_blocks(&fine);
    let m_fine = measures_at(ctx, f.levels())?;
    let m_coarse = measures_at(ctx, target)?;
    let mut coeffs = vec![0.0; coarse.len_paths()];
    for (i, block) in blocks.iter().enumerate() {
        let mut acc = 0.0;
        for j in block.clone() {
            acc += m_fine[j] * f.coeffs()[j];
        }
        coeffs[i] = acc / m_coarse[i];
    }
    Ok(StepFunction::at_levels(target, coeffs))
}

/// Apply the Dirac-type operator to a function constant on full-period
/// cylinders: `D f = Σ_{q=1}^{Q} α_q (Ξ_q f - Ξ_{q-1} f)` where `Q` is the
/// depth of `f`.  Deeper terms vanish on `V_Q`, so this is exact.
pub fn dirac_apply(
    ctx: &WeightContext,
    alpha: &AlphaSequence,
    f: &StepFunction,
) -> Result<StepFunction, KgsError> {
    ctx.require_diameter()?;
    let k = ctx.graph().k();
    if f.levels() % k != 0 {
        return Err(KgsError::NotRainbowMultiple {
            len: f.levels(),
            k,
        });
    }
    let depth = f.levels() / k;
    let alphas = alpha.values(depth)?;
    let mut out = f.scaled(0.0);
    if depth == 0 {
        return Ok(out);
    }
    let mut prev = project_r(ctx, 0, f)?.refine(ctx, f.levels())?;
    for (q, &a) in alphas.iter().enumerate() {
        let cur = if q + 1 == depth {
            f.clone()
        } else {
            project_r(ctx, q + 1, f)?.refine(ctx, f.levels())?
        };
        out.add_scaled(&cur, a)?;
        out.add_scaled(&prev, -a)?;
        prev = cur;
    }
    Ok(out)
}

/// A linear map between two fixed-depth cylinder-function spaces, stored
/// in measure-orthonormal coordinates so that singular values are
/// Hilbert-space operator norms.
#[derive(Debug, Clone)]
pub struct OperatorAtDepth {
    /// Cylinder length of the domain space.
    pub dom_levels: usize,
    /// Cylinder length of the codomain space.
    pub out_levels: usize,
    /// `out × dom` matrix in orthonormal coordinates.
    pub matrix: DMatrix<f64>,
}

impl OperatorAtDepth {
    /// Matrix of an arbitrary map, one application per basis vector.
    pub fn of_map(
        ctx: &WeightContext,
        dom_levels: usize,
        out_levels: usize,
        mut op: impl FnMut(&StepFunction) -> Result<StepFunction, KgsError>,
    ) -> Result<OperatorAtDepth, KgsError> {
        let n_dom = rainbow_table(ctx, dom_levels)?.len_paths();
        let sqrt_dom: Vec<f64> = measures_at(ctx, dom_levels)?
            .iter()
            .map(|m| m.sqrt())
            .collect();
        let sqrt_out: Vec<f64> = measures_at(ctx, out_levels)?
            .iter()
            .map(|m| m.sqrt())
            .collect();
        let mut matrix = DMatrix::<f64>::zeros(sqrt_out.len(), n_dom);
        for i in 0..n_dom {
            let mut coeffs = vec![0.0; n_dom];
            coeffs[i] = 1.0;
            let image = op(&StepFunction::at_levels(dom_levels, coeffs))?;
            assert_eq!(image.levels(), out_levels, "map output at wrong depth");
            for (r, &c) in image.coeffs().iter().enumerate() {
                matrix[(r, i)] = c * sqrt_out[r] / sqrt_dom[i];
            }
        }
        Ok(OperatorAtDepth {
            dom_levels,
            out_levels,
            matrix,
        })
    }

    /// Matrix of the Dirac-type operator on the depth-`depth` space,
    /// assembled from the nested projection matrices directly.
    pub fn dirac(
        ctx: &WeightContext,
        alpha: &AlphaSequence,
        depth: usize,
    ) -> Result<OperatorAtDepth, KgsError> {
        ctx.require_diameter()?;
        let k = ctx.graph().k();
        let levels = depth * k;
        let table = rainbow_table(ctx, levels)?;
        let n = table.len_paths();
        let m_full = measures_at(ctx, levels)?;
        let sqrt_m: Vec<f64> = m_full.iter().map(|m| m.sqrt()).collect();
        let alphas = alpha.values(depth)?;
        let mut matrix = DMatrix::<f64>::zeros(n, n);
        // D = α_Q I + Σ_{q=0}^{Q-1} c_q P_q with c_0 = -α_1 and
        // c_q = α_q - α_{q+1}: the telescoping sum regrouped by projection
        for q in 0..depth {
            let c = if q == 0 {
                -alphas[0]
            } else {
                alphas[q - 1] - alphas[q]
            };
            let coarse = rainbow_table(ctx, q * k)?;
            let blocks = coarse.child_blocks(&table);
            let m_coarse = measures_at(ctx, q * k)?;
            for (ci, block) in blocks.iter().enumerate() {
                for i in block.clone() {
                    for j in block.clone() {
                        matrix[(i, j)] += c * sqrt_m[i] * sqrt_m[j] / m_coarse[ci];
                    }
                }
            }
        }
        if depth > 0 {
            for i in 0..n {
                matrix[(i, i)] += alphas[depth - 1];
            }
        }
        Ok(OperatorAtDepth {
            dom_levels: levels,
            out_levels: levels,
            matrix,
        })
    }

    /// Matrix of the prefix shift `S_λ S_μ*` from depth `depth` into the
    /// depth holding `|λ|` extra levels in place of `|μ|`: basis paths
    /// starting with `μ` map to the same tail re-rooted under `λ`, the
    /// rest map to zero.  Needs `s(λ) = s(μ)`, both lengths multiples of
    /// `k`, and enough depth to resolve `μ`.
    pub fn shift_pair(
        ctx: &WeightContext,
        lambda: &FinitePath,
        mu: &FinitePath,
        depth: usize,
    ) -> Result<OperatorAtDepth, KgsError> {
        let g = ctx.graph();
        let k = g.k();
        for p in [lambda, mu] {
            if p.len() % k != 0 {
                return Err(KgsError::NotRainbowMultiple { len: p.len(), k });
            }
            p.validate_against(g)?;
        }
        if lambda.source() != mu.source() {
            return Err(KgsError::SourceRangeMismatch {
                source_vertex: lambda.source(),
                range_vertex: mu.source(),
            });
        }
        let dom_levels = depth * k;
        if dom_levels < mu.len() {
            return Err(KgsError::BadPath {
                reason: format!(
                    "depth {depth} gives {dom_levels} levels, too shallow to resolve a \
                     length-{} prefix",
                    mu.len()
                ),
            });
        }
        let out_levels = dom_levels - mu.len() + lambda.len();
        let dom = rainbow_table(ctx, dom_levels)?;
        let out = rainbow_table(ctx, out_levels)?;
        let m_dom = measures_at(ctx, dom_levels)?;
        let m_out = measures_at(ctx, out_levels)?;
        let order = ColorOrder::rainbow(k);
        let chain = scale_chain(ctx, &order, lambda.len().max(mu.len()));
        let ratio = (chain[lambda.len()] / chain[mu.len()]).sqrt();
        let mut matrix = DMatrix::<f64>::zeros(out.len_paths(), dom.len_paths());
        for (i, eta) in dom.paths().iter().enumerate() {
            if !eta.starts_with(mu) {
                continue;
            }
            let tail = eta.suffix_from(mu.len());
            let mut triples = lambda.triples().to_vec();
            triples.extend_from_slice(tail.triples());
            let image = FinitePath::new(lambda.range(), triples)
                .expect("tail junction matches because the sources agree");
            let j = out
                .index_of(&image)
                .expect("image path appears in its enumeration");
            matrix[(j, i)] = ratio * (m_out[j] / m_dom[i]).sqrt();
        }
        Ok(OperatorAtDepth {
            dom_levels,
            out_levels,
            matrix,
        })
    }

    /// Largest singular value.
    pub fn norm(&self) -> f64 {
        if self.matrix.ncols() == 0 || self.matrix.nrows() == 0 {
            return 0.0;
        }
        self.matrix
            .clone()
            .svd(false, false)
            .singular_values
            .iter()
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Spectrum of the depth-`depth` Dirac model, checked against the wavelet
/// layers.
#[derive(Debug, Clone, Serialize)]
pub struct DiracEigenReport {
    /// Depth of the matrix model.
    pub depth: usize,
    /// The eigenvalue sequence values `α_1..α_depth` that were used.
    pub alpha: Vec<f64>,
    /// Distinct eigenvalues with multiplicities, ascending.
    pub eigenvalues: Vec<(f64, usize)>,
    /// Largest principal angle between any eigenspace and the matching
    /// wavelet layer (the kernel is matched against the depth-0 space).
    pub max_angle_to_wavelets: f64,
}

/// Diagonalize the Dirac model at the given depth and compare each
/// eigenspace with the wavelet layer that should carry it: the kernel
/// with the depth-0 functions and the `α_q` eigenspace with the
/// `(q-1)`-th wavelet layer.
pub fn dirac_eigen_report(
    ctx: &WeightContext,
    alpha: &AlphaSequence,
    depth: usize,
) -> Result<DiracEigenReport, KgsError> {
    let k = ctx.graph().k();
    let levels = depth * k;
    let d = OperatorAtDepth::dirac(ctx, alpha, depth)?;
    let alphas = alpha.values(depth)?;
    let (eigvals, eigvecs) = jacobi_eigen(&d.matrix);
    let n = eigvals.len();

    // cluster sorted eigenvalues into multiplicity groups
    let mut clusters: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, &v) in eigvals.iter().enumerate() {
        match clusters.last_mut() {
            Some((rep, members)) if (v - *rep).abs() <= CLUSTER_TOL => members.push(i),
            _ => clusters.push((v, vec![i])),
        }
    }

    let mut max_angle = 0.0f64;
    let mut eigenvalues = Vec::with_capacity(clusters.len());
    for (rep, members) in &clusters {
        eigenvalues.push((*rep, members.len()));
        // expected span: the layer whose α value is nearest
        let mut best_q = 0usize; // 0 encodes the kernel / depth-0 space
        let mut best_gap = rep.abs();
        for (qi, &a) in alphas.iter().enumerate() {
            if (rep - a).abs() < best_gap {
                best_gap = (rep - a).abs();
                best_q = qi + 1;
            }
        }
        let expected: Vec<StepFunction> = if best_q == 0 {
            let table0 = rainbow_table(ctx, 0)?;
            (0..table0.len_paths())
                .map(|v| {
                    let mut c = vec![0.0; table0.len_paths()];
                    c[v] = 1.0;
                    StepFunction::at_levels(0, c).refine(ctx, levels)
                })
                .collect::<Result<_, _>>()?
        } else {
            wavelet_basis(ctx, best_q - 1)?
                .vectors
                .into_iter()
                .map(|f| f.refine(ctx, levels))
                .collect::<Result<_, _>>()?
        };
        let span_expected = m_span(ctx, levels, &expected.iter().collect::<Vec<_>>())?;
        let mut span_eig = DMatrix::<f64>::zeros(n, members.len());
        for (c, &i) in members.iter().enumerate() {
            span_eig.set_column(c, &eigvecs.column(i));
        }
        max_angle = max_angle.max(max_principal_angle(&span_eig, &span_expected));
    }

    Ok(DiracEigenReport {
        depth,
        alpha: alphas,
        eigenvalues,
        max_angle_to_wavelets: max_angle,
    })
}

/// Norm of the commutator `[D, S_λ S_μ*]` in the exact finite model with
/// domain depth `depth`.  The shift maps depth `depth` into depth
/// `depth + (|λ| - |μ|)/k`, and the operator acts on each side at its own
/// depth, which is exact because the deeper projection terms drop out.
pub fn commutator_norm(
    ctx: &WeightContext,
    alpha: &AlphaSequence,
    lambda: &FinitePath,
    mu: &FinitePath,
    depth: usize,
) -> Result<f64, KgsError> {
    let k = ctx.graph().k();
    let t = OperatorAtDepth::shift_pair(ctx, lambda, mu, depth)?;
    let out_depth = t.out_levels / k;
    let d_dom = OperatorAtDepth::dirac(ctx, alpha, depth)?;
    let d_out = OperatorAtDepth::dirac(ctx, alpha, out_depth)?;
    let c = &d_out.matrix * &t.matrix - &t.matrix * &d_dom.matrix;
    Ok(OperatorAtDepth {
        dom_levels: t.dom_levels,
        out_levels: t.out_levels,
        matrix: c,
    }
    .norm())
}

/// Worst-case residuals of the four generator relations in the exact
/// finite model at the given depth.
#[derive(Debug, Clone, Serialize)]
pub struct CkReport {
    /// Depth of the matrix model the relations were evaluated at.
    pub depth: usize,
    /// Vertex projections: complete family of orthogonal projections.
    pub ck1: f64,
    /// Composition: prepending `λ` then `μ` equals prepending `λμ`.
    pub ck2: f64,
    /// Isometry: `S_λ* S_λ` equals the source-vertex projection.
    pub ck3: f64,
    /// Exhaustion: the full-period shifts from a vertex sum to its
    /// projection.
    pub ck4: f64,
}

impl CkReport {
    /// Largest of the four residuals.
    pub fn max_residual(&self) -> f64 {
        self.ck1.max(self.ck2).max(self.ck3).max(self.ck4)
    }
}

/// Matrix of multiplication by the vertex-cylinder indicator on the
/// depth-`levels` space (diagonal in the cylinder basis).
fn vertex_projection(
    ctx: &WeightContext,
    v: usize,
    levels: usize,
) -> Result<DMatrix<f64>, KgsError> {
    let table = rainbow_table(ctx, levels)?;
    let n = table.len_paths();
    let mut p = DMatrix::<f64>::zeros(n, n);
    for i in table.root_block(v) {
        p[(i, i)] = 1.0;
    }
    Ok(p)
}

fn max_abs_mat(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()))
}

/// Evaluate the four generator relations on all length-`k` paths in the
/// finite matrix model with domain depth `depth` (at least 1) and report
/// the worst residual of each.
pub fn ck_check(ctx: &WeightContext, depth: usize) -> Result<CkReport, KgsError> {
    assert!(depth >= 1, "relations need at least one full period");
    let g = ctx.graph();
    let k = g.k();
    let nv = g.num_vertices();
    let levels = depth * k;
    let gens = rainbow_table(ctx, k)?;

    // CK1: the vertex projections are orthogonal idempotents summing to
    // the identity
    let mut ck1 = 0.0f64;
    let projections: Vec<DMatrix<f64>> = (0..nv)
        .map(|v| vertex_projection(ctx, v, levels))
        .collect::<Result<_, _>>()?;
    let n = projections[0].nrows();
    let mut total = DMatrix::<f64>::zeros(n, n);
    for (v, p) in projections.iter().enumerate() {
        total += p;
        for (w, q) in projections.iter().enumerate() {
            let prod = p * q;
            let want = if v == w { p.clone() } else { DMatrix::zeros(n, n) };
            ck1 = ck1.max(max_abs_mat(&(prod - want)));
        }
    }
    ck1 = ck1.max(max_abs_mat(&(total - DMatrix::<f64>::identity(n, n))));

    // CK3 and CK4 share the per-generator shift matrices in and out of
    // the domain depth
    let mut ck3 = 0.0f64;
    let mut down: Vec<DMatrix<f64>> = Vec::with_capacity(gens.len_paths());
    let mut up: Vec<DMatrix<f64>> = Vec::with_capacity(gens.len_paths());
    for lam in gens.paths() {
        let fwd = OperatorAtDepth::of_map(ctx, levels, levels + k, |f| apply_s(ctx, lam, f))?;
        let bwd = OperatorAtDepth::of_map(ctx, levels + k, levels, |f| apply_s_star(ctx, lam, f))?;
        ck3 = ck3.max(max_abs_mat(
            &(&bwd.matrix * &fwd.matrix - &projections[lam.source()]),
        ));
        up.push(
            OperatorAtDepth::of_map(ctx, levels - k, levels, |f| apply_s(ctx, lam, f))?.matrix,
        );
        down.push(
            OperatorAtDepth::of_map(ctx, levels, levels - k, |f| apply_s_star(ctx, lam, f))?
                .matrix,
        );
    }
    let mut ck4 = 0.0f64;
    for v in 0..nv {
        let mut acc = DMatrix::<f64>::zeros(n, n);
        for i in gens.root_block(v) {
            acc += &up[i] * &down[i];
        }
        ck4 = ck4.max(max_abs_mat(&(acc - &projections[v])));
    }

    // CK2: composing two prefix shifts equals the shift by the
    // concatenated path
    let mut ck2 = 0.0f64;
    for lam in gens.paths() {
        for mu in gens.paths() {
            if lam.source() != mu.range() {
                continue;
            }
            let mut triples = lam.triples().to_vec();
            triples.extend_from_slice(mu.triples());
            let both = FinitePath::new(lam.range(), triples)
                .expect("junction checked via source/range match");
            let composed = OperatorAtDepth::of_map(ctx, levels - k, levels + k, |f| {
                apply_s(ctx, lam, &apply_s(ctx, mu, f)?)
            })?;
            let direct =
                OperatorAtDepth::of_map(ctx, levels - k, levels + k, |f| apply_s(ctx, &both, f))?;
            ck2 = ck2.max(max_abs_mat(&(composed.matrix - direct.matrix)));
        }
    }

    Ok(CkReport {
        depth,
        ck1,
        ck2,
        ck3,
        ck4,
    })
}
