//! Finite-depth harmonic analysis on the path space: step functions under
//! the cylinder measure, wavelet bases and their refined and reshaped
//! variants, the eigenspaces of the Laplace-type operator, and a checker
//! for the refinement relations between all of these.
//!
//! Everything lives in the dense span of cylinder characteristic functions.
//! A [`StepFunction`] is a coefficient vector over the path enumeration at
//! a fixed cylinder length; refining to a longer length is a block copy,
//! because extensions of a path occupy a contiguous index range.  The inner
//! product weighs coefficients by cylinder measures, so refinement never
//! changes a pairing.
//!
//! The subspace ladder is `V_n` = functions constant on full-period
//! cylinders of length `n*k`.  Its successive orthogonal complements
//! `W_n = V_{n+1} ∩ V_n^⊥` are spanned by translates `S_λ f` of
//! finitely many mother wavelets, where `S_λ` prepends `λ` and scales by
//! the square root of the cylinder-measure ratio.  Two finer splittings
//! are implemented: per-colour pieces `W_{q,j}` obtained by weighted
//! Gram-Schmidt one colour at a time, and the same construction run on a
//! reshaped level colouring (several consecutive levels of one colour).
//!
//! Independently, every finite path `γ` labels an eigenspace `E_γ` of the
//! Laplace-type operator `Δ_s`, spanned by normalized differences of
//! sibling cylinders below `γ`.  [`verify_refinement`] checks numerically
//! that these eigenspaces tile the wavelet spaces: dimension identities,
//! principal angles between the spans, and eigen-residuals of `Δ_s`.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::bratteli::{ColorOrder, FinitePath, PathTable, DEFAULT_MAX_PATHS};
use crate::error::KgsError;
use crate::linalg::{max_principal_angle, orthonormal_span};
use crate::measure::WeightContext;

/// Relative singular-value cutoff used when orthonormalizing a basis
/// before a principal-angle comparison.
const SPAN_RANK_TOL: f64 = 1e-10;

/// A function constant on the cylinders of a fixed length.
///
/// Coefficients are stored in path-enumeration order for that length; the
/// enumeration (and hence the meaning of the coefficients) is determined
/// by the level colouring the function was built under.  Functions from
/// different colourings must not be mixed in one pairing.  The standard
/// subspaces `V_n` consist of functions at length `n*k`, but intermediate
/// lengths arise naturally (eigenspace vectors live one level below a
/// labelling path) and are fully supported.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    levels: usize,
    coeffs: Vec<f64>,
}

impl StepFunction {
    /// The constant function with the given value, at cylinder length 0.
    pub fn constant(ctx: &WeightContext, value: f64) -> StepFunction {
        StepFunction {
            levels: 0,
            coeffs: vec![value; ctx.graph().num_vertices()],
        }
    }

    /// The characteristic function of `[p]`, at cylinder length `|p|`.
    pub fn indicator(ctx: &WeightContext, p: &FinitePath) -> Result<StepFunction, KgsError> {
        p.validate_against(ctx.graph())?;
        let table = rainbow_table(ctx, p.len())?;
        let mut coeffs = vec![0.0; table.len_paths()];
        let idx = table
            .index_of(p)
            .expect("validated path appears in its own enumeration");
        coeffs[idx] = 1.0;
        Ok(StepFunction {
            levels: p.len(),
            coeffs,
        })
    }

    /// Wrap a coefficient vector over the full-period cylinders of depth
    /// `n` (cylinder length `n*k`).
    pub fn from_depth_coeffs(
        ctx: &WeightContext,
        n: usize,
        coeffs: Vec<f64>,
    ) -> Result<StepFunction, KgsError> {
        let levels = n * ctx.graph().k();
        let expected = rainbow_table(ctx, levels)?.len_paths();
        if coeffs.len() != expected {
            return Err(KgsError::CoeffCountMismatch {
                expected,
                got: coeffs.len(),
            });
        }
        Ok(StepFunction { levels, coeffs })
    }

    /// Cylinder length the function is constant on.
    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Coefficients in path-enumeration order.
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Unchecked constructor for modules that already hold a matching
    /// path enumeration.
    pub(crate) fn at_levels(levels: usize, coeffs: Vec<f64>) -> StepFunction {
        StepFunction { levels, coeffs }
    }

    /// The same function scaled by `c`.
    pub fn scaled(&self, c: f64) -> StepFunction {
        StepFunction {
            levels: self.levels,
            coeffs: self.coeffs.iter().map(|x| c * x).collect(),
        }
    }

    /// In-place `self += c * other`; both functions must already live at
    /// the same cylinder length.
    pub fn add_scaled(&mut self, other: &StepFunction, c: f64) -> Result<(), KgsError> {
        if self.levels != other.levels || self.coeffs.len() != other.coeffs.len() {
            return Err(KgsError::CoeffCountMismatch {
                expected: self.coeffs.len(),
                got: other.coeffs.len(),
            });
        }
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += c * b;
        }
        Ok(())
    }

    /// Re-express the function on the finer partition at cylinder length
    /// `target` (standard colouring): every coefficient is copied to the
    /// contiguous block of extensions of its path.
    pub fn refine(&self, ctx: &WeightContext, target: usize) -> Result<StepFunction, KgsError> {
        refine_in(ctx, &ColorOrder::rainbow(ctx.graph().k()), self, target)
    }
}

/// A labeled family of step functions at a common cylinder length,
/// together with its Gram matrix under the measure-weighted pairing.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    /// Human-readable name of the spanned subspace.
    pub label: String,
    /// Common cylinder length of all vectors.
    pub levels: usize,
    pub vectors: Vec<StepFunction>,
    /// Pairings `gram[(i, j)] = <vectors[i], vectors[j]>`.
    pub gram: DMatrix<f64>,
}

impl SubspaceBasis {
    fn assemble(
        ctx: &WeightContext,
        order: &ColorOrder,
        label: String,
        levels: usize,
        vectors: Vec<StepFunction>,
    ) -> Result<SubspaceBasis, KgsError> {
        // all constructors produce vectors at one common length, so the
        // pairings reduce to weighted dot products over a single table
        let table = order_table(ctx, order, levels)?;
        let chain = scale_chain(ctx, order, levels);
        let x = &ctx.spectral().x;
        let weights: Vec<f64> = table
            .paths()
            .iter()
            .map(|p| x[p.source()] / chain[levels])
            .collect();
        let d = vectors.len();
        let mut gram = DMatrix::<f64>::zeros(d, d);
        for i in 0..d {
            debug_assert_eq!(vectors[i].levels, levels);
            for j in i..d {
                let v: f64 = vectors[i]
                    .coeffs
                    .iter()
                    .zip(&vectors[j].coeffs)
                    .zip(&weights)
                    .map(|((a, b), w)| a * b * w)
                    .sum();
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(SubspaceBasis {
            label,
            levels,
            vectors,
            gram,
        })
    }

    /// Number of basis vectors.
    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    /// Whether the Gram matrix is the identity to within `tol` entrywise.
    pub fn is_orthonormal(&self, tol: f64) -> bool {
        let d = self.dim();
        (0..d).all(|i| {
            (0..d).all(|j| {
                let want = if i == j { 1.0 } else { 0.0 };
                (self.gram[(i, j)] - want).abs() <= tol
            })
        })
    }
}

/// Identifier for an eigenspace of the Laplace-type operator.
#[derive(Debug, Clone, PartialEq)]
pub enum EigenspaceId {
    /// The constants.
    MinusOne,
    /// Differences of vertex cylinders.
    Zero,
    /// Differences of sibling cylinders directly below a finite path.
    Path(FinitePath),
}

pub(crate) fn rainbow_table(ctx: &WeightContext, len: usize) -> Result<PathTable, KgsError> {
    order_table(ctx, &ColorOrder::rainbow(ctx.graph().k()), len)
}

fn order_table(
    ctx: &WeightContext,
    order: &ColorOrder,
    len: usize,
) -> Result<PathTable, KgsError> {
    PathTable::build(ctx.graph(), order, len, DEFAULT_MAX_PATHS)
}

/// Products of per-level radii: `chain[l]` is the measure scale factor of
/// a length-`l` cylinder under the given colouring, so that a cylinder's
/// measure is `x_{source} / chain[len]`.
pub(crate) fn scale_chain(ctx: &WeightContext, order: &ColorOrder, len: usize) -> Vec<f64> {
    let rho = &ctx.spectral().rho;
    let mut chain = Vec::with_capacity(len + 1);
    chain.push(1.0);
    for lvl in 1..=len {
        chain.push(chain[lvl - 1] * rho[order.color_at(lvl) - 1]);
    }
    chain
}

fn refine_in(
    ctx: &WeightContext,
    order: &ColorOrder,
    f: &StepFunction,
    target: usize,
) -> Result<StepFunction, KgsError> {
    if target < f.levels {
        return Err(KgsError::RefineShallower {
            have: f.levels,
            want: target,
        });
    }
    if target == f.levels {
        return Ok(f.clone());
    }
    let coarse = order_table(ctx, order, f.levels)?;
    let fine = order_table(ctx, order, target)?;
    let blocks = coarse.child_blocks(&fine);
    let mut coeffs = vec![0.0; fine.len_paths()];
    for (i, block) in blocks.iter().enumerate() {
        for slot in &mut coeffs[block.clone()] {
            *slot = f.coeffs[i];
        }
    }
    Ok(StepFunction {
        levels: target,
        coeffs,
    })
}

fn inner_in(
    ctx: &WeightContext,
    order: &ColorOrder,
    f: &StepFunction,
    g: &StepFunction,
) -> Result<f64, KgsError> {
    let target = f.levels.max(g.levels);
    let fr = refine_in(ctx, order, f, target)?;
    let gr = refine_in(ctx, order, g, target)?;
    let table = order_table(ctx, order, target)?;
    let chain = scale_chain(ctx, order, target);
    let x = &ctx.spectral().x;
    let mut acc = 0.0;
    for (i, p) in table.paths().iter().enumerate() {
        acc += fr.coeffs[i] * gr.coeffs[i] * x[p.source()] / chain[target];
    }
    Ok(acc)
}

/// Measure-weighted pairing `<f, g> = Σ_λ f_λ g_λ M([λ])` at the common
/// refinement of the two cylinder lengths.  Refinement-invariant: refining
/// either argument further does not change the value.
pub fn inner(ctx: &WeightContext, f: &StepFunction, g: &StepFunction) -> Result<f64, KgsError> {
    inner_in(ctx, &ColorOrder::rainbow(ctx.graph().k()), f, g)
}

/// The mother wavelets attached to a vertex: with `D_v` the full-period
/// paths rooted at `v` in enumeration order and `λ_0` its first element,
/// the vectors are `M([λ_0])^{-1} χ_{[λ_0]} - M([λ_i])^{-1} χ_{[λ_i]}`
/// for `i >= 1`.  All of them pair to zero with every vertex cylinder.
/// Empty when `v` has a single full-period extension.
pub fn mother_wavelets(ctx: &WeightContext, v: usize) -> Result<SubspaceBasis, KgsError> {
    let g = ctx.graph();
    let k = g.k();
    if v >= g.num_vertices() {
        return Err(KgsError::BadPath {
            reason: format!("vertex index {v} out of range"),
        });
    }
    let order = ColorOrder::rainbow(k);
    let table = rainbow_table(ctx, k)?;
    let block = table.root_block(v);
    let chain = scale_chain(ctx, &order, k);
    let x = &ctx.spectral().x;
    let measure = |i: usize| x[table.path(i).source()] / chain[k];

    let mut vectors = Vec::new();
    let first = block.start;
    for i in block.clone().skip(1) {
        let mut coeffs = vec![0.0; table.len_paths()];
        coeffs[first] = 1.0 / measure(first);
        coeffs[i] = -1.0 / measure(i);
        vectors.push(StepFunction { levels: k, coeffs });
    }
    let label = format!("mother[{}]", g.vertices()[v]);
    SubspaceBasis::assemble(ctx, &order, label, k, vectors)
}

/// Shared core of the scaling operators: produce the function supported
/// on extensions of `lambda` whose coefficient on `lambda·η` is
/// `factor * f_η`, for `f` supported on paths rooted at `s(lambda)`.
fn prepend_scaled(
    ctx: &WeightContext,
    order: &ColorOrder,
    lambda: &FinitePath,
    f: &StepFunction,
    factor: f64,
) -> Result<StepFunction, KgsError> {
    let small = order_table(ctx, order, lambda.len())?;
    let big = order_table(ctx, order, lambda.len() + f.levels)?;
    let fine = order_table(ctx, order, f.levels)?;
    let idx = small.index_of(lambda).ok_or_else(|| KgsError::BadPath {
        reason: format!("path {lambda} is not a path of the diagram"),
    })?;
    let block = small.child_blocks(&big)[idx].clone();
    let src = fine.root_block(lambda.source());
    debug_assert_eq!(block.len(), src.len(), "extension blocks must correspond");
    let mut coeffs = vec![0.0; big.len_paths()];
    for (dst, from) in block.zip(src) {
        coeffs[dst] = factor * f.coeffs[from];
    }
    Ok(StepFunction {
        levels: lambda.len() + f.levels,
        coeffs,
    })
}

/// Scaling-and-translation operator: `S_λ` sends `χ_[η]` with
/// `r(η) = s(λ)` to `ρ^{|λ|/(2k)}-scaled χ_[λη]` (the square root of the
/// cylinder-measure ratio) and kills everything else.  `|λ|` must be a
/// multiple of `k` so that level colours keep lining up.
pub fn apply_s(
    ctx: &WeightContext,
    lambda: &FinitePath,
    f: &StepFunction,
) -> Result<StepFunction, KgsError> {
    let k = ctx.graph().k();
    if lambda.len() % k != 0 {
        return Err(KgsError::NotRainbowMultiple {
            len: lambda.len(),
            k,
        });
    }
    lambda.validate_against(ctx.graph())?;
    let order = ColorOrder::rainbow(k);
    let factor = scale_chain(ctx, &order, lambda.len())[lambda.len()].sqrt();
    prepend_scaled(ctx, &order, lambda, f, factor)
}

/// Adjoint of [`apply_s`]: truncate the leading `λ` (zero where the prefix
/// does not match) and scale by the inverse square root.
pub fn apply_s_star(
    ctx: &WeightContext,
    lambda: &FinitePath,
    f: &StepFunction,
) -> Result<StepFunction, KgsError> {
    let k = ctx.graph().k();
    if lambda.len() % k != 0 {
        return Err(KgsError::NotRainbowMultiple {
            len: lambda.len(),
            k,
        });
    }
    lambda.validate_against(ctx.graph())?;
    if f.levels < lambda.len() {
        return Err(KgsError::RefineShallower {
            have: f.levels,
            want: lambda.len(),
        });
    }
    let order = ColorOrder::rainbow(k);
    let small = order_table(ctx, &order, lambda.len())?;
    let big = order_table(ctx, &order, f.levels)?;
    let out_levels = f.levels - lambda.len();
    let fine = order_table(ctx, &order, out_levels)?;
    let idx = small
        .index_of(lambda)
        .expect("validated path appears in its own enumeration");
    let block = small.child_blocks(&big)[idx].clone();
    let dst = fine.root_block(lambda.source());
    debug_assert_eq!(block.len(), dst.len(), "extension blocks must correspond");
    let factor = 1.0 / scale_chain(ctx, &order, lambda.len())[lambda.len()].sqrt();
    let mut coeffs = vec![0.0; fine.len_paths()];
    for (to, from) in dst.zip(block) {
        coeffs[to] = factor * f.coeffs[from];
    }
    Ok(StepFunction {
        levels: out_levels,
        coeffs,
    })
}

/// Basis of `W_n = V_{n+1} ∩ V_n^⊥`: all translates `S_λ f` of the mother
/// wavelets at `s(λ)` over full-period paths `λ` of length `n*k`.  The
/// count equals the path-count difference between depths `n+1` and `n`.
pub fn wavelet_basis(ctx: &WeightContext, n: usize) -> Result<SubspaceBasis, KgsError> {
    let g = ctx.graph();
    let k = g.k();
    let order = ColorOrder::rainbow(k);
    let table = rainbow_table(ctx, n * k)?;
    let mut mothers: Vec<Option<SubspaceBasis>> = vec![None; g.num_vertices()];
    let mut vectors = Vec::new();
    for lambda in table.paths() {
        let v = lambda.source();
        if mothers[v].is_none() {
            mothers[v] = Some(mother_wavelets(ctx, v)?);
        }
        for f in &mothers[v].as_ref().unwrap().vectors {
            vectors.push(apply_s(ctx, lambda, f)?);
        }
    }
    let deep = rainbow_table(ctx, (n + 1) * k)?.len_paths();
    debug_assert_eq!(
        vectors.len(),
        deep - table.len_paths(),
        "wavelet count must equal the path-count difference"
    );
    SubspaceBasis::assemble(ctx, &order, format!("W{n}"), (n + 1) * k, vectors)
}

/// Orthonormal vectors spanning the complement of the constant vector in
/// the weighted coordinate space of one extension step, via Gram-Schmidt
/// on `[1, δ_0, δ_1, ...]`.  `weights` are the cylinder measures of the
/// extensions; the constant vector itself is consumed and not returned.
fn complement_of_ones(weights: &[f64]) -> Vec<Vec<f64>> {
    let d = weights.len();
    let ip = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(weights)
            .map(|((x, y), w)| x * y * w)
            .sum()
    };
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    let total: f64 = weights.iter().sum();
    basis.push(vec![1.0 / total.sqrt(); d]);
    let mut out = Vec::with_capacity(d.saturating_sub(1));
    for i in 0..d.saturating_sub(1) {
        let mut v = vec![0.0; d];
        v[i] = 1.0;
        // two orthogonalization passes keep the loss of orthogonality at
        // the level of roundoff even for skewed weights
        for _ in 0..2 {
            for b in &basis {
                let c = ip(&v, b);
                for (ve, be) in v.iter_mut().zip(b) {
                    *ve -= c * be;
                }
            }
        }
        let norm = ip(&v, &v).sqrt();
        for ve in &mut v {
            *ve /= norm;
        }
        basis.push(v.clone());
        out.push(v);
    }
    out
}

/// Shared construction behind [`refined_wavelet_basis`] and
/// [`j_wavelet_basis`]: the orthonormal basis of the single-level slice
/// `W_{q,ℓ}` under an arbitrary level colouring — functions constant at
/// length `q*P + ℓ` (with `P` the colouring period), orthogonal to
/// everything constant at length `q*P + ℓ - 1`.
fn sliced_wavelet_basis(
    ctx: &WeightContext,
    order: &ColorOrder,
    label: String,
    q: usize,
    ell: usize,
) -> Result<SubspaceBasis, KgsError> {
    let g = ctx.graph();
    let period = order.period();
    assert!(
        (1..=period).contains(&ell),
        "slice index must lie in 1..=period"
    );
    let base = q * period;
    let color = order.color_at(ell);
    let a = g.adjacency(color);

    // mother vectors at length ell: one family per length-(ell-1) stem
    let stems = order_table(ctx, order, ell - 1)?;
    let fine = order_table(ctx, order, ell)?;
    let blocks = stems.child_blocks(&fine);
    let chain = scale_chain(ctx, order, ell);
    let x = &ctx.spectral().x;
    let mut mothers: Vec<StepFunction> = Vec::new();
    let mut mother_root: Vec<usize> = Vec::new();
    for (si, stem) in stems.paths().iter().enumerate() {
        let v = stem.source();
        let block = blocks[si].clone();
        let weights: Vec<f64> = (0..g.num_vertices())
            .flat_map(|b| {
                std::iter::repeat(x[b] / chain[ell]).take(a.get(v, b) as usize)
            })
            .collect();
        debug_assert_eq!(weights.len(), block.len());
        for cvec in complement_of_ones(&weights) {
            let mut coeffs = vec![0.0; fine.len_paths()];
            for (slot, c) in block.clone().zip(&cvec) {
                coeffs[slot] = *c;
            }
            mothers.push(StepFunction {
                levels: ell,
                coeffs,
            });
            mother_root.push(stem.range());
        }
    }

    let vectors = if q == 0 {
        mothers
    } else {
        let lambdas = order_table(ctx, order, base)?;
        let factor = scale_chain(ctx, order, base)[base].sqrt();
        let mut out = Vec::new();
        for lambda in lambdas.paths() {
            for (f, root) in mothers.iter().zip(&mother_root) {
                if *root == lambda.source() {
                    out.push(prepend_scaled(ctx, order, lambda, f, factor)?);
                }
            }
        }
        out
    };
    let expect = order_table(ctx, order, base + ell)?.len_paths()
        - order_table(ctx, order, base + ell - 1)?.len_paths();
    debug_assert_eq!(vectors.len(), expect, "slice dimension identity");
    SubspaceBasis::assemble(ctx, order, label, base + ell, vectors)
}

/// Orthonormal basis of the colour-`j` slice `W_{q,j}` of the wavelet
/// space `W_q`: one Gram-Schmidt step per stem of length `q*k + j - 1`,
/// against the constant vector, weighted by extension measures.  The
/// slices for `j = 1..=k` together span `W_q`.
pub fn refined_wavelet_basis(
    ctx: &WeightContext,
    q: usize,
    j: usize,
) -> Result<SubspaceBasis, KgsError> {
    let k = ctx.graph().k();
    assert!((1..=k).contains(&j), "colour slice index must lie in 1..=k");
    let order = ColorOrder::rainbow(k);
    sliced_wavelet_basis(ctx, &order, format!("W{q},{j}"), q, j)
}

/// The slice bases of the reshaped ladder: levels are coloured with
/// `shape[0]` copies of colour 1, then `shape[1]` copies of colour 2, and
/// so on, and `W^J_{q,ℓ}` (with `P = Σ shape_i` the reshaped period and
/// `1 <= ℓ <= P`) is built exactly as in [`refined_wavelet_basis`] but on
/// that colouring.  `shape = (1, ..., 1)` reproduces the refined basis.
pub fn j_wavelet_basis(
    ctx: &WeightContext,
    shape: &[usize],
    q: usize,
    ell: usize,
) -> Result<SubspaceBasis, KgsError> {
    let k = ctx.graph().k();
    assert_eq!(shape.len(), k, "need one exponent per colour");
    assert!(shape.iter().all(|&e| e >= 1), "exponents must be positive");
    let order = ColorOrder::from_exponents(shape);
    let label = format!("W^{shape:?}[{q},{ell}]");
    sliced_wavelet_basis(ctx, &order, label, q, ell)
}

/// Basis of one eigenspace of the Laplace-type operator.
///
/// For a labelling path `γ`, the vectors are
/// `M([γe_0])^{-1} χ_{[γe_0]} - M([γe_i])^{-1} χ_{[γe_i]}` over the
/// one-level extensions `e_i` of `γ` in enumeration order (`e_0` the
/// first); the dimension is one less than the number of such extensions.
/// The special labels are the constants and the vertex differences.
pub fn eigenspace_basis(
    ctx: &WeightContext,
    id: &EigenspaceId,
) -> Result<SubspaceBasis, KgsError> {
    ctx.require_diameter()?;
    let g = ctx.graph();
    let k = g.k();
    let order = ColorOrder::rainbow(k);
    let x = &ctx.spectral().x;
    match id {
        EigenspaceId::MinusOne => {
            let vectors = vec![StepFunction::constant(ctx, 1.0)];
            SubspaceBasis::assemble(ctx, &order, "E[-1]".to_string(), 0, vectors)
        }
        EigenspaceId::Zero => {
            let nv = g.num_vertices();
            let mut vectors = Vec::new();
            for v in 1..nv {
                let mut coeffs = vec![0.0; nv];
                coeffs[0] = 1.0 / x[0];
                coeffs[v] = -1.0 / x[v];
                vectors.push(StepFunction { levels: 0, coeffs });
            }
            SubspaceBasis::assemble(ctx, &order, "E[0]".to_string(), 0, vectors)
        }
        EigenspaceId::Path(gamma) => {
            gamma.validate_against(g)?;
            let len = gamma.len() + 1;
            let table = rainbow_table(ctx, len)?;
            let shallow = rainbow_table(ctx, gamma.len())?;
            let gi = shallow
                .index_of(gamma)
                .expect("validated path appears in its own enumeration");
            let block = shallow.child_blocks(&table)[gi].clone();
            let chain = scale_chain(ctx, &order, len);
            let measure = |i: usize| x[table.path(i).source()] / chain[len];
            let first = block.start;
            let mut vectors = Vec::new();
            for i in block.clone().skip(1) {
                let mut coeffs = vec![0.0; table.len_paths()];
                coeffs[first] = 1.0 / measure(first);
                coeffs[i] = -1.0 / measure(i);
                vectors.push(StepFunction {
                    levels: len,
                    coeffs,
                });
            }
            SubspaceBasis::assemble(ctx, &order, format!("E[{gamma}]"), len, vectors)
        }
    }
}

/// Apply the Laplace-type operator `Δ_s` to a step function at its own
/// cylinder length.
///
/// On a cylinder function `χ_[η]` the operator is a sum over the proper
/// prefixes `γ = η(0,i)`: writing `γ'` for the one-level-longer prefix,
/// each term couples `χ_[η]` with the sibling region `[γ] \ [γ']` through
/// the factor `2 F_γ w(γ)^{s-2}`, where `1/F_γ` is the sum of
/// `M([γe]) M([γe'])` over ordered pairs `e ≠ e'` of one-level extensions
/// of `γ` (each unordered pair counted twice).  Constants — and more
/// generally anything constant on coarser cylinders than the prefix level
/// in question — are annihilated by the corresponding terms, which the
/// implementation realizes through exact block cancellation.
pub fn laplacian_apply(
    ctx: &WeightContext,
    s: f64,
    f: &StepFunction,
) -> Result<StepFunction, KgsError> {
    ctx.require_diameter()?;
    let g = ctx.graph();
    let k = g.k();
    let order = ColorOrder::rainbow(k);
    let len = f.levels;
    let table = order_table(ctx, &order, len)?;
    let n_paths = table.len_paths();
    let chain = scale_chain(ctx, &order, len);
    let x = &ctx.spectral().x;
    let rho = &ctx.spectral().rho;
    let delta = ctx.delta();

    // measure of each length-`len` cylinder, reused by every level term
    let m_full: Vec<f64> = table
        .paths()
        .iter()
        .map(|p| x[p.source()] / chain[len])
        .collect();

    let mut out = vec![0.0; n_paths];
    // range-add accumulator for the sibling-spread part of each term
    let mut spread = vec![0.0; n_paths + 1];

    for i in 0..len {
        let prefixes = order_table(ctx, &order, i)?;
        let children = order_table(ctx, &order, i + 1)?;
        let blocks_parent = prefixes.child_blocks(&table);
        let blocks_child = children.child_blocks(&table);
        let parent_of = children.prefix_map(&prefixes);
        let color = order.color_at(i + 1);
        let a = g.adjacency_f64(color);

        // per-vertex data at this prefix level: coupling strength
        // 2 F w^{s-2} and the prefix measure
        let mut coef = vec![0.0; g.num_vertices()];
        let mut m_prefix = vec![0.0; g.num_vertices()];
        for v in 0..g.num_vertices() {
            let degree_sum: f64 = (0..g.num_vertices()).map(|b| a[(v, b)] * x[b] * x[b]).sum();
            let pair_sum =
                ((rho[color - 1] * x[v]).powi(2) - degree_sum) / (chain[i + 1] * chain[i + 1]);
            let w = chain[i].powf(-1.0 / delta) * x[v];
            coef[v] = 2.0 * w.powf(s - 2.0) / pair_sum;
            m_prefix[v] = x[v] / chain[i];
        }

        for (ci, &pi) in parent_of.iter().enumerate() {
            let v = prefixes.path(pi).source();
            let d_measure = m_prefix[v] - x[children.path(ci).source()] / chain[i + 1];
            let child_block = blocks_child[ci].clone();
            let mut carried = 0.0;
            for idx in child_block.clone() {
                out[idx] -= coef[v] * d_measure * f.coeffs[idx];
                carried += coef[v] * m_full[idx] * f.coeffs[idx];
            }
            let parent_block = blocks_parent[pi].clone();
            spread[parent_block.start] += carried;
            spread[parent_block.end] -= carried;
            spread[child_block.start] -= carried;
            spread[child_block.end] += carried;
        }
    }

    let mut acc = 0.0;
    for (idx, slot) in out.iter_mut().enumerate() {
        acc += spread[idx];
        *slot += acc;
    }
    Ok(StepFunction {
        levels: len,
        coeffs: out,
    })
}

/// Numeric verification that the eigenspaces tile the wavelet spaces.
#[derive(Debug, Clone, Serialize)]
pub struct RefinementReport {
    /// Wavelet index `n` that was checked.
    pub n: usize,
    /// Exponent at which the operator was probed.
    pub s_probe: f64,
    /// Dimension of the wavelet basis of `W_n`.
    pub wavelet_dim: usize,
    /// Total dimension of the eigenspaces labelled by paths of length
    /// `n*k + t`, `0 <= t < k`.
    pub eigen_dim_total: usize,
    /// Per-label eigenspace dimensions.
    pub eigen_dims: Vec<(String, usize)>,
    /// Rayleigh quotient of the operator on each eigenspace.
    pub eigenvalues: Vec<(String, f64)>,
    /// Largest principal angle between the wavelet span and the direct
    /// sum of the eigenspace spans, in radians.
    pub max_principal_angle: f64,
    /// Largest principal angle between the depth-0 space and the span of
    /// the constants plus vertex differences.
    pub v0_split_angle: f64,
    /// Largest relative residual of the eigen-relation over all
    /// eigenspace vectors.
    pub max_eigen_residual: f64,
    /// Largest within-eigenspace spread of Rayleigh quotients.
    pub max_rayleigh_spread: f64,
    /// Convention used for the pair sum in the coupling constants.
    pub pair_convention: String,
}

/// Columns of `vectors` (all at cylinder length `levels`) expressed in the
/// measure-orthonormal coordinate system, reduced to an orthonormal span.
pub(crate) fn m_span(
    ctx: &WeightContext,
    levels: usize,
    vectors: &[&StepFunction],
) -> Result<DMatrix<f64>, KgsError> {
    let order = ColorOrder::rainbow(ctx.graph().k());
    let table = order_table(ctx, &order, levels)?;
    let chain = scale_chain(ctx, &order, levels);
    let x = &ctx.spectral().x;
    let weights: Vec<f64> = table
        .paths()
        .iter()
        .map(|p| (x[p.source()] / chain[levels]).sqrt())
        .collect();
    let mut m = DMatrix::<f64>::zeros(table.len_paths(), vectors.len());
    for (j, f) in vectors.iter().enumerate() {
        assert_eq!(f.levels, levels, "span vectors must share one length");
        for (i, w) in weights.iter().enumerate() {
            m[(i, j)] = f.coeffs[i] * w;
        }
    }
    Ok(orthonormal_span(&m, SPAN_RANK_TOL))
}

/// Check that the eigenspaces of the Laplace-type operator tile the
/// wavelet space `W_n`, and that the depth-0 space splits into constants
/// plus vertex differences.  Reports dimension identities, principal
/// angles between the spans, the per-eigenspace Rayleigh quotients at
/// `s_probe`, and the worst eigen-residual.  Requires the product of the
/// colour matrices to be irreducible, since that is what identifies the
/// trace measure in the eigenspace normalization with the cylinder
/// measure.
pub fn verify_refinement(
    ctx: &WeightContext,
    n: usize,
    s_probe: f64,
) -> Result<RefinementReport, KgsError> {
    ctx.require_diameter()?;
    let g = ctx.graph();
    if !g.product_irreducible() {
        return Err(KgsError::NotAdmitted {
            check: "irreducible colour-matrix product".to_string(),
            detail: "eigenspace normalization uses the cylinder measure, which is only \
                     the trace measure when the product matrix is irreducible"
                .to_string(),
        });
    }
    let k = g.k();
    let wavelets = wavelet_basis(ctx, n)?;
    let target = (n + 1) * k;

    let mut eigen_dims = Vec::new();
    let mut eigenvalues = Vec::new();
    let mut refined: Vec<StepFunction> = Vec::new();
    let mut max_eigen_residual = 0.0f64;
    let mut max_rayleigh_spread = 0.0f64;
    for t in 0..k {
        let labels = rainbow_table(ctx, n * k + t)?;
        for gamma in labels.paths() {
            let basis = eigenspace_basis(ctx, &EigenspaceId::Path(gamma.clone()))?;
            eigen_dims.push((basis.label.clone(), basis.dim()));
            let mut rayleighs = Vec::with_capacity(basis.dim());
            for f in &basis.vectors {
                let df = laplacian_apply(ctx, s_probe, f)?;
                let den = inner(ctx, f, f)?;
                let lam = inner(ctx, f, &df)? / den;
                let mut resid = df.clone();
                resid.add_scaled(f, -lam)?;
                let rel = (inner(ctx, &resid, &resid)? / den).sqrt();
                max_eigen_residual = max_eigen_residual.max(rel);
                rayleighs.push(lam);
                refined.push(f.refine(ctx, target)?);
            }
            let spread = rayleighs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
                - rayleighs.iter().cloned().fold(f64::INFINITY, f64::min);
            max_rayleigh_spread = max_rayleigh_spread.max(spread);
            eigenvalues.push((basis.label.clone(), rayleighs[0]));
        }
    }

    let span_w = m_span(
        ctx,
        target,
        &wavelets.vectors.iter().collect::<Vec<_>>(),
    )?;
    let span_e = m_span(ctx, target, &refined.iter().collect::<Vec<_>>())?;
    let angle = max_principal_angle(&span_w, &span_e);

    // depth-0 split: constants plus vertex differences against all vertex
    // cylinders
    let e_minus = eigenspace_basis(ctx, &EigenspaceId::MinusOne)?;
    let e_zero = eigenspace_basis(ctx, &EigenspaceId::Zero)?;
    let mut v0_vectors: Vec<StepFunction> = Vec::new();
    for v in 0..g.num_vertices() {
        v0_vectors.push(StepFunction::indicator(ctx, &FinitePath::vertex(v))?);
    }
    let split: Vec<&StepFunction> = e_minus.vectors.iter().chain(&e_zero.vectors).collect();
    let span_v0 = m_span(ctx, 0, &v0_vectors.iter().collect::<Vec<_>>())?;
    let span_split = m_span(ctx, 0, &split)?;
    let v0_angle = max_principal_angle(&span_v0, &span_split);

    Ok(RefinementReport {
        n,
        s_probe,
        wavelet_dim: wavelets.dim(),
        eigen_dim_total: eigen_dims.iter().map(|(_, d)| d).sum(),
        eigen_dims,
        eigenvalues,
        max_principal_angle: angle,
        v0_split_angle: v0_angle,
        max_eigen_residual,
        max_rayleigh_spread,
        pair_convention: "coupling constants sum over ordered pairs of distinct extensions; \
                          each unordered pair is counted twice"
            .to_string(),
    })
}
