//! Bratteli diagrams of the towers `P_n ⊂ P_{n+1}` and `Q_n ⊂ Q_{n+1}`,
//! spectral norms with certified bounds, and the amenability verdicts.
//!
//! `Q`-tower diagrams for explicit group actions come from exact center
//! splitting of the orbit-sum algebra: the center is the exact nullspace of
//! the commutator system; its minimal idempotents are Lagrange polynomials
//! of a generic self-adjoint central element whose eigenvalues are
//! recovered from float hints and verified exactly. Inclusion
//! multiplicities then reduce to traces of projections (trace = rank).
//! For rooted-tree oracles the diagram is combinatorial (profile extension)
//! and cross-checked against the Temperley-Lieb pattern.

use crate::boxes::{BoxElement, PathModel};
use crate::graph::{GraphError, Sign, VertexId, WeightedGraph};
use crate::la;
use crate::oracle;
use crate::scalars::{QScalar, Scalar};
use crate::symmetry::{self, SymmetryOracle};
use nalgebra::DMatrix;
use num::{BigInt, BigRational, FromPrimitive, Signed, ToPrimitive};
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("matrix has a negative entry")]
    NotNonnegative,
    #[error("center split failed: {0}")]
    CenterSplitFailure(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Sym(#[from] symmetry::SymError),
    #[error(transparent)]
    Box(#[from] crate::boxes::BoxError),
}

/// One simple summand of a finite-dimensional semisimple algebra.
#[derive(Debug, Clone, Serialize)]
pub struct Summand {
    pub label: String,
    pub dim: usize,
    /// Normalized trace of a minimal projection (approximate value; exact
    /// in field mode whenever the underlying data is exact).
    pub trace_weight: f64,
}

/// Bratteli diagram of one inclusion step.
#[derive(Debug, Clone, Serialize)]
pub struct BrattelliDiagram {
    pub level_n_summands: Vec<Summand>,
    pub level_np1_summands: Vec<Summand>,
    /// `multiplicity[i][j]` = multiplicity of summand `i` (level n) inside
    /// summand `j` (level n+1).
    pub multiplicity: Vec<Vec<u64>>,
    /// Whether the splitting was exact over the working field.
    pub exact: bool,
}

impl BrattelliDiagram {
    /// Dimension consistency `sum_i m_ij d_i <= d'_j` (equality on unital
    /// inclusions onto interior blocks).
    pub fn dims_consistent(&self) -> bool {
        (0..self.level_np1_summands.len()).all(|j| {
            let sum: u64 = self
                .multiplicity
                .iter()
                .enumerate()
                .map(|(i, row)| row[j] * self.level_n_summands[i].dim as u64)
                .sum();
            sum <= self.level_np1_summands[j].dim as u64
        })
    }

    /// Trace consistency `w_i = sum_j m_ij w'_j` within `tol`.
    pub fn traces_consistent(&self, tol: f64) -> bool {
        self.level_n_summands.iter().enumerate().all(|(i, s)| {
            let rhs: f64 = self.multiplicity[i]
                .iter()
                .enumerate()
                .map(|(j, &m)| m as f64 * self.level_np1_summands[j].trace_weight)
                .sum();
            (s.trace_weight - rhs).abs() <= tol * (1.0 + s.trace_weight.abs())
        })
    }

    /// Operator norm of the multiplicity matrix (largest singular value).
    pub fn norm(&self) -> f64 {
        let rows = self.multiplicity.len();
        let cols = self.level_np1_summands.len();
        if rows == 0 || cols == 0 {
            return 0.0;
        }
        let m = DMatrix::from_fn(rows, cols, |i, j| self.multiplicity[i][j] as f64);
        bipartite_norm(&m).lower
    }
}

/// Bratteli diagram of `P_n+ ⊂ P_{n+1}+`: blocks indexed by `(v, w)` with
/// dimension `|C_n(v,w)|`; multiplicity into `(v, w')` equals the number of
/// edges `w -- w'`. On truncated graphs only blocks with `v` at distance
/// more than `n+1` from the boundary are listed.
pub fn bratteli_p(g: &WeightedGraph, n: usize) -> Result<BrattelliDiagram, SpectralError> {
    let weights = crate::graph::vertex_weights(g, 0)?;
    let mut level_n: Vec<(VertexId, VertexId)> = Vec::new();
    let mut level_np1: Vec<(VertexId, VertexId)> = Vec::new();
    let mut dims_n: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();
    let mut dims_np1: BTreeMap<(VertexId, VertexId), usize> = BTreeMap::new();

    for v in g.even_vertices() {
        if let Some(r) = g.interior_radius(v) {
            if n + 1 > r {
                continue;
            }
        }
        for (w, d) in path_counts_from(g, v, n) {
            if d > 0 {
                level_n.push((v, w));
                dims_n.insert((v, w), d);
            }
        }
        for (w, d) in path_counts_from(g, v, n + 1) {
            if d > 0 {
                level_np1.push((v, w));
                dims_np1.insert((v, w), d);
            }
        }
    }
    let delta = g.delta().to_f64();
    let summand = |(v, w): (VertexId, VertexId), m: usize, dim: usize| -> Summand {
        let mu_ratio = weights.get(w).to_f64() / weights.get(v).to_f64();
        Summand {
            label: format!("({},{})", g.vertex_name(v), g.vertex_name(w)),
            dim,
            trace_weight: mu_ratio / delta.powi(m as i32),
        }
    };
    let mut mult = vec![vec![0u64; level_np1.len()]; level_n.len()];
    for (i, &(v, w)) in level_n.iter().enumerate() {
        for (j, &(v2, w2)) in level_np1.iter().enumerate() {
            if v != v2 {
                continue;
            }
            let e = g
                .incident(w)
                .iter()
                .filter(|&&(_, other)| other == w2)
                .count();
            mult[i][j] = e as u64;
        }
    }
    Ok(BrattelliDiagram {
        level_n_summands: level_n
            .iter()
            .map(|&k| summand(k, n, dims_n[&k]))
            .collect(),
        level_np1_summands: level_np1
            .iter()
            .map(|&k| summand(k, n + 1, dims_np1[&k]))
            .collect(),
        multiplicity: mult,
        exact: true,
    })
}

fn path_counts_from(g: &WeightedGraph, v: VertexId, n: usize) -> BTreeMap<VertexId, usize> {
    let mut counts: BTreeMap<VertexId, usize> = BTreeMap::new();
    counts.insert(v, 1);
    for _ in 0..n {
        let mut next: BTreeMap<VertexId, usize> = BTreeMap::new();
        for (&u, &c) in &counts {
            for &(_, w) in g.incident(u) {
                *next.entry(w).or_insert(0) += c;
            }
        }
        counts = next;
    }
    counts
}

/// A fixed-point algebra `Q_n` presented by its orbit-sum basis with exact
/// integer structure constants.
struct OrbitAlgebra {
    basis: Vec<BoxElement<QScalar>>,
    /// key entry of each basis element (orbit sums have disjoint supports)
    key_of: Vec<(u32, u32)>,
    unit: Vec<QScalar>,
}

impl OrbitAlgebra {
    fn build(
        model: &mut PathModel,
        basis: Vec<BoxElement<QScalar>>,
        n: usize,
        sign: Sign,
    ) -> Result<Self, SpectralError> {
        let key_of: Vec<(u32, u32)> = basis
            .iter()
            .map(|f| *f.entries.keys().next().expect("nonempty orbit"))
            .collect();
        let unit_box = model.unit::<QScalar>(n, sign)?;
        let unit = expand(&basis, &key_of, &unit_box)
            .ok_or_else(|| SpectralError::CenterSplitFailure("unit not in span".into()))?;
        Ok(OrbitAlgebra { basis, key_of, unit })
    }

    fn dim(&self) -> usize {
        self.basis.len()
    }

    fn realize(&self, coeffs: &[QScalar]) -> BoxElement<QScalar> {
        let mut out = BoxElement::zero(self.basis[0].n, self.basis[0].sign);
        for (c, f) in coeffs.iter().zip(&self.basis) {
            if !c.is_zero() {
                out = out.add(&f.scale(c)).expect("same shape");
            }
        }
        out
    }
}

/// Expand a box element in the orbit basis by reading the coefficient at
/// each orbit's key entry; `None` if the remainder is nonzero.
fn expand(
    basis: &[BoxElement<QScalar>],
    key_of: &[(u32, u32)],
    x: &BoxElement<QScalar>,
) -> Option<Vec<QScalar>> {
    let mut coeffs = Vec::with_capacity(basis.len());
    let mut rest = x.clone();
    for (f, key) in basis.iter().zip(key_of) {
        let c = rest.entries.get(key).cloned().unwrap_or_else(QScalar::zero);
        if !c.is_zero() {
            rest = rest.sub(&f.scale(&c)).expect("same shape");
        }
        coeffs.push(c);
    }
    if rest.is_zero() {
        Some(coeffs)
    } else {
        None
    }
}

/// Exact minimal central idempotents of the orbit algebra, or an error for
/// the approximate fallback.
fn split_center(
    model: &mut PathModel,
    alg: &OrbitAlgebra,
) -> Result<Vec<BoxElement<QScalar>>, SpectralError> {
    let r = alg.dim();
    // structure constants c[i][j] = coefficients of f_i f_j
    let mut stc: Vec<Vec<Vec<QScalar>>> = Vec::with_capacity(r);
    for i in 0..r {
        let mut row = Vec::with_capacity(r);
        for j in 0..r {
            let p = model.mul(&alg.basis[i], &alg.basis[j])?;
            let coeffs = expand(&alg.basis, &alg.key_of, &p).ok_or_else(|| {
                SpectralError::CenterSplitFailure("orbit span not product-closed".into())
            })?;
            row.push(coeffs);
        }
        stc.push(row);
    }
    // center: x with sum_i x_i (c[i][j][k] - c[j][i][k]) = 0 for all j,k
    let mut rows: la::Matrix = Vec::new();
    for j in 0..r {
        for k in 0..r {
            let mut row = Vec::with_capacity(r);
            for i in 0..r {
                row.push(
                    stc[i][j][k]
                        .checked_sub(&stc[j][i][k])
                        .expect("field"),
                );
            }
            rows.push(row);
        }
    }
    let center = la::nullspace(&rows);
    let c = center.len();
    if c == 0 {
        return Err(SpectralError::CenterSplitFailure("trivial center".into()));
    }
    if c == 1 {
        // simple algebra: the unit is the only minimal central idempotent
        return Ok(vec![alg.realize(&alg.unit)]);
    }

    // generic self-adjoint central element; retry with several coefficient
    // choices until the eigenvalues separate
    for attempt in 0..6u64 {
        let mut coeffs = vec![QScalar::zero(); r];
        for (i, z) in center.iter().enumerate() {
            let a = QScalar::from_int((1 + i as i64) * (1 + attempt as i64) + (i as i64).pow(2));
            for (k, zk) in z.iter().enumerate() {
                coeffs[k] = coeffs[k]
                    .checked_add(&a.checked_mul(zk).expect("field"))
                    .expect("field");
            }
        }
        let zeta_raw = alg.realize(&coeffs);
        let zeta = zeta_raw.add(&zeta_raw.adjoint()).expect("same shape");
        let Some(zeta_coeffs) = expand(&alg.basis, &alg.key_of, &zeta) else {
            continue;
        };
        // regular representation of zeta on the center
        let mut reg: la::Matrix = vec![vec![QScalar::zero(); c]; c];
        let mut center_matrix: la::Matrix = vec![vec![QScalar::zero(); c]; r];
        for (k, z) in center.iter().enumerate() {
            for (i, zi) in z.iter().enumerate() {
                center_matrix[i][k] = zi.clone();
            }
        }
        let mut ok = true;
        for (k, z) in center.iter().enumerate() {
            // zeta * z_k in basis coordinates
            let mut prod = vec![QScalar::zero(); r];
            for i in 0..r {
                if zeta_coeffs[i].is_zero() {
                    continue;
                }
                for j in 0..r {
                    if z[j].is_zero() {
                        continue;
                    }
                    let term = zeta_coeffs[i]
                        .checked_mul(&z[j])
                        .expect("field");
                    for (kk, cc) in stc[i][j].iter().enumerate() {
                        if !cc.is_zero() {
                            prod[kk] = prod[kk]
                                .checked_add(&term.checked_mul(cc).expect("field"))
                                .expect("field");
                        }
                    }
                }
            }
            // express prod in the center basis
            match la::solve(&center_matrix, &prod) {
                Some(x) => {
                    for (i, xi) in x.into_iter().enumerate() {
                        reg[i][k] = xi;
                    }
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            continue;
        }
        // float eigenvalue hints
        let m = DMatrix::from_fn(c, c, |i, j| reg[i][j].to_f64());
        let hints: Vec<f64> = m
            .clone()
            .schur()
            .eigenvalues()
            .map(|v| v.iter().copied().collect())
            .unwrap_or_default();
        if hints.len() != c {
            continue;
        }
        let Some(eigs) = verify_eigenvalues(&reg, &hints, model.graph().field_d()) else {
            continue;
        };
        let mut distinct = eigs.clone();
        distinct.dedup();
        if distinct.len() != c {
            continue; // not generic enough, retry
        }
        // Lagrange idempotents e_i = prod_{j != i} (zeta - l_j) / (l_i - l_j)
        let unit = alg.realize(&alg.unit);
        let mut idems = Vec::with_capacity(c);
        let mut good = true;
        for (i, li) in distinct.iter().enumerate() {
            let mut e = unit.clone();
            for (j, lj) in distinct.iter().enumerate() {
                if i == j {
                    continue;
                }
                let shifted = zeta.sub(&unit.scale(lj)).expect("shape");
                let denom = li.checked_sub(lj).expect("field");
                let factor = shifted.scale(&denom.checked_inv().expect("distinct"));
                e = model.mul(&e, &factor)?;
            }
            // verify idempotent and self-adjointness
            let sq = model.mul(&e, &e)?;
            if sq != e || e.adjoint() != e {
                good = false;
                break;
            }
            idems.push(e);
        }
        if !good {
            continue;
        }
        // partition of unity
        let mut total = BoxElement::zero(unit.n, unit.sign);
        for e in &idems {
            total = total.add(e).expect("shape");
        }
        if total != unit {
            continue;
        }
        return Ok(idems);
    }
    Err(SpectralError::CenterSplitFailure(
        "no generic central element separated the summands".into(),
    ))
}

/// Verify float eigenvalue hints exactly: rational reconstruction first,
/// then quadratic completion within `Q(sqrt(d))` from hint pairs. Returns
/// the full verified multiset (sorted) or None.
fn verify_eigenvalues(reg: &la::Matrix, hints: &[f64], d: u64) -> Option<Vec<QScalar>> {
    let c = reg.len();
    let mut found: Vec<QScalar> = Vec::new();
    let mut claimed = 0usize;
    let mut candidates: Vec<QScalar> = Vec::new();
    for &h in hints {
        if let Some(q) = reconstruct_rational(h, 1e-7) {
            candidates.push(q);
        }
    }
    if d != 1 {
        for (i, &a) in hints.iter().enumerate() {
            for &b in hints.iter().skip(i + 1) {
                let (Some(t), Some(nm)) = (reconstruct_rational(a + b, 1e-6), reconstruct_rational(a * b, 1e-6))
                else {
                    continue;
                };
                // roots of x^2 - t x + nm, if they live in Q(sqrt d)
                let disc = t
                    .checked_mul(&t)
                    .ok()?
                    .checked_sub(&nm.checked_mul(&QScalar::from_int(4)).ok()?)
                    .ok()?;
                if let Some(s) = disc.sqrt_in_field_of(d) {
                    let two_inv = QScalar::from_ratio(1, 2);
                    let r1 = t.checked_add(&s).ok()?.checked_mul(&two_inv).ok()?;
                    let r2 = t.checked_sub(&s).ok()?.checked_mul(&two_inv).ok()?;
                    candidates.push(r1);
                    candidates.push(r2);
                }
            }
        }
    }
    candidates.sort_by(|x, y| x.partial_cmp(y).unwrap());
    candidates.dedup();
    for cand in candidates {
        // exact check: nullspace of (reg - cand I) nonzero
        let mut shifted = reg.clone();
        for i in 0..c {
            shifted[i][i] = shifted[i][i].checked_sub(&cand).ok()?;
        }
        let ns = la::nullspace(&shifted);
        if !ns.is_empty() {
            for _ in 0..ns.len() {
                found.push(cand.clone());
            }
            claimed += ns.len();
        }
    }
    if claimed == c {
        found.sort_by(|x, y| x.partial_cmp(y).unwrap());
        Some(found)
    } else {
        None
    }
}

/// Nearest rational with bounded denominator via continued fractions,
/// accepted only within `tol`.
pub fn reconstruct_rational(x: f64, tol: f64) -> Option<QScalar> {
    if !x.is_finite() {
        return None;
    }
    let mut a = x;
    let mut h0: i128 = 0;
    let mut h1: i128 = 1;
    let mut k0: i128 = 1;
    let mut k1: i128 = 0;
    for _ in 0..40 {
        let ai = a.floor();
        if ai.abs() > 1e15 {
            return None;
        }
        let ai_int = ai as i128;
        let h2 = ai_int.checked_mul(h1)?.checked_add(h0)?;
        let k2 = ai_int.checked_mul(k1)?.checked_add(k0)?;
        if k2 == 0 {
            return None;
        }
        let approx = h2 as f64 / k2 as f64;
        if (approx - x).abs() <= tol * (1.0 + x.abs()) {
            let num = BigInt::from_i128(h2)?;
            let den = BigInt::from_i128(k2)?;
            let rat = BigRational::new(num, den);
            let q = QScalar::new(rat, BigRational::from_integer(BigInt::from(0)), 1).ok()?;
            return Some(q);
        }
        if k2.abs() > 1_000_000_000 {
            return None;
        }
        let frac = a - ai;
        if frac.abs() < 1e-18 {
            break;
        }
        a = 1.0 / frac;
        h0 = h1;
        h1 = h2;
        k0 = k1;
        k1 = k2;
    }
    None
}

/// Concrete matrix trace of a box element (sum of diagonal entries); for a
/// projection this equals its rank in the path representation.
fn concrete_trace(x: &BoxElement<QScalar>) -> Option<BigRational> {
    let mut acc = QScalar::zero();
    for (&(a, b), v) in &x.entries {
        if a == b {
            acc = acc.checked_add(v).ok()?;
        }
    }
    if acc.is_rational() {
        Some(acc.rational_part().clone())
    } else {
        None
    }
}

fn as_usize(r: &BigRational) -> Option<usize> {
    if r.is_integer() && !r.is_negative() {
        r.to_integer().to_usize()
    } else {
        None
    }
}

/// Scalar value of `tr_n` on a `G`-invariant element: the P0 function must be
/// constant over interior vertices of the relevant parity.
fn scalar_tr(
    model: &mut PathModel,
    x: &BoxElement<QScalar>,
) -> Result<QScalar, SpectralError> {
    let g = model.graph_arc();
    let (_, _, tr) = model.traces(x)?;
    let verts: Vec<VertexId> = match tr.sign {
        Sign::Plus => g.even_vertices().filter(|&v| g.is_interior(v)).collect(),
        Sign::Minus => g.odd_vertices().filter(|&v| g.is_interior(v)).collect(),
    };
    tr.constant_over(&verts)
        .ok_or_else(|| SpectralError::CenterSplitFailure("trace not constant".into()))
}

/// Bratteli diagram of `Q_n ⊂ Q_{n+1}` for an explicit action, by exact
/// center splitting; falls back to `bratteli_p` for the trivial action and
/// to the combinatorial profile diagram for tree oracles.
pub fn bratteli_q(
    g: &WeightedGraph,
    s: &SymmetryOracle,
    n: usize,
) -> Result<BrattelliDiagram, SpectralError> {
    match s {
        SymmetryOracle::Explicit(action) if action.gens.is_empty() => bratteli_p(g, n),
        SymmetryOracle::Explicit(_) => bratteli_q_explicit(g, s, n),
        SymmetryOracle::RootedTree(t) => Ok(bratteli_q_tree(t, n)),
    }
}

fn bratteli_q_explicit(
    g: &WeightedGraph,
    s: &SymmetryOracle,
    n: usize,
) -> Result<BrattelliDiagram, SpectralError> {
    let arc = Arc::new(g.clone());
    let mut model = PathModel::new(Arc::clone(&arc));
    let data_n = level_summands(g, s, &mut model, n)?;
    let data_np1 = level_summands(g, s, &mut model, n + 1)?;

    // m_ij = ConcTr(include(z_i) z'_j) / (d_i * m^path_j)
    let mut mult = vec![vec![0u64; data_np1.idems.len()]; data_n.idems.len()];
    for (i, zi) in data_n.idems.iter().enumerate() {
        let inc = model.include(zi)?;
        for (j, zj) in data_np1.idems.iter().enumerate() {
            let prod = model.mul(&inc, zj)?;
            let tr = concrete_trace(&prod).ok_or_else(|| {
                SpectralError::CenterSplitFailure("projection trace not rational".into())
            })?;
            let rank = as_usize(&tr).ok_or_else(|| {
                SpectralError::CenterSplitFailure("projection trace not integral".into())
            })?;
            let denom = data_n.dims[i] * data_np1.path_mult[j];
            if denom == 0 || rank % denom != 0 {
                return Err(SpectralError::CenterSplitFailure(format!(
                    "multiplicity not integral: rank {} over {}",
                    rank, denom
                )));
            }
            mult[i][j] = (rank / denom) as u64;
        }
    }
    Ok(BrattelliDiagram {
        level_n_summands: data_n.summands,
        level_np1_summands: data_np1.summands,
        multiplicity: mult,
        exact: true,
    })
}

struct LevelData {
    idems: Vec<BoxElement<QScalar>>,
    dims: Vec<usize>,
    path_mult: Vec<usize>,
    summands: Vec<Summand>,
}

fn level_summands(
    g: &WeightedGraph,
    s: &SymmetryOracle,
    model: &mut PathModel,
    n: usize,
) -> Result<LevelData, SpectralError> {
    let basis: Vec<BoxElement<QScalar>> =
        symmetry::fixed_point_basis(g, s, model, n, Sign::Plus)?;
    let alg = OrbitAlgebra::build(model, basis, n, Sign::Plus)?;
    let idems = split_center(model, &alg)?;
    let mut dims = Vec::new();
    let mut path_mult = Vec::new();
    let mut summands = Vec::new();
    for (k, z) in idems.iter().enumerate() {
        // dim of z Q: exact rank of {z f_j} in orbit coordinates
        let mut rows: la::Matrix = Vec::new();
        for f in &alg.basis {
            let zf = model.mul(z, f)?;
            let coeffs = expand(&alg.basis, &alg.key_of, &zf).ok_or_else(|| {
                SpectralError::CenterSplitFailure("compression leaves span".into())
            })?;
            rows.push(coeffs);
        }
        let dim_zq = la::rank(&rows);
        let d = integer_sqrt(dim_zq).ok_or_else(|| {
            SpectralError::CenterSplitFailure(format!("summand dim {} not a square", dim_zq))
        })?;
        let conc = concrete_trace(z)
            .and_then(|t| as_usize(&t))
            .ok_or_else(|| SpectralError::CenterSplitFailure("idempotent trace".into()))?;
        if d == 0 || conc % d != 0 {
            return Err(SpectralError::CenterSplitFailure(
                "path multiplicity not integral".into(),
            ));
        }
        let m_path = conc / d;
        // trace weight: scalar tr(z)/d
        let str_z = scalar_tr(model, z)?;
        let w = str_z.to_f64() / d as f64;
        dims.push(d);
        path_mult.push(m_path);
        summands.push(Summand {
            label: format!("Q{}#{}", n, k),
            dim: d,
            trace_weight: w,
        });
    }
    Ok(LevelData { idems, dims, path_mult, summands })
}

fn integer_sqrt(n: usize) -> Option<usize> {
    let r = (n as f64).sqrt().round() as usize;
    for c in [r.saturating_sub(1), r, r + 1] {
        if c * c == n {
            return Some(c);
        }
    }
    None
}

/// Combinatorial Bratteli diagram of the tree oracle's classes: summands are
/// walk-profile heights with ballot-number dimensions, multiplicity 1
/// between adjacent heights, Markov trace weights. Matches the
/// Temperley-Lieb pattern by construction and is cross-checked against the
/// independent TL oracle in the suites.
fn bratteli_q_tree(t: &crate::symmetry::RootedTreeOracle, n: usize) -> BrattelliDiagram {
    let delta = ((t.r_plus * t.r_minus) as f64).sqrt();
    let level = |m: usize| -> Vec<Summand> {
        oracle::tl_summands(m)
            .into_iter()
            .map(|(h, dim)| Summand {
                label: format!("h{}", h),
                dim,
                trace_weight: oracle::tl_trace_weight(m, h, delta),
            })
            .collect()
    };
    let a = oracle::tl_summands(n);
    let b = oracle::tl_summands(n + 1);
    let mult = a
        .iter()
        .map(|&(h, _)| {
            b.iter()
                .map(|&(h2, _)| u64::from(h2 + 1 == h || h2 == h + 1))
                .collect()
        })
        .collect();
    BrattelliDiagram {
        level_n_summands: level(n),
        level_np1_summands: level(n + 1),
        multiplicity: mult,
        exact: false,
    }
}

/// Certified bounds on a spectral norm.
#[derive(Debug, Clone, Serialize)]
pub struct NormEstimate {
    pub lower: f64,
    pub upper: Option<f64>,
    pub iterations: usize,
    pub radius_used: Option<usize>,
}

/// Power iteration with Rayleigh-quotient lower bounds and Collatz-Wielandt
/// upper bounds on the symmetrized operator; both certified for
/// non-negative matrices (up to float rounding).
pub fn bipartite_norm(b: &DMatrix<f64>) -> NormEstimate {
    if b.iter().any(|&x| x < 0.0) {
        return NormEstimate { lower: f64::NAN, upper: None, iterations: 0, radius_used: None };
    }
    let (rows, cols) = b.shape();
    if rows == 0 || cols == 0 || b.iter().all(|&x| x == 0.0) {
        return NormEstimate { lower: 0.0, upper: Some(0.0), iterations: 0, radius_used: None };
    }
    // symmetrized operator S = [[0, B], [B^T, 0]] applied implicitly
    let n = rows + cols;
    let mut v = nalgebra::DVector::<f64>::from_element(n, 1.0);
    let apply = |v: &nalgebra::DVector<f64>| -> nalgebra::DVector<f64> {
        let top = b * v.rows(rows, cols);
        let bottom = b.transpose() * v.rows(0, rows);
        let mut out = nalgebra::DVector::zeros(n);
        out.rows_mut(0, rows).copy_from(&top);
        out.rows_mut(rows, cols).copy_from(&bottom);
        out
    };
    let mut lower: f64 = 0.0;
    let mut upper = f64::INFINITY;
    let mut iterations = 0usize;
    for it in 0..20_000 {
        iterations = it + 1;
        let w = apply(&v);
        let rayleigh = v.dot(&w) / v.dot(&v);
        lower = lower.max(rayleigh);
        // Collatz-Wielandt on strictly positive iterate
        if v.iter().all(|&x| x > 0.0) {
            let ratio = w
                .iter()
                .zip(v.iter())
                .map(|(&wi, &vi)| wi / vi)
                .fold(0.0f64, f64::max);
            upper = upper.min(ratio);
        }
        let norm = w.norm();
        if norm == 0.0 {
            upper = upper.min(lower);
            break;
        }
        // keep strict positivity: mix in a little of the previous iterate
        v = (w / norm) * 0.999 + &v * (0.001 / v.norm());
        if upper - lower < 1e-12 * (1.0 + upper.abs()) {
            break;
        }
    }
    NormEstimate {
        lower,
        upper: if upper.is_finite() { Some(upper) } else { None },
        iterations,
        radius_used: None,
    }
}

/// Full bipartite adjacency matrix (even rows, odd columns) with edge
/// multiplicities.
pub fn adjacency_matrix(g: &WeightedGraph) -> DMatrix<f64> {
    let ne = g.even_count();
    let no = g.odd_count();
    let mut m = DMatrix::zeros(ne, no);
    for e in g.edges() {
        let (s, t, _) = g.edge(e);
        m[(s as usize, (t as usize) - ne)] += 1.0;
    }
    m
}

/// Norm of the graph itself: exact-tolerance bounds for finite graphs, the
/// closed form `sqrt(r+ - 1) + sqrt(r- - 1)` for biregular trees (with the
/// monotone ball lower bound as a cross-check), lower bounds only otherwise.
pub fn graph_norm(g: &WeightedGraph, s: &SymmetryOracle) -> NormEstimate {
    match s {
        SymmetryOracle::RootedTree(t) => {
            let closed_form = ((t.r_plus - 1) as f64).sqrt() + ((t.r_minus - 1) as f64).sqrt();
            let ball = bipartite_norm(&adjacency_matrix(g));
            NormEstimate {
                lower: ball.lower,
                upper: Some(closed_form),
                iterations: ball.iterations,
                radius_used: Some(t.radius),
            }
        }
        _ => {
            let mut est = bipartite_norm(&adjacency_matrix(g));
            if g.is_truncated() {
                // truncation gives lower bounds only
                est.upper = None;
            }
            est
        }
    }
}

/// Norm of the Bratteli diagram `Delta_n` of `P_n ⊂ P_{n+1}` (max over the
/// per-vertex components, each a ball subgraph of the graph).
pub fn delta_n_norm(g: &WeightedGraph, n: usize) -> Result<f64, SpectralError> {
    let mut best: f64 = 0.0;
    let mut seen_any = false;
    for v in g.even_vertices() {
        if let Some(r) = g.interior_radius(v) {
            if n + 1 > r {
                continue;
            }
        }
        seen_any = true;
        // vertices within distance n+1 of v, split by parity
        let dist = g.distances_from(v);
        let evens: Vec<VertexId> = g
            .even_vertices()
            .filter(|&w| dist[w as usize].map_or(false, |d| d <= n + 1))
            .collect();
        let odds: Vec<VertexId> = g
            .odd_vertices()
            .filter(|&w| dist[w as usize].map_or(false, |d| d <= n + 1))
            .collect();
        let e_idx: BTreeMap<VertexId, usize> =
            evens.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let o_idx: BTreeMap<VertexId, usize> =
            odds.iter().enumerate().map(|(i, &w)| (w, i)).collect();
        let mut m = DMatrix::zeros(evens.len(), odds.len());
        for e in g.edges() {
            let (s0, t0, _) = g.edge(e);
            if let (Some(&i), Some(&j)) = (e_idx.get(&s0), o_idx.get(&t0)) {
                m[(i, j)] += 1.0;
            }
        }
        best = best.max(bipartite_norm(&m).lower);
    }
    if !seen_any {
        return Err(SpectralError::Graph(GraphError::TruncationTooSmall {
            needed: n + 1,
            radius: 0,
        }));
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
#[serde(tag = "verdict")]
pub enum Verdict {
    /// Certified upper bound `||Gamma|| < delta`, hence the fixed-point
    /// planar algebra is non-amenable (the Bratteli norms are dominated by
    /// the graph norm through the commuting-square inequality chain).
    NonAmenableCertified {
        graph_norm_upper: f64,
        delta: f64,
    },
    /// Finite graph with `||Gamma(Q)_n||` stabilizing at `delta` within
    /// tolerance; amenability observed, never certified for truncations.
    AmenableObserved {
        bratteli_norm: f64,
        delta: f64,
        stabilized_at: usize,
    },
    NotSubfactorPA,
    Inconclusive {
        best_lower: f64,
        best_upper: Option<f64>,
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct AmenabilityReport {
    pub verdict: Verdict,
    pub delta: f64,
    pub graph_norm: NormEstimate,
    pub bratteli_norms: Vec<f64>,
    pub delta_norms: Vec<f64>,
    pub chain_ok: bool,
}

/// Amenability diagnosis for the fixed-point planar algebra `Q = P^G`:
/// requires sphericality, then compares `||Gamma(Q)_n||`, `||Delta_n||`, and
/// `||Gamma||` against `delta`.
pub fn amenability_verdict(
    g: &WeightedGraph,
    s: &SymmetryOracle,
    n_max: usize,
) -> Result<AmenabilityReport, SpectralError> {
    let delta = g.delta().to_f64();
    let spherical = symmetry::check_spherical(g, s)?;
    if !spherical.candidate || !spherical.spherical {
        let gn = graph_norm(g, s);
        return Ok(AmenabilityReport {
            verdict: Verdict::NotSubfactorPA,
            delta,
            graph_norm: gn,
            bratteli_norms: Vec::new(),
            delta_norms: Vec::new(),
            chain_ok: true,
        });
    }
    let gn = graph_norm(g, s);
    let mut bratteli_norms = Vec::new();
    let mut delta_norms = Vec::new();
    let mut chain_ok = true;
    for n in 0..=n_max {
        let bq = bratteli_q(g, s, n)?;
        let qn = bq.norm();
        let dn = delta_n_norm(g, n)?;
        // ||Gamma(Q)_n|| <= ||Delta_n|| <= ||Gamma|| within 1e-9
        if qn > dn + 1e-9 {
            chain_ok = false;
        }
        if let Some(up) = gn.upper {
            if dn > up + 1e-9 {
                chain_ok = false;
            }
        }
        bratteli_norms.push(qn);
        delta_norms.push(dn);
    }
    let verdict = if let Some(up) = gn.upper {
        if up < delta - 1e-9 {
            Verdict::NonAmenableCertified { graph_norm_upper: up, delta }
        } else if !g.is_truncated() {
            // finite graph: amenable iff the Q-tower norms reach delta
            let last = *bratteli_norms.last().unwrap_or(&0.0);
            if (last - delta).abs() <= 1e-6 {
                Verdict::AmenableObserved {
                    bratteli_norm: last,
                    delta,
                    stabilized_at: n_max,
                }
            } else {
                Verdict::Inconclusive {
                    best_lower: last,
                    best_upper: gn.upper,
                    reason: "Bratteli norms below delta at the computed depth".into(),
                }
            }
        } else {
            Verdict::Inconclusive {
                best_lower: gn.lower,
                best_upper: gn.upper,
                reason: "truncated graph with ||Gamma|| = delta: amenability cannot be certified"
                    .into(),
            }
        }
    } else {
        Verdict::Inconclusive {
            best_lower: gn.lower,
            best_upper: None,
            reason: "no certified upper bound for the graph norm".into(),
        }
    };
    Ok(AmenabilityReport {
        verdict,
        delta,
        graph_norm: gn,
        bratteli_norms,
        delta_norms,
        chain_ok,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct DepthReport {
    pub double_cosets: usize,
    pub graph_finite: bool,
    pub finite_depth: bool,
    /// Distances realized by `g -> d(o, go)`; unbounded growth of this list
    /// with the truncation radius is the infinite-depth evidence.
    pub distance_witness: Vec<usize>,
}

/// Finite depth iff the graph is finite; reports the double-coset count and
/// the distance-map witness.
pub fn finite_depth_check(
    g: &WeightedGraph,
    s: &SymmetryOracle,
    o: VertexId,
) -> Result<DepthReport, SpectralError> {
    let stab = symmetry::stabilizer_data(g, s, o)?;
    let finite = !g.is_truncated();
    Ok(DepthReport {
        double_cosets: stab.double_cosets,
        graph_finite: finite,
        finite_depth: finite,
        distance_witness: stab.distance_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;

    #[test]
    fn bratteli_p_on_the_4_cycle() {
        let b = builders::diagonal_z2();
        let d0 = bratteli_p(&b.graph, 0).unwrap();
        // two even vertices, each a 1-dim block at level 0
        assert_eq!(d0.level_n_summands.len(), 2);
        assert!(d0.level_n_summands.iter().all(|s| s.dim == 1));
        // each includes into its two neighbor blocks with multiplicity 1
        assert_eq!(d0.level_np1_summands.len(), 4);
        for row in &d0.multiplicity {
            assert_eq!(row.iter().sum::<u64>(), 2);
        }
        assert!(d0.dims_consistent());
        assert!(d0.traces_consistent(1e-12));
    }

    #[test]
    fn bratteli_p_multi_edge() {
        let b = builders::multi_edge(3);
        let d0 = bratteli_p(&b.graph, 0).unwrap();
        assert_eq!(d0.level_n_summands.len(), 1);
        assert_eq!(d0.level_np1_summands.len(), 1);
        assert_eq!(d0.multiplicity[0][0], 3);
    }

    #[test]
    fn bratteli_p_tree_level1() {
        let b = builders::biregular_tree(3, 3, 4).unwrap();
        let d1 = bratteli_p(&b.graph, 1).unwrap();
        // multiplicities are all 1 on a simple tree
        for row in &d1.multiplicity {
            assert!(row.iter().all(|&m| m <= 1));
        }
        assert!(d1.dims_consistent());
    }

    #[test]
    fn bratteli_q_trivial_group_equals_p() {
        let b = builders::multi_edge(2);
        let s = SymmetryOracle::trivial();
        let q = bratteli_q(&b.graph, &s, 1).unwrap();
        let p = bratteli_p(&b.graph, 1).unwrap();
        assert_eq!(q.level_n_summands.len(), p.level_n_summands.len());
        assert_eq!(q.multiplicity, p.multiplicity);
    }

    #[test]
    fn bratteli_q_diagonal_level0() {
        let b = builders::diagonal_z2();
        let q = bratteli_q(&b.graph, &b.oracle, 0).unwrap();
        // Q0 = C  ->  Q1 = C^2 with multiplicities (1,1)
        assert_eq!(q.level_n_summands.len(), 1);
        assert_eq!(q.level_n_summands[0].dim, 1);
        assert_eq!(q.level_np1_summands.len(), 2);
        assert!(q.level_np1_summands.iter().all(|s| s.dim == 1));
        assert_eq!(q.multiplicity, vec![vec![1, 1]]);
        assert!(q.traces_consistent(1e-12));
        assert!(q.exact);
    }

    #[test]
    fn bratteli_q_diagonal_level1_norm_is_delta() {
        let b = builders::diagonal_z2();
        let q = bratteli_q(&b.graph, &b.oracle, 1).unwrap();
        // Q1 = C^2 -> Q2 = M2 + M2: all-ones multiplicity, norm 2
        assert_eq!(q.level_np1_summands.iter().map(|s| s.dim).collect::<Vec<_>>(), vec![2, 2]);
        assert_eq!(q.multiplicity, vec![vec![1, 1], vec![1, 1]]);
        assert!((q.norm() - 2.0).abs() < 1e-9);
        assert!(q.dims_consistent());
        assert!(q.traces_consistent(1e-12));
    }

    #[test]
    fn bratteli_q_tree_matches_tl_oracle() {
        let b = builders::biregular_tree(3, 3, 6).unwrap();
        for n in 1..=3 {
            let q = bratteli_q(&b.graph, &b.oracle, n).unwrap();
            let tl = oracle::tl_bratteli(n);
            let dims: Vec<usize> = q.level_n_summands.iter().map(|s| s.dim).collect();
            let tl_dims: Vec<usize> = tl.level_dims.iter().map(|&(_, d)| d).collect();
            assert_eq!(dims, tl_dims);
            assert_eq!(
                q.multiplicity,
                tl.multiplicity,
                "Pascal pattern at n={}",
                n
            );
            assert!(q.traces_consistent(1e-9));
            // orbit count from the oracle agrees with the summand dims
            let total: usize = dims.iter().map(|d| d * d).sum();
            assert_eq!(
                total,
                symmetry::fixed_point_dim(&b.graph, &b.oracle, n, Sign::Plus).unwrap()
            );
        }
    }

    #[test]
    fn norms_of_small_graphs() {
        let b = builders::diagonal_z2();
        let est = graph_norm(&b.graph, &SymmetryOracle::trivial());
        assert!((est.lower - 2.0).abs() < 1e-9);
        assert!((est.upper.unwrap() - 2.0).abs() < 1e-9);

        let single = builders::multi_edge(1);
        let est = graph_norm(&single.graph, &SymmetryOracle::trivial());
        assert!((est.lower - 1.0).abs() < 1e-12);
    }

    #[test]
    fn tree_norm_bounds() {
        let b = builders::biregular_tree(3, 3, 12).unwrap();
        let est = graph_norm(&b.graph, &b.oracle);
        let closed = 2.0 * 2.0f64.sqrt();
        assert_eq!(est.upper, Some(closed));
        assert!(est.lower >= 2.80, "ball lower bound {}", est.lower);
        assert!(est.lower <= closed + 1e-9);
        assert!(closed - est.lower < 0.03, "ball bound within 0.03");
    }

    #[test]
    fn verdicts() {
        let tree = builders::biregular_tree(3, 3, 8).unwrap();
        let rep = amenability_verdict(&tree.graph, &tree.oracle, 3).unwrap();
        assert!(matches!(rep.verdict, Verdict::NonAmenableCertified { .. }));
        assert!(rep.chain_ok);

        let diag = builders::diagonal_z2();
        let rep = amenability_verdict(&diag.graph, &diag.oracle, 4).unwrap();
        match rep.verdict {
            Verdict::AmenableObserved { bratteli_norm, delta, .. } => {
                assert!((bratteli_norm - delta).abs() < 1e-6);
            }
            other => panic!("expected AmenableObserved, got {:?}", other),
        }
        assert!(rep.chain_ok);

        // delta mismatched: flat-mu BH is not even spherical
        let flat = builders::bisch_haagerup_s3_flat_mu().unwrap();
        let rep = amenability_verdict(&flat.graph, &flat.oracle, 1).unwrap();
        assert_eq!(rep.verdict, Verdict::NotSubfactorPA);
    }

    #[test]
    fn depth_reports() {
        let diag = builders::diagonal_z2();
        let rep = finite_depth_check(&diag.graph, &diag.oracle, 0).unwrap();
        assert!(rep.finite_depth);
        assert_eq!(rep.double_cosets, 2);

        let tree = builders::biregular_tree(3, 3, 10).unwrap();
        let root = tree.graph.vertex_by_name("o").unwrap();
        let rep = finite_depth_check(&tree.graph, &tree.oracle, root).unwrap();
        assert!(!rep.finite_depth);
        assert!(rep.double_cosets >= 6);

        let single = builders::multi_edge(1);
        let rep = finite_depth_check(&single.graph, &SymmetryOracle::trivial(), 0).unwrap();
        assert!(rep.finite_depth);
        assert_eq!(rep.double_cosets, 1);
    }

    #[test]
    fn rational_reconstruction() {
        assert_eq!(reconstruct_rational(0.5, 1e-9).unwrap(), QScalar::from_ratio(1, 2));
        assert_eq!(reconstruct_rational(3.0, 1e-9).unwrap(), QScalar::from_int(3));
        assert_eq!(
            reconstruct_rational(-2.0 / 3.0, 1e-9).unwrap(),
            QScalar::from_ratio(-2, 3)
        );
    }
}
