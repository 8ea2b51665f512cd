//! Path-model box spaces `P_n^±` as block multi-matrix algebras.
//!
//! Elements are finitely supported over the matrix-unit index set `ST_n^±`
//! (pairs of equal-endpoint paths). A [`PathModel`] owns the enumerated path
//! sets level by level and implements the named tangles: multiplication,
//! adjoint, left/right traces, the normalized trace `tr_m`, inclusion,
//! conditional expectation, Jones projections, and the `Rev`/`sh`/`u_n`
//! tower of one-box unitaries.

use crate::graph::{enumerate_paths, enumerate_paths_from_starts_pub, GraphError, Path, PathSet, Sign, VertexId, WeightedGraph};
use crate::scalars::Scalar;
use std::collections::BTreeMap;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoxError {
    #[error("box sizes differ: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("box signs differ")]
    SignMismatch,
    #[error("element is not unitary")]
    NotUnitary,
    #[error("coefficient sqrt({0}) is not representable in the exact backend; use approximate mode")]
    ApproximateOnly(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Element of `P_n^sign` in the path-pair basis; entries indexed into the
/// model's `PathSet` at that level.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxElement<S> {
    pub n: usize,
    pub sign: Sign,
    pub entries: BTreeMap<(u32, u32), S>,
}

impl<S: Scalar> BoxElement<S> {
    pub fn zero(n: usize, sign: Sign) -> Self {
        BoxElement { n, sign, entries: BTreeMap::new() }
    }

    pub fn matrix_unit(n: usize, sign: Sign, a: u32, b: u32) -> Self {
        let mut entries = BTreeMap::new();
        entries.insert((a, b), S::one());
        BoxElement { n, sign, entries }
    }

    pub fn add_term(&mut self, key: (u32, u32), value: S) {
        let entry = self.entries.entry(key).or_insert_with(S::zero);
        *entry = entry.add(&value);
        if entry.is_zero() {
            self.entries.remove(&key);
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(k, v)| (*k, v.mul(c)))
            .filter(|(_, v)| !v.is_zero())
            .collect();
        BoxElement { n: self.n, sign: self.sign, entries }
    }

    pub fn add(&self, other: &Self) -> Result<Self, BoxError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (k, v) in &other.entries {
            out.add_term(*k, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, BoxError> {
        self.add(&other.scale(&S::one().neg()))
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// Adjoint: conj-transpose over the path-pair index.
    pub fn adjoint(&self) -> Self {
        let entries = self
            .entries
            .iter()
            .map(|(&(a, b), v)| ((b, a), v.conj()))
            .collect();
        BoxElement { n: self.n, sign: self.sign, entries }
    }

    fn check_shape(&self, other: &Self) -> Result<(), BoxError> {
        if self.n != other.n {
            return Err(BoxError::SizeMismatch(self.n, other.n));
        }
        if self.sign != other.sign {
            return Err(BoxError::SignMismatch);
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut keys: std::collections::BTreeSet<(u32, u32)> = self.entries.keys().copied().collect();
        keys.extend(other.entries.keys().copied());
        let mut m = 0.0f64;
        for k in keys {
            let a = self.entries.get(&k).map(|v| v.to_f64()).unwrap_or(0.0);
            let b = other.entries.get(&k).map(|v| v.to_f64()).unwrap_or(0.0);
            m = m.max((a - b).abs());
        }
        m
    }
}

/// Element of `P_0^sign`, identified with finitely supported functions on
/// `V^sign`.
#[derive(Debug, Clone, PartialEq)]
pub struct P0Element<S> {
    pub sign: Sign,
    pub values: BTreeMap<VertexId, S>,
}

impl<S: Scalar> P0Element<S> {
    pub fn zero(sign: Sign) -> Self {
        P0Element { sign, values: BTreeMap::new() }
    }

    pub fn add_term(&mut self, v: VertexId, value: S) {
        let entry = self.values.entry(v).or_insert_with(S::zero);
        *entry = entry.add(&value);
        if entry.is_zero() {
            self.values.remove(&v);
        }
    }

    pub fn get(&self, v: VertexId) -> S {
        self.values.get(&v).cloned().unwrap_or_else(S::zero)
    }

    /// The constant value, when the function is constant over `verts`.
    pub fn constant_over(&self, verts: &[VertexId]) -> Option<S> {
        let first = self.get(verts[0]);
        for &v in &verts[1..] {
            if self.get(v) != first {
                return None;
            }
        }
        Some(first)
    }
}

/// Path-model context: the weighted graph plus lazily enumerated path sets.
/// `based_at` restricts enumeration to paths from one vertex (the honest mode
/// for truncated balls).
pub struct PathModel {
    graph: Arc<WeightedGraph>,
    based_at: Option<VertexId>,
    levels: BTreeMap<(usize, Sign), PathSet>,
}

impl PathModel {
    pub fn new(graph: Arc<WeightedGraph>) -> Self {
        PathModel { graph, based_at: None, levels: BTreeMap::new() }
    }

    pub fn based(graph: Arc<WeightedGraph>, base: VertexId) -> Self {
        PathModel { graph, based_at: Some(base), levels: BTreeMap::new() }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    pub fn graph_arc(&self) -> Arc<WeightedGraph> {
        Arc::clone(&self.graph)
    }

    pub fn level(&mut self, n: usize, sign: Sign) -> Result<&PathSet, GraphError> {
        if !self.levels.contains_key(&(n, sign)) {
            let ps = match self.based_at {
                Some(v) => {
                    let starts = [v];
                    let base_sign = if self.graph.is_even(v) { Sign::Plus } else { Sign::Minus };
                    if base_sign == sign {
                        enumerate_paths_from_starts_pub(&self.graph, n, sign, &starts)?
                    } else {
                        enumerate_paths(&self.graph, n, sign)?
                    }
                }
                None => enumerate_paths(&self.graph, n, sign)?,
            };
            self.levels.insert((n, sign), ps);
        }
        Ok(self.levels.get(&(n, sign)).unwrap())
    }

    /// Identity of `P_n^sign` (sum of diagonal matrix units over enumerated
    /// paths; on truncated graphs this is the unit restricted to paths through
    /// interior vertices).
    pub fn unit<S: Scalar>(&mut self, n: usize, sign: Sign) -> Result<BoxElement<S>, BoxError> {
        let ps = self.level(n, sign)?;
        let mut out = BoxElement::zero(n, sign);
        for i in 0..ps.len() as u32 {
            out.entries.insert((i, i), S::one());
        }
        Ok(out)
    }

    /// Matrix-unit composition `e_{a,b} e_{c,d} = [b=c] e_{a,d}`, extended
    /// bilinearly.
    pub fn mul<S: Scalar>(
        &mut self,
        x: &BoxElement<S>,
        y: &BoxElement<S>,
    ) -> Result<BoxElement<S>, BoxError> {
        x.check_shape(y)?;
        let mut rows: BTreeMap<u32, Vec<(u32, &S)>> = BTreeMap::new();
        for (&(b, d), v) in &y.entries {
            rows.entry(b).or_default().push((d, v));
        }
        let mut out = BoxElement::zero(x.n, x.sign);
        for (&(a, b), xv) in &x.entries {
            if let Some(row) = rows.get(&b) {
                for &(d, yv) in row {
                    out.add_term((a, d), xv.mul(yv));
                }
            }
        }
        Ok(out)
    }

    /// Left trace, right trace, and the normalized trace `tr_n = delta^-n tau_r`.
    pub fn traces<S: Scalar>(
        &mut self,
        x: &BoxElement<S>,
    ) -> Result<(P0Element<S>, P0Element<S>, P0Element<S>), BoxError> {
        let tau_l = self.trace_left(x)?;
        let tau_r = self.trace_right(x)?;
        let delta_inv_n = self.delta_power::<S>(-(x.n as i64));
        let mut tr = P0Element::zero(tau_r.sign);
        for (&v, val) in &tau_r.values {
            tr.add_term(v, val.mul(&delta_inv_n));
        }
        Ok((tau_l, tau_r, tr))
    }

    /// `tau_l(e_{a,b}) = [a=b] mu(a-bar) e_{t(a)}`.
    pub fn trace_left<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<P0Element<S>, BoxError> {
        let g = self.graph_arc();
        let ps = self.level(x.n, x.sign)?;
        let sign_out = if x.n % 2 == 0 { x.sign } else { x.sign.flip() };
        let mut out = P0Element::zero(sign_out);
        for (&(a, b), v) in &x.entries {
            if a != b {
                continue;
            }
            let p = ps.path(a);
            let mu_bar = S::from_q(&p.mu(&g).checked_inv().expect("positive weights"));
            out.add_term(ps.end(a), v.mul(&mu_bar));
        }
        Ok(out)
    }

    /// `tau_r(e_{a,b}) = [a=b] mu(a) e_{s(a)}`.
    pub fn trace_right<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<P0Element<S>, BoxError> {
        let g = self.graph_arc();
        let ps = self.level(x.n, x.sign)?;
        let mut out = P0Element::zero(x.sign);
        for (&(a, b), v) in &x.entries {
            if a != b {
                continue;
            }
            let p = ps.path(a);
            let mu = S::from_q(&p.mu(&g));
            out.add_term(p.start, v.mul(&mu));
        }
        Ok(out)
    }

    pub fn delta_power<S: Scalar>(&self, k: i64) -> S {
        let delta = S::from_q(self.graph.delta());
        let mut acc = S::one();
        let base = if k >= 0 {
            delta
        } else {
            delta.inv().expect("delta > 0")
        };
        for _ in 0..k.unsigned_abs() {
            acc = acc.mul(&base);
        }
        acc
    }

    /// The standard inclusion `P_n ⊂ P_{n+1}`: `e_{a,b} -> sum_c e_{ac,bc}`
    /// over edges `c` leaving `t(a)`.
    pub fn include<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<BoxElement<S>, BoxError> {
        let g = self.graph_arc();
        let src = self.level(x.n, x.sign)?.clone();
        let tgt = self.level(x.n + 1, x.sign)?;
        let mut out = BoxElement::zero(x.n + 1, x.sign);
        for (&(a, b), v) in &x.entries {
            let pa = src.path(a);
            let pb = src.path(b);
            let end = src.end(a);
            if g.is_truncated() && !g.is_interior(end) {
                return Err(BoxError::Graph(GraphError::TruncationTooSmall {
                    needed: x.n + 1,
                    radius: x.n,
                }));
            }
            for &(e, _) in g.incident(end) {
                let mut qa = pa.clone();
                qa.edges.push(e);
                let mut qb = pb.clone();
                qb.edges.push(e);
                let ia = tgt.index_of(&qa).expect("extension enumerated");
                let ib = tgt.index_of(&qb).expect("extension enumerated");
                out.add_term((ia, ib), v.clone());
            }
        }
        Ok(out)
    }

    /// Conditional expectation `E_P: P_{n+1} -> P_n`,
    /// `E_P(e_{ac,bd}) = delta^-1 [c=d] mu(c) e_{a,b}`.
    pub fn cond_exp<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<BoxElement<S>, BoxError> {
        assert!(x.n >= 1, "cond_exp needs n+1 >= 1");
        let g = self.graph_arc();
        let delta_inv = self.delta_power::<S>(-1);
        let src = self.level(x.n, x.sign)?.clone();
        let tgt = self.level(x.n - 1, x.sign)?;
        let mut out = BoxElement::zero(x.n - 1, x.sign);
        for (&(p, q), v) in &x.entries {
            let pp = src.path(p);
            let qq = src.path(q);
            let (pc, qc) = (*pp.edges.last().unwrap(), *qq.edges.last().unwrap());
            if pc != qc {
                continue;
            }
            let a = Path { start: pp.start, edges: pp.edges[..x.n - 1].to_vec() };
            let b = Path { start: qq.start, edges: qq.edges[..x.n - 1].to_vec() };
            let mid = a.end(&g);
            let mu_c = S::from_q(&g.mu_from(pc, mid));
            let ia = tgt.index_of(&a).expect("prefix enumerated");
            let ib = tgt.index_of(&b).expect("prefix enumerated");
            out.add_term((ia, ib), v.mul(&mu_c).mul(&delta_inv));
        }
        Ok(out)
    }

    /// Orientation reversal `Rev: P_n^± -> P_n^∓`, `e_{a,b} -> e_{abar,bbar}`.
    pub fn rev<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<BoxElement<S>, BoxError> {
        let g = self.graph_arc();
        let src = self.level(x.n, x.sign)?.clone();
        let tgt = self.level(x.n, x.sign.flip())?;
        let mut out = BoxElement::zero(x.n, x.sign.flip());
        for (&(a, b), v) in &x.entries {
            let ra = src.path(a).reversed(&g);
            let rb = src.path(b).reversed(&g);
            let ia = tgt.index_of(&ra).expect("reversal enumerated");
            let ib = tgt.index_of(&rb).expect("reversal enumerated");
            out.add_term((ia, ib), v.clone());
        }
        Ok(out)
    }

    /// Shift `sh: P_n^± -> P_{n+2}^±`, `e_{a,b} -> sum_{c in C_2, t(c)=s(a)} e_{ca,cb}`.
    pub fn shift<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<BoxElement<S>, BoxError> {
        let g = self.graph_arc();
        let src = self.level(x.n, x.sign)?.clone();
        let prefixes = self.level(2, x.sign)?.clone();
        let tgt = self.level(x.n + 2, x.sign)?;
        let mut out = BoxElement::zero(x.n + 2, x.sign);
        for (&(a, b), v) in &x.entries {
            let pa = src.path(a);
            let pb = src.path(b);
            for c in &prefixes.paths {
                if c.end(&g) != pa.start {
                    continue;
                }
                let qa = c.concat(&g, pa);
                let qb = c.concat(&g, pb);
                let ia = tgt.index_of(&qa).expect("shifted path enumerated");
                let ib = tgt.index_of(&qb).expect("shifted path enumerated");
                out.add_term((ia, ib), v.clone());
            }
        }
        Ok(out)
    }

    /// One-strand left inclusion `P_n^± -> P_{n+1}^∓`: prefix by a single
    /// oriented edge ending at the source.
    pub fn left_include<S: Scalar>(&mut self, x: &BoxElement<S>) -> Result<BoxElement<S>, BoxError> {
        let g = self.graph_arc();
        let src = self.level(x.n, x.sign)?.clone();
        let tgt = self.level(x.n + 1, x.sign.flip())?;
        let mut out = BoxElement::zero(x.n + 1, x.sign.flip());
        for (&(a, b), v) in &x.entries {
            let pa = src.path(a);
            let pb = src.path(b);
            for &(e, _) in g.incident(pa.start) {
                let mut qa = Path { start: 0, edges: Vec::with_capacity(x.n + 1) };
                let (s, t, _) = g.edge(e);
                qa.start = if pa.start == s { t } else { s };
                qa.edges.push(e);
                qa.edges.extend(pa.edges.iter().copied());
                let mut qb = qa.clone();
                qb.edges.truncate(1);
                qb.edges.extend(pb.edges.iter().copied());
                let ia = tgt.index_of(&qa).expect("prefixed path enumerated");
                let ib = tgt.index_of(&qb).expect("prefixed path enumerated");
                out.add_term((ia, ib), v.clone());
            }
        }
        Ok(out)
    }

    /// Checks `u u* = u* u = 1` exactly (or entrywise within the float
    /// backend's representation).
    pub fn is_unitary<S: Scalar>(&mut self, u: &BoxElement<S>, tol: f64) -> Result<bool, BoxError> {
        let unit = self.unit::<S>(u.n, u.sign)?;
        let ua = u.adjoint();
        let a = self.mul(u, &ua)?;
        let b = self.mul(&ua, u)?;
        Ok(a.max_abs_diff(&unit) <= tol && b.max_abs_diff(&unit) <= tol)
    }

    /// The n-box unitary `u_n^sign` generated by `u in U(P_1^+)`, built
    /// strand by strand: position `i` carries `u` when the strand there is
    /// even-to-odd oriented and `Rev(u)` otherwise. This agrees with the
    /// printed tower recursion (see `tower_recursive`); unitarity tests are
    /// the arbiter for the tersely printed odd-sign case.
    pub fn tower<S: Scalar>(
        &mut self,
        u: &BoxElement<S>,
        n: usize,
        sign: Sign,
    ) -> Result<BoxElement<S>, BoxError> {
        if u.n != 1 || u.sign != Sign::Plus {
            return Err(BoxError::SizeMismatch(u.n, 1));
        }
        if !self.is_unitary(u, 1e-9)? {
            return Err(BoxError::NotUnitary);
        }
        if n == 0 {
            return self.unit(0, sign);
        }
        let g = self.graph_arc();
        let one = self.level(1, Sign::Plus)?.clone();
        // Entry lookup for u over oriented single edges (even source).
        let u_entry = |a: &Path, b: &Path| -> Option<&S> {
            let ia = one.index_of(a)?;
            let ib = one.index_of(b)?;
            u.entries.get(&(ia, ib))
        };
        let tgt = self.level(n, sign)?;
        let mut out = BoxElement::zero(n, sign);
        'pairs: for (a, b) in tgt.st_pairs() {
            let pa = tgt.path(a);
            let pb = tgt.path(b);
            let va = pa.vertices(&g);
            let vb = pb.vertices(&g);
            let mut coeff = S::one();
            for i in 0..n {
                let plus_oriented = g.is_even(va[i]);
                let (sa, sb) = if plus_oriented {
                    (
                        Path { start: va[i], edges: vec![pa.edges[i]] },
                        Path { start: vb[i], edges: vec![pb.edges[i]] },
                    )
                } else {
                    (
                        Path { start: va[i + 1], edges: vec![pa.edges[i]] },
                        Path { start: vb[i + 1], edges: vec![pb.edges[i]] },
                    )
                };
                match u_entry(&sa, &sb) {
                    Some(c) if !c.is_zero() => coeff = coeff.mul(c),
                    _ => continue 'pairs,
                }
            }
            if !coeff.is_zero() {
                out.add_term((a, b), coeff);
            }
        }
        Ok(out)
    }

    /// The printed tower recursion, with opposite-sign factors entering
    /// through the one-strand left inclusion.
    pub fn tower_recursive<S: Scalar>(
        &mut self,
        u: &BoxElement<S>,
        n: usize,
        sign: Sign,
    ) -> Result<BoxElement<S>, BoxError> {
        if n == 0 {
            return self.unit(0, sign);
        }
        match sign {
            Sign::Plus => {
                let mut acc = u.clone(); // x_1^+ = x
                let mut level = 1usize;
                while level < n {
                    level += 1;
                    let factor = if level % 2 == 0 {
                        // x_{2m+2}^+ = x_{2m+1}^+ . sh^m(Rev(x))
                        let mut f = self.rev(u)?;
                        for _ in 0..(level - 2) / 2 {
                            f = self.shift(&f)?;
                        }
                        self.left_include(&f)? // lands in P_level^+
                    } else {
                        // x_{2m+1}^+ = x_{2m}^+ . sh^m(x)
                        let mut f = u.clone();
                        for _ in 0..(level - 1) / 2 {
                            f = self.shift(&f)?;
                        }
                        f
                    };
                    acc = self.include(&acc)?;
                    acc = self.mul(&acc, &factor)?;
                }
                Ok(acc)
            }
            Sign::Minus => {
                let mut acc = self.rev(u)?; // x_1^- = Rev(x)
                let mut level = 1usize;
                while level < n {
                    level += 1;
                    let factor = if level % 2 == 0 {
                        // x_{2m+2}^- = x_{2m+1}^- . sh^m(left-included x)
                        let mut f = self.left_include(u)?; // P_2^-
                        for _ in 0..(level - 2) / 2 {
                            f = self.shift(&f)?;
                        }
                        f
                    } else {
                        // x_{2m+1}^- = x_{2m}^- . sh^m(x_1^-)
                        let mut f = self.rev(u)?;
                        for _ in 0..(level - 1) / 2 {
                            f = self.shift(&f)?;
                        }
                        f
                    };
                    acc = self.include(&acc)?;
                    acc = self.mul(&acc, &factor)?;
                }
                Ok(acc)
            }
        }
    }

    /// `Ad(u_n)(x) = u_n x u_n^*`.
    pub fn ad_action<S: Scalar>(
        &mut self,
        u: &BoxElement<S>,
        x: &BoxElement<S>,
    ) -> Result<BoxElement<S>, BoxError> {
        let un = self.tower(u, x.n, x.sign)?;
        let t = self.mul(&un, x)?;
        self.mul(&t, &un.adjoint())
    }

    /// Jones projection at position `i` (an element of `P_{i+1}^sign`):
    /// entries `delta^-1 sqrt(mu(c) mu(c'))` over `(a c cbar, a c' c'bar)`.
    /// The `cup` kind is the unnormalized cap-cup element `delta * e_i`.
    pub fn tl_element<S: Scalar>(
        &mut self,
        kind: TlKind,
        i: usize,
        sign: Sign,
    ) -> Result<BoxElement<S>, BoxError> {
        assert!(i >= 1);
        let g = self.graph_arc();
        let delta_inv = self.delta_power::<S>(-1);
        let stems = self.level(i - 1, sign)?.clone();
        let tgt = self.level(i + 1, sign)?;
        let mut out = BoxElement::zero(i + 1, sign);
        for stem in &stems.paths {
            let v = stem.end(&g);
            if g.is_truncated() && !g.is_interior(v) {
                return Err(BoxError::Graph(GraphError::TruncationTooSmall {
                    needed: i + 1,
                    radius: i,
                }));
            }
            for &(c, _) in g.incident(v) {
                for &(c2, _) in g.incident(v) {
                    let root_c = S::from_q(&g.mu_from(c, v))
                        .sqrt()
                        .ok_or_else(|| BoxError::ApproximateOnly(g.mu_from(c, v).to_string()))?;
                    let root_c2 = S::from_q(&g.mu_from(c2, v))
                        .sqrt()
                        .ok_or_else(|| BoxError::ApproximateOnly(g.mu_from(c2, v).to_string()))?;
                    let mut pa = stem.clone();
                    pa.edges.push(c);
                    pa.edges.push(c);
                    let mut pb = stem.clone();
                    pb.edges.push(c2);
                    pb.edges.push(c2);
                    let ia = tgt.index_of(&pa).expect("cup path enumerated");
                    let ib = tgt.index_of(&pb).expect("cup path enumerated");
                    let coeff = match kind {
                        TlKind::Jones => root_c.mul(&root_c2).mul(&delta_inv),
                        TlKind::Cup => root_c.mul(&root_c2),
                    };
                    out.add_term((ia, ib), coeff);
                }
            }
        }
        Ok(out)
    }

    /// Block dimensions `|C_n(v,w)|^2` summed over `(v,w)`: the dimension of
    /// `P_n^sign` as a multi-matrix algebra.
    pub fn dimension(&mut self, n: usize, sign: Sign) -> Result<usize, BoxError> {
        Ok(self.level(n, sign)?.st_count())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TlKind {
    Cup,
    Jones,
}

/// Deterministic pseudo-random element with small integer entries.
pub fn random_element<S: Scalar>(
    ps: &PathSet,
    rng: &mut impl rand::Rng,
    density: f64,
) -> BoxElement<S> {
    let mut out = BoxElement::zero(ps.n, ps.sign);
    for (a, b) in ps.st_pairs() {
        if rng.gen_bool(density) {
            let num = rng.gen_range(-4i64..=4);
            if num != 0 {
                out.add_term((a, b), S::from_ratio(num, 1));
            }
        }
    }
    out
}

/// Trace equality helper for the traciality tests.
pub fn p0_eq<S: Scalar>(a: &P0Element<S>, b: &P0Element<S>) -> bool {
    a.sign == b.sign && {
        let mut keys: std::collections::BTreeSet<VertexId> = a.values.keys().copied().collect();
        keys.extend(b.values.keys().copied());
        keys.into_iter().all(|v| a.get(v) == b.get(v))
    }
}

pub fn p0_close<S: Scalar>(a: &P0Element<S>, b: &P0Element<S>, tol: f64) -> bool {
    let mut keys: std::collections::BTreeSet<VertexId> = a.values.keys().copied().collect();
    keys.extend(b.values.keys().copied());
    keys.into_iter()
        .all(|v| (a.get(v).to_f64() - b.get(v).to_f64()).abs() <= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders;
    use crate::oracle;
    use crate::scalars::QScalar;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model_4cycle() -> PathModel {
        PathModel::new(Arc::new(builders::diagonal_z2().graph))
    }

    #[test]
    fn matrix_units_compose() {
        let mut m = model_4cycle();
        let ps = m.level(2, Sign::Plus).unwrap();
        let (a, b) = ps.st_pairs().find(|(a, b)| a != b).unwrap();
        let eab = BoxElement::<QScalar>::matrix_unit(2, Sign::Plus, a, b);
        let eba = BoxElement::<QScalar>::matrix_unit(2, Sign::Plus, b, a);
        let prod = m.mul(&eab, &eba).unwrap();
        assert_eq!(prod, BoxElement::matrix_unit(2, Sign::Plus, a, a));
    }

    #[test]
    fn unit_is_two_sided() {
        let mut m = model_4cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let ps = m.level(2, Sign::Plus).unwrap().clone();
        let unit = m.unit::<QScalar>(2, Sign::Plus).unwrap();
        for _ in 0..5 {
            let x = random_element::<QScalar>(&ps, &mut rng, 0.5);
            assert_eq!(m.mul(&unit, &x).unwrap(), x);
            assert_eq!(m.mul(&x, &unit).unwrap(), x);
        }
    }

    #[test]
    fn mul_matches_dense_oracle() {
        let mut m = model_4cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ps = m.level(2, Sign::Plus).unwrap().clone();
        for _ in 0..10 {
            let x = random_element::<QScalar>(&ps, &mut rng, 0.6);
            let y = random_element::<QScalar>(&ps, &mut rng, 0.6);
            let got = m.mul(&x, &y).unwrap();
            let want = oracle::dense_mul(&ps, &x, &y);
            assert_eq!(got, want);
        }
    }

    #[test]
    fn trace_values_on_skew_tree() {
        // tau_r(e_{a,a}) = mu(a) e_{s(a)} with mu(a) = 2 on the (2,8) tree.
        let b = builders::biregular_tree(2, 8, 2).unwrap();
        let root = b.graph.vertex_by_name("o").unwrap();
        let mut m = PathModel::based(Arc::new(b.graph), root);
        let ps = m.level(1, Sign::Plus).unwrap();
        let a = ps.blocks.values().next().unwrap()[0];
        let x = BoxElement::<QScalar>::matrix_unit(1, Sign::Plus, a, a);
        let (tau_l, tau_r, _) = m.traces(&x).unwrap();
        assert_eq!(tau_r.get(root), QScalar::from_int(2));
        // tau_l sits at the target with weight 1/2
        let end = m.level(1, Sign::Plus).unwrap().end(a);
        assert_eq!(tau_l.get(end), QScalar::from_ratio(1, 2));
    }

    #[test]
    fn off_diagonal_traces_vanish() {
        let mut m = model_4cycle();
        let ps = m.level(2, Sign::Plus).unwrap();
        let (a, b) = ps.st_pairs().find(|(a, b)| a != b).unwrap();
        let x = BoxElement::<QScalar>::matrix_unit(2, Sign::Plus, a, b);
        let (tau_l, tau_r, tr) = m.traces(&x).unwrap();
        assert!(tau_l.values.is_empty());
        assert!(tau_r.values.is_empty());
        assert!(tr.values.is_empty());
    }

    #[test]
    fn traciality_on_validated_graph() {
        let mut m = model_4cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let ps = m.level(1, Sign::Plus).unwrap().clone();
        for _ in 0..20 {
            let x = random_element::<QScalar>(&ps, &mut rng, 0.7);
            let y = random_element::<QScalar>(&ps, &mut rng, 0.7);
            let xy = m.mul(&x, &y).unwrap();
            let yx = m.mul(&y, &x).unwrap();
            let (_, r1, _) = m.traces(&xy).unwrap();
            let (_, r2, _) = m.traces(&yx).unwrap();
            assert!(p0_eq(&r1, &r2));
            let l1 = m.trace_left(&xy).unwrap();
            let l2 = m.trace_left(&yx).unwrap();
            assert!(p0_eq(&l1, &l2));
        }
    }

    #[test]
    fn include_counts_and_trace_compat() {
        let mut m = model_4cycle();
        let ps = m.level(1, Sign::Plus).unwrap().clone();
        let a = ps.blocks.values().next().unwrap()[0];
        let x = BoxElement::<QScalar>::matrix_unit(1, Sign::Plus, a, a);
        let inc = m.include(&x).unwrap();
        // target vertex has degree 2, one term per extending edge
        assert_eq!(inc.entries.len(), 2);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let x = random_element::<QScalar>(&ps, &mut rng, 0.7);
            let inc = m.include(&x).unwrap();
            let (_, _, tr_n1) = m.traces(&inc).unwrap();
            let (_, _, tr_n) = m.traces(&x).unwrap();
            assert!(p0_eq(&tr_n1, &tr_n));
        }

        let unit1 = m.unit::<QScalar>(1, Sign::Plus).unwrap();
        let unit2 = m.unit::<QScalar>(2, Sign::Plus).unwrap();
        assert_eq!(m.include(&unit1).unwrap(), unit2);
    }

    #[test]
    fn cond_exp_pins() {
        let mut m = model_4cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ps1 = m.level(1, Sign::Plus).unwrap().clone();
        let ps2 = m.level(2, Sign::Plus).unwrap().clone();
        for _ in 0..20 {
            let x = random_element::<QScalar>(&ps1, &mut rng, 0.7);
            let y = random_element::<QScalar>(&ps2, &mut rng, 0.7);
            // E_P(include(x)) = x
            let ix = m.include(&x).unwrap();
            assert_eq!(m.cond_exp(&ix).unwrap(), x);
            // bimodularity E_P(include(x) y) = x E_P(y)
            let ixy = m.mul(&ix, &y).unwrap();
            let lhs = m.cond_exp(&ixy).unwrap();
            let ey = m.cond_exp(&y).unwrap();
            let rhs = m.mul(&x, &ey).unwrap();
            assert_eq!(lhs, rhs);
            // tr_n(E_P(y)) = tr_{n+1}(y)
            let ey2 = m.cond_exp(&y).unwrap();
            let (_, _, tr_e) = m.traces(&ey2).unwrap();
            let (_, _, tr_y) = m.traces(&y).unwrap();
            assert!(p0_eq(&tr_e, &tr_y));
        }
        let unit2 = m.unit::<QScalar>(2, Sign::Plus).unwrap();
        let unit1 = m.unit::<QScalar>(1, Sign::Plus).unwrap();
        assert_eq!(m.cond_exp(&unit2).unwrap(), unit1);
    }

    #[test]
    fn cond_exp_coefficient_on_skew_tree() {
        // E_P(e_{ac,ac}) = (mu(c)/delta) e_{a,a} = (2/4) e_{a,a}: on T(8,2)
        // the second step of an outgoing + walk is odd-sourced with mu = 2.
        let b = builders::biregular_tree(8, 2, 3).unwrap();
        let root = b.graph.vertex_by_name("o").unwrap();
        let mut m = PathModel::based(Arc::new(b.graph), root);
        let g = m.graph_arc();
        let ps2 = m.level(2, Sign::Plus).unwrap();
        // pick a path of length 2 that goes out twice (no backtrack)
        let idx = (0..ps2.len() as u32)
            .find(|&i| {
                let p = ps2.path(i);
                let vs = p.vertices(&g);
                vs[0] != vs[2]
            })
            .unwrap();
        let x = BoxElement::<QScalar>::matrix_unit(2, Sign::Plus, idx, idx);
        let e = m.cond_exp(&x).unwrap();
        assert_eq!(e.entries.len(), 1);
        let val = e.entries.values().next().unwrap();
        assert_eq!(*val, QScalar::from_ratio(1, 2));
    }

    #[test]
    fn jones_projection_relations() {
        let mut m = model_4cycle();
        let e1: BoxElement<f64> = m.tl_element(TlKind::Jones, 1, Sign::Plus).unwrap();
        // e* = e
        assert!(e1.max_abs_diff(&e1.adjoint()) < 1e-12);
        // e^2 = e
        let sq = m.mul(&e1, &e1).unwrap();
        assert!(sq.max_abs_diff(&e1) < 1e-9);
        // tr(e) = delta^-2 * tr(unit)
        let (_, _, tr_e) = m.traces(&e1).unwrap();
        let unit = m.unit::<f64>(2, Sign::Plus).unwrap();
        let (_, _, tr_u) = m.traces(&unit).unwrap();
        for v in m.graph().even_vertices() {
            assert!((tr_e.get(v) - tr_u.get(v) / 4.0).abs() < 1e-9);
        }
        // TL relation e_1 e_2 e_1 = delta^-2 e_1
        let e2: BoxElement<f64> = m.tl_element(TlKind::Jones, 2, Sign::Plus).unwrap();
        let e1_in = m.include(&e1).unwrap();
        let e1e2 = m.mul(&e1_in, &e2).unwrap();
        let lhs = m.mul(&e1e2, &e1_in).unwrap();
        let rhs = e1_in.scale(&0.25);
        assert!(lhs.max_abs_diff(&rhs) < 1e-9);
        // exact backend works here because mu = 1
        let exact: BoxElement<QScalar> = m.tl_element(TlKind::Jones, 1, Sign::Plus).unwrap();
        let sq = m.mul(&exact, &exact).unwrap();
        assert_eq!(sq, exact);
    }

    #[test]
    fn jones_projection_needs_sqrt_in_field() {
        // mu = 2 has an exact square root only outside Q, so the exact
        // backend refuses on the (2,8) tree.
        let b = builders::biregular_tree(2, 8, 3).unwrap();
        let root = b.graph.vertex_by_name("o").unwrap();
        let mut m = PathModel::based(Arc::new(b.graph), root);
        let r: Result<BoxElement<QScalar>, _> = m.tl_element(TlKind::Jones, 1, Sign::Plus);
        assert!(matches!(r, Err(BoxError::ApproximateOnly(_))));
        let f: BoxElement<f64> = m.tl_element(TlKind::Jones, 1, Sign::Plus).unwrap();
        let sq = m.mul(&f, &f).unwrap();
        assert!(sq.max_abs_diff(&f) < 1e-9);
    }

    #[test]
    fn rev_is_an_involution() {
        let mut m = model_4cycle();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ps = m.level(1, Sign::Plus).unwrap().clone();
        for _ in 0..10 {
            let x = random_element::<QScalar>(&ps, &mut rng, 0.8);
            let r1 = m.rev(&x).unwrap();
            let rr = m.rev(&r1).unwrap();
            assert_eq!(rr, x);
        }
    }

    #[test]
    fn tower_of_unit_is_unit() {
        let mut m = model_4cycle();
        let unit1 = m.unit::<QScalar>(1, Sign::Plus).unwrap();
        for n in 1..=4 {
            for sign in [Sign::Plus, Sign::Minus] {
                let un = m.tower(&unit1, n, sign).unwrap();
                let unit = m.unit::<QScalar>(n, sign).unwrap();
                assert_eq!(un, unit);
            }
        }
    }

    #[test]
    fn tower_diagonal_signs() {
        let mut m = model_4cycle();
        // diagonal unitary with entries +-1
        let ps = m.level(1, Sign::Plus).unwrap().clone();
        let mut u = BoxElement::<QScalar>::zero(1, Sign::Plus);
        for i in 0..ps.len() as u32 {
            let sign = if i % 2 == 0 { 1 } else { -1 };
            u.add_term((i, i), QScalar::from_int(sign));
        }
        assert!(m.is_unitary(&u, 0.0).unwrap());
        for n in 1..=4 {
            for sign in [Sign::Plus, Sign::Minus] {
                let un = m.tower(&u, n, sign).unwrap();
                assert!(m.is_unitary(&un, 0.0).unwrap(), "u_{}^{} unitary", n, sign);
                let rec = m.tower_recursive(&u, n, sign).unwrap();
                assert_eq!(un, rec, "recursion matches direct product at n={} {}", n, sign);
            }
        }
        // Ad preserves traces and commutes with include / cond_exp.
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let ps2 = m.level(2, Sign::Plus).unwrap().clone();
        for _ in 0..10 {
            let x = random_element::<QScalar>(&ps2, &mut rng, 0.6);
            let ax = m.ad_action(&u, &x).unwrap();
            let (_, _, tr1) = m.traces(&ax).unwrap();
            let (_, _, tr2) = m.traces(&x).unwrap();
            assert!(p0_eq(&tr1, &tr2));
            // commutes with include
            let lhs = m.include(&ax).unwrap();
            let ix2 = m.include(&x).unwrap();
            let rhs = m.ad_action(&u, &ix2).unwrap();
            assert_eq!(lhs, rhs);
            // commutes with cond_exp
            let lhs = m.cond_exp(&ax).unwrap();
            let ex2 = m.cond_exp(&x).unwrap();
            let rhs = m.ad_action(&u, &ex2).unwrap();
            assert_eq!(lhs, rhs);
        }
    }

    #[test]
    fn dimension_matches_block_counts() {
        let mut m = model_4cycle();
        // 4-cycle: |C_2(v,w)| = 2 for each of 4 blocks -> dim = 16
        assert_eq!(m.dimension(2, Sign::Plus).unwrap(), 16);
        assert_eq!(m.dimension(1, Sign::Plus).unwrap(), 4);
    }

    #[test]
    fn gram_of_basis_under_weighted_tr_is_diagonal() {
        let b = builders::bisch_haagerup_s3().unwrap();
        let g = Arc::new(b.graph);
        let w = crate::graph::vertex_weights(&g, 0).unwrap();
        let mut m = PathModel::new(Arc::clone(&g));
        let ps = m.level(1, Sign::Plus).unwrap().clone();
        let pairs: Vec<(u32, u32)> = ps.st_pairs().collect();
        for (i, &(a, b1)) in pairs.iter().enumerate() {
            for (j, &(c, d)) in pairs.iter().enumerate() {
                let x = BoxElement::<QScalar>::matrix_unit(1, Sign::Plus, a, b1);
                let y = BoxElement::<QScalar>::matrix_unit(1, Sign::Plus, c, d);
                let prod = m.mul(&x, &y.adjoint()).unwrap();
                let (_, _, tr) = m.traces(&prod).unwrap();
                let mut val = QScalar::zero();
                for (&v, s) in &tr.values {
                    let w2 = w.get(v).checked_mul(w.get(v)).unwrap();
                    val = val.checked_add(&s.checked_mul(&w2).unwrap()).unwrap();
                }
                if i == j {
                    assert!(val.is_positive(), "diagonal Gram entry positive");
                } else {
                    assert!(val.is_zero(), "off-diagonal Gram entry zero");
                }
            }
        }
    }
}
