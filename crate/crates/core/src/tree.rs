//! Finite subtrees of H, CPA functions and their Laplacians.

use std::collections::BTreeSet;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::measure::DiscreteMeasure;
use crate::point::{hsia_log, is_below, join_infinity, BerkPoint, ProjPoint};
use crate::rational::{format_rat, frac, int, Rat};
use crate::valuation::{FieldContext, LogValue};

/// A finite tree of discs, rooted at its highest vertex.
///
/// Vertices are sorted (by radius, then center); edges join each non-root
/// vertex to its parent, with length `ρ = t_parent - t_child`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTree {
    vertices: Vec<BerkPoint>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    root: usize,
}

fn radius(pt: &BerkPoint) -> &Rat {
    pt.as_disc().expect("tree vertices are discs").log_radius()
}

/// Type I points enter as the disc `truncation` levels away from the rest:
/// `D(a, -truncation)` for finite `a` and `D(0, truncation)` for `infinity`.
fn truncate(pt: &BerkPoint, truncation: i64, ctx: &FieldContext) -> BerkPoint {
    match pt {
        BerkPoint::TypeI(ProjPoint::Finite(a)) => BerkPoint::disc(a, int(-truncation), ctx),
        BerkPoint::TypeI(ProjPoint::Infinity) => BerkPoint::disc(&Rat::zero(), int(truncation), ctx),
        BerkPoint::Disc(_) => pt.clone(),
    }
}

impl FiniteTree {
    /// The tree spanned by `points`, closed under pairwise joins.
    pub fn span(points: &[BerkPoint], truncation: i64, ctx: &FieldContext) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("tree needs at least one point"));
        }
        let mut set: BTreeSet<BerkPoint> = BTreeSet::new();
        for pt in points {
            let x = truncate(pt, truncation, ctx);
            if set.contains(&x) {
                continue;
            }
            // The new branch point is the lowest join of x with the existing vertices.
            let mut lowest: Option<BerkPoint> = None;
            for v in &set {
                let j = join_infinity(&x, v, ctx)?;
                if lowest.as_ref().is_none_or(|l| radius(&j) < radius(l)) {
                    lowest = Some(j);
                }
            }
            set.insert(x);
            if let Some(j) = lowest {
                set.insert(j);
            }
        }
        Ok(Self::from_vertex_set(set.into_iter().collect(), ctx))
    }

    /// Vertices must be closed under pairwise joins.
    fn from_vertex_set(vertices: Vec<BerkPoint>, ctx: &FieldContext) -> Self {
        let n = vertices.len();
        let mut parent = vec![None; n];
        for (i, v) in vertices.iter().enumerate() {
            // Sorted by radius, so the first vertex strictly above is the parent.
            parent[i] = (i + 1..n).find(|&j| radius(&vertices[j]) > radius(v) && is_below(v, &vertices[j], ctx));
        }
        let mut children = vec![Vec::new(); n];
        for (i, p) in parent.iter().enumerate() {
            if let Some(p) = p {
                children[*p].push(i);
            }
        }
        let roots: Vec<usize> = (0..n).filter(|&i| parent[i].is_none()).collect();
        debug_assert_eq!(roots.len(), 1, "vertex set is not join-closed");
        Self { vertices, parent, children, root: roots[0] }
    }

    pub fn vertices(&self) -> &[BerkPoint] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.parent[i]
    }

    pub fn index_of(&self, pt: &BerkPoint) -> Option<usize> {
        self.vertices.binary_search(pt).ok()
    }

    /// `(child, parent, length)` for every edge.
    pub fn edges(&self) -> Vec<(usize, usize, Rat)> {
        (0..self.len()).filter_map(|i| self.parent[i].map(|p| (i, p, self.edge_length(i, p)))).collect()
    }

    fn edge_length(&self, child: usize, parent: usize) -> Rat {
        radius(&self.vertices[parent]) - radius(&self.vertices[child])
    }

    pub fn valence(&self, i: usize) -> usize {
        self.children[i].len() + usize::from(self.parent[i].is_some())
    }

    /// Neighbors with edge lengths.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, Rat)> {
        let mut out: Vec<(usize, Rat)> = self.children[i].iter().map(|&c| (c, self.edge_length(c, i))).collect();
        if let Some(p) = self.parent[i] {
            out.push((p, self.edge_length(i, p)));
        }
        out
    }

    /// The first point of the tree on the path from `x` toward infinity,
    /// or the root when that path misses the tree.
    pub fn retract(&self, x: &BerkPoint, ctx: &FieldContext) -> BerkPoint {
        let root = &self.vertices[self.root];
        if x.is_infinity() || !is_below(x, root, ctx) {
            return root.clone();
        }
        let (xc, xt) = x.center_radius().expect("finite point");
        let mut best: Option<BerkPoint> = None;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.as_disc().expect("disc vertex");
            let tau = ctx.log_abs(&(d.center() - &xc)).max(xt.clone()).max(LogValue::Finite(d.log_radius().clone()));
            let tau = tau.expect_finite("retraction radius");
            let top =
                self.parent[i].map(|p| radius(&self.vertices[p]).clone()).unwrap_or_else(|| d.log_radius().clone());
            if tau <= top && best.as_ref().is_none_or(|b| &tau < radius(b)) {
                best = Some(BerkPoint::disc(d.center(), tau, ctx));
            }
        }
        best.expect("x lies below the root")
    }

    pub fn cpa<F>(&self, f: F) -> Result<CpaFunction>
    where
        F: Fn(&BerkPoint) -> Result<LogValue>,
    {
        let values = self
            .vertices
            .iter()
            .map(|v| match f(v)? {
                LogValue::Finite(x) => Ok(x),
                _ => Err(Error::SingularIntegrand(v.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CpaFunction { tree: self.clone(), values })
    }

    /// `(μ⁺, μ⁻)` of `½ Σ (2 - v(P)) [P]`.
    pub fn branching_measure(&self) -> (DiscreteMeasure, DiscreteMeasure) {
        if self.len() == 1 {
            return (DiscreteMeasure::dirac(self.vertices[0].clone()), DiscreteMeasure::zero());
        }
        let mut plus = DiscreteMeasure::zero();
        let mut minus = DiscreteMeasure::zero();
        for (i, v) in self.vertices.iter().enumerate() {
            let w = frac(2 - self.valence(i) as i64, 2);
            if w > Rat::zero() {
                plus.add_atom(v.clone(), w);
            } else if w < Rat::zero() {
                minus.add_atom(v.clone(), w);
            }
        }
        (plus, minus)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "vertices": self.vertices.iter().map(BerkPoint::to_json).collect::<Vec<_>>(),
            "edges": self.edges().iter().map(|(c, p, l)| json!({
                "child": c,
                "parent": p,
                "length": format_rat(l),
            })).collect::<Vec<_>>(),
            "root": self.root,
        })
    }
}

/// Values at the vertices, affine along edges.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CpaFunction {
    tree: FiniteTree,
    values: Vec<Rat>,
}

impl CpaFunction {
    pub fn new(tree: &FiniteTree, values: Vec<Rat>) -> Result<Self> {
        if values.len() != tree.len() {
            return Err(Error::TreeMismatch);
        }
        Ok(Self { tree: tree.clone(), values })
    }

    pub fn tree(&self) -> &FiniteTree {
        &self.tree
    }

    pub fn values(&self) -> &[Rat] {
        &self.values
    }

    /// `-Σ_P Σ_{edges at P} slope [P]`.
    pub fn laplacian(&self) -> DiscreteMeasure {
        let t = &self.tree;
        DiscreteMeasure::from_atoms((0..t.len()).map(|i| {
            let w: Rat = t.neighbors(i).into_iter().map(|(j, len)| (&self.values[j] - &self.values[i]) / len).sum();
            (t.vertices[i].clone(), -w)
        }))
    }

    pub fn at(&self, pt: &BerkPoint) -> Option<&Rat> {
        self.tree.index_of(pt).map(|i| &self.values[i])
    }
}

/// Integral of a CPA function against a measure supported on vertices of its tree.
fn integrate_vertices(f: &CpaFunction, mu: &DiscreteMeasure) -> Result<Rat> {
    mu.atoms().map(|(p, w)| f.at(p).map(|v| v * w).ok_or(Error::TreeMismatch)).sum()
}

/// `(∫ f dΔg, ∫ g dΔf)`.
pub fn self_adjointness_check(f: &CpaFunction, g: &CpaFunction) -> Result<(Rat, Rat)> {
    if f.tree != g.tree {
        return Err(Error::TreeMismatch);
    }
    Ok((integrate_vertices(f, &g.laplacian())?, integrate_vertices(g, &f.laplacian())?))
}

/// `Σ_edges Δf Δg / length`, the symmetric form both sides above equal.
pub fn dirichlet_form(f: &CpaFunction, g: &CpaFunction) -> Result<Rat> {
    if f.tree != g.tree {
        return Err(Error::TreeMismatch);
    }
    Ok(f.tree
        .edges()
        .into_iter()
        .map(|(c, p, len)| (&f.values[p] - &f.values[c]) * (&g.values[p] - &g.values[c]) / len)
        .sum())
}

/// `u_λ(z, base) = -∫ log δ(w, z)_base dλ(w)`.
pub fn potential(lambda: &DiscreteMeasure, base: &BerkPoint, z: &BerkPoint, ctx: &FieldContext) -> Result<Rat> {
    if !base.in_h() {
        return Err(Error::InvalidPoint(format!("potential base {base} is not in H")));
    }
    let mut acc = Rat::zero();
    for (w, m) in lambda.atoms() {
        match hsia_log(w, z, base, ctx)? {
            LogValue::Finite(v) => acc -= m * v,
            _ => return Err(Error::SingularIntegrand(z.to_string())),
        }
    }
    Ok(acc)
}
