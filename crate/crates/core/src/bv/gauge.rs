//! Gauge toys: an abelian lattice gauge field and a finite-dimensional Lie
//! algebra, each with its Chevalley-Eilenberg differential.

use std::collections::BTreeSet;

use num_complex::Complex64;

use super::{
    antibracket, apply_derivation, bracket_images, DerivationImages, GenId, GradedFunctional, GradedGeneratorSet,
};
use crate::error::{Error, Result};

pub type Vertex = (usize, usize);

/// Oriented link from `tail` to `head`, one step in `+i` or `+j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub tail: Vertex,
    pub head: Vertex,
}

/// Lower-left corner of a unit plaquette.
pub type Plaquette = (usize, usize);

/// Abelian gauge field on an open `n × n` grid of vertices: `A` on links,
/// ghosts `c` on vertices, and their antifields.
#[derive(Debug, Clone)]
pub struct AbelianToy {
    n: usize,
    set: GradedGeneratorSet,
    edges: Vec<Edge>,
    a: Vec<GenId>,
    a_dag: Vec<GenId>,
    c: Vec<GenId>,
    c_dag: Vec<GenId>,
}

fn one(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

impl AbelianToy {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidLattice(format!("gauge grid needs n >= 2, got {n}")));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i + 1 < n {
                    edges.push(Edge { tail: (i, j), head: (i + 1, j) });
                }
                if j + 1 < n {
                    edges.push(Edge { tail: (i, j), head: (i, j + 1) });
                }
            }
        }
        edges.sort_unstable();
        let mut set = GradedGeneratorSet::new();
        let a: Vec<GenId> = edges.iter().map(|e| set.add_field(format!("A({:?}->{:?})", e.tail, e.head), 0)).collect();
        let c: Vec<GenId> = (0..n * n).map(|k| set.add_field(format!("c({},{})", k / n, k % n), 1)).collect();
        let a_dag = a.iter().map(|&g| set.add_antifield(g)).collect();
        let c_dag = c.iter().map(|&g| set.add_antifield(g)).collect();
        Ok(AbelianToy { n, set, edges, a, a_dag, c, c_dag })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn set(&self) -> &GradedGeneratorSet {
        &self.set
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn plaquettes(&self) -> impl Iterator<Item = Plaquette> + '_ {
        (0..self.n - 1).flat_map(|i| (0..self.n - 1).map(move |j| (i, j)))
    }

    fn edge_index(&self, e: Edge) -> usize {
        self.edges.binary_search(&e).expect("edge of the grid")
    }

    pub fn a(&self, e: Edge) -> GenId {
        self.a[self.edge_index(e)]
    }

    pub fn a_dag(&self, e: Edge) -> GenId {
        self.a_dag[self.edge_index(e)]
    }

    pub fn c(&self, v: Vertex) -> GenId {
        self.c[v.0 * self.n + v.1]
    }

    pub fn c_dag(&self, v: Vertex) -> GenId {
        self.c_dag[v.0 * self.n + v.1]
    }

    /// Field ids `A` and ghost ids `c`, without antifields.
    pub fn field_ids(&self) -> Vec<GenId> {
        self.a.iter().chain(&self.c).copied().collect()
    }

    /// Vertices touched by a generator.
    pub fn vertices_of(&self, g: GenId) -> Vec<Vertex> {
        let base = self.set.get(g).antifield_of.unwrap_or(g);
        if let Some(k) = self.a.iter().position(|&x| x == base) {
            let e = self.edges[k];
            vec![e.tail, e.head]
        } else {
            let k = self.c.iter().position(|&x| x == base).expect("generator of the toy");
            vec![(k / self.n, k % self.n)]
        }
    }

    /// Boundary links of a plaquette with their orientation signs.
    pub fn boundary(&self, (i, j): Plaquette) -> [(Edge, f64); 4] {
        [
            (Edge { tail: (i, j), head: (i + 1, j) }, 1.0),
            (Edge { tail: (i + 1, j), head: (i + 1, j + 1) }, 1.0),
            (Edge { tail: (i, j + 1), head: (i + 1, j + 1) }, -1.0),
            (Edge { tail: (i, j), head: (i, j + 1) }, -1.0),
        ]
    }

    /// `F_P = (dA)(P)`.
    pub fn field_strength(&self, p: Plaquette) -> GradedFunctional {
        let mut out = GradedFunctional::zero();
        for (e, s) in self.boundary(p) {
            out.add_term(vec![self.a(e)], one(s));
        }
        out
    }

    /// `(dc)(e) = c(head) − c(tail)`.
    pub fn dc(&self, e: Edge) -> GradedFunctional {
        let mut out = GradedFunctional::zero();
        out.add_term(vec![self.c(e.head)], one(1.0));
        out.add_term(vec![self.c(e.tail)], one(-1.0));
        out
    }

    fn plaquette_cutoff(&self, f: &impl Fn(Vertex) -> f64, (i, j): Plaquette) -> f64 {
        0.25 * (f((i, j)) + f((i + 1, j)) + f((i, j + 1)) + f((i + 1, j + 1)))
    }

    /// `½ Σ_P f_P F_P²` with `f_P` the mean over the corners.
    pub fn maxwell(&self, f: &impl Fn(Vertex) -> f64) -> GradedFunctional {
        let mut out = GradedFunctional::zero();
        for p in self.plaquettes() {
            let fp = self.plaquette_cutoff(f, p);
            if fp != 0.0 {
                let fs = self.field_strength(p);
                out = out.add(&fs.mul(&fs).scale(one(0.5 * fp)));
            }
        }
        out
    }

    /// `L_ext(f) = ½ Σ_P f_P F_P² + Σ_e f_e A‡(e) (dc)(e)` with `f_e` the mean
    /// over the endpoints.
    pub fn l_ext(&self, f: &impl Fn(Vertex) -> f64) -> GradedFunctional {
        let mut out = self.maxwell(f);
        for &e in &self.edges {
            let fe = 0.5 * (f(e.tail) + f(e.head));
            if fe != 0.0 {
                let term = GradedFunctional::generator(self.a_dag(e)).mul(&self.dc(e));
                out = out.add(&term.scale(one(fe)));
            }
        }
        out
    }

    /// Generator images of `s = {·, L_ext(1)}`.
    pub fn s_images(&self) -> DerivationImages {
        bracket_images(&self.set, &self.l_ext(&|_| 1.0))
    }

    /// `s = δ + γ` split by antifield number: `δ` lowers it by one, `γ`
    /// preserves it.
    pub fn split_s(&self) -> (DerivationImages, DerivationImages) {
        split_by_antifield_number(&self.set, &self.s_images())
    }

    /// Chevalley-Eilenberg images `A(e) ↦ (dc)(e)`; ghosts are closed.
    pub fn gamma_images(&self) -> DerivationImages {
        self.edges.iter().map(|&e| (self.a(e), self.dc(e))).collect()
    }

    /// `{L_ext(f), L_ext(f)}` together with its vertex support and the
    /// vertices of plaquettes on which `f` is not constant.
    pub fn check_cme(&self, f: &impl Fn(Vertex) -> f64) -> CmeReport {
        let l = self.l_ext(f);
        let bracket = antibracket(&self.set, &l, &l);
        let support: BTreeSet<Vertex> = bracket.generators().into_iter().flat_map(|g| self.vertices_of(g)).collect();
        let allowed: BTreeSet<Vertex> = self
            .plaquettes()
            .filter(|&(i, j)| {
                let v = [f((i, j)), f((i + 1, j)), f((i, j + 1)), f((i + 1, j + 1))];
                v.iter().any(|&x| x != v[0])
            })
            .flat_map(|(i, j)| [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)])
            .collect();
        CmeReport { residual: bracket.max_abs(), contained: support.is_subset(&allowed), support, allowed }
    }

    /// Plaquette monomials of degree `1..=max_degree` on the plaquettes
    /// inside `[i0, i0+size) × [j0, j0+size)` vertices.
    pub fn plaquette_invariants(&self, (i0, j0): Vertex, size: usize, max_degree: usize) -> Vec<GradedFunctional> {
        let ps: Vec<GradedFunctional> = self
            .plaquettes()
            .filter(|&(i, j)| i >= i0 && j >= j0 && i + 1 < i0 + size && j + 1 < j0 + size)
            .map(|p| self.field_strength(p))
            .collect();
        let mut out: Vec<GradedFunctional> = Vec::new();
        let mut layer = vec![(0usize, GradedFunctional::constant(one(1.0)))];
        for _ in 0..max_degree {
            let mut next = Vec::new();
            for (start, m) in &layer {
                for (k, p) in ps.iter().enumerate().skip(*start) {
                    next.push((k, m.mul(p)));
                }
            }
            out.extend(next.iter().map(|(_, m)| m.clone()));
            layer = next;
        }
        out
    }
}

/// Result of a classical master equation check.
#[derive(Debug, Clone)]
pub struct CmeReport {
    pub residual: f64,
    pub support: BTreeSet<Vertex>,
    pub allowed: BTreeSet<Vertex>,
    pub contained: bool,
}

/// Splits generator images into the part lowering the antifield number by
/// one and the part preserving it. Other parts are dropped.
pub fn split_by_antifield_number(
    set: &GradedGeneratorSet,
    images: &DerivationImages,
) -> (DerivationImages, DerivationImages) {
    let (mut lower, mut keep) = (DerivationImages::new(), DerivationImages::new());
    for (&g, img) in images {
        let target = set.antifield_number(g);
        for (m, c) in img.terms() {
            let af: i32 = m.iter().map(|&h| set.antifield_number(h)).sum();
            let slot = if af == target - 1 {
                &mut lower
            } else if af == target {
                &mut keep
            } else {
                continue;
            };
            slot.entry(g).or_insert_with(GradedFunctional::zero).add_term(m.clone(), c);
        }
    }
    (lower, keep)
}

/// Lie algebra with structure constants `[e_b, e_c] = f^a_{bc} e_a`, ghosts
/// `c^a` and adjoint matter fields `x^a`.
#[derive(Debug, Clone)]
pub struct LieAlgebraToy {
    dim: usize,
    f: Vec<f64>,
    set: GradedGeneratorSet,
    c: Vec<GenId>,
    x: Vec<GenId>,
}

impl LieAlgebraToy {
    /// `f[a][b][c]` flattened as `f[(a*dim + b)*dim + c]`. Rejects constants
    /// that are not antisymmetric in the lower indices or violate Jacobi.
    pub fn new(dim: usize, f: Vec<f64>) -> Result<Self> {
        if f.len() != dim * dim * dim {
            return Err(Error::InvalidStructureConstants(format!(
                "expected {} entries, got {}",
                dim * dim * dim,
                f.len()
            )));
        }
        let at = |a: usize, b: usize, c: usize| f[(a * dim + b) * dim + c];
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    if at(a, b, c) != -at(a, c, b) {
                        return Err(Error::InvalidStructureConstants(format!("not antisymmetric at ({a},{b},{c})")));
                    }
                }
            }
        }
        for e in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    for c in 0..dim {
                        let j: f64 = (0..dim)
                            .map(|d| at(d, a, b) * at(e, d, c) + at(d, b, c) * at(e, d, a) + at(d, c, a) * at(e, d, b))
                            .sum();
                        if j != 0.0 {
                            return Err(Error::InvalidStructureConstants(format!(
                                "Jacobi fails at ({e},{a},{b},{c}) by {j}"
                            )));
                        }
                    }
                }
            }
        }
        let mut set = GradedGeneratorSet::new();
        let c = (0..dim).map(|a| set.add_field(format!("c^{a}"), 1)).collect();
        let x = (0..dim).map(|a| set.add_field(format!("x^{a}"), 0)).collect();
        Ok(LieAlgebraToy { dim, f, set, c, x })
    }

    /// `su(2)` with `f^a_{bc} = ε_{abc}`.
    pub fn su2() -> Self {
        let mut f = vec![0.0; 27];
        for (a, b, c) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            f[(a * 3 + b) * 3 + c] = 1.0;
            f[(a * 3 + c) * 3 + b] = -1.0;
        }
        Self::new(3, f).expect("su(2) satisfies Jacobi")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn structure_constant(&self, a: usize, b: usize, c: usize) -> f64 {
        self.f[(a * self.dim + b) * self.dim + c]
    }

    pub fn set(&self) -> &GradedGeneratorSet {
        &self.set
    }

    pub fn ghost(&self, a: usize) -> GenId {
        self.c[a]
    }

    pub fn matter(&self, a: usize) -> GenId {
        self.x[a]
    }

    pub fn ids(&self) -> Vec<GenId> {
        self.c.iter().chain(&self.x).copied().collect()
    }

    /// `γc^a = −½ f^a_{bc} c^b c^c` and `γx^a = f^a_{bc} c^b x^c`.
    pub fn gamma_images(&self) -> DerivationImages {
        let mut images = DerivationImages::new();
        for a in 0..self.dim {
            let mut gc = GradedFunctional::zero();
            let mut gx = GradedFunctional::zero();
            for b in 0..self.dim {
                for c in 0..self.dim {
                    let f = self.structure_constant(a, b, c);
                    if f != 0.0 {
                        gc = gc.add(&GradedFunctional::monomial(vec![self.c[b], self.c[c]], one(-0.5 * f)));
                        gx = gx.add(&GradedFunctional::monomial(vec![self.c[b], self.x[c]], one(f)));
                    }
                }
            }
            images.insert(self.c[a], gc);
            images.insert(self.x[a], gx);
        }
        images
    }
}

/// Gauge structure acting on the field content.
#[derive(Debug, Clone)]
pub enum GaugeToy {
    /// The free scalar, without symmetry.
    Scalar,
    Abelian(AbelianToy),
    Lie(LieAlgebraToy),
}

impl GaugeToy {
    pub fn gamma_images(&self) -> DerivationImages {
        match self {
            GaugeToy::Scalar => DerivationImages::new(),
            GaugeToy::Abelian(t) => t.gamma_images(),
            GaugeToy::Lie(t) => t.gamma_images(),
        }
    }
}

/// Chevalley-Eilenberg differential of the toy applied to `x`.
pub fn ce_gamma(x: &GradedFunctional, toy: &GaugeToy) -> GradedFunctional {
    apply_derivation(x, &toy.gamma_images())
}
