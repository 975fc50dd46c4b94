//! Peierls bracket, star product and time ordering.
//!
//! All products are exponentials of bidifferential operators. On polynomial
//! functionals they terminate, and ħ is tracked exactly as an exponent: the
//! result of every product is an [`HbarPoly`] of functionals.
//!
//! Normalization: one contraction through a kernel `K` between `φ(p)` and
//! `φ(q)` contributes `κ ħ K(p, q)`. Calibration fixes `κ = 1` for the star
//! product with kernel `W` and `κ' = 1` for time ordering with kernel `Δ_F`.

use num_complex::Complex64;

use crate::dynamics::PropagatorSet;
use crate::fps::{Coefficient, HbarPoly};
use crate::functionals::{merge_sorted, Monomial, PolyFunctional};
use crate::lattice::Point;

pub type QPoly = HbarPoly<PolyFunctional>;

/// Distinct points of a sorted monomial with their multiplicities.
pub(crate) fn multiplicities(m: &[Point]) -> Vec<(Point, usize)> {
    let mut out: Vec<(Point, usize)> = Vec::new();
    for &p in m {
        match out.last_mut() {
            Some((q, n)) if *q == p => *n += 1,
            _ => out.push((p, 1)),
        }
    }
    out
}

fn falling(n: usize, k: usize) -> f64 {
    (n - k + 1..=n).map(|i| i as f64).product()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn rest(mult: &[(Point, usize)], used: &[usize]) -> Monomial {
    mult.iter().zip(used).flat_map(|(&(p, n), &u)| std::iter::repeat_n(p, n - u)).collect()
}

fn power(z: Complex64, k: usize) -> Complex64 {
    let mut out = Complex64::new(1.0, 0.0);
    for _ in 0..k {
        out *= z;
    }
    out
}

/// One way of contracting two monomials: `k[i * nb + j]` contractions
/// between distinct point `i` of the left and `j` of the right factor.
pub(crate) struct CrossContraction<'a> {
    pub a: &'a [(Point, usize)],
    pub b: &'a [(Point, usize)],
    pub k: &'a [usize],
    pub order: usize,
    /// Number of position matchings with these counts.
    pub multiplicity: f64,
    pub rest: Monomial,
}

impl CrossContraction<'_> {
    /// `Π K(p_i, q_j)^{k_ij}`, multiplied in a fixed order.
    pub fn weight(&self, kernel: &impl Fn(Point, Point) -> Complex64) -> Complex64 {
        let nb = self.b.len();
        let mut out = Complex64::new(1.0, 0.0);
        for (idx, &k) in self.k.iter().enumerate() {
            if k > 0 {
                out *= power(kernel(self.a[idx / nb].0, self.b[idx % nb].0), k);
            }
        }
        out
    }
}

/// Visits every cross contraction pattern between monomials `a` and `b`,
/// including the empty one.
pub(crate) fn for_each_cross(a: &[Point], b: &[Point], mut visit: impl FnMut(&CrossContraction)) {
    let am = multiplicities(a);
    let bm = multiplicities(b);
    let (na, nb) = (am.len(), bm.len());
    let mut k = vec![0usize; na * nb];
    let mut ra: Vec<usize> = am.iter().map(|x| x.1).collect();
    let mut rb: Vec<usize> = bm.iter().map(|x| x.1).collect();

    fn go(
        idx: usize,
        am: &[(Point, usize)],
        bm: &[(Point, usize)],
        k: &mut Vec<usize>,
        ra: &mut Vec<usize>,
        rb: &mut Vec<usize>,
        visit: &mut dyn FnMut(&CrossContraction),
    ) {
        let nb = bm.len();
        if idx == k.len() {
            let used_a: Vec<usize> = am.iter().zip(ra.iter()).map(|(x, r)| x.1 - r).collect();
            let used_b: Vec<usize> = bm.iter().zip(rb.iter()).map(|(x, r)| x.1 - r).collect();
            let mut mult = 1.0;
            for ((_, n), &u) in am.iter().zip(&used_a) {
                mult *= falling(*n, u);
            }
            for ((_, n), &u) in bm.iter().zip(&used_b) {
                mult *= falling(*n, u);
            }
            for &kk in k.iter() {
                mult /= factorial(kk);
            }
            let mut merged_rest = rest(am, &used_a);
            merged_rest = merge_sorted(&merged_rest, &rest(bm, &used_b));
            visit(&CrossContraction { a: am, b: bm, k, order: k.iter().sum(), multiplicity: mult, rest: merged_rest });
            return;
        }
        let (i, j) = (idx / nb, idx % nb);
        let cap = ra[i].min(rb[j]);
        for c in 0..=cap {
            k[idx] = c;
            ra[i] -= c;
            rb[j] -= c;
            go(idx + 1, am, bm, k, ra, rb, visit);
            ra[i] += c;
            rb[j] += c;
        }
        k[idx] = 0;
    }

    if na == 0 || nb == 0 {
        visit(&CrossContraction { a: &am, b: &bm, k: &k, order: 0, multiplicity: 1.0, rest: merge_sorted(a, b) });
        return;
    }
    go(0, &am, &bm, &mut k, &mut ra, &mut rb, &mut visit);
}

/// Visits every self-contraction pattern of a monomial as
/// `(order, multiplicity · weight, rest)`, where each unordered pair of
/// positions contributes one kernel factor.
pub(crate) fn for_each_self(
    a: &[Point],
    kernel: &impl Fn(Point, Point) -> Complex64,
    mut visit: impl FnMut(usize, Complex64, Monomial),
) {
    let am = multiplicities(a);
    let n = am.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
    let mut k = vec![0usize; pairs.len()];
    let mut r: Vec<usize> = am.iter().map(|x| x.1).collect();

    #[allow(clippy::too_many_arguments)]
    fn go(
        idx: usize,
        am: &[(Point, usize)],
        pairs: &[(usize, usize)],
        k: &mut Vec<usize>,
        r: &mut Vec<usize>,
        kernel: &dyn Fn(Point, Point) -> Complex64,
        visit: &mut dyn FnMut(usize, Complex64, Monomial),
    ) {
        if idx == pairs.len() {
            let used: Vec<usize> = am.iter().zip(r.iter()).map(|(x, rr)| x.1 - rr).collect();
            let mut mult = 1.0;
            for ((_, n), &u) in am.iter().zip(&used) {
                mult *= falling(*n, u);
            }
            let mut w = Complex64::new(1.0, 0.0);
            let mut order = 0;
            for (&(i, j), &kk) in pairs.iter().zip(k.iter()) {
                if kk == 0 {
                    continue;
                }
                order += kk;
                mult /= factorial(kk);
                if i == j {
                    mult /= 2f64.powi(kk as i32);
                }
                w *= power(kernel(am[i].0, am[j].0), kk);
            }
            visit(order, w * mult, rest(am, &used));
            return;
        }
        let (i, j) = pairs[idx];
        let cap = if i == j { r[i] / 2 } else { r[i].min(r[j]) };
        for c in 0..=cap {
            k[idx] = c;
            r[i] -= if i == j { 2 * c } else { c };
            if i != j {
                r[j] -= c;
            }
            go(idx + 1, am, pairs, k, r, kernel, visit);
            r[i] += if i == j { 2 * c } else { c };
            if i != j {
                r[j] += c;
            }
        }
        k[idx] = 0;
    }

    go(0, &am, &pairs, &mut k, &mut r, kernel, &mut visit);
}

/// `m ∘ exp(s ħ Σ K(p,q) ∂_p ⊗ ∂_q)` on two functionals.
pub fn contract(f: &PolyFunctional, g: &PolyFunctional, kernel: &impl Fn(Point, Point) -> Complex64, s: f64) -> QPoly {
    let mut by_order: Vec<PolyFunctional> = Vec::new();
    for (a, ca) in f.terms() {
        for (b, cb) in g.terms() {
            for_each_cross(a, b, |c| {
                let coeff = ca * cb * c.weight(kernel) * (c.multiplicity * s.powi(c.order as i32));
                if by_order.len() <= c.order {
                    by_order.resize(c.order + 1, PolyFunctional::zero());
                }
                by_order[c.order].add_term(c.rest.clone(), coeff);
            });
        }
    }
    collect_orders(by_order)
}

/// `exp((s ħ/2) Σ K(p,q) ∂_p ∂_q)` on one functional.
pub fn self_contract(f: &PolyFunctional, kernel: &impl Fn(Point, Point) -> Complex64, s: f64) -> QPoly {
    let mut by_order: Vec<PolyFunctional> = Vec::new();
    for (a, ca) in f.terms() {
        for_each_self(a, kernel, |order, w, rest| {
            if by_order.len() <= order {
                by_order.resize(order + 1, PolyFunctional::zero());
            }
            by_order[order].add_term(rest, ca * w * s.powi(order as i32));
        });
    }
    collect_orders(by_order)
}

fn collect_orders(by_order: Vec<PolyFunctional>) -> QPoly {
    let mut out = QPoly::zero();
    for (n, c) in by_order.into_iter().enumerate() {
        out.add_term(n as i32, &c);
    }
    out
}

/// Lifts a product of functionals to Laurent polynomials in ħ.
pub fn lift(f: &QPoly, g: &QPoly, mul: impl Fn(&PolyFunctional, &PolyFunctional) -> QPoly) -> QPoly {
    f.mul_with(g, &mul)
}

/// Lifts a linear map of functionals to Laurent polynomials in ħ.
pub fn lift_linear(f: &QPoly, map: impl Fn(&PolyFunctional) -> QPoly) -> QPoly {
    let mut out = QPoly::zero();
    for (k, c) in f.terms() {
        out.add_assign(&map(c).shift(k));
    }
    out
}

/// Propagators together with the calibrated normalization constants.
#[derive(Debug, Clone)]
pub struct QContext {
    props: PropagatorSet,
    kappa: f64,
    kappa_t: f64,
}

impl QContext {
    pub fn new(props: PropagatorSet) -> Self {
        let mut ctx = QContext { props, kappa: 1.0, kappa_t: 1.0 };
        let (kappa, kappa_t) = ctx.calibrate();
        ctx.kappa = kappa;
        ctx.kappa_t = kappa_t;
        ctx
    }

    pub fn props(&self) -> &PropagatorSet {
        &self.props
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn kappa_t(&self) -> f64 {
        self.kappa_t
    }

    /// Fixes `κ` from `[φ(p), φ(q)]_⋆ = iħΔ(p,q)` and `κ'` from
    /// `φ(p) ·_T φ(q) = φ(p) ⋆ φ(q)` for `p` later than `q`, both on the
    /// one-step pair above the origin.
    fn calibrate(&self) -> (f64, f64) {
        let q = Point::new(0, 0);
        let p = Point::new(1, 0);
        let (fp, fq) = (PolyFunctional::field(p), PolyFunctional::field(q));
        let unit_comm = self.commutator_fn(&fp, &fq).coeff(1).constant_part() / self.kappa;
        let kappa = (Complex64::new(0.0, self.props.pauli_jordan(p, q)) / unit_comm).re;
        let star = contract(&fp, &fq, &|a, b| self.props.two_point(a, b), kappa);
        let unit_t = contract(&fp, &fq, &|a, b| self.props.feynman(a, b), 1.0);
        let kappa_t = (star.coeff(1).constant_part() / unit_t.coeff(1).constant_part()).re;
        (kappa, kappa_t)
    }

    /// `⌊F,G⌋ = Σ ∂_pF Δ(p,q) ∂_qG`.
    pub fn peierls_bracket(&self, f: &PolyFunctional, g: &PolyFunctional) -> PolyFunctional {
        let mut out = PolyFunctional::zero();
        let sg = g.support();
        for p in f.support() {
            let dp = f.derivative(p);
            for &q in &sg {
                let d = self.props.pauli_jordan(p, q);
                if d != 0.0 {
                    out = out.add(&dp.pointwise_mul(&g.derivative(q)).scale(Complex64::new(d, 0.0)));
                }
            }
        }
        out
    }

    pub fn star_fn(&self, f: &PolyFunctional, g: &PolyFunctional) -> QPoly {
        contract(f, g, &|a, b| self.props.two_point(a, b), self.kappa)
    }

    pub fn star(&self, f: &QPoly, g: &QPoly) -> QPoly {
        lift(f, g, |a, b| self.star_fn(a, b))
    }

    /// `F ⋆ G − G ⋆ F`, with both contraction weights of each pattern
    /// multiplied in the same order so that equal kernels cancel exactly.
    pub fn commutator_fn(&self, f: &PolyFunctional, g: &PolyFunctional) -> QPoly {
        let mut by_order: Vec<PolyFunctional> = Vec::new();
        for (a, ca) in f.terms() {
            for (b, cb) in g.terms() {
                for_each_cross(a, b, |c| {
                    if c.order == 0 {
                        return;
                    }
                    let fwd = c.weight(&|x, y| self.props.two_point(x, y));
                    let bwd = c.weight(&|x, y| self.props.two_point(y, x));
                    let coeff = ca * cb * (fwd - bwd) * (c.multiplicity * self.kappa.powi(c.order as i32));
                    if by_order.len() <= c.order {
                        by_order.resize(c.order + 1, PolyFunctional::zero());
                    }
                    by_order[c.order].add_term(c.rest.clone(), coeff);
                });
            }
        }
        collect_orders(by_order)
    }

    pub fn commutator(&self, f: &QPoly, g: &QPoly) -> QPoly {
        lift(f, g, |a, b| self.commutator_fn(a, b))
    }

    pub fn time_order_fn(&self, f: &PolyFunctional) -> QPoly {
        self_contract(f, &|a, b| self.props.feynman(a, b), self.kappa_t)
    }

    pub fn time_order(&self, f: &QPoly) -> QPoly {
        lift_linear(f, |c| self.time_order_fn(c))
    }

    pub fn time_order_inv_fn(&self, f: &PolyFunctional) -> QPoly {
        self_contract(f, &|a, b| self.props.feynman(a, b), -self.kappa_t)
    }

    pub fn time_order_inv(&self, f: &QPoly) -> QPoly {
        lift_linear(f, |c| self.time_order_inv_fn(c))
    }

    /// Self-contraction through the Dyson kernel `conj Δ_F`.
    pub fn anti_time_order_fn(&self, f: &PolyFunctional) -> QPoly {
        self_contract(f, &|a, b| self.props.feynman(a, b).conj(), self.kappa_t)
    }

    pub fn anti_time_order(&self, f: &QPoly) -> QPoly {
        lift_linear(f, |c| self.anti_time_order_fn(c))
    }

    /// `F ·_T G = m ∘ exp(κ'ħ Σ Δ_F(p,q) ∂_p ⊗ ∂_q)(F ⊗ G)`.
    pub fn timeordered_mul_fn(&self, f: &PolyFunctional, g: &PolyFunctional) -> QPoly {
        contract(f, g, &|a, b| self.props.feynman(a, b), self.kappa_t)
    }

    pub fn timeordered_mul(&self, f: &QPoly, g: &QPoly) -> QPoly {
        lift(f, g, |a, b| self.timeordered_mul_fn(a, b))
    }

    /// `T(T⁻¹F · T⁻¹G)`, the defining form of the time-ordered product.
    pub fn timeordered_mul_by_conjugation(&self, f: &QPoly, g: &QPoly) -> QPoly {
        let tf = self.time_order_inv(f);
        let tg = self.time_order_inv(g);
        let prod = lift(&tf, &tg, |a, b| QPoly::constant(a.pointwise_mul(b)));
        self.time_order(&prod)
    }
}

pub fn qpoly(f: PolyFunctional) -> QPoly {
    QPoly::constant(f)
}

/// Largest coefficient over all ħ-exponents and monomials.
pub fn qdistance(a: &QPoly, b: &QPoly) -> f64 {
    a.distance(b)
}

/// Sum of the coefficients of equal ħ-exponent, for comparing against
/// numbers at ħ = 1.
pub fn at_unit_hbar(a: &QPoly) -> PolyFunctional {
    let mut out = PolyFunctional::zero();
    for (_, c) in a.terms() {
        out.add_assign_ref(c);
    }
    out
}

/// `max |(F ⋆ G) ⋆ H − F ⋆ (G ⋆ H)|` over all ħ coefficients.
pub fn associativity_residual(ctx: &QContext, f: &PolyFunctional, g: &PolyFunctional, h: &PolyFunctional) -> f64 {
    let (f, g, h) = (qpoly(f.clone()), qpoly(g.clone()), qpoly(h.clone()));
    let left = ctx.star(&ctx.star(&f, &g), &h);
    let right = ctx.star(&f, &ctx.star(&g, &h));
    qdistance(&left, &right)
}

/// `max |[F, G]_⋆,1 − i⌊F, G⌋|`, the ħ¹ coefficient of the commutator
/// against the Peierls bracket.
pub fn dirac_residual(ctx: &QContext, f: &PolyFunctional, g: &PolyFunctional) -> f64 {
    let first = ctx.commutator_fn(f, g).coeff(1);
    let bracket = ctx.peierls_bracket(f, g).scale(Complex64::new(0.0, 1.0));
    first.distance(&bracket)
}

/// `max |F ·_T G − F ⋆ G|`; vanishes when `F` is not earlier than `G`.
pub fn causal_ordering_residual(ctx: &QContext, f: &PolyFunctional, g: &PolyFunctional) -> f64 {
    qdistance(&ctx.timeordered_mul_fn(f, g), &ctx.star_fn(f, g))
}
