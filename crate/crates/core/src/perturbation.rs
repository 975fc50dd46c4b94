//! Formal S-matrices, interacting fields and the local net axioms.
//!
//! Series in the coupling λ carry Laurent polynomials in ħ with functional
//! values. Products of series are always the star product unless a
//! function says otherwise.
//!
//! Star and time-ordered products of delta-supported kernels never enlarge
//! supports, so algebraic operations need no distance from the time
//! boundary. Operations that apply the wave operator (the time-slice
//! reduction) need the interior margin of the propagator set.

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;
use rand::Rng;

use crate::dynamics::{KGOperator, PropagatorSet};
use crate::error::{Error, Result};
use crate::fps::{series_exp, series_inv, series_mul, FormalSeries, HbarPoly};
use crate::functionals::{random_poly, FieldConfiguration, PolyFunctional};
use crate::lattice::{LatticeSpacetime, Point, Region};
use crate::quantization::{QContext, QPoly};

pub type Series = FormalSeries<PolyFunctional>;

/// Distance from the time boundary needed by operations that apply `P`.
pub fn dynamical_margin(props: &PropagatorSet) -> usize {
    props.interior_margin
}

/// Every point of `support` keeps `margin` rows to both time boundaries.
pub fn check_margin(lattice: &LatticeSpacetime, support: &BTreeSet<Point>, margin: usize) -> Result<()> {
    for &p in support {
        lattice.check(p)?;
        if p.t < margin || p.t + margin >= lattice.n_t() {
            return Err(Error::MarginViolation(p, margin));
        }
    }
    Ok(())
}

pub fn constant_series(order: usize, f: QPoly) -> Series {
    FormalSeries::constant(order, f)
}

pub fn star_series(ctx: &QContext, a: &Series, b: &Series) -> Result<Series> {
    series_mul(a, b, &|x, y| ctx.star_fn(x, y))
}

pub fn star_inverse(ctx: &QContext, a: &Series) -> Result<Series> {
    series_inv(a, &|x, y| ctx.star_fn(x, y))
}

/// `(i/ħ) X` as a λ-homogeneous series of degree one.
fn i_over_hbar(order: usize, x: &QPoly) -> Series {
    FormalSeries::monomial(order, 1, x.shift(-1).scale(Complex64::new(0.0, 1.0)))
}

/// `S(λV) = exp_T((i/ħ) λ T(V))`.
pub fn s_matrix(ctx: &QContext, v: &PolyFunctional, order: usize) -> Result<Series> {
    if order == 0 {
        return Ok(FormalSeries::one(0));
    }
    let a = i_over_hbar(order, &ctx.time_order_fn(v));
    series_exp(&a, &|x, y| ctx.timeordered_mul_fn(x, y))
}

/// The λⁿ coefficient `(i/ħ)ⁿ/n! T(Vⁿ)`, computed without products of
/// series.
pub fn s_matrix_direct(ctx: &QContext, v: &PolyFunctional, order: usize) -> Series {
    let mut out = FormalSeries::zero(order);
    let mut power = PolyFunctional::constant(Complex64::new(1.0, 0.0));
    let mut factorial = 1.0;
    for n in 0..=order {
        if n > 0 {
            power = power.pointwise_mul(v);
            factorial *= n as f64;
        }
        let phase = Complex64::new(0.0, 1.0).powi(n as i32) / factorial;
        out.set_coeff(n, ctx.time_order_fn(&power).shift(-(n as i32)).scale(phase));
    }
    out
}

/// `T̄(e^{−iλV/ħ})`, anti-time-ordered through `conj Δ_F`.
pub fn anti_s_matrix_direct(ctx: &QContext, v: &PolyFunctional, order: usize) -> Series {
    let mut out = FormalSeries::zero(order);
    let mut power = PolyFunctional::constant(Complex64::new(1.0, 0.0));
    let mut factorial = 1.0;
    for n in 0..=order {
        if n > 0 {
            power = power.pointwise_mul(v);
            factorial *= n as f64;
        }
        let phase = Complex64::new(0.0, -1.0).powi(n as i32) / factorial;
        out.set_coeff(n, ctx.anti_time_order_fn(&power).shift(-(n as i32)).scale(phase));
    }
    out
}

/// An interaction `V` with its S-matrix and star inverse precomputed.
#[derive(Debug, Clone)]
pub struct InteractingTheory<'a> {
    ctx: &'a QContext,
    v: PolyFunctional,
    order: usize,
    s: Series,
    s_inv: Series,
}

impl<'a> InteractingTheory<'a> {
    pub fn new(ctx: &'a QContext, v: PolyFunctional, order: usize) -> Result<Self> {
        let s = s_matrix(ctx, &v, order)?;
        let s_inv = star_inverse(ctx, &s)?;
        Ok(InteractingTheory { ctx, v, order, s, s_inv })
    }

    pub fn ctx(&self) -> &QContext {
        self.ctx
    }

    pub fn interaction(&self) -> &PolyFunctional {
        &self.v
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn s_matrix(&self) -> &Series {
        &self.s
    }

    pub fn s_matrix_inverse(&self) -> &Series {
        &self.s_inv
    }

    /// Bogoliubov's formula `S^{⋆−1} ⋆ (S ·_T T(F))`.
    pub fn bogoliubov(&self, f: &QPoly) -> Result<Series> {
        let tf = constant_series(self.order, self.ctx.time_order(f));
        let ordered = series_mul(&self.s, &tf, &|x, y| self.ctx.timeordered_mul_fn(x, y))?;
        star_series(self.ctx, &self.s_inv, &ordered)
    }

    pub fn bogoliubov_fn(&self, f: &PolyFunctional) -> Result<Series> {
        self.bogoliubov(&QPoly::constant(f.clone()))
    }

    /// `R_V` applied to a λ-dependent argument, truncated at the order.
    pub fn bogoliubov_series(&self, f: &Series) -> Result<Series> {
        let mut out = FormalSeries::zero(self.order);
        for n in 0..=self.order {
            if f.coeff(n).is_zero() {
                continue;
            }
            let r = self.bogoliubov(f.coeff(n))?;
            for j in 0..=self.order - n {
                let mut c = out.coeff(n + j).clone();
                c.add_assign(r.coeff(j));
                out.set_coeff(n + j, c);
            }
        }
        Ok(out)
    }

    /// Solves `R_V(F) = Y` order by order:
    /// `F_n = T⁻¹(Y_n − Σ_{j≥1} R_j(F_{n−j}))`.
    pub fn bogoliubov_inverse(&self, y: &Series) -> Result<Series> {
        let mut f = FormalSeries::zero(self.order);
        let mut images: Vec<Series> = Vec::new();
        for n in 0..=self.order {
            let mut rhs = y.coeff(n).clone();
            for j in 1..=n {
                rhs = rhs.sub(images[n - j].coeff(j));
            }
            let fn_ = self.ctx.time_order_inv(&rhs);
            images.push(self.bogoliubov(&fn_)?);
            f.set_coeff(n, fn_);
        }
        Ok(f)
    }

    /// `R_V⁻¹(R_V(F) ⋆ R_V(G))` for λ-dependent arguments.
    pub fn interacting_star(&self, f: &Series, g: &Series) -> Result<Series> {
        let rf = self.bogoliubov_series(f)?;
        let rg = self.bogoliubov_series(g)?;
        self.bogoliubov_inverse(&star_series(self.ctx, &rf, &rg)?)
    }
}

/// Residual of `S(F1+F+F2) = S(F1+F) ⋆ S(F)^{⋆−1} ⋆ S(F+F2)`, which holds
/// when `supp F2` does not meet the causal future of `supp F1`.
pub fn check_causal_factorization(
    ctx: &QContext,
    f1: &PolyFunctional,
    f: &PolyFunctional,
    f2: &PolyFunctional,
    order: usize,
) -> Result<f64> {
    let l = ctx.props().lattice;
    if !l.not_to_future_of(&f2.support(), &f1.support()) {
        return Err(Error::CausalOrderViolated("the support of F2 meets the causal future of F1".into()));
    }
    let lhs = s_matrix(ctx, &f1.add(f).add(f2), order)?;
    let a = s_matrix(ctx, &f1.add(f), order)?;
    let b = star_inverse(ctx, &s_matrix(ctx, f, order)?)?;
    let c = s_matrix(ctx, &f.add(f2), order)?;
    let rhs = star_series(ctx, &star_series(ctx, &a, &b)?, &c)?;
    lhs.distance(&rhs)
}

/// Largest commutator over `samples` random generator pairs localized in
/// two spacelike regions.
pub fn check_einstein_causality(
    ctx: &QContext,
    o1: &Region,
    o2: &Region,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let l = ctx.props().lattice;
    if !l.sets_spacelike(&o1.points, &o2.points) {
        return Err(Error::NotSpacelike);
    }
    let p1: Vec<Point> = o1.points.iter().copied().collect();
    let p2: Vec<Point> = o2.points.iter().copied().collect();
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let a = random_poly(rng, &p1, 3, 3);
        let b = random_poly(rng, &p2, 3, 3);
        worst = worst.max(ctx.commutator_fn(&a, &b).max_abs());
    }
    Ok(worst)
}

/// Moves a smearing function into the slab `[t0, t0+thickness)` without
/// changing `Δf`.
///
/// The part above the slab is replaced by `f − P(χ G_A f)` with `χ = 1` on
/// rows after `t0`; the part below by `f − P(χ' G_R f)` with `χ' = 1` on
/// rows before `t0 + thickness − 1`.
pub fn reduce_to_slab(
    op: &KGOperator,
    props: &PropagatorSet,
    f: &FieldConfiguration,
    t0: usize,
    thickness: usize,
) -> Result<FieldConfiguration> {
    let l = *op.lattice();
    if thickness < 2 {
        return Err(Error::SlabTooThin(thickness));
    }
    let margin = dynamical_margin(props);
    if t0 < margin || t0 + thickness + margin > l.n_t() {
        return Err(Error::SlabOutOfRange { t0, thickness, n_t: l.n_t() });
    }
    check_margin(&l, &f.support(), margin)?;
    let top = t0 + thickness;
    let part =
        |keep: &dyn Fn(usize) -> bool| FieldConfiguration::from_fn(&l, |p| if keep(p.t) { f.get(p) } else { 0.0 });
    let above = part(&|t| t >= top);
    let below = part(&|t| t < t0);
    let inside = part(&|t| t >= t0 && t < top);

    let cut = |g: FieldConfiguration, keep: &dyn Fn(usize) -> bool| {
        FieldConfiguration::from_fn(&l, |p| if keep(p.t) { g.get(p) } else { 0.0 })
    };
    let g_above = cut(props.apply_matrix(&props.g_a, &above), &|t| t > t0);
    let g_below = cut(props.apply_matrix(&props.g_r, &below), &|t| t + 1 < top);
    // both differences vanish off the slab up to roundoff
    let in_slab = |t: usize| t >= t0 && t < top;
    let moved_above = cut(above.sub(&op.apply(&g_above)), &in_slab);
    let moved_below = cut(below.sub(&op.apply(&g_below)), &in_slab);
    Ok(inside.add(&moved_above).add(&moved_below))
}

/// Diamonds with generator sets `{φ(p) : p ∈ O}`.
#[derive(Debug, Clone)]
pub struct LocalNet {
    pub regions: Vec<Region>,
}

impl LocalNet {
    pub fn new(regions: Vec<Region>) -> Self {
        LocalNet { regions }
    }

    pub fn generators(&self, i: usize) -> Vec<Point> {
        self.regions[i].points.iter().copied().collect()
    }

    /// Index map of generators of region `i` into those of region `j`.
    pub fn inclusion(&self, i: usize, j: usize) -> Option<Vec<usize>> {
        let target: BTreeMap<Point, usize> = self.generators(j).into_iter().enumerate().map(|(k, p)| (p, k)).collect();
        self.generators(i).iter().map(|p| target.get(p).copied()).collect()
    }

    /// For every nested triple, the inclusions exist, are injective and
    /// compose.
    pub fn check_isotony(&self) -> bool {
        let n = self.regions.len();
        let injective = |m: &[usize]| m.iter().collect::<BTreeSet<_>>().len() == m.len();
        for i in 0..n {
            for j in 0..n {
                if !self.regions[i].is_subset(&self.regions[j]) {
                    continue;
                }
                let Some(ij) = self.inclusion(i, j) else { return false };
                if !injective(&ij) {
                    return false;
                }
                for k in 0..n {
                    if !self.regions[j].is_subset(&self.regions[k]) {
                        continue;
                    }
                    let (Some(jk), Some(ik)) = (self.inclusion(j, k), self.inclusion(i, k)) else {
                        return false;
                    };
                    if ij.iter().map(|&a| jk[a]).collect::<Vec<_>>() != ik {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Evaluates every functional coefficient of a series at `φ`, keeping the
/// ħ grading.
pub fn evaluate_series(s: &Series, phi: &FieldConfiguration) -> FormalSeries<Complex64> {
    FormalSeries::from_coeffs(
        s.coeffs()
            .iter()
            .map(|c| {
                let mut out = HbarPoly::zero();
                for (k, f) in c.terms() {
                    out.add_term(k, &f.evaluate(phi));
                }
                out
            })
            .collect(),
    )
}

/// A solution of `Pφ = 0` from random initial rows in `[-1, 1]`.
pub fn random_solution(op: &KGOperator, rng: &mut impl Rng) -> FieldConfiguration {
    let n_x = op.lattice().n_x();
    let row0: Vec<f64> = (0..n_x).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    let row1: Vec<f64> = (0..n_x).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    op.evolve(&row0, &row1)
}
