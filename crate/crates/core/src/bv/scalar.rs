//! BV complex of the free lattice scalar and its quantum operators.
//!
//! Fields `φ(p)` live on every lattice point, antifields `φ‡(p)` on the
//! interior rows where the field equation is imposed. The free action is
//! `S₀₀ = −L₀(1)`, whose field derivative is `Pφ` on the interior, so the
//! Koszul differential sends `φ‡(p)` to `−(Pφ)(p)`.

use std::collections::BTreeMap;

use num_complex::Complex64;

use super::{
    antibracket, apply_derivation, bracket_images, bv_laplacian, mul_monomials, DerivationImages, GMonomial, GenId,
    GradedFunctional, GradedGeneratorSet,
};
use crate::dynamics::lagrangian_l0;
use crate::error::{Error, Result};
use crate::fps::{series_inv, series_mul, FormalSeries, HbarPoly};
use crate::functionals::{FieldConfiguration, PolyFunctional};
use crate::lattice::{LatticeSpacetime, Point};
use crate::perturbation::s_matrix;
use crate::quantization::{for_each_cross, for_each_self, QContext};

pub type GPoly = HbarPoly<GradedFunctional>;
pub type GSeries = FormalSeries<GradedFunctional>;

#[derive(Debug, Clone)]
pub struct ScalarBv {
    lattice: LatticeSpacetime,
    set: GradedGeneratorSet,
    fields: Vec<GenId>,
    antifields: BTreeMap<Point, GenId>,
    points: BTreeMap<GenId, Point>,
    free_action: PolyFunctional,
    s0_images: DerivationImages,
}

impl ScalarBv {
    pub fn new(lattice: LatticeSpacetime, mass: f64) -> Self {
        let mut set = GradedGeneratorSet::new();
        let mut points = BTreeMap::new();
        let fields: Vec<GenId> = lattice
            .points()
            .map(|p| {
                let id = set.add_field(format!("phi({},{})", p.t, p.x), 0);
                points.insert(id, p);
                id
            })
            .collect();
        let antifields = lattice
            .points()
            .filter(|&p| lattice.is_interior(p))
            .map(|p| (p, set.add_antifield(fields[lattice.index(p)])))
            .collect();
        let free_action = lagrangian_l0(lattice, mass).action().scale(Complex64::new(-1.0, 0.0));
        let mut bv = ScalarBv { lattice, set, fields, antifields, points, free_action, s0_images: BTreeMap::new() };
        bv.s0_images = bv.koszul_images(&bv.free_action.clone());
        bv
    }

    pub fn lattice(&self) -> &LatticeSpacetime {
        &self.lattice
    }

    pub fn set(&self) -> &GradedGeneratorSet {
        &self.set
    }

    /// `S₀₀ = −L₀(1)`.
    pub fn free_action(&self) -> &PolyFunctional {
        &self.free_action
    }

    pub fn field_id(&self, p: Point) -> GenId {
        self.fields[self.lattice.index(p)]
    }

    pub fn antifield_id(&self, p: Point) -> Option<GenId> {
        self.antifields.get(&p).copied()
    }

    pub fn phi(&self, p: Point) -> GradedFunctional {
        GradedFunctional::generator(self.field_id(p))
    }

    pub fn phi_dag(&self, p: Point) -> Result<GradedFunctional> {
        self.antifield_id(p).map(GradedFunctional::generator).ok_or(Error::MarginViolation(p, 1))
    }

    /// Every generator id, fields first.
    pub fn all_ids(&self) -> Vec<GenId> {
        self.set.ids().collect()
    }

    pub fn from_poly(&self, f: &PolyFunctional) -> GradedFunctional {
        let mut out = GradedFunctional::zero();
        for (m, c) in f.terms() {
            let ids: Vec<GenId> = m.iter().map(|&p| self.field_id(p)).collect();
            out = out.add(&GradedFunctional::monomial(ids, c));
        }
        out
    }

    /// The antifield-free part as a plain functional, or `None` if
    /// antifields occur.
    pub fn to_poly(&self, x: &GradedFunctional) -> Option<PolyFunctional> {
        let mut out = PolyFunctional::zero();
        for (m, c) in x.terms() {
            let pts: Option<Vec<Point>> = m.iter().map(|g| self.points.get(g).copied()).collect();
            out.add_term(pts?, c);
        }
        Some(out)
    }

    /// Evaluates the antifield-free functional `x` at `φ`.
    pub fn evaluate(&self, x: &GradedFunctional, phi: &FieldConfiguration) -> Option<Complex64> {
        self.to_poly(x).map(|f| f.evaluate(phi))
    }

    /// Field points and the remaining generators of a monomial.
    fn split(&self, m: &GMonomial) -> (Vec<Point>, GMonomial) {
        let mut pts = Vec::new();
        let mut rest = Vec::new();
        for g in m {
            match self.points.get(g) {
                Some(&p) => pts.push(p),
                None => rest.push(*g),
            }
        }
        (pts, rest)
    }

    fn join(&self, pts: &[Point], rest: &[GenId]) -> GMonomial {
        let mut ids: Vec<GenId> = pts.iter().map(|&p| self.field_id(p)).collect();
        ids.sort_unstable();
        mul_monomials(&ids, rest).expect("fields are even").1
    }

    /// `φ‡(p) ↦ −∂S/∂φ(p)` for an antifield-free action `S`.
    pub fn koszul_images(&self, s: &PolyFunctional) -> DerivationImages {
        self.antifields
            .iter()
            .map(|(&p, &id)| (id, self.from_poly(&s.derivative(p)).scale(Complex64::new(-1.0, 0.0))))
            .filter(|(_, img)| !img.is_zero())
            .collect()
    }

    /// Koszul differential of a multivector field, i.e. of a functional all
    /// of whose monomials contain antifields.
    pub fn koszul_delta(&self, x: &GradedFunctional, s: &PolyFunctional) -> Result<GradedFunctional> {
        if x.antifield_numbers(&self.set).contains(&0) {
            return Err(Error::WrongGrading("Koszul differential needs antifield number at least one".into()));
        }
        Ok(apply_derivation(x, &self.koszul_images(s)))
    }

    /// `s₀ = δ₀`, the Koszul differential of the free action.
    pub fn s0(&self, x: &GradedFunctional) -> GradedFunctional {
        apply_derivation(x, &self.s0_images)
    }

    pub fn laplacian(&self, x: &GradedFunctional) -> GradedFunctional {
        bv_laplacian(&self.set, x)
    }

    pub fn antibracket(&self, x: &GradedFunctional, y: &GradedFunctional) -> GradedFunctional {
        antibracket(&self.set, x, y)
    }

    /// `X ↦ {X, S}` as a derivation.
    pub fn bracket_images(&self, s: &GradedFunctional) -> DerivationImages {
        bracket_images(&self.set, s)
    }

    fn self_contract_g(&self, x: &GradedFunctional, kernel: &impl Fn(Point, Point) -> Complex64, s: f64) -> GPoly {
        let mut by_order: Vec<GradedFunctional> = Vec::new();
        for (m, c) in x.terms() {
            let (pts, rest) = self.split(m);
            for_each_self(&pts, kernel, |order, w, left| {
                if by_order.len() <= order {
                    by_order.resize(order + 1, GradedFunctional::zero());
                }
                by_order[order].add_term(self.join(&left, &rest), c * w * s.powi(order as i32));
            });
        }
        collect(by_order)
    }

    fn contract_g(
        &self,
        x: &GradedFunctional,
        y: &GradedFunctional,
        kernel: &impl Fn(Point, Point) -> Complex64,
        s: f64,
    ) -> GPoly {
        let mut by_order: Vec<GradedFunctional> = Vec::new();
        for (a, ca) in x.terms() {
            let (pa, ra) = self.split(a);
            for (b, cb) in y.terms() {
                let (pb, rb) = self.split(b);
                let Some((sign, rest)) = mul_monomials(&ra, &rb) else { continue };
                for_each_cross(&pa, &pb, |cc| {
                    let coeff = ca * cb * cc.weight(kernel) * (sign * cc.multiplicity * s.powi(cc.order as i32));
                    if by_order.len() <= cc.order {
                        by_order.resize(cc.order + 1, GradedFunctional::zero());
                    }
                    by_order[cc.order].add_term(self.join(&cc.rest, &rest), coeff);
                });
            }
        }
        collect(by_order)
    }

    pub fn time_order(&self, ctx: &QContext, x: &GPoly) -> GPoly {
        lift_linear(x, |c| self.self_contract_g(c, &|a, b| ctx.props().feynman(a, b), ctx.kappa_t()))
    }

    pub fn time_order_inv(&self, ctx: &QContext, x: &GPoly) -> GPoly {
        lift_linear(x, |c| self.self_contract_g(c, &|a, b| ctx.props().feynman(a, b), -ctx.kappa_t()))
    }

    pub fn star_fn(&self, ctx: &QContext, x: &GradedFunctional, y: &GradedFunctional) -> GPoly {
        self.contract_g(x, y, &|a, b| ctx.props().two_point(a, b), ctx.kappa())
    }

    pub fn timeordered_mul_fn(&self, ctx: &QContext, x: &GradedFunctional, y: &GradedFunctional) -> GPoly {
        self.contract_g(x, y, &|a, b| ctx.props().feynman(a, b), ctx.kappa_t())
    }

    pub fn s0_poly(&self, x: &GPoly) -> GPoly {
        lift_linear(x, |c| GPoly::constant(self.s0(c)))
    }

    /// `−iħ△X`.
    pub fn minus_i_hbar_laplacian(&self, x: &GPoly) -> GPoly {
        lift_linear(x, |c| GPoly::monomial(1, self.laplacian(c).scale(Complex64::new(0.0, -1.0))))
    }

    /// `max |T⁻¹ s₀ T X − (s₀X − iħ△X)|`.
    pub fn s0_identity_residual(&self, ctx: &QContext, x: &GradedFunctional) -> f64 {
        let xp = GPoly::constant(x.clone());
        let lhs = self.time_order_inv(ctx, &self.s0_poly(&self.time_order(ctx, &xp)));
        let rhs = self.s0_poly(&xp).add(&self.minus_i_hbar_laplacian(&xp));
        lhs.distance(&rhs)
    }

    /// `max |δ₀(TX) − T(δ₀X − iħ△X)|`.
    pub fn time_ordered_koszul_residual(&self, ctx: &QContext, x: &GradedFunctional) -> f64 {
        let xp = GPoly::constant(x.clone());
        let lhs = self.s0_poly(&self.time_order(ctx, &xp));
        let inner = self.s0_poly(&xp).add(&self.minus_i_hbar_laplacian(&xp));
        lhs.distance(&self.time_order(ctx, &inner))
    }

    /// `max |½{L,L} − iħ△L|` over both ħ orders.
    pub fn qme_residual(&self, l: &GradedFunctional) -> f64 {
        let classical = self.antibracket(l, l).scale(Complex64::new(0.5, 0.0));
        let quantum = self.laplacian(l);
        classical.max_abs().max(quantum.max_abs())
    }

    /// Interacting observables for an antifield-free interaction.
    pub fn interacting<'a>(
        &'a self,
        ctx: &'a QContext,
        v: &PolyFunctional,
        order: usize,
    ) -> Result<GradedInteraction<'a>> {
        let s_poly = s_matrix(ctx, v, order)?;
        let s = FormalSeries::from_coeffs(
            s_poly
                .coeffs()
                .iter()
                .map(|c| {
                    let mut out = GPoly::zero();
                    for (k, f) in c.terms() {
                        out.add_term(k, &self.from_poly(f));
                    }
                    out
                })
                .collect(),
        );
        let s_inv = series_inv(&s, &|a, b| self.star_fn(ctx, a, b))?;
        Ok(GradedInteraction { bv: self, ctx, v: self.from_poly(v), order, s, s_inv })
    }
}

fn collect(by_order: Vec<GradedFunctional>) -> GPoly {
    let mut out = GPoly::zero();
    for (n, c) in by_order.into_iter().enumerate() {
        out.add_term(n as i32, &c);
    }
    out
}

fn lift_linear(x: &GPoly, map: impl Fn(&GradedFunctional) -> GPoly) -> GPoly {
    let mut out = GPoly::zero();
    for (k, c) in x.terms() {
        out.add_assign(&map(c).shift(k));
    }
    out
}

/// Bogoliubov map on graded functionals and the interacting BV operator.
#[derive(Debug, Clone)]
pub struct GradedInteraction<'a> {
    bv: &'a ScalarBv,
    ctx: &'a QContext,
    v: GradedFunctional,
    order: usize,
    s: GSeries,
    s_inv: GSeries,
}

impl GradedInteraction<'_> {
    /// `R_V(X) = S^{⋆−1} ⋆ (S ·_T T(X))`.
    pub fn bogoliubov(&self, x: &GPoly) -> Result<GSeries> {
        let tx = FormalSeries::constant(self.order, self.bv.time_order(self.ctx, x));
        let ordered = series_mul(&self.s, &tx, &|a, b| self.bv.timeordered_mul_fn(self.ctx, a, b))?;
        series_mul(&self.s_inv, &ordered, &|a, b| self.bv.star_fn(self.ctx, a, b))
    }

    /// Order-by-order inverse of [`Self::bogoliubov`].
    pub fn bogoliubov_inverse(&self, y: &GSeries) -> Result<GSeries> {
        let mut f = FormalSeries::zero(self.order);
        let mut images: Vec<GSeries> = Vec::new();
        for n in 0..=self.order {
            let mut rhs = y.coeff(n).clone();
            for j in 1..=n {
                rhs = rhs.sub(images[n - j].coeff(j));
            }
            let fn_ = self.bv.time_order_inv(self.ctx, &rhs);
            images.push(self.bogoliubov(&fn_)?);
            f.set_coeff(n, fn_);
        }
        Ok(f)
    }

    /// `R_V⁻¹ ∘ s₀ ∘ R_V`.
    pub fn conjugated_s0(&self, x: &GradedFunctional) -> Result<GSeries> {
        let r = self.bogoliubov(&GPoly::constant(x.clone()))?;
        let s0r = r.map_coeffs(|c| self.bv.s0_poly(c));
        self.bogoliubov_inverse(&s0r)
    }

    /// `ŝX = {X, S₀₀ + λV} − iħ△X` as a series in λ.
    pub fn s_hat(&self, x: &GradedFunctional) -> GSeries {
        let xp = GPoly::constant(x.clone());
        let mut out = FormalSeries::zero(self.order);
        out.set_coeff(0, self.bv.s0_poly(&xp).add(&self.bv.minus_i_hbar_laplacian(&xp)));
        if self.order >= 1 {
            out.set_coeff(1, GPoly::constant(self.bv.antibracket(x, &self.v)));
        }
        out
    }

    pub fn s_hat_residual(&self, x: &GradedFunctional) -> Result<f64> {
        self.conjugated_s0(x)?.distance(&self.s_hat(x))
    }
}
