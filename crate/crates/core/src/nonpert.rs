//! Group algebra on unitary generators `S(F)` modulo the relations
//! `S(0) = 1` (S1), causal factorization (S2) and the dynamical relation
//! `S(F) = S(F^φ + δL(φ))` (S3), with bounded-depth rewriting.
//!
//! Labels are polynomials in the coupling `λ` without constant term, so that
//! the perturbative evaluation map `S(F) ↦ T(e^{iF/ħ})` is a formal power
//! series. Configuration shifts in S3 carry one power of `λ`.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::dynamics::{GeneralizedLagrangian, KGOperator};
use crate::error::{Error, Result};
use crate::fps::{series_exp, FormalSeries, HbarPoly};
use crate::functionals::{FieldConfiguration, PolyFunctional};
use crate::lattice::{LatticeSpacetime, Point};
use crate::perturbation::{evaluate_series, star_inverse, star_series, Series};
use crate::quantization::QContext;

/// Coefficients below this size are dropped from labels after a rewrite.
const CHOP: f64 = 1e-13;

/// A label `F = Σ_k λ^k F_k` with `F_0 = 0` and its cached support.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalLabel {
    coeffs: Vec<PolyFunctional>,
    support: BTreeSet<Point>,
}

impl FunctionalLabel {
    pub fn new(mut coeffs: Vec<PolyFunctional>) -> Result<Self> {
        if coeffs.first().is_some_and(|c| !c.is_zero()) {
            return Err(Error::WrongGrading("labels need a vanishing λ⁰ coefficient".into()));
        }
        if coeffs.is_empty() {
            coeffs.push(PolyFunctional::zero());
        }
        while coeffs.len() > 1 && coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        let support = coeffs.iter().flat_map(|c| c.support()).collect();
        Ok(FunctionalLabel { coeffs, support })
    }

    pub fn zero() -> Self {
        Self::new(Vec::new()).expect("empty label")
    }

    /// `λF`.
    pub fn scaled(f: PolyFunctional) -> Self {
        Self::new(vec![PolyFunctional::zero(), f]).expect("λ¹ label")
    }

    pub fn coeffs(&self) -> &[PolyFunctional] {
        &self.coeffs
    }

    pub fn coeff(&self, k: usize) -> PolyFunctional {
        self.coeffs.get(k).cloned().unwrap_or_default()
    }

    pub fn support(&self) -> &BTreeSet<Point> {
        &self.support
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_zero())
    }

    fn zip(&self, other: &Self, op: impl Fn(&PolyFunctional, &PolyFunctional) -> PolyFunctional) -> Self {
        let n = self.coeffs.len().max(other.coeffs.len());
        Self::new((0..n).map(|k| op(&self.coeff(k), &other.coeff(k))).collect()).expect("λ⁰ stays zero")
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.add(b))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a.sub(b))
    }

    /// Constant parts `c_k` of each coefficient.
    pub fn constants(&self) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c.constant_part()).collect()
    }

    pub fn without_constants(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| c.without_constant()).collect()).expect("λ⁰ stays zero")
    }

    fn chopped(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .map(|c| {
                PolyFunctional::from_terms(c.terms().filter(|(_, v)| v.norm() > CHOP).map(|(m, v)| (m.clone(), v)))
            })
            .collect();
        Self::new(coeffs).expect("λ⁰ stays zero")
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).coeffs.iter().map(|c| c.max_abs()).fold(0.0, f64::max)
    }

    /// Smearing function of the linear part of the `λ¹` coefficient.
    pub fn linear_smearing(&self, lattice: &LatticeSpacetime) -> FieldConfiguration {
        let lin = self.coeff(1).homogeneous(1);
        FieldConfiguration::from_fn(lattice, |p| lin.coeff(&[p]).re)
    }

    /// `ψ ↦ F(ψ + λh)`.
    pub fn shifted(&self, h: &FieldConfiguration) -> Self {
        let mut coeffs: Vec<PolyFunctional> = Vec::new();
        for (k, c) in self.coeffs.iter().enumerate() {
            for (j, part) in shift_expansion(c, h).into_iter().enumerate() {
                if coeffs.len() <= k + j {
                    coeffs.resize(k + j + 1, PolyFunctional::zero());
                }
                coeffs[k + j] = coeffs[k + j].add(&part);
            }
        }
        Self::new(coeffs).expect("λ⁰ stays zero")
    }
}

/// `F(ψ + λh) = Σ_j λ^j E_j(ψ)`, returned as `[E_0, E_1, ...]`.
pub fn shift_expansion(f: &PolyFunctional, h: &FieldConfiguration) -> Vec<PolyFunctional> {
    let mut out = vec![PolyFunctional::zero(); f.degree() + 1];
    for (m, c) in f.terms() {
        let n = m.len();
        for mask in 0u32..(1 << n) {
            let mut coeff = c;
            let mut kept = Vec::new();
            for (i, &p) in m.iter().enumerate() {
                if mask & (1 << i) != 0 {
                    kept.push(p);
                } else {
                    coeff *= h.get(p);
                }
            }
            if coeff != Complex64::new(0.0, 0.0) {
                out[n - kept.len()].add_term(kept, coeff);
            }
        }
    }
    out
}

/// The scalar `exp((i/ħ) Σ_k λ^k c_k)`, stored through its exponent.
#[derive(Debug, Clone, Default)]
pub struct Phase {
    pub exponent: Vec<Complex64>,
}

impl PartialEq for Phase {
    fn eq(&self, other: &Self) -> bool {
        let n = self.exponent.len().max(other.exponent.len());
        (0..n).all(|k| self.coeff(k) == other.coeff(k))
    }
}

impl Phase {
    pub fn one() -> Self {
        Phase::default()
    }

    pub fn is_one(&self) -> bool {
        self.exponent.iter().all(|c| *c == Complex64::new(0.0, 0.0))
    }

    pub fn add(&self, other: &Self) -> Self {
        let n = self.exponent.len().max(other.exponent.len());
        let at = |v: &[Complex64], k: usize| v.get(k).copied().unwrap_or_default();
        Phase { exponent: (0..n).map(|k| at(&self.exponent, k) + at(&other.exponent, k)).collect() }
    }

    pub fn neg(&self) -> Self {
        Phase { exponent: self.exponent.iter().map(|c| -c).collect() }
    }

    /// `c_k`, the coefficient of `iλ^k/ħ` in the exponent.
    pub fn coeff(&self, k: usize) -> Complex64 {
        self.exponent.get(k).copied().unwrap_or_default()
    }

    pub fn to_series(&self, order: usize) -> Result<Series> {
        let mut a = FormalSeries::zero(order);
        for (k, c) in self.exponent.iter().enumerate().take(order + 1) {
            if k == 0 {
                if *c != Complex64::new(0.0, 0.0) {
                    return Err(Error::NonZeroConstant);
                }
                continue;
            }
            let term = PolyFunctional::constant(c * Complex64::new(0.0, 1.0));
            a.set_coeff(k, HbarPoly::monomial(-1, term));
        }
        series_exp(&a, &|x, y| HbarPoly::constant(x.pointwise_mul(y)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Letter {
    pub label: FunctionalLabel,
    pub inverse: bool,
}

/// `phase · S(F_1)^{±1} ⋯ S(F_n)^{±1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SWord {
    pub phase: Phase,
    pub letters: Vec<Letter>,
}

impl SWord {
    pub fn identity() -> Self {
        SWord { phase: Phase::one(), letters: Vec::new() }
    }

    pub fn generator(label: FunctionalLabel) -> Self {
        SWord { phase: Phase::one(), letters: vec![Letter { label, inverse: false }] }.free_reduced()
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        SWord { phase: self.phase.add(&other.phase), letters }.free_reduced()
    }

    pub fn inverse(&self) -> Self {
        let letters =
            self.letters.iter().rev().map(|l| Letter { label: l.label.clone(), inverse: !l.inverse }).collect();
        SWord { phase: self.phase.neg(), letters }
    }

    /// Cancels adjacent `S(F)S(F)^{-1}` and `S(F)^{-1}S(F)` pairs.
    pub fn free_reduced(&self) -> Self {
        let mut stack: Vec<Letter> = Vec::with_capacity(self.letters.len());
        for l in &self.letters {
            match stack.last() {
                Some(top) if top.label == l.label && top.inverse != l.inverse => {
                    stack.pop();
                }
                _ => stack.push(l.clone()),
            }
        }
        SWord { phase: self.phase.clone(), letters: stack }
    }

    pub fn is_freely_reduced(&self) -> bool {
        self.letters.windows(2).all(|w| !(w[0].label == w[1].label && w[0].inverse != w[1].inverse))
    }

    /// Drops `S(0)` letters (S1), moves constants into the phase when
    /// `extract_constants` is set, then reduces freely.
    pub fn normalized(&self, extract_constants: bool) -> Self {
        let mut phase = self.phase.clone();
        let mut letters = Vec::new();
        for l in &self.letters {
            let mut label = l.label.chopped();
            if extract_constants {
                let c = Phase { exponent: label.constants() };
                phase = phase.add(&if l.inverse { c.neg() } else { c });
                label = label.without_constants();
            }
            if !label.is_zero() {
                letters.push(Letter { label, inverse: l.inverse });
            }
        }
        SWord { phase, letters }.free_reduced()
    }

    fn replace(&self, pos: usize, len: usize, with: Vec<Letter>) -> Self {
        let mut letters = self.letters[..pos].to_vec();
        letters.extend(with);
        letters.extend(self.letters[pos + len..].iter().cloned());
        SWord { phase: self.phase.clone(), letters }
    }
}

fn check_position(w: &SWord, pos: usize, len: usize) -> Result<()> {
    if pos + len > w.len() {
        return Err(Error::BadPosition(pos));
    }
    Ok(())
}

/// Precondition of S2: `supp F2 ∩ J⁺(supp F1) = ∅`.
fn check_order(lattice: &LatticeSpacetime, f1: &FunctionalLabel, f2: &FunctionalLabel) -> Result<()> {
    if lattice.not_to_future_of(f2.support(), f1.support()) {
        Ok(())
    } else {
        Err(Error::CausalOrderViolated("the support of F2 meets the causal future of F1".into()))
    }
}

/// S2: replaces `S(F1+F+F2)` at `pos` by `S(F1+F) S(F)^{-1} S(F+F2)`.
pub fn rewrite_s2(
    w: &SWord,
    pos: usize,
    split: (&FunctionalLabel, &FunctionalLabel, &FunctionalLabel),
    lattice: &LatticeSpacetime,
) -> Result<SWord> {
    check_position(w, pos, 1)?;
    let (f1, f, f2) = split;
    let letter = &w.letters[pos];
    let residual = f1.add(f).add(f2).distance(&letter.label);
    if residual > CHOP {
        return Err(Error::DecompositionMismatch(residual));
    }
    check_order(lattice, f1, f2)?;
    let a = Letter { label: f1.add(f), inverse: false };
    let b = Letter { label: f.clone(), inverse: true };
    let c = Letter { label: f.add(f2), inverse: false };
    let with = if letter.inverse {
        let inv = |l: Letter| Letter { label: l.label, inverse: !l.inverse };
        vec![inv(c), inv(b), inv(a)]
    } else {
        vec![a, b, c]
    };
    Ok(w.replace(pos, 1, with))
}

/// Inverse of S2: `S(A) S(F)^{-1} S(B) ↦ S(A + B − F)` at `pos`, and
/// `S(A) S(B) ↦ S(A + B)` when the middle letter is absent (`F = 0`).
pub fn rewrite_s2_inverse(w: &SWord, pos: usize, lattice: &LatticeSpacetime) -> Result<SWord> {
    check_position(w, pos, 2)?;
    let l = &w.letters;
    let three = pos + 3 <= l.len() && !l[pos].inverse && l[pos + 1].inverse && !l[pos + 2].inverse;
    if three {
        let f = &l[pos + 1].label;
        let (f1, f2) = (l[pos].label.sub(f), l[pos + 2].label.sub(f));
        if check_order(lattice, &f1, &f2).is_ok() {
            let merged = f1.add(f).add(&f2);
            return Ok(w.replace(pos, 3, vec![Letter { label: merged, inverse: false }]));
        }
    }
    let (a, b) = (&l[pos], &l[pos + 1]);
    if a.inverse != b.inverse {
        return Err(Error::WrongGrading("adjacent letters have opposite exponents".into()));
    }
    // S(A)^{-1} S(B)^{-1} = (S(B) S(A))^{-1}
    let (later, earlier) = if a.inverse { (&b.label, &a.label) } else { (&a.label, &b.label) };
    check_order(lattice, later, earlier)?;
    Ok(w.replace(pos, 2, vec![Letter { label: a.label.add(&b.label), inverse: a.inverse }]))
}

/// S3: replaces the label `F` at `pos` by `F^{λφ} + δL(λφ)`.
pub fn rewrite_s3(w: &SWord, pos: usize, phi: &FieldConfiguration, l: &GeneralizedLagrangian) -> Result<SWord> {
    check_position(w, pos, 1)?;
    let lattice = l.lattice();
    let support = phi.support();
    if let Some(&p) = support.iter().find(|p| !lattice.is_interior(**p)) {
        return Err(Error::MarginViolation(p, 1));
    }
    let letter = &w.letters[pos];
    let label = letter.label.shifted(phi).add(&delta_l_label(l, phi));
    Ok(w.replace(pos, 1, vec![Letter { label, inverse: letter.inverse }]))
}

/// `ψ ↦ L(f)[ψ + λφ] − L(f)[ψ]` with `f = 1` on a neighbourhood of `supp φ`.
pub fn delta_l_label(l: &GeneralizedLagrangian, phi: &FieldConfiguration) -> FunctionalLabel {
    let inner = l.stencil_closure(&phi.support());
    let region = l.stencil_closure(&inner);
    let cutoff = FieldConfiguration::from_fn(l.lattice(), |p| if region.contains(&p) { 1.0 } else { 0.0 });
    let mut parts = shift_expansion(&l.eval(&cutoff), phi);
    parts[0] = PolyFunctional::zero();
    FunctionalLabel::new(parts).expect("λ⁰ part removed")
}

/// `T(e^{iF/ħ})` truncated at `order`.
pub fn label_s_matrix(ctx: &QContext, label: &FunctionalLabel, order: usize) -> Result<Series> {
    let mut a = FormalSeries::zero(order);
    for (k, c) in label.coeffs().iter().enumerate().take(order + 1).skip(1) {
        a.set_coeff(k, ctx.time_order_fn(c).shift(-1).scale(Complex64::new(0.0, 1.0)));
    }
    series_exp(&a, &|x, y| ctx.timeordered_mul_fn(x, y))
}

/// Perturbative image of a word: the phase times the ⋆-product of the
/// letters.
pub fn evaluate_word(ctx: &QContext, w: &SWord, order: usize) -> Result<Series> {
    let mut out = w.phase.to_series(order)?;
    for l in &w.letters {
        let s = label_s_matrix(ctx, &l.label, order)?;
        let s = if l.inverse { star_inverse(ctx, &s)? } else { s };
        out = star_series(ctx, &out, &s)?;
    }
    Ok(out)
}

/// Largest difference of the images of two words on the given solutions.
pub fn oracle_residual(
    ctx: &QContext,
    a: &SWord,
    b: &SWord,
    order: usize,
    solutions: &[FieldConfiguration],
) -> Result<f64> {
    let (ea, eb) = (evaluate_word(ctx, a, order)?, evaluate_word(ctx, b, order)?);
    let mut worst = 0.0f64;
    for phi in solutions {
        worst = worst.max(evaluate_series(&ea, phi).distance(&evaluate_series(&eb, phi))?);
    }
    Ok(worst)
}

/// Rewriting engine for a fixed free theory and dynamical Lagrangian.
#[derive(Debug, Clone)]
pub struct NonpertEngine<'a> {
    ctx: &'a QContext,
    op: KGOperator,
    lagrangian: GeneralizedLagrangian,
    order: usize,
    constant_rule_residual: f64,
}

/// Tolerance for admitting constant extraction against the oracle.
const ADMIT_TOL: f64 = 1e-8;

impl<'a> NonpertEngine<'a> {
    /// Validates constant extraction `S(F + c) = e^{ic/ħ} S(F)` on a sample
    /// label before it is used by the search.
    pub fn new(ctx: &'a QContext, op: KGOperator, lagrangian: GeneralizedLagrangian, order: usize) -> Result<Self> {
        let l = *op.lattice();
        let p = Point::new(l.n_t() / 2, l.n_x() / 2);
        let f = PolyFunctional::field(p).add(&PolyFunctional::field(p).pow(2).scale(Complex64::new(0.5, 0.0)));
        let c = PolyFunctional::constant(Complex64::new(0.7, 0.0));
        let with = SWord::generator(FunctionalLabel::new(vec![PolyFunctional::zero(), f.add(&c), c]).expect("label"));
        let extracted = with.normalized(true);
        let a = evaluate_word(ctx, &with, order)?;
        let b = evaluate_word(ctx, &extracted, order)?;
        let constant_rule_residual = a.distance(&b)?;
        Ok(NonpertEngine { ctx, op, lagrangian, order, constant_rule_residual })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn lagrangian(&self) -> &GeneralizedLagrangian {
        &self.lagrangian
    }

    pub fn constant_rule_residual(&self) -> f64 {
        self.constant_rule_residual
    }

    pub fn constant_rule_admitted(&self) -> bool {
        self.constant_rule_residual < ADMIT_TOL
    }

    pub fn normalize(&self, w: &SWord) -> SWord {
        w.normalized(self.constant_rule_admitted())
    }

    /// Shifts that move the linear part of the letter at `pos` past a time
    /// row: `χ_{t>t0} G_A u` and `χ_{t<t0} G_R u`, with both signs.
    fn candidate_shifts(&self, w: &SWord, pos: usize) -> Vec<FieldConfiguration> {
        let l = *self.op.lattice();
        let props = self.ctx.props();
        let u = w.letters[pos].label.linear_smearing(&l);
        if u.max_abs() == 0.0 {
            return Vec::new();
        }
        let ga = props.apply_matrix(&props.g_a, &u);
        let gr = props.apply_matrix(&props.g_r, &u);
        let mut out = Vec::new();
        for t0 in 1..l.n_t() - 1 {
            let cut = |g: &FieldConfiguration, keep: &dyn Fn(usize) -> bool| {
                FieldConfiguration::from_fn(&l, |p| if keep(p.t) && l.is_interior(p) { g.get(p) } else { 0.0 })
            };
            for h in [cut(&ga, &|t| t > t0), cut(&gr, &|t| t < t0)] {
                if h.max_abs() > 0.0 {
                    out.push(h.scale(-1.0));
                    out.push(h);
                }
            }
        }
        out
    }

    fn mergeable_at(&self, w: &SWord, pos: usize) -> bool {
        pos + 1 < w.len() && rewrite_s2_inverse(w, pos, self.op.lattice()).is_ok()
    }

    /// Bounded depth-first search for `S(λf) S(λg) = e^{iθ} S(λ(f+g))`,
    /// cross-checked against the perturbative image at `oracle_order`.
    pub fn verify_weyl(
        &self,
        f: &PolyFunctional,
        g: &PolyFunctional,
        depth: usize,
        oracle_order: usize,
    ) -> Result<WeylReport> {
        for x in [f, g] {
            if x.terms().any(|(m, _)| m.len() != 1) {
                return Err(Error::WrongGrading("Weyl labels must be linear".into()));
            }
        }
        let start = self.normalize(
            &SWord::generator(FunctionalLabel::scaled(f.clone()))
                .mul(&SWord::generator(FunctionalLabel::scaled(g.clone()))),
        );
        let target = FunctionalLabel::scaled(f.add(g));
        let mut chain = Vec::new();
        let mut nodes = 0;
        let found = self.search(&start, &target, depth, &mut Vec::new(), &mut chain, &mut nodes)?;
        let Some(end) = found else {
            return Ok(WeylReport { derived: false, phase: Phase::one(), chain, nodes, oracle_residual: None });
        };
        let sf = label_s_matrix(self.ctx, &FunctionalLabel::scaled(f.clone()), oracle_order)?;
        let sg = label_s_matrix(self.ctx, &FunctionalLabel::scaled(g.clone()), oracle_order)?;
        let sfg = label_s_matrix(self.ctx, &target, oracle_order)?;
        let lhs = star_series(self.ctx, &star_series(self.ctx, &sf, &sg)?, &star_inverse(self.ctx, &sfg)?)?;
        let oracle_residual = lhs.distance(&end.phase.to_series(oracle_order)?)?;
        Ok(WeylReport { derived: true, phase: end.phase, chain, nodes, oracle_residual: Some(oracle_residual) })
    }

    fn is_goal(w: &SWord, target: &FunctionalLabel) -> bool {
        match w.letters.as_slice() {
            [] => target.is_zero(),
            [only] => !only.inverse && only.label.distance(target) < 1e-10,
            _ => false,
        }
    }

    fn search(
        &self,
        w: &SWord,
        target: &FunctionalLabel,
        depth: usize,
        shifts: &mut Vec<FieldConfiguration>,
        chain: &mut Vec<String>,
        nodes: &mut usize,
    ) -> Result<Option<SWord>> {
        *nodes += 1;
        if Self::is_goal(w, target) {
            return Ok(Some(w.clone()));
        }
        if depth == 0 {
            return Ok(None);
        }
        let lattice = self.op.lattice();
        for pos in 0..w.len().saturating_sub(1) {
            if let Ok(next) = rewrite_s2_inverse(w, pos, lattice) {
                chain.push(format!("S2 merge at {pos}"));
                if let Some(end) = self.search(&self.normalize(&next), target, depth - 1, shifts, chain, nodes)? {
                    return Ok(Some(end));
                }
                chain.pop();
            }
        }
        for pos in 0..w.len() {
            let undo: Vec<FieldConfiguration> = shifts.iter().map(|h| h.scale(-1.0)).collect();
            for (k, h) in undo.iter().chain(self.candidate_shifts(w, pos).iter()).enumerate() {
                let Ok(next) = rewrite_s3(w, pos, h, &self.lagrangian) else { continue };
                let next = self.normalize(&next);
                let useful =
                    k < undo.len() || (pos > 0 && self.mergeable_at(&next, pos - 1)) || self.mergeable_at(&next, pos);
                if !useful {
                    continue;
                }
                chain.push(format!("S3 at {pos}, shift norm {:.3e}", h.max_abs()));
                shifts.push(h.clone());
                let end = self.search(&next, target, depth - 1, shifts, chain, nodes)?;
                shifts.pop();
                if end.is_some() {
                    return Ok(end);
                }
                chain.pop();
            }
        }
        Ok(None)
    }
}

/// Outcome of [`NonpertEngine::verify_weyl`].
#[derive(Debug, Clone)]
pub struct WeylReport {
    pub derived: bool,
    /// `e^{iθ}` of the derived relation.
    pub phase: Phase,
    pub chain: Vec<String>,
    pub nodes: usize,
    /// Distance between `S(λf) ⋆ S(λg) ⋆ S(λ(f+g))^{⋆−1}` and `e^{iθ}`.
    pub oracle_residual: Option<f64>,
}

impl WeylReport {
    /// `θ ħ / λ²`.
    pub fn theta(&self) -> Complex64 {
        self.phase.coeff(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{interaction_v, lagrangian_l0, Interaction};
    use crate::perturbation::random_solution;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup() -> (KGOperator, QContext) {
        let l = LatticeSpacetime::new(8, 6, 0.5, 1.0).unwrap();
        let op = KGOperator::new(l, 1.0).unwrap();
        (op, QContext::new(op.hadamard_w().unwrap()))
    }

    fn field(p: Point) -> PolyFunctional {
        PolyFunctional::field(p)
    }

    fn label(f: PolyFunctional) -> FunctionalLabel {
        FunctionalLabel::scaled(f)
    }

    #[test]
    fn free_reduction_is_confluent() {
        let a = label(field(Point::new(1, 1)));
        let b = label(field(Point::new(2, 2)));
        let alphabet: Vec<Letter> = [(&a, false), (&a, true), (&b, false), (&b, true)]
            .iter()
            .map(|(l, inv)| Letter { label: (*l).clone(), inverse: *inv })
            .collect();
        fn all_reductions(w: &[Letter], out: &mut BTreeSet<Vec<(bool, bool)>>, key: &dyn Fn(&Letter) -> (bool, bool)) {
            let mut leaf = true;
            for i in 0..w.len().saturating_sub(1) {
                if w[i].label == w[i + 1].label && w[i].inverse != w[i + 1].inverse {
                    leaf = false;
                    let mut next = w[..i].to_vec();
                    next.extend_from_slice(&w[i + 2..]);
                    all_reductions(&next, out, key);
                }
            }
            if leaf {
                out.insert(w.iter().map(key).collect());
            }
        }
        let key = |l: &Letter| (l.label == a, l.inverse);
        for len in 0..=6u32 {
            for code in 0..4usize.pow(len) {
                let letters: Vec<Letter> = (0..len).map(|i| alphabet[(code / 4usize.pow(i)) % 4].clone()).collect();
                let mut normal_forms = BTreeSet::new();
                all_reductions(&letters, &mut normal_forms, &key);
                assert_eq!(normal_forms.len(), 1);
                let w = SWord { phase: Phase::one(), letters }.free_reduced();
                assert!(w.is_freely_reduced());
                assert_eq!(normal_forms.into_iter().next().unwrap(), w.letters.iter().map(key).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn s2_examples() {
        let (op, _) = setup();
        let l = *op.lattice();
        let f1 = label(field(Point::new(2, 0)));
        let f2 = label(field(Point::new(2, 3)));
        let w = SWord::generator(f1.add(&f2));
        let zero = FunctionalLabel::zero();
        let split = rewrite_s2(&w, 0, (&f1, &zero, &f2), &l).unwrap().normalized(true);
        assert_eq!(split, SWord::generator(f1.clone()).mul(&SWord::generator(f2.clone())));
        let whole = f1.add(&f2);
        let degenerate = rewrite_s2(&w, 0, (&whole, &zero, &zero), &l).unwrap().normalized(true);
        assert_eq!(degenerate, w);
        let early = label(field(Point::new(1, 0)));
        let late = label(field(Point::new(4, 0)));
        let w = SWord::generator(early.add(&late));
        assert!(matches!(rewrite_s2(&w, 0, (&early, &zero, &late), &l), Err(Error::CausalOrderViolated(_))));
        assert!(rewrite_s2(&w, 0, (&late, &zero, &early), &l).is_ok());
        assert!(matches!(rewrite_s2(&w, 0, (&late, &zero, &late), &l), Err(Error::DecompositionMismatch(_))));
    }

    #[test]
    fn s3_examples() {
        let (op, _) = setup();
        let l0 = lagrangian_l0(*op.lattice(), 1.0);
        let w = SWord::generator(label(field(Point::new(3, 2))));
        let zero = FieldConfiguration::zeros(op.lattice());
        assert_eq!(rewrite_s3(&w, 0, &zero, &l0).unwrap().normalized(true), w);
        let h = FieldConfiguration::delta(op.lattice(), Point::new(3, 3), 0.4);
        let there = rewrite_s3(&w, 0, &h, &l0).unwrap();
        let lab = &there.letters[0].label;
        assert_eq!(lab.coeff(1).degree(), 1);
        assert_eq!(lab.coeff(2).degree(), 0);
        let back = rewrite_s3(&there, 0, &h.scale(-1.0), &l0).unwrap();
        assert!(back.letters[0].label.without_constants().distance(&w.letters[0].label) < 1e-12);
        assert!(back.normalized(true).letters[0].label.distance(&w.letters[0].label) < 1e-12);
        let edge = FieldConfiguration::delta(op.lattice(), Point::new(0, 1), 1.0);
        assert!(matches!(rewrite_s3(&w, 0, &edge, &l0), Err(Error::MarginViolation(_, 1))));
    }

    #[test]
    fn constant_extraction_is_admitted() {
        let (op, ctx) = setup();
        let engine = NonpertEngine::new(&ctx, op, lagrangian_l0(*op.lattice(), 1.0).negated(), 2).unwrap();
        assert!(engine.constant_rule_admitted(), "{}", engine.constant_rule_residual());
    }

    #[test]
    fn rewrites_preserve_the_oracle() {
        let (op, ctx) = setup();
        let l = *op.lattice();
        let dynamics = lagrangian_l0(l, 1.0).negated();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sols: Vec<FieldConfiguration> = (0..3).map(|_| random_solution(&op, &mut rng)).collect();
        let cutoff = FieldConfiguration::from_fn(&l, |p| if p == Point::new(3, 2) { 0.3 } else { 0.0 });
        let v = label(interaction_v(Interaction::Phi4, &cutoff).add(&field(Point::new(4, 1))));
        let w = SWord::generator(v);
        for _ in 0..3 {
            let noise: Vec<f64> = (0..l.num_points()).map(|_| rng.gen_range(-0.5..0.5)).collect();
            let h = FieldConfiguration::from_fn(&l, |p| {
                if l.is_interior(p) && p.t >= 2 && p.t <= 5 {
                    noise[l.index(p)]
                } else {
                    0.0
                }
            });
            let next = rewrite_s3(&w, 0, &h, &dynamics).unwrap();
            let r = oracle_residual(&ctx, &w, &next, 2, &sols).unwrap();
            assert!(r < 1e-8, "{r}");
        }
    }

    #[test]
    fn weyl_relations() {
        let (op, ctx) = setup();
        let engine = NonpertEngine::new(&ctx, op, lagrangian_l0(*op.lattice(), 1.0).negated(), 2).unwrap();
        let f = field(Point::new(3, 1));
        let none = engine.verify_weyl(&f, &PolyFunctional::zero(), 3, 3).unwrap();
        assert!(none.derived);
        assert_eq!(none.theta(), Complex64::new(0.0, 0.0));
        let spacelike = engine.verify_weyl(&f, &field(Point::new(3, 4)), 3, 3).unwrap();
        assert!(spacelike.derived);
        assert_eq!(spacelike.theta(), Complex64::new(0.0, 0.0));
        let g = field(Point::new(5, 1));
        let report = engine.verify_weyl(&f, &g, 3, 3).unwrap();
        assert!(report.derived, "{:?}", report.chain);
        let expected = ctx.props().advanced(Point::new(3, 1), Point::new(5, 1));
        assert!((report.theta() - expected).norm() < 1e-10, "{:?} vs {expected}", report.theta());
        assert!(report.oracle_residual.unwrap() < 1e-8, "{:?}", report.oracle_residual);
    }
}
