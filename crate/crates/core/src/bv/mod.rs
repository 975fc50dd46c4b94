//! Graded functionals with ghosts and antifields.
//!
//! Sign conventions, fixed once:
//!
//! - Parity is ghost number mod 2. Monomials are stored sorted by generator
//!   id; reordering odd generators produces Koszul signs.
//! - `∂_l/∂g` moves `g` to the front before removing it, `∂_r/∂g` to the
//!   back.
//! - Antibracket: `{X,Y} = Σ_α ∂_rX/∂φ^α ∂_lY/∂φ‡_α − ∂_rX/∂φ‡_α ∂_lY/∂φ^α`.
//! - Laplacian: `△X = Σ_α (−1)^{ε_α+1} ∂_r/∂φ^α ∂_r/∂φ‡_α X`, so that
//!   `△(φ φ‡) = −1` for an even field.
//! - Differentials are odd right derivations,
//!   `D(XY) = X D(Y) + (−1)^{|Y|} D(X) Y`, given by their values on
//!   generators. With an antifield-free action `S`, `X ↦ {X, S}` is of this
//!   form and sends `φ‡` to `−∂S/∂φ`.

mod gauge;
mod scalar;

pub use gauge::{ce_gamma, split_by_antifield_number, AbelianToy, CmeReport, Edge, GaugeToy, LieAlgebraToy};
pub use scalar::{GPoly, GSeries, GradedInteraction, ScalarBv};

use std::collections::{BTreeMap, BTreeSet};

use num_complex::Complex64;

use crate::fps::Coefficient;

/// Generator handle; bit 0 is the parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenId(pub u32);

impl GenId {
    pub fn is_odd(self) -> bool {
        self.0 & 1 == 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub name: String,
    pub ghost_number: i32,
    /// For an antifield, the field it belongs to.
    pub antifield_of: Option<GenId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradedGeneratorSet {
    gens: Vec<Generator>,
    antifields: BTreeMap<GenId, GenId>,
    by_id: BTreeMap<GenId, usize>,
}

impl GradedGeneratorSet {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, g: Generator) -> GenId {
        let k = self.gens.len() as u32;
        let id = GenId(2 * k + (g.ghost_number.rem_euclid(2) as u32));
        self.by_id.insert(id, self.gens.len());
        self.gens.push(g);
        id
    }

    pub fn add_field(&mut self, name: impl Into<String>, ghost_number: i32) -> GenId {
        self.push(Generator { name: name.into(), ghost_number, antifield_of: None })
    }

    /// Adds the antifield of `field`, of ghost number `−gh(field) − 1`.
    pub fn add_antifield(&mut self, field: GenId) -> GenId {
        let f = self.get(field).clone();
        let id = self.push(Generator {
            name: format!("{}‡", f.name),
            ghost_number: -f.ghost_number - 1,
            antifield_of: Some(field),
        });
        self.antifields.insert(field, id);
        id
    }

    pub fn get(&self, id: GenId) -> &Generator {
        &self.gens[self.by_id[&id]]
    }

    pub fn len(&self) -> usize {
        self.gens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gens.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = GenId> + '_ {
        self.by_id.keys().copied()
    }

    pub fn ghost_number(&self, id: GenId) -> i32 {
        self.get(id).ghost_number
    }

    pub fn antifield(&self, field: GenId) -> Option<GenId> {
        self.antifields.get(&field).copied()
    }

    pub fn is_antifield(&self, id: GenId) -> bool {
        self.get(id).antifield_of.is_some()
    }

    /// Antifield number: `gh(field) + 1` for antifields, zero otherwise.
    pub fn antifield_number(&self, id: GenId) -> i32 {
        match self.get(id).antifield_of {
            Some(f) => self.ghost_number(f) + 1,
            None => 0,
        }
    }

    /// Field/antifield pairs.
    pub fn pairs(&self) -> impl Iterator<Item = (GenId, GenId)> + '_ {
        self.antifields.iter().map(|(&f, &a)| (f, a))
    }
}

pub type GMonomial = Vec<GenId>;

/// Sign of sorting `ids` and whether an odd generator repeats.
fn sort_with_sign(ids: &mut [GenId]) -> Option<f64> {
    let mut sign = 1.0;
    for i in 1..ids.len() {
        let mut j = i;
        while j > 0 && ids[j - 1] > ids[j] {
            if ids[j - 1].is_odd() && ids[j].is_odd() {
                sign = -sign;
            }
            ids.swap(j - 1, j);
            j -= 1;
        }
    }
    if ids.windows(2).any(|w| w[0] == w[1] && w[0].is_odd()) {
        None
    } else {
        Some(sign)
    }
}

/// Product of two sorted monomials with its Koszul sign.
pub(crate) fn mul_monomials(a: &[GenId], b: &[GenId]) -> Option<(f64, GMonomial)> {
    let mut sign = 1.0;
    let mut odd_after = a.iter().filter(|g| g.is_odd()).count();
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        let take_a = j == b.len() || (i < a.len() && a[i] <= b[j]);
        if take_a {
            if a[i].is_odd() {
                if j < b.len() && a[i] == b[j] {
                    return None;
                }
                odd_after -= 1;
            }
            out.push(a[i]);
            i += 1;
        } else {
            if b[j].is_odd() && odd_after % 2 == 1 {
                sign = -sign;
            }
            out.push(b[j]);
            j += 1;
        }
    }
    Some((sign, out))
}

fn parity(m: &[GenId]) -> bool {
    m.iter().filter(|g| g.is_odd()).count() % 2 == 1
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GradedFunctional {
    terms: BTreeMap<GMonomial, Complex64>,
}

impl GradedFunctional {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Complex64) -> Self {
        let mut out = Self::zero();
        out.add_term(Vec::new(), c);
        out
    }

    pub fn generator(id: GenId) -> Self {
        let mut out = Self::zero();
        out.add_term(vec![id], Complex64::new(1.0, 0.0));
        out
    }

    /// The ordered product `c · g₁ g₂ ⋯ gₙ`.
    pub fn monomial(mut ids: Vec<GenId>, c: Complex64) -> Self {
        let mut out = Self::zero();
        if let Some(sign) = sort_with_sign(&mut ids) {
            out.add_term(ids, c * sign);
        }
        out
    }

    /// Adds `c` times an already sorted, admissible monomial.
    pub fn add_term(&mut self, m: GMonomial, c: Complex64) {
        if c.re == 0.0 && c.im == 0.0 {
            return;
        }
        let slot = self.terms.entry(m).or_insert(Complex64::new(0.0, 0.0));
        *slot += c;
        if slot.re == 0.0 && slot.im == 0.0 {
            self.terms.retain(|_, v| v.re != 0.0 || v.im != 0.0);
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = (&GMonomial, Complex64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &[GenId]) -> Complex64 {
        self.terms.get(m).copied().unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, c) in other.terms() {
            out.add_term(m.clone(), c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(Complex64::new(-1.0, 0.0)))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            out.add_term(m.clone(), c * s);
        }
        out
    }

    /// Graded commutative product.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if let Some((sign, m)) = mul_monomials(a, b) {
                    out.add_term(m, ca * cb * sign);
                }
            }
        }
        out
    }

    pub fn derivative_left(&self, g: GenId) -> Self {
        self.derivative(g, true)
    }

    pub fn derivative_right(&self, g: GenId) -> Self {
        self.derivative(g, false)
    }

    fn derivative(&self, g: GenId, left: bool) -> Self {
        let mut out = Self::zero();
        for (m, c) in self.terms() {
            let Some(pos) = m.iter().position(|&x| x == g) else {
                continue;
            };
            let mut rest = m.clone();
            rest.remove(pos);
            if g.is_odd() {
                let passed = if left {
                    m[..pos].iter().filter(|x| x.is_odd()).count()
                } else {
                    m[pos + 1..].iter().filter(|x| x.is_odd()).count()
                };
                let sign = if passed % 2 == 1 { -1.0 } else { 1.0 };
                out.add_term(rest, c * sign);
            } else {
                let mult = m.iter().filter(|&&x| x == g).count();
                out.add_term(rest, c * mult as f64);
            }
        }
        out
    }

    /// Generators occurring in some monomial.
    pub fn generators(&self) -> BTreeSet<GenId> {
        self.terms.keys().flatten().copied().collect()
    }

    /// Ghost numbers of the monomials, deduplicated.
    pub fn ghost_numbers(&self, set: &GradedGeneratorSet) -> BTreeSet<i32> {
        self.terms.keys().map(|m| m.iter().map(|&g| set.ghost_number(g)).sum()).collect()
    }

    /// Ghost number if homogeneous; `None` for zero or mixed degree.
    pub fn ghost_number(&self, set: &GradedGeneratorSet) -> Option<i32> {
        let gh = self.ghost_numbers(set);
        (gh.len() == 1).then(|| *gh.iter().next().unwrap())
    }

    pub fn antifield_numbers(&self, set: &GradedGeneratorSet) -> BTreeSet<i32> {
        self.terms.keys().map(|m| m.iter().map(|&g| set.antifield_number(g)).sum()).collect()
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(|m| !parity(m))
    }

    pub fn is_odd(&self) -> bool {
        self.terms.keys().all(|m| parity(m))
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).max_abs()
    }
}

impl Coefficient for GradedFunctional {
    fn zero() -> Self {
        GradedFunctional::zero()
    }

    fn one() -> Self {
        GradedFunctional::constant(Complex64::new(1.0, 0.0))
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_assign_ref(&mut self, other: &Self) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), c);
        }
    }

    fn scale(&self, s: Complex64) -> Self {
        GradedFunctional::scale(self, s)
    }

    fn as_scalar(&self) -> Option<Complex64> {
        match self.terms.len() {
            0 => Some(Complex64::new(0.0, 0.0)),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    fn max_abs(&self) -> f64 {
        GradedFunctional::max_abs(self)
    }
}

pub fn antibracket(set: &GradedGeneratorSet, x: &GradedFunctional, y: &GradedFunctional) -> GradedFunctional {
    let (gx, gy) = (x.generators(), y.generators());
    let mut out = GradedFunctional::zero();
    for (f, a) in set.pairs() {
        if gx.contains(&f) && gy.contains(&a) {
            out = out.add(&x.derivative_right(f).mul(&y.derivative_left(a)));
        }
        if gx.contains(&a) && gy.contains(&f) {
            out = out.sub(&x.derivative_right(a).mul(&y.derivative_left(f)));
        }
    }
    out
}

pub fn bv_laplacian(set: &GradedGeneratorSet, x: &GradedFunctional) -> GradedFunctional {
    let gx = x.generators();
    let mut out = GradedFunctional::zero();
    for (f, a) in set.pairs() {
        if !(gx.contains(&f) && gx.contains(&a)) {
            continue;
        }
        let sign = if f.is_odd() { 1.0 } else { -1.0 };
        let term = x.derivative_right(a).derivative_right(f);
        out = out.add(&term.scale(Complex64::new(sign, 0.0)));
    }
    out
}

/// Values of an odd right derivation on generators; missing ids map to 0.
pub type DerivationImages = BTreeMap<GenId, GradedFunctional>;

/// Extends generator images to the odd right derivation
/// `D(g₁⋯gₙ) = Σ_i (−1)^{Σ_{j>i} ε_j} g₁⋯g_{i−1} D(g_i) g_{i+1}⋯gₙ`.
pub fn apply_derivation(x: &GradedFunctional, images: &DerivationImages) -> GradedFunctional {
    let mut out = GradedFunctional::zero();
    for (m, c) in x.terms() {
        for i in 0..m.len() {
            // equal even generators repeat; each copy is a separate term
            let Some(img) = images.get(&m[i]) else { continue };
            if img.is_zero() {
                continue;
            }
            let sign = if parity(&m[i + 1..]) { -1.0 } else { 1.0 };
            let prefix = GradedFunctional::monomial(m[..i].to_vec(), Complex64::new(1.0, 0.0));
            let suffix = GradedFunctional::monomial(m[i + 1..].to_vec(), Complex64::new(1.0, 0.0));
            let term = prefix.mul(img).mul(&suffix);
            out = out.add(&term.scale(c * sign));
        }
    }
    out
}

/// Images of `X ↦ {X, S}` on every generator.
pub fn bracket_images(set: &GradedGeneratorSet, s: &GradedFunctional) -> DerivationImages {
    set.ids()
        .map(|g| (g, antibracket(set, &GradedFunctional::generator(g), s)))
        .filter(|(_, img)| !img.is_zero())
        .collect()
}

/// Random functional with `n_terms` monomials of `1..=max_len` generators
/// drawn from `ids`, real coefficients in `[-1, 1]`.
pub fn random_graded(rng: &mut impl rand::Rng, ids: &[GenId], max_len: usize, n_terms: usize) -> GradedFunctional {
    let mut out = GradedFunctional::zero();
    for _ in 0..n_terms {
        let len = rng.gen_range(1..=max_len);
        let m: Vec<GenId> = (0..len).map(|_| ids[rng.gen_range(0..ids.len())]).collect();
        out = out.add(&GradedFunctional::monomial(m, Complex64::new(rng.gen_range(-1.0..=1.0), 0.0)));
    }
    out
}
