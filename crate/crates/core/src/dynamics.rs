//! Discrete Klein-Gordon dynamics on the lattice.
//!
//! Sources are Kronecker deltas with no volume weights, matching the plain
//! sum pairing of [`crate::functionals`]. Bisolution and support claims are
//! made on interior rows only.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::functionals::{FieldConfiguration, PolyFunctional};
use crate::lattice::{LatticeSpacetime, Point};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KGOperator {
    lattice: LatticeSpacetime,
    mass: f64,
}

impl KGOperator {
    pub fn new(lattice: LatticeSpacetime, mass: f64) -> Result<Self> {
        if mass.is_nan() || mass <= 0.0 {
            return Err(Error::NonPositiveMass(mass));
        }
        let op = KGOperator { lattice, mass };
        let bound = 4.0 / (lattice.dt() * lattice.dt());
        let worst = (0..lattice.n_x()).map(|j| op.omega_sq(j)).fold(0.0, f64::max);
        if worst > bound {
            return Err(Error::Unstable(format!("largest mode frequency squared {worst} exceeds 4/dt^2 = {bound}")));
        }
        Ok(op)
    }

    pub fn lattice(&self) -> &LatticeSpacetime {
        &self.lattice
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    /// Spatial wave number of mode `j`, times `dx`.
    fn mode_angle(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.lattice.n_x() as f64
    }

    /// `(2 − 2cos(k dx))/dx² + m²` for mode `j`.
    pub fn omega_sq(&self, j: usize) -> f64 {
        let dx = self.lattice.dx();
        (2.0 - 2.0 * self.mode_angle(j).cos()) / (dx * dx) + self.mass * self.mass
    }

    /// Discrete-time phase per step `θ_j = ω_j dt` of mode `j`.
    pub fn mode_phase(&self, j: usize) -> Result<f64> {
        let dt = self.lattice.dt();
        let c = 1.0 - 0.5 * dt * dt * self.omega_sq(j);
        if !(c > -1.0 && c < 1.0) {
            return Err(Error::Unstable(format!("mode {j} has cos(theta) = {c}, outside (-1, 1)")));
        }
        Ok(c.acos())
    }

    /// The real lattice solution `cos(θ_j t − k_j x dx + phase)`.
    pub fn mode_solution(&self, j: usize, phase: f64) -> Result<FieldConfiguration> {
        let theta = self.mode_phase(j)?;
        let k = self.mode_angle(j);
        Ok(FieldConfiguration::from_fn(&self.lattice, |p| (theta * p.t as f64 - k * p.x as f64 + phase).cos()))
    }

    /// `(Pφ)(p)` for an interior point.
    fn stencil_at(&self, phi: impl Fn(Point) -> f64, p: Point) -> f64 {
        let l = &self.lattice;
        let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
        let c = phi(p);
        let up = phi(Point::new(p.t + 1, p.x));
        let down = phi(Point::new(p.t - 1, p.x));
        let right = phi(Point::new(p.t, l.shift_x(p.x, 1)));
        let left = phi(Point::new(p.t, l.shift_x(p.x, -1)));
        (up - 2.0 * c + down) / dt2 - (right - 2.0 * c + left) / dx2 + self.mass * self.mass * c
    }

    /// Applies `P = D_tt − D_xx + m²`; boundary rows are set to zero.
    pub fn apply(&self, phi: &FieldConfiguration) -> FieldConfiguration {
        let l = self.lattice;
        FieldConfiguration::from_fn(&l, |p| if l.is_interior(p) { self.stencil_at(|q| phi.get(q), p) } else { 0.0 })
    }

    /// `P` as a matrix; rows of boundary points are zero.
    pub fn matrix(&self) -> DMatrix<f64> {
        let l = self.lattice;
        let n = l.num_points();
        let mut m = DMatrix::zeros(n, n);
        let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
        for p in l.points().filter(|&p| l.is_interior(p)) {
            let i = l.index(p);
            m[(i, i)] += -2.0 / dt2 + 2.0 / dx2 + self.mass * self.mass;
            m[(i, l.index(Point::new(p.t + 1, p.x)))] += 1.0 / dt2;
            m[(i, l.index(Point::new(p.t - 1, p.x)))] += 1.0 / dt2;
            m[(i, l.index(Point::new(p.t, l.shift_x(p.x, 1))))] -= 1.0 / dx2;
            m[(i, l.index(Point::new(p.t, l.shift_x(p.x, -1))))] -= 1.0 / dx2;
        }
        m
    }

    /// Solves `Pφ = 0` forward in time from the first two rows.
    pub fn evolve(&self, row0: &[f64], row1: &[f64]) -> FieldConfiguration {
        let l = self.lattice;
        assert_eq!(row0.len(), l.n_x());
        assert_eq!(row1.len(), l.n_x());
        let mut values = vec![0.0; l.num_points()];
        values[..l.n_x()].copy_from_slice(row0);
        values[l.n_x()..2 * l.n_x()].copy_from_slice(row1);
        for t in 1..l.n_t() - 1 {
            for x in 0..l.n_x() {
                let next = self.step(&values, t, x, 0.0);
                values[(t + 1) * l.n_x() + x] = next;
            }
        }
        FieldConfiguration::from_values(&l, values)
    }

    /// Value at `(t+1, x)` that makes `(Pu)(t, x) = source`, reading row
    /// `t − 1` as zero when `t = 0`.
    fn step(&self, u: &[f64], t: usize, x: usize, source: f64) -> f64 {
        let l = &self.lattice;
        let n_x = l.n_x();
        let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
        let at = |tt: usize, xx: usize| u[tt * n_x + xx];
        let c = at(t, x);
        let down = if t == 0 { 0.0 } else { at(t - 1, x) };
        let lap = (at(t, l.shift_x(x, 1)) - 2.0 * c + at(t, l.shift_x(x, -1))) / dx2;
        dt2 * (source + lap - self.mass * self.mass * c) + 2.0 * c - down
    }

    /// Retarded Green function by forward recursion, indexed `[(p, q)]`.
    ///
    /// A source on row 0 is propagated as if the row below were zero, which
    /// keeps the kernel translation invariant in time.
    pub fn retarded_green(&self) -> DMatrix<f64> {
        let l = self.lattice;
        let (n, n_x) = (l.num_points(), l.n_x());
        let mut g = DMatrix::zeros(n, n);
        for q in l.points() {
            if q.t + 1 >= l.n_t() {
                continue;
            }
            let mut u = vec![0.0; n];
            for t in q.t..l.n_t() - 1 {
                for x in 0..n_x {
                    let src = if Point::new(t, x) == q { 1.0 } else { 0.0 };
                    u[(t + 1) * n_x + x] = self.step(&u, t, x, src);
                }
            }
            let col = l.index(q);
            for (i, v) in u.into_iter().enumerate() {
                g[(i, col)] = v;
            }
        }
        g
    }

    /// Retarded Green function from one dense linear solve: the interior
    /// equations, the formal row-0 equation and a vanishing first row.
    pub fn retarded_green_direct(&self) -> Result<DMatrix<f64>> {
        let l = self.lattice;
        let (n, n_x) = (l.num_points(), l.n_x());
        let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
        let mut a = self.matrix();
        let mut rhs = DMatrix::zeros(n, n);
        for p in l.points().filter(|&p| l.is_interior(p)) {
            rhs[(l.index(p), l.index(p))] = 1.0;
        }
        // the last row carries no equation, so it is reused for u(0, x) = 0
        for x in 0..n_x {
            let i = l.index(Point::new(l.n_t() - 1, x));
            a.row_mut(i).fill(0.0);
            a[(i, l.index(Point::new(0, x)))] = 1.0;
        }
        for x in 0..n_x {
            let i = l.index(Point::new(0, x));
            a[(i, i)] = -2.0 / dt2 + 2.0 / dx2 + self.mass * self.mass;
            a[(i, l.index(Point::new(1, x)))] = 1.0 / dt2;
            a[(i, l.index(Point::new(0, l.shift_x(x, 1))))] -= 1.0 / dx2;
            a[(i, l.index(Point::new(0, l.shift_x(x, -1))))] -= 1.0 / dx2;
            rhs[(i, i)] = 1.0;
        }
        a.lu().solve(&rhs).ok_or(Error::NotInvertible)
    }

    /// Builds all propagators, with `W` from the spatial mode sum.
    pub fn hadamard_w(&self) -> Result<PropagatorSet> {
        let l = self.lattice;
        let n = l.num_points();
        let n_x = l.n_x();
        let dt2 = l.dt() * l.dt();
        let modes: Vec<(f64, f64, f64)> = (0..n_x)
            .map(|j| {
                let theta = self.mode_phase(j)?;
                let c = dt2 / (2.0 * n_x as f64 * theta.sin());
                Ok((theta, self.mode_angle(j), c))
            })
            .collect::<Result<_>>()?;

        let g_r = self.retarded_green();
        let g_a = g_r.transpose();
        let delta = &g_r - &g_a;

        let mut h = DMatrix::zeros(n, n);
        for p in l.points() {
            for q in l.points() {
                let s = p.t as f64 - q.t as f64;
                let r = p.x as f64 - q.x as f64;
                h[(l.index(p), l.index(q))] =
                    modes.iter().map(|&(theta, k, c)| c * (theta * s).cos() * (k * r).cos()).sum::<f64>();
            }
        }
        let h = (&h + h.transpose()) * 0.5;

        let w = DMatrix::from_fn(n, n, |i, j| Complex64::new(h[(i, j)], 0.5 * delta[(i, j)]));
        let delta_f = DMatrix::from_fn(n, n, |i, j| Complex64::new(h[(i, j)], 0.5 * (g_a[(i, j)] + g_r[(i, j)])));
        Ok(PropagatorSet { lattice: l, g_r, g_a, delta, h, w, delta_f, interior_margin: 1 })
    }
}

#[derive(Debug, Clone)]
pub struct PropagatorSet {
    pub lattice: LatticeSpacetime,
    pub g_r: DMatrix<f64>,
    pub g_a: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub w: DMatrix<Complex64>,
    pub delta_f: DMatrix<Complex64>,
    pub interior_margin: usize,
}

impl PropagatorSet {
    fn ij(&self, p: Point, q: Point) -> (usize, usize) {
        (self.lattice.index(p), self.lattice.index(q))
    }

    pub fn retarded(&self, p: Point, q: Point) -> f64 {
        self.g_r[self.ij(p, q)]
    }

    pub fn advanced(&self, p: Point, q: Point) -> f64 {
        self.g_a[self.ij(p, q)]
    }

    pub fn pauli_jordan(&self, p: Point, q: Point) -> f64 {
        self.delta[self.ij(p, q)]
    }

    pub fn two_point(&self, p: Point, q: Point) -> Complex64 {
        self.w[self.ij(p, q)]
    }

    pub fn feynman(&self, p: Point, q: Point) -> Complex64 {
        self.delta_f[self.ij(p, q)]
    }

    /// Largest entry of `P M` and `M Pᵀ` over interior rows.
    pub fn bisolution_residual(&self, op: &KGOperator, m: &DMatrix<f64>) -> f64 {
        let pm = op.matrix();
        let left = &pm * m;
        let right = m * pm.transpose();
        left.amax().max(right.amax())
    }

    /// Bisolution residual of the complex matrix `W`.
    pub fn w_bisolution_residual(&self, op: &KGOperator) -> f64 {
        let re = self.w.map(|z| z.re);
        let im = self.w.map(|z| z.im);
        self.bisolution_residual(op, &re).max(self.bisolution_residual(op, &im))
    }

    /// Entrywise `max |W − Wᵀ − iΔ|`.
    pub fn commutator_residual(&self) -> f64 {
        let n = self.w.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.w[(i, j)] - self.w[(j, i)] - Complex64::new(0.0, self.delta[(i, j)]);
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian matrix `W`, via its real
    /// symmetric embedding `[[H, −B], [B, H]]` with `W = H + iB`.
    pub fn min_eigenvalue_w(&self) -> f64 {
        let n = self.w.nrows();
        let big = DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            let z = self.w[(i % n, j % n)];
            match (i < n, j < n) {
                (true, true) | (false, false) => z.re,
                (true, false) => -z.im,
                (false, true) => z.im,
            }
        });
        SymmetricEigen::new(big).eigenvalues.min()
    }

    /// Entrywise `max |Δ_F − W − iG_A|`.
    pub fn feynman_residual(&self) -> f64 {
        let n = self.w.nrows();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let d = self.delta_f[(i, j)] - self.w[(i, j)] - Complex64::new(0.0, self.g_a[(i, j)]);
                worst = worst.max(d.norm());
            }
        }
        worst
    }

    /// `(M f)(p) = Σ_q M(p, q) f(q)`.
    pub fn apply_matrix(&self, m: &DMatrix<f64>, f: &FieldConfiguration) -> FieldConfiguration {
        let v = m * nalgebra::DVector::from_column_slice(f.values());
        FieldConfiguration::from_values(&self.lattice, v.as_slice().to_vec())
    }
}

type Builder = Arc<dyn Fn(&FieldConfiguration) -> PolyFunctional + Send + Sync>;

/// A map from cutoff functions to functionals.
#[derive(Clone)]
pub struct GeneralizedLagrangian {
    lattice: LatticeSpacetime,
    stencil_radius: usize,
    builder: Builder,
}

impl fmt::Debug for GeneralizedLagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralizedLagrangian")
            .field("lattice", &self.lattice)
            .field("stencil_radius", &self.stencil_radius)
            .finish_non_exhaustive()
    }
}

impl GeneralizedLagrangian {
    pub fn new(
        lattice: LatticeSpacetime,
        stencil_radius: usize,
        builder: impl Fn(&FieldConfiguration) -> PolyFunctional + Send + Sync + 'static,
    ) -> Self {
        GeneralizedLagrangian { lattice, stencil_radius, builder: Arc::new(builder) }
    }

    pub fn lattice(&self) -> &LatticeSpacetime {
        &self.lattice
    }

    pub fn stencil_radius(&self) -> usize {
        self.stencil_radius
    }

    pub fn eval(&self, f: &FieldConfiguration) -> PolyFunctional {
        (self.builder)(f)
    }

    /// `L(1)`, the action on the whole lattice.
    pub fn action(&self) -> PolyFunctional {
        self.eval(&FieldConfiguration::from_fn(&self.lattice, |_| 1.0))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let inner = self.builder.clone();
        GeneralizedLagrangian {
            lattice: self.lattice,
            stencil_radius: self.stencil_radius,
            builder: Arc::new(move |f| inner(f).scale(Complex64::new(s, 0.0))),
        }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let (a, b) = (self.builder.clone(), other.builder.clone());
        GeneralizedLagrangian {
            lattice: self.lattice,
            stencil_radius: self.stencil_radius.max(other.stencil_radius),
            builder: Arc::new(move |f| a(f).add(&b(f))),
        }
    }

    /// Points within the stencil radius of `set`, in both time and space.
    pub fn stencil_closure(&self, set: &BTreeSet<Point>) -> BTreeSet<Point> {
        neighbourhood(&self.lattice, set, self.stencil_radius)
    }

    /// `dS(φ)(p) = ∂L(1)/∂φ(p)` at every point.
    pub fn euler_lagrange(&self, phi: &FieldConfiguration) -> FieldConfiguration {
        let s = self.action();
        FieldConfiguration::from_fn(&self.lattice, |p| s.derivative(p).evaluate(phi).re)
    }

    /// `L(f)[φ+ψ] − L(f)[φ]`, for a cutoff equal to one around `supp ψ`.
    pub fn delta_l(&self, f: &FieldConfiguration, psi: &FieldConfiguration, phi: &FieldConfiguration) -> Result<f64> {
        for p in self.stencil_closure(&psi.support()) {
            if f.get(p) != 1.0 {
                return Err(Error::CutoffNotUnity(p));
            }
        }
        let lf = self.eval(f);
        Ok((lf.evaluate(&phi.add(psi)) - lf.evaluate(phi)).re)
    }

    /// `L(f₁+f₂+f₃) = L(f₁+f₂) − L(f₂) + L(f₂+f₃)` when `f₁`, `f₃` have
    /// disjoint supports.
    pub fn check_additivity(
        &self,
        f1: &FieldConfiguration,
        f2: &FieldConfiguration,
        f3: &FieldConfiguration,
        tol: f64,
    ) -> Result<bool> {
        if !f1.support().is_disjoint(&f3.support()) {
            return Err(Error::OverlappingSupports);
        }
        let lhs = self.eval(&f1.add(f2).add(f3));
        let rhs = self.eval(&f1.add(f2)).sub(&self.eval(f2)).add(&self.eval(&f2.add(f3)));
        Ok(lhs.approx_eq(&rhs, tol))
    }

    /// `supp L(f) ⊆` stencil closure of `supp f`.
    pub fn check_support(&self, f: &FieldConfiguration) -> bool {
        self.eval(f).support().is_subset(&self.stencil_closure(&f.support()))
    }

    /// Compares `L(f ∘ τ⁻¹)` with `L(f)` pushed forward by the translation
    /// `τ`. Both cutoffs must keep their stencils off the time boundary.
    pub fn check_covariance(&self, f: &FieldConfiguration, shift_t: isize, shift_x: isize, tol: f64) -> Result<bool> {
        let l = self.lattice;
        let r = self.stencil_radius;
        let translate = |p: Point| -> Option<Point> {
            let t = p.t as isize + shift_t;
            (t >= 0 && (t as usize) < l.n_t()).then(|| Point::new(t as usize, l.shift_x(p.x, shift_x)))
        };
        let mut moved = FieldConfiguration::zeros(&l);
        for p in f.support() {
            let q = translate(p).ok_or(Error::OutOfBounds(p))?;
            for s in [p, q] {
                if s.t < r || s.t + r >= l.n_t() {
                    return Err(Error::MarginViolation(s, r));
                }
            }
            moved.set(q, f.get(p));
        }
        let pushed = self.eval(f).map_points(|p| translate(p).expect("stencil stays inside"));
        Ok(self.eval(&moved).approx_eq(&pushed, tol))
    }

    /// Equivalence of generalized Lagrangians: `supp (L₁ − L₂)(f)` lies in
    /// the region where `f` is not locally constant.
    pub fn equivalent_on(&self, other: &Self, f: &FieldConfiguration) -> bool {
        let l = self.lattice;
        let r = self.stencil_radius.max(other.stencil_radius);
        let varying: BTreeSet<Point> = l
            .points()
            .filter(|&p| neighbourhood(&l, &BTreeSet::from([p]), r).iter().any(|&q| f.get(q) != f.get(p)))
            .collect();
        let allowed = neighbourhood(&l, &varying, r);
        self.eval(f).sub(&other.eval(f)).support().is_subset(&allowed)
    }
}

fn neighbourhood(l: &LatticeSpacetime, set: &BTreeSet<Point>, radius: usize) -> BTreeSet<Point> {
    let r = radius as isize;
    let mut out = BTreeSet::new();
    for p in set {
        for dt in -r..=r {
            let t = p.t as isize + dt;
            if t < 0 || t as usize >= l.n_t() {
                continue;
            }
            for dx in -r..=r {
                out.insert(Point::new(t as usize, l.shift_x(p.x, dx)));
            }
        }
    }
    out
}

/// Free Lagrangian `½ Σ f [(D_tφ)² − (D_xφ)² − m²φ²]` with forward
/// differences; the time difference is dropped on the last row.
pub fn lagrangian_l0(lattice: LatticeSpacetime, mass: f64) -> GeneralizedLagrangian {
    GeneralizedLagrangian::new(lattice, 1, move |f| {
        let l = lattice;
        let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
        let mut out = PolyFunctional::zero();
        let mut add = |a: Point, b: Point, c: f64| {
            out.add_term(if a <= b { vec![a, b] } else { vec![b, a] }, Complex64::new(c, 0.0));
        };
        for p in f.support() {
            let w = 0.5 * f.get(p);
            if p.t + 1 < l.n_t() {
                let up = Point::new(p.t + 1, p.x);
                add(up, up, w / dt2);
                add(p, p, w / dt2);
                add(up, p, -2.0 * w / dt2);
            }
            let right = Point::new(p.t, l.shift_x(p.x, 1));
            add(right, right, -w / dx2);
            add(p, p, -w / dx2);
            add(right, p, 2.0 * w / dx2);
            add(p, p, -w * mass * mass);
        }
        out
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interaction {
    Phi2,
    Phi3,
    Phi4,
}

impl Interaction {
    pub fn power(self) -> usize {
        match self {
            Interaction::Phi2 => 2,
            Interaction::Phi3 => 3,
            Interaction::Phi4 => 4,
        }
    }
}

impl std::str::FromStr for Interaction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "phi2" => Ok(Interaction::Phi2),
            "phi3" => Ok(Interaction::Phi3),
            "phi4" => Ok(Interaction::Phi4),
            other => Err(Error::UnknownInteraction(other.to_string())),
        }
    }
}

/// `(1/n!) Σ f(x) φ(x)ⁿ`.
pub fn interaction_v(kind: Interaction, f: &FieldConfiguration) -> PolyFunctional {
    let n = kind.power();
    let norm = (1..=n).product::<usize>() as f64;
    let mut out = PolyFunctional::zero();
    for p in f.support() {
        out.add_term(vec![p; n], Complex64::new(f.get(p) / norm, 0.0));
    }
    out
}

pub fn interaction_lagrangian(lattice: LatticeSpacetime, kind: Interaction) -> GeneralizedLagrangian {
    GeneralizedLagrangian::new(lattice, 0, move |f| interaction_v(kind, f))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(n_t: usize, n_x: usize) -> KGOperator {
        KGOperator::new(LatticeSpacetime::new(n_t, n_x, 0.5, 1.0).unwrap(), 1.0).unwrap()
    }

    #[test]
    fn apply_examples() {
        let p = op(4, 8);
        let l = *p.lattice();
        assert_eq!(p.apply(&FieldConfiguration::zeros(&l)).max_abs(), 0.0);
        let c = Point::new(1, 3);
        let out = p.apply(&FieldConfiguration::delta(&l, c, 1.0));
        // centre coefficient of the stencil for a delta: −2/dt² + 2/dx² + m²
        assert!((out.get(c) - (-8.0 + 2.0 + 1.0)).abs() < 1e-12);
        assert!((out.get(Point::new(2, 3)) - 4.0).abs() < 1e-12);
        assert!((out.get(Point::new(1, 4)) + 1.0).abs() < 1e-12);
        for j in 0..8 {
            let phi = p.mode_solution(j, 0.3).unwrap();
            assert!(p.apply(&phi).max_abs() < 1e-10, "mode {j}");
        }
    }

    #[test]
    fn rejects_massless_and_unstable() {
        let l = LatticeSpacetime::new(4, 8, 0.5, 1.0).unwrap();
        assert_eq!(KGOperator::new(l, 0.0).unwrap_err(), Error::NonPositiveMass(0.0));
        let l = LatticeSpacetime::new(4, 8, 1.0, 1.0).unwrap();
        assert!(matches!(KGOperator::new(l, 1.0), Err(Error::Unstable(_))));
    }

    #[test]
    fn green_examples() {
        let p = op(6, 8);
        let l = *p.lattice();
        let set = p.hadamard_w().unwrap();
        let q = Point::new(2, 3);
        assert_eq!(set.retarded(q, q), 0.0);
        assert_eq!(set.retarded(Point::new(3, 3), q), 0.25);
        assert_eq!(set.retarded(Point::new(1, 0), Point::new(0, 0)), 0.25);
        for a in l.points() {
            for b in l.points() {
                if !l.in_future(b, a) {
                    assert_eq!(set.retarded(a, b), 0.0);
                }
                if l.is_spacelike(a, b) {
                    assert_eq!(set.pauli_jordan(a, b), 0.0);
                }
            }
        }
    }

    #[test]
    fn green_retarded_solves_with_delta_source() {
        let p = op(6, 8);
        let g = p.retarded_green();
        let pg = p.matrix() * &g;
        let l = *p.lattice();
        for a in l.points().filter(|&a| l.is_interior(a)) {
            for b in l.points() {
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((pg[(l.index(a), l.index(b))] - expect).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn green_constructions_agree() {
        let p = op(6, 8);
        let direct = p.retarded_green_direct().unwrap();
        assert!((p.retarded_green() - direct).amax() < 1e-10);
    }

    #[test]
    fn propagator_identities() {
        let p = op(4, 8);
        let set = p.hadamard_w().unwrap();
        assert_eq!((&set.delta + set.delta.transpose()).amax(), 0.0);
        assert_eq!(set.h, set.h.transpose());
        assert!(set.commutator_residual() < 1e-12);
        assert!(set.feynman_residual() < 1e-12);
        assert!(set.min_eigenvalue_w() >= -1e-10);
        assert!(set.bisolution_residual(&p, &set.delta) < 1e-10);
        assert!(set.bisolution_residual(&p, &set.h) < 1e-10);
        assert!(set.w_bisolution_residual(&p) < 1e-10);
    }

    #[test]
    fn l0_examples() {
        let l = LatticeSpacetime::new(6, 8, 0.5, 1.0).unwrap();
        let l0 = lagrangian_l0(l, 1.0);
        assert!(l0.eval(&FieldConfiguration::zeros(&l)).is_zero());
        let f = FieldConfiguration::from_fn(&l, |p| if p.t == 2 && p.x < 3 { 1.5 } else { 0.0 });
        let supp = l0.eval(&f).support();
        let fwd: BTreeSet<Point> = f
            .support()
            .into_iter()
            .flat_map(|p| [p, Point::new(p.t + 1, p.x), Point::new(p.t, l.shift_x(p.x, 1))])
            .collect();
        assert!(supp.is_subset(&fwd));
        assert!(l0.check_support(&f));

        let ones = FieldConfiguration::from_fn(&l, |_| 1.0);
        let v = interaction_v(Interaction::Phi4, &ones);
        assert!((v.evaluate(&ones).re - 48.0 / 24.0).abs() < 1e-12);
    }

    #[test]
    fn euler_lagrange_is_minus_p() {
        let p = op(6, 8);
        let l = *p.lattice();
        let l0 = lagrangian_l0(l, 1.0);
        let phi = FieldConfiguration::from_fn(&l, |q| ((q.t * 7 + q.x * 3) % 5) as f64 - 2.0);
        let ds = l0.euler_lagrange(&phi);
        let pphi = p.apply(&phi);
        for q in l.points().filter(|&q| l.is_interior(q)) {
            assert!((ds.get(q) + pphi.get(q)).abs() < 1e-10);
        }
        let sol = p.mode_solution(2, 0.1).unwrap();
        let ds = l0.euler_lagrange(&sol);
        for q in l.points().filter(|&q| l.is_interior(q)) {
            assert!(ds.get(q).abs() < 1e-10);
        }
    }

    #[test]
    fn delta_l_independent_of_cutoff() {
        let l = LatticeSpacetime::new(8, 8, 0.5, 1.0).unwrap();
        let l0 = lagrangian_l0(l, 1.0);
        let psi = FieldConfiguration::from_fn(&l, |p| if p.t == 4 && p.x == 4 { 0.7 } else { 0.0 });
        let phi = FieldConfiguration::from_fn(&l, |p| 0.1 * p.t as f64 - 0.2 * p.x as f64);
        let f1 =
            FieldConfiguration::from_fn(
                &l,
                |p| {
                    if (3..=5).contains(&p.t) && (3..=5).contains(&p.x) {
                        1.0
                    } else {
                        0.0
                    }
                },
            );
        let f2 = FieldConfiguration::from_fn(&l, |p| if (2..=6).contains(&p.t) { 1.0 } else { 0.3 });
        let a = l0.delta_l(&f1, &psi, &phi).unwrap();
        let b = l0.delta_l(&f2, &psi, &phi).unwrap();
        assert!((a - b).abs() < 1e-12);

        // quadratic Lagrangian: the variation is its second order Taylor polynomial
        let s = l0.eval(&f1);
        let first: f64 = psi.support().iter().map(|&q| s.derivative(q).evaluate(&phi).re * psi.get(q)).sum();
        let second: f64 = psi
            .support()
            .iter()
            .flat_map(|&q| psi.support().into_iter().map(move |r| (q, r)))
            .map(|(q, r)| 0.5 * s.derivative(q).derivative(r).evaluate(&phi).re * psi.get(q) * psi.get(r))
            .sum();
        assert!((a - first - second).abs() < 1e-12);

        let bad = FieldConfiguration::delta(&l, Point::new(4, 4), 1.0);
        assert!(matches!(l0.delta_l(&bad, &psi, &phi), Err(Error::CutoffNotUnity(_))));
    }

    #[test]
    fn lagrangian_axioms() {
        let l = LatticeSpacetime::new(8, 8, 0.5, 1.0).unwrap();
        let l0 = lagrangian_l0(l, 1.0);
        let f1 = FieldConfiguration::from_fn(&l, |p| if p.t == 2 && p.x == 1 { 0.5 } else { 0.0 });
        let f2 = FieldConfiguration::from_fn(&l, |p| 0.1 * (p.x + p.t) as f64);
        let f3 = FieldConfiguration::from_fn(&l, |p| if p.t == 5 && p.x == 6 { -2.0 } else { 0.0 });
        assert!(l0.check_additivity(&f1, &f2, &f3, 1e-12).unwrap());
        let bump = f1.add(&f3);
        assert!(l0.check_covariance(&bump, 1, 3, 1e-12).unwrap());
        assert!(l0.check_covariance(&bump, 0, -5, 1e-12).unwrap());
        let v = interaction_lagrangian(l, Interaction::Phi4);
        assert!(v.check_covariance(&bump, -1, 2, 1e-12).unwrap());
        // a total difference term is equivalent to zero
        let zero = GeneralizedLagrangian::new(l, 1, |_| PolyFunctional::zero());
        let boundary = GeneralizedLagrangian::new(l, 1, move |f| {
            let mut out = PolyFunctional::zero();
            for p in l.points() {
                let right = Point::new(p.t, l.shift_x(p.x, 1));
                let c = f.get(p) - f.get(right);
                out.add_term(vec![right], Complex64::new(c, 0.0));
            }
            out
        });
        let plateau =
            FieldConfiguration::from_fn(
                &l,
                |p| {
                    if (2..=5).contains(&p.t) && (1..=6).contains(&p.x) {
                        1.0
                    } else {
                        0.0
                    }
                },
            );
        assert!(boundary.equivalent_on(&zero, &plateau));
        let big = LatticeSpacetime::new(12, 12, 0.5, 1.0).unwrap();
        let wide =
            FieldConfiguration::from_fn(
                &big,
                |p| {
                    if (2..=8).contains(&p.t) && (2..=9).contains(&p.x) {
                        1.0
                    } else {
                        0.0
                    }
                },
            );
        let l0_big = lagrangian_l0(big, 1.0);
        let zero_big = GeneralizedLagrangian::new(big, 1, |_| PolyFunctional::zero());
        assert!(!l0_big.equivalent_on(&zero_big, &wide));
    }
}
