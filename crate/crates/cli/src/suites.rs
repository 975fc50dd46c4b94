//! The named check suites.

use std::collections::BTreeSet;
use std::time::Instant;

use num_complex::Complex64;
use paqft_core::bv::{ce_gamma, random_graded, AbelianToy, GaugeToy, GradedFunctional, LieAlgebraToy, ScalarBv};
use paqft_core::dynamics::{interaction_v, lagrangian_l0, Interaction, KGOperator};
use paqft_core::fps::{FormalSeries, HbarPoly};
use paqft_core::functionals::{random_poly, FieldConfiguration, PolyFunctional};
use paqft_core::lattice::{LatticeSpacetime, Point};
use paqft_core::nonpert::{oracle_residual, rewrite_s2, rewrite_s3, FunctionalLabel, NonpertEngine, SWord};
use paqft_core::perturbation::{
    anti_s_matrix_direct, check_causal_factorization, check_einstein_causality, constant_series, random_solution,
    reduce_to_slab, s_matrix, star_series, InteractingTheory, LocalNet, Series,
};
use paqft_core::quantization::{associativity_residual, causal_ordering_residual, dirac_residual, QContext};
use paqft_core::{bv, Result};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::report::{CheckRecord, Status};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Suite {
    Causality,
    Associativity,
    Factorization,
    Bogoliubov,
    Timeslice,
    Bv,
    Weyl,
}

impl Suite {
    pub const ALL: [Suite; 7] = [
        Suite::Causality,
        Suite::Associativity,
        Suite::Factorization,
        Suite::Bogoliubov,
        Suite::Timeslice,
        Suite::Bv,
        Suite::Weyl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Causality => "causality",
            Suite::Associativity => "associativity",
            Suite::Factorization => "factorization",
            Suite::Bogoliubov => "bogoliubov",
            Suite::Timeslice => "timeslice",
            Suite::Bv => "bv",
            Suite::Weyl => "weyl",
        }
    }

    /// Smallest `(n_t, n_x)` on which the suite's geometry fits.
    pub fn min_lattice(self) -> (usize, usize) {
        match self {
            Suite::Causality => (4, 6),
            Suite::Associativity => (4, 4),
            Suite::Factorization => (8, 4),
            Suite::Bogoliubov => (6, 4),
            Suite::Timeslice => (8, 4),
            Suite::Bv => (6, 4),
            Suite::Weyl => (8, 6),
        }
    }

    pub fn run(self, env: &SuiteEnv) -> Result<Vec<CheckRecord>> {
        let mut rec = Recorder::new(self, env);
        let mut rng = suite_rng(env.seed, self);
        match self {
            Suite::Causality => causality(env, &mut rec, &mut rng)?,
            Suite::Associativity => associativity(env, &mut rec, &mut rng)?,
            Suite::Factorization => factorization(env, &mut rec, &mut rng)?,
            Suite::Bogoliubov => bogoliubov(env, &mut rec, &mut rng)?,
            Suite::Timeslice => timeslice(env, &mut rec, &mut rng)?,
            Suite::Bv => bv_suite(env, &mut rec, &mut rng)?,
            Suite::Weyl => weyl(env, &mut rec, &mut rng)?,
        }
        Ok(rec.out)
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Suite::ALL.into_iter().find(|suite| suite.name() == s).ok_or_else(|| format!("unknown suite {s:?}"))
    }
}

/// Shared, immutable inputs of every suite.
#[derive(Debug)]
pub struct SuiteEnv {
    pub lattice: LatticeSpacetime,
    pub op: KGOperator,
    pub ctx: QContext,
    pub mass: f64,
    pub order: usize,
    pub interaction: Interaction,
    pub tolerance_cap: f64,
    pub seed: u64,
    pub timings: bool,
}

/// Per-suite generator seeded by `sha256(seed ‖ suite name)`.
pub fn suite_rng(seed: u64, suite: Suite) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(suite.name().as_bytes());
    ChaCha8Rng::from_seed(h.finalize().into())
}

struct Recorder {
    suite: Suite,
    cap: f64,
    timings: bool,
    out: Vec<CheckRecord>,
}

impl Recorder {
    fn new(suite: Suite, env: &SuiteEnv) -> Self {
        Recorder { suite, cap: env.tolerance_cap, timings: env.timings, out: Vec::new() }
    }

    fn check(&mut self, id: &str, anchor: &str, tolerance: f64, f: impl FnOnce() -> Result<f64>) -> Result<()> {
        let start = Instant::now();
        let residual = f()?;
        let seconds = if self.timings { start.elapsed().as_secs_f64() } else { 0.0 };
        let tolerance = tolerance.min(self.cap);
        let residual = if residual.is_finite() { residual } else { f64::MAX };
        let status = if residual <= tolerance { Status::Pass } else { Status::Fail };
        self.out.push(CheckRecord {
            suite: self.suite.name().into(),
            check_id: id.into(),
            anchor: anchor.into(),
            residual,
            tolerance,
            status,
            seconds,
        });
        Ok(())
    }
}

fn flag(ok: bool) -> f64 {
    if ok {
        0.0
    } else {
        1.0
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rows(l: &LatticeSpacetime, from: usize, to: usize) -> Vec<Point> {
    (from..to.min(l.n_t())).flat_map(|t| (0..l.n_x()).map(move |x| Point::new(t, x))).collect()
}

/// Interaction with a cutoff of random height on one or two random points.
fn random_interaction(rng: &mut ChaCha8Rng, l: &LatticeSpacetime, pts: &[Point], kind: Interaction) -> PolyFunctional {
    let n = rng.gen_range(1..=2);
    let chosen: Vec<Point> = pts.choose_multiple(rng, n).copied().collect();
    let heights: Vec<f64> = chosen.iter().map(|_| rng.gen_range(0.2..1.0)).collect();
    let cutoff = FieldConfiguration::from_fn(l, |p| chosen.iter().position(|&q| q == p).map_or(0.0, |i| heights[i]));
    interaction_v(kind, &cutoff)
}

fn causality(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let props = env.ctx.props();
    let n = l.num_points();
    rec.check("delta_antisymmetric", "Pauli-Jordan function is antisymmetric", 0.0, || {
        Ok((&props.delta + props.delta.transpose()).amax())
    })?;
    rec.check("delta_spacelike_support", "Pauli-Jordan function vanishes at spacelike separation", 0.0, || {
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                if l.is_spacelike(l.point(i), l.point(j)) {
                    worst = worst.max(props.delta[(i, j)].abs());
                }
            }
        }
        Ok(worst)
    })?;
    rec.check("retarded_recursion_vs_solve", "retarded Green function from recursion and linear solve", 1e-10, || {
        Ok((&props.g_r - env.op.retarded_green_direct()?).amax())
    })?;
    rec.check("two_point_commutator", "W - W^T = i Delta", 1e-12, || Ok(props.commutator_residual()))?;
    rec.check(
        "two_point_positivity",
        "W is positive semidefinite",
        1e-10,
        || Ok((-props.min_eigenvalue_w()).max(0.0)),
    )?;
    rec.check("delta_bisolution", "P Delta = Delta P^T = 0 on interior rows", 1e-10, || {
        Ok(props.bisolution_residual(&env.op, &props.delta))
    })?;
    rec.check("two_point_bisolution", "P W = W P^T = 0 on interior rows", 1e-10, || {
        Ok(props.w_bisolution_residual(&env.op))
    })?;
    rec.check("einstein_causality", "spacelike commutators vanish", 0.0, || {
        let t0 = l.n_t() / 2 - 1;
        let h = l.n_x() / 2;
        let o1 = l.diamond(Point::new(t0, 0), Point::new(t0 + 1, 1))?;
        let o2 = l.diamond(Point::new(t0, h), Point::new(t0 + 1, h + 1))?;
        check_einstein_causality(&env.ctx, &o1, &o2, 20, rng)
    })?;
    rec.check("isotony", "inclusions of a nested diamond chain are injective and compose", 0.0, || {
        let x = l.n_x() / 2;
        let chain = (1..=3).map(|k| l.diamond(Point::new(0, x), Point::new(k, x))).collect::<Result<Vec<_>>>()?;
        let net = LocalNet::new(chain);
        let strict = net.inclusion(2, 0).is_none() && net.inclusion(0, 2).is_some();
        Ok(flag(net.check_isotony() && strict))
    })?;
    rec.check("lagrangian_covariance", "L0 commutes with interior lattice translations", 0.0, || {
        let l0 = lagrangian_l0(l, env.mass);
        let f = FieldConfiguration::delta(&l, Point::new(1, 0), 0.75);
        let mut failures = 0;
        for shift_x in 0..l.n_x() as isize {
            for shift_t in 0..(l.n_t() as isize - 2) {
                if !l0.check_covariance(&f, shift_t, shift_x, 0.0)? {
                    failures += 1;
                }
            }
        }
        Ok(failures as f64)
    })?;
    Ok(())
}

fn associativity(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let ctx = &env.ctx;
    let all = rows(&l, 0, l.n_t());
    rec.check("star_associativity", "(F*G)*H = F*(G*H) per hbar coefficient", 1e-12, || {
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let pts: Vec<Point> = all.choose_multiple(rng, 4).copied().collect();
            let (f, g, h) = (random_poly(rng, &pts, 3, 3), random_poly(rng, &pts, 3, 3), random_poly(rng, &pts, 3, 3));
            worst = worst.max(associativity_residual(ctx, &f, &g, &h));
        }
        Ok(worst)
    })?;
    rec.check("dirac_correspondence", "first order commutator is i times the Peierls bracket", 1e-9, || {
        let mut worst = 0.0f64;
        for _ in 0..100 {
            let pts: Vec<Point> = all.choose_multiple(rng, 4).copied().collect();
            let (f, g) = (random_poly(rng, &pts, 3, 3), random_poly(rng, &pts, 3, 3));
            worst = worst.max(dirac_residual(ctx, &f, &g));
        }
        Ok(worst)
    })?;
    rec.check("causal_ordering", "F .T G = F * G when F is not earlier than G", 1e-12, || {
        let mid = l.n_t() / 2;
        let (late, early) = (rows(&l, mid, l.n_t()), rows(&l, 0, mid));
        let mut worst = 0.0f64;
        for _ in 0..50 {
            let fp: Vec<Point> = late.choose_multiple(rng, 3).copied().collect();
            let gp: Vec<Point> = early.choose_multiple(rng, 3).copied().collect();
            let (f, g) = (random_poly(rng, &fp, 3, 3), random_poly(rng, &gp, 3, 3));
            worst = worst.max(causal_ordering_residual(ctx, &f, &g));
        }
        Ok(worst)
    })?;
    Ok(())
}

fn factorization(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let ctx = &env.ctx;
    let k = env.order;
    rec.check("s_of_zero", "S(0) = 1", 0.0, || {
        s_matrix(ctx, &PolyFunctional::zero(), k)?.distance(&FormalSeries::one(k))
    })?;
    let third = (l.n_t() - 2) / 3;
    let early = rows(&l, 1, 1 + third);
    let middle = rows(&l, 1 + third, 1 + 2 * third);
    let late = rows(&l, 1 + 2 * third, l.n_t() - 1);
    rec.check("causal_factorization", "S(F1+F+F2) = S(F1+F) S(F)^-1 S(F+F2) for F1 later than F2", 1e-9, || {
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let f1 = random_interaction(rng, &l, &late, env.interaction);
            let f = random_interaction(rng, &l, &middle, env.interaction);
            let f2 = random_interaction(rng, &l, &early, env.interaction);
            worst = worst.max(check_causal_factorization(ctx, &f1, &f, &f2, k)?);
        }
        Ok(worst)
    })?;
    Ok(())
}

fn random_series(rng: &mut ChaCha8Rng, pts: &[Point], order: usize) -> Series {
    let chosen: Vec<Point> = pts.choose_multiple(rng, 2).copied().collect();
    constant_series(order, HbarPoly::constant(random_poly(rng, &chosen, 2, 2)))
}

fn bogoliubov(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let ctx = &env.ctx;
    let k = env.order;
    let inner = rows(&l, 1, l.n_t() - 1);
    let centre = *inner.choose(rng).expect("interior rows");
    let v = random_interaction(rng, &l, &[centre], env.interaction);
    let theory = InteractingTheory::new(ctx, v.clone(), k)?;
    rec.check("r0_is_time_ordering", "R_V(F) at order zero is T(F)", 0.0, || {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let pts: Vec<Point> = inner.choose_multiple(rng, 3).copied().collect();
            let f = random_poly(rng, &pts, 3, 3);
            let r = theory.bogoliubov_fn(&f)?;
            worst = worst.max(r.coeff(0).distance(&ctx.time_order_fn(&f)));
        }
        Ok(worst)
    })?;
    rec.check("interacting_associativity", "interacting star product is associative", 1e-9, || {
        let mut worst = 0.0f64;
        for _ in 0..5 {
            let (a, b, cc) =
                (random_series(rng, &inner, k), random_series(rng, &inner, k), random_series(rng, &inner, k));
            let left = theory.interacting_star(&theory.interacting_star(&a, &b)?, &cc)?;
            let right = theory.interacting_star(&a, &theory.interacting_star(&b, &cc)?)?;
            worst = worst.max(left.distance(&right)?);
        }
        Ok(worst)
    })?;
    rec.check("s_matrix_unitarity", "S(V) * anti-time-ordered exp(-iV/hbar) = 1", 1e-9, || {
        let prod = star_series(ctx, &s_matrix(ctx, &v, k)?, &anti_s_matrix_direct(ctx, &v, k))?;
        prod.distance(&FormalSeries::one(k))
    })?;
    Ok(())
}

fn timeslice(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let props = env.ctx.props();
    let (t0, thickness) = (l.n_t() / 2 - 1, 2);
    let mut samples = Vec::new();
    for _ in 0..20 {
        let values: Vec<f64> = (0..l.num_points()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = FieldConfiguration::from_fn(&l, |p| if l.is_interior(p) { values[l.index(p)] } else { 0.0 });
        samples.push((f.clone(), reduce_to_slab(&env.op, props, &f, t0, thickness)?));
    }
    rec.check("slab_support", "reduced smearing function lies in the slab", 0.0, || {
        let outside: usize =
            samples.iter().map(|(_, g)| g.support().iter().filter(|p| p.t < t0 || p.t >= t0 + thickness).count()).sum();
        Ok(outside as f64)
    })?;
    rec.check("slab_same_field", "Delta f' = Delta f", 1e-10, || {
        let mut worst = 0.0f64;
        for (f, g) in &samples {
            let d = props.apply_matrix(&props.delta, f).sub(&props.apply_matrix(&props.delta, g));
            worst = worst.max(d.max_abs());
        }
        Ok(worst)
    })?;
    Ok(())
}

fn ghost_mismatches(
    set: &bv::GradedGeneratorSet,
    samples: &[GradedFunctional],
    shift: i32,
    op: impl Fn(&GradedFunctional) -> GradedFunctional,
) -> usize {
    let mut bad = 0;
    for x in samples {
        for (m, coeff) in x.terms() {
            let mono = GradedFunctional::monomial(m.clone(), coeff);
            let Some(g) = mono.ghost_number(set) else { continue };
            let image = op(&mono);
            if image.terms().any(|_| image.ghost_numbers(set) != BTreeSet::from([g + shift])) {
                bad += 1;
            }
        }
    }
    bad
}

fn bv_suite(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let ctx = &env.ctx;
    let scalar = ScalarBv::new(l, env.mass);
    let (tm, xm) = (l.n_t() / 2, l.n_x() / 2);
    let pts = [Point::new(tm - 1, xm), Point::new(tm, xm), Point::new(tm, xm + 1)];
    let ids: Vec<bv::GenId> =
        pts.iter().flat_map(|&p| [scalar.field_id(p), scalar.antifield_id(p).expect("interior")]).collect();
    let samples: Vec<GradedFunctional> = (0..50).map(|_| random_graded(rng, &ids, 3, 4)).collect();
    let worst = |f: &dyn Fn(&GradedFunctional) -> f64| samples.iter().map(f).fold(0.0f64, f64::max);

    rec.check("koszul_nilpotent", "delta_S^2 = 0", 1e-10, || Ok(worst(&|x| scalar.s0(&scalar.s0(x)).max_abs())))?;
    rec.check("laplacian_nilpotent", "BV Laplacian squares to zero", 1e-10, || {
        Ok(worst(&|x| scalar.laplacian(&scalar.laplacian(x)).max_abs()))
    })?;
    rec.check("quantum_bv_identity", "T^-1 s0 T = s0 - i hbar Laplacian", 1e-10, || {
        Ok(worst(&|x| scalar.s0_identity_residual(ctx, x)))
    })?;
    rec.check("time_ordered_koszul", "delta0(T F) = T(delta0 F - i hbar Laplacian F)", 1e-10, || {
        Ok(worst(&|x| scalar.time_ordered_koszul_residual(ctx, x)))
    })?;
    rec.check("koszul_image_on_shell", "im delta_S vanishes on mode solutions", 1e-10, || {
        let mut modes = Vec::new();
        for j in 0..l.n_x() {
            for phase in [0.0, std::f64::consts::FRAC_PI_2] {
                if modes.len() < 8 {
                    modes.push(env.op.mode_solution(j, phase)?);
                }
            }
        }
        let interior: Vec<Point> = rows(&l, 1, l.n_t() - 1);
        let mut w = 0.0f64;
        for _ in 0..10 {
            let p = *interior.choose(rng).expect("interior rows");
            let q = *interior.choose(rng).expect("interior rows");
            let x = scalar.phi_dag(p)?.mul(&scalar.phi(q)).add(&scalar.phi_dag(q)?.scale(c(rng.gen_range(-1.0..1.0))));
            let image = scalar.koszul_delta(&x, scalar.free_action())?;
            for m in &modes {
                w = w.max(scalar.evaluate(&image, m).expect("antifield free").norm());
            }
        }
        Ok(w)
    })?;
    rec.check("scalar_qme", "1/2 {L,L} - i hbar Laplacian L = 0 for the scalar", 0.0, || {
        let cutoff = FieldConfiguration::delta(&l, Point::new(tm, xm), 1.0);
        let lag =
            scalar.from_poly(scalar.free_action()).add(&scalar.from_poly(&interaction_v(env.interaction, &cutoff)));
        Ok(scalar.qme_residual(&lag))
    })?;
    rec.check("interacting_bv_operator", "R_V^-1 s0 R_V = {., S0 + V} - i hbar Laplacian", 1e-9, || {
        let cutoff = FieldConfiguration::delta(&l, Point::new(tm, xm), 0.5);
        let v = interaction_v(env.interaction, &cutoff);
        let theory = scalar.interacting(ctx, &v, env.order)?;
        let mut w = 0.0f64;
        for &p in &pts {
            let x = scalar.phi_dag(p)?;
            w = w.max(theory.s_hat_residual(&x)?);
            w = w.max(theory.s_hat_residual(&scalar.phi(pts[1]).mul(&x))?);
        }
        Ok(w)
    })?;

    let toy = AbelianToy::new(4)?;
    let s = toy.s_images();
    let (delta, gamma) = toy.split_s();
    let toy_ids: Vec<bv::GenId> = toy.set().ids().collect();
    let toy_samples: Vec<GradedFunctional> = (0..50).map(|_| random_graded(rng, &toy_ids, 3, 4)).collect();
    let twice = |x: &GradedFunctional, a: &bv::DerivationImages, b: &bv::DerivationImages| {
        bv::apply_derivation(&bv::apply_derivation(x, a), b)
    };
    let toy_worst = |f: &dyn Fn(&GradedFunctional) -> f64| toy_samples.iter().map(f).fold(0.0f64, f64::max);
    rec.check("abelian_s_nilpotent", "s^2 = 0 for the abelian gauge toy", 1e-10, || {
        Ok(toy_worst(&|x| twice(x, &s, &s).max_abs()))
    })?;
    rec.check("abelian_delta_nilpotent", "delta^2 = 0 for the abelian gauge toy", 1e-10, || {
        Ok(toy_worst(&|x| twice(x, &delta, &delta).max_abs()))
    })?;
    rec.check("abelian_gamma_nilpotent", "gamma^2 = 0 for the abelian gauge toy", 1e-10, || {
        Ok(toy_worst(&|x| twice(x, &gamma, &gamma).max_abs()))
    })?;
    rec.check("abelian_delta_gamma_anticommute", "delta gamma + gamma delta = 0", 1e-10, || {
        Ok(toy_worst(&|x| twice(x, &gamma, &delta).add(&twice(x, &delta, &gamma)).max_abs()))
    })?;
    rec.check("abelian_cme_support", "{L(f), L(f)} is supported where f is not constant", 0.0, || {
        let grid = AbelianToy::new(6)?;
        let block = |(i, j): (usize, usize)| (1..=3).contains(&i) && (1..=3).contains(&j);
        let report = grid.check_cme(&|v| if block(v) { 1.0 } else { 0.0 });
        let full = grid.check_cme(&|_| 1.0);
        Ok(flag(report.contained && report.residual > 0.0) + full.residual)
    })?;
    rec.check("abelian_invariants_closed", "gamma annihilates plaquette polynomials", 0.0, || {
        let gauge = GaugeToy::Abelian(toy.clone());
        Ok(toy.plaquette_invariants((0, 0), 3, 2).iter().map(|f| ce_gamma(f, &gauge).max_abs()).fold(0.0, f64::max))
    })?;
    rec.check("lie_gamma_nilpotent", "Chevalley-Eilenberg differential of su(2) squares to zero", 1e-10, || {
        let lie = LieAlgebraToy::su2();
        let gauge = GaugeToy::Lie(lie.clone());
        let mut w = 0.0f64;
        for _ in 0..50 {
            let x = random_graded(rng, &lie.ids(), 3, 4);
            w = w.max(ce_gamma(&ce_gamma(&x, &gauge), &gauge).max_abs());
        }
        Ok(w)
    })?;
    rec.check("ghost_number_bookkeeping", "s, Laplacian and antibracket raise ghost number by one", 0.0, || {
        let mut bad = ghost_mismatches(toy.set(), &toy_samples, 1, |x| bv::apply_derivation(x, &s));
        bad += ghost_mismatches(scalar.set(), &samples, 1, |x| scalar.laplacian(x));
        bad += ghost_mismatches(toy.set(), &toy_samples, 1, |x| bv::bv_laplacian(toy.set(), x));
        for pair in toy_samples.windows(2) {
            for (m, coeff) in pair[0].terms() {
                let x = GradedFunctional::monomial(m.clone(), coeff);
                for (n, d) in pair[1].terms() {
                    let y = GradedFunctional::monomial(n.clone(), d);
                    let (Some(gx), Some(gy)) = (x.ghost_number(toy.set()), y.ghost_number(toy.set())) else { continue };
                    let b = bv::antibracket(toy.set(), &x, &y);
                    if !b.is_zero() && b.ghost_numbers(toy.set()) != BTreeSet::from([gx + gy + 1]) {
                        bad += 1;
                    }
                }
            }
        }
        Ok(bad as f64)
    })?;
    Ok(())
}

fn weyl(env: &SuiteEnv, rec: &mut Recorder, rng: &mut ChaCha8Rng) -> Result<()> {
    let l = env.lattice;
    let ctx = &env.ctx;
    let dynamics = lagrangian_l0(l, env.mass).negated();
    let engine = NonpertEngine::new(ctx, env.op, dynamics.clone(), 2)?;
    rec.check("constant_extraction", "S(F + c) = exp(ic/hbar) S(F) against the perturbative image", 1e-8, || {
        Ok(engine.constant_rule_residual())
    })?;
    rec.check("rewrite_oracle", "S2 and S3 rewrites preserve the perturbative image", 1e-8, || {
        let sols: Vec<FieldConfiguration> = (0..3).map(|_| random_solution(&env.op, rng)).collect();
        let third = (l.n_t() - 2) / 3;
        let early = rows(&l, 1, 1 + third);
        let middle = rows(&l, 1 + third, 1 + 2 * third);
        let late = rows(&l, 1 + 2 * third, l.n_t() - 1);
        let mut w = 0.0f64;
        for i in 0..30 {
            let f1 = FunctionalLabel::scaled(random_interaction(rng, &l, &late, Interaction::Phi3));
            let f = FunctionalLabel::scaled(random_interaction(rng, &l, &middle, Interaction::Phi2));
            let f2 = FunctionalLabel::scaled(random_interaction(rng, &l, &early, Interaction::Phi3));
            let word = SWord::generator(f1.add(&f).add(&f2));
            let next = if i % 2 == 0 {
                rewrite_s2(&word, 0, (&f1, &f, &f2), &l)?
            } else {
                let centre = *middle.choose(rng).expect("middle rows");
                let h = FieldConfiguration::from_fn(&l, |p| {
                    let near = p.t.abs_diff(centre.t) <= 1 && l.periodic_distance(p.x, centre.x) <= 1;
                    if near && l.is_interior(p) {
                        0.3
                    } else {
                        0.0
                    }
                });
                rewrite_s3(&word, 0, &h, &dynamics)?
            };
            w = w.max(oracle_residual(ctx, &word, &next, 2, &sols)?);
        }
        Ok(w)
    })?;
    let x0 = l.n_x() / 2;
    let mut timelike = Vec::new();
    for t1 in 2..l.n_t() - 2 {
        for (dt, dx) in [(1usize, 0isize), (2, 1), (2, -1), (1, 1)] {
            let t2 = t1 + dt;
            if t2 < l.n_t() - 1 && timelike.len() < 10 {
                timelike.push((Point::new(t1, x0), Point::new(t2, l.shift_x(x0, dx))));
            }
        }
    }
    timelike.shuffle(rng);
    let mut reports = Vec::new();
    for &(p, q) in &timelike {
        reports.push((p, q, engine.verify_weyl(&PolyFunctional::field(p), &PolyFunctional::field(q), 3, 3)?));
    }
    rec.check("weyl_timelike_oracle", "S(f)S(g) = exp(i theta) S(f+g) matches the order 3 expansion", 1e-8, || {
        Ok(reports
            .iter()
            .map(|(_, _, r)| if r.derived { r.oracle_residual.unwrap_or(f64::MAX) } else { f64::MAX })
            .fold(0.0, f64::max))
    })?;
    rec.check("weyl_phase_pairing", "theta hbar / lambda^2 equals <f, G_A g>", 1e-10, || {
        Ok(reports.iter().map(|(p, q, r)| (r.theta() - ctx.props().advanced(*p, *q)).norm()).fold(0.0, f64::max))
    })?;
    let t = l.n_t() / 2;
    let mut spacelike = Vec::new();
    for dx in 1..=l.n_x() / 2 {
        let (p, q) = (Point::new(t, 0), Point::new(t, dx));
        spacelike.push(engine.verify_weyl(&PolyFunctional::field(p), &PolyFunctional::field(q), 3, 3)?);
    }
    rec.check("weyl_spacelike", "spacelike labels give theta = 0", 0.0, || {
        Ok(spacelike.iter().map(|r| if r.derived { r.theta().norm() } else { f64::MAX }).fold(0.0, f64::max))
    })?;
    rec.check("weyl_spacelike_oracle", "spacelike S(f)S(g) = S(f+g) matches the order 3 expansion", 1e-8, || {
        Ok(spacelike.iter().map(|r| r.oracle_residual.unwrap_or(f64::MAX)).fold(0.0, f64::max))
    })?;
    Ok(())
}
