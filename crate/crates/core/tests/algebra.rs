use approx::assert_relative_eq;
use paqft_core::dynamics::KGOperator;
use paqft_core::fps::{series_exp, series_inv, FormalSeries, HbarPoly};
use paqft_core::functionals::{random_poly, PolyFunctional};
use paqft_core::lattice::{LatticeSpacetime, Point};
use paqft_core::quantization::{qdistance, qpoly, QContext};
use paqft_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn ctx() -> QContext {
    let l = LatticeSpacetime::new(6, 5, 0.5, 1.0).unwrap();
    QContext::new(KGOperator::new(l, 1.0).unwrap().hadamard_w().unwrap())
}

fn scalar_mul(a: &Complex64, b: &Complex64) -> HbarPoly<Complex64> {
    HbarPoly::constant(a * b)
}

fn mono(points: &[Point]) -> Vec<Point> {
    let mut m = points.to_vec();
    m.sort();
    m
}

#[test]
fn wick_expansion_of_squared_fields() {
    let ctx = ctx();
    let (p, q) = (Point::new(3, 1), Point::new(2, 3));
    let sq = |x: Point| PolyFunctional::monomial(vec![x, x], Complex64::new(1.0, 0.0));
    let w = ctx.props().two_point(p, q);
    let prod = ctx.star_fn(&sq(p), &sq(q));
    assert_eq!(prod.coeff(0).coeff(&mono(&[p, p, q, q])), Complex64::new(1.0, 0.0));
    assert!((prod.coeff(1).coeff(&mono(&[p, q])) - 4.0 * w).norm() < 1e-14);
    assert!((prod.coeff(2).constant_part() - 2.0 * w * w).norm() < 1e-14);
    assert!(prod.coeff(3).is_zero());
}

#[test]
fn time_ordering_contracts_with_the_feynman_propagator() {
    let ctx = ctx();
    let (p, q) = (Point::new(1, 0), Point::new(4, 2));
    let pair = PolyFunctional::monomial(vec![p, q], Complex64::new(1.0, 0.0));
    let t = ctx.time_order_fn(&pair);
    assert!((t.coeff(1).constant_part() - ctx.props().feynman(p, q)).norm() < 1e-14);
    let square = PolyFunctional::monomial(vec![p, p], Complex64::new(1.0, 0.0));
    let t = ctx.time_order_fn(&square);
    assert!((t.coeff(1).constant_part() - ctx.props().feynman(p, p)).norm() < 1e-14);
}

#[test]
fn linear_commutator_is_the_pauli_jordan_function() {
    let ctx = ctx();
    let l = ctx.props().lattice;
    for p in l.points() {
        for q in l.points() {
            let c = ctx.commutator_fn(&PolyFunctional::field(p), &PolyFunctional::field(q));
            let expected = Complex64::new(0.0, ctx.props().pauli_jordan(p, q));
            assert!((c.coeff(1).constant_part() - expected).norm() < 1e-13);
            assert!(c.coeff(0).is_zero());
        }
    }
}

#[test]
fn scalar_series_match_taylor_coefficients() {
    let a = Complex64::new(0.3, -0.7);
    let x = FormalSeries::monomial(6, 1, HbarPoly::constant(a));
    let e = series_exp(&x, &scalar_mul).unwrap();
    let mut factorial = 1.0;
    for n in 0..=6 {
        if n > 0 {
            factorial *= n as f64;
        }
        let z = e.coeff(n).coeff(0);
        let expected = a.powu(n as u32) / factorial;
        assert_relative_eq!(z.re, expected.re, epsilon = 1e-15);
        assert_relative_eq!(z.im, expected.im, epsilon = 1e-15);
    }
    let one_minus = FormalSeries::one(6).sub(&x).unwrap();
    let inv = series_inv(&one_minus, &scalar_mul).unwrap();
    for n in 0..=6 {
        assert!((inv.coeff(n).coeff(0) - a.powu(n as u32)).norm() < 1e-15);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn star_is_associative_and_time_ordering_inverts(seed in any::<u64>()) {
        let ctx = ctx();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Point> = ctx.props().lattice.points().collect();
        let sample: Vec<Point> = pts.iter().copied().step_by(1 + (seed % 7) as usize).take(4).collect();
        let f = qpoly(random_poly(&mut rng, &sample, 3, 3));
        let g = qpoly(random_poly(&mut rng, &sample, 3, 3));
        let h = qpoly(random_poly(&mut rng, &sample, 2, 3));
        let left = ctx.star(&ctx.star(&f, &g), &h);
        let right = ctx.star(&f, &ctx.star(&g, &h));
        prop_assert!(qdistance(&left, &right) < 1e-12);
        prop_assert!(qdistance(&ctx.time_order_inv(&ctx.time_order(&f)), &f) < 1e-12);
        let fg = ctx.commutator(&f, &g);
        let gf = ctx.commutator(&g, &f);
        prop_assert!(qdistance(&fg, &gf.scale(Complex64::new(-1.0, 0.0))) < 1e-12);
    }
}
