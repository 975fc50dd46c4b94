use paqft_core::dynamics::KGOperator;
use paqft_core::functionals::PolyFunctional;
use paqft_core::lattice::{LatticeSpacetime, Point};
use paqft_core::perturbation::{s_matrix, s_matrix_direct};
use paqft_core::quantization::QContext;
use paqft_core::Complex64;

fn ctx() -> QContext {
    let l = LatticeSpacetime::new(8, 4, 0.5, 1.0).unwrap();
    QContext::new(KGOperator::new(l, 1.0).unwrap().hadamard_w().unwrap())
}

#[test]
fn linear_s_matrix_matches_the_closed_form() {
    let ctx = ctx();
    let p = Point::new(4, 1);
    let s = s_matrix(&ctx, &PolyFunctional::field(p), 2).unwrap();
    let one = Complex64::new(1.0, 0.0);
    // λ¹: (i/ħ) φ(p)
    assert_eq!(s.coeff(1).coeff(-1).coeff(&[p]), Complex64::new(0.0, 1.0));
    // λ²: −(1/2ħ²) T(φ(p)²) = −(1/2ħ²) φ(p)² − (1/2ħ) Δ_F(p,p)
    assert!((s.coeff(2).coeff(-2).coeff(&[p, p]) + 0.5 * one).norm() < 1e-14);
    let df = ctx.props().feynman(p, p);
    assert!((s.coeff(2).coeff(-1).constant_part() + 0.5 * df).norm() < 1e-14);
}

#[test]
fn recursive_and_direct_s_matrices_agree() {
    let ctx = ctx();
    let (p, q) = (Point::new(3, 0), Point::new(5, 2));
    let v = PolyFunctional::monomial(vec![p, p, q], Complex64::new(0.4, 0.0))
        .add(&PolyFunctional::monomial(vec![q, q], Complex64::new(-0.7, 0.0)));
    let a = s_matrix(&ctx, &v, 3).unwrap();
    let b = s_matrix_direct(&ctx, &v, 3);
    assert!(a.distance(&b).unwrap() < 1e-12);
}
