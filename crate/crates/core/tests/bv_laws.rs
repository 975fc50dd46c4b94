use paqft_core::bv::{antibracket, bv_laplacian, random_graded, GenId, GradedFunctional, GradedGeneratorSet};
use paqft_core::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two even fields and one ghost, each with its antifield.
fn generators() -> (GradedGeneratorSet, Vec<GenId>) {
    let mut set = GradedGeneratorSet::new();
    for (name, gh) in [("a", 0), ("b", 0), ("c", 1)] {
        let f = set.add_field(name, gh);
        set.add_antifield(f);
    }
    let ids = set.ids().collect();
    (set, ids)
}

fn sign(odd: bool) -> Complex64 {
    Complex64::new(if odd { -1.0 } else { 1.0 }, 0.0)
}

/// Part of `x` with monomials of the given parity.
fn of_parity(x: &GradedFunctional, odd: bool) -> GradedFunctional {
    let mut out = GradedFunctional::zero();
    for (m, c) in x.terms() {
        if (m.iter().filter(|g| g.is_odd()).count() % 2 == 1) == odd {
            out.add_term(m.clone(), c);
        }
    }
    out
}

fn homogeneous(rng: &mut ChaCha8Rng, ids: &[GenId], odd: bool) -> GradedFunctional {
    of_parity(&random_graded(rng, ids, 4, 6), odd)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn antibracket_is_graded_antisymmetric_and_jacobi(seed in any::<u64>(), px: bool, py: bool, pz: bool) {
        let (set, ids) = generators();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y, z) = (homogeneous(&mut rng, &ids, px), homogeneous(&mut rng, &ids, py), homogeneous(&mut rng, &ids, pz));
        let br = |a: &GradedFunctional, b: &GradedFunctional| antibracket(&set, a, b);
        // {X,Y} = −(−1)^{(|X|+1)(|Y|+1)} {Y,X}
        let swapped = br(&y, &x).scale(-sign(!px && !py));
        prop_assert!(br(&x, &y).distance(&swapped) < 1e-12);
        // {X,{Y,Z}} = {{X,Y},Z} + (−1)^{(|X|+1)(|Y|+1)} {Y,{X,Z}}
        let lhs = br(&x, &br(&y, &z));
        let rhs = br(&br(&x, &y), &z).add(&br(&y, &br(&x, &z)).scale(sign(!px && !py)));
        prop_assert!(lhs.distance(&rhs) < 1e-10);
    }

    #[test]
    fn laplacian_is_a_second_order_operator(seed in any::<u64>(), px: bool, py: bool) {
        let (set, ids) = generators();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (homogeneous(&mut rng, &ids, px), homogeneous(&mut rng, &ids, py));
        let lap = |a: &GradedFunctional| bv_laplacian(&set, a);
        prop_assert!(lap(&lap(&x)).max_abs() < 1e-12);
        // △(XY) = X △Y + (−1)^{|Y|} (△X) Y + (−1)^{|Y|} {X,Y}
        let rhs = x
            .mul(&lap(&y))
            .add(&lap(&x).mul(&y).scale(sign(py)))
            .add(&antibracket(&set, &x, &y).scale(sign(py)));
        prop_assert!(lap(&x.mul(&y)).distance(&rhs) < 1e-10);
    }

    #[test]
    fn antibracket_has_ghost_number_one(seed in any::<u64>()) {
        let (set, ids) = generators();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, y) = (random_graded(&mut rng, &ids, 3, 1), random_graded(&mut rng, &ids, 3, 1));
        let b = antibracket(&set, &x, &y);
        if let (Some(gx), Some(gy), false) = (x.ghost_number(&set), y.ghost_number(&set), b.is_zero()) {
            prop_assert_eq!(b.ghost_number(&set), Some(gx + gy + 1));
        }
    }
}

#[test]
fn canonical_pairs() {
    let (set, _) = generators();
    for (f, a) in set.pairs() {
        let (phi, dag) = (GradedFunctional::generator(f), GradedFunctional::generator(a));
        assert_eq!(antibracket(&set, &phi, &dag).coeff(&[]), Complex64::new(1.0, 0.0));
        assert_eq!(bv_laplacian(&set, &phi.mul(&dag)).coeff(&[]), sign(a.is_odd()));
    }
}
