use approx::assert_abs_diff_eq;
use paqft_core::dynamics::KGOperator;
use paqft_core::lattice::{LatticeSpacetime, Point};
use proptest::prelude::*;

/// Independent stencil for `D_tt − D_xx + m²` at an interior point.
fn stencil(l: &LatticeSpacetime, m: f64, u: &dyn Fn(Point) -> f64, p: Point) -> f64 {
    let (dt2, dx2) = (l.dt() * l.dt(), l.dx() * l.dx());
    let c = u(p);
    let tt = u(Point::new(p.t + 1, p.x)) - 2.0 * c + u(Point::new(p.t - 1, p.x));
    let xx = u(Point::new(p.t, l.shift_x(p.x, 1))) - 2.0 * c + u(Point::new(p.t, l.shift_x(p.x, -1)));
    tt / dt2 - xx / dx2 + m * m * c
}

fn stable() -> impl Strategy<Value = (LatticeSpacetime, f64)> {
    (4usize..9, 3usize..8, 0.1f64..0.6, 0.8f64..1.5, 0.3f64..1.5)
        .prop_map(|(n_t, n_x, dt, dx, m)| (LatticeSpacetime::new(n_t, n_x, dt, dx).unwrap(), m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn retarded_green_is_the_causal_inverse((l, m) in stable()) {
        let op = KGOperator::new(l, m).unwrap();
        let g = op.retarded_green();
        for q in l.points().filter(|&q| l.is_interior(q)) {
            let col = |p: Point| g[(l.index(p), l.index(q))];
            for p in l.points() {
                if !l.in_future(q, p) || p == q {
                    prop_assert_eq!(col(p), 0.0, "support outside the future cone at {:?}", p);
                }
                if l.is_interior(p) {
                    let expected = if p == q { 1.0 } else { 0.0 };
                    prop_assert!((stencil(&l, m, &col, p) - expected).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn mode_solutions_solve_the_stencil((l, m) in stable(), j in 0usize..8, phase in 0.0f64..6.3) {
        let op = KGOperator::new(l, m).unwrap();
        let j = j % l.n_x();
        let phi = op.mode_solution(j, phase).unwrap();
        let k = 2.0 * std::f64::consts::PI * j as f64 / l.n_x() as f64;
        let omega_sq = (2.0 - 2.0 * k.cos()) / (l.dx() * l.dx()) + m * m;
        let theta = (1.0 - 0.5 * omega_sq * l.dt() * l.dt()).acos();
        for p in l.points() {
            prop_assert!((phi.get(p) - (theta * p.t as f64 - k * p.x as f64 + phase).cos()).abs() < 1e-12);
            if l.is_interior(p) {
                prop_assert!(stencil(&l, m, &|q| phi.get(q), p).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn two_point_function_structure((l, m) in stable()) {
        let props = KGOperator::new(l, m).unwrap().hadamard_w().unwrap();
        let n = l.num_points();
        for i in 0..n {
            for j in 0..n {
                let w = props.w[(i, j)];
                prop_assert!((w - props.w[(j, i)].conj()).norm() < 1e-12);
                prop_assert!((w.im - 0.5 * props.delta[(i, j)]).abs() < 1e-12);
                prop_assert!((w.re - props.h[(i, j)]).abs() < 1e-12);
                prop_assert_eq!(props.g_a[(i, j)], props.g_r[(j, i)]);
            }
        }
        prop_assert!(props.min_eigenvalue_w() > -1e-10);
        prop_assert!(props.feynman_residual() < 1e-12);
    }
}

#[test]
fn massless_limit_has_a_flat_zero_mode() {
    let l = LatticeSpacetime::new(6, 4, 0.5, 1.0).unwrap();
    let op = KGOperator::new(l, 1e-3).unwrap();
    assert_abs_diff_eq!(op.omega_sq(0), 1e-6, epsilon = 1e-18);
    assert_abs_diff_eq!(op.omega_sq(2), 4.0 + 1e-6, epsilon = 1e-12);
}
