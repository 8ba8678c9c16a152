//! Property-based invariants over random band-limited states.

use num_complex::Complex64;
use proptest::prelude::*;

use crosswave::hypercross::{enumerate_cross, project, residual};
use crosswave::lattice::{make_grid, Rep};
use crosswave::norms::random_band_limited;
use crosswave::spin::{antisymmetrize, pauli_residual, SpinPartition};

const TOL: f64 = 1e-10;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// The unitary transform preserves the l² norm in both directions.
    #[test]
    fn parseval(seed in any::<u64>(), n in prop::sample::select(vec![8usize, 16, 32])) {
        let grid = make_grid(1, 2, 4.0, n).unwrap();
        let u = random_band_limited(&grid, n / 4, seed);
        let space = u.transform(Rep::Space).l2_norm();
        let freq = u.transform(Rep::Frequency).l2_norm();
        prop_assert!((space - freq).abs() <= TOL * space.max(1.0));
    }

    /// Projection onto the cross is linear: P(a·u + b·v) = a·Pu + b·Pv.
    #[test]
    fn projection_linear(
        seed in any::<u64>(),
        re in -2.0f64..2.0,
        im in -2.0f64..2.0,
        r in 2.0f64..20.0,
    ) {
        let grid = make_grid(1, 2, 4.0, 16).unwrap();
        let part = SpinPartition::single_class(2);
        let cross = enumerate_cross(&grid, &part, r).unwrap();
        let u = random_band_limited(&grid, 6, seed);
        let v = random_band_limited(&grid, 6, seed.wrapping_add(1));
        let a = Complex64::new(re, im);
        let mut au = u.clone();
        au.scale(a);
        let mut combined = au.sub(&{
            let mut nv = v.clone();
            nv.scale(-Complex64::ONE);
            nv
        });
        combined.t = 0.0;
        let lhs = project(&combined, &cross).unwrap();
        let mut pu = project(&u, &cross).unwrap();
        pu.scale(a);
        let pv = project(&v, &cross).unwrap();
        let mut rhs = pu.sub(&{
            let mut npv = pv.clone();
            npv.scale(-Complex64::ONE);
            npv
        });
        rhs.t = 0.0;
        let diff = lhs.sub(&rhs).l2_norm();
        prop_assert!(diff <= TOL * lhs.l2_norm().max(1.0));
    }

    /// Projection is idempotent and orthogonal: P² = P and Pu ⟂ (1−P)u,
    /// so the Pythagorean identity holds.
    #[test]
    fn projection_idempotent(seed in any::<u64>(), r in 2.0f64..20.0) {
        let grid = make_grid(1, 2, 4.0, 16).unwrap();
        let part = SpinPartition::single_class(2);
        let cross = enumerate_cross(&grid, &part, r).unwrap();
        let u = random_band_limited(&grid, 6, seed);
        let pu = project(&u, &cross).unwrap();
        let ppu = project(&pu, &cross).unwrap();
        prop_assert!(ppu.sub(&pu).l2_norm() <= TOL);
        let ru = residual(&u, &cross).unwrap();
        let total = u.l2_norm().powi(2);
        let parts = pu.l2_norm().powi(2) + ru.l2_norm().powi(2);
        prop_assert!((total - parts).abs() <= TOL * total.max(1.0));
    }

    /// The antisymmetrizer is an orthogonal projection: idempotent,
    /// norm-nonincreasing, and its image has vanishing Pauli residual.
    #[test]
    fn antisymmetrizer_idempotent(seed in any::<u64>()) {
        let grid = make_grid(1, 3, 4.0, 8).unwrap();
        let part = SpinPartition::from_labels(&[1, 1, 2]).unwrap();
        let u = random_band_limited(&grid, 3, seed);
        let au = antisymmetrize(&u, &part).unwrap();
        let aau = antisymmetrize(&au, &part).unwrap();
        prop_assert!(aau.sub(&au).l2_norm() <= TOL * au.l2_norm().max(1.0));
        prop_assert!(au.l2_norm() <= u.l2_norm() * (1.0 + TOL));
        prop_assert!(pauli_residual(&au, &part) <= 1e-12);
    }

    /// l² norms obey the triangle inequality.
    #[test]
    fn triangle_inequality(seed in any::<u64>()) {
        let grid = make_grid(2, 1, 4.0, 16).unwrap();
        let u = random_band_limited(&grid, 6, seed);
        let v = random_band_limited(&grid, 6, seed.wrapping_add(7));
        let mut nv = v.clone();
        nv.scale(-Complex64::ONE);
        let mut sum = u.sub(&nv);
        sum.t = 0.0;
        prop_assert!(sum.l2_norm() <= u.l2_norm() + v.l2_norm() + TOL);
    }

    /// Crosses are nested in R, and residuals shrink monotonically.
    #[test]
    fn cross_monotone(seed in any::<u64>(), r in 1.0f64..12.0, factor in 1.0f64..4.0) {
        let grid = make_grid(1, 2, 4.0, 16).unwrap();
        let part = SpinPartition::single_class(2);
        let small = enumerate_cross(&grid, &part, r).unwrap();
        let large = enumerate_cross(&grid, &part, r * factor).unwrap();
        let inner: std::collections::HashSet<usize> =
            large.members().iter().copied().collect();
        prop_assert!(small.members().iter().all(|m| inner.contains(m)));
        let u = random_band_limited(&grid, 6, seed);
        let tail_small = residual(&u, &small).unwrap().l2_norm();
        let tail_large = residual(&u, &large).unwrap().l2_norm();
        prop_assert!(tail_large <= tail_small * (1.0 + TOL) + TOL);
    }
}
