//! Property tests for structural invariants: symmetry, evenness, linearity
//! and conjugate symmetry.

use num_complex::Complex64;
use proptest::prelude::*;

use scatter_core::green::free_green;
use scatter_core::grid::make_grid;
use scatter_core::potential::{shifted_bump_potential, Potential};
use scatter_core::radon::radon_transform;
use scatter_core::solver::born_amplitude;
use scatter_core::spectral::forward_ft_real;
use scatter_core::vec3::{self, Vec3};

fn unit() -> impl Strategy<Value = Vec3> {
    (-1.0..1.0_f64, 0.0..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    })
}

fn point() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0..1.0_f64)
}

fn bump(amp: f64, center: Vec3) -> Potential {
    let d = make_grid(1.0, 13).unwrap();
    shifted_bump_potential(&d, amp, 0.5, center).unwrap()
}

fn center() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-0.15..0.15_f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_is_symmetric(x in point(), y in point(), k in 0.1..20.0_f64, im in 0.0..3.0_f64) {
        prop_assume!(vec3::norm(&vec3::sub(&x, &y)) > 1e-6);
        let kc = Complex64::new(k, im);
        let a = free_green(&x, &y, kc).unwrap();
        let b = free_green(&y, &x, kc).unwrap();
        prop_assert!((a - b).norm() <= 1e-14 * a.norm().max(1e-300));
    }

    #[test]
    fn radon_is_even(beta in unit(), c in center()) {
        let q = bump(0.1, c);
        let p = radon_transform(&q, &beta, 32);
        let m = radon_transform(&q, &vec3::neg(&beta), 32);
        let scale = p.values.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        for (a, b) in p.values.iter().zip(m.values.iter().rev()) {
            prop_assert!((a - b).abs() <= 1e-10 * scale.max(1e-300));
        }
    }

    #[test]
    fn radon_is_linear(beta in unit(), s in -3.0..3.0_f64, t in -3.0..3.0_f64) {
        let f = bump(0.1, [0.1, 0.0, -0.1]);
        let g = bump(0.2, [-0.1, 0.15, 0.0]);
        let values = f.values.iter().zip(&g.values).map(|(a, b)| s * a + t * b).collect();
        let h = Potential::from_samples(&f.domain, values, 8, "combo").unwrap();
        let (rf, rg, rh) = (radon_transform(&f, &beta, 24), radon_transform(&g, &beta, 24), radon_transform(&h, &beta, 24));
        for i in 0..rh.values.len() {
            let want = s * rf.values[i] + t * rg.values[i];
            prop_assert!((rh.values[i] - want).abs() <= 1e-12 * (1.0 + want.abs()));
        }
    }

    #[test]
    fn real_transform_is_hermitian(c in center(), idx in 0usize..1000) {
        let q = bump(0.1, c);
        let f = forward_ft_real(&q.values, &q.domain, 2).unwrap();
        let i = idx % f.values.len();
        let s = f.signed(i);
        if let Some(j) = f.slot([-s[0], -s[1], -s[2]]) {
            prop_assert!((f.values[i] - f.values[j].conj()).norm() <= 1e-12 * (1.0 + f.values[i].norm()));
        }
    }

    #[test]
    fn born_amplitude_is_homogeneous(beta in unit(), alpha in unit(), k in 0.5..10.0_f64, c in -4.0..4.0_f64) {
        let q = bump(0.1, [0.0; 3]);
        let a = born_amplitude(&q, &beta, &alpha, k);
        let b = born_amplitude(&q.scaled(c), &beta, &alpha, k);
        prop_assert!((b - a * c).norm() <= 1e-12 * (1.0 + b.norm()));
    }
}
