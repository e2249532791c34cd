mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{max_abs, max_diff, Synthetic};
use spherekit::calculus::{curl_scalar, divergence, gradient, sum2, vorticity};
use spherekit::fourier::{
    analyze_1d, analyze_2d, deriv_coeffs, div_sin, mult_sin, synthesize_1d, CoeffVector,
};
use spherekit::lowrank::{ge_step, pivot_search};
use spherekit::poisson::oracle::solve_dense_oracle;
use spherekit::poisson::{residual, rhs_norm, solve, PoissonProblem};
use spherekit::sphere_domain::bmc_i_check;
use spherekit::{cart_real, construct, ConstructorConfig, SphereSource};

fn complex_vec(max_half: usize) -> impl Strategy<Value = Vec<Complex64>> {
    (1..=max_half).prop_flat_map(|h| {
        prop::collection::vec(
            (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(a, b)| Complex64::new(a, b)),
            2 * h,
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fft_round_trip(v in complex_vec(80)) {
        let back = synthesize_1d(&analyze_1d(&v).unwrap(), v.len()).unwrap();
        for (a, b) in v.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn upsampling_preserves_values(v in complex_vec(32), extra in 1usize..4) {
        // Zero-padding in coefficient space must interpolate, except for the
        // unpaired -n/2 mode which is split between -n/2 and +n/2.
        let mut c = analyze_1d(&v).unwrap();
        let n = v.len() as i64;
        c.set(-n / 2, Complex64::new(0.0, 0.0));
        let n2 = v.len() * (extra + 1);
        let fine = synthesize_1d(&c, n2).unwrap();
        let coarse = synthesize_1d(&c, v.len()).unwrap();
        for (j, x) in coarse.iter().enumerate() {
            prop_assert!((fine[j * (extra + 1)] - x).norm() < 1e-13);
        }
    }

    #[test]
    fn div_sin_inverts_mult_sin(v in complex_vec(24)) {
        let c = CoeffVector::new(v).unwrap();
        let back = div_sin(&mult_sin(&c)).unwrap().resized(c.len()).unwrap();
        for (a, b) in c.as_slice().iter().zip(back.as_slice()) {
            prop_assert!((a - b).norm() < 1e-11 * c.max_abs().max(1.0));
        }
    }

    #[test]
    fn derivative_of_mode(k in -20i64..20, x in -3.0f64..3.0) {
        let c = CoeffVector::mode(k, 64).unwrap();
        let d = deriv_coeffs(&c).eval(x);
        let want = Complex64::new(0.0, k as f64) * Complex64::from_polar(1.0, k as f64 * x);
        prop_assert!((d - want).norm() < 1e-12 * (1.0 + k.abs() as f64));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn grid_round_trip(seed in any::<u64>(), rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = Synthetic::random(&mut rng, rank, 6);
        let g = src.grid(32, 40).unwrap();
        let back = analyze_2d(&g).sample_grid(32, 40).unwrap();
        prop_assert!(max_diff(back.values(), g.values()) < 1e-13 * g.max_abs());
    }

    #[test]
    fn ge_steps_preserve_bmc(seed in any::<u64>(), rank in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = Synthetic::random(&mut rng, rank, 7);
        let mut e = src.grid(32, 32).unwrap();
        let scale = e.max_abs();
        prop_assert!(bmc_i_check(&e, 1e-14));
        let mut steps = 0;
        while let Some(p) = pivot_search(&e, 0.01).unwrap() {
            if p.sigma1() <= 1e-13 * scale || steps > 16 {
                break;
            }
            e = ge_step(&e, &p).unwrap();
            prop_assert!(e.bmc_mismatch() <= 1e-12 * scale, "step {steps}: mismatch {:e}", e.bmc_mismatch());
            steps += 1;
        }
    }

    #[test]
    fn construct_is_bmc_i_and_accurate(seed in any::<u64>(), rank in 1usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let src = Synthetic::random(&mut rng, rank, 5);
        let f = construct(&src, &ConstructorConfig::default()).unwrap();
        let g = f.sample(64, 64).unwrap();
        let exact = src.grid(64, 64).unwrap();
        prop_assert!(bmc_i_check(&g, 1e-12));
        prop_assert!(max_diff(g.values(), exact.values()) < 1e-12 * exact.max_abs());
        prop_assert!(f.rank() <= rank + 1);
    }

    #[test]
    fn sum2_is_linear(seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cfg = ConstructorConfig::default();
        let a = construct(&Synthetic::random(&mut rng, 3, 5), &cfg).unwrap();
        let b = construct(&Synthetic::random(&mut rng, 2, 5), &cfg).unwrap();
        let lhs = sum2(&a.add(&b.scaled(Complex64::new(s, 0.0))).unwrap());
        let rhs = sum2(&a) + sum2(&b) * s;
        prop_assert!((lhs - rhs).norm() < 1e-13 * (1.0 + a.vscale() + s.abs() * b.vscale()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn vector_identities(a in prop::array::uniform4(-1.5f64..1.5), b in -1.0f64..1.0) {
        let f = construct(
            &cart_real(move |x, y, z| (a[0] * x + a[1] * y + a[2] * z + a[3]).sin() * (b * x * y).exp()),
            &ConstructorConfig::default(),
        )
        .unwrap();
        let v = f.vscale();
        let grad = gradient(&f).unwrap();
        for h in [
            divergence(&curl_scalar(&f).unwrap()).unwrap(),
            grad.normal_component().unwrap(),
            vorticity(&grad).unwrap(),
        ] {
            prop_assert!(h.sample(h.m(), h.n()).unwrap().max_abs() <= 1e-10 * v);
        }
    }

    #[test]
    fn poisson_matches_oracle(seed in any::<u64>(), rank in 1usize..6, size_pow in 3u32..6) {
        let size = 2usize.pow(size_pow + 1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = construct(&Synthetic::random(&mut rng, rank, 6), &ConstructorConfig::default()).unwrap();
        let pb = PoissonProblem::from_function(&f, size, size).unwrap();
        let fast = solve(&pb).unwrap();
        let dense = solve_dense_oracle(&pb).unwrap();
        prop_assert!(max_diff(fast.coeffs(), dense.coeffs()) <= 1e-10 * max_abs(dense.coeffs()));
        let r = residual(&pb, &fast).unwrap();
        prop_assert!(r.max <= 1e-12 * rhs_norm(&pb).max(1.0));
        prop_assert!(r.constraint <= 1e-12);
    }

    #[test]
    fn poisson_is_deterministic_across_threads(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = construct(&Synthetic::random(&mut rng, 4, 6), &ConstructorConfig::default()).unwrap();
        let pb = PoissonProblem::from_function(&f, 64, 48).unwrap();
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| solve(&pb).unwrap());
        let b = four.install(|| solve(&pb).unwrap());
        prop_assert_eq!(a.coeffs(), b.coeffs());
    }
}
