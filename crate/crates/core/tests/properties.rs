use convexp::ca::{self, Embedding, EmbeddingConfig};
use convexp::export::{csv_to_field, field_to_csv};
use convexp::field::{cfld, fft, ifft};
use convexp::kernel::{
    anti_hermitian_from_real, antisymmetric_part, conj_flip, flip, is_anti_hermitian, real_from_anti_hermitian,
    symmetric_part,
};
use convexp::lift::{dense_expm, lift};
use convexp::rnn::{run, Activation, BipartiteStep, InputMode, Model, NetworkState, Record, Recurrence, StepOperator};
use convexp::spectral::{bipartite_exp, compose, conv, conv_cos, conv_exp, conv_sin, SpectralKernel};
use convexp::stencils::{random_anti_hermitian, random_real};
use convexp::{Complex64, ComplexField, GridShape, Kernel};
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = GridShape> {
    prop_oneof![
        (1usize..=36).prop_map(|n| GridShape::new(vec![n]).unwrap()),
        (1usize..=6, 1usize..=6).prop_map(|(a, b)| GridShape::new(vec![a, b]).unwrap()),
    ]
}

fn complex_kernel(s: &GridShape, seed: u64, amp: f64) -> Kernel {
    let re = random_real(s, seed, amp);
    let im = random_real(s, seed ^ 0x9E37_79B9, amp);
    re.add(&im.scale(Complex64::new(0.0, 1.0))).unwrap()
}

fn field_of(k: Kernel) -> ComplexField {
    k.into_field()
}

fn cfg() -> ProptestConfig {
    ProptestConfig::with_cases(64)
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn fft_round_trip(s in grid(), seed in any::<u64>(), amp in 0.01f64..100.0) {
        let f = field_of(complex_kernel(&s, seed, amp));
        let back = ifft(&fft(&f));
        prop_assert!(back.max_abs_diff(&f) <= 1e-12 * f.max_abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn fft_parseval(s in grid(), seed in any::<u64>()) {
        let f = field_of(complex_kernel(&s, seed, 1.0));
        let lhs = f.norm_sqr();
        let rhs = fft(&f).norm_sqr() / s.len() as f64;
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.max(1.0));
    }

    #[test]
    fn fft_linear(s in grid(), seed in any::<u64>(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        let f = field_of(complex_kernel(&s, seed, 1.0));
        let g = field_of(complex_kernel(&s, seed.wrapping_add(1), 1.0));
        let (a, b) = (Complex64::new(a, 1.0), Complex64::new(0.5, b));
        let lhs = fft(&(&f.scale(a) + &g.scale(b)));
        let rhs = &fft(&f).scale(a) + &fft(&g).scale(b);
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-12 * rhs.max_abs().max(1.0));
    }

    #[test]
    fn flips_are_involutions(s in grid(), seed in any::<u64>()) {
        let k = complex_kernel(&s, seed, 1.0);
        prop_assert_eq!(flip(&flip(&k)), k.clone());
        prop_assert!(conj_flip(&conj_flip(&k)).max_abs_diff(k.field()) <= f64::EPSILON * k.field().max_abs());
    }

    #[test]
    fn symmetric_split_sums_back(s in grid(), seed in any::<u64>()) {
        let k = complex_kernel(&s, seed, 1.0);
        let sum = symmetric_part(&k).add(&antisymmetric_part(&k)).unwrap();
        prop_assert!(sum.max_abs_diff(k.field()) <= 2.0 * f64::EPSILON * k.field().max_abs());
    }

    #[test]
    fn anti_hermitian_image_has_imaginary_spectrum(s in grid(), seed in any::<u64>(), amp in 0.1f64..10.0) {
        let u = random_real(&s, seed, amp);
        let k = anti_hermitian_from_real(&u).unwrap();
        prop_assert!(is_anti_hermitian(&k, 1e-14 * amp));
        let spec = fft(k.field());
        prop_assert!(spec.data().iter().all(|z| z.re.abs() <= 1e-12 * amp * s.len() as f64));
        let back = real_from_anti_hermitian(&k);
        prop_assert!(back.max_abs_diff(u.field()) <= 4.0 * f64::EPSILON * amp);
    }

    #[test]
    fn anti_hermitian_exp_is_spectrally_white(s in grid(), seed in any::<u64>(), t in -3.0f64..3.0) {
        let k = random_anti_hermitian(&s, seed, 1.0);
        let e = conv_exp(&k, t).unwrap();
        prop_assert!(SpectralKernel::new(&e).unit_modulus_defect() <= 1e-12);
    }

    #[test]
    fn exp_group_law(s in grid(), seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let k = complex_kernel(&s, seed, 0.5);
        let prod = compose(&conv_exp(&k, a).unwrap(), &conv_exp(&k, b).unwrap()).unwrap();
        let sum = conv_exp(&k, a + b).unwrap();
        prop_assert!(prod.max_abs_diff(sum.field()) <= 1e-11 * sum.field().max_abs().max(1.0));
        let inv = compose(&conv_exp(&k, a).unwrap(), &conv_exp(&k, -a).unwrap()).unwrap();
        prop_assert!(inv.max_abs_diff(Kernel::delta(s.clone()).field()) <= 1e-11);
    }

    #[test]
    fn exp_homomorphism(s in grid(), seed in any::<u64>()) {
        let k1 = complex_kernel(&s, seed, 0.5);
        let k2 = complex_kernel(&s, seed.wrapping_mul(3).wrapping_add(7), 0.5);
        let lhs = conv_exp(&k1.add(&k2).unwrap(), 1.0).unwrap();
        let rhs = compose(&conv_exp(&k1, 1.0).unwrap(), &conv_exp(&k2, 1.0).unwrap()).unwrap();
        prop_assert!(lhs.max_abs_diff(rhs.field()) <= 1e-11 * lhs.field().max_abs().max(1.0));
    }

    #[test]
    fn pythagorean_identity(s in grid(), seed in any::<u64>(), t in -2.0f64..2.0) {
        let k = random_real(&s, seed, 0.5);
        let c = conv_cos(&k, t).unwrap();
        let sn = conv_sin(&k, t).unwrap();
        let id = compose(&c, &c).unwrap().add(&compose(&sn, &sn).unwrap()).unwrap();
        // complex spectra make |cos| grow like cosh; rounding scales with |cos|^2
        let scale = SpectralKernel::new(&c).max_modulus().powi(2).max(1.0);
        prop_assert!(id.max_abs_diff(Kernel::delta(s.clone()).field()) <= 1e-12 * scale);
    }

    #[test]
    fn bipartite_action_preserves_norm(s in grid(), seed in any::<u64>(), t in -3.0f64..3.0) {
        let k = random_real(&s, seed, 1.0);
        let b = bipartite_exp(&k, t).unwrap();
        let x = field_of(random_real(&s, seed ^ 1, 1.0));
        let p = field_of(random_real(&s, seed ^ 2, 1.0));
        let before = (x.norm_sqr() + p.norm_sqr()).sqrt();
        let (nx, np) = b.apply(&x, &p).unwrap();
        let after = (nx.norm_sqr() + np.norm_sqr()).sqrt();
        prop_assert!((after - before).abs() <= 1e-10 * before.max(1.0));
    }

    #[test]
    fn lift_matches_convolution(s in grid(), seed in any::<u64>()) {
        let k = complex_kernel(&s, seed, 1.0);
        let f = field_of(complex_kernel(&s, seed ^ 5, 1.0));
        let m = lift(&k).unwrap();
        let via_matrix = m.matvec(f.data());
        let via_fft = conv(&k, &f).unwrap();
        let err = via_matrix.iter().zip(via_fft.data()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        prop_assert!(err <= 1e-12 * s.len() as f64);
    }

    #[test]
    fn lift_conj_flip_is_adjoint(s in grid(), seed in any::<u64>()) {
        let k = complex_kernel(&s, seed, 1.0);
        let a = lift(&conj_flip(&k)).unwrap();
        let b = lift(&k).unwrap().adjoint();
        prop_assert!(a.max_abs_diff(&b) <= 1e-14);
    }

    #[test]
    fn lift_powers_match_kernel_powers(s in grid(), seed in any::<u64>(), m in 2usize..=3) {
        let k = complex_kernel(&s, seed, 0.5);
        let l = lift(&k).unwrap();
        let mut lp = l.clone();
        let mut kp = k.clone();
        for _ in 1..m {
            lp = lp.matmul(&l);
            kp = compose(&kp, &k).unwrap();
        }
        prop_assert!(lp.max_abs_diff(&lift(&kp).unwrap()) <= 1e-11);
    }

    #[test]
    fn dense_exp_of_anti_hermitian_is_unitary(s in grid(), seed in any::<u64>(), t in 0.1f64..2.0) {
        let k = random_anti_hermitian(&s, seed, 0.5);
        let u = dense_expm(&lift(&k).unwrap(), t).unwrap();
        prop_assert!(u.unitarity_defect() <= 1e-8);
    }

    #[test]
    fn linear_unitary_recurrence_conserves_norm(s in grid(), seed in any::<u64>(), steps in 1usize..200) {
        let k = random_anti_hermitian(&s, seed, 1.0);
        let rec = Recurrence {
            model: Model::Unitary { op: StepOperator::new(&k, 1.0).unwrap(), phi: Activation::Identity },
            initial: NetworkState::unitary(field_of(complex_kernel(&s, seed ^ 3, 1.0))),
            input: InputMode::Zero,
        };
        let tr = run(&rec, steps, Record::Norm).unwrap();
        let n0 = tr.norms[0];
        prop_assert!(tr.norms.iter().all(|n| ((n - n0) / n0).abs() <= 1e-8));
    }

    #[test]
    fn linear_bipartite_recurrence_conserves_norm(s in grid(), seed in any::<u64>(), steps in 1usize..200) {
        let k = random_real(&s, seed, 1.0);
        let rec = Recurrence {
            model: Model::Bipartite {
                step: BipartiteStep::new(bipartite_exp(&k, 0.7).unwrap()).unwrap(),
                phi: Activation::Identity,
                psi: Activation::Identity,
            },
            initial: NetworkState::bipartite(
                field_of(random_real(&s, seed ^ 3, 1.0)),
                field_of(random_real(&s, seed ^ 4, 1.0)),
            ).unwrap(),
            input: InputMode::Zero,
        };
        let tr = run(&rec, steps, Record::Norm).unwrap();
        let n0 = tr.norms[0];
        prop_assert!(tr.norms.iter().all(|n| ((n - n0) / n0).abs() <= 1e-8));
    }

    #[test]
    fn unitary_step_is_inverted_by_negated_kernel(s in grid(), seed in any::<u64>()) {
        let k = random_anti_hermitian(&s, seed, 1.0);
        let z = field_of(complex_kernel(&s, seed ^ 9, 1.0));
        let fwd = StepOperator::new(&k, 1.0).unwrap().apply(&z).unwrap();
        let back = StepOperator::new(&k.scale(-1.0), 1.0).unwrap().apply(&fwd).unwrap();
        prop_assert!(back.max_abs_diff(&z) <= 1e-10);
    }

    #[test]
    fn complex_and_bipartite_recurrences_agree(s in grid(), seed in any::<u64>()) {
        let k = symmetric_part(&random_real(&s, seed, 1.0));
        let x = field_of(random_real(&s, seed ^ 11, 1.0));
        let p = field_of(random_real(&s, seed ^ 12, 1.0));
        let gap = convexp::checks::curnn_cornn_correspondence(&k, &x, &p, 0.5, 20).unwrap();
        prop_assert!(gap <= 1e-10);
    }

    #[test]
    fn cfld_round_trip_is_bitwise(s in grid(), seed in any::<u64>()) {
        let f = field_of(complex_kernel(&s, seed, 1e3));
        let mut buf = Vec::new();
        cfld::write(&mut buf, &f).unwrap();
        let back = cfld::read(&mut buf.as_slice()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn csv_round_trip_is_bitwise(n in 1usize..20, m in 1usize..6, seed in any::<u64>()) {
        let s = GridShape::new(vec![n, m]).unwrap();
        let f = field_of(complex_kernel(&s, seed, 1e-3));
        let back = csv_to_field(&field_to_csv(&f).unwrap()).unwrap();
        prop_assert_eq!(back, f);
    }

    #[test]
    fn embedded_step_rounds_to_rule110(len in 3usize..=12, bits in any::<u32>(), table in any::<bool>()) {
        let cfg = if table { EmbeddingConfig::table_map() } else { EmbeddingConfig::sigmoid() };
        let e = Embedding::new(&cfg).unwrap();
        let row: Vec<bool> = (0..len).map(|i| (bits >> i) & 1 == 1).collect();
        let out = e.step(&ca::to_real(&row));
        prop_assert!(ca::rounds_to(&out, &ca::rule110_exact(&row)));
    }

    #[test]
    fn embedded_step_is_superstable(len in 3usize..=64, seed in any::<u64>(), a in 1e-3f64..=1e-2, table in any::<bool>()) {
        use rand::{Rng, SeedableRng};
        let cfg = if table { EmbeddingConfig::table_map() } else { EmbeddingConfig::sigmoid() };
        let e = Embedding::new(&cfg).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let z = ca::random_row(len, &mut rng);
        let x: Vec<f64> = ca::to_real(&z).iter().map(|v| v + a * rng.random_range(-1.0..=1.0)).collect();
        let before = ca::distance_from_boolean(&x);
        let after = ca::distance_from_boolean(&e.step(&x));
        prop_assert!(after * 10.0 <= before);
    }
}

fn truth_table(l: bool, c: bool, r: bool) -> bool {
    !matches!(
        (l, c, r),
        (true, true, true) | (true, false, false) | (false, false, false)
    )
}

#[test]
fn rule110_matches_hand_table_from_single_seed() {
    let mut a = ca::single_seed(31);
    let mut b = a.clone();
    for _ in 0..2 {
        a = ca::rule110_exact(&a);
        let n = b.len();
        b = (0..n)
            .map(|i| truth_table(b[(i + n - 1) % n], b[i], b[(i + 1) % n]))
            .collect();
    }
    assert_eq!(a, b);
}
