use pqcartan::flags::{signature_of, Flag};
use pqcartan::forms::Form;
use pqcartan::numerics::{gaussian_matrix, svd, CMat, Field, C64};
use pqcartan::weyl::{ChamberA, WeylElement};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn field(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn svd_reconstructs_full_and_deficient_matrices(seed in any::<u64>(), d in 2usize..6, rank in 1usize..6, complex in any::<bool>()) {
        let rank = rank.min(d);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = field(complex);
        let a = gaussian_matrix(&mut rng, d, f);
        let b = gaussian_matrix(&mut rng, d, f);
        // a rank-`rank` product of a d x r and an r x d block
        let m = a.columns(0, rank) * b.rows(0, rank);
        let s = svd(&m);
        let sigma = CMat::from_fn(s.s.len(), s.s.len(), |i, k| if i == k { C64::new(s.s[i], 0.0) } else { C64::new(0.0, 0.0) });
        let back = &s.u * sigma * s.v.adjoint();
        prop_assert!(max_abs(&(back - &m)) <= 1e-10 * (1.0 + max_abs(&m)));
        prop_assert!(s.s.windows(2).all(|w| w[0] >= w[1]));
        let uu = s.u.adjoint() * &s.u;
        prop_assert!(max_abs(&(uu - CMat::identity(d, d))) < 1e-10);
        let tiny = s.s.iter().filter(|&&x| x < 1e-10 * s.s[0]).count();
        prop_assert_eq!(tiny, d - rank);
    }

    #[test]
    fn sampled_isometries_preserve_form(seed in any::<u64>(), p in 1usize..4, q in 1usize..3, complex in any::<bool>()) {
        let o = Form::standard(p, q, field(complex));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = o.sample_isometry(&mut rng, 1.5).to_matrix();
        let pulled = h.adjoint() * o.gram() * &h;
        prop_assert!(max_abs(&(pulled - o.gram())) < 1e-9 * max_abs(&h).powi(2));
    }

    #[test]
    fn orbit_signature_is_isometry_invariant(seed in any::<u64>(), complex in any::<bool>()) {
        let o = Form::standard(2, 2, field(complex));
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = Flag::random(&mut rng, 4, o.field());
        let h = o.sample_isometry(&mut rng, 1.0);
        if let Ok(s) = signature_of(&o, &x) {
            prop_assert_eq!(signature_of(&o, &x.apply(&h)).ok(), Some(s));
        }
    }

    #[test]
    fn weyl_group_laws(d in 2usize..6, i in any::<prop::sample::Index>(), j in any::<prop::sample::Index>()) {
        let all = WeylElement::all(d);
        let a = i.get(&all);
        let b = j.get(&all);
        prop_assert!(a.compose(&a.inverse()).is_identity());
        let x: Vec<f64> = (0..d).map(|k| k as f64 * 1.7 - 0.3).collect();
        prop_assert_eq!(a.compose(b).act(&x), a.act(&b.act(&x)));
        prop_assert_eq!(a.sign() * b.sign(), a.compose(b).sign());
    }

    #[test]
    fn chamber_place_round_trip(signs in prop::collection::vec(prop_oneof![Just(1i8), Just(-1i8)], 2..6)) {
        let c = ChamberA::from_pattern(&signs);
        let x: Vec<f64> = (0..signs.len()).map(|k| 3.0 - k as f64).collect();
        prop_assert_eq!(c.unplace(&c.place(&x)), x);
    }
}

#[test]
fn weyl_group_orders() {
    for (d, order) in [(2, 2), (3, 6), (4, 24), (5, 120)] {
        assert_eq!(WeylElement::all(d).len(), order);
    }
}
