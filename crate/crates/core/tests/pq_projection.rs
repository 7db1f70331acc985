use pqcartan::forms::Form;
use pqcartan::numerics::{CMat, Element, Field, ScaledMatrix, C64};
use pqcartan::pq_cartan::{membership, pq_project, PqCartanResult, PqError};
use pqcartan::weyl::{in_b_plus, WeylElement};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn forms() -> Vec<Form> {
    vec![
        Form::standard(2, 1, Field::Real),
        Form::standard(2, 1, Field::Complex),
        Form::standard(2, 2, Field::Real),
        Form::standard(3, 2, Field::Complex),
    ]
}

fn project(o: &Form, g: &Element) -> Option<PqCartanResult> {
    match pq_project(o, g) {
        Ok(r) => Some(r),
        Err(PqError::NearDegenerate(r)) => Some(*r),
        Err(_) => None,
    }
}

/// Isometry `exp(Y)` with `|Y|_F <= 2`.
fn isometry(rng: &mut ChaCha8Rng, o: &Form) -> ScaledMatrix {
    let y = o.sample_algebra(rng, 1.0);
    let y = y.clone() * C64::new(rng.random_range(0.0..2.0) / y.norm(), 0.0);
    let h = y.exp();
    let h = if o.field() == Field::Real {
        h.map(|z| C64::new(z.re, 0.0))
    } else {
        h
    };
    ScaledMatrix::new(h, o.field()).unwrap()
}

/// `h w exp(x) h'` with `x` sorted inside the two sign blocks.
fn sample(rng: &mut ChaCha8Rng, o: &Form) -> (Element, Vec<f64>) {
    let d = o.dim();
    let p = o.p();
    let mut x: Vec<f64> = (0..d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let mean = x.iter().sum::<f64>() / d as f64;
    x.iter_mut().for_each(|v| *v -= mean);
    x[..p].sort_by(|a, b| b.total_cmp(a));
    x[p..].sort_by(|a, b| b.total_cmp(a));
    let ws = WeylElement::all(d);
    let w = ScaledMatrix::new(ws[rng.random_range(0..ws.len())].lift(), o.field()).unwrap();
    let e = ScaledMatrix::new(
        CMat::from_fn(d, d, |i, k| {
            if i == k {
                C64::new(x[i].exp(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        o.field(),
    )
    .unwrap();
    let h = isometry(rng, o);
    let h2 = isometry(rng, o);
    let g = h
        .multiply(&w)
        .unwrap()
        .multiply(&e)
        .unwrap()
        .multiply(&h2)
        .unwrap();
    (Element::from_matrix(&g).unwrap(), x)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn recovers_constructed_projection(seed in any::<u64>(), k in 0usize..4) {
        let o = &forms()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, x) = sample(&mut rng, o);
        prop_assert!(membership(o, &g).is_ok() || matches!(membership(o, &g), Err(PqError::NearDegenerate(_))));
        let r = project(o, &g).expect("constructed elements are members");
        prop_assert!(in_b_plus(o.p(), &r.b_o.coords, 1e-9));
        prop_assert!(close(&r.b_o.coords, &x, 1e-8), "{:?} vs {:?}", r.b_o.coords, x);
    }

    #[test]
    fn bi_invariant_under_isometries(seed in any::<u64>(), k in 0usize..4) {
        let o = &forms()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = sample(&mut rng, o);
        let h = Element::from_matrix(&isometry(&mut rng, o)).unwrap();
        let h2 = Element::from_matrix(&isometry(&mut rng, o)).unwrap();
        let a = project(o, &g).unwrap();
        let b = project(o, &(&(&h * &g) * &h2)).unwrap();
        prop_assert!(close(&a.b_o.coords, &b.b_o.coords, 1e-8));
    }

    #[test]
    fn inverse_negates_the_coordinates(seed in any::<u64>(), k in 0usize..4) {
        // star(g^-1) g^-1 is conjugate to (star(g) g)^-1
        let o = &forms()[k];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, _) = sample(&mut rng, o);
        let mut a: Vec<f64> = project(o, &g).unwrap().b_o.coords.iter().map(|v| -v).collect();
        let mut b = project(o, &g.inverse()).unwrap().b_o.coords;
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        prop_assert!(close(&a, &b, 1e-8));
    }
}

#[test]
fn isometries_project_to_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for o in forms() {
        for _ in 0..20 {
            let h = Element::from_matrix(&isometry(&mut rng, &o)).unwrap();
            let r = project(&o, &h).unwrap();
            assert!(r.distance() < 1e-8, "{:?}", r.b_o.coords);
        }
    }
}

#[test]
fn sign_mixing_rotations_are_rejected() {
    let o = Form::standard(2, 1, Field::Real);
    for i in 1..40 {
        let t = 0.05 + 1.5 * i as f64 / 40.0;
        let k = CMat::from_row_slice(
            3,
            3,
            &[t.cos(), 0.0, t.sin(), 0.0, 1.0, 0.0, -t.sin(), 0.0, t.cos()]
                .map(|v| C64::new(v, 0.0)),
        );
        let g = Element::from_complex(k, Field::Real).unwrap();
        assert!(
            matches!(membership(&o, &g), Err(PqError::NotInBoG(_))),
            "angle {t}"
        );
    }
}
