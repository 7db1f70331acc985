use std::collections::BTreeSet;

use pqcartan::forms::Form;
use pqcartan::freegroup::{
    anosov_gap_check, build_schottky, certify, conjugacy_reps, sphere_size, sphere_words,
    RepConfig, Representation, SchottkyError, DEFAULT_WORD_CAP,
};
use pqcartan::numerics::{CMat, Field, ScaledMatrix, C64};
use serde_json::json;

fn diag(x: [f64; 3]) -> ScaledMatrix {
    ScaledMatrix::new(
        CMat::from_fn(3, 3, |i, k| {
            if i == k {
                C64::new(x[i].exp(), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        }),
        Field::Real,
    )
    .unwrap()
}

fn built(recipe: &str, params: serde_json::Value, power: u32) -> (Representation, bool) {
    let cfg: RepConfig = serde_json::from_value(json!({
        "field": "R", "d": 3, "p": 2, "q": 1, "recipe": recipe, "params": params, "power": power, "seed": 2
    }))
    .unwrap();
    let b = cfg.build().unwrap();
    (b.rep, b.certificate.is_ok())
}

#[test]
fn sphere_enumeration_matches_formula() {
    for k in 1..4 {
        for len in 0..6 {
            let words = sphere_words(k, len, DEFAULT_WORD_CAP).unwrap();
            assert_eq!(words.len() as u128, sphere_size(k, len));
            let distinct: BTreeSet<_> = words.iter().map(|w| w.letters().to_vec()).collect();
            assert_eq!(distinct.len(), words.len());
            assert!(words.iter().all(|w| w.len() == len));
        }
    }
}

#[test]
fn conjugacy_classes_match_brute_force() {
    let k = 2;
    let reps = conjugacy_reps(k, 7, DEFAULT_WORD_CAP).unwrap();
    for len in 1..=7 {
        let brute: BTreeSet<Vec<u8>> = sphere_words(k, len, DEFAULT_WORD_CAP)
            .unwrap()
            .into_iter()
            .filter(|w| w.is_cyclically_reduced())
            .map(|w| w.min_rotation().letters().to_vec())
            .collect();
        let ours: BTreeSet<Vec<u8>> = reps
            .iter()
            .filter(|w| w.len() == len)
            .map(|w| w.letters().to_vec())
            .collect();
        assert_eq!(ours, brute, "length {len}");
    }
}

#[test]
fn tiny_cap_is_refused() {
    assert!(sphere_words(2, 10, 100).is_err());
    assert!(conjugacy_reps(2, 10, 100).is_err());
}

#[test]
fn doubling_the_power_doubles_the_gap_slope() {
    let params = json!({ "gap": 2.0, "spread": 0.3 });
    let (r1, ok1) = built("single-orbit", params.clone(), 6);
    let (r2, ok2) = built("single-orbit", params, 12);
    assert!(ok1 && ok2);
    let c1 = anosov_gap_check(&r1, 8, DEFAULT_WORD_CAP).unwrap().c;
    let c2 = anosov_gap_check(&r2, 8, DEFAULT_WORD_CAP).unwrap().c;
    assert!(c1 > 0.0);
    let ratio = c2 / c1;
    assert!((1.8..2.2).contains(&ratio), "ratio {ratio}");
}

#[test]
fn rotation_control_fails_both_checks() {
    let (rep, ok) = built("rotation-control", json!({ "angles": [0.7, 1.1] }), 1);
    assert!(!ok);
    let g = anosov_gap_check(&rep, 8, DEFAULT_WORD_CAP).unwrap();
    assert!(g.c <= 0.0 && !g.pass);
}

#[test]
fn generators_sharing_a_fixed_flag_are_rejected() {
    let o = Form::standard(2, 1, Field::Real);
    let r = build_schottky(&[diag([6.0, 0.0, -6.0]), diag([4.0, 0.5, -4.5])], o, 1);
    assert!(matches!(r, Err(SchottkyError::Rejected(_))));
}

#[test]
fn single_loxodromic_generator_is_certified() {
    let o = Form::standard(2, 1, Field::Real);
    let (rep, cert) = build_schottky(&[diag([6.0, 0.0, -6.0])], o, 1).unwrap();
    assert_eq!(rep.rank(), 1);
    assert!(cert.eps > 0.0);
    assert!(certify(&rep).is_ok());
}

#[test]
fn reference_recipes_certify() {
    for (recipe, params) in [
        ("single-orbit", json!({ "gap": 2.0, "spread": 0.3 })),
        ("two-orbit", json!({ "gap": 2.0, "spread": 0.3 })),
        (
            "reducible",
            json!({ "translation": 3.0, "angles": [0.0, 1.2] }),
        ),
    ] {
        let (rep, ok) = built(recipe, params, 6);
        assert!(ok, "{recipe}");
        assert!(
            anosov_gap_check(&rep, 8, DEFAULT_WORD_CAP).unwrap().pass,
            "{recipe}"
        );
    }
}
