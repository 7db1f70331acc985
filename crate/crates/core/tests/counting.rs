use pqcartan::cocycles::Functional;
use pqcartan::counting::{
    ball_values, count_curve, default_functional, phi_entropy, ratio_trend, Statistic,
};
use pqcartan::freegroup::{
    ball_size, sample_limit_set, RepConfig, Representation, DEFAULT_WORD_CAP,
};
use pqcartan::numerics::Element;
use pqcartan::weyl::ChamberA;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

fn single_orbit() -> Representation {
    let cfg: RepConfig = serde_json::from_value(json!({
        "field": "R", "d": 3, "p": 2, "q": 1, "recipe": "single-orbit",
        "params": { "gap": 2.0, "spread": 0.3 }, "power": 6, "seed": 2
    }))
    .unwrap();
    let b = cfg.build().unwrap();
    assert!(b.certificate.is_ok());
    b.rep
}

fn reference() -> ChamberA {
    ChamberA::from_pattern(&[1, 1, -1])
}

#[test]
fn ball_of_radius_zero_is_the_identity() {
    let rep = single_orbit();
    for stat in [Statistic::NormCartan, Statistic::NormPq] {
        let c = count_curve(
            &rep,
            &stat,
            &reference(),
            0,
            Some(vec![1e-9, 1.0]),
            2,
            DEFAULT_WORD_CAP,
        )
        .unwrap();
        assert_eq!(c.counts, vec![1, 1]);
    }
}

#[test]
fn ball_values_cover_the_ball() {
    let rep = single_orbit();
    let v = ball_values(&rep, &Statistic::NormPq, &reference(), 5, DEFAULT_WORD_CAP).unwrap();
    assert_eq!(v.values.len() as u128 + v.excluded as u128, ball_size(2, 5));
    assert!(v.values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn resource_cap_is_enforced() {
    let rep = single_orbit();
    assert!(ball_values(&rep, &Statistic::NormCartan, &reference(), 10, 1000).is_err());
}

#[test]
fn scaling_the_functional_divides_the_entropy() {
    let rep = single_orbit();
    let phi = default_functional(&rep, 5, DEFAULT_WORD_CAP).unwrap();
    let h1 = phi_entropy(&rep, &phi, 8, 200, DEFAULT_WORD_CAP).unwrap().h;
    let phi3 = Functional::new(phi.weights.iter().map(|w| 3.0 * w).collect());
    let h3 = phi_entropy(&rep, &phi3, 8, 200, DEFAULT_WORD_CAP)
        .unwrap()
        .h;
    assert!(h1 > 0.0);
    assert!((3.0 * h3 - h1).abs() <= 1e-3 * h1, "{h1} {h3}");
}

#[test]
fn pq_norms_are_conjugation_invariant() {
    let rep = single_orbit();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let h = Element::from_matrix(&rep.form().sample_isometry(&mut rng, 1.0)).unwrap();
    let conj = rep.conjugated(&h);
    let a = ball_values(&rep, &Statistic::NormPq, &reference(), 6, DEFAULT_WORD_CAP).unwrap();
    let b = ball_values(&conj, &Statistic::NormPq, &reference(), 6, DEFAULT_WORD_CAP).unwrap();
    assert_eq!(a.values.len(), b.values.len());
    let worst = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y).abs() / (1.0 + x.abs()))
        .fold(0.0, f64::max);
    assert!(worst < 1e-8, "{worst}");
}

#[test]
fn trend_report_is_finite() {
    let rep = single_orbit();
    let limit = sample_limit_set(&rep, 30, 100, 1);
    let phi = default_functional(&rep, 5, DEFAULT_WORD_CAP).unwrap();
    let tr = ratio_trend(&rep, &limit, &phi, 8, 200, DEFAULT_WORD_CAP).unwrap();
    assert!(tr.entropy.h > 0.0 && tr.slope.slope > 0.0);
    assert!(tr.ratios.iter().all(|r| r.is_finite() && *r > 0.0));
}
