//! WebAssembly bindings for the demo page.  Every entry point takes and
//! returns JSON text; failures come back as `{"error": "..."}`.

use pqcartan::counting::{
    chamber_of_signature, count_curve, default_window, estimate_exponent, Statistic,
};
use pqcartan::flags::{o_generic, Flag};
use pqcartan::forms::Form;
use pqcartan::freegroup::{anosov_gap_check, sample_limit_set, RepConfig};
use pqcartan::jsonmat::{self, Scalar};
use pqcartan::numerics::{Element, Field, ScaledMatrix};
use pqcartan::pq_cartan::{pq_project, PqError};
use pqcartan::weyl::ChamberA;
use serde::Deserialize;
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Words visited by one demo call at most.
const DEMO_WORD_CAP: u64 = 200_000;

#[derive(Deserialize)]
struct MatrixInput {
    p: usize,
    q: usize,
    #[serde(default)]
    complex: bool,
    rows: Vec<Vec<Scalar>>,
}

fn field(complex: bool) -> Field {
    if complex {
        Field::Complex
    } else {
        Field::Real
    }
}

fn form_for(p: usize, q: usize, n: usize, f: Field) -> Result<Form, String> {
    if p == 0 || q == 0 || p + q != n || n > 6 {
        return Err(format!(
            "signature ({p}, {q}) does not fit a {n}x{n} matrix (at most 6)"
        ));
    }
    Ok(Form::standard(p, q, f))
}

fn reply(r: Result<Value, String>) -> String {
    match r {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn project_inner(input: &str) -> Result<Value, String> {
    let m: MatrixInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let f = field(m.complex);
    let mat = jsonmat::from_rows(&m.rows, f).map_err(|e| e.to_string())?;
    let o = form_for(m.p, m.q, mat.nrows(), f)?;
    if mat.nrows() != mat.ncols() {
        return Err("matrix is not square".into());
    }
    let g = ScaledMatrix::new(mat, f)
        .and_then(|g| Element::from_matrix(&g))
        .map_err(|e| e.to_string())?;
    let (r, near) = match pq_project(&o, &g) {
        Ok(r) => (r, false),
        Err(PqError::NearDegenerate(r)) => (*r, true),
        Err(e) => return Err(e.to_string()),
    };
    Ok(json!({
        "b_o": r.b_o.coords,
        "distance": r.distance(),
        "w_g": r.w_g.one_based(),
        "eigen_signs": r.eigen_signs,
        "isotropy_margin": r.margins.isotropy,
        "near_degenerate": near,
    }))
}

/// `(p,q)`-Cartan projection of a square matrix:
/// `{"p":2,"q":1,"rows":[[..],..]}`.
#[wasm_bindgen]
pub fn project(input: &str) -> String {
    reply(project_inner(input))
}

fn flag_signature_inner(input: &str) -> Result<Value, String> {
    // the rows of the input are the basis vectors of the flag
    let m: MatrixInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    let f = field(m.complex);
    let cols = jsonmat::from_rows(&m.rows, f)
        .map_err(|e| e.to_string())?
        .transpose();
    let o = form_for(m.p, m.q, cols.nrows(), f)?;
    let x = Flag::new(&cols).map_err(|e| e.to_string())?;
    let g = o_generic(&o, &x);
    Ok(json!({
        "generic": g.signature.is_some(),
        "margin": g.margin,
        "pattern": g.signature.as_ref().map(|s| s.pattern()),
        "prefix_signatures": g.signature.as_ref().map(|s| s.prefix_signatures.clone()),
    }))
}

/// Orbit signature of a flag given by `rows` (basis vectors, first vector
/// spans the line).
#[wasm_bindgen]
pub fn flag_signature(input: &str) -> String {
    reply(flag_signature_inner(input))
}

#[derive(Deserialize)]
struct ExplorerInput {
    rep: RepConfig,
    #[serde(default = "default_len")]
    len: usize,
}

fn default_len() -> usize {
    6
}

fn explore_inner(input: &str) -> Result<Value, String> {
    let e: ExplorerInput = serde_json::from_str(input).map_err(|e| e.to_string())?;
    if e.len > 8 {
        return Err("word length is limited to 8 in the browser".into());
    }
    let built = e.rep.build().map_err(|e| e.to_string())?;
    let rep = built.rep;
    let certified = built
        .certificate
        .as_ref()
        .map(|_| ())
        .map_err(|r| r.to_string());
    let gap = anosov_gap_check(&rep, e.len, DEMO_WORD_CAP).map_err(|e| e.to_string())?;
    let limit = sample_limit_set(&rep, 20, 60, e.rep.seed);
    let reference = match limit.dominant() {
        Some(s) => chamber_of_signature(&s),
        None => {
            let (p, q) = rep.form().signature();
            let pattern: Vec<i8> = std::iter::repeat_n(1, p)
                .chain(std::iter::repeat_n(-1, q))
                .collect();
            ChamberA::from_pattern(&pattern)
        }
    };
    let mut curves = Vec::new();
    if certified.is_ok() {
        for stat in [Statistic::NormCartan, Statistic::NormPq] {
            let c = count_curve(&rep, &stat, &reference, e.len, None, 60, DEMO_WORD_CAP)
                .map_err(|e| e.to_string())?;
            let slope = estimate_exponent(&c, default_window(&c))
                .ok()
                .map(|f| f.slope);
            curves.push(json!({ "label": c.label, "thresholds": c.thresholds, "counts": c.counts, "slope": slope }));
        }
    }
    Ok(json!({
        "certified": certified.is_ok(),
        "rejection": certified.err(),
        "gap_slope": gap.c,
        "gap_pass": gap.pass,
        "limit_signatures": limit.signatures,
        "curves": curves,
    }))
}

/// Builds a representation from a config (`{"rep": {...}, "len": 6}`),
/// reports certification, the gap slope, signatures of sampled limit points
/// and the two counting curves.
#[wasm_bindgen]
pub fn explore(input: &str) -> String {
    reply(explore_inner(input))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: String) -> Value {
        serde_json::from_str(&s).unwrap()
    }

    #[test]
    fn projects_a_diagonal_matrix() {
        let v = parse(project(
            r#"{"p":2,"q":1,"rows":[[7.38905609893065,0,0],[0,1,0],[0,0,0.1353352832366127]]}"#,
        ));
        let b: Vec<f64> = serde_json::from_value(v["b_o"].clone()).unwrap();
        assert!(
            (b[0] - 2.0).abs() < 1e-12 && b[1].abs() < 1e-12 && (b[2] + 2.0).abs() < 1e-12,
            "{v}"
        );
    }

    #[test]
    fn bad_input_is_an_error_object() {
        assert!(parse(project("[1,2")).get("error").is_some());
        assert!(
            parse(project(r#"{"p":1,"q":1,"rows":[[1,0,0],[0,1,0],[0,0,1]]}"#))
                .get("error")
                .is_some()
        );
    }

    #[test]
    fn standard_flag_signature() {
        let v = parse(flag_signature(
            r#"{"p":2,"q":1,"rows":[[1,0,0],[0,1,0],[0,0,1]]}"#,
        ));
        assert_eq!(v["pattern"], "++-");
    }

    #[test]
    fn explorer_on_a_reducible_example() {
        let v = parse(explore(
            r#"{"rep":{"field":"R","d":3,"p":2,"q":1,"recipe":"reducible","params":{"translation":3.0,"angles":[0.0,1.2]},"power":6},"len":4}"#,
        ));
        assert_eq!(v["certified"], true, "{v}");
        assert_eq!(v["curves"].as_array().unwrap().len(), 2);
    }
}
