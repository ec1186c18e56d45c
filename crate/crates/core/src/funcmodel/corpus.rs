//! Built-in test functions with independently computed ground truth.

use serde::Serialize;
use serde_json::{json, Value};

use super::extrema::{brute_force_extrema, ExtremaReport};
use super::{Domain, FieldError, ScalarField};
use crate::expr::Expression;
use crate::scalar::{to_f64_vec, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Tag {
    Convex,
    Multimodal,
    EqualMinima,
    BoundaryExtremum,
    Monotone,
    Constant,
    /// Deliberately mislabeled entry that must make a mandatory check fail.
    NegativeControl,
}

/// Ground truth for a corpus entry.
#[derive(Debug, Clone, Serialize)]
pub struct Oracle<S> {
    /// Every global minimizer (ties within the equal-extrema tolerance).
    pub minimizers: Vec<Vec<S>>,
    pub min_value: S,
    /// Number of distinct interior local minima on the box.
    pub local_minima: usize,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct CorpusEntry<S> {
    pub field: ScalarField<S>,
    pub oracle: Oracle<S>,
    pub tags: Vec<Tag>,
    /// Full dense-grid census; present for 1-D and 2-D entries.
    pub extrema: Option<ExtremaReport<S>>,
}

impl<S: Scalar> CorpusEntry<S> {
    pub fn name(&self) -> &str {
        self.field.name()
    }

    pub fn has_tag(&self, tag: Tag) -> bool {
        self.tags.contains(&tag)
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }
}

const ORACLE_GRID_1D: usize = 8192;
const ORACLE_GRID_2D: usize = 400;
const TWO_PI: &str = "6.283185307179586";

struct EntryDef {
    name: &'static str,
    text: String,
    vars: &'static [&'static str],
    bounds: Vec<(f64, f64)>,
    tags: Vec<Tag>,
}

fn definitions(include_controls: bool) -> Vec<EntryDef> {
    use Tag::*;
    let one = |name, text: &str, lo, hi, tags| EntryDef {
        name,
        text: text.to_string(),
        vars: &["x"],
        bounds: vec![(lo, hi)],
        tags,
    };
    let two = |name, text: String, lo, hi, tags| EntryDef {
        name,
        text,
        vars: &["x", "y"],
        bounds: vec![(lo, hi), (lo, hi)],
        tags,
    };
    let mut out = vec![
        one("symmetric_double_well", "x^4 - x^2", -2.0, 2.0, vec![Multimodal, EqualMinima]),
        one("tilted_double_well", "x^4 - x^2 + 0.2*x", -2.0, 2.0, vec![Multimodal]),
        one("monotone_cubic", "x^3", -1.0, 1.0, vec![Monotone, BoundaryExtremum]),
        one("rippled_ramp", "x + 0.3*sin(3*x)", 0.0, 2.0, vec![Monotone, BoundaryExtremum]),
        one("descending_ramp", "-x", 0.0, 1.0, vec![Monotone, BoundaryExtremum]),
        one("rippled_cubic", "x^3 - 3*x + 0.4*sin(10*x)", -1.9, 1.9, vec![Multimodal]),
        one("constant", "1.5", -1.0, 1.0, vec![Constant]),
        two("convex_bowl", "x^2 + y^2".into(), -2.0, 2.0, vec![Convex]),
        two("coupled_bowl", "x^2 + x*y + y^2".into(), -2.0, 2.0, vec![Convex]),
        two(
            "tilted_multiwell",
            format!("x^2 + y^2 + 2 - cos({TWO_PI}*x) - cos({TWO_PI}*y) + 0.3*x + 0.2*y"),
            -5.0,
            5.0,
            vec![Multimodal],
        ),
        EntryDef {
            name: "separable_multiwell_4d",
            text: format!(
                "x1^2 + x2^2 + x3^2 + x4^2 - 0.5*(cos({TWO_PI}*x1) + cos({TWO_PI}*x2) \
                 + cos({TWO_PI}*x3) + cos({TWO_PI}*x4)) + 0.1*x1"
            ),
            vars: &["x1", "x2", "x3", "x4"],
            bounds: vec![(-3.0, 3.0); 4],
            tags: vec![Multimodal],
        },
    ];
    if include_controls {
        out.push(one(
            "mislabeled_double_well",
            "x^4 - x^2",
            -2.0,
            2.0,
            vec![BoundaryExtremum, NegativeControl],
        ));
    }
    out
}

/// Per-axis components of the separable 4-D entry: `t^2 - 0.5 cos(2 pi t) + c t`.
fn separable_axis_text(tilt: f64) -> String {
    format!("t^2 - 0.5*cos({TWO_PI}*t) + {tilt:?}*t")
}

const SEPARABLE_TILTS: [f64; 4] = [0.1, 0.0, 0.0, 0.0];

/// The default corpus (no negative controls).
pub fn corpus<S: Scalar>() -> Vec<CorpusEntry<S>> {
    corpus_with_controls(false)
}

pub fn corpus_with_controls<S: Scalar>(include_controls: bool) -> Vec<CorpusEntry<S>> {
    definitions(include_controls)
        .into_iter()
        .map(|s| build(s).expect("corpus entries are valid"))
        .collect()
}

pub fn find_entry<S: Scalar>(name: &str, include_controls: bool) -> Option<CorpusEntry<S>> {
    definitions(include_controls)
        .into_iter()
        .find(|s| s.name == name)
        .map(|s| build(s).expect("corpus entries are valid"))
}

fn build<S: Scalar>(def: EntryDef) -> Result<CorpusEntry<S>, FieldError> {
    let bounds: Vec<(S, S)> = def.bounds.iter().map(|(a, b)| (S::lit(*a), S::lit(*b))).collect();
    let expr = Expression::parse(&def.text, def.vars)?;
    let field = ScalarField::from_expression(def.name, expr, Domain::new(&bounds)?)?;
    let (oracle, extrema) = if field.dim() <= 2 {
        let grid = if field.dim() == 1 { ORACLE_GRID_1D } else { ORACLE_GRID_2D };
        let report = brute_force_extrema(&field, grid)?;
        let oracle = Oracle {
            minimizers: report.global_minima.iter().map(|e| e.point.clone()).collect(),
            min_value: report.global_min_value(),
            local_minima: report.minima.len(),
            provenance: format!(
                "dense-grid ({grid} cells per axis) with golden-section / derivative-bisection refinement"
            ),
        };
        (oracle, Some(report))
    } else {
        (separable_oracle(field.dim(), &def.bounds)?, None)
    };
    Ok(CorpusEntry {
        field,
        oracle,
        tags: def.tags,
        extrema,
    })
}

fn separable_oracle<S: Scalar>(dim: usize, bounds: &[(f64, f64)]) -> Result<Oracle<S>, FieldError> {
    let mut minimizer = Vec::with_capacity(dim);
    let mut value = S::zero();
    let mut count = 1usize;
    for (axis, tilt) in SEPARABLE_TILTS.iter().enumerate().take(dim) {
        let (a, b) = bounds[axis];
        let g = ScalarField::<S>::parse(
            "axis",
            &separable_axis_text(*tilt),
            &["t"],
            &[(S::lit(a), S::lit(b))],
        )?;
        let r = brute_force_extrema(&g, ORACLE_GRID_1D)?;
        minimizer.push(r.global_minima[0].point[0]);
        value = value + r.global_min_value();
        count *= r.minima.len();
    }
    Ok(Oracle {
        minimizers: vec![minimizer],
        min_value: value,
        local_minima: count,
        provenance: format!("dense-grid per separable axis ({ORACLE_GRID_1D} cells) with refinement"),
    })
}

/// JSON manifest of the given entries.
pub fn corpus_manifest<S: Scalar>(entries: &[CorpusEntry<S>]) -> Value {
    Value::Array(
        entries
            .iter()
            .map(|e| {
                json!({
                    "name": e.name(),
                    "dimension": e.dim(),
                    "box": e.field.domain().to_f64(),
                    "expression": e.field.expression().map(|x| x.to_string()),
                    "tags": e.tags,
                    "oracle": {
                        "minimizers": e.oracle.minimizers.iter().map(|m| to_f64_vec(m)).collect::<Vec<_>>(),
                        "min_value": e.oracle.min_value.as_f64(),
                        "local_minima": e.oracle.local_minima,
                        "provenance": e.oracle.provenance,
                    },
                })
            })
            .collect(),
    )
}
