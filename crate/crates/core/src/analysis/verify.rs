//! Theorem-verification suite: a fixed registry of numerical checks run
//! over corpus entries. Failing checks are data, never aborts.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{
    containment_of, extreme_point_census, geometric_scales, is_non_increasing, scan_sweep, scan_zeros,
    AnalysisError, ZeroCrossingReport, DEFAULT_CENSUS_GRID, DEFAULT_SCAN_GRID,
};
use crate::funcmodel::{brute_force_extrema, CorpusEntry, Domain, ScalarField, Tag};
use crate::homog::{HomogenizationOperator, QuadraturePolicy, DEFAULT_ADAPTIVE_TOLERANCE};
use crate::scalar::{distance, to_f64_vec, Scalar};
use crate::scale::{find_h0, heuristic_h0, H0Finding};
use crate::solver::{line_decomposition_solve, plain_descent, DescentParams, LineParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckId {
    /// Two-point average gradient equals the box average of `f'`.
    DifferenceQuotientIdentity,
    /// Single-signed `T` at every scale goes with a monotone `f`.
    MonotoneSign,
    /// Two unequal minima: one zero survives at the critical scale.
    SingleZeroAtScale,
    /// As above with the deeper minimum on the other side.
    OrderSwap,
    /// As above with the minimum values exchanged.
    ValueSwap,
    /// Equal minima: the predicted two zeros (informational).
    EqualMinimaCount,
    /// As above for two maxima.
    TwoMaxima,
    /// As above on a sub-interval of the box.
    Subinterval,
    /// No zero near a non-global extremum at the critical scale.
    SignPersistence,
    /// The surviving zero sits between the flanks of the global minimizer.
    ZeroBetweenFlanks,
    /// Boundary global extremum: `T` never changes sign.
    BoundaryExtremumSign,
    /// The global minimizer lies within `h0 / 2` of a zero.
    Containment,
    /// Zero count never increases with `h`.
    ZeroCountDecay,
    /// Terminal zero count is 2, 1, 0 or identically zero as classified.
    TerminalCountClass,
    /// `m` equal maxima and `n` equal minima give `m + n` zeros (informational).
    EqualExtremaCount,
    /// Finite differences of `F` match the average gradient field.
    PotentialField,
    /// Cross derivatives of the average gradient field agree.
    PotentialFieldSymmetry,
    /// Number of extreme points of `F` never increases with `h`.
    ExtremePointCensus,
    /// Line decomposition reaches the global minimizer.
    LineSolvability,
    /// Descent on `F(h0, .)` is start-independent and its cube holds the
    /// global minimizer.
    HomogenizedSolvable,
    /// Monte Carlo cube average within three standard errors.
    MonteCarloBoxAverage,
}

impl CheckId {
    pub const ALL: [CheckId; 21] = [
        CheckId::DifferenceQuotientIdentity,
        CheckId::MonotoneSign,
        CheckId::SingleZeroAtScale,
        CheckId::OrderSwap,
        CheckId::ValueSwap,
        CheckId::EqualMinimaCount,
        CheckId::TwoMaxima,
        CheckId::Subinterval,
        CheckId::SignPersistence,
        CheckId::ZeroBetweenFlanks,
        CheckId::BoundaryExtremumSign,
        CheckId::Containment,
        CheckId::ZeroCountDecay,
        CheckId::TerminalCountClass,
        CheckId::EqualExtremaCount,
        CheckId::PotentialField,
        CheckId::PotentialFieldSymmetry,
        CheckId::ExtremePointCensus,
        CheckId::LineSolvability,
        CheckId::HomogenizedSolvable,
        CheckId::MonteCarloBoxAverage,
    ];

    pub fn id(self) -> &'static str {
        match self {
            CheckId::DifferenceQuotientIdentity => "difference-quotient-identity",
            CheckId::MonotoneSign => "monotone-sign",
            CheckId::SingleZeroAtScale => "single-zero-at-scale",
            CheckId::OrderSwap => "order-swap",
            CheckId::ValueSwap => "value-swap",
            CheckId::EqualMinimaCount => "equal-minima-count",
            CheckId::TwoMaxima => "two-maxima",
            CheckId::Subinterval => "subinterval",
            CheckId::SignPersistence => "sign-persistence",
            CheckId::ZeroBetweenFlanks => "zero-between-flanks",
            CheckId::BoundaryExtremumSign => "boundary-extremum-sign",
            CheckId::Containment => "containment",
            CheckId::ZeroCountDecay => "zero-count-decay",
            CheckId::TerminalCountClass => "terminal-count-class",
            CheckId::EqualExtremaCount => "equal-extrema-count",
            CheckId::PotentialField => "potential-field",
            CheckId::PotentialFieldSymmetry => "potential-field-symmetry",
            CheckId::ExtremePointCensus => "extreme-point-census",
            CheckId::LineSolvability => "line-solvability",
            CheckId::HomogenizedSolvable => "homogenized-solvable",
            CheckId::MonteCarloBoxAverage => "monte-carlo-box-average",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Informational check whose literal claim held.
    Informational,
    /// Informational check whose literal claim did not hold.
    Discrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub check: CheckId,
    pub entry: String,
    pub h_values: Vec<f64>,
    pub observed: BTreeMap<String, Value>,
    /// Whether the claim held as stated.
    pub passed: bool,
    /// Mandatory checks decide the exit status of a verification run.
    pub mandatory: bool,
    pub status: CheckStatus,
    pub notes: String,
}

impl CheckRecord {
    fn new(check: CheckId, entry: &str, mandatory: bool) -> Self {
        CheckRecord {
            check,
            entry: entry.to_string(),
            h_values: Vec::new(),
            observed: BTreeMap::new(),
            passed: false,
            mandatory,
            status: CheckStatus::Fail,
            notes: String::new(),
        }
    }

    fn observe(mut self, key: &str, value: impl Serialize) -> Self {
        self.observed
            .insert(key.to_string(), serde_json::to_value(value).expect("serializable observation"));
        self
    }

    fn scales<S: Scalar>(mut self, h: &[S]) -> Self {
        self.h_values = to_f64_vec(h);
        self
    }

    fn note(mut self, text: impl Into<String>) -> Self {
        self.notes = text.into();
        self
    }

    fn verdict(mut self, passed: bool) -> Self {
        self.passed = passed;
        self.status = match (self.mandatory, passed) {
            (true, true) => CheckStatus::Pass,
            (true, false) => CheckStatus::Fail,
            (false, true) => CheckStatus::Informational,
            (false, false) => CheckStatus::Discrepancy,
        };
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TheoremReport {
    /// Sorted by entry, check id and scales.
    pub records: Vec<CheckRecord>,
}

impl TheoremReport {
    pub fn mandatory_failures(&self) -> Vec<&CheckRecord> {
        self.records.iter().filter(|r| r.mandatory && !r.passed).collect()
    }

    pub fn discrepancies(&self) -> Vec<&CheckRecord> {
        self.records.iter().filter(|r| r.status == CheckStatus::Discrepancy).collect()
    }

    pub fn find(&self, check: CheckId, entry: &str) -> Option<&CheckRecord> {
        self.records.iter().find(|r| r.check == check && r.entry == entry)
    }

    pub fn to_json(&self) -> Value {
        let count = |s: CheckStatus| self.records.iter().filter(|r| r.status == s).count();
        json!({
            "records": self.records,
            "summary": {
                "total": self.records.len(),
                "pass": count(CheckStatus::Pass),
                "fail": count(CheckStatus::Fail),
                "informational": count(CheckStatus::Informational),
                "discrepancy": count(CheckStatus::Discrepancy),
            },
        })
    }

    pub const CSV_HEADER: [&'static str; 8] =
        ["check", "entry", "h_values", "passed", "mandatory", "status", "observed", "notes"];

    /// Flat rows: scales joined by `;`, observations as compact JSON.
    pub fn csv_rows(&self) -> Vec<[String; 8]> {
        self.records
            .iter()
            .map(|r| {
                [
                    r.check.id().to_string(),
                    r.entry.clone(),
                    r.h_values.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(";"),
                    r.passed.to_string(),
                    r.mandatory.to_string(),
                    serde_json::to_value(r.status).expect("status").as_str().expect("string").to_string(),
                    serde_json::to_string(&r.observed).expect("observations"),
                    r.notes.clone(),
                ]
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    /// Scan grid for zero counting.
    pub grid: usize,
    /// Points of the default geometric scale grid.
    pub h_points: usize,
    /// Default scale grid runs from `h_min_fraction` to `h_max_fraction` of
    /// the box edge.
    pub h_min_fraction: f64,
    pub h_max_fraction: f64,
    /// Per-entry scale grids overriding the default.
    pub h_grids: BTreeMap<String, Vec<f64>>,
    pub census_grid: usize,
    pub census_points: usize,
    /// Random `(h, x)` pairs per 1-D entry for the identity check.
    pub identity_samples: usize,
    pub potential_points: usize,
    pub monte_carlo_samples: usize,
    pub solver_starts: usize,
    /// Containment slack as a fraction of `h0 / 2`; covers the relative
    /// tolerance of the `h0` search.
    pub containment_slack: f64,
    pub policy: QuadraturePolicy,
    pub seed: u64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            grid: DEFAULT_SCAN_GRID,
            h_points: 16,
            h_min_fraction: 0.02,
            h_max_fraction: 0.5,
            h_grids: BTreeMap::new(),
            census_grid: DEFAULT_CENSUS_GRID,
            census_points: 8,
            identity_samples: 15,
            potential_points: 50,
            monte_carlo_samples: 100_000,
            solver_starts: 5,
            containment_slack: 1e-3,
            policy: QuadraturePolicy::default(),
            seed: 0,
        }
    }
}

impl VerifyConfig {
    /// The scale grid for an entry: the override if configured, otherwise
    /// geometric over the configured fractions of the shortest edge.
    pub fn scales_for<S: Scalar>(&self, name: &str, domain: &Domain<S>) -> Vec<S> {
        match self.h_grids.get(name) {
            Some(h) => h.iter().map(|v| S::lit(*v)).collect(),
            None => {
                let l = domain.shortest_edge();
                geometric_scales(
                    l * S::lit(self.h_min_fraction),
                    l * S::lit(self.h_max_fraction),
                    self.h_points,
                )
            }
        }
    }
}

/// Runs every applicable check on every entry. Entries are processed in
/// parallel; the report is sorted and independent of worker count.
pub fn verify_theorems<S: Scalar>(
    entries: &[CorpusEntry<S>],
    config: &VerifyConfig,
) -> Result<TheoremReport, AnalysisError> {
    for name in config.h_grids.keys() {
        if !entries.iter().any(|e| e.name() == name) {
            return Err(AnalysisError::UnknownEntry(name.clone()));
        }
    }
    let per_entry: Vec<Vec<CheckRecord>> = entries
        .par_iter()
        .map(|e| entry_checks(e, config))
        .collect::<Result<_, _>>()?;
    let mut records: Vec<CheckRecord> = per_entry.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        (a.entry.as_str(), a.check.id())
            .cmp(&(b.entry.as_str(), b.check.id()))
            .then_with(|| a.h_values.partial_cmp(&b.h_values).expect("finite scales"))
    });
    Ok(TheoremReport { records })
}

fn entry_seed(seed: u64, name: &str) -> u64 {
    // FNV-1a
    name.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64 ^ seed, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn entry_checks<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>, AnalysisError> {
    match e.dim() {
        1 => one_dimensional(e, cfg),
        2 => two_dimensional(e, cfg),
        _ => higher_dimensional(e, cfg),
    }
}

fn uniform<S: Scalar>(rng: &mut ChaCha8Rng, lo: S, hi: S) -> S {
    let u: f64 = rng.gen();
    lo + (hi - lo) * S::lit(u)
}

fn counts<S: Scalar>(sweep: &[ZeroCrossingReport<S>]) -> Vec<usize> {
    sweep.iter().map(|r| r.count).collect()
}

fn one_dimensional<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>, AnalysisError> {
    let f = &e.field;
    let name = e.name();
    let extrema = e.extrema.as_ref().expect("1-D entries carry a census");
    let hs = cfg.scales_for(name, f.domain());
    let sweep = scan_sweep(f, cfg.policy, &hs, cfg.grid)?;
    let curve = counts(&sweep);
    let terminal = *curve.last().expect("non-empty scale grid");
    let mut out = vec![identity_check(e, cfg)?];

    out.push(
        CheckRecord::new(CheckId::ZeroCountDecay, name, true)
            .scales(&hs)
            .observe("counts", &curve)
            .verdict(is_non_increasing(&curve)),
    );

    let constant = e.has_tag(Tag::Constant);
    if !e.has_tag(Tag::EqualMinima) {
        let identically_zero = sweep.iter().all(|r| r.identically_zero());
        let (expected, passed) = if constant {
            ("identically-zero".to_string(), identically_zero)
        } else {
            let class = extrema.global_min_interior() as usize + extrema.global_max_interior() as usize;
            (class.to_string(), !identically_zero && terminal == class)
        };
        out.push(
            CheckRecord::new(CheckId::TerminalCountClass, name, true)
                .scales(&hs[hs.len() - 1..])
                .observe("expected", expected)
                .observe("terminal_count", terminal)
                .observe("identically_zero", identically_zero)
                .observe("global_min_interior", extrema.global_min_interior())
                .observe("global_max_interior", extrema.global_max_interior())
                .verdict(passed),
        );
    }

    if e.has_tag(Tag::Monotone) {
        out.push(monotone_check(e, &hs, &sweep));
    }

    if e.has_tag(Tag::BoundaryExtremum) {
        let alternations: Vec<usize> = curve.clone();
        out.push(
            CheckRecord::new(CheckId::BoundaryExtremumSign, name, true)
                .scales(&hs)
                .observe("alternations", &alternations)
                .observe("profiles", sweep.iter().map(|r| r.profile_string()).collect::<Vec<_>>())
                .verdict(alternations.iter().all(|&a| a == 0)),
        );
    }

    if e.has_tag(Tag::Multimodal) && terminal > 0 {
        let bounds = (hs[0], hs[hs.len() - 1]);
        let finding = find_h0(f, cfg.policy, terminal, bounds, cfg.grid).map_err(|e| match e {
            crate::scale::ScaleError::Analysis(a) => a,
            other => AnalysisError::Scale(Box::new(other)),
        })?;
        let report = scan_zeros(f, &HomogenizationOperator::new(finding.h0, cfg.policy)?, cfg.grid)?;
        let slack = S::lit(cfg.containment_slack) * finding.h0 / S::lit(2.0);
        let c = containment_of(&report, &e.oracle.minimizers, slack)?;
        out.push(
            CheckRecord::new(CheckId::Containment, name, true)
                .scales(&[finding.h0])
                .observe("h0_method", finding.method)
                .observe("target_count", terminal)
                .observe("zeros", to_f64_vec(&report.zero_points()))
                .observe("minimizers", e.oracle.minimizers.iter().map(|m| to_f64_vec(m)).collect::<Vec<_>>())
                .observe("margin", c.margin.as_f64())
                .observe("slack", c.slack.as_f64())
                .verdict(c.passed),
        );
    }

    if e.has_tag(Tag::EqualMinima) {
        out.extend(equal_extrema_checks(e, &hs, &sweep));
    }

    let two_unequal_minima = extrema.minima.len() == 2 && !extrema.equal_minima && e.has_tag(Tag::Multimodal);
    if two_unequal_minima {
        out.extend(two_minima_checks(e, cfg)?);
    }
    Ok(out)
}

fn identity_check<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<CheckRecord, AnalysisError> {
    let f = &e.field;
    let l = f.domain().edge(0);
    let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(cfg.seed, e.name()));
    let policy = QuadraturePolicy::Adaptive {
        tolerance: DEFAULT_ADAPTIVE_TOLERANCE,
    };
    let mut worst = (S::zero(), S::zero(), S::zero(), S::zero());
    let mut passed = true;
    let mut hs = Vec::new();
    for _ in 0..cfg.identity_samples {
        let h = uniform(&mut rng, l * S::lit(0.02), l * S::lit(0.5));
        let op = HomogenizationOperator::new(h, policy)?;
        let (a, b) = op.inset_domain(f)?.bounds(0);
        let x = uniform(&mut rng, a, b);
        let k = op.kernel_convolution_check(f, x)?;
        let diff = (k.difference_quotient - k.derivative_average).abs();
        let allowed = k.error.max(S::lit(1e-9));
        passed &= diff <= allowed;
        if diff > worst.0 {
            worst = (diff, allowed, h, x);
        }
        hs.push(h);
    }
    hs.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    Ok(CheckRecord::new(CheckId::DifferenceQuotientIdentity, e.name(), true)
        .scales(&hs)
        .observe("samples", cfg.identity_samples)
        .observe("max_difference", worst.0.as_f64())
        .observe("allowed_at_max", worst.1.as_f64())
        .observe("worst_point", [worst.2.as_f64(), worst.3.as_f64()])
        .verdict(passed))
}

fn monotone_check<S: Scalar>(e: &CorpusEntry<S>, hs: &[S], sweep: &[ZeroCrossingReport<S>]) -> CheckRecord {
    use super::Sign;
    let strict_sign = |r: &ZeroCrossingReport<S>| match r.profile.as_slice() {
        [only] if only.sign != Sign::Zero => Some(only.sign),
        _ => None,
    };
    let signs: Vec<Option<Sign>> = sweep.iter().map(strict_sign).collect();
    let t_sign = signs[0].filter(|s| signs.iter().all(|t| *t == Some(*s)));
    let f = &e.field;
    let (a, b) = f.domain().bounds(0);
    let n = 8192;
    let values: Vec<S> = (0..=n)
        .map(|i| f.value(&[a + (b - a) * S::from_usize_lossy(i) / S::from_usize_lossy(n)]))
        .collect();
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let decreasing = values.windows(2).all(|w| w[1] < w[0]);
    let passed = match t_sign {
        Some(Sign::Positive) => increasing,
        Some(Sign::Negative) => decreasing,
        _ => false,
    };
    CheckRecord::new(CheckId::MonotoneSign, e.name(), true)
        .scales(hs)
        .observe("t_sign", t_sign)
        .observe("f_increasing_on_grid", increasing)
        .observe("f_decreasing_on_grid", decreasing)
        .verdict(passed)
}

fn equal_extrema_checks<S: Scalar>(e: &CorpusEntry<S>, hs: &[S], sweep: &[ZeroCrossingReport<S>]) -> Vec<CheckRecord> {
    let extrema = e.extrema.as_ref().expect("1-D census");
    let curve = counts(sweep);
    let terminal = *curve.last().expect("non-empty");
    let ever_two = curve.contains(&2);
    let n = extrema.global_minima.iter().filter(|m| !m.boundary).count();
    let m = extrema.global_maxima.iter().filter(|m| !m.boundary).count();

    // Agreement of the scanned T with 4x^3 + (h^2 - 2)x, the box average
    // of the derivative of x^4 - x^2.
    let closed_form_gap = sweep
        .iter()
        .flat_map(|r| {
            let h = r.h;
            let op = HomogenizationOperator::new(h, QuadraturePolicy::default()).expect("positive scale");
            let (lo, hi) = r.interval;
            (0..=64).map(move |i| {
                let x = lo + (hi - lo) * S::from_usize_lossy(i) / S::lit(64.0);
                let t = op.avg_gradient_1d(&e.field, x).unwrap_or_else(|_| S::nan());
                let model = S::lit(4.0) * x * x * x + (h * h - S::lit(2.0)) * x;
                (t - model).abs().as_f64()
            })
        })
        .fold(0.0, f64::max);
    let matches_quartic = closed_form_gap < 1e-9;
    let explanation = if matches_quartic {
        "Closed form: T(h, x) = 4x^3 + (h^2 - 2)x, with zeros 0 and +-sqrt(2 - h^2)/2. \
         The two outer zeros merge into the zero at the intervening maximum at h = sqrt(2), \
         so the count goes from 3 straight to 1 and two sign-changing zeros occur at no scale."
    } else {
        "The count curve never settles at the predicted value; see observed counts."
    };

    let minima = CheckRecord::new(CheckId::EqualMinimaCount, e.name(), false)
        .scales(hs)
        .observe("predicted_count", 2)
        .observe("terminal_count", terminal)
        .observe("counts", &curve)
        .observe("two_zeros_at_any_scale", ever_two)
        .observe("closed_form_max_deviation", closed_form_gap)
        .note(format!("Equal minima are predicted to leave two zeros. Observed terminal count {terminal}. {explanation}"))
        .verdict(terminal == 2);
    let extrema_rec = CheckRecord::new(CheckId::EqualExtremaCount, e.name(), false)
        .scales(hs)
        .observe("equal_interior_maxima", m)
        .observe("equal_interior_minima", n)
        .observe("predicted_count", m + n)
        .observe("terminal_count", terminal)
        .observe("counts", &curve)
        .note(format!(
            "Predicted m + n = {} zeros for {m} equal global maxima and {n} equal global minima; observed {terminal}. {explanation}",
            m + n
        ))
        .verdict(terminal == m + n);
    vec![minima, extrema_rec]
}

struct Variant<S> {
    check: CheckId,
    field: ScalarField<S>,
    /// Global extreme point the surviving zero should contain.
    target: Vec<Vec<S>>,
    description: String,
}

fn two_minima_checks<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>, AnalysisError> {
    let f = &e.field;
    let name = e.name();
    let extrema = e.extrema.as_ref().expect("1-D census");
    let mut out = Vec::new();

    let run = |field: &ScalarField<S>| -> Result<(H0Finding<S>, ZeroCrossingReport<S>), AnalysisError> {
        let hs = cfg.scales_for("", field.domain());
        let finding = find_h0(field, cfg.policy, 1, (hs[0], hs[hs.len() - 1]), cfg.grid).map_err(|e| match e {
            crate::scale::ScaleError::Analysis(a) => a,
            other => AnalysisError::Scale(Box::new(other)),
        })?;
        let report = scan_zeros(field, &HomogenizationOperator::new(finding.h0, cfg.policy)?, cfg.grid)?;
        Ok((finding, report))
    };

    let (finding, report) = run(f)?;
    let h0 = finding.h0;
    out.push(
        CheckRecord::new(CheckId::SingleZeroAtScale, name, true)
            .scales(&[h0])
            .observe("count_at_h0", finding.count_at_h0)
            .observe("count_just_below_h0", finding.count_below)
            .observe("zeros", to_f64_vec(&report.zero_points()))
            .verdict(report.count == 1),
    );

    // sign persistence around every non-global interior extremum
    let global_min = extrema.global_minima[0].point[0];
    let global_max = extrema.global_maxima[0].point[0];
    let half = h0 / S::lit(2.0);
    let mut offending = Vec::new();
    let others: Vec<S> = extrema
        .interior_extrema()
        .into_iter()
        .map(|x| x.point[0])
        .filter(|&x| x != global_min && x != global_max)
        .collect();
    for &x0 in &others {
        for z in &report.zeros {
            if (z.x - x0).abs() <= half {
                offending.push([x0.as_f64(), z.x.as_f64()]);
            }
        }
    }
    out.push(
        CheckRecord::new(CheckId::SignPersistence, name, true)
            .scales(&[h0])
            .observe("non_global_extrema", to_f64_vec(&others))
            .observe("zeros_within_half_scale", &offending)
            .verdict(offending.is_empty()),
    );

    // flanks of the global minimizer: nearest interior maxima, else the box
    let (lo, hi) = f.domain().bounds(0);
    let left = extrema
        .maxima
        .iter()
        .map(|m| m.point[0])
        .filter(|&x| x < global_min)
        .fold(lo, S::max);
    let right = extrema
        .maxima
        .iter()
        .map(|m| m.point[0])
        .filter(|&x| x > global_min)
        .fold(hi, S::min);
    let between = report.count == 1 && report.zeros[0].x > left && report.zeros[0].x < right;
    out.push(
        CheckRecord::new(CheckId::ZeroBetweenFlanks, name, true)
            .scales(&[h0])
            .observe("flanks", [left.as_f64(), right.as_f64()])
            .observe("global_minimizer", global_min.as_f64())
            .observe("zeros", to_f64_vec(&report.zero_points()))
            .verdict(between),
    );

    // variants
    let minima = &extrema.minima;
    let (x1, x2) = (minima[0].point[0], minima[1].point[0]);
    // f + c x shifts the gap between the minima by c (x2 - x1); this c negates it
    let tilt = -S::lit(2.0) * (minima[1].value - minima[0].value) / (x2 - x1);
    let mut variants = Vec::new();
    let reflected = f.reflected();
    variants.push(Variant {
        check: CheckId::OrderSwap,
        target: e.oracle.minimizers.iter().map(|m| vec![-m[0]]).collect(),
        field: reflected,
        description: "reflected x -> -x: deeper minimum on the other side".into(),
    });
    let swapped = f.tilted(&[tilt])?;
    let swapped_oracle = brute_force_extrema(&swapped, 8192)?;
    variants.push(Variant {
        check: CheckId::ValueSwap,
        target: swapped_oracle.global_minima.iter().map(|m| m.point.clone()).collect(),
        field: swapped,
        description: format!("tilt by {:.6} x: minimum values exchanged", tilt.as_f64()),
    });
    variants.push(Variant {
        check: CheckId::TwoMaxima,
        target: e.oracle.minimizers.clone(),
        field: f.negated(),
        description: "negated: two maxima, global maximum at the former global minimum".into(),
    });
    let l = hi - lo;
    let sub = Domain::new(&[(lo + S::lit(0.1) * l, hi - S::lit(0.05) * l)])?;
    let sub_field = f.on_domain(sub)?;
    let sub_oracle = brute_force_extrema(&sub_field, 8192)?;
    variants.push(Variant {
        check: CheckId::Subinterval,
        target: sub_oracle.global_minima.iter().map(|m| m.point.clone()).collect(),
        field: sub_field,
        description: "restricted to a sub-interval holding both minima".into(),
    });

    for v in variants {
        let (finding, report) = run(&v.field)?;
        let slack = S::lit(cfg.containment_slack) * finding.h0 / S::lit(2.0);
        let contained = if report.zeros.is_empty() {
            false
        } else {
            containment_of(&report, &v.target, slack)?.passed
        };
        out.push(
            CheckRecord::new(v.check, name, true)
                .scales(&[finding.h0])
                .observe("count_at_h0", report.count)
                .observe("zeros", to_f64_vec(&report.zero_points()))
                .observe("global_extreme_point", v.target.iter().map(|t| to_f64_vec(t)).collect::<Vec<_>>())
                .observe("contained", contained)
                .note(v.description)
                .verdict(report.count == 1 && contained),
        );
    }
    Ok(out)
}

fn potential_operator<S: Scalar>(f: &ScalarField<S>, h: S, poly_order: usize, other_order: usize) -> HomogenizationOperator<S> {
    let order = if f.polynomial_degree().is_some() { poly_order } else { other_order };
    HomogenizationOperator::new(h, QuadraturePolicy::Gauss { order }).expect("valid operator")
}

fn two_dimensional<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>, AnalysisError> {
    let f = &e.field;
    let name = e.name();
    let l = f.domain().shortest_edge();
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(entry_seed(cfg.seed, name));

    // potential field: finite differences of F against the average gradient
    let scales = [l * S::lit(0.1), l * S::lit(0.2)];
    let (mut worst, mut worst_sym) = (S::zero(), S::zero());
    for k in 0..cfg.potential_points {
        let h = scales[k % 2];
        let op = potential_operator(f, h, 8, 24);
        let d = S::lit(1e-4) * h;
        let inset = op.inset_domain(f)?;
        let x: Vec<S> = (0..2)
            .map(|i| {
                let (a, b) = inset.bounds(i);
                uniform(&mut rng, a + S::lit(2.0) * d, b - S::lit(2.0) * d)
            })
            .collect();
        let t = op.avg_gradient_field(f, &x)?.components;
        let scale = t.iter().fold(S::one(), |m, v| m.max(v.abs()));
        let shifted = |i: usize, s: S| {
            let mut p = x.clone();
            p[i] = p[i] + s;
            p
        };
        for i in 0..2 {
            let fp = op.value(f, &shifted(i, d))?.value;
            let fm = op.value(f, &shifted(i, -d))?.value;
            let fd = (fp - fm) / (S::lit(2.0) * d);
            worst = worst.max((fd - t[i]).abs() / scale);
        }
        if f.polynomial_degree().is_some() {
            let txy = (op.avg_gradient_field(f, &shifted(1, d))?.components[0]
                - op.avg_gradient_field(f, &shifted(1, -d))?.components[0])
                / (S::lit(2.0) * d);
            let tyx = (op.avg_gradient_field(f, &shifted(0, d))?.components[1]
                - op.avg_gradient_field(f, &shifted(0, -d))?.components[1])
                / (S::lit(2.0) * d);
            worst_sym = worst_sym.max((txy - tyx).abs());
        }
    }
    out.push(
        CheckRecord::new(CheckId::PotentialField, name, true)
            .scales(&scales)
            .observe("points", cfg.potential_points)
            .observe("max_relative_error", worst.as_f64())
            .observe("tolerance", 1e-5)
            .note("relative to max(1, |T|_inf); finite-difference step 1e-4 h")
            .verdict(worst <= S::lit(1e-5)),
    );
    if f.polynomial_degree().is_some() {
        out.push(
            CheckRecord::new(CheckId::PotentialFieldSymmetry, name, true)
                .scales(&scales)
                .observe("points", cfg.potential_points)
                .observe("max_cross_derivative_gap", worst_sym.as_f64())
                .observe("tolerance", 1e-6)
                .verdict(worst_sym <= S::lit(1e-6)),
        );
    }

    // census of F over a scale sweep
    let census_scales = geometric_scales(
        l * S::lit(cfg.h_min_fraction),
        l * S::lit(cfg.h_max_fraction),
        cfg.census_points,
    );
    let censuses = census_scales
        .iter()
        .map(|&h| extreme_point_census(f, &potential_operator(f, h, 8, 16), cfg.census_grid))
        .collect::<Result<Vec<_>, _>>()?;
    let totals: Vec<usize> = censuses.iter().map(|c| c.total()).collect();
    let multimodal = e.has_tag(Tag::Multimodal);
    let mut census = CheckRecord::new(CheckId::ExtremePointCensus, name, !multimodal)
        .scales(&census_scales)
        .observe("grid", cfg.census_grid)
        .observe("minima", censuses.iter().map(|c| c.minima).collect::<Vec<_>>())
        .observe("maxima", censuses.iter().map(|c| c.maxima).collect::<Vec<_>>())
        .observe("totals", &totals);
    if multimodal {
        census = census.note(
            "Box averaging scales a ripple of frequency k by sin(pi k h)/(pi k h), which is negative for \
             h in (1/k, 2/k). On that band the ripple is inverted rather than damped, so extreme points \
             reappear and the census need not be monotone in h.",
        );
    }
    out.push(census.verdict(is_non_increasing(&totals)));

    // line decomposition on the raw field
    let oracle = &e.oracle.minimizers;
    let line_params = LineParams::default();
    let mut successes = 0;
    let mut max_lines = 0;
    let mut worst_gap = S::zero();
    for s in 0..cfg.solver_starts {
        let x0: Vec<S> = (0..2)
            .map(|i| {
                let (a, b) = f.domain().bounds(i);
                uniform(&mut rng, a, b)
            })
            .collect();
        let trace = line_decomposition_solve(f, &x0, cfg.seed.wrapping_add(s as u64), &line_params)?;
        let gap = trace.distance_to(oracle);
        let lines = trace.lines.unwrap_or(0);
        worst_gap = worst_gap.max(gap);
        max_lines = max_lines.max(lines);
        let tol = if multimodal { 1e-3 } else { 1e-6 };
        if gap <= S::lit(tol) && (multimodal || lines <= 200) {
            successes += 1;
        }
    }
    let mut line = CheckRecord::new(CheckId::LineSolvability, name, !multimodal)
        .observe("starts", cfg.solver_starts)
        .observe("successes", successes)
        .observe("max_lines", max_lines)
        .observe("max_distance_to_minimizer", worst_gap.as_f64());
    if multimodal {
        line = line.note(
            "Raw multimodal field: line restrictions are not all gradient solvable, so success is not implied.",
        );
    }
    out.push(line.verdict(successes == cfg.solver_starts));

    out.push(homogenized_solvable(e, cfg, &mut rng)?);
    Ok(out)
}

fn homogenized_solvable<S: Scalar>(
    e: &CorpusEntry<S>,
    cfg: &VerifyConfig,
    rng: &mut ChaCha8Rng,
) -> Result<CheckRecord, AnalysisError> {
    let f = &e.field;
    let finding = heuristic_h0(f.domain());
    let h0 = finding.h0;
    let params = DescentParams::default();
    let op = HomogenizationOperator::new(h0, params.policy_for(f.dim()))?;
    let smooth = op.homogenized_field(f)?;
    let mut ends: Vec<Vec<S>> = Vec::new();
    for _ in 0..cfg.solver_starts {
        let x0: Vec<S> = (0..f.dim())
            .map(|i| {
                let (a, b) = smooth.domain().bounds(i);
                uniform(rng, a, b)
            })
            .collect();
        ends.push(plain_descent(&smooth, &x0, &params)?.final_point);
    }
    let spread = ends.iter().map(|p| distance(p, &ends[0])).fold(S::zero(), S::max);
    let half = h0 / S::lit(2.0);
    let contained = e
        .oracle
        .minimizers
        .iter()
        .all(|m| m.iter().zip(&ends[0]).all(|(a, b)| (*a - *b).abs() <= half));
    let agree = spread <= S::lit(1e-4) * f.domain().shortest_edge();
    Ok(CheckRecord::new(CheckId::HomogenizedSolvable, e.name(), true)
        .scales(&[h0])
        .observe("h0_method", finding.method)
        .observe("starts", cfg.solver_starts)
        .observe("endpoint_spread", spread.as_f64())
        .observe("minimizer_of_f_h0", to_f64_vec(&ends[0]))
        .observe("cube_contains_global_minimizer", contained)
        .note("h0 is the heuristic half shortest edge")
        .verdict(agree && contained))
}

fn higher_dimensional<S: Scalar>(e: &CorpusEntry<S>, cfg: &VerifyConfig) -> Result<Vec<CheckRecord>, AnalysisError> {
    let f = &e.field;
    let h = S::one();
    let center = f.domain().center();
    let mc = HomogenizationOperator::new(
        h,
        QuadraturePolicy::MonteCarlo {
            samples: cfg.monte_carlo_samples,
            seed: cfg.seed,
        },
    )?;
    let estimate = mc.homogenize(f, &center)?;
    let reference = HomogenizationOperator::new(h, QuadraturePolicy::Gauss { order: 12 })?.homogenize(f, &center)?;
    let deviation = (estimate.value - reference.value).abs();
    Ok(vec![CheckRecord::new(CheckId::MonteCarloBoxAverage, e.name(), true)
        .scales(&[h])
        .observe("center", to_f64_vec(&center))
        .observe("monte_carlo", estimate.value.as_f64())
        .observe("standard_error", estimate.error.as_f64())
        .observe("tensor_gauss_reference", reference.value.as_f64())
        .observe("deviation_in_standard_errors", (deviation / estimate.error).as_f64())
        .verdict(deviation <= S::lit(3.0) * estimate.error)])
}
