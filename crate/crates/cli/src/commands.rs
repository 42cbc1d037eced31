use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use gibbs_spectra::rigidity::{classify, BernoulliKind, ShiftCase};
use gibbs_spectra::shift::{Word, DEFAULT_WORD_CAP};
use gibbs_spectra::sim::{empirical_local_entropy, Buckets};
use gibbs_spectra::spectrum::{q_grid, spectra_equal, BetaFunction, SpectraComparison, Witness};
use gibbs_spectra::thermo::{
    gibbs_constant_audit, pressure_by_preimages, GibbsState, Potential, Reduction,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::model::{potential_json, word_key, Model};

#[derive(Clone, Copy, Debug)]
pub struct Grid {
    pub qmin: f64,
    pub qmax: f64,
    pub qstep: f64,
}

impl Grid {
    fn points(&self) -> Result<Vec<f64>, CliError> {
        let ordered = self.qstep > 0.0 && self.qmax >= self.qmin;
        if !ordered || !self.qmin.is_finite() || !self.qmax.is_finite() {
            return Err(CliError::Argument(format!(
                "grid needs qstep > 0 and qmin ≤ qmax, got [{}, {}] step {}",
                self.qmin, self.qmax, self.qstep
            )));
        }
        Ok(q_grid(self.qmin, self.qmax, self.qstep))
    }
}

/// Writes `content` to `path`, or to stdout for `-`.
pub fn write_output(path: &Path, content: &str) -> Result<(), CliError> {
    let result = if path == Path::new("-") {
        std::io::stdout().lock().write_all(content.as_bytes())
    } else {
        std::fs::write(path, content)
    };
    result.map_err(|source| CliError::Write {
        path: path.display().to_string(),
        source,
    })
}

pub fn render(value: &impl Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("serializable output");
    text.push('\n');
    text
}

fn reduce(f: &Potential) -> Result<Reduction, CliError> {
    Ok(f.reduce(DEFAULT_WORD_CAP)?)
}

/// Names of the states of a (possibly recoded) order-2 potential.
fn state_names(reduced: &Reduction) -> Vec<String> {
    match &reduced.recoding {
        Some(r) => r.alphabet.iter().map(word_key).collect(),
        None => (0..reduced.potential.base().n_symbols())
            .map(|s| word_key(&Word::new(vec![s])))
            .collect(),
    }
}

pub fn pressure(model: &Model, oracle_depth: Option<usize>) -> Result<Value, CliError> {
    let reduced = reduce(&model.potential)?;
    let state = GibbsState::new(&reduced.potential)?;
    let h_top = BetaFunction::new(&reduced.potential)?.topological_entropy();
    let states = state_names(&reduced);
    let mut out = json!({
        "pressure": state.pressure(),
        "lambda": state.lambda(),
        "topological_entropy": h_top,
        "recoded": reduced.recoding.is_some(),
        "states": states,
        "left": state.left(),
        "right": state.right(),
    });
    if let Some(depth) = oracle_depth {
        let mut estimates = Vec::new();
        let mut worst = 0.0f64;
        for (terminal, name) in states.iter().enumerate() {
            let estimate = pressure_by_preimages(&reduced.potential, terminal, depth)?;
            let deviation = (estimate - state.pressure()).abs();
            worst = worst.max(deviation);
            estimates
                .push(json!({ "terminal": name, "estimate": estimate, "deviation": deviation }));
        }
        out["oracle"] = json!({ "depth": depth, "estimates": estimates, "max_deviation": worst });
    }
    Ok(out)
}

pub struct SpectrumOutput {
    pub summary: Value,
    pub csv: String,
}

pub fn spectrum(model: &Model, grid: Grid) -> Result<SpectrumOutput, CliError> {
    let points = grid.points()?;
    let beta = BetaFunction::new(&model.potential)?;
    let curve = beta.sample(&points)?;
    let measure_entropy = beta.gibbs_at(1.0)?.measure().entropy_rate();

    let mut csv = String::from("q,alpha,beta,E,flags\n");
    for s in &curve.samples {
        writeln!(
            csv,
            "{},{},{},{},{}",
            s.q,
            s.alpha,
            s.beta,
            s.entropy,
            s.flags()
        )
        .unwrap();
    }
    let peak = curve
        .peak()
        .map(|p| json!({ "q": p.q, "alpha": p.alpha, "E": p.entropy }));
    let summary = json!({
        "alpha_min": curve.alpha_min,
        "alpha_max": curve.alpha_max,
        "topological_entropy": curve.topological_entropy,
        "measure_entropy": measure_entropy,
        "pressure": beta.pressure(),
        "degenerate": curve.degenerate,
        "peak": peak,
        "points": curve.samples.len(),
        "crosscheck_failures": curve.samples.iter().filter(|s| s.crosscheck_failed).count(),
    });
    Ok(SpectrumOutput { summary, csv })
}

pub fn compare(f: &Model, g: &Model, tol: f64, grid: Grid) -> Result<Value, CliError> {
    if tol.is_nan() || tol < 0.0 {
        return Err(CliError::Argument(format!(
            "tolerance must be non-negative, got {tol}"
        )));
    }
    let points = grid.points()?;
    let verdict = spectra_equal(&f.potential, &g.potential, &points, tol)?;
    Ok(match verdict {
        SpectraComparison::Equal { max_gap } => json!({
            "verdict": "equal",
            "tol": tol,
            "grid_points": points.len(),
            "max_gap": max_gap,
        }),
        SpectraComparison::Distinct(witness) => {
            let witness = match witness {
                Witness::Beta { q, gap } => json!({ "kind": "beta", "q": q, "gap": gap }),
                Witness::AlphaRange {
                    alpha_min_gap,
                    alpha_max_gap,
                } => json!({
                    "kind": "alpha_range",
                    "alpha_min_gap": alpha_min_gap,
                    "alpha_max_gap": alpha_max_gap,
                }),
            };
            json!({ "verdict": "distinct", "tol": tol, "grid_points": points.len(), "witness": witness })
        }
    })
}

pub fn classify_model(model: &Model) -> Result<Value, CliError> {
    let report = classify(&model.potential)?;
    let case = match report.case {
        ShiftCase::FullTwoShift => "full_two_shift",
        ShiftCase::NonFull2x2 => "non_full_2x2",
        ShiftCase::General => "general",
    };
    let detected = report.detected.map(|d| {
        let kind = match d.kind {
            BernoulliKind::P1 => "P1",
            BernoulliKind::P2 => "P2",
        };
        json!({ "kind": kind, "alpha": d.alpha })
    });
    let collisions: Vec<[String; 2]> = report
        .g2
        .collisions
        .iter()
        .map(|(a, b)| [word_key(a), word_key(b)])
        .collect();
    let mut out = json!({
        "case": case,
        "in_e": report.in_e,
        "strong_rigid": report.strong_rigid,
        "weak_rigid": report.weak_rigid,
        "detected": detected,
        "g_n": {
            "order": report.g2.order,
            "member": report.g2.member,
            "margin": report.g2.margin,
            "collisions": collisions,
        },
        "condition_a1": report.condition_a1,
    });
    if let Some(twin) = &report.twin {
        out["twin"] = potential_json(twin, model.labels.as_deref());
    }
    Ok(out)
}

/// The audit report, plus an error when the observed ratios leave `[1/C, C]`.
pub fn gibbs_audit(
    model: &Model,
    depth: usize,
    cap: u128,
) -> Result<(Value, Option<CliError>), CliError> {
    let reduced = reduce(&model.potential)?;
    let audit = gibbs_constant_audit(&reduced.potential, depth, cap)?;
    let out = json!({
        "depth": audit.depth,
        "cylinders": audit.cylinders,
        "pressure": audit.pressure,
        "constant": audit.constant,
        "ratio_min": audit.ratio_min,
        "ratio_max": audit.ratio_max,
        "observed_min": audit.observed_min,
        "observed_max": audit.observed_max,
        "within_bounds": audit.within_bounds(),
        "recoded": reduced.recoding.is_some(),
    });
    let violation = (!audit.within_bounds()).then_some(CliError::AuditViolation {
        constant: audit.constant,
        observed_min: audit.observed_min,
        observed_max: audit.observed_max,
    });
    Ok((out, violation))
}

pub struct SampleOutput {
    pub summary: Value,
    pub csv: String,
}

pub fn sample(
    model: &Model,
    n: usize,
    trials: usize,
    seed: u64,
    buckets: usize,
) -> Result<SampleOutput, CliError> {
    if n == 0 || buckets == 0 {
        return Err(CliError::Argument(
            "--n and --buckets must be positive".into(),
        ));
    }
    let reduced = reduce(&model.potential)?;
    let state = GibbsState::new(&reduced.potential)?;
    let stats = empirical_local_entropy(state.measure(), n, trials, seed, &Buckets::Auto(buckets))?;

    let mut csv = String::from("bucket_low,bucket_high,count\n");
    for (k, count) in stats.histogram.counts.iter().enumerate() {
        writeln!(
            csv,
            "{},{},{}",
            stats.histogram.edges[k],
            stats.histogram.edges[k + 1],
            count
        )
        .unwrap();
    }
    let summary = json!({
        "n": n,
        "trials": trials,
        "seed": seed,
        "mean": stats.mean,
        "std_error": stats.std_error,
        "min": stats.min,
        "max": stats.max,
        "target_entropy": state.measure().entropy_rate(),
        "recoded": reduced.recoding.is_some(),
    });
    Ok(SampleOutput { summary, csv })
}

/// The order-2 model equivalent to `model`; recoded states are labelled by
/// the blocks they stand for.
pub fn recode(model: &Model) -> Result<Value, CliError> {
    let reduced = reduce(&model.potential)?;
    let labels = match &reduced.recoding {
        Some(_) => Some(state_names(&reduced)),
        None => model.labels.clone(),
    };
    Ok(potential_json(&reduced.potential, labels.as_deref()))
}
