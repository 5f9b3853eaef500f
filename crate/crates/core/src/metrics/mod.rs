//! Description-length metrics, aggregation and significance testing.

pub mod stats;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{EvalRecord, Grid, SettingTag, TaskKind, SAMPLE_COST};

pub use stats::{mann_whitney_u, significance_groups, MannWhitney};

/// Mapping-table size of the most compositional program for this task.
pub const L_SUFFICIENT: u32 = 40;
/// Mapping-table size of a program that memorises every sample.
pub const L_ZERO: u32 = 320;

/// Description length: table size plus one full sample per error.
pub fn l_total(l_plus: u32, errors: u32) -> u32 {
    l_plus + SAMPLE_COST * errors
}

/// Normalised compositionality in `[0, 100]`.
pub fn c_score(l: u32) -> f64 {
    let clipped = l.clamp(L_SUFFICIENT, L_ZERO);
    100.0 * f64::from(L_ZERO - clipped) / f64::from(L_ZERO - L_SUFFICIENT)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Characterization {
    /// Small table, few errors.
    T1,
    /// Large table, few errors.
    T2,
    /// Small table, many errors.
    T3,
    /// Large table and many errors.
    #[serde(rename = "mixed")]
    Mixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Mean L(P⁺) below this counts as low.
    pub l_plus_low: f64,
    /// Mean E(P) below this counts as low.
    pub errors_low: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { l_plus_low: 180.0, errors_low: 8.0 }
    }
}

pub fn characterize(mean_l_plus: f64, mean_errors: f64, t: &Thresholds) -> Characterization {
    match (mean_l_plus < t.l_plus_low, mean_errors < t.errors_low) {
        (true, true) => Characterization::T1,
        (false, true) => Characterization::T2,
        (true, false) => Characterization::T3,
        (false, false) => Characterization::Mixed,
    }
}

/// Percentage of held-out samples predicted exactly; failures are misses.
pub fn result_accuracy<E>(predictions: &[Result<Grid, E>], held_out: &[Grid]) -> f64 {
    if held_out.is_empty() {
        return 0.0;
    }
    let hits = predictions.iter().zip(held_out).filter(|(p, y)| matches!(p, Ok(g) if g == *y)).count();
    100.0 * hits as f64 / held_out.len() as f64
}

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no records to aggregate")]
    Empty,
    #[error("records mix groups: {0}")]
    MixedGroups(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SettingSummary {
    pub model_id: String,
    pub setting: SettingTag,
    pub prompt_template_id: String,
    pub task_kind: TaskKind,
    pub count: usize,
    pub mean_l_plus: f64,
    pub mean_errors: f64,
    pub mean_c: f64,
    pub std_l_plus: f64,
    pub std_errors: f64,
    pub std_c: f64,
    /// Mean accuracy over records that carry one.
    pub accuracy: Option<f64>,
    pub std_accuracy: Option<f64>,
    pub characterization: Characterization,
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two.
pub fn std_dev(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
}

/// Per-record C of a record, recomputed from its table size and errors.
pub fn record_c(r: &EvalRecord) -> f64 {
    c_score(l_total(r.l_plus, r.errors))
}

/// Summarises one (model, setting, template, task) group. C is computed per
/// record and then averaged, never from the mean description length.
pub fn aggregate(records: &[EvalRecord], thresholds: &Thresholds) -> Result<SettingSummary, MetricsError> {
    let first = records.first().ok_or(MetricsError::Empty)?;
    for r in records {
        if r.model_id != first.model_id
            || r.setting != first.setting
            || r.prompt_template_id != first.prompt_template_id
            || r.task_kind != first.task_kind
        {
            return Err(MetricsError::MixedGroups(format!("{} vs {}", first.record_id, r.record_id)));
        }
    }
    // Deterministic fold order.
    let mut sorted: Vec<&EvalRecord> = records.iter().collect();
    sorted.sort_by_key(|r| r.function_index);
    let l: Vec<f64> = sorted.iter().map(|r| f64::from(r.l_plus)).collect();
    let e: Vec<f64> = sorted.iter().map(|r| f64::from(r.errors)).collect();
    let c: Vec<f64> = sorted.iter().map(|r| record_c(r)).collect();
    let acc: Vec<f64> = sorted.iter().filter_map(|r| r.accuracy).collect();
    let (mean_l_plus, mean_errors) = (mean(&l), mean(&e));
    Ok(SettingSummary {
        model_id: first.model_id.clone(),
        setting: first.setting,
        prompt_template_id: first.prompt_template_id.clone(),
        task_kind: first.task_kind,
        count: sorted.len(),
        mean_l_plus,
        mean_errors,
        mean_c: mean(&c),
        std_l_plus: std_dev(&l),
        std_errors: std_dev(&e),
        std_c: std_dev(&c),
        accuracy: (!acc.is_empty()).then(|| mean(&acc)),
        std_accuracy: (!acc.is_empty()).then(|| std_dev(&acc)),
        characterization: characterize(mean_l_plus, mean_errors, thresholds),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FailureMode;

    pub(crate) fn record(i: usize, l_plus: u32, errors: u32) -> EvalRecord {
        let l = l_total(l_plus, errors);
        EvalRecord {
            record_id: format!("m__horizontal__{i:02}__t__rule_generation"),
            model_id: "m".into(),
            setting: SettingTag::Horizontal,
            function_index: i,
            prompt_template_id: "t".into(),
            task_kind: TaskKind::RuleGeneration,
            raw_response: String::new(),
            extracted_program: None,
            l_plus,
            errors,
            l_total: l,
            c_score: c_score(l),
            failure_mode: FailureMode::None,
            accuracy: None,
        }
    }

    #[test]
    fn identities() {
        assert_eq!(l_total(40, 0), 40);
        assert_eq!(l_total(60, 2), 100);
        assert_eq!(l_total(0, 16), 320);
        assert_eq!(c_score(40), 100.0);
        assert_eq!(c_score(320), 0.0);
        assert!((c_score(100) - 78.571_428_571).abs() < 1e-6);
        assert_eq!(c_score(35), 100.0);
        assert_eq!(c_score(1000), 0.0);
    }

    #[test]
    fn c_is_monotone_and_affine() {
        let mut prev = f64::INFINITY;
        for l in 0..400 {
            let c = c_score(l);
            assert!(c <= prev);
            prev = c;
        }
        // Equal steps inside the bounds.
        let step = c_score(100) - c_score(101);
        for l in 40..320 {
            assert!((c_score(l) - c_score(l + 1) - step).abs() < 1e-9);
        }
    }

    #[test]
    fn quadrants() {
        let t = Thresholds::default();
        assert_eq!(characterize(45.0, 1.0, &t), Characterization::T1);
        assert_eq!(characterize(300.0, 1.0, &t), Characterization::T2);
        assert_eq!(characterize(50.0, 15.0, &t), Characterization::T3);
        assert_eq!(characterize(300.0, 15.0, &t), Characterization::Mixed);
    }

    #[test]
    fn accuracy_ratio() {
        let g = Grid::filled(crate::model::Symbol::Dot);
        let h = Grid::filled(crate::model::Symbol::Star);
        let held = vec![g; 8];
        let all: Vec<Result<Grid, ()>> = vec![Ok(g); 8];
        assert_eq!(result_accuracy(&all, &held), 100.0);
        let none: Vec<Result<Grid, ()>> = vec![Err(()); 8];
        assert_eq!(result_accuracy(&none, &held), 0.0);
        let half: Vec<Result<Grid, ()>> = (0..8).map(|i| if i < 4 { Ok(g) } else { Ok(h) }).collect();
        assert_eq!(result_accuracy(&half, &held), 50.0);
    }

    #[test]
    fn aggregate_constant_and_bounds() {
        let t = Thresholds::default();
        let recs: Vec<EvalRecord> = (0..30).map(|i| record(i, 40, 0)).collect();
        let s = aggregate(&recs, &t).unwrap();
        assert_eq!(s.mean_c, 100.0);
        assert_eq!(s.std_c, 0.0);
        let s = aggregate(&[record(0, 40, 0), record(1, 320, 0)], &t).unwrap();
        assert_eq!(s.mean_c, 50.0);
    }

    #[test]
    fn aggregate_rejects_mixed_groups() {
        let mut other = record(1, 40, 0);
        other.model_id = "n".into();
        assert!(matches!(aggregate(&[record(0, 40, 0), other], &Thresholds::default()), Err(MetricsError::MixedGroups(_))));
        assert_eq!(aggregate(&[], &Thresholds::default()), Err(MetricsError::Empty));
    }

    #[test]
    fn sample_std_uses_n_minus_one() {
        assert!((std_dev(&[1.0, 2.0, 3.0, 4.0]) - 1.290_994_448_7).abs() < 1e-9);
        assert_eq!(std_dev(&[5.0]), 0.0);
    }
}
