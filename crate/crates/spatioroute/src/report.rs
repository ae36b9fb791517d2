//! Human-readable table rendering for reports and deltas. The JSON side is
//! plain serde on [`EvalReport`] / [`DeltaReport`] with unrounded values;
//! only the tables round, half-up to two decimals.

use crate::eval::{DeltaReport, EvalReport};
use crate::typology::QuestionType;

/// Round half away from zero to two decimals, display only. The epsilon
/// compensates for values like 46.745 sitting just below the binary .5
/// boundary.
pub fn round2(value: f64) -> f64 {
    if value == 0.0 {
        return 0.0;
    }
    (value * 100.0 + value.signum() * (0.5 + 1e-9)).trunc() / 100.0
}

pub fn fmt2(value: Option<f64>) -> String {
    match value {
        Some(v) => format!("{:.2}", round2(v)),
        None => "NA".to_string(),
    }
}

fn fmt2_signed(value: Option<f64>) -> String {
    match value {
        Some(v) if v > 0.0 => format!("+{:.2}", round2(v)),
        Some(v) => format!("{:.2}", round2(v)),
        None => "NA".to_string(),
    }
}

pub fn render_report(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "model: {}  condition: {}  normalizer: {}\n",
        report.model_id, report.condition, report.normalizer_version
    ));
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>9}\n",
        "Category", "Correct", "Total", "Acc (%)"
    ));
    for qt in QuestionType::ALL {
        let score = &report.per_category[&qt];
        out.push_str(&format!(
            "{:<10} {:>8} {:>8} {:>9}\n",
            qt.name(),
            score.correct,
            score.total,
            fmt2(score.accuracy())
        ));
    }
    out.push_str(&format!(
        "{:<10} {:>8} {:>8} {:>9}\n",
        "Overall",
        report.overall.correct,
        report.overall.total,
        fmt2(report.overall.accuracy())
    ));
    out
}

pub fn render_delta(delta: &DeltaReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "delta: {} {} - {} {}\n",
        delta.model_a, delta.condition_a, delta.model_b, delta.condition_b
    ));
    out.push_str(&format!("{:<10} {:>9}\n", "Category", "Delta (%)"));
    for qt in QuestionType::ALL {
        out.push_str(&format!(
            "{:<10} {:>9}\n",
            qt.name(),
            fmt2_signed(delta.per_category[&qt])
        ));
    }
    out.push_str(&format!("{:<10} {:>9}\n", "Overall", fmt2_signed(delta.overall)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{delta, Condition, EvalReport};
    use std::collections::BTreeMap;

    fn sample() -> EvalReport {
        let counts: BTreeMap<QuestionType, (u64, u64)> =
            QuestionType::ALL.iter().map(|qt| (*qt, (1, 2))).collect();
        EvalReport::from_counts("m", Condition::Baseline, counts)
    }

    #[test]
    fn rounding_is_half_up() {
        assert_eq!(round2(46.745), 46.75);
        assert_eq!(round2(-20.115), -20.12);
        assert_eq!(round2(0.0), 0.0);
    }

    #[test]
    fn table_has_row_per_category_plus_overall() {
        let table = render_report(&sample());
        assert_eq!(table.lines().count(), 1 + 1 + 6 + 1);
        for qt in QuestionType::ALL {
            assert!(table.contains(qt.name()));
        }
        assert!(table.contains("Overall"));
    }

    #[test]
    fn na_for_empty_category() {
        let mut counts: BTreeMap<QuestionType, (u64, u64)> =
            QuestionType::ALL.iter().map(|qt| (*qt, (1, 2))).collect();
        counts.insert(QuestionType::Can, (0, 0));
        let report = EvalReport::from_counts("m", Condition::Baseline, counts);
        assert!(render_report(&report).contains("NA"));
    }

    #[test]
    fn delta_table_marks_sign() {
        let a = EvalReport::from_counts(
            "m",
            Condition::Cot,
            QuestionType::ALL.iter().map(|qt| (*qt, (0, 2))).collect(),
        );
        let b = sample();
        let table = render_delta(&delta(&a, &b).unwrap());
        assert!(table.contains("-50.00"));
        let reverse = render_delta(&delta(&b, &a).unwrap());
        assert!(reverse.contains("+50.00"));
    }

    #[test]
    fn report_json_round_trips() {
        let report = sample();
        let json = serde_json::to_string(&report).unwrap();
        let back: EvalReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
    }
}
