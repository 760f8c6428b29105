use std::collections::BTreeMap;

use crate::corpus::MrCategory;
use crate::metrics::minmax_normalize;

use super::{Measure, Outcome, Verdict};

/// Tallies for one (method, category) cell or a method overall.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CategoryStats {
    /// Valid outcomes.
    pub n: usize,
    pub correct: usize,
    pub ties: usize,
    pub errors: usize,
    pub sum_pos: f64,
    pub sum_neg: f64,
    /// Sums of the min-max normalized values.
    pub sum_pos_norm: f64,
    pub sum_neg_norm: f64,
}

fn mean(sum: f64, n: usize) -> Option<f64> {
    (n > 0).then(|| sum / n as f64)
}

impl CategoryStats {
    /// Correct over valid outcomes. Ties count as incorrect.
    pub fn accuracy(&self) -> Option<f64> {
        mean(self.correct as f64, self.n)
    }

    pub fn avg_pos(&self) -> Option<f64> {
        mean(self.sum_pos, self.n)
    }

    pub fn avg_neg(&self) -> Option<f64> {
        mean(self.sum_neg, self.n)
    }

    pub fn avg_pos_norm(&self) -> Option<f64> {
        mean(self.sum_pos_norm, self.n)
    }

    pub fn avg_neg_norm(&self) -> Option<f64> {
        mean(self.sum_neg_norm, self.n)
    }

    fn add(&mut self, verdict: Verdict, pos: f64, neg: f64, pos_norm: f64, neg_norm: f64) {
        self.n += 1;
        match verdict {
            Verdict::Correct => self.correct += 1,
            Verdict::Tie => self.ties += 1,
            Verdict::FalseMatch => {}
        }
        self.sum_pos += pos;
        self.sum_neg += neg;
        self.sum_pos_norm += pos_norm;
        self.sum_neg_norm += neg_norm;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method_id: String,
    pub measure: Measure,
    pub per_category: BTreeMap<MrCategory, CategoryStats>,
    pub overall: CategoryStats,
}

impl MethodReport {
    pub fn has_valid_outcomes(&self) -> bool {
        self.overall.n > 0
    }
}

/// Per-method, per-category aggregates. Methods appear in the order they
/// are first seen in the outcomes.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalReport {
    pub methods: Vec<MethodReport>,
}

impl EvalReport {
    /// Aggregates outcomes. Averages of normalized values use a min-max
    /// scaling over all positive and negative values of the method.
    pub fn from_outcomes(outcomes: &[Outcome]) -> Self {
        let mut order: Vec<&str> = Vec::new();
        let mut grouped: BTreeMap<&str, Vec<&Outcome>> = BTreeMap::new();
        for o in outcomes {
            let id = super::outcome_key(o).0;
            grouped
                .entry(id)
                .or_insert_with(|| {
                    order.push(id);
                    Vec::new()
                })
                .push(o);
        }
        let methods = order.into_iter().map(|id| method_report(id, &grouped[id])).collect();
        EvalReport { methods }
    }

    pub fn method(&self, id: &str) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method_id == id)
    }

    /// Methods that produced no valid outcome at all.
    pub fn empty_methods(&self) -> Vec<&str> {
        self.methods
            .iter()
            .filter(|m| !m.has_valid_outcomes())
            .map(|m| m.method_id.as_str())
            .collect()
    }
}

fn method_report(id: &str, outcomes: &[&Outcome]) -> MethodReport {
    let valid: Vec<_> = outcomes.iter().filter_map(|o| o.as_ref().ok()).collect();
    let raw: Vec<f64> = valid.iter().flat_map(|m| [m.d_pos, m.d_neg]).collect();
    let norm = minmax_normalize(&raw).unwrap_or_default();
    let mut report = MethodReport {
        method_id: id.to_string(),
        measure: valid.first().map_or(Measure::Distance, |m| m.measure),
        per_category: BTreeMap::new(),
        overall: CategoryStats::default(),
    };
    for (i, m) in valid.iter().enumerate() {
        let (pn, nn) = (norm[2 * i], norm[2 * i + 1]);
        report
            .per_category
            .entry(m.category)
            .or_default()
            .add(m.verdict, m.d_pos, m.d_neg, pn, nn);
        report.overall.add(m.verdict, m.d_pos, m.d_neg, pn, nn);
    }
    for o in outcomes {
        if let Err(f) = o {
            report.per_category.entry(f.category).or_default().errors += 1;
            report.overall.errors += 1;
        }
    }
    report
}

#[derive(Debug, Clone, PartialEq)]
pub struct DropRow {
    pub method_id: String,
    pub metamorphic: Option<f64>,
    pub control: Option<f64>,
}

impl DropRow {
    /// Control accuracy minus metamorphic accuracy.
    pub fn drop(&self) -> Option<f64> {
        Some(self.control? - self.metamorphic?)
    }
}

/// One row per method present in either report, metamorphic order first.
pub fn accuracy_drop(metamorphic: &EvalReport, control: &EvalReport) -> Vec<DropRow> {
    let mut rows: Vec<DropRow> = metamorphic
        .methods
        .iter()
        .map(|m| DropRow {
            method_id: m.method_id.clone(),
            metamorphic: m.overall.accuracy(),
            control: control.method(&m.method_id).and_then(|c| c.overall.accuracy()),
        })
        .collect();
    for c in &control.methods {
        if metamorphic.method(&c.method_id).is_none() {
            rows.push(DropRow {
                method_id: c.method_id.clone(),
                metamorphic: None,
                control: c.overall.accuracy(),
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::{MatchFailure, MatchOutcome};

    fn ok(id: &str, cat: MrCategory, pos: f64, neg: f64) -> Outcome {
        Ok(MatchOutcome {
            triplet_id: id.into(),
            category: cat,
            method_id: "m".into(),
            measure: Measure::Distance,
            d_pos: pos,
            d_neg: neg,
            verdict: Verdict::from_distances(pos, neg),
        })
    }

    #[test]
    fn ties_are_incorrect_and_errors_excluded() {
        let outcomes = vec![
            ok("a", MrCategory::WordSwap, 0.1, 0.3),
            ok("b", MrCategory::WordSwap, 0.2, 0.2),
            ok("c", MrCategory::ObjSub, 0.5, 0.1),
            Err(MatchFailure {
                triplet_id: "d".into(),
                category: MrCategory::ObjSub,
                method_id: "m".into(),
                error: "boom".into(),
            }),
        ];
        let r = EvalReport::from_outcomes(&outcomes);
        let m = &r.methods[0];
        assert_eq!(m.overall.n, 3);
        assert_eq!(m.overall.errors, 1);
        assert_eq!(m.overall.ties, 1);
        assert_eq!(m.per_category[&MrCategory::WordSwap].accuracy(), Some(0.5));
        assert_eq!(m.per_category[&MrCategory::ObjSub].accuracy(), Some(0.0));
        assert_eq!(m.overall.accuracy(), Some(1.0 / 3.0));
        // min 0.1, max 0.5 over all six values
        assert!((m.per_category[&MrCategory::ObjSub].avg_pos_norm().unwrap() - 1.0).abs() < 1e-12);
        assert!((m.per_category[&MrCategory::ObjSub].avg_neg_norm().unwrap()).abs() < 1e-12);
    }

    #[test]
    fn all_errors_means_no_accuracy() {
        let r = EvalReport::from_outcomes(&[Err(MatchFailure {
            triplet_id: "d".into(),
            category: MrCategory::ObjSub,
            method_id: "m".into(),
            error: "boom".into(),
        })]);
        assert_eq!(r.methods[0].overall.accuracy(), None);
        assert_eq!(r.empty_methods(), vec!["m"]);
    }

    #[test]
    fn drop_is_control_minus_metamorphic() {
        let meta = EvalReport::from_outcomes(&[ok("a", MrCategory::WordSwap, 0.5, 0.1)]);
        let ctrl = EvalReport::from_outcomes(&[ok("a", MrCategory::WordSwap, 0.1, 0.5)]);
        let rows = accuracy_drop(&meta, &ctrl);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].drop(), Some(1.0));
    }
}
