//! Report tables, each renderable as CSV or as aligned plain text.

use crate::corpus::MrCategory;
use crate::simulate::{DropRow, EvalReport, MethodReport};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(headers: &[&str]) -> Self {
        Table {
            headers: headers.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory csv write");
        for r in &self.rows {
            w.write_record(r).expect("in-memory csv write");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv flush")).expect("csv is utf-8")
    }

    pub fn to_pretty(&self) -> String {
        let mut widths: Vec<usize> = self.headers.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let padded: Vec<String> = cells
                .iter()
                .zip(&widths)
                .enumerate()
                .map(|(i, (c, w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
                .collect();
            padded.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        out.push_str(&widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("  "));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// Full-precision value, or empty when undefined.
fn num(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

fn categories(report: &EvalReport) -> Vec<MrCategory> {
    let mut cats: Vec<MrCategory> = report
        .methods
        .iter()
        .flat_map(|m| m.per_category.keys().copied())
        .collect();
    cats.sort();
    cats.dedup();
    cats
}

/// Methods as rows, one accuracy column per category plus overall.
pub fn accuracy_table(report: &EvalReport) -> Table {
    let cats = categories(report);
    let mut headers = vec!["method".to_string()];
    headers.extend(cats.iter().map(|c| c.to_string()));
    headers.push("overall".into());
    let rows = report
        .methods
        .iter()
        .map(|m| {
            let mut row = vec![m.method_id.clone()];
            row.extend(
                cats.iter()
                    .map(|c| num(m.per_category.get(c).and_then(|s| s.accuracy()))),
            );
            row.push(num(m.overall.accuracy()));
            row
        })
        .collect();
    Table { headers, rows }
}

fn cell_rows(m: &MethodReport) -> impl Iterator<Item = (String, &crate::simulate::CategoryStats)> {
    m.per_category
        .iter()
        .map(|(c, s)| (c.to_string(), s))
        .chain(std::iter::once(("overall".to_string(), &m.overall)))
}

/// Average positive and negative values per (method, category), min-max
/// normalized per method.
pub fn distance_table(report: &EvalReport) -> Table {
    let mut t = Table::new(&[
        "method",
        "category",
        "avg_d_pos",
        "avg_d_neg",
        "raw_avg_d_pos",
        "raw_avg_d_neg",
    ]);
    for m in &report.methods {
        for (cat, s) in cell_rows(m) {
            t.rows.push(vec![
                m.method_id.clone(),
                cat,
                num(s.avg_pos_norm()),
                num(s.avg_neg_norm()),
                num(s.avg_pos()),
                num(s.avg_neg()),
            ]);
        }
    }
    t
}

/// Per (method, category): accuracy, normalized averages and counts.
pub fn report_table(report: &EvalReport) -> Table {
    let mut t = Table::new(&[
        "method",
        "category",
        "acc",
        "avg_d_pos",
        "avg_d_neg",
        "n",
        "ties",
        "errors",
    ]);
    for m in &report.methods {
        for (cat, s) in cell_rows(m) {
            t.rows.push(vec![
                m.method_id.clone(),
                cat,
                num(s.accuracy()),
                num(s.avg_pos_norm()),
                num(s.avg_neg_norm()),
                s.n.to_string(),
                s.ties.to_string(),
                s.errors.to_string(),
            ]);
        }
    }
    t
}

pub fn drop_table(rows: &[DropRow]) -> Table {
    let mut t = Table::new(&["method", "metamorphic_acc", "control_acc", "drop"]);
    for r in rows {
        t.rows.push(vec![
            r.method_id.clone(),
            num(r.metamorphic),
            num(r.control),
            num(r.drop()),
        ]);
    }
    t
}

/// Long-format series for external plotting: one value per
/// (method, category, series).
pub fn plot_table(report: &EvalReport) -> Table {
    let mut t = Table::new(&["method", "category", "series", "value"]);
    for m in &report.methods {
        for (cat, s) in cell_rows(m) {
            for (series, v) in [
                ("accuracy", s.accuracy()),
                ("avg_d_pos", s.avg_pos_norm()),
                ("avg_d_neg", s.avg_neg_norm()),
            ] {
                if let Some(v) = v {
                    t.rows
                        .push(vec![m.method_id.clone(), cat.clone(), series.into(), v.to_string()]);
                }
            }
        }
    }
    t
}
