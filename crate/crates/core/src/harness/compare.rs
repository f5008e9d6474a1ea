//! Refinement summaries across verify/sweep CSVs that differ only in `h`.

use std::collections::BTreeMap;
use std::path::Path;

use super::HarnessError;

/// Columns that must agree for two rows to belong to the same refinement
/// study.
pub const KEY_COLUMNS: &[&str] = &["kind", "alpha", "p", "c", "C", "domain", "field", "data"];

/// Errors below this are round-off and carry no order information.
const ROUNDOFF: f64 = 1e-12;

pub const REFINEMENT_CSV_HEADER: &str =
    "key,hs,solution_errors,orders,min_order,slacks,slack_slope,slack_monotone,warning,status";

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementGroup {
    pub key: String,
    /// Distinct mesh sizes, coarsest first.
    pub hs: Vec<f64>,
    pub errors: Vec<Option<f64>>,
    /// Observed order between consecutive mesh sizes.
    pub orders: Vec<Option<f64>>,
    pub slacks: Vec<f64>,
    /// Least-squares slope of slack against `ln h`; negative means the slack
    /// grows under refinement.
    pub slack_slope: Option<f64>,
    /// Slack never increases from one mesh size to the next finer one.
    pub slack_monotone: bool,
    /// Set when the slack trend increases under refinement.
    pub warning: bool,
}

impl RefinementGroup {
    pub fn refined(&self) -> bool {
        self.hs.len() > 1
    }

    pub fn status(&self) -> &'static str {
        if self.refined() {
            "ok"
        } else {
            "no refinement"
        }
    }

    pub fn min_order(&self) -> Option<f64> {
        self.orders.iter().flatten().copied().reduce(f64::min)
    }

    fn csv_row(&self) -> Vec<String> {
        let join = |v: Vec<String>| v.join(" ");
        let opt = |x: &Option<f64>| x.map_or_else(String::new, |v| v.to_string());
        vec![
            self.key.clone(),
            join(self.hs.iter().map(f64::to_string).collect()),
            join(self.errors.iter().map(opt).collect()),
            join(self.orders.iter().map(opt).collect()),
            opt(&self.min_order()),
            join(self.slacks.iter().map(f64::to_string).collect()),
            opt(&self.slack_slope),
            self.slack_monotone.to_string(),
            self.warning.to_string(),
            self.status().to_string(),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementSummary {
    pub groups: Vec<RefinementGroup>,
}

impl RefinementSummary {
    pub fn min_order(&self) -> Option<f64> {
        self.groups
            .iter()
            .filter_map(RefinementGroup::min_order)
            .reduce(f64::min)
    }

    pub fn any_warning(&self) -> bool {
        self.groups.iter().any(|g| g.warning)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), HarnessError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(REFINEMENT_CSV_HEADER.split(','))?;
        for g in &self.groups {
            w.write_record(g.csv_row())?;
        }
        w.flush()?;
        Ok(())
    }
}

impl std::fmt::Display for RefinementSummary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for g in &self.groups {
            write!(f, "{}: {}", g.key, g.status())?;
            if let Some(o) = g.min_order() {
                write!(f, ", min order {o:.3}")?;
            }
            if let Some(s) = g.slack_slope {
                write!(f, ", slack slope {s:.3e}")?;
            }
            if g.warning {
                write!(f, ", WARNING slack increases under refinement")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// Least-squares slope of `ys` against `xs`; `None` with fewer than two
/// distinct abscissae.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    if xs.len() < 2 || xs.len() != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// A parsed row: the refinement key and `(h, solution_error, slack)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub key: String,
    pub h: f64,
    pub error: Option<f64>,
    pub slack: f64,
}

pub fn read_rows(path: &Path) -> Result<Vec<RefinementRow>, HarnessError> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| {
            HarnessError::Compare(format!("{}: missing column '{name}'", path.display()))
        })
    };
    let keys: Vec<usize> = KEY_COLUMNS
        .iter()
        .map(|k| col(k))
        .collect::<Result<_, _>>()?;
    let (h, err, slack, status) = (
        col("h")?,
        col("solution_error")?,
        col("slack")?,
        col("status")?,
    );
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if &record[status] == "error" {
            continue;
        }
        let num = |i: usize| {
            record[i].parse::<f64>().map_err(|_| {
                HarnessError::Compare(format!("{}: bad number '{}'", path.display(), &record[i]))
            })
        };
        rows.push(RefinementRow {
            key: keys
                .iter()
                .map(|&i| &record[i])
                .collect::<Vec<_>>()
                .join(" | "),
            h: num(h)?,
            error: if record[err].is_empty() {
                None
            } else {
                Some(num(err)?)
            },
            slack: num(slack)?,
        });
    }
    Ok(rows)
}

/// Groups rows by key and summarizes each group over its distinct mesh
/// sizes. Groups keep first-appearance order.
pub fn summarize(rows: &[RefinementRow]) -> RefinementSummary {
    let mut order: Vec<&str> = Vec::new();
    let mut by_key: BTreeMap<&str, Vec<&RefinementRow>> = BTreeMap::new();
    for r in rows {
        let entry = by_key.entry(&r.key).or_default();
        if entry.is_empty() {
            order.push(&r.key);
        }
        entry.push(r);
    }
    let groups = order
        .into_iter()
        .map(|key| {
            let mut rs = by_key[key].clone();
            rs.sort_by(|a, b| b.h.total_cmp(&a.h));
            rs.dedup_by(|a, b| a.h == b.h);
            let hs: Vec<f64> = rs.iter().map(|r| r.h).collect();
            let errors: Vec<Option<f64>> = rs.iter().map(|r| r.error).collect();
            let slacks: Vec<f64> = rs.iter().map(|r| r.slack).collect();
            let orders = rs
                .windows(2)
                .map(|w| match (w[0].error, w[1].error) {
                    (Some(e0), Some(e1)) if e0 > ROUNDOFF && e1 > ROUNDOFF => {
                        Some((e0 / e1).ln() / (w[0].h / w[1].h).ln())
                    }
                    _ => None,
                })
                .collect();
            let logs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
            let slack_slope = least_squares_slope(&logs, &slacks);
            RefinementGroup {
                key: key.to_string(),
                slack_monotone: slacks.windows(2).all(|w| w[1] <= w[0]),
                warning: slack_slope.is_some_and(|s| s < 0.0),
                hs,
                errors,
                orders,
                slacks,
                slack_slope,
            }
        })
        .collect();
    RefinementSummary { groups }
}

/// Compares at least two CSVs whose rows share the same configurations.
pub fn compare_runs<P: AsRef<Path>>(paths: &[P]) -> Result<RefinementSummary, HarnessError> {
    if paths.len() < 2 {
        return Err(HarnessError::Compare(
            "compare needs at least two CSV files".into(),
        ));
    }
    let mut all = Vec::new();
    let mut reference: Option<(String, Vec<String>)> = None;
    for p in paths {
        let rows = read_rows(p.as_ref())?;
        let mut keys: Vec<String> = rows.iter().map(|r| r.key.clone()).collect();
        keys.sort();
        keys.dedup();
        match &reference {
            None => reference = Some((p.as_ref().display().to_string(), keys)),
            Some((first, expected)) if *expected != keys => {
                return Err(HarnessError::Compare(format!(
                    "mismatched configurations between {first} and {}",
                    p.as_ref().display()
                )));
            }
            Some(_) => {}
        }
        all.extend(rows);
    }
    Ok(summarize(&all))
}
