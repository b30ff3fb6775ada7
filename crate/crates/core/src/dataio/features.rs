use super::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};

/// Per-row span between the latest and earliest non-NA date among
/// `date_columns`. Rows with no dates are NA.
pub fn time_on_line<S: AsRef<str>>(d: &Dataset, date_columns: &[S]) -> Result<Vec<Option<f64>>> {
    if date_columns.is_empty() {
        return Err(Error::Config("time_on_line needs at least one date column".into()));
    }
    let mut idx = Vec::with_capacity(date_columns.len());
    for name in date_columns {
        let j = d.column_index(name.as_ref())?;
        if d.columns()[j].kind != ColumnKind::Date {
            return Err(Error::Config(format!(
                "column `{}` is not a date column",
                name.as_ref()
            )));
        }
        idx.push(j);
    }
    Ok((0..d.n_rows())
        .map(|i| {
            let row = d.row(i);
            let mut span: Option<(f64, f64)> = None;
            for v in idx.iter().filter_map(|&j| row[j]) {
                span = Some(match span {
                    None => (v, v),
                    Some((lo, hi)) => (lo.min(v), hi.max(v)),
                });
            }
            span.map(|(lo, hi)| hi - lo)
        })
        .collect())
}

/// One-hot encode every categorical column and, when date columns exist,
/// append a `time_on_line` feature.
pub fn prepare_features(d: &Dataset) -> Result<Dataset> {
    let names_of = |d: &Dataset, kind: ColumnKind| -> Vec<String> {
        d.columns().iter().filter(|c| c.kind == kind).map(|c| c.name.clone()).collect()
    };
    let cats = names_of(d, ColumnKind::Categorical);
    let mut out = if cats.is_empty() { d.clone() } else { one_hot(d, &cats)? };
    let dates = names_of(&out, ColumnKind::Date);
    if !dates.is_empty() && out.column_index(TIME_ON_LINE).is_err() {
        let tol = time_on_line(&out, &dates)?;
        out.push_column(Column::numeric(TIME_ON_LINE), tol)?;
    }
    Ok(out)
}

pub const TIME_ON_LINE: &str = "time_on_line";

/// Replace each named categorical column by one 0/1 indicator column per
/// observed level, named `<col>=<level>`, in lexicographic level order.
/// NA rows get all-zero indicators.
pub fn one_hot<S: AsRef<str>>(d: &Dataset, cat_columns: &[S]) -> Result<Dataset> {
    let mut targets = Vec::with_capacity(cat_columns.len());
    for name in cat_columns {
        let j = d.column_index(name.as_ref())?;
        if d.columns()[j].kind != ColumnKind::Categorical {
            return Err(Error::Config(format!(
                "column `{}` is not categorical",
                name.as_ref()
            )));
        }
        targets.push(j);
    }

    // Only levels that actually occur get a column.
    let observed: Vec<Vec<bool>> = d
        .columns()
        .iter()
        .enumerate()
        .map(|(j, c)| {
            let mut seen = vec![false; c.levels.len()];
            if targets.contains(&j) {
                for i in 0..d.n_rows() {
                    if let Some(code) = d.value(i, j) {
                        seen[code as usize] = true;
                    }
                }
            }
            seen
        })
        .collect();

    let mut columns = Vec::new();
    for (j, c) in d.columns().iter().enumerate() {
        if targets.contains(&j) {
            for (k, level) in c.levels.iter().enumerate() {
                if observed[j][k] {
                    columns.push(Column::numeric(format!("{}={}", c.name, level)));
                }
            }
        } else {
            columns.push(c.clone());
        }
    }

    let mut values = Vec::with_capacity(d.n_rows() * columns.len());
    for i in 0..d.n_rows() {
        let row = d.row(i);
        for (j, c) in d.columns().iter().enumerate() {
            if targets.contains(&j) {
                let code = row[j].map(|v| v as usize);
                for k in (0..c.levels.len()).filter(|&k| observed[j][k]) {
                    values.push(Some(if code == Some(k) { 1.0 } else { 0.0 }));
                }
            } else {
                values.push(row[j]);
            }
        }
    }
    Dataset::from_flat(
        d.ids().to_vec(),
        columns,
        values,
        d.labels().map(|l| l.to_vec()),
    )
}
