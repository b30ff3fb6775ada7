use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs;
use std::path::Path;

use super::{Column, ColumnKind, Dataset};
use crate::error::{Error, Result};

pub const DEFAULT_ID_COLUMN: &str = "Id";
pub const DEFAULT_LABEL_COLUMN: &str = "Response";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnRole {
    Id,
    Label,
    Feature(ColumnKind),
}

impl ColumnRole {
    fn parse(s: &str) -> Option<Self> {
        Some(match s.trim().to_ascii_lowercase().as_str() {
            "id" => ColumnRole::Id,
            "label" | "response" => ColumnRole::Label,
            "numeric" => ColumnRole::Feature(ColumnKind::Numeric),
            "categorical" => ColumnRole::Feature(ColumnKind::Categorical),
            "date" => ColumnRole::Feature(ColumnKind::Date),
            _ => return None,
        })
    }

    fn as_str(self) -> &'static str {
        match self {
            ColumnRole::Id => "id",
            ColumnRole::Label => "label",
            ColumnRole::Feature(k) => k.as_str(),
        }
    }
}

/// Column-type tags for CSV ingestion.
///
/// Columns not listed are numeric features, except that `Id` and `Response`
/// default to the id and label roles.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schema {
    roles: Vec<(String, ColumnRole)>,
}

impl Schema {
    pub fn new() -> Self {
        Schema::default()
    }

    pub fn with(mut self, name: impl Into<String>, role: ColumnRole) -> Self {
        self.roles.push((name.into(), role));
        self
    }

    /// Schema that reproduces `d` when used to read its `save_csv` output.
    pub fn for_dataset(d: &Dataset) -> Self {
        let mut s = Schema::new().with(DEFAULT_ID_COLUMN, ColumnRole::Id);
        for c in d.columns() {
            s = s.with(c.name.clone(), ColumnRole::Feature(c.kind));
        }
        if d.labels().is_some() {
            s = s.with(DEFAULT_LABEL_COLUMN, ColumnRole::Label);
        }
        s
    }

    /// Reads `name,role` lines; `#` starts a comment.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut s = Schema::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (name, role) = line.rsplit_once(',').ok_or_else(|| Error::Parse {
                line: n as u64 + 1,
                message: "expected `name,role`".into(),
            })?;
            let role = ColumnRole::parse(role).ok_or_else(|| Error::Parse {
                line: n as u64 + 1,
                message: format!("unknown column role `{}`", role.trim()),
            })?;
            s.roles.push((name.trim().to_string(), role));
        }
        Ok(s)
    }

    pub fn to_text(&self) -> String {
        self.roles
            .iter()
            .map(|(n, r)| format!("{n},{}\n", r.as_str()))
            .collect()
    }

    fn role_of(&self, name: &str) -> ColumnRole {
        if let Some((_, r)) = self.roles.iter().find(|(n, _)| n == name) {
            return *r;
        }
        match name {
            DEFAULT_ID_COLUMN => ColumnRole::Id,
            DEFAULT_LABEL_COLUMN => ColumnRole::Label,
            _ => ColumnRole::Feature(ColumnKind::Numeric),
        }
    }
}

fn is_na(field: &str) -> bool {
    let f = field.trim();
    f.is_empty() || f == "NA"
}

/// Load a headered CSV file. Empty fields and `NA` are missing values.
pub fn load_csv(path: &Path, schema: &Schema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for h in &header {
        if !seen.insert(h.as_str()) {
            return Err(Error::Parse {
                line: 1,
                message: format!("duplicate column name `{h}`"),
            });
        }
    }
    let roles: Vec<ColumnRole> = header.iter().map(|h| schema.role_of(h)).collect();
    if roles.iter().filter(|r| **r == ColumnRole::Id).count() > 1 {
        return Err(Error::Config("more than one id column".into()));
    }
    if roles.iter().filter(|r| **r == ColumnRole::Label).count() > 1 {
        return Err(Error::Config("more than one label column".into()));
    }
    let feature_pos: Vec<usize> = (0..header.len())
        .filter(|&j| matches!(roles[j], ColumnRole::Feature(_)))
        .collect();
    let has_id = roles.contains(&ColumnRole::Id);
    let has_label = roles.contains(&ColumnRole::Label);

    let mut ids = Vec::new();
    let mut labels = Vec::new();
    let mut values: Vec<Option<f64>> = Vec::new();
    // Raw level strings per categorical feature, resolved to codes at the end.
    let mut raw_levels: HashMap<usize, Vec<Option<String>>> = HashMap::new();

    for (row_idx, record) in reader.records().enumerate() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(row_idx as u64 + 2);
        if record.len() != header.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (j, field) in record.iter().enumerate() {
            match roles[j] {
                ColumnRole::Id => {
                    let id = field.trim().parse::<i64>().map_err(|_| Error::Parse {
                        line,
                        message: format!("invalid id `{field}`"),
                    })?;
                    ids.push(id);
                }
                ColumnRole::Label => {
                    let y = match field.trim() {
                        "0" => 0u8,
                        "1" => 1u8,
                        other => {
                            return Err(Error::Parse {
                                line,
                                message: format!("label `{other}` is not 0 or 1"),
                            })
                        }
                    };
                    labels.push(y);
                }
                ColumnRole::Feature(ColumnKind::Categorical) => {
                    let level = (!is_na(field)).then(|| field.trim().to_string());
                    raw_levels.entry(j).or_default().push(level);
                    values.push(None);
                }
                ColumnRole::Feature(_) => {
                    let v = if is_na(field) {
                        None
                    } else {
                        Some(field.trim().parse::<f64>().map_err(|_| Error::Parse {
                            line,
                            message: format!(
                                "non-numeric value `{field}` in column `{}`",
                                header[j]
                            ),
                        })?)
                    };
                    values.push(v);
                }
            }
        }
        if !has_id {
            ids.push(row_idx as i64);
        }
    }

    let n_rows = ids.len();
    let p = feature_pos.len();
    let mut columns = Vec::with_capacity(p);
    for (k, &j) in feature_pos.iter().enumerate() {
        let ColumnRole::Feature(kind) = roles[j] else {
            unreachable!()
        };
        if kind == ColumnKind::Categorical {
            let raw = raw_levels.remove(&j).unwrap_or_default();
            let levels: Vec<String> = raw
                .iter()
                .flatten()
                .cloned()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect();
            for (i, lvl) in raw.iter().enumerate() {
                values[i * p + k] = lvl
                    .as_ref()
                    .map(|s| levels.binary_search(s).expect("level collected") as f64);
            }
            columns.push(Column::categorical(header[j].clone(), levels));
        } else {
            columns.push(Column {
                name: header[j].clone(),
                kind,
                levels: Vec::new(),
            });
        }
    }
    debug_assert_eq!(values.len(), n_rows * p);
    Dataset::from_flat(ids, columns, values, has_label.then_some(labels))
}

/// Write `d` as CSV: `Id`, the feature columns, then `Response` when labeled.
/// Floats use the shortest representation that parses back to the same bits.
pub fn save_csv(d: &Dataset, path: &Path) -> Result<()> {
    fs::write(path, dataset_to_csv(d)?).map_err(|e| Error::io(path, e))
}

/// The text [`save_csv`] writes.
pub fn dataset_to_csv(d: &Dataset) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec![DEFAULT_ID_COLUMN.to_string()];
    header.extend(d.column_names());
    if d.labels().is_some() {
        header.push(DEFAULT_LABEL_COLUMN.to_string());
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for i in 0..d.n_rows() {
        record.clear();
        record.push(d.ids()[i].to_string());
        for (j, c) in d.columns().iter().enumerate() {
            record.push(match d.value(i, j) {
                None => String::new(),
                Some(v) if c.kind == ColumnKind::Categorical => c.levels[v as usize].clone(),
                Some(v) => format!("{v}"),
            });
        }
        if let Some(l) = d.labels() {
            record.push(l[i].to_string());
        }
        w.write_record(&record)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}
