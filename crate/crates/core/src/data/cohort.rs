use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::schema::{FeatureKind, FeatureSpec, Schema};
use super::DataError;

/// One patient: per-feature values (`None` = missing) and the outcome
/// (`Some(true)` = death, `None` = unknown, for scoring-only records).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatientRecord {
    pub values: Vec<Option<f64>>,
    pub label: Option<bool>,
}

impl PatientRecord {
    pub fn new(values: Vec<Option<f64>>, label: Option<bool>) -> Self {
        Self { values, label }
    }

    pub fn complete(values: &[f64], label: Option<bool>) -> Self {
        Self { values: values.iter().copied().map(Some).collect(), label }
    }

    pub fn is_complete(&self) -> bool {
        self.values.iter().all(Option::is_some)
    }

    /// Values of a complete record.
    pub fn dense(&self) -> Option<Vec<f64>> {
        self.values.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cohort {
    pub schema: Schema,
    pub records: Vec<PatientRecord>,
}

impl Cohort {
    /// Builds a cohort, checking every record against the schema.
    pub fn new(schema: Schema, records: Vec<PatientRecord>) -> Result<Self, DataError> {
        schema.validate()?;
        for (i, r) in records.iter().enumerate() {
            check_record(&schema, r).map_err(|message| DataError::Record { index: i, message })?;
        }
        Ok(Self { schema, records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Labels of all records; errors if any is unknown.
    pub fn labels(&self) -> Result<Vec<bool>, DataError> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.label
                    .ok_or_else(|| DataError::Precondition(format!("record {i} has no outcome label")))
            })
            .collect()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label == Some(true)).count()
    }

    /// Fraction of labeled records with outcome 1.
    pub fn prevalence(&self) -> f64 {
        let labeled = self.records.iter().filter(|r| r.label.is_some()).count();
        if labeled == 0 {
            0.0
        } else {
            self.positives() as f64 / labeled as f64
        }
    }

    pub fn subset(&self, indices: &[usize]) -> Cohort {
        Cohort {
            schema: self.schema.clone(),
            records: indices.iter().map(|&i| self.records[i].clone()).collect(),
        }
    }

    /// Row-major matrix of a complete cohort.
    pub fn matrix(&self) -> Result<Vec<Vec<f64>>, DataError> {
        self.records
            .iter()
            .enumerate()
            .map(|(i, r)| {
                r.dense()
                    .ok_or_else(|| DataError::Precondition(format!("record {i} has missing values")))
            })
            .collect()
    }

    pub fn column(&self, j: usize) -> Vec<Option<f64>> {
        self.records.iter().map(|r| r.values[j]).collect()
    }
}

pub(crate) fn check_record(schema: &Schema, r: &PatientRecord) -> Result<(), String> {
    if r.values.len() != schema.len() {
        return Err(format!("{} values for {} features", r.values.len(), schema.len()));
    }
    for (f, v) in schema.features.iter().zip(&r.values) {
        if let Some(v) = v {
            f.check_value(*v)?;
        }
    }
    Ok(())
}

/// Reads a comma-separated cohort whose header names the schema features
/// (any order) plus the label column. Empty cells are missing.
pub fn read_cohort<R: Read>(reader: R, schema: &Schema) -> Result<Cohort, DataError> {
    schema.validate()?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let header = rdr.headers()?.clone();

    let mut column_of = vec![None; schema.len()];
    let mut label_col = None;
    for (c, name) in header.iter().enumerate() {
        if name == schema.label {
            label_col = Some(c);
        } else if let Some(j) = schema.index_of(name) {
            column_of[j] = Some(c);
        } else {
            return Err(DataError::UnknownColumn(name.to_string()));
        }
    }
    let column_of: Vec<usize> = column_of
        .into_iter()
        .enumerate()
        .map(|(j, c)| c.ok_or_else(|| DataError::MissingColumn(schema.features[j].name.clone())))
        .collect::<Result<_, _>>()?;

    let mut records = Vec::new();
    for (i, row) in rdr.records().enumerate() {
        let row = row?;
        // data rows are numbered from 1, after the header
        let line = i + 1;
        let mut values = Vec::with_capacity(schema.len());
        for (f, &c) in schema.features.iter().zip(&column_of) {
            let cell = row.get(c).unwrap_or("");
            let v = f
                .parse_cell(cell)
                .map_err(|message| DataError::Cell { row: line, column: f.name.clone(), message })?;
            values.push(v);
        }
        let label = match label_col.and_then(|c| row.get(c)).unwrap_or("").trim() {
            "" => None,
            "0" => Some(false),
            "1" => Some(true),
            other => {
                return Err(DataError::Cell {
                    row: line,
                    column: schema.label.clone(),
                    message: format!("label must be 0, 1 or empty, got {other:?}"),
                })
            }
        };
        records.push(PatientRecord { values, label });
    }
    Ok(Cohort { schema: schema.clone(), records })
}

pub fn load_cohort(path: impl AsRef<Path>, schema: &Schema) -> Result<Cohort, DataError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    read_cohort(file, schema)
}

/// Writes a cohort in the same format [`read_cohort`] accepts.
pub fn write_cohort<W: Write>(cohort: &Cohort, writer: W) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = cohort.schema.features.iter().map(|f| f.name.as_str()).collect();
    header.push(&cohort.schema.label);
    w.write_record(&header)?;
    for r in &cohort.records {
        let mut row: Vec<String> = cohort
            .schema
            .features
            .iter()
            .zip(&r.values)
            .map(|(f, v)| match v {
                None => String::new(),
                Some(v) if f.kind.is_categorical() && !f.levels.is_empty() => f.levels[*v as usize].clone(),
                Some(v) => format!("{v}"),
            })
            .collect();
        row.push(match r.label {
            None => String::new(),
            Some(true) => "1".into(),
            Some(false) => "0".into(),
        });
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| DataError::Csv(e.into()))?;
    Ok(())
}

/// Replaces every nominal feature with one binary column per level, named
/// `feature=level`. A missing nominal value becomes missing in every dummy.
pub fn one_hot_expand(cohort: &Cohort) -> Cohort {
    if !cohort.schema.features.iter().any(|f| f.kind == FeatureKind::Nominal) {
        return cohort.clone();
    }
    let mut features = Vec::new();
    for f in &cohort.schema.features {
        if f.kind == FeatureKind::Nominal {
            for level in &f.levels {
                features.push(FeatureSpec {
                    name: format!("{}={}", f.name, level),
                    kind: FeatureKind::Binary,
                    levels: Vec::new(),
                    dummy_of: Some(f.name.clone()),
                });
            }
        } else {
            features.push(f.clone());
        }
    }
    let records = cohort
        .records
        .iter()
        .map(|r| PatientRecord { values: expand_values(&cohort.schema, &r.values), label: r.label })
        .collect();
    Cohort { schema: Schema { label: cohort.schema.label.clone(), features }, records }
}

pub(crate) fn expand_values(schema: &Schema, values: &[Option<f64>]) -> Vec<Option<f64>> {
    let mut out = Vec::with_capacity(values.len());
    for (f, v) in schema.features.iter().zip(values) {
        if f.kind == FeatureKind::Nominal {
            for l in 0..f.levels.len() {
                out.push(v.map(|v| if v as usize == l { 1.0 } else { 0.0 }));
            }
        } else {
            out.push(*v);
        }
    }
    out
}

/// Inverse of [`one_hot_expand`]: folds each run of dummy columns back into
/// its nominal feature. A group with any missing dummy, or without exactly
/// one active dummy, collapses to missing.
pub fn collapse_one_hot(cohort: &Cohort) -> Cohort {
    if !cohort.schema.features.iter().any(|f| f.dummy_of.is_some()) {
        return cohort.clone();
    }
    // (source feature, columns)
    let mut groups: Vec<(FeatureSpec, Vec<usize>)> = Vec::new();
    for (j, f) in cohort.schema.features.iter().enumerate() {
        match &f.dummy_of {
            Some(src) => {
                let level = f.name.strip_prefix(&format!("{src}=")).unwrap_or(&f.name).to_string();
                match groups.last_mut() {
                    Some((g, cols)) if g.kind == FeatureKind::Nominal && &g.name == src => {
                        g.levels.push(level);
                        cols.push(j);
                    }
                    _ => groups.push((FeatureSpec::nominal(src.clone(), [level]), vec![j])),
                }
            }
            None => groups.push((f.clone(), vec![j])),
        }
    }
    let records = cohort
        .records
        .iter()
        .map(|r| {
            let values = groups
                .iter()
                .map(|(g, cols)| {
                    if g.kind != FeatureKind::Nominal {
                        return r.values[cols[0]];
                    }
                    let dummies: Option<Vec<f64>> = cols.iter().map(|&c| r.values[c]).collect();
                    let dummies = dummies?;
                    let active: Vec<usize> = (0..dummies.len()).filter(|&l| dummies[l] == 1.0).collect();
                    (active.len() == 1).then(|| active[0] as f64)
                })
                .collect();
            PatientRecord { values, label: r.label }
        })
        .collect();
    Cohort {
        schema: Schema { label: cohort.schema.label.clone(), features: groups.into_iter().map(|(g, _)| g).collect() },
        records,
    }
}
