//! Flat records written as CSV or JSON lines.

use std::io::Write;

use clap::ValueEnum;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(u64),
    Float(f64),
    Bool(bool),
    Text(String),
    Missing,
}

impl Field {
    pub fn opt_float(x: Option<f64>) -> Self {
        x.map_or(Field::Missing, Field::Float)
    }

    fn csv(&self) -> String {
        match self {
            Field::Int(i) => i.to_string(),
            Field::Float(x) => format!("{x:.16e}"),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => s.clone(),
            Field::Missing => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Field::Int(i) => i.to_string(),
            Field::Float(x) if x.is_finite() => serde_json::to_string(x).expect("finite float"),
            Field::Float(_) | Field::Missing => "null".into(),
            Field::Bool(b) => b.to_string(),
            Field::Text(s) => serde_json::to_string(s).expect("string"),
        }
    }
}

/// Ordered `(column, value)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record(pub Vec<(&'static str, Field)>);

impl Record {
    pub fn push(&mut self, key: &'static str, value: Field) -> &mut Self {
        self.0.push((key, value));
        self
    }

    pub fn extend(&mut self, other: Record) -> &mut Self {
        self.0.extend(other.0);
        self
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.0.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    pub fn columns(&self) -> Vec<&'static str> {
        self.0.iter().map(|(k, _)| *k).collect()
    }
}

/// Floats joined with `;`, for list-valued columns.
pub fn float_list(xs: &[f64]) -> Field {
    Field::Text(
        xs.iter()
            .map(|x| format!("{x:.16e}"))
            .collect::<Vec<_>>()
            .join(";"),
    )
}

pub fn write_records(
    out: &mut dyn Write,
    format: Format,
    records: &[Record],
) -> Result<(), CliError> {
    match format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(out);
            if let Some(first) = records.first() {
                w.write_record(first.columns())?;
            }
            for r in records {
                w.write_record(r.0.iter().map(|(_, v)| v.csv()))?;
            }
            w.flush()?;
        }
        Format::Jsonl => {
            for r in records {
                let body: Vec<String> =
                    r.0.iter()
                        .map(|(k, v)| {
                            format!("{}:{}", serde_json::to_string(k).expect("key"), v.json())
                        })
                        .collect();
                writeln!(out, "{{{}}}", body.join(","))?;
            }
        }
    }
    Ok(())
}
