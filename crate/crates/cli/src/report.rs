use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use capprice::bounds::BoundCertificate;
use capprice::rational::{to_decimal, to_exact};
use capprice::Rational;

pub const DECIMAL_PLACES: u32 = 12;

#[derive(Clone, Copy)]
enum Kind {
    Text,
    Number,
}

pub enum Cell {
    Text(String),
    Number(Rational),
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<Rational> for Cell {
    fn from(r: Rational) -> Self {
        Cell::Number(r)
    }
}

impl From<&Rational> for Cell {
    fn from(r: &Rational) -> Self {
        Cell::Number(r.clone())
    }
}

impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Text(n.to_string())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// A summary block followed by one CSV table. Numeric columns expand to an
/// exact `p/q` column and a `_decimal` column.
pub struct Report {
    summary: Vec<String>,
    columns: Vec<(String, Kind)>,
    rows: Vec<Vec<Cell>>,
}

impl Report {
    pub fn new() -> Self {
        Self {
            summary: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
        }
    }

    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.summary.push(text.into());
        self
    }

    pub fn value(&mut self, key: &str, value: &Rational) -> &mut Self {
        self.line(format!("{key}: {}", show(value)))
    }

    pub fn text_column(&mut self, name: &str) -> &mut Self {
        self.columns.push((name.to_owned(), Kind::Text));
        self
    }

    pub fn number_column(&mut self, name: &str) -> &mut Self {
        self.columns.push((name.to_owned(), Kind::Number));
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn certificate_columns(&mut self) -> &mut Self {
        self.text_column("certificate")
            .text_column("status")
            .number_column("lhs")
            .text_column("relation")
            .number_column("rhs")
            .number_column("margin")
            .text_column("vacuous")
            .text_column("witness")
            .text_column("note")
    }

    pub fn certificate(&mut self, cert: &BoundCertificate) {
        self.line(cert.to_string());
        let witness = cert
            .witness
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ");
        self.row(vec![
            cert.name.as_str().into(),
            cert.status.to_string().into(),
            (&cert.lhs).into(),
            cert.relation.to_string().into(),
            (&cert.rhs).into(),
            cert.margin().into(),
            cert.vacuous.into(),
            witness.into(),
            cert.note.clone().unwrap_or_default().into(),
        ]);
    }

    fn header(&self) -> Vec<String> {
        self.columns
            .iter()
            .flat_map(|(name, kind)| match kind {
                Kind::Text => vec![name.clone()],
                Kind::Number => vec![name.clone(), format!("{name}_decimal")],
            })
            .collect()
    }

    fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(self.header())?;
        for row in &self.rows {
            let fields = row.iter().flat_map(|cell| match cell {
                Cell::Text(s) => vec![s.clone()],
                Cell::Number(r) => vec![to_exact(r), to_decimal(r, DECIMAL_PLACES)],
            });
            w.write_record(fields)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Summary to stdout, then the table to `csv_path` or, failing that,
    /// to stdout after a blank line.
    pub fn emit(&self, csv_path: Option<&Path>) -> Result<()> {
        let stdout = std::io::stdout();
        let mut out = stdout.lock();
        for line in &self.summary {
            writeln!(out, "{line}")?;
        }
        if self.columns.is_empty() {
            return Ok(());
        }
        match csv_path {
            Some(path) => {
                let file = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
                self.write_csv(std::io::BufWriter::new(file))?;
                writeln!(out, "table written to {}", path.display())?;
            }
            None => {
                writeln!(out)?;
                self.write_csv(&mut out)?;
            }
        }
        Ok(())
    }
}

pub fn show(value: &Rational) -> String {
    let exact = to_exact(value);
    if value.is_integer() {
        exact
    } else {
        format!("{exact} ({})", to_decimal(value, DECIMAL_PLACES))
    }
}
