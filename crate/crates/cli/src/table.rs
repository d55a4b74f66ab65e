//! Report tables written in CSV and Markdown form.

use std::fmt::Write as _;
use std::path::Path;

use hrisk_core::data::CSV_SIG_DIGITS;
use hrisk_core::stats::fmt_sig;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Text(s) => s.clone(),
            Self::Num(v) => fmt_sig(*v, CSV_SIG_DIGITS),
            Self::Int(v) => v.to_string(),
        }
    }

    fn markdown(&self, digits: usize) -> String {
        match self {
            Self::Text(s) => s.replace('|', "\\|"),
            Self::Num(v) if v.is_finite() => format!("{v:.digits$}"),
            Self::Num(v) => v.to_string(),
            Self::Int(v) => v.to_string(),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Self::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Self::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub title: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
    /// Decimal places for numeric cells in Markdown.
    pub digits: usize,
}

impl Table {
    pub fn new(title: impl Into<String>, header: &[&str]) -> Self {
        Self {
            title: title.into(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
            digits: 3,
        }
    }

    pub fn with_header(title: impl Into<String>, header: Vec<String>) -> Self {
        Self {
            title: title.into(),
            header,
            rows: Vec::new(),
            notes: Vec::new(),
            digits: 3,
        }
    }

    pub fn digits(mut self, d: usize) -> Self {
        self.digits = d;
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn note(&mut self, n: impl Into<String>) {
        self.notes.push(n.into());
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for r in &self.rows {
            w.write_record(r.iter().map(Cell::csv))
                .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
    }

    pub fn to_markdown(&self) -> String {
        let mut s = format!("## {}\n\n| {} |\n|", self.title, self.header.join(" | "));
        s.push_str(&"---|".repeat(self.header.len()));
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|c| c.markdown(self.digits)).collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
        if !self.notes.is_empty() {
            s.push('\n');
            for n in &self.notes {
                let _ = writeln!(s, "{n}");
            }
        }
        s
    }

    /// Write `<stem>.csv` and `<stem>.md` into `dir`.
    pub fn write(&self, dir: &Path, stem: &str) -> std::io::Result<()> {
        std::fs::write(dir.join(format!("{stem}.csv")), self.to_csv())?;
        std::fs::write(dir.join(format!("{stem}.md")), self.to_markdown())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_keeps_full_precision_markdown_rounds() {
        let mut t = Table::new("T", &["name", "value", "n"]);
        t.push(vec!["a,b".into(), (1.0 / 3.0).into(), 5usize.into()]);
        assert_eq!(t.to_csv(), "name,value,n\n\"a,b\",0.333333333333,5\n");
        assert!(t.to_markdown().contains("| a,b | 0.333 | 5 |"));
    }
}
