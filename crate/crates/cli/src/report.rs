use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};

/// Flags that make a run exit with code 2.
pub const FAILING_FLAGS: [&str; 4] = [
    "BCJR-infeasible",
    "not-converged",
    "out-of-tolerance",
    "bracket-missed",
];

/// One line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub value: f64,
    pub reference: Option<f64>,
    pub abs_error: Option<f64>,
    pub flags: Vec<String>,
}

impl ReportRow {
    pub fn new(label: impl Into<String>, value: f64) -> Self {
        Self {
            label: label.into(),
            value,
            reference: None,
            abs_error: None,
            flags: Vec::new(),
        }
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self.abs_error = Some((self.value - reference).abs());
        self
    }

    pub fn flag(mut self, flag: impl Into<String>) -> Self {
        self.flags.push(flag.into());
        self
    }

    pub fn flag_if(self, cond: bool, flag: &str) -> Self {
        if cond {
            self.flag(flag)
        } else {
            self
        }
    }

    pub fn is_failing(&self) -> bool {
        self.flags
            .iter()
            .any(|f| FAILING_FLAGS.contains(&f.as_str()))
    }
}

/// `x` with 9 significant digits, fixed-point when the exponent allows.
pub fn sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 {
            "0.00000000".into()
        } else {
            x.to_string()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..9).contains(&exp) {
        format!("{:.*}", (8 - exp) as usize, x)
    } else {
        format!("{x:.8e}")
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(sig9).unwrap_or_else(|| "-".into())
}

/// Prints rows as an aligned table.
pub fn print_table(out: &mut dyn Write, rows: &[ReportRow]) -> Result<()> {
    let header = ["label", "value", "reference", "abs_error", "flags"];
    let body: Vec<[String; 5]> = rows
        .iter()
        .map(|r| {
            [
                r.label.clone(),
                sig9(r.value),
                cell(r.reference),
                cell(r.abs_error),
                r.flags.join(","),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for line in &body {
        for (w, c) in width.iter_mut().zip(line) {
            *w = (*w).max(c.chars().count());
        }
    }
    let print = |out: &mut dyn Write, cells: &[&str]| -> Result<()> {
        let line: Vec<String> = cells
            .iter()
            .zip(width)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        writeln!(out, "{}", line.join("  ").trim_end())?;
        Ok(())
    };
    print(out, &header)?;
    for line in &body {
        print(out, &line.iter().map(String::as_str).collect::<Vec<_>>())?;
    }
    Ok(())
}

/// Writes a header row and records, all numbers through [`sig9`].
pub fn write_csv(path: &Path, header: &[&str], records: &[Vec<String>]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(header)?;
    for r in records {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Report rows in CSV form.
pub fn rows_csv(path: &Path, rows: &[ReportRow]) -> Result<()> {
    let records: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.label.clone(),
                sig9(r.value),
                r.reference.map(sig9).unwrap_or_default(),
                r.abs_error.map(sig9).unwrap_or_default(),
                r.flags.join(";"),
            ]
        })
        .collect();
    write_csv(
        path,
        &["label", "value", "reference", "abs_error", "flags"],
        &records,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(sig9(0.188721875540867), "0.188721876");
        assert_eq!(sig9(0.6942419136306174), "0.694241914");
        assert_eq!(sig9(12.5), "12.5000000");
        assert_eq!(sig9(1.5e-7), "1.50000000e-7");
        assert_eq!(sig9(0.0), "0.00000000");
    }

    #[test]
    fn failing_flags() {
        let r = ReportRow::new("x", 1.0)
            .flag("non-global-certificate")
            .flag("periodic");
        assert!(!r.is_failing());
        assert!(r.flag("not-converged").is_failing());
    }
}
