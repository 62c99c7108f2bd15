//! Flat numeric tables written as CSV or JSON.
//!
//! Numbers are printed with 17 significant digits (`{:.16e}`), which
//! round-trips every `f64`. A missing value is an empty CSV field and a JSON
//! `null`. Lines end in LF.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    header: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

impl SweepTable {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self { header: header.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    /// Append a row. Panics if the row width differs from the header.
    pub fn push(&mut self, row: Vec<Option<f64>>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match header");
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: SweepTable) {
        assert_eq!(self.header, other.header);
        self.rows.extend(other.rows);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn rows(&self) -> &[Vec<Option<f64>>] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let idx = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }

    /// Keep only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Option<SweepTable> {
        let idx: Vec<usize> = names.iter().map(|n| self.header.iter().position(|h| h == n)).collect::<Option<_>>()?;
        Some(SweepTable {
            header: names.iter().map(|s| s.to_string()).collect(),
            rows: self.rows.iter().map(|r| idx.iter().map(|&i| r[i]).collect()).collect(),
        })
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, cell) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                if let Some(x) = cell.filter(|x| x.is_finite()) {
                    out.push_str(&format_number(x));
                }
            }
            out.push('\n');
        }
        out
    }

    /// Array of flat objects, one per row.
    pub fn to_json(&self) -> String {
        let mut out = String::from("[");
        for (k, row) in self.rows.iter().enumerate() {
            out.push_str(if k == 0 { "\n  {" } else { ",\n  {" });
            for (i, (name, cell)) in self.header.iter().zip(row).enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                let value = match cell.filter(|x| x.is_finite()) {
                    Some(x) => format_number(x),
                    None => "null".to_string(),
                };
                // header names are plain identifiers; no escaping needed
                let _ = write!(out, "\"{name}\": {value}");
            }
            out.push('}');
        }
        out.push_str(if self.rows.is_empty() { "]\n" } else { "\n]\n" });
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = SweepTable::new(["a", "b"]);
        t.push(vec![Some(0.5), None]);
        t.push(vec![Some(-1.0 / 3.0), Some(0.0)]);
        assert_eq!(t.to_csv(), "a,b\n5.0000000000000000e-1,\n-3.3333333333333331e-1,0.0000000000000000e0\n");
    }

    #[test]
    fn json_layout() {
        let mut t = SweepTable::new(["x", "y"]);
        t.push(vec![Some(2.0), None]);
        assert_eq!(t.to_json(), "[\n  {\"x\": 2.0000000000000000e0, \"y\": null}\n]\n");
        assert_eq!(SweepTable::new(["x"]).to_json(), "[]\n");
    }

    #[test]
    fn select_columns() {
        let mut t = SweepTable::new(["a", "b", "c"]);
        t.push(vec![Some(1.0), Some(2.0), Some(3.0)]);
        let s = t.select(&["c", "a"]).unwrap();
        assert_eq!(s.header(), ["c", "a"]);
        assert_eq!(s.rows()[0], vec![Some(3.0), Some(1.0)]);
        assert!(t.select(&["zzz"]).is_none());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn numbers_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
                let s = format_number(x);
                prop_assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits());
            }
        }
    }
}
