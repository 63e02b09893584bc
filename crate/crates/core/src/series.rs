//! Time-major observation matrices and their CSV form.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// `n × d` observations, row `t` holding `(y_t, x1_t, ..., x{d−1}_t)` or any
/// other labelled set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    roles: Vec<String>,
}

/// Default column labels `y, x1, ..., x{d−1}`.
pub fn default_roles(d: usize) -> Vec<String> {
    (0..d)
        .map(|j| if j == 0 { "y".to_string() } else { format!("x{j}") })
        .collect()
}

impl SeriesMatrix {
    pub fn new(values: Vec<f64>, d: usize, roles: Vec<String>) -> Result<Self> {
        if d == 0 || !values.len().is_multiple_of(d) {
            return Err(Error::DimensionMismatch(format!(
                "{} values do not fill rows of width {d}",
                values.len()
            )));
        }
        if roles.len() != d {
            return Err(Error::DimensionMismatch(format!("{} roles for {d} columns", roles.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!(
                "non-finite value at row {}, column {}",
                i / d,
                i % d
            )));
        }
        let n = values.len() / d;
        if n == 0 {
            return Err(Error::TooFewObservations("series must have at least one row".into()));
        }
        Ok(SeriesMatrix { n, d, values, roles })
    }

    /// Rows labelled `y, x1, ...`.
    pub fn from_values(values: Vec<f64>, d: usize) -> Result<Self> {
        Self::new(values, d, default_roles(d))
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            if r.as_ref().len() != d {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            values.extend_from_slice(r.as_ref());
        }
        Self::from_values(values, d)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn roles(&self) -> &[String] {
        &self.roles
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.d..(t + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.rows().map(|r| r[j]).collect()
    }

    /// First column.
    pub fn y(&self) -> Vec<f64> {
        self.column(0)
    }

    pub fn get(&self, t: usize, j: usize) -> f64 {
        self.values[t * self.d + j]
    }

    /// Applies `f` to every row, producing a matrix of width `d_out`.
    pub fn map_rows<F>(&self, d_out: usize, roles: Vec<String>, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64], &mut [f64]),
    {
        let mut values = vec![0.0; self.n * d_out];
        for (src, dst) in self.rows().zip(values.chunks_exact_mut(d_out)) {
            f(src, dst);
        }
        Self::new(values, d_out, roles)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.roles)?;
        let mut record = Vec::with_capacity(self.d);
        for row in self.rows() {
            record.clear();
            record.extend(row.iter().map(|&v| format_g17(v)));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .has_headers(true)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_reader(input);
        let roles: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let d = roles.len();
        let mut values = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            if rec.len() != d {
                return Err(Error::Parse(format!("row {}: expected {d} fields", i + 1)));
            }
            for field in rec.iter() {
                values.push(
                    field
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("row {}: `{field}`: {e}", i + 1)))?,
                );
            }
        }
        Self::new(values, d, roles)
    }

    pub fn write_csv_file(&self, path: &Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(std::io::BufReader::new(f))
    }
}

/// Formats with 17 significant digits, `%.17g` style: positional notation
/// for decimal exponents in `[-5, 17)`, scientific otherwise, trailing zeros
/// dropped. Parsing the output recovers the exact `f64`.
pub fn format_g17(v: f64) -> String {
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    let negative = mantissa.starts_with('-');
    let digits: String = mantissa.chars().filter(|c| c.is_ascii_digit()).collect();
    let sign = if negative { "-" } else { "" };
    if (-5..17).contains(&exp) {
        let body = if exp >= 0 {
            let split = (exp + 1) as usize;
            let (int, frac) = digits.split_at(split);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int.to_string()
            } else {
                format!("{int}.{frac}")
            }
        } else {
            let zeros = "0".repeat((-exp - 1) as usize);
            format!("0.{zeros}{}", digits.trim_end_matches('0'))
        };
        format!("{sign}{body}")
    } else {
        let (lead, rest) = digits.split_at(1);
        let rest = rest.trim_end_matches('0');
        let frac = if rest.is_empty() { String::new() } else { format!(".{rest}") };
        let esign = if exp < 0 { '-' } else { '+' };
        format!("{sign}{lead}{frac}e{esign}{:02}", exp.abs())
    }
}
