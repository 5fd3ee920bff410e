//! Plain-text reports and CSV slices.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use fracmax_core::spectral::VectorField3;

use crate::error::{CliError, CliResult};

/// Ordered `key = value` lines.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    lines: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn put(&mut self, key: impl Into<String>, value: impl Display) -> &mut Self {
        self.lines.push((key.into(), value.to_string()));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, value: f64) -> &mut Self {
        self.put(key, fmt_f64(value))
    }

    pub fn list(&mut self, key: impl Into<String>, values: &[f64]) -> &mut Self {
        let joined = values.iter().map(|v| fmt_f64(*v)).collect::<Vec<_>>().join(",");
        self.put(key, joined)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.lines.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.lines {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.render()).map_err(|e| CliError::io(path, e))
    }

    /// Parses the rendered form back.
    pub fn parse(text: &str) -> Self {
        let lines = text
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        Self { lines }
    }
}

/// Shortest round-trip representation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

/// 17 significant digits.
pub fn fmt_csv(v: f64) -> String {
    format!("{v:.16e}")
}

/// `|v|` and components on the plane `z = z_center`, one row per `(x, y)`.
pub fn write_slice_csv(path: &Path, v: &VectorField3) -> CliResult<()> {
    let grid = v.grid();
    let n = grid.n();
    let kz = n / 2;
    let mut out = String::from("x,y,abs,re0,im0,re1,im1,re2,im2\n");
    for j in 0..n {
        for i in 0..n {
            let idx = grid.index(i, j, kz);
            let p = grid.point(idx);
            let c = v.at(idx);
            let abs = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            let mut row = vec![fmt_csv(p[0]), fmt_csv(p[1]), fmt_csv(abs)];
            for z in c {
                row.push(fmt_csv(z.re));
                row.push(fmt_csv(z.im));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
    }
    let mut f = std::fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_round_trip() {
        let mut r = Report::new();
        r.put("command", "solve").num("tol", 1e-8).list("history", &[1.0, 0.5]);
        let back = Report::parse(&r.render());
        assert_eq!(back, r);
        assert_eq!(back.get("tol"), Some("1e-8"));
        assert_eq!(back.get("history"), Some("1e0,5e-1"));
    }

    #[test]
    fn csv_digits() {
        let s = fmt_csv(0.1);
        let mantissa = s.split('e').next().unwrap().replace(['.', '-'], "");
        assert_eq!(mantissa.len(), 17);
        assert_eq!(s.parse::<f64>().unwrap(), 0.1);
    }
}
