//! Fixed-format tables rendered as CSV or aligned text.

/// Locale-independent fixed-point formatting; negative zero prints as zero.
pub fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].chars().all(|c| c == '0' || c == '.') {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    headers: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.headers.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    /// Columns padded to a common width; text left-aligned, numbers right-aligned.
    /// Headers follow the alignment of their column's first row.
    pub fn to_text(&self) -> String {
        let numeric = |c: &str| c.parse::<f64>().is_ok();
        let right: Vec<bool> =
            (0..self.headers.len()).map(|i| self.rows.first().is_some_and(|r| numeric(&r[i]))).collect();
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.headers[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String], header: bool| {
            let parts: Vec<String> = cells
                .iter()
                .zip(&widths)
                .zip(&right)
                .map(
                    |((c, &w), &r)| {
                        if (header && r) || (!header && numeric(c)) {
                            format!("{c:>w$}")
                        } else {
                            format!("{c:<w$}")
                        }
                    },
                )
                .collect();
            let mut l = parts.join("  ").trim_end().to_string();
            l.push('\n');
            l
        };
        let mut s = line(&self.headers, true);
        for r in &self.rows {
            s.push_str(&line(r, false));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_drops_negative_zero() {
        assert_eq!(fixed(-0.0001, 2), "0.00");
        assert_eq!(fixed(-1.256, 2), "-1.26");
        assert_eq!(fixed(3.0, 0), "3");
    }

    #[test]
    fn renders_csv_and_text() {
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["a".into(), "1.50".into()]);
        t.push(vec!["long-name".into(), "-12.00".into()]);
        assert_eq!(t.to_csv(), "name,value\na,1.50\nlong-name,-12.00\n");
        assert_eq!(t.to_text(), "name        value\na            1.50\nlong-name  -12.00\n");
    }
}
