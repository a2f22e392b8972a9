//! Comparison reports and their CSV rendering.

use std::fmt::Write as _;

/// One compared quantity. A row passes iff `|difference| ≤ tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub query: String,
    pub method_a: String,
    pub value_a: f64,
    pub method_b: String,
    pub value_b: f64,
    pub difference: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl Row {
    fn build(query: impl Into<String>, a: (&str, f64), b: (&str, f64), difference: f64, tolerance: f64) -> Self {
        let pass = difference.abs() <= tolerance;
        Self { query: query.into(), method_a: a.0.into(), value_a: a.1, method_b: b.0.into(), value_b: b.1, difference, tolerance, pass }
    }

    /// Absolute comparison, `difference = a − b`.
    pub fn absolute(query: impl Into<String>, a: (&str, f64), b: (&str, f64), tolerance: f64) -> Self {
        Self::build(query, a, b, a.1 - b.1, tolerance)
    }

    /// Relative comparison, `difference = (a − b)/b`.
    pub fn relative(query: impl Into<String>, a: (&str, f64), b: (&str, f64), tolerance: f64) -> Self {
        Self::build(query, a, b, (a.1 - b.1) / b.1, tolerance)
    }

    /// One-sided bound `value ≤ limit`; `difference` is the excess.
    pub fn at_most(query: impl Into<String>, a: (&str, f64), limit: f64) -> Self {
        let excess = if a.1.is_nan() { f64::NAN } else { (a.1 - limit).max(0.0) };
        Self::build(query, a, ("limit", limit), excess, 0.0)
    }

    /// Strict bound `value < limit`.
    pub fn below(query: impl Into<String>, a: (&str, f64), limit: f64) -> Self {
        let mut row = Self::at_most(query, a, limit);
        if a.1 >= limit {
            row.difference = a.1 - limit;
            row.pass = false;
        }
        row
    }

    /// Diagnostic row that never fails.
    pub fn info(query: impl Into<String>, a: (&str, f64), b: (&str, f64)) -> Self {
        Self::build(query, a, b, a.1 - b.1, f64::INFINITY)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub experiment: String,
    pub rows: Vec<Row>,
}

impl ComparisonReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self { experiment: experiment.into(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Row) {
        self.rows.push(row);
    }

    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn pass_count(&self) -> usize {
        self.rows.iter().filter(|r| r.pass).count()
    }

    /// Rows that failed, for messages.
    pub fn failures(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| !r.pass)
    }

    pub fn summary(&self) -> String {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        format!("{}: {verdict} ({}/{} rows)", self.experiment, self.pass_count(), self.rows.len())
    }

    /// Fixed-column CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("experiment,query,method_a,value_a,method_b,value_b,difference,tolerance,pass\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{:.16e},{},{:.16e},{:.16e},{:.16e},{}",
                self.experiment,
                csv_field(&r.query),
                csv_field(&r.method_a),
                r.value_a,
                csv_field(&r.method_b),
                r.value_b,
                r.difference,
                r.tolerance,
                r.pass
            )
            .unwrap();
        }
        s
    }

    /// Human-readable table.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            writeln!(
                s,
                "  [{}] {:<44} {}={:<12.6e} {}={:<12.6e} diff={:.3e} tol={:.1e}",
                if r.pass { "ok" } else { "FAIL" },
                r.query,
                r.method_a,
                r.value_a,
                r.method_b,
                r.value_b,
                r.difference,
                r.tolerance
            )
            .unwrap();
        }
        s
    }
}

/// Quotes a field when it contains a separator or quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_semantics() {
        assert!(Row::absolute("x", ("a", 1.0), ("b", 1.05), 0.1).pass);
        assert!(!Row::relative("x", ("a", 1.0), ("b", 1.5), 0.1).pass);
        assert!(Row::at_most("x", ("a", -1.0), 0.0).pass);
        assert!(!Row::at_most("x", ("a", f64::NAN), 0.0).pass);
        assert!(!Row::below("x", ("a", 0.0), 0.0).pass);
        assert!(Row::info("x", ("a", 1e9), ("b", 0.0)).pass);
    }

    #[test]
    fn csv_is_fixed_format() {
        let mut rep = ComparisonReport::new("demo");
        rep.push(Row::absolute("y=(0,0)", ("a", 0.1), ("b", 0.1), 1e-3));
        let csv = rep.to_csv();
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "demo,\"y=(0,0)\",a,1.0000000000000001e-1,b,1.0000000000000001e-1,0.0000000000000000e0,1.0000000000000000e-3,true"
        );
        assert_eq!(csv_field("a,b"), "\"a,b\"");
    }
}
