use std::fmt;

/// One line of a verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckRow {
    pub name: String,
    pub cases: usize,
    /// Worst observed violation measure; how it is normalized depends on the check.
    pub max_slack: f64,
    pub passed: bool,
    /// Inputs of the first failing case, if any.
    pub failure: Option<String>,
}

impl CheckRow {
    pub fn new(
        name: impl Into<String>,
        cases: usize,
        max_slack: f64,
        failure: Option<String>,
    ) -> Self {
        CheckRow {
            name: name.into(),
            cases,
            max_slack,
            passed: failure.is_none(),
            failure,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<CheckRow>,
}

impl Report {
    pub fn push(&mut self, row: CheckRow) {
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Report) {
        self.rows.extend(other.rows);
    }

    pub fn all_passed(&self) -> bool {
        self.rows.iter().all(|r| r.passed)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<40} {:>9} {:>12}  result",
            "check", "cases", "max slack"
        )?;
        writeln!(f, "{}", "-".repeat(72))?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<40} {:>9} {:>12.3e}  {}",
                r.name,
                r.cases,
                r.max_slack,
                if r.passed { "pass" } else { "FAIL" }
            )?;
        }
        for r in self.rows.iter().filter(|r| !r.passed) {
            if let Some(why) = &r.failure {
                writeln!(f, "\n{} failed: {why}", r.name)?;
            }
        }
        Ok(())
    }
}
