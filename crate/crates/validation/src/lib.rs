//! Pass/fail bookkeeping for the acceptance run.

use std::fmt::Write as _;
use std::time::{Duration, Instant};

pub use fedpt_core;

/// Verdict of one criterion.
#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }
}

/// Accumulates sub-checks; the verdict passes only if every check does.
#[derive(Debug, Default)]
pub struct Checks {
    failed: Vec<String>,
    notes: Vec<String>,
}

impl Checks {
    pub fn check(&mut self, ok: bool, what: impl Into<String>) -> bool {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failed.push(what);
        }
        ok
    }

    pub fn verdict(self) -> Verdict {
        if self.failed.is_empty() {
            Verdict::new(true, self.notes.join("; "))
        } else {
            Verdict::new(false, format!("failed: {}", self.failed.join("; ")))
        }
    }
}

#[derive(Debug, Clone)]
pub struct Entry {
    pub id: usize,
    pub name: &'static str,
    pub verdict: Verdict,
    pub elapsed: Duration,
}

/// Runs criteria in order and renders one line per criterion.
#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<Entry>,
}

impl Report {
    /// Runs `check` and records it. When `budget` is given the criterion also
    /// fails if it takes longer. Errors count as failures.
    pub fn run<F>(&mut self, id: usize, name: &'static str, budget: Option<Duration>, check: F) -> &Entry
    where
        F: FnOnce() -> Result<Verdict, String>,
    {
        let start = Instant::now();
        let mut verdict = check().unwrap_or_else(|e| Verdict::new(false, format!("error: {e}")));
        let elapsed = start.elapsed();
        if let Some(limit) = budget {
            if elapsed > limit {
                verdict.passed = false;
                verdict.detail = format!("{}; runtime {elapsed:.2?} exceeds {limit:?}", verdict.detail);
            }
        }
        self.entries.push(Entry {
            id,
            name,
            verdict,
            elapsed,
        });
        let entry = self.entries.last().expect("just pushed");
        println!("{}", render(entry));
        entry
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn all_passed(&self) -> bool {
        self.entries.iter().all(|e| e.verdict.passed)
    }

    pub fn summary(&self) -> String {
        let passed = self.entries.iter().filter(|e| e.verdict.passed).count();
        let mut out = format!("acceptance: {passed}/{} criteria passed", self.entries.len());
        let failed: Vec<String> = self
            .entries
            .iter()
            .filter(|e| !e.verdict.passed)
            .map(|e| e.id.to_string())
            .collect();
        if !failed.is_empty() {
            let _ = write!(out, " (failing: {})", failed.join(", "));
        }
        out
    }
}

pub fn render(entry: &Entry) -> String {
    format!(
        "criterion {} {:<28} {} [{:.2?}] {}",
        entry.id,
        entry.name,
        if entry.verdict.passed { "PASS" } else { "FAIL" },
        entry.elapsed,
        entry.verdict.detail
    )
}

/// Median rounds with unreached trials as +∞.
pub fn censored_median(rounds: &[Option<usize>]) -> f64 {
    let mut v: Vec<f64> = rounds.iter().map(|r| r.map_or(f64::INFINITY, |x| x as f64)).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_treats_unreached_as_infinite() {
        assert_eq!(censored_median(&[Some(3), Some(1), Some(2)]), 2.0);
        assert_eq!(censored_median(&[Some(4), None, Some(2), Some(1)]), 3.0);
        assert_eq!(censored_median(&[None, None, Some(2), Some(1)]), f64::INFINITY);
        assert!(censored_median(&[]).is_nan());
    }

    #[test]
    fn checks_fail_if_any_fails() {
        let mut c = Checks::default();
        c.check(true, "a");
        c.check(false, "b");
        let v = c.verdict();
        assert!(!v.passed);
        assert_eq!(v.detail, "failed: b");
    }

    #[test]
    fn budget_overrun_fails() {
        let mut r = Report::default();
        r.run(1, "slow", Some(Duration::ZERO), || {
            std::thread::sleep(Duration::from_millis(2));
            Ok(Verdict::new(true, "ok"))
        });
        r.run(2, "err", None, || Err("boom".into()));
        assert!(!r.all_passed());
        assert_eq!(r.summary(), "acceptance: 0/2 criteria passed (failing: 1, 2)");
    }
}
