//! Residual bookkeeping shared by every verification routine.
//!
//! A residual `r` measured against a scale `S` passes when
//! `|r| <= ABS_FLOOR + REL_TOL * S`. The scale is the largest magnitude
//! among the terms that produced the residual, so sums with heavy
//! cancellation are judged against the size of what cancelled.

use serde::Serialize;

pub const ABS_FLOOR: f64 = 1e-12;
pub const REL_TOL: f64 = 1e-9;

pub fn within(residual: f64, scale: f64) -> bool {
    residual.abs() <= ABS_FLOOR + REL_TOL * scale.abs()
}

/// `|r| / S`, with `0/0 = 0`.
pub fn relative(residual: f64, scale: f64) -> f64 {
    let r = residual.abs();
    if r == 0.0 {
        0.0
    } else if scale.abs() > 0.0 {
        r / scale.abs()
    } else {
        f64::INFINITY
    }
}

/// Running maximum of residuals for one named check.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualTracker {
    pub name: String,
    pub max_abs: f64,
    pub max_rel: f64,
    /// Where the worst relative residual occurred.
    pub worst_at: String,
    pub count: usize,
    pub pass: bool,
}

impl ResidualTracker {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            max_abs: 0.0,
            max_rel: 0.0,
            worst_at: String::new(),
            count: 0,
            pass: true,
        }
    }

    pub fn record(&mut self, residual: f64, scale: f64, at: impl FnOnce() -> String) {
        let abs = residual.abs();
        let rel = relative(residual, scale);
        self.count += 1;
        if !within(residual, scale) || !abs.is_finite() {
            self.pass = false;
        }
        if abs > self.max_abs {
            self.max_abs = abs;
        }
        if rel > self.max_rel || self.worst_at.is_empty() {
            self.max_rel = rel;
            self.worst_at = at();
        }
    }

    pub fn merge(&mut self, other: &ResidualTracker) {
        self.count += other.count;
        self.pass &= other.pass;
        self.max_abs = self.max_abs.max(other.max_abs);
        if other.max_rel > self.max_rel || self.worst_at.is_empty() {
            self.max_rel = other.max_rel;
            self.worst_at = other.worst_at.clone();
        }
    }
}

/// Largest absolute value in a list of terms.
pub fn term_scale<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    terms.into_iter().fold(0.0, |acc: f64, t| acc.max(t.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policy_has_absolute_floor() {
        assert!(within(5e-13, 0.0));
        assert!(!within(5e-12, 0.0));
        assert!(within(5e-10, 1.0));
        assert!(!within(5e-9, 1.0));
    }

    #[test]
    fn tracker_keeps_worst_location() {
        let mut t = ResidualTracker::new("x");
        t.record(1e-14, 1.0, || "a".into());
        t.record(1e-10, 1.0, || "b".into());
        t.record(1e-13, 1.0, || "c".into());
        assert_eq!(t.worst_at, "b");
        assert_eq!(t.count, 3);
        assert!(t.pass);
        t.record(1.0, 1.0, || "d".into());
        assert!(!t.pass);
    }
}
