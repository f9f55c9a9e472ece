use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub detail: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
}

impl Check {
    pub fn new(name: impl Into<String>, ok: bool, detail: impl Into<String>) -> Self {
        let mut detail = detail.into();
        if !ok && detail.is_empty() {
            detail = "failed".into();
        }
        Check {
            name: name.into(),
            status: if ok { Status::Pass } else { Status::Fail },
            detail,
            residual: None,
        }
    }

    pub fn skip(name: impl Into<String>, why: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skip,
            detail: why.into(),
            residual: None,
        }
    }

    /// Non-finite residuals are dropped, JSON has no room for them.
    pub fn with_residual(mut self, r: f64) -> Self {
        self.residual = r.is_finite().then_some(r);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub checks: Vec<Check>,
    pub timing_ms: u64,
    /// Command-specific payload (matrices, coefficients, paths).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl Report {
    pub fn failed(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn checks_csv(&self) -> String {
        let mut out = String::from("name,status,residual,detail\n");
        for c in &self.checks {
            let status = serde_json::to_value(c.status).unwrap();
            let residual = c.residual.map(|r| r.to_string()).unwrap_or_default();
            out.push_str(&format!(
                "{},{},{},\"{}\"\n",
                c.name,
                status.as_str().unwrap(),
                residual,
                c.detail.replace('"', "\"\"")
            ));
        }
        out
    }

    pub fn pretty_checks(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let tag = match c.status {
                Status::Pass => "PASS",
                Status::Fail => "FAIL",
                Status::Skip => "SKIP",
            };
            out.push_str(&format!("{tag}  {}: {}\n", c.name, c.detail));
        }
        let verdict = if self.failed() { "some checks failed" } else { "all checks passed" };
        out.push_str(&format!("{} ({} ms): {verdict}\n", self.command, self.timing_ms));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn failing_check_always_explains() {
        let c = Check::new("x", false, "");
        assert_eq!(c.status, Status::Fail);
        assert!(!c.detail.is_empty());
    }

    #[test]
    fn json_round_trip() {
        let r = Report {
            command: "kernel".into(),
            checks: vec![
                Check::new("a", true, "fine").with_residual(1.25e-17),
                Check::new("b", false, "bad").with_residual(f64::NAN),
                Check::skip("c", "not applicable"),
            ],
            timing_ms: 12,
            data: Some(serde_json::json!({"z": [1, 2], "a": "1/2"})),
        };
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.to_json(), r.to_json());
    }
}
