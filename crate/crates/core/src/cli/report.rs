use serde_json::{json, Map, Value};

/// Key/value report in insertion order, plus named pass/fail checks.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub command: String,
    entries: Vec<(String, Value)>,
    checks: Vec<(String, bool)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Report { command: command.into(), ..Default::default() }
    }

    pub fn put(&mut self, key: &str, value: impl Into<Value>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn put_f64(&mut self, key: &str, value: f64) {
        // JSON has no NaN / inf; keep them readable as strings
        let v = if value.is_finite() { json!(value) } else { json!(value.to_string()) };
        self.entries.push((key.into(), v));
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.push((name.into(), ok));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|(_, ok)| *ok)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks.iter().filter(|(_, ok)| !ok).map(|(n, _)| n.as_str()).collect()
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.entries {
            let shown = match v {
                Value::String(t) => t.clone(),
                other => other.to_string(),
            };
            s.push_str(&format!("{k} = {shown}\n"));
        }
        for (name, ok) in &self.checks {
            s.push_str(&format!("check.{name} = {}\n", if *ok { "pass" } else { "fail" }));
        }
        s.push_str(&format!("status = {}\n", if self.passed() { "pass" } else { "fail" }));
        s
    }

    pub fn to_json(&self) -> String {
        let mut values = Map::new();
        for (k, v) in &self.entries {
            values.insert(k.clone(), v.clone());
        }
        let checks: Map<String, Value> = self.checks.iter().map(|(n, ok)| (n.clone(), json!(ok))).collect();
        let doc = json!({
            "command": self.command,
            "passed": self.passed(),
            "values": values,
            "checks": checks,
        });
        serde_json::to_string_pretty(&doc).expect("report serialises") + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_keeps_order_and_status() {
        let mut r = Report::new("build");
        r.put("nodes", 9);
        r.put_f64("margin", f64::INFINITY);
        r.check("acyclic", true);
        r.check("push_up", false);
        assert_eq!(
            r.to_text(),
            "command = build\nnodes = 9\nmargin = inf\ncheck.acyclic = pass\ncheck.push_up = fail\nstatus = fail\n"
        );
        assert_eq!(r.failed_checks(), ["push_up"]);
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["values"]["margin"], "inf");
        assert_eq!(v["passed"], false);
    }
}
