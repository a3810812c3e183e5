use serde_json::{json, Map, Value};

/// Command output: TSV rows and the same content as JSON.
#[derive(Debug, Default)]
pub struct Report {
    pub rows: Vec<Vec<String>>,
    pub json: Map<String, Value>,
}

impl Report {
    pub fn row<I, S>(&mut self, cols: I)
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.rows.push(cols.into_iter().map(Into::into).collect());
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.json.insert(key.to_string(), value);
    }

    pub fn render(&self, as_json: bool) -> String {
        if as_json {
            let mut s = serde_json::to_string_pretty(&Value::Object(self.json.clone())).unwrap();
            s.push('\n');
            return s;
        }
        self.rows.iter().map(|r| format!("{}\n", r.join("\t"))).collect()
    }
}

pub fn error_json(name: &str, message: &str) -> String {
    json!({ "error": name, "message": message }).to_string()
}
