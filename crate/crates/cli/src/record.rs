//! Single-record output for `analytic` and `solve`.

use rtscatter::output::Header;
use serde_json::{Map, Value};

use crate::RecordFormat;

#[derive(Debug, Default)]
pub struct Record {
    fields: Vec<(String, Value)>,
}

impl Record {
    pub fn num(&mut self, key: &str, v: f64) -> &mut Self {
        let value = serde_json::Number::from_f64(v).map(Value::Number).unwrap_or(Value::Null);
        self.fields.push((key.to_string(), value));
        self
    }

    pub fn int(&mut self, key: &str, v: u64) -> &mut Self {
        self.fields.push((key.to_string(), Value::from(v)));
        self
    }

    pub fn text(&mut self, key: &str, v: impl Into<String>) -> &mut Self {
        self.fields.push((key.to_string(), Value::String(v.into())));
        self
    }

    pub fn value(&mut self, key: &str, v: Value) -> &mut Self {
        self.fields.push((key.to_string(), v));
        self
    }

    pub fn render(&self, header: &Header, format: RecordFormat) -> String {
        match format {
            RecordFormat::Text => {
                let width = self.fields.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
                let mut out = String::new();
                for (k, v) in &self.fields {
                    out.push_str(&format!("{k:<width$}  {}\n", plain(v)));
                }
                out
            }
            RecordFormat::Csv => {
                let mut out = String::new();
                for (k, v) in &header.entries {
                    out.push_str(&format!("# {k}: {v}\n"));
                }
                let keys: Vec<&str> = self.fields.iter().map(|(k, _)| k.as_str()).collect();
                out.push_str(&keys.join(","));
                out.push('\n');
                let vals: Vec<String> = self.fields.iter().map(|(_, v)| csv_cell(v)).collect();
                out.push_str(&vals.join(","));
                out.push('\n');
                out
            }
            RecordFormat::Json => {
                let mut map = Map::new();
                map.insert("header".into(), serde_json::to_value(header).expect("header serialises"));
                let fields: Map<String, Value> = self.fields.iter().cloned().collect();
                map.insert("record".into(), Value::Object(fields));
                let mut s = serde_json::to_string_pretty(&Value::Object(map)).expect("serialisable");
                s.push('\n');
                s
            }
        }
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        Value::Array(a) => a.iter().map(plain).collect::<Vec<_>>().join(" "),
        other => other.to_string(),
    }
}

fn csv_cell(v: &Value) -> String {
    let s = match v {
        Value::Number(n) => match n.as_f64() {
            Some(f) if !n.is_u64() && !n.is_i64() => format!("{f:.16e}"),
            _ => n.to_string(),
        },
        Value::Null => String::new(),
        other => plain(other),
    };
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}
