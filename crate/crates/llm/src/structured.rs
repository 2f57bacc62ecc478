use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum FieldType {
    String,
    Integer,
    Number,
    Boolean,
    Array(Box<FieldType>),
    Object(Vec<FieldSpec>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldSpec {
    pub name: String,
    pub ty: FieldType,
    pub required: bool,
    /// Allowed values for string fields.
    pub enum_values: Option<Vec<String>>,
}

impl FieldSpec {
    pub fn required(name: &str, ty: FieldType) -> Self {
        FieldSpec { name: name.into(), ty, required: true, enum_values: None }
    }

    pub fn optional(name: &str, ty: FieldType) -> Self {
        FieldSpec { name: name.into(), ty, required: false, enum_values: None }
    }

    pub fn one_of(mut self, values: &[&str]) -> Self {
        self.enum_values = Some(values.iter().map(|s| s.to_string()).collect());
        self
    }
}

/// Shape of a JSON object reply plus the number of corrective re-prompts.
#[derive(Debug, Clone, PartialEq)]
pub struct StructuredSpec {
    pub fields: Vec<FieldSpec>,
    pub max_retries: u32,
}

impl StructuredSpec {
    pub fn new(fields: Vec<FieldSpec>, max_retries: u32) -> Self {
        StructuredSpec { fields, max_retries }
    }

    pub fn validate(&self, record: &Map<String, Value>) -> Result<(), String> {
        validate_object(&self.fields, record, "")
    }
}

fn validate_object(fields: &[FieldSpec], obj: &Map<String, Value>, path: &str) -> Result<(), String> {
    for f in fields {
        let here = if path.is_empty() { f.name.clone() } else { format!("{path}.{}", f.name) };
        match obj.get(&f.name) {
            None | Some(Value::Null) if f.required => return Err(format!("missing required field `{here}`")),
            None | Some(Value::Null) => {}
            Some(v) => {
                validate_value(&f.ty, v, &here)?;
                if let (Some(allowed), Some(s)) = (&f.enum_values, v.as_str()) {
                    if !allowed.iter().any(|a| a == s) {
                        return Err(format!("`{here}` must be one of {}, got {s:?}", allowed.join("|")));
                    }
                }
            }
        }
    }
    Ok(())
}

fn validate_value(ty: &FieldType, v: &Value, path: &str) -> Result<(), String> {
    let ok = match ty {
        FieldType::String => v.is_string(),
        FieldType::Integer => v.is_i64() || v.is_u64(),
        FieldType::Number => v.is_number(),
        FieldType::Boolean => v.is_boolean(),
        FieldType::Array(inner) => {
            let items = v.as_array().ok_or_else(|| format!("`{path}` must be an array"))?;
            for (i, item) in items.iter().enumerate() {
                validate_value(inner, item, &format!("{path}[{i}]"))?;
            }
            true
        }
        FieldType::Object(fields) => {
            let obj = v.as_object().ok_or_else(|| format!("`{path}` must be an object"))?;
            validate_object(fields, obj, path)?;
            true
        }
    };
    if ok {
        Ok(())
    } else {
        Err(format!("`{path}` must be {}", type_name(ty)))
    }
}

fn type_name(ty: &FieldType) -> &'static str {
    match ty {
        FieldType::String => "a string",
        FieldType::Integer => "an integer",
        FieldType::Number => "a number",
        FieldType::Boolean => "a boolean",
        FieldType::Array(_) => "an array",
        FieldType::Object(_) => "an object",
    }
}

/// Extracts a JSON object from a reply, tolerating code fences and prose
/// around the object.
pub fn parse_json_object(raw: &str) -> Result<Map<String, Value>, String> {
    let mut text = raw.trim();
    if let Some(rest) = text.strip_prefix("```") {
        let rest = rest.strip_prefix("json").unwrap_or(rest);
        text = rest.trim_end().strip_suffix("```").unwrap_or(rest).trim();
    }
    let candidate = match (text.find('{'), text.rfind('}')) {
        (Some(a), Some(b)) if a < b => &text[a..=b],
        _ => return Err("reply contains no JSON object".into()),
    };
    match serde_json::from_str::<Value>(candidate) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err("reply is not a JSON object".into()),
        Err(e) => Err(format!("reply is not valid JSON: {e}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn spec() -> StructuredSpec {
        StructuredSpec::new(
            vec![
                FieldSpec::required("kind", FieldType::String).one_of(&["poetic", "none"]),
                FieldSpec::required(
                    "items",
                    FieldType::Array(Box::new(FieldType::Object(vec![FieldSpec::required("n", FieldType::Integer)]))),
                ),
                FieldSpec::optional("note", FieldType::String),
            ],
            2,
        )
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn accepts_valid() {
        spec().validate(&obj(json!({"kind": "poetic", "items": [{"n": 1}]}))).unwrap();
    }

    #[test]
    fn reports_paths() {
        let e = spec().validate(&obj(json!({"kind": "poetic", "items": [{"n": 1}, {"n": "x"}]}))).unwrap_err();
        assert_eq!(e, "`items[1].n` must be an integer");
        let e = spec().validate(&obj(json!({"kind": "sad", "items": []}))).unwrap_err();
        assert!(e.contains("must be one of poetic|none"));
        let e = spec().validate(&obj(json!({"items": []}))).unwrap_err();
        assert_eq!(e, "missing required field `kind`");
    }

    #[test]
    fn extracts_fenced_json() {
        let m = parse_json_object("```json\n{\"a\": 1}\n```").unwrap();
        assert_eq!(m["a"], 1);
        let m = parse_json_object("Here you go: {\"a\": {\"b\": 2}} thanks").unwrap();
        assert_eq!(m["a"]["b"], 2);
        assert!(parse_json_object("[1,2]").is_err());
        assert!(parse_json_object("{oops}").is_err());
    }
}
