use serde_json::Value;

/// Applies `path=value` to a JSON document. `path` is dot separated; numeric
/// segments index arrays. `value` is parsed as JSON and taken as a string
/// when that fails. Intermediate segments must exist; the last one may add
/// a new object key.
pub fn apply(doc: &mut Value, assignment: &str) -> Result<(), String> {
    let (path, raw) = assignment
        .split_once('=')
        .ok_or_else(|| format!("override `{assignment}` is not of the form path=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    set(doc, path, value)
}

pub fn set(doc: &mut Value, path: &str, value: Value) -> Result<(), String> {
    let segments: Vec<&str> = path.split('.').collect();
    if path.is_empty() || segments.iter().any(|s| s.is_empty()) {
        return Err(format!("invalid override path `{path}`"));
    }
    let (last, parents) = segments.split_last().expect("non-empty");
    let mut node = doc;
    for seg in parents {
        node = child(node, seg).ok_or_else(|| format!("override path `{path}`: no `{seg}`"))?;
    }
    match node {
        Value::Object(map) => {
            map.insert(last.to_string(), value);
            Ok(())
        }
        Value::Array(items) => {
            let slot = last
                .parse::<usize>()
                .ok()
                .and_then(|i| items.get_mut(i))
                .ok_or_else(|| format!("override path `{path}`: no index `{last}`"))?;
            *slot = value;
            Ok(())
        }
        _ => Err(format!(
            "override path `{path}`: `{last}` is not inside an object or array"
        )),
    }
}

fn child<'a>(node: &'a mut Value, seg: &str) -> Option<&'a mut Value> {
    match node {
        Value::Object(map) => map.get_mut(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get_mut(i)),
        _ => None,
    }
}
