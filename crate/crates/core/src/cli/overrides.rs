use serde_json::Value;

/// A `dotted.path=value` assignment. The value is parsed as JSON when it
/// parses, otherwise taken as a string.
#[derive(Debug, Clone, PartialEq)]
pub struct Override {
    pub path: Vec<String>,
    pub value: Value,
}

impl Override {
    pub fn parse(arg: &str) -> Result<Self, String> {
        let (key, raw) = arg.split_once('=').ok_or_else(|| format!("override '{arg}' has no '='"))?;
        let path: Vec<String> = key.split('.').map(str::to_string).collect();
        if path.iter().any(|p| p.is_empty()) {
            return Err(format!("override key '{key}' has an empty segment"));
        }
        let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        Ok(Override { path, value })
    }
}

/// Applies overrides in order (last writer wins). Intermediate segments must
/// exist; numeric segments index arrays; a missing final object key is created.
pub fn apply_overrides(doc: &mut Value, overrides: &[Override]) -> Result<(), String> {
    for o in overrides {
        let joined = o.path.join(".");
        let (last, parents) = o.path.split_last().expect("nonempty path");
        let mut node = &mut *doc;
        for seg in parents {
            node = step(node, seg).ok_or_else(|| format!("override path '{joined}': no '{seg}'"))?;
        }
        match node {
            Value::Object(map) => {
                map.insert(last.clone(), o.value.clone());
            }
            Value::Array(items) => {
                let slot = last
                    .parse::<usize>()
                    .ok()
                    .and_then(|i| items.get_mut(i))
                    .ok_or_else(|| format!("override path '{joined}': index '{last}' out of range"))?;
                *slot = o.value.clone();
            }
            _ => return Err(format!("override path '{joined}': parent is not an object or array")),
        }
    }
    Ok(())
}

fn step<'a>(node: &'a mut Value, seg: &str) -> Option<&'a mut Value> {
    match node {
        Value::Object(map) => map.get_mut(seg),
        Value::Array(items) => seg.parse::<usize>().ok().and_then(move |i| items.get_mut(i)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn nested_and_indexed() {
        let mut v = json!({ "grid": { "r": { "max": 3 } }, "xs": [1, 2] });
        let o = [
            Override::parse("grid.r.max=4").unwrap(),
            Override::parse("xs.1=7.5").unwrap(),
            Override::parse("name=abc").unwrap(),
            Override::parse("grid.r.max=5").unwrap(),
        ];
        apply_overrides(&mut v, &o).unwrap();
        assert_eq!(v, json!({ "grid": { "r": { "max": 5 } }, "xs": [1, 7.5], "name": "abc" }));
    }

    #[test]
    fn bad_paths() {
        assert!(Override::parse("a..b=1").is_err());
        let mut v = json!({ "a": 1, "xs": [0] });
        assert!(apply_overrides(&mut v, &[Override::parse("b.c=1").unwrap()]).is_err());
        assert!(apply_overrides(&mut v, &[Override::parse("xs.3=1").unwrap()]).is_err());
        assert!(apply_overrides(&mut v, &[Override::parse("a.b=1").unwrap()]).is_err());
    }
}
