//! A validator for the subset of JSON Schema used by the shipped report
//! schema: types, enum/const, object and array keywords, numeric bounds,
//! local `$ref`, the combinators and `if`/`then`/`else`.

use serde_json::Value;

pub fn validate(schema: &Value, doc: &Value) -> Result<(), String> {
    check(schema, schema, doc, "$")
}

fn resolve<'a>(root: &'a Value, r: &str) -> &'a Value {
    let path = r.strip_prefix("#/").unwrap_or_else(|| panic!("non-local $ref {r}"));
    path.split('/').fold(root, |v, k| &v[k])
}

fn has_type(t: &str, v: &Value) -> bool {
    match t {
        "object" => v.is_object(),
        "array" => v.is_array(),
        "string" => v.is_string(),
        "boolean" => v.is_boolean(),
        "null" => v.is_null(),
        "number" => v.is_number(),
        "integer" => v.is_i64() || v.is_u64() || v.as_f64().is_some_and(|x| x.fract() == 0.0),
        other => panic!("unsupported type {other}"),
    }
}

fn check(root: &Value, s: &Value, v: &Value, at: &str) -> Result<(), String> {
    let Some(obj) = s.as_object() else {
        return match s {
            Value::Bool(true) => Ok(()),
            _ => Err(format!("{at}: rejected by schema {s}")),
        };
    };
    for (key, arg) in obj {
        match key.as_str() {
            "$schema" | "$id" | "title" | "$defs" | "description" | "then" | "else" => {}
            "$ref" => check(root, resolve(root, arg.as_str().unwrap()), v, at)?,
            "type" => {
                let ok = match arg {
                    Value::String(t) => has_type(t, v),
                    Value::Array(ts) => ts.iter().any(|t| has_type(t.as_str().unwrap(), v)),
                    _ => panic!("bad type keyword"),
                };
                if !ok {
                    return Err(format!("{at}: {v} is not of type {arg}"));
                }
            }
            "enum" => {
                if !arg.as_array().unwrap().contains(v) {
                    return Err(format!("{at}: {v} not in {arg}"));
                }
            }
            "const" => {
                if arg != v {
                    return Err(format!("{at}: {v} != {arg}"));
                }
            }
            "required" => {
                if let Some(o) = v.as_object() {
                    for k in arg.as_array().unwrap() {
                        if !o.contains_key(k.as_str().unwrap()) {
                            return Err(format!("{at}: missing {k}"));
                        }
                    }
                }
            }
            "properties" => {
                if let Some(o) = v.as_object() {
                    for (k, sub) in arg.as_object().unwrap() {
                        if let Some(x) = o.get(k) {
                            check(root, sub, x, &format!("{at}.{k}"))?;
                        }
                    }
                }
            }
            "additionalProperties" => {
                if let Some(o) = v.as_object() {
                    let known = obj.get("properties").and_then(|p| p.as_object());
                    for (k, x) in o {
                        if known.is_some_and(|p| p.contains_key(k)) {
                            continue;
                        }
                        check(root, arg, x, &format!("{at}.{k}"))?;
                    }
                }
            }
            "items" => {
                if let Some(a) = v.as_array() {
                    let skip = obj.get("prefixItems").map_or(0, |p| p.as_array().unwrap().len());
                    for (n, x) in a.iter().enumerate().skip(skip) {
                        check(root, arg, x, &format!("{at}[{n}]"))?;
                    }
                }
            }
            "prefixItems" => {
                if let Some(a) = v.as_array() {
                    for (n, (sub, x)) in arg.as_array().unwrap().iter().zip(a).enumerate() {
                        check(root, sub, x, &format!("{at}[{n}]"))?;
                    }
                }
            }
            "minItems" | "maxItems" => {
                if let Some(a) = v.as_array() {
                    let n = arg.as_u64().unwrap() as usize;
                    if (key == "minItems" && a.len() < n) || (key == "maxItems" && a.len() > n) {
                        return Err(format!("{at}: array length {} violates {key} {n}", a.len()));
                    }
                }
            }
            "minimum" | "maximum" => {
                if let Some(x) = v.as_f64() {
                    let b = arg.as_f64().unwrap();
                    if (key == "minimum" && x < b) || (key == "maximum" && x > b) {
                        return Err(format!("{at}: {x} violates {key} {b}"));
                    }
                }
            }
            "allOf" => {
                for sub in arg.as_array().unwrap() {
                    check(root, sub, v, at)?;
                }
            }
            "anyOf" => {
                if !arg.as_array().unwrap().iter().any(|sub| check(root, sub, v, at).is_ok()) {
                    return Err(format!("{at}: no anyOf branch matches"));
                }
            }
            "oneOf" => {
                let n = arg.as_array().unwrap().iter().filter(|sub| check(root, sub, v, at).is_ok()).count();
                if n != 1 {
                    return Err(format!("{at}: {n} oneOf branches match"));
                }
            }
            "if" => {
                let branch = if check(root, arg, v, at).is_ok() { obj.get("then") } else { obj.get("else") };
                if let Some(b) = branch {
                    check(root, b, v, at)?;
                }
            }
            other => panic!("unsupported schema keyword {other}"),
        }
    }
    Ok(())
}
