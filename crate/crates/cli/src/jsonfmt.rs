//! Deterministic JSON rendering: every `f64` is printed with exactly 17
//! significant digits, map keys are emitted in sorted order, and the layout
//! is fixed two-space-indent pretty printing. Identical values therefore
//! serialize to identical bytes, which the reproducibility contract relies
//! on.

use serde_json::Value;

pub fn to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                // 16 digits after the point = 17 significant digits
                out.push_str(&format!("{:.16e}", n.as_f64().expect("checked f64")));
            } else {
                out.push_str(&n.to_string());
            }
        }
        Value::String(s) => {
            out.push_str(&Value::String(s.clone()).to_string());
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                write_value(item, indent + 1, out);
            }
            newline(indent, out);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            out.push('{');
            for (i, key) in keys.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                newline(indent + 1, out);
                out.push_str(&Value::String((*key).clone()).to_string());
                out.push_str(": ");
                write_value(&map[*key], indent + 1, out);
            }
            newline(indent, out);
            out.push('}');
        }
    }
}

fn newline(indent: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..indent {
        out.push_str("  ");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn floats_get_seventeen_significant_digits() {
        let v = json!({"x": 0.1, "y": 1.0, "n": 3});
        let s = to_string(&v);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("1.0000000000000000e0"), "{s}");
        assert!(s.contains("\"n\": 3"), "{s}");
    }

    #[test]
    fn keys_are_sorted_and_layout_is_stable() {
        let v = json!({"b": [1.5, 2.5], "a": {"z": true, "y": null}});
        let first = to_string(&v);
        let second = to_string(&v);
        assert_eq!(first, second);
        let a = first.find("\"a\"").unwrap();
        let b = first.find("\"b\"").unwrap();
        assert!(a < b);
    }
}
