use epsdelta::function_model::fmt_num;
use serde::Serialize;

/// 12 significant digits, printed in the shortest form that keeps them.
pub fn csv_num(v: f64) -> String {
    if !v.is_finite() {
        return v.to_string();
    }
    let rounded: f64 = format!("{v:.11e}").parse().unwrap_or(v);
    fmt_num(rounded)
}

/// Pretty JSON. Floats use the shortest text that reads back to the same
/// double, which never needs more than 17 significant digits.
pub fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output types always serialize");
    s.push('\n');
    s
}
