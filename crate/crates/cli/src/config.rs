//! `--config FILE` support: the file's keys become flags spliced in front of
//! the explicit ones. Keys also given on the command line are dropped, so
//! explicit flags win, list-valued ones included.

use std::collections::HashSet;
use std::ffi::OsString;

use serde_json::Value;

/// Number of leading tokens (program and subcommand names) before flags.
fn command_depth(args: &[OsString]) -> usize {
    match args.get(1).and_then(|a| a.to_str()) {
        Some("generate") => 3,
        _ => 2,
    }
}

fn config_path(args: &[OsString]) -> Option<Result<String, String>> {
    let mut it = args.iter().map(|a| a.to_string_lossy());
    while let Some(a) = it.next() {
        if a == "--config" {
            return Some(it.next().map(|p| p.into_owned()).ok_or_else(|| "--config needs a file".to_string()));
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(Ok(p.to_string()));
        }
    }
    None
}

/// Long flag names present on the command line.
fn explicit_flags(args: &[OsString]) -> HashSet<String> {
    args.iter()
        .filter_map(|a| {
            let a = a.to_str()?;
            if a == "-o" {
                return Some("--output".to_string());
            }
            a.starts_with("--").then(|| a.split('=').next().unwrap_or(a).to_string())
        })
        .collect()
}

fn to_flags(config: &Value, skip: &HashSet<String>) -> Result<Vec<OsString>, String> {
    let obj = config.as_object().ok_or("config must be a JSON object")?;
    let mut out = Vec::new();
    for (key, value) in obj {
        if key == "config" {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if skip.contains(&flag) {
            continue;
        }
        let scalar = |v: &Value| match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(format!("config key {key}: unsupported value {v}")),
        };
        match value {
            Value::Bool(true) => out.push(flag.into()),
            Value::Bool(false) | Value::Null => {}
            Value::Array(items) => {
                let joined = items.iter().map(scalar).collect::<Result<Vec<_>, _>>()?.join(",");
                out.push(flag.into());
                out.push(joined.into());
            }
            v => {
                out.push(flag.into());
                out.push(scalar(v)?.into());
            }
        }
    }
    Ok(out)
}

/// Arguments with any config file expanded in place.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let path = path?;
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| format!("config {path}: {e}"))?;
    let flags = to_flags(&value, &explicit_flags(&args))?;
    let depth = command_depth(&args).min(args.len());
    let mut out = args[..depth].to_vec();
    out.extend(flags);
    out.extend_from_slice(&args[depth..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn flags_from_json() {
        let v: Value = serde_json::from_str(r#"{"beta_grid": [0.1, 0.2], "jobs": 2, "recipe": true, "quiet": false}"#).unwrap();
        let none = HashSet::new();
        let flags: Vec<String> = to_flags(&v, &none).unwrap().into_iter().map(|s| s.into_string().unwrap()).collect();
        assert_eq!(flags, ["--beta-grid", "0.1,0.2", "--jobs", "2", "--recipe"]);
        assert!(to_flags(&serde_json::json!([1]), &none).is_err());
        let skip = explicit_flags(&os(&["asis", "sweep", "--jobs=4", "-o", "x"]));
        let flags = to_flags(&serde_json::json!({"jobs": 2, "output": "y", "seed": 1}), &skip).unwrap();
        assert_eq!(flags, os(&["--seed", "1"]));
    }

    #[test]
    fn splice_position() {
        assert_eq!(command_depth(&os(&["asis", "generate", "er", "--n", "3"])), 3);
        assert_eq!(command_depth(&os(&["asis", "sweep"])), 2);
        assert_eq!(config_path(&os(&["asis", "sweep", "--config=x.json"])), Some(Ok("x.json".into())));
        assert!(config_path(&os(&["asis", "sweep", "--config"])).unwrap().is_err());
        assert_eq!(expand(os(&["asis", "sweep"])).unwrap(), os(&["asis", "sweep"]));
    }
}
