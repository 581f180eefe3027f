//! `key = value` configuration files whose keys mirror the long flags.

use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

/// Parses a config file into `(flag, value)` pairs. Blank lines and lines
/// starting with `#` are skipped; `true`/`false` values toggle switches.
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, Option<String>)>> {
    let mut entries = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidInput(format!("{}:{}: expected `key = value`", origin.display(), lineno + 1))
        })?;
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(Error::InvalidInput(format!(
                "{}:{}: bad key `{key}`",
                origin.display(),
                lineno + 1
            )));
        }
        let value = value.trim().trim_matches('"').to_string();
        match value.as_str() {
            "true" => entries.push((key, None)),
            "false" => {}
            _ => entries.push((key, Some(value))),
        }
    }
    Ok(entries)
}

fn flag_present(args: &[OsString], key: &str) -> bool {
    let long = format!("--{key}");
    let prefixed = format!("--{key}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|s| s == long || s.starts_with(&prefixed))
    })
}

/// Finds `--config <path>` (or `--config=<path>`) in `args`.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(a) = iter.next() {
        let Some(s) = a.to_str() else { continue };
        if s == "--config" {
            return iter.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Inserts config entries right after the subcommand name, skipping any key
/// already given on the command line so that explicit flags win.
pub fn inject(args: Vec<OsString>, entries: &[(String, Option<String>)]) -> Vec<OsString> {
    if args.len() < 2 {
        return args;
    }
    let mut out: Vec<OsString> = args[..2].to_vec();
    for (key, value) in entries {
        if flag_present(&args, key) {
            continue;
        }
        out.push(format!("--{key}").into());
        if let Some(v) = value {
            out.push(v.into());
        }
    }
    out.extend(args[2..].iter().cloned());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parse_and_inject() {
        let text = "# link\nm = 3\ntheta=0.5\n\ndump_matrices = true\nverbose = false\n";
        let entries = parse_config(text, Path::new("x.conf")).unwrap();
        assert_eq!(
            entries,
            vec![
                ("m".to_string(), Some("3".to_string())),
                ("theta".to_string(), Some("0.5".to_string())),
                ("dump-matrices".to_string(), None),
            ]
        );
        let args = os(&["pppi", "outage", "--theta", "1", "--config", "x.conf"]);
        let got = inject(args, &entries);
        assert_eq!(
            got,
            os(&["pppi", "outage", "--m", "3", "--dump-matrices", "--theta", "1", "--config", "x.conf"])
        );
        assert_eq!(config_path(&got), Some("x.conf".into()));
        assert_eq!(config_path(&os(&["a", "b", "--config=y"])), Some("y".into()));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(parse_config("m 3", Path::new("c")).is_err());
        assert!(parse_config("config = other", Path::new("c")).is_err());
    }
}
