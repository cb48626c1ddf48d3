//! Flat `key = value` configuration files, merged into the argument list
//! underneath the command line.

use std::path::Path;

/// Subcommand names, used to find the subcommand among the arguments.
pub const SUBCOMMANDS: [&str; 4] = ["verify", "exact", "direct", "langevin"];

/// Boolean switches: `key = true` becomes `--key`, `false` drops it.
const SWITCHES: [&str; 1] = ["periodic"];

/// Keys that may be repeated or hold a comma-separated list.
const LISTS: [&str; 1] = ["beta"];

#[derive(Debug)]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    fn new(message: impl Into<String>) -> Self {
        Self { message: message.into() }
    }
}

/// Parses a configuration file into `(key, value)` pairs in file order.
/// Keys are normalized to flag spelling (`burn_in` → `burn-in`).
pub fn parse_config(text: &str, origin: &Path) -> Result<Vec<(String, String)>, ConfigError> {
    let mut entries = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(format!("{}:{}: expected `key = value`", origin.display(), n + 1)));
        };
        let key = key.trim().trim_start_matches("--").replace('_', "-");
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::new(format!("{}:{}: empty key or value", origin.display(), n + 1)));
        }
        if LISTS.contains(&key.as_str()) {
            for item in value.split(',').map(str::trim).filter(|v| !v.is_empty()) {
                entries.push((key.clone(), item.to_string()));
            }
        } else {
            entries.push((key, value.to_string()));
        }
    }
    Ok(entries)
}

fn flag_given(args: &[String], key: &str) -> bool {
    let long = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| *a == long || a.starts_with(&with_value))
}

/// Removes `--config <path>` from `args` and returns the path.
fn take_config_path(args: &mut Vec<String>) -> Result<Option<String>, ConfigError> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(None);
    };
    let flag = args.remove(pos);
    if let Some(path) = flag.strip_prefix("--config=") {
        return Ok(Some(path.to_string()));
    }
    if pos < args.len() {
        Ok(Some(args.remove(pos)))
    } else {
        Err(ConfigError::new("--config needs a path"))
    }
}

/// Expands `--config` into ordinary flags. The result is
/// `[program, subcommand, file flags not given on the command line…,
/// command-line arguments…]`, so the command line always wins.
pub fn expand_config(argv: Vec<String>) -> Result<Vec<String>, ConfigError> {
    let mut iter = argv.into_iter();
    let program = iter.next().unwrap_or_else(|| "spinphase".into());
    let mut args: Vec<String> = iter.collect();
    let Some(path) = take_config_path(&mut args)? else {
        let mut out = vec![program];
        out.extend(args);
        return Ok(out);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| ConfigError::new(format!("{path}: {e}")))?;
    let entries = parse_config(&text, Path::new(&path))?;

    let mut subcommand = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .map(|pos| args.remove(pos));
    let mut from_file = Vec::new();
    for (key, value) in entries {
        if key == "command" {
            if subcommand.is_none() {
                subcommand = Some(value);
            }
            continue;
        }
        if flag_given(&args, &key) {
            continue;
        }
        if SWITCHES.contains(&key.as_str()) {
            match value.as_str() {
                "true" => from_file.push(format!("--{key}")),
                "false" => {}
                other => return Err(ConfigError::new(format!("{path}: `{key}` must be true or false, got `{other}`"))),
            }
        } else {
            from_file.push(format!("--{key}={value}"));
        }
    }
    let mut out = vec![program];
    out.extend(subcommand);
    out.extend(from_file);
    out.extend(args);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn parses_lists_switches_and_comments() {
        let e = parse_config("# c\nbeta = 0.5, 1.0\nburn_in=3 # tail\nperiodic = true\n", Path::new("f")).unwrap();
        assert_eq!(
            e,
            vec![
                ("beta".into(), "0.5".into()),
                ("beta".into(), "1.0".into()),
                ("burn-in".into(), "3".into()),
                ("periodic".into(), "true".into())
            ]
        );
        assert!(parse_config("novalue\n", Path::new("f")).is_err());
    }

    #[test]
    fn command_line_overrides_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(&path, "command = langevin\nbeta = 0.1,0.2\nseed = 3\nperiodic = true\n").unwrap();
        let argv = strings(&["spinphase", "--config", path.to_str().unwrap(), "--seed", "9"]);
        let out = expand_config(argv).unwrap();
        assert_eq!(out, strings(&["spinphase", "langevin", "--beta=0.1", "--beta=0.2", "--periodic", "--seed", "9"]));
        let argv = strings(&["spinphase", "exact", "--beta=2", &format!("--config={}", path.display())]);
        let out = expand_config(argv).unwrap();
        assert_eq!(out, strings(&["spinphase", "exact", "--seed=3", "--periodic", "--beta=2"]));
    }

    #[test]
    fn without_config_the_arguments_pass_through() {
        let argv = strings(&["spinphase", "verify"]);
        assert_eq!(expand_config(argv.clone()).unwrap(), argv);
    }
}
