use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::parser::ValueSource;
use clap::ArgMatches;

use crate::error::CliError;

/// Every long flag name any subcommand accepts. A config file shares one
/// flat namespace across subcommands so a single file can drive a whole
/// pipeline run; keys outside this list are rejected as typos.
const KNOWN_KEYS: &[&str] = &[
    "batch",
    "bpe",
    "ckpt",
    "clip",
    "corpus",
    "epochs",
    "ext",
    "ids",
    "input",
    "input-dir",
    "kind",
    "lr",
    "model",
    "out",
    "out-eval",
    "out-train",
    "output",
    "pad-side",
    "samples",
    "seed",
    "step",
    "topk",
    "train-frac",
    "truncations",
    "vocab-size",
    "window",
];

/// Values loaded from an optional flat `key = value` file. Flags given on
/// the command line always win over these.
#[derive(Debug, Default)]
pub struct FileConfig {
    values: BTreeMap<String, String>,
}

impl FileConfig {
    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }
}

pub fn load(path: Option<&Path>) -> Result<FileConfig, CliError> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Runtime(format!("config {}: {e}", path.display())))?;
    let mut values = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Data(format!(
                "config {}:{}: expected `key = value`, got `{raw}`",
                path.display(),
                idx + 1
            )));
        };
        let key = key.trim();
        let value = value.trim();
        if !KNOWN_KEYS.contains(&key) {
            return Err(CliError::Usage(format!(
                "config {}:{}: `{key}` is not a flag of any subcommand",
                path.display(),
                idx + 1
            )));
        }
        if values.insert(key.to_owned(), value.to_owned()).is_some() {
            return Err(CliError::Data(format!(
                "config {}:{}: duplicate key `{key}`",
                path.display(),
                idx + 1
            )));
        }
    }
    Ok(FileConfig { values })
}

/// Effective value for a flag that has a default: an explicit command-line
/// flag wins, then the config file, then the parsed default.
pub fn resolve<T>(m: &ArgMatches, id: &str, flag_value: T, cfg: &FileConfig) -> Result<T, CliError>
where
    T: FromStr,
    T::Err: Display,
{
    if m.value_source(id) == Some(ValueSource::CommandLine) {
        return Ok(flag_value);
    }
    let key = id.replace('_', "-");
    match cfg.get(&key) {
        Some(raw) => raw
            .parse()
            .map_err(|e| CliError::Usage(format!("config `{key} = {raw}`: {e}"))),
        None => Ok(flag_value),
    }
}

/// Effective path for a flag with no default: the flag if present, else the
/// config file, else a fatal missing-argument error.
pub fn resolve_path(
    flag_value: Option<PathBuf>,
    key: &str,
    cfg: &FileConfig,
) -> Result<PathBuf, CliError> {
    if let Some(p) = flag_value {
        return Ok(p);
    }
    if let Some(raw) = cfg.get(key) {
        return Ok(PathBuf::from(raw));
    }
    Err(CliError::Usage(format!(
        "missing --{key} (pass the flag or set `{key}` in the config file)"
    )))
}

/// Same resolution for a required string-valued flag.
pub fn resolve_string(
    flag_value: Option<String>,
    key: &str,
    cfg: &FileConfig,
) -> Result<String, CliError> {
    if let Some(s) = flag_value {
        return Ok(s);
    }
    if let Some(raw) = cfg.get(key) {
        return Ok(raw.to_owned());
    }
    Err(CliError::Usage(format!(
        "missing --{key} (pass the flag or set `{key}` in the config file)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_cfg(text: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        f
    }

    #[test]
    fn parses_comments_blanks_and_spacing() {
        let f = write_cfg("# comment\n\nseed = 7\nwindow=50\n  epochs =  3 \n");
        let cfg = load(Some(f.path())).unwrap();
        assert_eq!(cfg.get("seed"), Some("7"));
        assert_eq!(cfg.get("window"), Some("50"));
        assert_eq!(cfg.get("epochs"), Some("3"));
        assert_eq!(cfg.get("batch"), None);
    }

    #[test]
    fn unknown_key_is_fatal() {
        let f = write_cfg("sneed = 7\n");
        let err = load(Some(f.path())).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }

    #[test]
    fn line_without_equals_is_a_format_error() {
        let f = write_cfg("seed 7\n");
        let err = load(Some(f.path())).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn duplicate_key_is_a_format_error() {
        let f = write_cfg("seed = 7\nseed = 8\n");
        let err = load(Some(f.path())).unwrap_err();
        assert_eq!(err.exit_code(), 3, "{err}");
    }

    #[test]
    fn missing_file_is_a_runtime_error() {
        let err = load(Some(Path::new("/nonexistent/config"))).unwrap_err();
        assert_eq!(err.exit_code(), 1, "{err}");
    }

    #[test]
    fn resolve_path_falls_back_to_config_then_errors() {
        let f = write_cfg("corpus = /tmp/c.txt\n");
        let cfg = load(Some(f.path())).unwrap();
        let p = resolve_path(None, "corpus", &cfg).unwrap();
        assert_eq!(p, PathBuf::from("/tmp/c.txt"));
        let p = resolve_path(Some(PathBuf::from("/flag.txt")), "corpus", &cfg).unwrap();
        assert_eq!(p, PathBuf::from("/flag.txt"));
        let err = resolve_path(None, "output", &cfg).unwrap_err();
        assert_eq!(err.exit_code(), 2, "{err}");
    }
}
