//! Flag/config-file resolution, output headers and run manifests.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::CliError;

/// Keys that do not affect results and stay out of the config digest.
const UNDIGESTED: [&str; 3] = ["out", "threads", "config"];

/// Resolved settings of one run. Values come from flags first, then the
/// config file, then defaults; everything resolved is echoed to the
/// manifest.
#[derive(Debug)]
pub struct Settings {
    command: &'static str,
    file: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Settings {
    pub fn new(command: &'static str, config: Option<&Path>) -> Result<Self, CliError> {
        let file = match config {
            Some(path) => parse_config(path)?,
            None => BTreeMap::new(),
        };
        let mut s = Self {
            command,
            file,
            resolved: BTreeMap::new(),
        };
        if let Some(path) = config {
            s.record("config", path.display());
        }
        Ok(s)
    }

    fn record(&mut self, key: &str, value: impl Display) {
        self.resolved.insert(key.to_string(), value.to_string());
    }

    fn lookup<T: FromStr>(&self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("config key '{key}': {e}"))),
            None => Ok(None),
        }
    }

    /// Optional setting without a default.
    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>, CliError>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?;
        if let Some(v) = &v {
            self.record(key, v);
        }
        Ok(v)
    }

    pub fn or<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        let v = self.lookup(key, flag)?.unwrap_or(default);
        self.record(key, &v);
        Ok(v)
    }

    pub fn required<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T, CliError>
    where
        T::Err: Display,
    {
        self.opt(key, flag)?
            .ok_or_else(|| CliError::Usage(format!("missing required setting --{key}")))
    }

    pub fn path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<PathBuf, CliError> {
        let raw: Option<String> = flag.map(|p| p.display().to_string());
        self.required(key, raw).map(PathBuf::from)
    }

    pub fn opt_path(&mut self, key: &str, flag: Option<PathBuf>) -> Result<Option<PathBuf>, CliError> {
        let raw: Option<String> = flag.map(|p| p.display().to_string());
        Ok(self.opt(key, raw)?.map(PathBuf::from))
    }

    /// Hex SHA-256 of the result-affecting settings.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(format!("command={}\n", self.command));
        for (k, v) in &self.resolved {
            if !UNDIGESTED.contains(&k.as_str()) {
                h.update(format!("{k}={v}\n"));
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Comment lines placed above every CSV body.
    pub fn header(&self, seed: u64) -> String {
        format!(
            "# swreg {}\n# command={}\n# seed={seed}\n# config-digest={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.digest()
        )
    }

    pub fn manifest(&self) -> String {
        let mut out = format!(
            "swreg={}\ncommand={}\nconfig-digest={}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.digest()
        );
        for (k, v) in &self.resolved {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    /// Writes `body` under the comment header, plus `<path>.manifest`.
    pub fn write_csv(&self, path: &Path, seed: u64, body: &str) -> Result<(), CliError> {
        write(path, &(self.header(seed) + body))?;
        self.write_manifest(&manifest_path(path))
    }

    pub fn write_manifest(&self, path: &Path) -> Result<(), CliError> {
        write(path, &self.manifest())
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest");
    out.with_file_name(name)
}

pub fn write(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

/// `key = value` lines; `#` starts a comment.
pub fn parse_config(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let mut out = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key = value", path.display(), n + 1)))?;
        let key = k.trim().trim_start_matches("--").to_string();
        out.insert(key, v.trim().to_string());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_values() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.conf");
        fs::write(&cfg, "# settings\npreset = rg-e\nL=20\n--seed = 9  # trailing\n").unwrap();
        let mut s = Settings::new("fit", Some(&cfg)).unwrap();
        assert_eq!(s.or::<String>("preset", Some("rg-s".into()), "x".into()).unwrap(), "rg-s");
        assert_eq!(s.or::<usize>("L", None, 100).unwrap(), 20);
        assert_eq!(s.or::<u64>("seed", None, 0).unwrap(), 9);
        assert_eq!(s.or::<f64>("p", None, 2.0).unwrap(), 2.0);
        assert!(s.required::<String>("dataset", None).is_err());
        assert!(s.manifest().contains("L=20\n"));
    }

    #[test]
    fn digest_ignores_output_location() {
        let mut a = Settings::new("label", None).unwrap();
        let mut b = Settings::new("label", None).unwrap();
        a.or::<String>("out", Some("a.csv".into()), String::new()).unwrap();
        b.or::<String>("out", Some("b.csv".into()), String::new()).unwrap();
        assert_eq!(a.digest(), b.digest());
        b.or::<f64>("p", Some(1.0), 2.0).unwrap();
        assert_ne!(a.digest(), b.digest());
        assert_eq!(manifest_path(Path::new("x/y.csv")), PathBuf::from("x/y.csv.manifest"));
    }

    #[test]
    fn malformed_config_is_a_usage_error() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.conf");
        fs::write(&cfg, "preset rg-s\n").unwrap();
        assert!(matches!(Settings::new("fit", Some(&cfg)), Err(CliError::Usage(_))));
        fs::write(&cfg, "L = many\n").unwrap();
        let mut s = Settings::new("fit", Some(&cfg)).unwrap();
        assert!(matches!(s.or::<usize>("L", None, 1), Err(CliError::Usage(_))));
    }
}
