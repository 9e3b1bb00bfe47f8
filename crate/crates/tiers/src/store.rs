//! The single-assignment map behind a store tier, with an optional
//! append-only log replayed on open.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FsyncPolicy {
    #[default]
    Never,
    EveryPut,
}

#[derive(Debug)]
struct Log {
    file: File,
    fsync: FsyncPolicy,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Put {
    Inserted,
    Unchanged,
    Conflict { existing: String },
}

#[derive(Debug, Default)]
pub struct Store {
    map: HashMap<String, String>,
    log: Option<Log>,
}

/// One log record: `PUT <key> <value>`, both fields as JSON strings so
/// spaces inside keys and values survive.
pub fn log_line(key: &str, value: &str) -> String {
    format!("PUT {} {}", serde_json::to_string(key).unwrap(), serde_json::to_string(value).unwrap())
}

pub fn parse_log_line(line: &str) -> Option<(String, String)> {
    let rest = line.strip_prefix("PUT ")?;
    let mut fields = serde_json::Deserializer::from_str(rest).into_iter::<String>();
    let key = fields.next()?.ok()?;
    let value = fields.next()?.ok()?;
    fields.next().is_none().then_some((key, value))
}

impl Store {
    pub fn in_memory() -> Self {
        Store::default()
    }

    /// Opens `path`, replaying existing records; later writes append to it.
    pub fn open(path: &Path, fsync: FsyncPolicy) -> io::Result<Store> {
        let mut map = HashMap::new();
        if path.exists() {
            for (n, line) in BufReader::new(File::open(path)?).lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let (k, v) = parse_log_line(&line).ok_or_else(|| {
                    io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: bad log record", path.display(), n + 1))
                })?;
                map.insert(k, v);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Store { map, log: Some(Log { file, fsync }) })
    }

    pub fn get(&self, key: &str) -> Option<&String> {
        self.map.get(key)
    }

    pub fn put(&mut self, key: &str, value: &str) -> io::Result<Put> {
        if let Some(existing) = self.map.get(key) {
            return Ok(if existing == value { Put::Unchanged } else { Put::Conflict { existing: existing.clone() } });
        }
        if let Some(log) = &mut self.log {
            writeln!(log.file, "{}", log_line(key, value))?;
            if log.fsync == FsyncPolicy::EveryPut {
                log.file.sync_data()?;
            }
        }
        self.map.insert(key.to_string(), value.to_string());
        Ok(Put::Inserted)
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }
}

/// Where a store tier keeps its log, if anywhere.
#[derive(Debug, Clone, Default)]
pub struct LogConfig {
    pub path: Option<PathBuf>,
    pub fsync: FsyncPolicy,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_assignment() {
        let mut s = Store::in_memory();
        assert_eq!(s.put("k", "1").unwrap(), Put::Inserted);
        assert_eq!(s.put("k", "1").unwrap(), Put::Unchanged);
        assert_eq!(s.put("k", "2").unwrap(), Put::Conflict { existing: "1".into() });
        assert_eq!(s.get("k").unwrap(), "1");
    }

    #[test]
    fn log_lines_round_trip_with_spaces() {
        let line = log_line("p:X:[place:\"New York\"]", "\"a b\"");
        assert!(line.starts_with("PUT \""));
        assert_eq!(parse_log_line(&line), Some(("p:X:[place:\"New York\"]".into(), "\"a b\"".into())));
        assert_eq!(parse_log_line("GET \"k\" \"v\""), None);
        assert_eq!(parse_log_line("PUT \"k\""), None);
    }

    #[test]
    fn log_is_replayed_on_open() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dst.log");
        {
            let mut s = Store::open(&path, FsyncPolicy::EveryPut).unwrap();
            s.put("a", "1").unwrap();
            s.put("b", "true").unwrap();
            s.put("a", "1").unwrap();
        }
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 2);
        let mut s = Store::open(&path, FsyncPolicy::Never).unwrap();
        assert_eq!(s.get("b").unwrap(), "true");
        assert!(matches!(s.put("a", "2").unwrap(), Put::Conflict { .. }));
    }
}
