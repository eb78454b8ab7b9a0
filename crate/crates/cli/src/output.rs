use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const SCHEMA_VERSION: &str = "1";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    schema_version: &'static str,
    command: &'a str,
    seed: u64,
    #[serde(flatten)]
    report: &'a T,
}

/// Output directory; every file written is recorded so the caller can list it.
pub struct OutDir {
    root: PathBuf,
    seed: u64,
    pub written: Vec<PathBuf>,
}

impl OutDir {
    pub fn create(root: &Path, seed: u64) -> Result<Self, CliError> {
        fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self { root: root.to_path_buf(), seed, written: Vec::new() })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, command: &str, report: &T) -> Result<(), CliError> {
        let path = self.root.join(name);
        let env = Envelope { schema_version: SCHEMA_VERSION, command, seed: self.seed, report };
        let mut text = serde_json::to_string_pretty(&env).map_err(|e| CliError::Validation(e.to_string()))?;
        text.push('\n');
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.root.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    pub fn csv<R, I>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        R: Serialize,
        I: IntoIterator<Item = R>,
    {
        let path = self.root.join(name);
        let to_io = |e: csv::Error| match e.into_kind() {
            csv::ErrorKind::Io(io) => CliError::io(&path, io),
            other => CliError::io(&path, std::io::Error::other(format!("{other:?}"))),
        };
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(&path).map_err(to_io)?;
        w.write_record(header).map_err(to_io)?;
        for row in rows {
            w.serialize(row).map_err(to_io)?;
        }
        w.flush().map_err(|e| CliError::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }
}
