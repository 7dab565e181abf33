//! Run manifests: a key-value sidecar written next to every output file,
//! recording the command, the fully resolved configuration, seeds, paths,
//! toolkit version and wall-clock time. The stored argument vector is enough
//! to re-execute the run (`rerun` does exactly that); on one platform the
//! re-executed outputs are byte-identical.

use anyhow::{bail, Context, Result};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub wall_clock_ms: u128,
    /// Resolved configuration, seeds and paths, in insertion order.
    pub settings: Vec<(String, String)>,
    /// Full argument vector (without the binary name).
    pub argv: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        Manifest {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_ms: 0,
            settings: Vec::new(),
            argv: argv.to_vec(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.settings.push((key.to_string(), value.to_string()));
    }

    pub fn render(&self) -> Result<String> {
        let mut out = String::new();
        out.push_str(&format!("command {}\n", self.command));
        out.push_str(&format!("version {}\n", self.version));
        out.push_str(&format!("wall_clock_ms {}\n", self.wall_clock_ms));
        for (key, value) in &self.settings {
            if key.contains(char::is_whitespace) {
                bail!("manifest key {key:?} contains whitespace");
            }
            if value.contains('\n') {
                bail!("manifest value for {key:?} contains a newline");
            }
            out.push_str(&format!("set {key} {value}\n"));
        }
        for arg in &self.argv {
            if arg.contains('\n') {
                bail!("argument {arg:?} contains a newline");
            }
            out.push_str(&format!("arg {arg}\n"));
        }
        Ok(out)
    }

    pub fn write(&self, output_path: &Path) -> Result<PathBuf> {
        let path = manifest_path(output_path);
        std::fs::write(&path, self.render()?)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }

    pub fn parse(text: &str) -> Result<Manifest> {
        let mut command = None;
        let mut version = String::new();
        let mut wall_clock_ms = 0u128;
        let mut settings = Vec::new();
        let mut argv = Vec::new();
        for line in text.lines() {
            let (kind, rest) = line.split_once(' ').unwrap_or((line, ""));
            match kind {
                "command" => command = Some(rest.to_string()),
                "version" => version = rest.to_string(),
                "wall_clock_ms" => {
                    wall_clock_ms = rest.parse().context("bad wall_clock_ms")?;
                }
                "set" => {
                    let (key, value) = rest
                        .split_once(' ')
                        .context("malformed set line")?;
                    settings.push((key.to_string(), value.to_string()));
                }
                "arg" => argv.push(rest.to_string()),
                "" => {}
                other => bail!("unknown manifest line kind {other:?}"),
            }
        }
        Ok(Manifest {
            command: command.context("manifest has no command line")?,
            version,
            wall_clock_ms,
            settings,
            argv,
        })
    }

    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Manifest::parse(&text)
    }
}

/// Manifest sidecar path for an output file: `<output>.manifest`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_os_string();
    name.push(".manifest");
    PathBuf::from(name)
}
