use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::Serialize;

use crate::args::OutputFormat;

/// Provenance embedded in every output.
#[derive(Clone, Debug, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub estimator: String,
}

impl Meta {
    pub fn new(argv: &[String], seed: u64, estimator: impl Into<String>) -> Self {
        Meta {
            tool: "silentspecies",
            version: env!("CARGO_PKG_VERSION"),
            command: command_line(argv),
            seed,
            estimator: estimator.into(),
        }
    }

    fn lines(&self) -> [String; 4] {
        [
            format!("{} {}", self.tool, self.version),
            format!("command: {}", self.command),
            format!("seed: {}", self.seed),
            format!("estimator: {}", self.estimator),
        ]
    }

    pub fn csv_header(&self) -> String {
        self.lines().iter().map(|l| format!("# {l}\n")).collect()
    }

    pub fn markdown_header(&self) -> String {
        self.lines()
            .iter()
            .map(|l| format!("<!-- {} -->\n", l.replace("--", "\\-\\-")))
            .collect()
    }
}

fn shell_quote(arg: &str) -> String {
    let plain = !arg.is_empty()
        && arg
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "-_./=:,+@%".contains(c));
    if plain {
        arg.to_owned()
    } else {
        format!("'{}'", arg.replace('\'', "'\\''"))
    }
}

/// Command line as it can be pasted back into a shell.
pub fn command_line(argv: &[String]) -> String {
    std::iter::once("silentspecies".to_owned())
        .chain(argv.iter().skip(1).map(|a| shell_quote(a)))
        .collect::<Vec<_>>()
        .join(" ")
}

/// One output document: a CSV / Markdown body or a JSON value.
pub fn render<T: Serialize>(
    meta: &Meta,
    format: OutputFormat,
    csv: impl FnOnce() -> String,
    markdown: impl FnOnce() -> Option<String>,
    json: &T,
) -> Result<String, serde_json::Error> {
    Ok(match format {
        OutputFormat::Csv => format!("{}{}", meta.csv_header(), csv()),
        OutputFormat::Markdown => match markdown() {
            Some(md) => format!("{}{}", meta.markdown_header(), md),
            // No table layout for this output; fall back to CSV.
            None => format!("{}{}", meta.csv_header(), csv()),
        },
        OutputFormat::Json => {
            let value = serde_json::json!({ "meta": meta, "data": json });
            let mut s = serde_json::to_string_pretty(&value)?;
            s.push('\n');
            s
        }
    })
}

pub fn write_output(path: Option<&Path>, body: &str) -> io::Result<()> {
    match path {
        Some(p) => fs::write(p, body),
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            lock.write_all(body.as_bytes())?;
            lock.flush()
        }
    }
}
