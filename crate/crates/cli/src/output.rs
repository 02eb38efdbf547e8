use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use homodiv::io::{fmt_g12, to_json};
use homodiv::verification::VerificationReport;
use homodiv::{QueryLedger, Result};

/// Output directory for one command's artifacts.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        fs::write(self.path(name), to_json(value)?)?;
        Ok(())
    }

    pub fn text(&self, name: &str, text: &str) -> Result<()> {
        fs::write(self.path(name), text)?;
        Ok(())
    }

    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name)).map_err(csv_err)?;
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> homodiv::Error {
    homodiv::Error::Io(std::io::Error::other(e))
}

/// Human-readable `key: value` summary, printed and saved as `summary.txt`.
#[derive(Default)]
pub struct Summary {
    text: String,
}

impl Summary {
    pub fn line(&mut self, key: &str, value: impl AsRef<str>) -> &mut Self {
        let _ = writeln!(self.text, "{key}: {}", value.as_ref());
        self
    }

    pub fn num(&mut self, key: &str, x: f64) -> &mut Self {
        self.line(key, fmt_g12(x))
    }

    pub fn nums(&mut self, key: &str, xs: &[f64]) -> &mut Self {
        self.line(key, join(xs))
    }

    pub fn ledger(&mut self, ledger: &QueryLedger) -> &mut Self {
        self.line(
            "queries",
            format!(
                "value={} cut={} total={}",
                ledger.value_queries(),
                ledger.cut_queries(),
                ledger.total()
            ),
        )
    }

    pub fn report(&mut self, report: &VerificationReport) -> &mut Self {
        for c in &report.checks {
            let verdict = if c.passed { "pass" } else { "FAIL" };
            if c.detail.is_empty() {
                self.line(&format!("check {}", c.name), verdict);
            } else {
                self.line(&format!("check {}", c.name), format!("{verdict} ({})", c.detail));
            }
        }
        self.line("verdict", if report.passed() { "pass" } else { "fail" })
    }

    pub fn finish(&self, artifacts: &Artifacts) -> Result<()> {
        print!("{}", self.text);
        artifacts.text("summary.txt", &self.text)
    }
}

pub fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| fmt_g12(x)).collect::<Vec<_>>().join(" ")
}
