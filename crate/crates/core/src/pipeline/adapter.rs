//! External program and file boundaries.

use std::fs::File;
use std::io::{BufRead, BufReader, Cursor, Read, Write};
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("adapter command is empty")]
    EmptyCommand,
    #[error("cannot start `{program}`: {source}")]
    Spawn {
        program: String,
        #[source]
        source: std::io::Error,
    },
    #[error("`{program}` timed out after {seconds} s")]
    Timeout { program: String, seconds: f64 },
    #[error("`{program}` exited with {status}; stderr: {stderr}")]
    Failed {
        program: String,
        status: String,
        stderr: String,
    },
    #[error("`{program}` wrote non-UTF-8 output")]
    Encoding { program: String },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter I/O: {0}")]
    Io(#[from] std::io::Error),
}

/// Captured output of a successful adapter run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdapterOutput {
    pub stdout: String,
    pub stderr: String,
}

fn describe(status: ExitStatus) -> String {
    match status.code() {
        Some(code) => format!("status {code}"),
        None => "a signal".to_string(),
    }
}

/// Runs `command` (program then arguments) in `cwd`, writes `stdin` to it and
/// waits at most `timeout`. A nonzero exit is an error.
pub fn run_command(
    command: &[String],
    stdin: Option<&str>,
    cwd: Option<&Path>,
    timeout: Duration,
) -> Result<AdapterOutput, AdapterError> {
    let (program, args) = command.split_first().ok_or(AdapterError::EmptyCommand)?;
    let mut cmd = Command::new(program);
    cmd.args(args)
        .stdin(if stdin.is_some() {
            Stdio::piped()
        } else {
            Stdio::null()
        })
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    if let Some(dir) = cwd {
        cmd.current_dir(dir);
    }
    log::debug!("running adapter {command:?}");
    let mut child = cmd.spawn().map_err(|source| AdapterError::Spawn {
        program: program.clone(),
        source,
    })?;

    let writer = match (stdin, child.stdin.take()) {
        (Some(text), Some(mut pipe)) => {
            let text = text.to_string();
            // A child that exits without reading closes the pipe; that is not an error here.
            Some(thread::spawn(move || {
                let _ = pipe.write_all(text.as_bytes());
            }))
        }
        _ => None,
    };
    let drain = |pipe: Option<Box<dyn Read + Send>>| {
        thread::spawn(move || {
            let mut buf = Vec::new();
            if let Some(mut p) = pipe {
                let _ = p.read_to_end(&mut buf);
            }
            buf
        })
    };
    let out = drain(
        child
            .stdout
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
    );
    let err = drain(
        child
            .stderr
            .take()
            .map(|p| Box::new(p) as Box<dyn Read + Send>),
    );

    let started = Instant::now();
    let status = loop {
        if let Some(status) = child.try_wait()? {
            break status;
        }
        if started.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            return Err(AdapterError::Timeout {
                program: program.clone(),
                seconds: timeout.as_secs_f64(),
            });
        }
        thread::sleep(Duration::from_millis(5));
    };
    if let Some(w) = writer {
        let _ = w.join();
    }
    let stdout = out.join().unwrap_or_default();
    let stderr = String::from_utf8_lossy(&err.join().unwrap_or_default()).into_owned();
    if !status.success() {
        return Err(AdapterError::Failed {
            program: program.clone(),
            status: describe(status),
            stderr: stderr.trim().to_string(),
        });
    }
    let stdout = String::from_utf8(stdout).map_err(|_| AdapterError::Encoding {
        program: program.clone(),
    })?;
    Ok(AdapterOutput { stdout, stderr })
}

/// Where a stage reads its records: a file, or the standard output of a command.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    File(PathBuf),
    Command { command: Vec<String> },
}

impl InputSource {
    /// File paths resolve against `base` unless absolute.
    pub fn resolved(&self, base: &Path) -> InputSource {
        match self {
            InputSource::File(p) => InputSource::File(base.join(p)),
            other => other.clone(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            InputSource::File(p) => p.display().to_string(),
            InputSource::Command { command } => format!("command {}", command.join(" ")),
        }
    }

    /// `None` for a file that does not exist.
    pub fn open(
        &self,
        cwd: Option<&Path>,
        timeout: Duration,
    ) -> Result<Option<Box<dyn BufRead>>, AdapterError> {
        match self {
            InputSource::File(path) => match File::open(path) {
                Ok(f) => Ok(Some(Box::new(BufReader::new(f)))),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
                Err(source) => Err(AdapterError::Read {
                    path: path.clone(),
                    source,
                }),
            },
            InputSource::Command { command } => {
                let out = run_command(command, None, cwd, timeout)?;
                Ok(Some(Box::new(Cursor::new(out.stdout.into_bytes()))))
            }
        }
    }

    /// Like [`InputSource::open`] but a missing file is an error.
    pub fn open_required(
        &self,
        cwd: Option<&Path>,
        timeout: Duration,
    ) -> Result<Box<dyn BufRead>, AdapterError> {
        self.open(cwd, timeout)?.ok_or_else(|| match self {
            InputSource::File(path) => AdapterError::Read {
                path: path.clone(),
                source: std::io::ErrorKind::NotFound.into(),
            },
            InputSource::Command { .. } => AdapterError::EmptyCommand,
        })
    }
}
