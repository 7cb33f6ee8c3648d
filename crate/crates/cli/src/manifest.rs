//! `manifest.txt`: what produced an output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn quote(arg: &str) -> String {
    if !arg.is_empty() && arg.chars().all(|c| c.is_ascii_alphanumeric() || "-_./=:,*".contains(c)) {
        arg.to_string()
    } else {
        format!("'{}'", arg.replace('\'', r"'\''"))
    }
}

pub struct Manifest {
    command: String,
    out: PathBuf,
    args: String,
    seed: Option<u64>,
    inputs: Vec<(String, PathBuf, String)>,
    outputs: Vec<PathBuf>,
    parameters: Option<String>,
}

impl Manifest {
    pub fn new(command: &str, out: &Path) -> Self {
        Self {
            command: command.to_string(),
            out: out.to_path_buf(),
            args: std::env::args().map(|a| quote(&a)).collect::<Vec<_>>().join(" "),
            seed: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: None,
        }
    }

    pub fn input(&mut self, role: &str, path: &Path, content: &str) {
        self.inputs.push((role.to_string(), path.to_path_buf(), sha256_hex(content.as_bytes())));
    }

    pub fn output(&mut self, path: &Path) {
        self.outputs.push(path.to_path_buf());
    }

    pub fn seed(&mut self, seed: u64) {
        self.seed = Some(seed);
    }

    /// Canonical text of every setting in effect; only its hash is recorded.
    pub fn parameters(&mut self, text: &str) {
        self.parameters = Some(text.to_string());
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command={}", self.command);
        let _ = writeln!(s, "args={}", self.args);
        let _ = writeln!(s, "version={}", mirrorlidar::VERSION);
        let _ = writeln!(s, "out={}", self.out.display());
        if let Some(seed) = self.seed {
            let _ = writeln!(s, "seed={seed}");
            let _ = writeln!(s, "generator={}", mirrorlidar::injection::GENERATOR);
        }
        if let Some(p) = &self.parameters {
            let _ = writeln!(s, "parameter_hash={}", sha256_hex(p.as_bytes()));
        }
        for (role, path, hash) in &self.inputs {
            let _ = writeln!(s, "input.{role}={} sha256:{hash}", path.display());
        }
        for path in &self.outputs {
            let name = path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
            let _ = writeln!(s, "output={name}");
        }
        s
    }

    pub fn write(&self) -> std::io::Result<()> {
        std::fs::write(self.out.join("manifest.txt"), self.to_text())
    }
}
