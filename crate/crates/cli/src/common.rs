use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Command failure, split by exit code: `Usage` maps to 2 (bad invocation,
/// unreadable input, schema violations), `Failed` maps to 1 (the command ran
/// but the check it performs did not pass).
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Failed(String),
}

impl fmt::Display for CmdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CmdError::Usage(m) | CmdError::Failed(m) => f.write_str(m),
        }
    }
}

pub type CmdResult<T> = Result<T, CmdError>;

pub fn usage(msg: impl Into<String>) -> CmdError {
    CmdError::Usage(msg.into())
}

macro_rules! usage_from {
    ($($ty:ty),+ $(,)?) => {
        $(impl From<$ty> for CmdError {
            fn from(e: $ty) -> Self {
                CmdError::Usage(e.to_string())
            }
        })+
    };
}

usage_from!(
    padicprob::padic::PadicError,
    padicprob::frequency::FrequencyError,
    padicprob::realization::RealizationError,
    padicprob::complexity::ComplexityError,
    padicprob::interference::InterferenceError,
);

pub fn read_bytes(path: &Path) -> CmdResult<Vec<u8>> {
    fs::read(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> CmdResult<String> {
    String::from_utf8(read_bytes(path)?)
        .map_err(|_| usage(format!("{} is not valid UTF-8", path.display())))
}

/// Write through a sibling temp file and rename into place, so a crash never
/// leaves a half-written artifact under the final name.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let tmp = tmp_name(path);
    fs::write(&tmp, bytes).map_err(|e| usage(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| usage(format!("cannot rename {} into place: {e}", tmp.display())))?;
    Ok(())
}

/// Same contract as [`write_atomic`] for content that is produced
/// incrementally: the closure streams into a buffered temp file which is
/// renamed only after a successful flush.
pub fn stream_atomic(
    path: &Path,
    fill: impl FnOnce(&mut dyn std::io::Write) -> CmdResult<()>,
) -> CmdResult<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| usage(format!("cannot create {}: {e}", dir.display())))?;
    }
    let tmp = tmp_name(path);
    let file = fs::File::create(&tmp)
        .map_err(|e| usage(format!("cannot write {}: {e}", tmp.display())))?;
    let mut out = std::io::BufWriter::new(file);
    fill(&mut out)?;
    out.flush()
        .map_err(|e| usage(format!("cannot write {}: {e}", tmp.display())))?;
    drop(out);
    fs::rename(&tmp, path)
        .map_err(|e| usage(format!("cannot rename {} into place: {e}", tmp.display())))?;
    Ok(())
}

fn tmp_name(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_os_string();
    name.push(".tmp");
    PathBuf::from(name)
}

pub fn artifact_path(out_dir: &Path, stem: &str, suffix: &str) -> PathBuf {
    out_dir.join(format!("{stem}.{suffix}"))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

/// Run header embedded in every JSON artifact: enough to reproduce the run
/// (tool version, effective seed, hash of the input document) without
/// guessing defaults.
pub fn provenance(
    seed: Option<u64>,
    spec_sha256: Option<&str>,
    params: serde_json::Value,
) -> serde_json::Value {
    serde_json::json!({
        "version": VERSION,
        "seed": seed,
        "spec_sha256": spec_sha256,
        "params": params,
    })
}

/// Parse a rational literal, reporting the byte offset of the first
/// offending character (the core parser only reports what went wrong).
pub fn parse_rational_arg(text: &str) -> CmdResult<padicprob::padic::Rational> {
    padicprob::padic::parse_rational(text).map_err(|e| {
        let offset = text
            .bytes()
            .position(|b| !(b.is_ascii_digit() || b == b'-' || b == b'/'))
            .unwrap_or(0);
        usage(format!("bad rational {text:?} at byte {offset}: {e}"))
    })
}
