//! Recorded LLM interactions for offline replay.
//!
//! A cassette is a JSON Lines file with one `{"fp", "request_text",
//! "response_text"}` object per line. Recording appends every interaction
//! in call order; replay serves the responses recorded for a fingerprint in
//! the same order, repeating the last one once they run out, so replaying an
//! identical request sequence yields byte-identical responses.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use claimcheck_core::llm::{fingerprint, Completion, Decoding, LlmBackend, LlmError, ScriptedBackend};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CassetteError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Interaction {
    pub fp: String,
    pub request_text: String,
    pub response_text: String,
}

fn io_error(path: &Path) -> impl FnOnce(io::Error) -> CassetteError + '_ {
    move |source| CassetteError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a cassette file. Blank lines are ignored.
pub fn read_cassette(path: &Path) -> Result<Vec<Interaction>, CassetteError> {
    let file = fs::File::open(path).map_err(io_error(path))?;
    let mut out = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_error(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let interaction = serde_json::from_str(&line).map_err(|e| CassetteError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(interaction);
    }
    Ok(out)
}

pub fn write_cassette(path: &Path, interactions: &[Interaction]) -> Result<(), CassetteError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_error(dir))?;
    }
    let mut file = io::BufWriter::new(fs::File::create(path).map_err(io_error(path))?);
    for interaction in interactions {
        let line = serde_json::to_string(interaction).expect("interaction serializes");
        writeln!(file, "{line}").map_err(io_error(path))?;
    }
    file.flush().map_err(io_error(path))
}

/// Passes calls through to `inner` and keeps every successful exchange.
pub struct RecordingBackend<B> {
    inner: B,
    log: Mutex<Vec<Interaction>>,
}

impl<B: LlmBackend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self {
            inner,
            log: Mutex::new(Vec::new()),
        }
    }

    pub fn interactions(&self) -> Vec<Interaction> {
        self.log.lock().expect("cassette lock").clone()
    }

    pub fn save(&self, path: &Path) -> Result<(), CassetteError> {
        write_cassette(path, &self.interactions())
    }
}

impl<B: LlmBackend> LlmBackend for RecordingBackend<B> {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        let completion = self.inner.complete(prompt, decoding)?;
        self.log.lock().expect("cassette lock").push(Interaction {
            fp: fingerprint(prompt, decoding),
            request_text: prompt.to_string(),
            response_text: completion.text.clone(),
        });
        Ok(completion)
    }
}

struct Track {
    responses: VecDeque<String>,
    last: String,
}

/// Serves recorded responses by fingerprint. Unknown fingerprints are a
/// [`LlmError::ScriptMiss`].
pub struct ReplayBackend {
    tracks: Mutex<BTreeMap<String, Track>>,
}

impl ReplayBackend {
    pub fn new(interactions: Vec<Interaction>) -> Self {
        let mut tracks: BTreeMap<String, Track> = BTreeMap::new();
        for i in interactions {
            let track = tracks.entry(i.fp).or_insert_with(|| Track {
                responses: VecDeque::new(),
                last: String::new(),
            });
            track.last = i.response_text.clone();
            track.responses.push_back(i.response_text);
        }
        Self {
            tracks: Mutex::new(tracks),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CassetteError> {
        read_cassette(path).map(Self::new)
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, prompt: &str, decoding: &Decoding) -> Result<Completion, LlmError> {
        let fp = fingerprint(prompt, decoding);
        let mut tracks = self.tracks.lock().expect("cassette lock");
        let track = tracks.get_mut(&fp).ok_or_else(|| LlmError::ScriptMiss(fp.clone()))?;
        let text = track.responses.pop_front().unwrap_or_else(|| track.last.clone());
        Ok(Completion::text(text))
    }
}

/// Loads a scripted-backend file: a JSON object mapping fingerprints to
/// replies. Cassette files (`.jsonl`) are accepted too; a fingerprint that
/// was recorded several times keeps its first response.
pub fn load_script(path: &Path) -> Result<ScriptedBackend, CassetteError> {
    let text = fs::read_to_string(path).map_err(io_error(path))?;
    let first = text.lines().find(|l| !l.trim().is_empty()).unwrap_or("");
    let is_cassette = serde_json::from_str::<Interaction>(first).is_ok();
    if let (false, Ok(map)) = (is_cassette, serde_json::from_str::<BTreeMap<String, String>>(&text)) {
        return Ok(map
            .into_iter()
            .fold(ScriptedBackend::new(), |s, (fp, reply)| s.with(fp, reply)));
    }
    let mut script = ScriptedBackend::new();
    let mut seen = std::collections::BTreeSet::new();
    for i in read_cassette(path)? {
        if seen.insert(i.fp.clone()) {
            script.insert(i.fp, i.response_text);
        }
    }
    Ok(script)
}
