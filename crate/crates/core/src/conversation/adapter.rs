//! External classifier protocol. Each request carries one utterance, the
//! closed label set and a fixed instruction; each response names the label.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{ConversationError, Label, LabelSource, Utterance};

pub const INSTRUCTION: &str = "Classify the utterance spoken by the resuscitation team leader into exactly one label. \
DO: an order addressed to a named person. UO: an order not addressed to anyone in particular. \
PL: a statement about upcoming steps or the treatment plan. TA: assigning a role or responsibility to someone. \
NONE: anything else. Reply with the label only.";

pub const LABELS: [&str; 5] = ["DO", "UO", "PL", "TA", "NONE"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub id: u64,
    pub text: String,
    pub labels: Vec<String>,
    pub instruction: String,
}

impl AdapterRequest {
    pub fn new(id: u64, text: &str) -> Self {
        Self {
            id,
            text: text.to_string(),
            labels: LABELS.iter().map(|s| s.to_string()).collect(),
            instruction: INSTRUCTION.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterResponse {
    pub id: u64,
    pub label: String,
}

/// Anything that can answer a batch of requests.
pub trait ClassifierAdapter {
    fn classify_batch(&mut self, requests: &[AdapterRequest]) -> Result<Vec<AdapterResponse>, ConversationError>;
}

fn unreachable(reason: impl ToString) -> ConversationError {
    ConversationError::AdapterUnreachable { reason: reason.to_string() }
}

fn malformed(reason: impl ToString) -> ConversationError {
    ConversationError::MalformedResponse { reason: reason.to_string() }
}

/// Spawns a process per batch and speaks newline-delimited JSON over its
/// standard streams, one response line per request line.
#[derive(Debug, Clone)]
pub struct SubprocessAdapter {
    pub program: String,
    pub args: Vec<String>,
}

impl ClassifierAdapter for SubprocessAdapter {
    fn classify_batch(&mut self, requests: &[AdapterRequest]) -> Result<Vec<AdapterResponse>, ConversationError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| unreachable(format!("{}: {e}", self.program)))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let payload: String = requests
            .iter()
            .map(|r| serde_json::to_string(r).expect("requests serialize") + "\n")
            .collect();
        // written from a second thread so a chatty adapter cannot deadlock us
        let writer = std::thread::spawn(move || stdin.write_all(payload.as_bytes()));
        let stdout = child.stdout.take().expect("stdout is piped");
        let mut out = Vec::with_capacity(requests.len());
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(unreachable)?;
            if line.trim().is_empty() {
                continue;
            }
            out.push(serde_json::from_str::<AdapterResponse>(&line).map_err(|e| malformed(format!("{e}: {line}")))?);
        }
        let write_result = writer.join().map_err(|_| unreachable("writer thread panicked"))?;
        let status = child.wait().map_err(unreachable)?;
        if !status.success() {
            return Err(unreachable(format!("{} exited with {status}", self.program)));
        }
        write_result.map_err(unreachable)?;
        Ok(out)
    }
}

/// POSTs the whole batch as a JSON array to `{base_url}/classify`.
#[derive(Debug, Clone)]
pub struct HttpAdapter {
    pub base_url: String,
    pub timeout: Duration,
}

impl ClassifierAdapter for HttpAdapter {
    fn classify_batch(&mut self, requests: &[AdapterRequest]) -> Result<Vec<AdapterResponse>, ConversationError> {
        let url = format!("{}/classify", self.base_url.trim_end_matches('/'));
        let agent: ureq::Agent = ureq::Agent::config_builder().timeout_global(Some(self.timeout)).build().into();
        let mut resp = agent.post(&url).send_json(requests).map_err(|e| unreachable(format!("{url}: {e}")))?;
        resp.body_mut().read_json::<Vec<AdapterResponse>>().map_err(malformed)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "transport", rename_all = "lowercase")]
pub enum AdapterConfig {
    Subprocess {
        program: String,
        #[serde(default)]
        args: Vec<String>,
    },
    Http {
        base_url: String,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

fn default_timeout_ms() -> u64 {
    30_000
}

impl AdapterConfig {
    pub fn build(&self) -> Box<dyn ClassifierAdapter> {
        match self {
            AdapterConfig::Subprocess { program, args } => {
                Box::new(SubprocessAdapter { program: program.clone(), args: args.clone() })
            }
            AdapterConfig::Http { base_url, timeout_ms } => {
                Box::new(HttpAdapter { base_url: base_url.clone(), timeout: Duration::from_millis(*timeout_ms) })
            }
        }
    }
}

/// Label `utts` through the adapter. Responses are matched to requests by
/// id, so any reply order is accepted; the result keeps input order. Labels
/// outside the closed set become NONE with a warning.
pub fn classify_external(
    utts: &[Utterance],
    adapter: &mut dyn ClassifierAdapter,
) -> Result<Vec<Utterance>, ConversationError> {
    if utts.is_empty() {
        return Ok(Vec::new());
    }
    let requests: Vec<AdapterRequest> =
        utts.iter().enumerate().map(|(i, u)| AdapterRequest::new(i as u64, &u.text)).collect();
    let responses = adapter.classify_batch(&requests)?;
    let mut by_id: BTreeMap<u64, String> = BTreeMap::new();
    for r in responses {
        if r.id >= utts.len() as u64 {
            return Err(malformed(format!("unknown id {}", r.id)));
        }
        if by_id.insert(r.id, r.label).is_some() {
            return Err(malformed(format!("duplicate id {}", r.id)));
        }
    }
    if by_id.len() != utts.len() {
        return Err(malformed(format!("{} responses for {} requests", by_id.len(), utts.len())));
    }
    Ok(utts
        .iter()
        .zip(by_id.into_values())
        .map(|(u, raw)| {
            let label = raw.trim().parse::<Label>().unwrap_or_else(|_| {
                log::warn!("adapter returned `{raw}` outside the label set; using NONE");
                Label::NONE
            });
            u.clone().labeled(label, LabelSource::External)
        })
        .collect())
}
