//! Newline-delimited JSON protocol spoken with external model servers.
//!
//! A session opens with one handshake line from the server:
//!
//! ```text
//! {"protocol_version":1,"model_id":"evo2-7b","max_in_flight":4}
//! ```
//!
//! after which the client sends one request per line
//!
//! ```text
//! {"request_id":"r-17","prompt":"ACCAGCC","max_symbols":2,"decoding":"greedy"}
//! ```
//!
//! and the server answers each with `{"request_id":"r-17","completion":"CA"}`,
//! possibly out of order. Prompts are transmitted byte for byte; servers own
//! tokenization and must truncate completions to `max_symbols` characters.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{BackendError, CompletionRequest, CompletionResponse};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Handshake {
    pub protocol_version: u32,
    pub model_id: String,
    pub max_in_flight: usize,
    /// Model context length in symbols, when the server knows it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_length: Option<u64>,
}

pub fn encode_line<T: Serialize>(msg: &T) -> String {
    let mut line = serde_json::to_string(msg).expect("wire types serialize");
    line.push('\n');
    line
}

pub fn decode_handshake(line: &str) -> Result<Handshake, BackendError> {
    let hs: Handshake =
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| BackendError::Handshake(e.to_string()))?;
    if hs.protocol_version != PROTOCOL_VERSION {
        return Err(BackendError::Handshake(format!(
            "protocol version {} unsupported (want {PROTOCOL_VERSION})",
            hs.protocol_version
        )));
    }
    if hs.max_in_flight == 0 {
        return Err(BackendError::Handshake("max_in_flight must be positive".into()));
    }
    Ok(hs)
}

pub fn decode_response(line: &str) -> Result<CompletionResponse, BackendError> {
    serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| BackendError::Malformed(e.to_string()))
}

pub fn decode_request(line: &str) -> Result<CompletionRequest, BackendError> {
    let req: CompletionRequest =
        serde_json::from_str(line.trim_end_matches(['\r', '\n'])).map_err(|e| BackendError::Malformed(e.to_string()))?;
    if req.max_symbols == 0 {
        return Err(BackendError::Malformed("max_symbols must be at least 1".into()));
    }
    Ok(req)
}

/// Minimal sequential server: writes the handshake, then answers every
/// request line with `handler` until the input closes. Completions are
/// truncated to `max_symbols` characters before sending.
pub fn serve<R, W, F>(input: R, mut output: W, handshake: &Handshake, mut handler: F) -> std::io::Result<()>
where
    R: BufRead,
    W: Write,
    F: FnMut(&CompletionRequest) -> CompletionResponse,
{
    output.write_all(encode_line(handshake).as_bytes())?;
    output.flush()?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = match decode_request(&line) {
            Ok(req) => {
                let mut resp = handler(&req);
                resp.request_id = req.request_id.clone();
                resp.completion = resp.completion.chars().take(req.max_symbols).collect();
                resp
            }
            Err(e) => {
                let id = serde_json::from_str::<serde_json::Value>(&line)
                    .ok()
                    .and_then(|v| v.get("request_id").and_then(|s| s.as_str()).map(str::to_string))
                    .unwrap_or_default();
                CompletionResponse { error: Some(e.to_string()), ..CompletionResponse::new(id, "") }
            }
        };
        output.write_all(encode_line(&response).as_bytes())?;
        output.flush()?;
    }
    Ok(())
}
