//! Minimal model server for exercising the wire protocol end to end.

use std::io::{self, BufReader};
use std::net::TcpListener;
use std::str::FromStr;
use std::thread;

use bitinduct::backends::wire::{self, Handshake, PROTOCOL_VERSION};
use bitinduct::backends::{CompletionRequest, CompletionResponse};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MockMode {
    /// Repeats the trailing `max_symbols` characters of the prompt, which
    /// for a trial prompt is the encoded query.
    EchoQuery,
    /// Answers with the given text regardless of the prompt.
    Constant(String),
}

impl FromStr for MockMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once('=') {
            None if s == "echo-query" => Ok(MockMode::EchoQuery),
            Some(("constant", text)) => Ok(MockMode::Constant(text.to_string())),
            _ => Err(format!("unknown mock mode {s:?} (use echo-query or constant=TEXT)")),
        }
    }
}

impl MockMode {
    pub fn answer(&self, req: &CompletionRequest) -> CompletionResponse {
        let completion = match self {
            MockMode::EchoQuery => {
                let chars: Vec<char> = req.prompt.chars().collect();
                chars[chars.len().saturating_sub(req.max_symbols)..].iter().collect()
            }
            MockMode::Constant(text) => text.clone(),
        };
        CompletionResponse::new(req.request_id.clone(), completion)
    }
}

pub fn handshake(model_id: &str, max_in_flight: usize) -> Handshake {
    Handshake { protocol_version: PROTOCOL_VERSION, model_id: model_id.to_string(), max_in_flight, context_length: None }
}

pub fn serve_stdio(mode: &MockMode, hs: &Handshake) -> io::Result<()> {
    let stdin = io::stdin();
    wire::serve(stdin.lock(), io::stdout().lock(), hs, |r| mode.answer(r))
}

/// Serves every connection on its own thread until the process exits.
pub fn serve_tcp(listener: TcpListener, mode: MockMode, hs: Handshake) -> io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let (mode, hs) = (mode.clone(), hs.clone());
        thread::spawn(move || {
            let reader = match stream.try_clone() {
                Ok(s) => BufReader::new(s),
                Err(e) => return log::warn!("mock server: {e}"),
            };
            if let Err(e) = wire::serve(reader, stream, &hs, |r| mode.answer(r)) {
                log::warn!("mock server connection ended: {e}");
            }
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes() {
        let req = CompletionRequest::greedy("r", "0110920", 3);
        assert_eq!("echo-query".parse::<MockMode>().unwrap().answer(&req).completion, "920");
        assert_eq!("constant=AAAA".parse::<MockMode>().unwrap().answer(&req).completion, "AAAA");
        assert!("loud".parse::<MockMode>().is_err());
    }
}
