use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::process::{Child, Command, Stdio};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::Duration;

use super::wire::{self, Handshake};
use super::{
    BackendError, BackendKind, CompletionRequest, CompletionResponse, ModelBackend, TrialContext,
    EXTERNAL_MAX_IN_FLIGHT,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Endpoint {
    /// `tcp://host:port` (or a bare `host:port`).
    Tcp(String),
    /// `stdio:COMMAND`; the command is run through `sh -c` and spoken to
    /// over its standard streams.
    Stdio(String),
}

impl FromStr for Endpoint {
    type Err = BackendError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |reason: &str| BackendError::BadSpec { spec: s.to_string(), reason: reason.to_string() };
        if let Some(addr) = s.strip_prefix("tcp://") {
            if addr.is_empty() {
                return Err(bad("missing address"));
            }
            return Ok(Endpoint::Tcp(addr.to_string()));
        }
        if let Some(cmd) = s.strip_prefix("stdio:") {
            if cmd.trim().is_empty() {
                return Err(bad("missing command"));
            }
            return Ok(Endpoint::Stdio(cmd.to_string()));
        }
        if s.contains("://") {
            return Err(bad("unsupported scheme (use tcp:// or stdio:)"));
        }
        match s.rsplit_once(':') {
            Some((host, port)) if !host.is_empty() && port.parse::<u16>().is_ok() => Ok(Endpoint::Tcp(s.to_string())),
            _ => Err(bad("expected builtin:NAME, tcp://HOST:PORT, HOST:PORT or stdio:COMMAND")),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Stdio(c) => write!(f, "stdio:{c}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExternalOptions {
    /// Per-request wait for a response.
    pub request_timeout: Duration,
    /// Wait for the server's handshake (covers model loading).
    pub handshake_timeout: Duration,
    /// Client-side cap; the effective limit is the smaller of this and the
    /// server's advertised value.
    pub max_in_flight: usize,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        Self {
            request_timeout: Duration::from_secs(600),
            handshake_timeout: Duration::from_secs(600),
            max_in_flight: EXTERNAL_MAX_IN_FLIGHT,
        }
    }
}

type Reply = Result<CompletionResponse, BackendError>;
type Pending = Arc<Mutex<HashMap<String, Sender<Reply>>>>;

struct Session {
    writer: Mutex<Box<dyn Write + Send>>,
    pending: Pending,
    alive: Arc<AtomicBool>,
    child: Option<Mutex<Child>>,
}

impl Drop for Session {
    fn drop(&mut self) {
        if let Some(child) = &self.child {
            let mut child = child.lock().unwrap_or_else(|e| e.into_inner());
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

fn fail_all(pending: &Pending, err: BackendError) {
    let mut map = pending.lock().unwrap_or_else(|e| e.into_inner());
    for (_, tx) in map.drain() {
        let _ = tx.send(Err(err.clone()));
    }
}

impl Session {
    fn open(endpoint: &Endpoint, options: &ExternalOptions) -> Result<(Self, Handshake), BackendError> {
        let transport = |e: std::io::Error| BackendError::Transport(format!("{endpoint}: {e}"));
        let (reader, writer, child): (Box<dyn Read + Send>, Box<dyn Write + Send>, Option<Child>) = match endpoint {
            Endpoint::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(transport)?;
                stream.set_nodelay(true).ok();
                (Box::new(stream.try_clone().map_err(transport)?), Box::new(stream), None)
            }
            Endpoint::Stdio(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(transport)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                (Box::new(stdout), Box::new(stdin), Some(child))
            }
        };

        let pending: Pending = Arc::default();
        let alive = Arc::new(AtomicBool::new(true));
        let (hs_tx, hs_rx) = mpsc::channel();
        {
            let pending = Arc::clone(&pending);
            let alive = Arc::clone(&alive);
            thread::Builder::new()
                .name("bitinduct-wire-reader".into())
                .spawn(move || read_loop(BufReader::new(reader), hs_tx, pending, alive))
                .map_err(transport)?;
        }
        let session = Session { writer: Mutex::new(writer), pending, alive, child: child.map(Mutex::new) };
        let handshake = match hs_rx.recv_timeout(options.handshake_timeout) {
            Ok(hs) => hs?,
            Err(_) => return Err(BackendError::Handshake(format!("no handshake within {:?}", options.handshake_timeout))),
        };
        Ok((session, handshake))
    }

    fn send(&self, request: &CompletionRequest, timeout: Duration) -> Reply {
        let (tx, rx) = mpsc::channel();
        {
            let mut pending = self.pending.lock().unwrap_or_else(|e| e.into_inner());
            if pending.contains_key(&request.request_id) {
                return Err(BackendError::Transport(format!("duplicate in-flight request id {:?}", request.request_id)));
            }
            pending.insert(request.request_id.clone(), tx);
        }
        let line = wire::encode_line(request);
        let written = {
            let mut w = self.writer.lock().unwrap_or_else(|e| e.into_inner());
            w.write_all(line.as_bytes()).and_then(|_| w.flush())
        };
        if let Err(e) = written {
            self.pending.lock().unwrap_or_else(|e| e.into_inner()).remove(&request.request_id);
            self.alive.store(false, Ordering::SeqCst);
            return Err(BackendError::Transport(e.to_string()));
        }
        match rx.recv_timeout(timeout) {
            Ok(reply) => reply,
            Err(_) => {
                self.pending.lock().unwrap_or_else(|e| e.into_inner()).remove(&request.request_id);
                Err(BackendError::Timeout(timeout))
            }
        }
    }
}

fn read_loop<R: BufRead>(mut reader: R, hs_tx: Sender<Result<Handshake, BackendError>>, pending: Pending, alive: Arc<AtomicBool>) {
    let mut line = String::new();
    let first = reader.read_line(&mut line);
    let handshake = match first {
        Ok(0) => Err(BackendError::Handshake("connection closed before handshake".into())),
        Ok(_) => wire::decode_handshake(&line),
        Err(e) => Err(BackendError::Handshake(e.to_string())),
    };
    let ok = handshake.is_ok();
    let _ = hs_tx.send(handshake);
    if !ok {
        alive.store(false, Ordering::SeqCst);
        return;
    }
    let fault = loop {
        line.clear();
        match reader.read_line(&mut line) {
            Ok(0) => break BackendError::Transport("connection closed".into()),
            Err(e) => break BackendError::Transport(e.to_string()),
            Ok(_) if line.trim().is_empty() => continue,
            Ok(_) => {}
        }
        let response = match wire::decode_response(&line) {
            Ok(r) => r,
            Err(e) => break e,
        };
        let waiter = pending.lock().unwrap_or_else(|e| e.into_inner()).remove(&response.request_id);
        match waiter {
            Some(tx) => {
                let _ = tx.send(Ok(response));
            }
            None => {
                // unmatched ids leave the stream in an unknown state
                break BackendError::RequestIdMismatch {
                    expected: "an in-flight request".into(),
                    got: response.request_id,
                };
            }
        }
    };
    log::warn!("external backend session ended: {fault}");
    alive.store(false, Ordering::SeqCst);
    fail_all(&pending, fault);
}

/// Client for a model server speaking the wire protocol. A dead session is
/// reopened on the next request.
pub struct ExternalBackend {
    endpoint: Endpoint,
    options: ExternalOptions,
    handshake: Handshake,
    label: String,
    session: Mutex<Option<Arc<Session>>>,
}

impl ExternalBackend {
    pub fn connect(endpoint: Endpoint, options: ExternalOptions) -> Result<Self, BackendError> {
        let (session, handshake) = Session::open(&endpoint, &options)?;
        log::info!(
            "connected to {endpoint}: model {} (max_in_flight {}, context {:?})",
            handshake.model_id,
            handshake.max_in_flight,
            handshake.context_length
        );
        Ok(Self {
            label: handshake.model_id.clone(),
            endpoint,
            options,
            handshake,
            session: Mutex::new(Some(Arc::new(session))),
        })
    }

    pub fn handshake(&self) -> &Handshake {
        &self.handshake
    }

    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    fn session(&self) -> Result<Arc<Session>, BackendError> {
        let mut slot = self.session.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(s) = slot.as_ref().filter(|s| s.alive.load(Ordering::SeqCst)) {
            return Ok(Arc::clone(s));
        }
        log::info!("reconnecting to {}", self.endpoint);
        let (session, handshake) = Session::open(&self.endpoint, &self.options)?;
        if handshake.model_id != self.handshake.model_id {
            return Err(BackendError::Handshake(format!(
                "model changed across reconnect: {} -> {}",
                self.handshake.model_id, handshake.model_id
            )));
        }
        let session = Arc::new(session);
        *slot = Some(Arc::clone(&session));
        Ok(session)
    }
}

impl ModelBackend for ExternalBackend {
    fn id(&self) -> &str {
        &self.label
    }

    fn kind(&self) -> BackendKind {
        BackendKind::External
    }

    fn max_in_flight(&self) -> usize {
        self.options.max_in_flight.min(self.handshake.max_in_flight).max(1)
    }

    fn complete(&self, request: &CompletionRequest, _trial: Option<&TrialContext>) -> Result<CompletionResponse, BackendError> {
        let session = self.session()?;
        let mut response = session.send(request, self.options.request_timeout)?;
        if response.request_id != request.request_id {
            return Err(BackendError::RequestIdMismatch {
                expected: request.request_id.clone(),
                got: response.request_id,
            });
        }
        if response.completion.chars().count() > request.max_symbols {
            response.completion = response.completion.chars().take(request.max_symbols).collect();
        }
        Ok(response)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn endpoint_parsing() {
        assert_eq!("tcp://a:1".parse::<Endpoint>().unwrap(), Endpoint::Tcp("a:1".into()));
        assert_eq!("localhost:7070".parse::<Endpoint>().unwrap(), Endpoint::Tcp("localhost:7070".into()));
        assert_eq!("stdio:python3 -m x".parse::<Endpoint>().unwrap(), Endpoint::Stdio("python3 -m x".into()));
        assert!("stdio:".parse::<Endpoint>().is_err());
        assert!("http://x:1".parse::<Endpoint>().is_err());
        assert!("nonsense".parse::<Endpoint>().is_err());
    }

    #[test]
    fn connection_refused_is_transport_error() {
        let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        drop(listener);
        let err = ExternalBackend::connect(Endpoint::Tcp(addr.to_string()), ExternalOptions::default()).err().unwrap();
        assert!(matches!(err, BackendError::Transport(_)));
    }
}
