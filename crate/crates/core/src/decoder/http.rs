use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{Backend, BackendKind, Capabilities, GenerationRequest};
use crate::core::Image;
use crate::error::{Error, Result};

/// Environment variable consulted for the backend endpoint.
pub const ENDPOINT_ENV: &str = "TXSK_BACKEND_ENDPOINT";
const MAX_RESPONSE_BYTES: u64 = 256 << 20;

/// JSON body sent to a production backend. The response is a PNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationPayload {
    pub text: String,
    /// Base64 PNG of the sketch, for text+sketch backends.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sketch: Option<String>,
    pub seed: u64,
    pub steps: u32,
    pub guidance: f64,
    pub width: usize,
    pub height: usize,
}

impl GenerationPayload {
    /// Builds the payload; the sketch is resized (bicubic) to `resolution` when given.
    pub fn from_request(
        req: &GenerationRequest<'_>,
        resolution: Option<(usize, usize)>,
    ) -> Result<Self> {
        let sketch = match req.sketch {
            Some(s) => {
                let s = match resolution {
                    Some((w, h)) => s.resized(w, h)?,
                    None => s.clone(),
                };
                Some(base64::engine::general_purpose::STANDARD.encode(s.to_png_bytes()?))
            }
            None => None,
        };
        Ok(Self {
            text: req.text.to_owned(),
            sketch,
            seed: req.seed,
            steps: req.steps,
            guidance: req.guidance,
            width: req.width,
            height: req.height,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RetryPolicy {
    pub attempts: u32,
    pub backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            backoff: Duration::from_millis(500),
        }
    }
}

fn capabilities_of(kind: BackendKind) -> Capabilities {
    Capabilities {
        accepts_text_only: kind == BackendKind::TextOnly,
        accepts_sketch: kind == BackendKind::TextSketch,
        deterministic: false,
    }
}

fn check_kind(kind: BackendKind) -> Result<()> {
    if kind == BackendKind::Mock {
        return Err(Error::Config(
            "a remote backend must be text or text+sketch".into(),
        ));
    }
    Ok(())
}

fn decode_png(bytes: &[u8], origin: &str) -> Result<Image> {
    Image::from_png_bytes(bytes)
        .map_err(|e| Error::Backend(format!("{origin}: bad image in response: {e}")))
}

/// Backend reached over HTTP: `POST endpoint` with a [`GenerationPayload`].
#[derive(Debug, Clone)]
pub struct HttpBackend {
    endpoint: String,
    kind: BackendKind,
    timeout: Duration,
    pub retry: RetryPolicy,
    pub steps: u32,
    pub guidance: f64,
    /// Native resolution the sketch is resized to before sending.
    pub sketch_resolution: Option<(usize, usize)>,
    agent: ureq::Agent,
}

enum Failure {
    Retry(Error),
    Fatal(Error),
}

impl HttpBackend {
    pub fn new(endpoint: impl Into<String>, kind: BackendKind, timeout: Duration) -> Result<Self> {
        check_kind(kind)?;
        let endpoint = endpoint.into();
        if !(endpoint.starts_with("http://") || endpoint.starts_with("https://")) {
            return Err(Error::Config(format!(
                "endpoint {endpoint:?} is not an http(s) URL"
            )));
        }
        Ok(Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
            endpoint,
            kind,
            timeout,
            retry: RetryPolicy::default(),
            steps: super::DEFAULT_SAMPLER_STEPS,
            guidance: super::DEFAULT_GUIDANCE,
            sketch_resolution: None,
        })
    }

    /// Endpoint taken from [`ENDPOINT_ENV`].
    pub fn from_env(kind: BackendKind, timeout: Duration) -> Result<Self> {
        let endpoint = std::env::var(ENDPOINT_ENV)
            .map_err(|_| Error::Config(format!("{ENDPOINT_ENV} is not set")))?;
        Self::new(endpoint, kind, timeout)
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn attempt(&self, body: &str) -> std::result::Result<Image, Failure> {
        let response = self
            .agent
            .post(&self.endpoint)
            .set("Content-Type", "application/json")
            .send_string(body);
        match response {
            Ok(resp) => {
                let mut bytes = Vec::new();
                resp.into_reader()
                    .take(MAX_RESPONSE_BYTES)
                    .read_to_end(&mut bytes)
                    .map_err(|e| {
                        if is_timeout(&e) {
                            Failure::Retry(Error::Timeout(self.timeout))
                        } else {
                            Failure::Retry(Error::Backend(format!("{}: {e}", self.endpoint)))
                        }
                    })?;
                decode_png(&bytes, &self.endpoint).map_err(Failure::Fatal)
            }
            Err(ureq::Error::Status(code, resp)) => {
                let msg = resp.into_string().unwrap_or_default();
                let err =
                    Error::Backend(format!("{} returned {code}: {}", self.endpoint, msg.trim()));
                if code >= 500 || code == 429 {
                    Err(Failure::Retry(err))
                } else {
                    Err(Failure::Fatal(err))
                }
            }
            Err(ureq::Error::Transport(t)) => {
                let timed_out = std::error::Error::source(&t)
                    .and_then(|s| s.downcast_ref::<std::io::Error>())
                    .is_some_and(is_timeout);
                if timed_out {
                    Err(Failure::Retry(Error::Timeout(self.timeout)))
                } else {
                    Err(Failure::Retry(Error::Backend(format!(
                        "{}: {t}",
                        self.endpoint
                    ))))
                }
            }
        }
    }
}

fn is_timeout(e: &std::io::Error) -> bool {
    matches!(
        e.kind(),
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
    )
}

impl Backend for HttpBackend {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn capabilities(&self) -> Capabilities {
        capabilities_of(self.kind)
    }

    fn sampler(&self) -> (u32, f64) {
        (self.steps, self.guidance)
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<Image> {
        let payload = GenerationPayload::from_request(req, self.sketch_resolution)?;
        let body = serde_json::to_string(&payload).map_err(|e| Error::Backend(e.to_string()))?;
        let attempts = self.retry.attempts.max(1);
        let mut last = None;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.retry.backoff * attempt);
            }
            match self.attempt(&body) {
                Ok(img) => return Ok(img),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Retry(e)) => {
                    log::warn!("backend attempt {} of {attempts} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

/// Backend run as a child process per request: JSON [`GenerationPayload`]
/// on stdin, PNG on stdout.
#[derive(Debug, Clone)]
pub struct SubprocessBackend {
    pub program: PathBuf,
    pub args: Vec<String>,
    kind: BackendKind,
    pub timeout: Duration,
    pub steps: u32,
    pub guidance: f64,
    pub sketch_resolution: Option<(usize, usize)>,
}

impl SubprocessBackend {
    pub fn new(
        program: impl Into<PathBuf>,
        args: Vec<String>,
        kind: BackendKind,
        timeout: Duration,
    ) -> Result<Self> {
        check_kind(kind)?;
        Ok(Self {
            program: program.into(),
            args,
            kind,
            timeout,
            steps: super::DEFAULT_SAMPLER_STEPS,
            guidance: super::DEFAULT_GUIDANCE,
            sketch_resolution: None,
        })
    }
}

impl Backend for SubprocessBackend {
    fn kind(&self) -> BackendKind {
        self.kind
    }

    fn capabilities(&self) -> Capabilities {
        capabilities_of(self.kind)
    }

    fn sampler(&self) -> (u32, f64) {
        (self.steps, self.guidance)
    }

    fn generate(&self, req: &GenerationRequest<'_>) -> Result<Image> {
        let payload = GenerationPayload::from_request(req, self.sketch_resolution)?;
        let body = serde_json::to_vec(&payload).map_err(|e| Error::Backend(e.to_string()))?;
        let name = self.program.display().to_string();
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| Error::Backend(format!("{name}: {e}")))?;
        let mut stdin = child.stdin.take().expect("stdin is piped");
        let writer = std::thread::spawn(move || stdin.write_all(&body));
        let mut stdout = child.stdout.take().expect("stdout is piped");
        let reader = std::thread::spawn(move || {
            let mut buf = Vec::new();
            stdout.read_to_end(&mut buf).map(|_| buf)
        });
        let deadline = Instant::now() + self.timeout;
        let status = loop {
            match child.try_wait() {
                Ok(Some(status)) => break status,
                Ok(None) if Instant::now() >= deadline => {
                    let _ = child.kill();
                    let _ = child.wait();
                    return Err(Error::Timeout(self.timeout));
                }
                Ok(None) => std::thread::sleep(Duration::from_millis(10)),
                Err(e) => return Err(Error::Backend(format!("{name}: {e}"))),
            }
        };
        let _ = writer.join();
        let out = reader
            .join()
            .map_err(|_| Error::Backend(format!("{name}: reader panicked")))?
            .map_err(|e| Error::Backend(format!("{name}: {e}")))?;
        if !status.success() {
            let mut err = String::new();
            if let Some(mut s) = child.stderr.take() {
                let _ = s.read_to_string(&mut err);
            }
            return Err(Error::Backend(format!(
                "{name} exited with {status}: {}",
                err.trim()
            )));
        }
        decode_png(&out, &name)
    }
}
