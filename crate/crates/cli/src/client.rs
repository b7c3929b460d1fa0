use reqwest::blocking::{multipart, Client as Http, RequestBuilder, Response};
use reqwest::Method;
use serde_json::Value;

pub const API_PREFIX: &str = "/api/v1";

#[derive(Debug)]
pub enum Failure {
    /// The service answered with an error body.
    Api { status: u16, code: String, message: String },
    /// The service could not be reached or answered garbage.
    Transport(String),
    /// Bad arguments detected after parsing.
    Usage(String),
    /// Something failed on this machine.
    Local { code: &'static str, message: String },
}

impl Failure {
    pub fn code(&self) -> &str {
        match self {
            Failure::Api { code, .. } => code,
            Failure::Transport(_) => "Transport",
            Failure::Usage(_) => "Usage",
            Failure::Local { code, .. } => code,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Api { message, .. } => message,
            Failure::Transport(m) | Failure::Usage(m) | Failure::Local { message: m, .. } => m,
        }
    }

    pub fn io(e: std::io::Error, what: &std::path::Path) -> Self {
        Failure::Local {
            code: "Io",
            message: format!("{}: {e}", what.display()),
        }
    }
}

pub struct Client {
    http: Http,
    base: String,
    token: Option<String>,
}

impl Client {
    pub fn new(endpoint: &str, token: Option<String>) -> Self {
        Self {
            http: Http::new(),
            base: format!("{}{API_PREFIX}", endpoint.trim_end_matches('/')),
            token,
        }
    }

    fn request(&self, method: Method, path: &str) -> RequestBuilder {
        let rb = self.http.request(method, format!("{}{path}", self.base));
        match &self.token {
            Some(t) => rb.bearer_auth(t),
            None => rb,
        }
    }

    fn send(&self, rb: RequestBuilder) -> Result<Response, Failure> {
        let r = rb.send().map_err(|e| Failure::Transport(e.to_string()))?;
        if r.status().is_success() {
            return Ok(r);
        }
        let status = r.status().as_u16();
        let text = r.text().unwrap_or_default();
        let body: Value = serde_json::from_str(&text).unwrap_or(Value::Null);
        match (body["error"]["code"].as_str(), body["error"]["message"].as_str()) {
            (Some(code), message) => Err(Failure::Api {
                status,
                code: code.to_owned(),
                message: message.unwrap_or_default().to_owned(),
            }),
            _ => Err(Failure::Transport(format!("HTTP {status}: {text}"))),
        }
    }

    fn decode(r: Response) -> Result<Value, Failure> {
        if r.status().as_u16() == 204 {
            return Ok(Value::Null);
        }
        r.json()
            .map_err(|e| Failure::Transport(format!("malformed response: {e}")))
    }

    pub fn call(&self, method: Method, path: &str, body: Option<Value>) -> Result<Value, Failure> {
        let rb = self.request(method, path);
        let rb = match body {
            Some(b) => rb.json(&b),
            None => rb,
        };
        Self::decode(self.send(rb)?)
    }

    /// GET of a paged collection: items plus the `X-Total-Count` header.
    pub fn page(&self, path: &str) -> Result<(Value, Option<u64>), Failure> {
        let r = self.send(self.request(Method::GET, path))?;
        let total = r
            .headers()
            .get("x-total-count")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.parse().ok());
        Ok((Self::decode(r)?, total))
    }

    pub fn bytes(&self, path: &str) -> Result<Vec<u8>, Failure> {
        let r = self.send(self.request(Method::GET, path))?;
        r.bytes()
            .map(|b| b.to_vec())
            .map_err(|e| Failure::Transport(e.to_string()))
    }

    pub fn upload(&self, filename: &str, bytes: Vec<u8>, tags: &[String]) -> Result<Value, Failure> {
        let mut form =
            multipart::Form::new().part("file", multipart::Part::bytes(bytes).file_name(filename.to_owned()));
        if !tags.is_empty() {
            form = form.text("tags", tags.join(","));
        }
        Self::decode(self.send(self.request(Method::POST, "/assets").multipart(form))?)
    }
}

/// Percent-encodes a query-string value.
pub fn encode(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for b in text.bytes() {
        if b.is_ascii_alphanumeric() || b"-._~".contains(&b) {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}
