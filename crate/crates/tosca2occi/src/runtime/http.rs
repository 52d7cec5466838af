//! HTTP surface of the mock runtime and the matching client.
//!
//! | method | path | body |
//! |---|---|---|
//! | GET | `/configuration` | |
//! | GET | `/entity/{id}` | |
//! | PUT | `/entity/{id}` | entity body, 201 |
//! | PATCH | `/entity/{id}` | patch body |
//! | DELETE | `/entity/{id}` | |
//! | POST | `/entity/{id}/action/{name}` | |
//! | POST | `/_fault` | fault spec |
//!
//! Ids are percent-encoded path segments. Errors come back as
//! `{"error": "...", "message": "..."}` with status 400, 404 or 409.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use percent_encoding::{percent_decode_str, utf8_percent_encode, NON_ALPHANUMERIC};
use serde::de::DeserializeOwned;
use serde::Serialize;
use tiny_http::{Header, Method, Response, Server};

use tosca2occi_core::occi::{Entity, OcciConfiguration};
use tosca2occi_core::orchestrator::{EntityBody, PatchBody};

use super::{FaultSpec, MockRuntime, RuntimeClient, RuntimeError};

/// A running server; dropping it stops the server.
pub struct ServerHandle {
    addr: SocketAddr,
    server: Arc<Server>,
    stop: Arc<AtomicBool>,
    thread: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Blocks until the server thread exits.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.server.unblock();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.thread.is_some() {
            self.shutdown();
        }
    }
}

/// Serves `runtime` on `addr` (port 0 picks a free port).
pub fn serve(runtime: MockRuntime, addr: &str) -> std::io::Result<ServerHandle> {
    let server = Server::http(addr).map_err(std::io::Error::other)?;
    let addr =
        server.server_addr().to_ip().ok_or_else(|| std::io::Error::other("server is not bound to an IP address"))?;
    let server = Arc::new(server);
    let stop = Arc::new(AtomicBool::new(false));
    let thread = {
        let (server, stop) = (server.clone(), stop.clone());
        std::thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                match server.recv() {
                    Ok(request) => handle(&runtime, request),
                    Err(e) => {
                        log::debug!("receive failed: {e}");
                        break;
                    }
                }
            }
        })
    };
    log::info!("mock runtime listening on http://{addr}");
    Ok(ServerHandle { addr, server, stop, thread: Some(thread) })
}

fn json_header() -> Header {
    Header::from_bytes("Content-Type", "application/json").expect("static header")
}

fn reply(request: tiny_http::Request, status: u16, body: String) {
    let response = Response::from_string(body).with_status_code(status).with_header(json_header());
    if let Err(e) = request.respond(response) {
        log::debug!("response not delivered: {e}");
    }
}

fn parse_body<T: DeserializeOwned>(request: &mut tiny_http::Request) -> Result<T, RuntimeError> {
    let mut text = String::new();
    request.as_reader().read_to_string(&mut text).map_err(|e| RuntimeError::BadRequest(e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| RuntimeError::BadRequest(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("model types serialize")
}

enum Outcome {
    Ok(u16, String),
    Err(RuntimeError),
}

fn route(runtime: &MockRuntime, request: &mut tiny_http::Request) -> Outcome {
    let path = request.url().split('?').next().unwrap_or_default().to_string();
    let segments: Vec<String> =
        path.trim_matches('/').split('/').map(|s| percent_decode_str(s).decode_utf8_lossy().into_owned()).collect();
    let segments: Vec<&str> = segments.iter().map(String::as_str).collect();
    let method = request.method().clone();
    let result = match (&method, segments.as_slice()) {
        (Method::Get, ["configuration"]) => Ok((200, to_json(&runtime.snapshot()))),
        (Method::Get, ["entity", id]) => match runtime.entity(id) {
            Ok(Some(e)) => Ok((200, to_json(&e))),
            Ok(None) => Err(RuntimeError::NotFound((*id).into())),
            Err(e) => Err(e),
        },
        (Method::Put, ["entity", id]) => {
            parse_body::<EntityBody>(request).and_then(|b| runtime.create(id, &b)).map(|_| (201, "{}".into()))
        }
        (Method::Patch, ["entity", id]) => {
            parse_body::<PatchBody>(request).and_then(|p| runtime.update(id, &p)).map(|_| (200, "{}".into()))
        }
        (Method::Delete, ["entity", id]) => runtime.delete(id).map(|_| (200, "{}".into())),
        (Method::Post, ["entity", id, "action", action]) => runtime.action(id, action).map(|_| (200, "{}".into())),
        (Method::Post, ["_fault"]) => {
            parse_body::<FaultSpec>(request).map(|f| runtime.inject(f)).map(|_| (200, "{}".into()))
        }
        _ => Err(RuntimeError::NotFound(format!("{method} {path}"))),
    };
    match result {
        Ok((status, body)) => Outcome::Ok(status, body),
        Err(e) => Outcome::Err(e),
    }
}

fn handle(runtime: &MockRuntime, mut request: tiny_http::Request) {
    match route(runtime, &mut request) {
        Outcome::Ok(status, body) => reply(request, status, body),
        Outcome::Err(e) => {
            log::debug!("{} {} -> {e}", request.method(), request.url());
            reply(request, e.status(), to_json(&e))
        }
    }
}

/// [`RuntimeClient`] over HTTP.
pub struct HttpClient {
    base: String,
    agent: ureq::Agent,
}

impl HttpClient {
    pub fn new(base: &str) -> Self {
        let agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .new_agent();
        HttpClient { base: base.trim_end_matches('/').to_string(), agent }
    }

    fn entity_url(&self, id: &str) -> String {
        format!("{}/entity/{}", self.base, utf8_percent_encode(id, NON_ALPHANUMERIC))
    }

    fn finish(&self, result: Result<ureq::http::Response<ureq::Body>, ureq::Error>) -> Result<String, RuntimeError> {
        let mut response = result.map_err(|e| RuntimeError::Unreachable(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response.body_mut().read_to_string().map_err(|e| RuntimeError::Unreachable(e.to_string()))?;
        if (200..300).contains(&status) {
            return Ok(text);
        }
        Err(serde_json::from_str(&text).unwrap_or_else(|_| RuntimeError::from_status(status, text)))
    }

    fn send_json<T: Serialize>(&self, method: &str, url: &str, body: &T) -> Result<String, RuntimeError> {
        let body = to_json(body);
        let result = match method {
            "PUT" => self.agent.put(url).header("Content-Type", "application/json").send(body.as_str()),
            "PATCH" => self.agent.patch(url).header("Content-Type", "application/json").send(body.as_str()),
            _ => self.agent.post(url).header("Content-Type", "application/json").send(body.as_str()),
        };
        self.finish(result)
    }

    fn decode<T: DeserializeOwned>(text: &str) -> Result<T, RuntimeError> {
        serde_json::from_str(text).map_err(|e| RuntimeError::Unreachable(format!("malformed response: {e}")))
    }
}

impl RuntimeClient for HttpClient {
    fn configuration(&self) -> Result<OcciConfiguration, RuntimeError> {
        let text = self.finish(self.agent.get(format!("{}/configuration", self.base)).call())?;
        Self::decode(&text)
    }

    fn create(&self, id: &str, body: &EntityBody) -> Result<(), RuntimeError> {
        self.send_json("PUT", &self.entity_url(id), body).map(drop)
    }

    fn update(&self, id: &str, patch: &PatchBody) -> Result<(), RuntimeError> {
        self.send_json("PATCH", &self.entity_url(id), patch).map(drop)
    }

    fn delete(&self, id: &str) -> Result<(), RuntimeError> {
        self.finish(self.agent.delete(self.entity_url(id)).call()).map(drop)
    }

    fn action(&self, id: &str, action: &str) -> Result<(), RuntimeError> {
        let url = format!("{}/action/{}", self.entity_url(id), utf8_percent_encode(action, NON_ALPHANUMERIC));
        self.finish(self.agent.post(url).send_empty()).map(drop)
    }

    fn inject_fault(&self, fault: &FaultSpec) -> Result<(), RuntimeError> {
        self.send_json("POST", &format!("{}/_fault", self.base), fault).map(drop)
    }

    fn entity(&self, id: &str) -> Result<Option<Entity>, RuntimeError> {
        match self.finish(self.agent.get(self.entity_url(id)).call()) {
            Ok(text) => Self::decode(&text).map(Some),
            Err(RuntimeError::NotFound(_)) => Ok(None),
            Err(e) => Err(e),
        }
    }
}
