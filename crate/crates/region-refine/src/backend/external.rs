//! HTTP client for an external refine service.
//!
//! Wire protocol: `POST {base_url}/v1/refine` with a JSON body of
//! base64-encoded PNGs. PNG keeps the transport lossless; JSON keeps the
//! mock server trivial.
//!
//! ```json
//! {
//!   "image": "<base64 png>",
//!   "mask": "<base64 png>",
//!   "reference": "<base64 png, optional>",
//!   "instruction": "...",
//!   "crop_spec": { "box": {...}, "canvas": {...}, "target": {...}, "margin": n }
//! }
//! ```
//!
//! The response is `{"image": "<base64 png>"}`. Transport failures, non-200
//! statuses, malformed payloads, and dimension mismatches surface as the
//! distinct [`BackendError`] variants.

use std::sync::{Condvar, Mutex};
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::backend::{RefineRequest, Refiner};
use crate::error::{BackendError, Error, Result};
use crate::focus::CropSpec;
use crate::raster::RasterImage;

pub const REFINE_ENDPOINT: &str = "/v1/refine";
pub const BASE_URL_ENV: &str = "REFINE_BACKEND_URL";

#[derive(Debug, Serialize, Deserialize)]
pub struct WireRequest {
    pub image: String,
    pub mask: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
    pub instruction: String,
    pub crop_spec: CropSpec,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct WireResponse {
    pub image: String,
}

pub(crate) fn resolve_base_url(configured: Option<&str>) -> Result<String> {
    if let Some(url) = configured {
        return Ok(url.to_string());
    }
    std::env::var(BASE_URL_ENV).map_err(|_| {
        Error::Config(format!(
            "external backend needs base_url in config or the {BASE_URL_ENV} environment variable"
        ))
    })
}

/// Counting semaphore capping in-flight requests.
struct Permits {
    available: Mutex<usize>,
    cv: Condvar,
}

impl Permits {
    fn new(count: usize) -> Self {
        Self {
            available: Mutex::new(count.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut n = self.available.lock().expect("permit lock");
        while *n == 0 {
            n = self.cv.wait(n).expect("permit lock");
        }
        *n -= 1;
        PermitGuard { permits: self }
    }
}

struct PermitGuard<'a> {
    permits: &'a Permits,
}

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        let mut n = self.permits.available.lock().expect("permit lock");
        *n += 1;
        self.permits.cv.notify_one();
    }
}

pub struct ExternalRefiner {
    base_url: String,
    timeout_ms: u64,
    retries: u32,
    permits: Permits,
    agent: ureq::Agent,
}

impl ExternalRefiner {
    pub fn new(base_url: String, timeout_ms: u64, retries: u32, max_concurrent: usize) -> Self {
        let agent = ureq::builder()
            .timeout(Duration::from_millis(timeout_ms))
            .build();
        Self {
            base_url,
            timeout_ms,
            retries,
            permits: Permits::new(max_concurrent),
            agent,
        }
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    fn endpoint(&self) -> String {
        format!("{}{}", self.base_url.trim_end_matches('/'), REFINE_ENDPOINT)
    }

    fn encode_request(&self, request: &RefineRequest) -> Result<WireRequest> {
        let reference = match &request.reference {
            Some(img) => Some(BASE64.encode(img.encode_png()?)),
            None => None,
        };
        Ok(WireRequest {
            image: BASE64.encode(request.focused_input.encode_png()?),
            mask: BASE64.encode(request.region_mask.encode_png()?),
            reference,
            instruction: request.instruction.clone(),
            crop_spec: request.crop_spec,
        })
    }

    fn post_once(&self, body: &WireRequest) -> std::result::Result<RasterImage, BackendError> {
        let response = self
            .agent
            .post(&self.endpoint())
            .send_json(body)
            .map_err(|e| self.map_ureq_error(e))?;
        let wire: WireResponse = response
            .into_json()
            .map_err(|e| BackendError::MalformedPayload(e.to_string()))?;
        let bytes = BASE64
            .decode(wire.image.as_bytes())
            .map_err(|e| BackendError::MalformedPayload(format!("base64: {e}")))?;
        RasterImage::decode_png(&bytes)
            .map_err(|e| BackendError::MalformedPayload(format!("png: {e}")))
    }

    fn map_ureq_error(&self, err: ureq::Error) -> BackendError {
        match err {
            ureq::Error::Status(code, _) => BackendError::Status(code),
            ureq::Error::Transport(t) => {
                if transport_is_timeout(&t) {
                    BackendError::Timeout(self.timeout_ms)
                } else {
                    BackendError::Transport(t.to_string())
                }
            }
        }
    }
}

fn transport_is_timeout(err: &ureq::Transport) -> bool {
    let mut source: Option<&(dyn std::error::Error + 'static)> = Some(err);
    while let Some(e) = source {
        if let Some(io) = e.downcast_ref::<std::io::Error>() {
            if matches!(
                io.kind(),
                std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock
            ) {
                return true;
            }
        }
        source = e.source();
    }
    err.to_string().to_lowercase().contains("timed out")
}

fn retryable(err: &BackendError) -> bool {
    matches!(
        err,
        BackendError::Transport(_) | BackendError::Timeout(_) | BackendError::Status(500..=599)
    )
}

impl Refiner for ExternalRefiner {
    fn backend_id(&self) -> String {
        format!("external:{}", self.base_url)
    }

    fn refine_crop(&self, request: &RefineRequest) -> Result<RasterImage> {
        let body = self.encode_request(request)?;
        let _permit = self.permits.acquire();
        let mut attempt = 0u32;
        let refined = loop {
            match self.post_once(&body) {
                Ok(img) => break img,
                Err(e) if retryable(&e) && attempt < self.retries => {
                    attempt += 1;
                }
                Err(e) => return Err(e.into()),
            }
        };
        if refined.height() != request.focused_input.height()
            || refined.width() != request.focused_input.width()
        {
            return Err(BackendError::DimMismatch {
                got_h: refined.height(),
                got_w: refined.width(),
                want_h: request.focused_input.height(),
                want_w: request.focused_input.width(),
            }
            .into());
        }
        Ok(refined)
    }
}
