//! A small in-repo refine service for integration tests and local runs.
//!
//! Speaks the same `/v1/refine` protocol as a real deployment. Normal modes:
//! echo the input crop, paste the reference image, or add seeded noise.
//! Fault modes return errors, garbage, slow responses, or wrong-sized images
//! so client error mapping can be exercised.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;
use std::thread::JoinHandle;
use std::time::Duration;

use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tiny_http::{Header, Method, Response, Server};

use crate::backend::{WireRequest, WireResponse, REFINE_ENDPOINT};
use crate::error::{Error, Result};
use crate::raster::{RasterImage, ResizeMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MockMode {
    /// Return the request image unchanged (byte-for-byte base64 echo).
    Echo,
    /// Return the reference image, resized to the request image dims.
    ReferencePaste,
    /// Return the request image plus seeded uniform noise.
    Noise { amplitude: f32, seed: u64 },
    /// Always respond with this HTTP status.
    Fail { status: u16 },
    /// Respond 200 with a body that is not JSON.
    Garbage,
    /// Sleep before echoing, to trip client timeouts.
    Delay { ms: u64 },
    /// Echo at the wrong resolution, to trip dimension validation.
    WrongSize,
}

pub struct MockRefineServer {
    addr: SocketAddr,
    shutdown: Arc<AtomicBool>,
    handle: Option<JoinHandle<()>>,
}

impl MockRefineServer {
    /// Bind 127.0.0.1 on an ephemeral port and serve until dropped.
    pub fn spawn(mode: MockMode) -> Result<Self> {
        let server = Server::http("127.0.0.1:0")
            .map_err(|e| Error::Config(format!("mock server bind: {e}")))?;
        let addr = match server.server_addr() {
            tiny_http::ListenAddr::IP(ip) => ip,
            other => return Err(Error::Config(format!("unexpected listen addr {other:?}"))),
        };
        let shutdown = Arc::new(AtomicBool::new(false));
        let flag = shutdown.clone();
        let counter = Arc::new(AtomicU64::new(0));
        let handle = std::thread::spawn(move || {
            while !flag.load(Ordering::Relaxed) {
                match server.recv_timeout(Duration::from_millis(50)) {
                    Ok(Some(request)) => handle_request(request, mode, &counter),
                    Ok(None) => {}
                    Err(_) => break,
                }
            }
        });
        Ok(Self {
            addr,
            shutdown,
            handle: Some(handle),
        })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for MockRefineServer {
    fn drop(&mut self) {
        self.shutdown.store(true, Ordering::Relaxed);
        if let Some(handle) = self.handle.take() {
            let _ = handle.join();
        }
    }
}

fn json_response(body: String) -> Response<std::io::Cursor<Vec<u8>>> {
    Response::from_string(body).with_header(
        Header::from_bytes(&b"Content-Type"[..], &b"application/json"[..])
            .expect("static header"),
    )
}

fn handle_request(mut request: tiny_http::Request, mode: MockMode, counter: &AtomicU64) {
    if request.method() != &Method::Post || request.url() != REFINE_ENDPOINT {
        let _ = request.respond(Response::from_string("not found").with_status_code(404));
        return;
    }
    let mut body = String::new();
    if std::io::Read::read_to_string(request.as_reader(), &mut body).is_err() {
        let _ = request.respond(Response::from_string("bad body").with_status_code(400));
        return;
    }
    let wire: WireRequest = match serde_json::from_str(&body) {
        Ok(w) => w,
        Err(e) => {
            let _ = request.respond(
                Response::from_string(format!("bad request: {e}")).with_status_code(400),
            );
            return;
        }
    };

    let respond_image = |request: tiny_http::Request, b64: String| {
        let out = WireResponse { image: b64 };
        let _ = request.respond(json_response(
            serde_json::to_string(&out).expect("wire response serializes"),
        ));
    };

    match mode {
        MockMode::Echo => respond_image(request, wire.image),
        MockMode::Delay { ms } => {
            std::thread::sleep(Duration::from_millis(ms));
            respond_image(request, wire.image);
        }
        MockMode::Fail { status } => {
            let _ = request.respond(Response::from_string("mock failure").with_status_code(status));
        }
        MockMode::Garbage => {
            let _ = request.respond(json_response("this is not { json".into()));
        }
        MockMode::ReferencePaste => {
            let Some(reference) = wire.reference else {
                let _ = request
                    .respond(Response::from_string("missing reference").with_status_code(400));
                return;
            };
            match decode_b64_png(&reference).and_then(|img| {
                let input = decode_b64_png(&wire.image)?;
                let resized = img.resize(input.height(), input.width(), ResizeMode::Bilinear)?;
                Ok(BASE64.encode(resized.encode_png()?))
            }) {
                Ok(b64) => respond_image(request, b64),
                Err(e) => {
                    let _ = request.respond(
                        Response::from_string(format!("bad reference: {e}")).with_status_code(400),
                    );
                }
            }
        }
        MockMode::Noise { amplitude, seed } => {
            let n = counter.fetch_add(1, Ordering::Relaxed);
            match decode_b64_png(&wire.image).and_then(|img| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n);
                let noisy = RasterImage::from_fn(img.height(), img.width(), img.channels(), |y, x, c| {
                    (img.get(y, x, c) + rng.gen_range(-amplitude..=amplitude)).clamp(0.0, 1.0)
                })?;
                Ok(BASE64.encode(noisy.encode_png()?))
            }) {
                Ok(b64) => respond_image(request, b64),
                Err(e) => {
                    let _ = request.respond(
                        Response::from_string(format!("bad image: {e}")).with_status_code(400),
                    );
                }
            }
        }
        MockMode::WrongSize => {
            match decode_b64_png(&wire.image).and_then(|img| {
                let shrunk = img.resize(
                    (img.height() / 2).max(1),
                    (img.width() / 2).max(1),
                    ResizeMode::Bilinear,
                )?;
                Ok(BASE64.encode(shrunk.encode_png()?))
            }) {
                Ok(b64) => respond_image(request, b64),
                Err(e) => {
                    let _ = request.respond(
                        Response::from_string(format!("bad image: {e}")).with_status_code(400),
                    );
                }
            }
        }
    }
}

fn decode_b64_png(b64: &str) -> Result<RasterImage> {
    let bytes = BASE64
        .decode(b64.as_bytes())
        .map_err(|e| Error::InvalidParameter(format!("base64: {e}")))?;
    RasterImage::decode_png(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{refine, ExternalRefiner, RefineRequest};
    use crate::error::BackendError;
    use crate::focus::{make_crop_spec, FocusParams};
    use crate::raster::BinaryMask;
    use rand::Rng;

    /// Intensities on the 8-bit grid survive the PNG wire format losslessly.
    fn quantized(h: usize, w: usize, rng: &mut ChaCha8Rng) -> RasterImage {
        RasterImage::from_fn(h, w, 3, |_, _, _| rng.gen::<u8>() as f32 / 255.0).unwrap()
    }

    fn request_fixture(reference: Option<RasterImage>) -> RefineRequest {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        let mask = BinaryMask::from_fn(48, 48, |y, x| (16..32).contains(&y) && (16..32).contains(&x));
        let spec = make_crop_spec(&mask, &FocusParams { margin: 4, budget: 32 * 32, granule: 8 }).unwrap();
        let focused = quantized(spec.target.h, spec.target.w, &mut rng);
        let mask_c = crate::focus::crop_mask(&mask, &spec.rect)
            .unwrap()
            .resize_nearest(spec.target.h, spec.target.w)
            .unwrap();
        RefineRequest {
            focused_input: focused,
            reference,
            region_mask: mask_c,
            instruction: "restore".into(),
            crop_spec: spec,
        }
    }

    fn client_for(server: &MockRefineServer, timeout_ms: u64) -> ExternalRefiner {
        ExternalRefiner::new(server.base_url(), timeout_ms, 0, 2)
    }

    #[test]
    fn echo_round_trips_bit_exact() {
        let server = MockRefineServer::spawn(MockMode::Echo).unwrap();
        let request = request_fixture(None);
        let result = refine(&request, &client_for(&server, 5_000)).unwrap();
        assert!(result.refined.bit_eq(&request.focused_input));
        assert!(result.backend_id.starts_with("external:"));
    }

    #[test]
    fn reference_paste_returns_reference() {
        let request = request_fixture(None);
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let reference = quantized(
            request.focused_input.height(),
            request.focused_input.width(),
            &mut rng,
        );
        let request = RefineRequest {
            reference: Some(reference.clone()),
            ..request
        };
        let server = MockRefineServer::spawn(MockMode::ReferencePaste).unwrap();
        let result = refine(&request, &client_for(&server, 5_000)).unwrap();
        assert!(result.refined.bit_eq(&reference));
    }

    #[test]
    fn server_error_maps_to_status_variant() {
        let server = MockRefineServer::spawn(MockMode::Fail { status: 500 }).unwrap();
        let request = request_fixture(None);
        let err = refine(&request, &client_for(&server, 5_000)).unwrap_err();
        assert!(
            matches!(err, crate::Error::Backend(BackendError::Status(500))),
            "got {err:?}"
        );
    }

    #[test]
    fn garbage_maps_to_malformed_payload() {
        let server = MockRefineServer::spawn(MockMode::Garbage).unwrap();
        let request = request_fixture(None);
        let err = refine(&request, &client_for(&server, 5_000)).unwrap_err();
        assert!(
            matches!(err, crate::Error::Backend(BackendError::MalformedPayload(_))),
            "got {err:?}"
        );
    }

    #[test]
    fn slow_server_maps_to_timeout() {
        let server = MockRefineServer::spawn(MockMode::Delay { ms: 2_000 }).unwrap();
        let request = request_fixture(None);
        let err = refine(&request, &client_for(&server, 150)).unwrap_err();
        assert!(
            matches!(err, crate::Error::Backend(BackendError::Timeout(_))),
            "got {err:?}"
        );
    }

    #[test]
    fn unreachable_host_maps_to_transport() {
        // reserved TEST-NET address: nothing listens there
        let client = ExternalRefiner::new("http://192.0.2.1:9".into(), 200, 0, 1);
        let request = request_fixture(None);
        let err = refine(&request, &client).unwrap_err();
        assert!(
            matches!(
                err,
                crate::Error::Backend(BackendError::Transport(_) | BackendError::Timeout(_))
            ),
            "got {err:?}"
        );
    }

    #[test]
    fn wrong_size_maps_to_dim_mismatch() {
        let server = MockRefineServer::spawn(MockMode::WrongSize).unwrap();
        let request = request_fixture(None);
        let err = refine(&request, &client_for(&server, 5_000)).unwrap_err();
        assert!(
            matches!(err, crate::Error::Backend(BackendError::DimMismatch { .. })),
            "got {err:?}"
        );
    }

    #[test]
    fn noise_mode_perturbs_within_amplitude() {
        let server = MockRefineServer::spawn(MockMode::Noise { amplitude: 0.1, seed: 3 }).unwrap();
        let request = request_fixture(None);
        let result = refine(&request, &client_for(&server, 5_000)).unwrap();
        assert!(!result.refined.bit_eq(&request.focused_input));
        for (a, b) in result.refined.data().iter().zip(request.focused_input.data()) {
            // quantization adds at most 1/510 on top of the noise amplitude
            assert!((a - b).abs() <= 0.1 + 2.0 / 255.0);
        }
    }
}
