use std::io;
use std::thread;
use std::time::Duration;

use artvista_core::{RasterImage, SplitMix64};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use crate::{BackendConfig, GenRequest, GenaiError, Result, Style};

/// Responses larger than this are rejected rather than buffered.
const MAX_RESPONSE_BYTES: u64 = 64 * 1024 * 1024;
const BODY_EXCERPT_CHARS: usize = 512;

#[derive(Serialize)]
struct Txt2ImgBody<'a> {
    prompt: &'a str,
    count: u32,
    seed: u64,
    style: Option<&'static str>,
}

#[derive(Serialize)]
struct StylizeBody<'a> {
    image: &'a str,
    style: &'static str,
    seed: u64,
}

#[derive(Deserialize)]
struct Txt2ImgReply {
    images: Vec<String>,
}

#[derive(Deserialize)]
struct StylizeReply {
    image: String,
}

fn decode_png_b64(field: &str, data: &str) -> Result<RasterImage> {
    let bytes = STANDARD
        .decode(data.trim())
        .map_err(|e| GenaiError::Decode(format!("{field}: invalid base64: {e}")))?;
    RasterImage::decode(&bytes).map_err(|e| GenaiError::Decode(format!("{field}: {e}")))
}

/// Parses a `/v1/txt2img` response body.
pub fn decode_txt2img_response(body: &[u8]) -> Result<Vec<RasterImage>> {
    let reply: Txt2ImgReply = serde_json::from_slice(body).map_err(|e| GenaiError::Decode(e.to_string()))?;
    reply
        .images
        .iter()
        .enumerate()
        .map(|(i, s)| decode_png_b64(&format!("images[{i}]"), s))
        .collect()
}

/// Parses a `/v1/stylize` response body.
pub fn decode_stylize_response(body: &[u8]) -> Result<RasterImage> {
    let reply: StylizeReply = serde_json::from_slice(body).map_err(|e| GenaiError::Decode(e.to_string()))?;
    decode_png_b64("image", &reply.image)
}

fn excerpt(body: &[u8]) -> String {
    String::from_utf8_lossy(body).chars().take(BODY_EXCERPT_CHARS).collect()
}

fn classify(err: ureq::Error) -> GenaiError {
    match err {
        ureq::Error::Timeout(t) => GenaiError::Timeout(t.to_string()),
        ureq::Error::Io(e) if matches!(e.kind(), io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock) => {
            GenaiError::Timeout(e.to_string())
        }
        ureq::Error::BodyExceedsLimit(n) => GenaiError::Decode(format!("response exceeds {n} bytes")),
        other => GenaiError::Transport(other.to_string()),
    }
}

fn retryable(err: &GenaiError) -> bool {
    match err {
        GenaiError::Transport(_) | GenaiError::Timeout(_) => true,
        GenaiError::Backend { status, .. } => *status >= 500 || *status == 429,
        GenaiError::InvalidArgument(_) | GenaiError::Decode(_) => false,
    }
}

/// `base · 2^attempt`, scaled by a factor in [0.8, 1.2].
fn backoff(base: Duration, attempt: u32, rng: &mut SplitMix64) -> Duration {
    let factor = 0.8 + 0.4 * rng.next_f64();
    base.mul_f64(2f64.powi(attempt as i32) * factor)
}

fn post_json(cfg: &BackendConfig, url: &str, body: &[u8], jitter_seed: u64) -> Result<Vec<u8>> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(cfg.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let mut rng = SplitMix64::new(jitter_seed);
    let mut attempt = 0;
    loop {
        let result = agent
            .post(url)
            .header("content-type", "application/json")
            .send(body)
            .map_err(classify)
            .and_then(|mut resp| {
                let status = resp.status().as_u16();
                let bytes = resp
                    .body_mut()
                    .with_config()
                    .limit(MAX_RESPONSE_BYTES)
                    .read_to_vec()
                    .map_err(classify)?;
                if (200..300).contains(&status) {
                    Ok(bytes)
                } else {
                    Err(GenaiError::Backend {
                        status,
                        body: excerpt(&bytes),
                    })
                }
            });
        match result {
            Err(e) if attempt < cfg.retries && retryable(&e) => {
                thread::sleep(backoff(cfg.backoff_base, attempt, &mut rng));
                attempt += 1;
            }
            other => return other,
        }
    }
}

fn endpoint(base: &str, path: &str) -> String {
    format!("{}/{path}", base.trim_end_matches('/'))
}

pub(crate) fn txt2img(cfg: &BackendConfig, base: &str, req: &GenRequest) -> Result<Vec<RasterImage>> {
    let body = serde_json::to_vec(&Txt2ImgBody {
        prompt: &req.prompt,
        count: req.count,
        seed: req.seed,
        style: req.style.map(Style::as_str),
    })
    .expect("plain struct serializes");
    let reply = post_json(cfg, &endpoint(base, "v1/txt2img"), &body, req.seed)?;
    decode_txt2img_response(&reply)
}

pub(crate) fn stylize(cfg: &BackendConfig, base: &str, img: &RasterImage, style: Style, seed: u64) -> Result<RasterImage> {
    let png = img
        .encode_png()
        .map_err(|e| GenaiError::InvalidArgument(format!("cannot encode input image: {e}")))?;
    let body = serde_json::to_vec(&StylizeBody {
        image: &STANDARD.encode(png),
        style: style.as_str(),
        seed,
    })
    .expect("plain struct serializes");
    let reply = post_json(cfg, &endpoint(base, "v1/stylize"), &body, seed)?;
    decode_stylize_response(&reply)
}
