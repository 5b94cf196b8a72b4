//! Reference-image generation and stylization.
//!
//! Requests go to an HTTP backend when [`BackendConfig::base_url`] is set
//! and to an in-process deterministic mock otherwise. The wire protocol is
//! JSON over HTTP/1.1:
//!
//! * `POST {base}/v1/txt2img` with `{prompt, count, seed, style}` returns
//!   `{images: [base64 PNG, ...]}`
//! * `POST {base}/v1/stylize` with `{image: base64 PNG, style, seed}`
//!   returns `{image: base64 PNG}`

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use artvista_core::RasterImage;

mod http;
mod mock;

pub use http::{decode_stylize_response, decode_txt2img_response};
pub use mock::MOCK_IMAGE_SIZE;

pub const MAX_IMAGES_PER_REQUEST: u32 = 8;
pub const ENV_URL: &str = "ARTVISTA_GENAI_URL";
pub const ENV_TIMEOUT: &str = "ARTVISTA_GENAI_TIMEOUT_S";

#[derive(Debug, thiserror::Error, Clone, PartialEq, Eq)]
pub enum GenaiError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("backend unreachable: {0}")]
    Transport(String),
    #[error("backend returned HTTP {status}: {body}")]
    Backend { status: u16, body: String },
    #[error("backend timed out: {0}")]
    Timeout(String),
    #[error("could not decode backend response: {0}")]
    Decode(String),
}

pub type Result<T, E = GenaiError> = std::result::Result<T, E>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Style {
    Realistic,
    Colorful,
    Watercolor,
    Oil,
}

impl Style {
    pub const ALL: [Style; 4] = [Style::Realistic, Style::Colorful, Style::Watercolor, Style::Oil];

    pub fn as_str(self) -> &'static str {
        match self {
            Style::Realistic => "realistic",
            Style::Colorful => "colorful",
            Style::Watercolor => "watercolor",
            Style::Oil => "oil",
        }
    }
}

impl fmt::Display for Style {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Style {
    type Err = GenaiError;

    fn from_str(s: &str) -> Result<Self> {
        Style::ALL
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| {
                GenaiError::InvalidArgument(format!(
                    "unknown style {s:?} (expected realistic, colorful, watercolor or oil)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenRequest {
    pub prompt: String,
    pub count: u32,
    pub seed: u64,
    pub style: Option<Style>,
}

impl GenRequest {
    pub fn validate(&self) -> Result<()> {
        if self.prompt.trim().is_empty() {
            return Err(GenaiError::InvalidArgument("prompt must not be empty".into()));
        }
        if !(1..=MAX_IMAGES_PER_REQUEST).contains(&self.count) {
            return Err(GenaiError::InvalidArgument(format!(
                "count must be in 1..={MAX_IMAGES_PER_REQUEST}, got {}",
                self.count
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendConfig {
    /// `None` selects the offline mock.
    pub base_url: Option<String>,
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
    /// First backoff delay; doubles per retry with ±20 % jitter.
    pub backoff_base: Duration,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            base_url: None,
            timeout: Duration::from_secs(120),
            retries: 2,
            backoff_base: Duration::from_millis(250),
        }
    }
}

impl BackendConfig {
    pub fn mock() -> Self {
        Self::default()
    }

    /// Reads `ARTVISTA_GENAI_URL` and `ARTVISTA_GENAI_TIMEOUT_S`.
    pub fn from_env() -> Result<Self> {
        Self::from_lookup(|k| std::env::var(k).ok())
    }

    fn from_lookup(get: impl Fn(&str) -> Option<String>) -> Result<Self> {
        let mut cfg = Self {
            base_url: get(ENV_URL).map(|s| s.trim().to_string()).filter(|s| !s.is_empty()),
            ..Self::default()
        };
        if let Some(t) = get(ENV_TIMEOUT) {
            let secs: f64 = t
                .trim()
                .parse()
                .ok()
                .filter(|v: &f64| v.is_finite() && *v > 0.0)
                .ok_or_else(|| GenaiError::InvalidArgument(format!("{ENV_TIMEOUT} must be a positive number, got {t:?}")))?;
            cfg.timeout = Duration::from_secs_f64(secs);
        }
        Ok(cfg)
    }

    pub fn is_mock(&self) -> bool {
        self.base_url.is_none()
    }
}

/// Exactly `req.count` images.
pub fn generate_reference_images(cfg: &BackendConfig, req: &GenRequest) -> Result<Vec<RasterImage>> {
    req.validate()?;
    match &cfg.base_url {
        None => Ok(mock::generate(req)),
        Some(base) => {
            let images = http::txt2img(cfg, base, req)?;
            if images.len() != req.count as usize {
                return Err(GenaiError::Decode(format!(
                    "asked for {} images, backend returned {}",
                    req.count,
                    images.len()
                )));
            }
            Ok(images)
        }
    }
}

/// Same dimensions as `img`.
pub fn stylize_image(cfg: &BackendConfig, img: &RasterImage, style: Style, seed: u64) -> Result<RasterImage> {
    match &cfg.base_url {
        None => Ok(mock::stylize(img, style, seed)),
        Some(base) => {
            let out = http::stylize(cfg, base, img, style, seed)?;
            if (out.width(), out.height()) != (img.width(), img.height()) {
                return Err(GenaiError::Decode(format!(
                    "stylized image is {}x{}, input was {}x{}",
                    out.width(),
                    out.height(),
                    img.width(),
                    img.height()
                )));
            }
            Ok(out)
        }
    }
}
