use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use artvista_core::RasterImage;
use artvista_genai::{
    generate_reference_images, stylize_image, BackendConfig, GenRequest, GenaiError, Style, MOCK_IMAGE_SIZE,
};
use base64::engine::general_purpose::STANDARD;
use base64::Engine;

/// One canned reply per request, the last one repeated.
struct Stub {
    url: String,
    hits: Arc<AtomicUsize>,
    requests: Arc<Mutex<Vec<(String, String)>>>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let mut content_length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                content_length = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; content_length];
    reader.read_exact(&mut body).ok()?;
    Some((request_line.trim_end().to_string(), String::from_utf8(body).ok()?))
}

fn stub(replies: Vec<(u16, String)>) -> Stub {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let requests = Arc::new(Mutex::new(Vec::new()));
    let (h, r) = (hits.clone(), requests.clone());
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { break };
            let Some((line, body)) = read_request(&mut stream) else { continue };
            let n = h.fetch_add(1, Ordering::SeqCst);
            r.lock().unwrap().push((line, body));
            let (status, reply) = &replies[n.min(replies.len() - 1)];
            let head = format!(
                "HTTP/1.1 {status} X\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n",
                reply.len()
            );
            let _ = stream.write_all(head.as_bytes());
            let _ = stream.write_all(reply.as_bytes());
        }
    });
    Stub { url, hits, requests }
}

fn cfg(url: &str, retries: u32) -> BackendConfig {
    BackendConfig {
        base_url: Some(url.to_string()),
        timeout: Duration::from_secs(5),
        retries,
        backoff_base: Duration::from_millis(5),
    }
}

fn png_b64(img: &RasterImage) -> String {
    STANDARD.encode(img.encode_png().unwrap())
}

fn request(count: u32) -> GenRequest {
    GenRequest {
        prompt: "a Japanese tower and mountain in spring".into(),
        count,
        seed: 7,
        style: None,
    }
}

#[test]
fn mock_is_deterministic_and_sized() {
    let cfg = BackendConfig::mock();
    let a = generate_reference_images(&cfg, &request(2)).unwrap();
    let b = generate_reference_images(&cfg, &request(2)).unwrap();
    assert_eq!(a.len(), 2);
    assert_eq!(a, b);
    for img in &a {
        assert_eq!((img.width(), img.height()), (MOCK_IMAGE_SIZE, MOCK_IMAGE_SIZE));
    }
    let styled = GenRequest {
        style: Some(Style::Watercolor),
        ..request(1)
    };
    assert_eq!(
        generate_reference_images(&cfg, &styled).unwrap(),
        generate_reference_images(&cfg, &styled).unwrap()
    );
    assert_ne!(generate_reference_images(&cfg, &styled).unwrap()[0], a[0]);
}

#[test]
fn mock_rejects_bad_requests() {
    let cfg = BackendConfig::mock();
    assert!(matches!(
        generate_reference_images(&cfg, &request(0)),
        Err(GenaiError::InvalidArgument(_))
    ));
    assert!(matches!("cubist".parse::<Style>(), Err(GenaiError::InvalidArgument(_))));
}

#[test]
fn mock_stylize_keeps_dimensions_and_alpha() {
    let img = RasterImage::from_fn(37, 23, |x, y| [(x * 6) as u8, (y * 11) as u8, 90, (x * 7) as u8]).unwrap();
    for style in Style::ALL {
        let out = stylize_image(&BackendConfig::mock(), &img, style, 3).unwrap();
        assert_eq!((out.width(), out.height()), (37, 23));
        for y in 0..23 {
            for x in 0..37 {
                assert_eq!(out.get(x, y)[3], img.get(x, y)[3]);
            }
        }
        assert_eq!(out, stylize_image(&BackendConfig::mock(), &img, style, 3).unwrap());
    }
}

#[test]
fn txt2img_round_trip_over_http() {
    let imgs: Vec<_> = (0..2).map(|i| RasterImage::filled(4, 3, [i * 50, 2, 3, 255]).unwrap()).collect();
    let reply = format!("{{\"images\":[\"{}\",\"{}\"]}}", png_b64(&imgs[0]), png_b64(&imgs[1]));
    let s = stub(vec![(200, reply)]);
    let got = generate_reference_images(&cfg(&s.url, 0), &request(2)).unwrap();
    assert_eq!(got, imgs);
    let (line, body) = s.requests.lock().unwrap()[0].clone();
    assert!(line.starts_with("POST /v1/txt2img "), "{line}");
    let json: serde_json::Value = serde_json::from_str(&body).unwrap();
    assert_eq!(json["count"], 2);
    assert_eq!(json["seed"], 7);
    assert_eq!(json["style"], serde_json::Value::Null);
}

#[test]
fn stylize_over_http_checks_dimensions() {
    let img = RasterImage::filled(5, 4, [9, 9, 9, 255]).unwrap();
    let good = stub(vec![(200, format!("{{\"image\":\"{}\"}}", png_b64(&img)))]);
    assert_eq!(stylize_image(&cfg(&good.url, 0), &img, Style::Oil, 1).unwrap(), img);
    assert!(good.requests.lock().unwrap()[0].1.contains("\"style\":\"oil\""));

    let wrong = RasterImage::filled(4, 4, [9, 9, 9, 255]).unwrap();
    let bad = stub(vec![(200, format!("{{\"image\":\"{}\"}}", png_b64(&wrong)))]);
    assert!(matches!(stylize_image(&cfg(&bad.url, 0), &img, Style::Oil, 1), Err(GenaiError::Decode(_))));
}

#[test]
fn server_errors_are_retried_then_reported() {
    let s = stub(vec![(503, "{\"detail\":\"busy\"}".into())]);
    let err = generate_reference_images(&cfg(&s.url, 2), &request(1)).unwrap_err();
    assert_eq!(
        err,
        GenaiError::Backend {
            status: 503,
            body: "{\"detail\":\"busy\"}".into()
        }
    );
    assert_eq!(s.hits.load(Ordering::SeqCst), 3);
}

#[test]
fn transient_failure_then_success() {
    let img = RasterImage::filled(2, 2, [1, 1, 1, 255]).unwrap();
    let s = stub(vec![(500, "oops".into()), (200, format!("{{\"images\":[\"{}\"]}}", png_b64(&img)))]);
    assert_eq!(generate_reference_images(&cfg(&s.url, 2), &request(1)).unwrap(), vec![img]);
    assert_eq!(s.hits.load(Ordering::SeqCst), 2);
}

#[test]
fn client_errors_are_not_retried() {
    let s = stub(vec![(422, "{\"detail\":\"bad prompt\"}".into())]);
    let err = generate_reference_images(&cfg(&s.url, 3), &request(1)).unwrap_err();
    assert!(matches!(err, GenaiError::Backend { status: 422, .. }), "{err:?}");
    assert_eq!(s.hits.load(Ordering::SeqCst), 1);
}

#[test]
fn malformed_reply_is_a_decode_error() {
    let s = stub(vec![(200, "{\"images\":".into())]);
    assert!(matches!(
        generate_reference_images(&cfg(&s.url, 2), &request(1)),
        Err(GenaiError::Decode(_))
    ));
    assert_eq!(s.hits.load(Ordering::SeqCst), 1);

    let short = stub(vec![(200, "{\"images\":[]}".into())]);
    assert!(matches!(
        generate_reference_images(&cfg(&short.url, 0), &request(1)),
        Err(GenaiError::Decode(_))
    ));
}

#[test]
fn silent_backend_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let accepted = Arc::new(AtomicUsize::new(0));
    let a = accepted.clone();
    thread::spawn(move || {
        let mut held = Vec::new();
        for stream in listener.incoming().flatten() {
            a.fetch_add(1, Ordering::SeqCst);
            held.push(stream);
        }
    });
    let config = BackendConfig {
        timeout: Duration::from_millis(300),
        ..cfg(&url, 1)
    };
    let start = Instant::now();
    let err = generate_reference_images(&config, &request(1)).unwrap_err();
    assert!(matches!(err, GenaiError::Timeout(_)), "{err:?}");
    assert!(start.elapsed() < Duration::from_secs(5));
    assert_eq!(accepted.load(Ordering::SeqCst), 2);
}

#[test]
fn unreachable_backend_is_a_transport_error() {
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let err = generate_reference_images(&cfg(&format!("http://127.0.0.1:{port}"), 1), &request(1)).unwrap_err();
    assert!(matches!(err, GenaiError::Transport(_)), "{err:?}");
}
