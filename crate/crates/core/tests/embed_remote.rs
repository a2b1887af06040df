use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use dimprobe_core::embed::{
    embed_texts, EmbedError, EmbedRequest, EmbedResponse, EmbeddingProvider, ErrorResponse,
    RemoteProvider,
};

/// Serves `/embed` on an ephemeral port with a handler for each decoded request.
fn serve<F>(handler: F) -> (String, Arc<AtomicUsize>)
where
    F: Fn(EmbedRequest) -> (u16, String) + Send + Sync + 'static,
{
    let server = tiny_http::Server::http("127.0.0.1:0").unwrap();
    let addr = format!("http://{}", server.server_addr().to_ip().unwrap());
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    let handler = Arc::new(handler);
    thread::spawn(move || {
        for mut req in server.incoming_requests() {
            counter.fetch_add(1, Ordering::SeqCst);
            let handler = handler.clone();
            thread::spawn(move || {
                assert_eq!(req.url(), "/embed");
                assert_eq!(*req.method(), tiny_http::Method::Post);
                let mut body = String::new();
                req.as_reader().read_to_string(&mut body).unwrap();
                let (status, reply) = handler(serde_json::from_str(&body).unwrap());
                let header =
                    tiny_http::Header::from_bytes("Content-Type", "application/json").unwrap();
                let _ = req.respond(
                    tiny_http::Response::from_string(reply)
                        .with_status_code(status)
                        .with_header(header),
                );
            });
        }
    });
    (addr, hits)
}

fn fake_vector(text: &str) -> Vec<f32> {
    vec![
        text.len() as f32,
        text.bytes().map(f32::from).sum::<f32>(),
        0.5,
    ]
}

fn echo(req: EmbedRequest) -> (u16, String) {
    let resp = EmbedResponse {
        model: req.model,
        dim: 3,
        vectors: req.texts.iter().map(|t| fake_vector(t)).collect(),
    };
    (200, serde_json::to_string(&resp).unwrap())
}

#[test]
fn vectors_align_with_texts_across_batches() {
    let (addr, hits) = serve(echo);
    let p = RemoteProvider::new("m", &addr, 2, Duration::from_secs(5)).unwrap();
    let texts: Vec<String> = ["alpha", "b", "gamma delta", "e", "zz"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let out = p.embed_batch(&texts).unwrap();
    for (t, v) in texts.iter().zip(&out) {
        assert_eq!(v.values(), fake_vector(t).as_slice());
    }
    assert_eq!(hits.load(Ordering::SeqCst), 3);
    assert_eq!(p.dim(), Some(3));
}

#[test]
fn error_body_is_surfaced() {
    let (addr, _) = serve(|_| {
        (
            503,
            serde_json::to_string(&ErrorResponse {
                error: "model not loaded".into(),
            })
            .unwrap(),
        )
    });
    let p = RemoteProvider::new("m", &addr, 64, Duration::from_secs(5)).unwrap();
    match p.embed_batch(&["x".to_string()]) {
        Err(EmbedError::Remote { status, message }) => {
            assert_eq!(status, 503);
            assert_eq!(message, "model not loaded");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn short_response_is_a_protocol_error() {
    let (addr, _) = serve(|req| {
        let resp = EmbedResponse {
            model: req.model,
            dim: 3,
            vectors: vec![fake_vector("x")],
        };
        (200, serde_json::to_string(&resp).unwrap())
    });
    let p = RemoteProvider::new("m", &addr, 64, Duration::from_secs(5)).unwrap();
    assert!(matches!(
        p.embed_batch(&["x".to_string(), "y".to_string()]),
        Err(EmbedError::Protocol(_))
    ));
}

#[test]
fn wrong_vector_length_is_a_dimension_error() {
    let (addr, _) = serve(|req| {
        let resp = EmbedResponse {
            model: req.model,
            dim: 3,
            vectors: vec![vec![1.0, 2.0]],
        };
        (200, serde_json::to_string(&resp).unwrap())
    });
    let p = RemoteProvider::new("m", &addr, 64, Duration::from_secs(5)).unwrap();
    assert!(matches!(
        p.embed_batch(&["x".to_string()]),
        Err(EmbedError::DimensionMismatch {
            expected: 3,
            found: 2
        })
    ));
}

#[test]
fn unreachable_endpoint() {
    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let p = RemoteProvider::new(
        "m",
        &format!("http://127.0.0.1:{port}"),
        64,
        Duration::from_secs(2),
    )
    .unwrap();
    assert!(matches!(
        p.embed_batch(&["x".to_string()]),
        Err(EmbedError::Unreachable { .. })
    ));
}

#[test]
fn timeout_is_retried_once() {
    let calls = Arc::new(AtomicUsize::new(0));
    let seen = calls.clone();
    let (addr, hits) = serve(move |req| {
        if seen.fetch_add(1, Ordering::SeqCst) == 0 {
            thread::sleep(Duration::from_millis(1500));
        }
        echo(req)
    });
    let p = RemoteProvider::new("m", &addr, 64, Duration::from_millis(500)).unwrap();
    let out = p.embed_batch(&["abc".to_string()]).unwrap();
    assert_eq!(out[0].values(), fake_vector("abc").as_slice());
    assert_eq!(hits.load(Ordering::SeqCst), 2);
}

#[test]
fn remote_through_embed_texts_dedupes() {
    let (addr, hits) = serve(echo);
    let p = RemoteProvider::new("m", &addr, 64, Duration::from_secs(5)).unwrap();
    let texts = vec!["a".to_string(), "b".to_string(), "a".to_string()];
    let out = embed_texts(&texts, &p, None).unwrap();
    assert!(out[0].bit_eq(&out[2]));
    assert_eq!(hits.load(Ordering::SeqCst), 1);
}
