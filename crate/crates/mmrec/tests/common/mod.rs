#![allow(dead_code)]

use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Stdio};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use mmrec::{ServiceConfig, Store};

pub fn config_in(dir: &Path) -> ServiceConfig {
    ServiceConfig {
        snapshot_path: dir.join("catalog.json"),
        interaction_log_path: dir.join("interactions.jsonl"),
        ..ServiceConfig::default()
    }
}

pub fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port()
}

/// Serves `store` on an ephemeral port from a background runtime and
/// returns the base URL.
pub fn spawn_server(store: Arc<Store>) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    listener.set_nonblocking(true).unwrap();
    thread::spawn(move || {
        let rt = tokio::runtime::Runtime::new().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, mmrec::service::router(store))
                .await
                .unwrap();
        });
    });
    format!("http://{addr}")
}

pub fn wait_healthy(base: &str) {
    let client = reqwest::blocking::Client::new();
    let deadline = Instant::now() + Duration::from_secs(20);
    while Instant::now() < deadline {
        if let Ok(r) = client.get(format!("{base}/v1/health")).send() {
            if r.status().is_success() {
                return;
            }
        }
        thread::sleep(Duration::from_millis(50));
    }
    panic!("service at {base} never became healthy");
}

/// A `mmrec serve` child process.
pub struct ServerProcess {
    pub child: Child,
    pub base: String,
}

impl ServerProcess {
    pub fn start(config_path: &Path, port: u16) -> Self {
        let child = Command::new(env!("CARGO_BIN_EXE_mmrec"))
            .args(["serve", "--config"])
            .arg(config_path)
            .env("MMREC_LISTEN", format!("127.0.0.1:{port}"))
            .env("RUST_LOG", "warn")
            .stdout(Stdio::null())
            .stderr(Stdio::null())
            .spawn()
            .expect("spawn mmrec serve");
        let base = format!("http://127.0.0.1:{port}");
        wait_healthy(&base);
        Self { child, base }
    }

    /// SIGKILL, no graceful shutdown.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for ServerProcess {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn write(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, contents).unwrap();
    p
}

/// Three 2-d videos used by the service and CLI fixtures.
pub const THREE_VIDEOS: &str = r#"{"video_id":"a","dim":2,"vector":[1.0,0.0],"duration_s":30.0}
{"video_id":"b","dim":2,"vector":[0.0,1.0],"duration_s":30.0}
{"video_id":"c","dim":2,"vector":[-1.0,1.0],"duration_s":30.0}
"#;

pub fn now() -> i64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap()
        .as_secs() as i64
}
