use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use clap::Parser;
use irm_service::{router, ServiceConfig, Store};

/// Interactive regret-minimization sessions over HTTP.
#[derive(Parser, Debug)]
#[command(name = "irm-service", version, about)]
struct Args {
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: SocketAddr,

    #[arg(long, default_value_t = 1000)]
    max_sessions: usize,

    /// Seconds of inactivity after which a session expires
    #[arg(long, default_value_t = 3600)]
    idle_timeout: u64,

    /// Largest dataset a session may use
    #[arg(long, default_value_t = 1_000_000)]
    max_tuples: usize,

    /// Largest request body in MiB
    #[arg(long, default_value_t = 64)]
    body_limit_mib: usize,

    /// Directory for session records; sessions survive restarts when set
    #[arg(long, value_name = "DIR")]
    state_dir: Option<PathBuf>,
}

#[tokio::main]
async fn main() -> ExitCode {
    let args = Args::parse();
    let config = ServiceConfig {
        max_sessions: args.max_sessions,
        idle_timeout: Duration::from_secs(args.idle_timeout),
        max_tuples: args.max_tuples,
        body_limit: args.body_limit_mib << 20,
        state_dir: args.state_dir,
    };
    let store = match Store::open(config) {
        Ok(s) => Arc::new(s),
        Err(e) => {
            eprintln!("irm-service: cannot open state directory: {e}");
            return ExitCode::FAILURE;
        }
    };
    let sweeper = Arc::clone(&store);
    tokio::spawn(async move {
        let mut tick = tokio::time::interval(Duration::from_secs(60));
        loop {
            tick.tick().await;
            sweeper.sweep();
        }
    });

    let listener = match tokio::net::TcpListener::bind(args.addr).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("irm-service: cannot bind {}: {e}", args.addr);
            return ExitCode::FAILURE;
        }
    };
    eprintln!("irm-service: listening on {} ({} sessions restored)", args.addr, store.len());
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    match axum::serve(listener, router(store)).with_graceful_shutdown(shutdown).await {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("irm-service: {e}");
            ExitCode::FAILURE
        }
    }
}
