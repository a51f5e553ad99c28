use std::io::Write;
use std::path::PathBuf;

use choreo_api::{ApiConfig, AppState};

use crate::{SolverArgs, CLEAN, SOLVER, USAGE};

pub fn run(host: &str, port: u16, snapshot_dir: Option<PathBuf>, cors_origins: Vec<String>, args: &SolverArgs) -> u8 {
    if let Err(e) = args.solver() {
        eprintln!("{e}");
        return SOLVER;
    }
    let mut config = ApiConfig { solver: args.config(), snapshot_dir, ..ApiConfig::default() };
    if !cors_origins.is_empty() {
        config.cors_origins = cors_origins;
    }
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => {
            eprintln!("{e}");
            return USAGE;
        }
    };
    runtime.block_on(async move {
        let listener = match tokio::net::TcpListener::bind((host, port)).await {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cannot bind {host}:{port}: {e}");
                return USAGE;
            }
        };
        match listener.local_addr() {
            Ok(addr) => println!("listening on http://{addr}"),
            Err(e) => eprintln!("{e}"),
        }
        let _ = std::io::stdout().flush();
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        match choreo_api::serve(listener, AppState::new(config), shutdown).await {
            Ok(()) => CLEAN,
            Err(e) => {
                eprintln!("{e}");
                USAGE
            }
        }
    })
}
