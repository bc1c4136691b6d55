use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sfs_server::{Server, ServerConfig};

#[derive(Parser)]
#[command(name = "sfs-server", version, about = "SFS secure file exchange server")]
struct Cli {
    /// Config file; defaults to $SFS_CONFIG.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the service until SIGINT/SIGTERM.
    Serve,
    /// Register an administrator and write their credential bundle.
    InitAdmin {
        #[arg(long)]
        username: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Load a backup archive into a stopped server's data.
    Restore {
        #[arg(long)]
        archive: PathBuf,
        /// Overwrite existing data.
        #[arg(long)]
        force: bool,
    },
}

async fn shutdown_signal() {
    let ctrl_c = tokio::signal::ctrl_c();
    #[cfg(unix)]
    {
        let mut term =
            tokio::signal::unix::signal(tokio::signal::unix::SignalKind::terminate()).expect("install SIGTERM handler");
        tokio::select! {
            _ = ctrl_c => {}
            _ = term.recv() => {}
        }
    }
    #[cfg(not(unix))]
    let _ = ctrl_c.await;
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = ServerConfig::load(&ServerConfig::locate(cli.config.as_deref())?)?;
    match cli.command {
        Command::Serve => {
            let rt = tokio::runtime::Runtime::new()?;
            rt.block_on(async {
                let server = Server::bind(&cfg).await?;
                tracing::info!("listening on {}", server.local_addr()?);
                server.run(shutdown_signal()).await
            })
        }
        Command::InitAdmin { username, out } => {
            let (cert, key, ca) = sfs_server::offline::init_admin(&cfg, &username, &out)?;
            println!("administrator {username}");
            for p in [cert, key, ca] {
                println!("  {}", p.display());
            }
            Ok(())
        }
        Command::Restore { archive, force } => {
            let m = sfs_server::offline::restore(&cfg, &archive, force)?;
            println!("restored {} files, {} blobs, {} audit events", m.tables["files"], m.blobs, m.tables["audit_log"]);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
