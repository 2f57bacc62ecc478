use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};
use elmi_core::ProjectId;
use elmi_server::{api, default_fixtures, open_studio};
use elmi_studio::analytics::Scope;
use elmi_studio::app::{AppError, NewProject};
use elmi_studio::pipeline::Stage;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "elmi", version, about = "Song-signing studio: ingest songs, run the analysis chain, serve the API")]
struct Cli {
    /// SQLite store.
    #[arg(long, env = "ELMI_DB", default_value = "elmi.db", global = true)]
    db: PathBuf,
    /// Fixture library used when live clients are off.
    #[arg(long, env = "ELMI_FIXTURES", global = true)]
    fixtures: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create a project and time its lyrics.
    Ingest {
        #[arg(long)]
        title: String,
        #[arg(long)]
        artist: String,
        #[arg(long, default_value = "ASL")]
        sign_language: String,
        #[arg(long)]
        nickname: String,
        #[arg(long, default_value = "novice")]
        proficiency: String,
    },
    /// Run the analysis stages, reusing cached ones.
    Preprocess {
        project_id: String,
        /// Recompute this stage and every later one.
        #[arg(long, value_parser = parse_stage)]
        from_stage: Option<Stage>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: String,
    },
    /// Print per-line gloss statistics.
    Metrics {
        project_id: String,
        #[arg(long, default_value = "project", value_parser = parse_scope)]
        scope: Scope,
    },
    /// Write every stored aggregate of a project as one JSON bundle.
    Export {
        project_id: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_stage(s: &str) -> Result<Stage, String> {
    s.parse()
}

fn parse_scope(s: &str) -> Result<Scope, String> {
    match s {
        "project" => Ok(Scope::Project),
        "corpus" => Ok(Scope::Corpus),
        other => Err(format!("unknown scope {other:?}; expected project or corpus")),
    }
}

fn print_json(v: &impl Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn run(cli: Cli) -> Result<(), String> {
    let fixtures = cli.fixtures.unwrap_or_else(default_fixtures);
    let studio = open_studio(&cli.db, &fixtures)?;
    let app = |e: AppError| format!("{}: {e}", e.code());
    match cli.command {
        Command::Ingest { title, artist, sign_language, nickname, proficiency } => {
            let req = NewProject { title, artist, sign_language, nickname, proficiency: Some(proficiency) };
            let project = studio.create_project(&req).map_err(app)?;
            let outcome = studio.align(&project.id).map_err(app)?;
            for w in &outcome.warnings {
                eprintln!("warning: {w}");
            }
            print_json(&serde_json::json!({ "project": project, "alignment": outcome.report }));
        }
        Command::Preprocess { project_id, from_stage } => {
            let id = ProjectId(project_id);
            let mut events = studio.subscribe();
            let result = studio.preprocess(&id, from_stage);
            while let Ok(e) = events.try_recv() {
                if let elmi_studio::app::Event::StageDone { stage, reused, .. } = e {
                    eprintln!("{stage}: {}", if reused { "reused" } else { "done" });
                }
            }
            let annotations = result.map_err(app)?;
            print!("{}", elmi_studio::pipeline::annotation_export(&annotations));
        }
        Command::Serve { addr } => {
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(async {
                let listener = tokio::net::TcpListener::bind(&addr).await.map_err(|e| format!("{addr}: {e}"))?;
                eprintln!("listening on http://{}", listener.local_addr().map_err(|e| e.to_string())?);
                axum::serve(listener, api::router(Arc::new(studio))).await.map_err(|e| e.to_string())
            })?;
        }
        Command::Metrics { project_id, scope } => {
            print_json(&studio.analytics(&ProjectId(project_id), scope).map_err(app)?);
        }
        Command::Export { project_id, out } => {
            let bundle = studio.export(&ProjectId(project_id)).map_err(app)?;
            let text = serde_json::to_string_pretty(&bundle).expect("serializable") + "\n";
            match out {
                Some(path) => std::fs::write(&path, text).map_err(|e| format!("{}: {e}", path.display()))?,
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
