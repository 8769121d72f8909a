//! feedforge — build, check, fetch and serve RSS 2.0 feeds.
//!
//! Four subcommands, one per side of the syndication exchange:
//!
//! * `build` — turn a records file into feed bytes.
//! * `validate` — report findings for any feed document.
//! * `fetch` — pull a remote feed and list items not yet seen.
//! * `serve` — publish the feed for this site over HTTP.
//!
//! Exit codes are a stable contract: 0 success, 1 the validator found
//! errors, 2 operational failure (unreadable input, bad flag, network
//! or bind failure), 3 a fetch completed but found nothing new.

use std::fs;
use std::io::{self, Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use tiny_http::{Header, Method, Response};

use feedforge_core::config::load_config;
use feedforge_core::fetch::{diff_unread, fetch_feed, load_state, save_state, StateLock};
use feedforge_core::rfc822::parse_compact;
use feedforge_core::store::{build_feed, load_records};
use feedforge_core::tsv;
use feedforge_core::validate::{render_report, validate, ReportFormat};
use feedforge_core::{RssDateTime, SiteConfig};

const EXIT_OK: u8 = 0;
const EXIT_FINDINGS: u8 = 1;
const EXIT_FAILURE: u8 = 2;
const EXIT_NO_NEW: u8 = 3;

const FETCH_TIMEOUT_SECONDS: f64 = 30.0;

#[derive(Parser)]
#[command(name = "feedforge", version, about = "Build, check, fetch and serve RSS 2.0 feeds")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the site feed from a records file
    Build(BuildArgs),
    /// Check a feed document and report findings with line numbers
    Validate(ValidateArgs),
    /// Fetch a remote feed and list items not seen before
    Fetch(FetchArgs),
    /// Serve the site feed over HTTP, rebuilding it per request
    Serve(ServeArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Site configuration file
    #[arg(long)]
    config: PathBuf,
    /// Article records file
    #[arg(long)]
    records: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fixed build time as YYYY-MM-DDThh:mm:ss+hhmm (for reproducible runs)
    #[arg(long)]
    now: Option<String>,
}

#[derive(Args)]
struct ValidateArgs {
    /// Feed document; stdin when omitted or "-"
    feed: Option<PathBuf>,
    /// Reference time for future-date checks, as YYYY-MM-DDThh:mm:ss+hhmm
    #[arg(long)]
    now: Option<String>,
    /// Emit tab-separated machine-readable finding lines
    #[arg(long)]
    machine: bool,
}

#[derive(Args)]
struct FetchArgs {
    /// Feed URL (http or https)
    url: String,
    /// Seen-state file tracking which items were already listed
    #[arg(long)]
    state: PathBuf,
    /// Print one line per new item (the default; kept for explicit scripts)
    #[arg(long)]
    list_new: bool,
    /// Record the fetched items in the state file
    #[arg(long)]
    mark_read: bool,
    /// Reference time override, as YYYY-MM-DDThh:mm:ss+hhmm
    #[arg(long)]
    now: Option<String>,
}

#[derive(Args)]
struct ServeArgs {
    /// Site configuration file
    #[arg(long)]
    config: PathBuf,
    /// Article records file, re-read on every request
    #[arg(long)]
    records: PathBuf,
    /// Listen address
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    /// Fixed build time for byte-identical responses
    #[arg(long)]
    now: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Build(args) => cmd_build(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Fetch(args) => cmd_fetch(&args),
        Command::Serve(args) => cmd_serve(&args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(message) => {
            eprintln!("feedforge: {message}");
            ExitCode::from(EXIT_FAILURE)
        }
    }
}

/// `--now` takes the offset-only compact shape so scripts never depend
/// on named-zone interpretation.
fn resolve_now(arg: &Option<String>) -> Result<RssDateTime, String> {
    match arg {
        Some(text) => parse_compact(text).map_err(|e| format!("--now: {e}")),
        None => Ok(RssDateTime::now_utc()),
    }
}

fn cmd_build(args: &BuildArgs) -> Result<u8, String> {
    let config = load_config(&args.config).map_err(|e| e.to_string())?;
    let store = load_records(&args.records).map_err(|e| e.to_string())?;
    let now = resolve_now(&args.now)?;
    let bytes = build_feed(&store, &config, &now).map_err(|e| e.to_string())?;
    match &args.out {
        Some(path) => fs::write(path, &bytes)
            .map_err(|e| format!("cannot write {}: {e}", path.display()))?,
        None => io::stdout()
            .write_all(&bytes)
            .map_err(|e| format!("cannot write to stdout: {e}"))?,
    }
    Ok(EXIT_OK)
}

fn cmd_validate(args: &ValidateArgs) -> Result<u8, String> {
    let now = resolve_now(&args.now)?;
    let bytes = match &args.feed {
        Some(path) if path.as_os_str() != "-" => {
            fs::read(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?
        }
        _ => {
            let mut buf = Vec::new();
            io::stdin()
                .read_to_end(&mut buf)
                .map_err(|e| format!("cannot read stdin: {e}"))?;
            buf
        }
    };
    let report = validate(&bytes, &now).map_err(|e| e.to_string())?;
    let format = if args.machine { ReportFormat::MachineLines } else { ReportFormat::Text };
    print!("{}", render_report(&report, format));
    Ok(if report.has_errors() { EXIT_FINDINGS } else { EXIT_OK })
}

fn cmd_fetch(args: &FetchArgs) -> Result<u8, String> {
    let now = resolve_now(&args.now)?;
    let result = fetch_feed(&args.url, FETCH_TIMEOUT_SECONDS, &now);
    let Some(feed) = result.feed else {
        let why = result.error.unwrap_or_else(|| match result.report.findings.first() {
            Some(f) => format!("{}:{}: {}", f.line, f.column, f.message),
            None => format!("HTTP status {}", result.status),
        });
        return Err(format!("fetch {}: {why}", args.url));
    };

    let state = load_state(&args.state).map_err(|e| e.to_string())?;
    let (new_items, updated) = diff_unread(&feed, &state, &args.url, &now);

    let stdout = io::stdout();
    let mut out = stdout.lock();
    for item in &new_items {
        let pub_date = item.pub_date.map(|d| d.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{}\t{}\t{}",
            tsv::escape_field(&item.title),
            tsv::escape_field(&item.link),
            pub_date
        )
        .map_err(|e| format!("cannot write to stdout: {e}"))?;
    }

    if args.mark_read {
        let _lock = StateLock::acquire(&args.state).map_err(|e| e.to_string())?;
        save_state(&updated, &args.state).map_err(|e| e.to_string())?;
    }
    Ok(if new_items.is_empty() { EXIT_NO_NEW } else { EXIT_OK })
}

fn cmd_serve(args: &ServeArgs) -> Result<u8, String> {
    let config = Arc::new(load_config(&args.config).map_err(|e| e.to_string())?);
    let now_override = match &args.now {
        Some(text) => Some(parse_compact(text).map_err(|e| format!("--now: {e}"))?),
        None => None,
    };
    let server =
        tiny_http::Server::http(&args.bind).map_err(|e| format!("cannot bind {}: {e}", args.bind))?;
    let addr = server.server_addr().to_ip().expect("tcp listener has an ip address");
    println!("listening on http://{addr}/feed.xml");
    io::stdout().flush().ok();

    let records = Arc::new(args.records.clone());
    for request in server.incoming_requests() {
        let config = Arc::clone(&config);
        let records = Arc::clone(&records);
        std::thread::spawn(move || {
            let response = respond_to(request.method(), request.url(), &config, &records, now_override);
            let _ = request.respond(response);
        });
    }
    Ok(EXIT_OK)
}

type ByteResponse = Response<io::Cursor<Vec<u8>>>;

fn respond_to(
    method: &Method,
    url: &str,
    config: &SiteConfig,
    records: &Path,
    now_override: Option<RssDateTime>,
) -> ByteResponse {
    if *method != Method::Get {
        return Response::from_string("only GET is supported\n").with_status_code(405);
    }
    if url != "/feed.xml" {
        return Response::from_string("not found\n").with_status_code(404);
    }
    let now = now_override.unwrap_or_else(RssDateTime::now_utc);
    let built = load_records(records)
        .map_err(|e| e.to_string())
        .and_then(|store| build_feed(&store, config, &now).map_err(|e| e.to_string()));
    match built {
        Ok(bytes) => {
            let mut response = Response::from_data(bytes).with_header(header(
                "Content-Type",
                &format!("application/rss+xml; charset={}", config.encoding.label()),
            ));
            if let Some(ttl) = config.channel.ttl_minutes {
                response = response
                    .with_header(header("Cache-Control", &format!("max-age={}", u64::from(ttl) * 60)));
            }
            response
        }
        Err(diagnostic) => Response::from_string(format!("{diagnostic}\n")).with_status_code(500),
    }
}

fn header(name: &str, value: &str) -> Header {
    Header::from_bytes(name.as_bytes(), value.as_bytes())
        .expect("header names and values are ASCII")
}
