//! Command-line client. [`run`] is the whole program; `main` only wires it
//! to the process.
//!
//! Exit codes: 0 success, 1 API, transport or local failure, 2 usage error.

mod args;
mod client;
mod config;
mod human;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::Parser;
use reqwest::Method;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use args::*;
pub use client::{Client, Failure};
pub use config::{config_path, FileConfig, DEFAULT_ENDPOINT};

/// What the process would otherwise read from its surroundings.
pub struct Environment {
    pub vars: BTreeMap<String, String>,
    pub stdin: Box<dyn BufRead>,
}

impl Environment {
    pub fn from_process() -> Self {
        Self {
            vars: std::env::vars().collect(),
            stdin: Box::new(std::io::BufReader::new(std::io::stdin())),
        }
    }
}

struct Output {
    json: Value,
    human: String,
}

fn out(json: Value, render: impl FnOnce(&Value) -> String) -> Output {
    let human = render(&json);
    Output { json, human }
}

struct Ctx<'a> {
    env: &'a mut Environment,
    endpoint: String,
    config_path: Option<PathBuf>,
    file: FileConfig,
}

impl Ctx<'_> {
    fn client(&self) -> Client {
        let token = self
            .env
            .vars
            .get("RAN_TOKEN")
            .filter(|t| !t.is_empty())
            .cloned()
            .or_else(|| self.file.token.clone());
        Client::new(&self.endpoint, token)
    }

    fn anonymous(&self) -> Client {
        Client::new(&self.endpoint, None)
    }

    fn password(&mut self, src: &PasswordSource) -> Result<String, Failure> {
        if src.password_stdin {
            let mut line = String::new();
            self.env
                .stdin
                .read_line(&mut line)
                .map_err(|e| Failure::Usage(format!("reading password: {e}")))?;
            return Ok(line.trim_end_matches(['\r', '\n']).to_owned());
        }
        self.env
            .vars
            .get("RAN_PASSWORD")
            .cloned()
            .ok_or_else(|| Failure::Usage("set RAN_PASSWORD or pass --password-stdin".into()))
    }

    fn save(&mut self, update: impl FnOnce(&mut FileConfig)) -> Result<PathBuf, Failure> {
        let path = self.config_path.clone().ok_or_else(|| Failure::Local {
            code: "NoConfigPath",
            message: "set RAN_CONFIG or HOME to store the session".into(),
        })?;
        update(&mut self.file);
        config::save(&path, &self.file).map_err(|message| Failure::Local {
            code: "Io",
            message,
        })?;
        Ok(path)
    }
}

/// Runs one command line. `args` includes the program name.
pub fn run<I, T>(args: I, env: &mut Environment, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{text}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{text}");
                    2
                }
            };
        }
    };
    let json_mode = cli.json;
    let result = setup(&cli, env).and_then(|mut ctx| dispatch(cli.command, &mut ctx));
    match result {
        Ok(o) => {
            let _ = if json_mode {
                writeln!(stdout, "{}", serde_json::to_string_pretty(&o.json).unwrap_or_default())
            } else if o.human.is_empty() {
                Ok(())
            } else {
                writeln!(stdout, "{}", o.human)
            };
            0
        }
        Err(f) => {
            if json_mode {
                let doc = json!({"error": {"code": f.code(), "message": f.message()}});
                let _ = writeln!(stdout, "{}", serde_json::to_string_pretty(&doc).unwrap_or_default());
            }
            let _ = writeln!(stderr, "error[{}]: {}", f.code(), f.message());
            if matches!(f, Failure::Usage(_)) {
                2
            } else {
                1
            }
        }
    }
}

fn setup<'a>(cli: &Cli, env: &'a mut Environment) -> Result<Ctx<'a>, Failure> {
    let config_path = config_path(&env.vars);
    let file = match &config_path {
        Some(p) => config::load(p).map_err(|message| Failure::Local {
            code: "Config",
            message,
        })?,
        None => FileConfig::default(),
    };
    let endpoint = cli
        .endpoint
        .clone()
        .or_else(|| env.vars.get("RAN_ENDPOINT").filter(|e| !e.is_empty()).cloned())
        .or_else(|| file.endpoint.clone())
        .unwrap_or_else(|| DEFAULT_ENDPOINT.to_owned());
    Ok(Ctx {
        env,
        endpoint,
        config_path,
        file,
    })
}

fn dispatch(cmd: Command, ctx: &mut Ctx) -> Result<Output, Failure> {
    match cmd {
        Command::Register { email, name, password } => {
            let password = ctx.password(&password)?;
            let body = json!({"email": email, "display_name": name, "password": password});
            Ok(out(ctx.anonymous().call(Method::POST, "/users", Some(body))?, human::user))
        }
        Command::Login { email, password } => {
            let password = ctx.password(&password)?;
            let body = json!({"email": email, "password": password});
            let session = ctx.anonymous().call(Method::POST, "/sessions", Some(body))?;
            let token = session["token"].as_str().unwrap_or_default().to_owned();
            let endpoint = ctx.endpoint.clone();
            let path = ctx.save(|f| {
                f.token = Some(token);
                f.endpoint = Some(endpoint);
            })?;
            // the token itself is never printed
            let doc = json!({
                "user": session["user"],
                "expires_at": session["expires_at"],
                "config": path,
            });
            Ok(out(doc, |d| {
                format!(
                    "logged in as {}; session stored in {}",
                    d["user"]["email"].as_str().unwrap_or(""),
                    d["config"].as_str().unwrap_or("")
                )
            }))
        }
        Command::Logout => {
            ctx.client().call(Method::DELETE, "/sessions", None)?;
            if ctx.file.token.is_some() {
                ctx.save(|f| f.token = None)?;
            }
            Ok(out(Value::Null, |_| "logged out".into()))
        }
        Command::Project(p) => project(p, ctx),
        Command::Folder(f) => folder(f, ctx),
        Command::Asset(a) => asset(a, ctx),
        Command::Artifact(a) => artifact(a, ctx),
    }
}

fn paging(p: Paging) -> String {
    format!("page={}&per_page={}", p.page, p.per_page)
}

fn looks_like_uuid(s: &str) -> bool {
    s.len() == 36
        && s.char_indices().all(|(i, c)| match i {
            8 | 13 | 18 | 23 => c == '-',
            _ => c.is_ascii_hexdigit(),
        })
}

/// Folder id, or a `Root/sub/...` path looked up through the read endpoints.
fn resolve_folder(client: &Client, project: &str, reference: &str) -> Result<String, Failure> {
    if looks_like_uuid(reference) {
        return Ok(reference.to_owned());
    }
    let mut segments = reference.split('/').filter(|s| !s.is_empty());
    let missing = || Failure::Usage(format!("no folder {reference:?} in project {project}"));
    let root = segments.next().ok_or_else(missing)?;
    let detail = client.call(Method::GET, &format!("/projects/{project}"), None)?;
    let find = |list: &Value, name: &str| {
        list.as_array()
            .into_iter()
            .flatten()
            .find(|f| f["name"].as_str().is_some_and(|n| n.eq_ignore_ascii_case(name)))
            .and_then(|f| f["id"].as_str())
            .map(str::to_owned)
    };
    let mut id = find(&detail["roots"], root).ok_or_else(missing)?;
    for seg in segments {
        let listing = client.call(Method::GET, &format!("/folders/{id}"), None)?;
        id = find(&listing["subfolders"], seg).ok_or_else(missing)?;
    }
    Ok(id)
}

fn selection(client: &Client, project: &str, sel: &SelectionArgs) -> Result<(Vec<String>, Vec<String>), Failure> {
    let folders = sel
        .folders
        .iter()
        .filter(|f| !f.is_empty())
        .map(|f| resolve_folder(client, project, f))
        .collect::<Result<Vec<_>, _>>()?;
    let artifacts = sel.artifacts.iter().filter(|a| !a.is_empty()).cloned().collect();
    Ok((folders, artifacts))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::io(e, path))
}

fn project(cmd: ProjectCmd, ctx: &mut Ctx) -> Result<Output, Failure> {
    let c = ctx.client();
    Ok(match cmd {
        ProjectCmd::Create { name, description, tags, private } => {
            let visibility = if private { "private" } else { "public" };
            let body = json!({"name": name, "description": description, "tags": tags, "visibility": visibility});
            out(c.call(Method::POST, "/projects", Some(body))?, human::project)
        }
        ProjectCmd::List { paging: p } => {
            let (items, total) = c.page(&format!("/projects?{}", paging(p)))?;
            out(items, |i| human::summaries(i, total))
        }
        ProjectCmd::Show { id } => out(c.call(Method::GET, &format!("/projects/{id}"), None)?, human::project_detail),
        ProjectCmd::Search { query, paging: p } => {
            let q = client::encode(&query.join(" "));
            let (items, total) = c.page(&format!("/projects?query={q}&{}", paging(p)))?;
            out(items, |i| human::results(i, total))
        }
        ProjectCmd::Update { id, expected_version, name, description, tags, visibility } => {
            let mut body = json!({"expected_version": expected_version});
            if let Some(n) = name {
                body["name"] = json!(n);
            }
            if let Some(d) = description {
                body["description"] = json!(d);
            }
            if let Some(t) = tags {
                body["tags"] = json!(t);
            }
            if let Some(v) = visibility {
                body["visibility"] = json!(match v {
                    VisibilityArg::Public => "public",
                    VisibilityArg::Private => "private",
                });
            }
            out(c.call(Method::PATCH, &format!("/projects/{id}"), Some(body))?, human::project)
        }
        ProjectCmd::Copy { id, name } => out(
            c.call(Method::POST, &format!("/projects/{id}/copies"), Some(json!({"name": name})))?,
            human::project,
        ),
        ProjectCmd::Import { source, selection: sel, into_project, into_folder } => {
            let (folders, artifacts) = selection(&c, &source, &sel)?;
            if folders.is_empty() && artifacts.is_empty() {
                return Err(Failure::Usage("select at least one folder or artifact".into()));
            }
            let target_folder = resolve_folder(&c, &into_project, &into_folder)?;
            let body = json!({
                "selection": {"folders": folders, "artifacts": artifacts},
                "target_project": into_project,
                "target_folder": target_folder,
            });
            out(c.call(Method::POST, &format!("/projects/{source}/imports"), Some(body))?, |s| {
                format!("imported {} folder(s) and {} artifact(s)", s["folders"], s["artifacts"])
            })
        }
        ProjectCmd::Delete { id } => {
            c.call(Method::DELETE, &format!("/projects/{id}"), None)?;
            out(Value::Null, |_| format!("deleted {id}"))
        }
        ProjectCmd::Rate { id, value } => {
            let value = match value {
                Vote::Up => "up",
                Vote::Down => "down",
            };
            out(
                c.call(Method::PUT, &format!("/projects/{id}/rating"), Some(json!({"value": value})))?,
                human::rating,
            )
        }
        ProjectCmd::Unrate { id } => out(c.call(Method::DELETE, &format!("/projects/{id}/rating"), None)?, human::rating),
        ProjectCmd::Rating { id } => out(c.call(Method::GET, &format!("/projects/{id}/rating"), None)?, human::rating),
        ProjectCmd::Events { id, limit, before } => {
            let mut path = format!("/projects/{id}/events?limit={limit}");
            if let Some(b) = before {
                path.push_str(&format!("&before={b}"));
            }
            out(c.call(Method::GET, &path, None)?, human::events)
        }
        ProjectCmd::Download { id, selection: sel, output } => {
            let (folders, artifacts) = selection(&c, &id, &sel)?;
            let path = format!(
                "/projects/{id}/package?folders={}&artifacts={}",
                folders.join(","),
                artifacts.join(",")
            );
            let bytes = c.bytes(&path)?;
            write_file(&output, &bytes)?;
            let doc = json!({
                "path": output,
                "bytes": bytes.len(),
                "sha256": hex::encode(Sha256::digest(&bytes)),
            });
            out(doc, |d| {
                format!(
                    "wrote {} bytes to {} (sha256 {})",
                    d["bytes"],
                    output.display(),
                    d["sha256"].as_str().unwrap_or("")
                )
            })
        }
    })
}

fn folder(cmd: FolderCmd, ctx: &mut Ctx) -> Result<Output, Failure> {
    let c = ctx.client();
    Ok(match cmd {
        FolderCmd::Create { project, parent, name } => {
            let parent = resolve_folder(&c, &project, &parent)?;
            let body = json!({"parent": parent, "name": name});
            out(c.call(Method::POST, &format!("/projects/{project}/folders"), Some(body))?, human::folder)
        }
        FolderCmd::List { id } => out(c.call(Method::GET, &format!("/folders/{id}"), None)?, human::listing),
        FolderCmd::Rename { id, name } => out(
            c.call(Method::PATCH, &format!("/folders/{id}"), Some(json!({"name": name})))?,
            human::folder,
        ),
        FolderCmd::Delete { id } => out(c.call(Method::DELETE, &format!("/folders/{id}"), None)?, |r| {
            format!("deleted; {} artifact(s) removed", r["artifacts_removed"])
        }),
    })
}

fn asset(cmd: AssetCmd, ctx: &mut Ctx) -> Result<Output, Failure> {
    let c = ctx.client();
    Ok(match cmd {
        AssetCmd::Upload { file, tags, name } => {
            let bytes = std::fs::read(&file).map_err(|e| Failure::io(e, &file))?;
            let name = name
                .or_else(|| file.file_name().map(|n| n.to_string_lossy().into_owned()))
                .ok_or_else(|| Failure::Usage("cannot derive a filename; pass --name".into()))?;
            out(c.upload(&name, bytes, &tags)?, human::upload)
        }
        AssetCmd::Search { query, paging: p } => {
            let q = client::encode(&query.join(" "));
            let (items, total) = c.page(&format!("/assets?query={q}&{}", paging(p)))?;
            out(items, |i| human::results(i, total))
        }
        AssetCmd::Get { hash, output } => {
            let bytes = c.bytes(&format!("/assets/{hash}"))?;
            let actual = hex::encode(Sha256::digest(&bytes));
            if !actual.eq_ignore_ascii_case(&hash) {
                return Err(Failure::Local {
                    code: "IntegrityMismatch",
                    message: format!("received bytes hash to {actual}"),
                });
            }
            write_file(&output, &bytes)?;
            let doc = json!({"path": output, "bytes": bytes.len(), "sha256": actual});
            out(doc, |d| format!("wrote {} bytes to {}", d["bytes"], output.display()))
        }
        AssetCmd::Show { hash } => out(c.call(Method::GET, &format!("/assets/{hash}/meta"), None)?, human::asset),
    })
}

fn parse_range(text: &str) -> Result<(u64, u64), Failure> {
    let bad = || Failure::Usage(format!("--range expects OFFSET:LEN, got {text:?}"));
    let (o, l) = text.split_once(':').ok_or_else(bad)?;
    Ok((o.trim().parse().map_err(|_| bad())?, l.trim().parse().map_err(|_| bad())?))
}

fn artifact(cmd: ArtifactCmd, ctx: &mut Ctx) -> Result<Output, Failure> {
    let c = ctx.client();
    Ok(match cmd {
        ArtifactCmd::Add { folder, asset, name, range, member, tags } => {
            let selector = match (range, member.is_empty()) {
                (Some(r), _) => {
                    let (offset, len) = parse_range(&r)?;
                    json!({"kind": "byte_range", "offset": offset, "len": len})
                }
                (None, false) => json!({"kind": "members", "paths": member}),
                (None, true) => json!({"kind": "whole"}),
            };
            let body = json!({"asset": asset, "selector": selector, "display_name": name, "tags": tags});
            out(c.call(Method::POST, &format!("/folders/{folder}/artifacts"), Some(body))?, human::artifact)
        }
        ArtifactCmd::Remove { id } => {
            c.call(Method::DELETE, &format!("/artifacts/{id}"), None)?;
            out(Value::Null, |_| format!("removed {id}"))
        }
    })
}
