use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "ran", version, about = "Client for the ANN artifact registry")]
pub struct Cli {
    /// Service base URL, e.g. http://127.0.0.1:8080
    #[arg(long, global = true)]
    pub endpoint: Option<String>,
    /// Print the raw JSON response as one document on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Create an account.
    Register {
        #[arg(long)]
        email: String,
        #[arg(long)]
        name: String,
        #[command(flatten)]
        password: PasswordSource,
    },
    /// Start a session and store its token in the config file.
    Login {
        #[arg(long)]
        email: String,
        #[command(flatten)]
        password: PasswordSource,
    },
    /// End the current session and forget its token.
    Logout,
    #[command(subcommand)]
    Project(ProjectCmd),
    #[command(subcommand)]
    Folder(FolderCmd),
    #[command(subcommand)]
    Asset(AssetCmd),
    #[command(subcommand)]
    Artifact(ArtifactCmd),
}

#[derive(Args, Debug)]
pub struct PasswordSource {
    /// Read the password from the first line of stdin instead of RAN_PASSWORD.
    #[arg(long)]
    pub password_stdin: bool,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct Paging {
    #[arg(long, default_value_t = 1)]
    pub page: u32,
    #[arg(long, default_value_t = 20)]
    pub per_page: u32,
}

#[derive(Subcommand, Debug)]
pub enum ProjectCmd {
    Create {
        name: String,
        #[arg(long, default_value = "")]
        description: String,
        #[arg(long = "tag")]
        tags: Vec<String>,
        #[arg(long)]
        private: bool,
    },
    /// Browse visible projects with their rating scores.
    List {
        #[command(flatten)]
        paging: Paging,
    },
    Show {
        id: String,
    },
    Search {
        #[arg(required = true)]
        query: Vec<String>,
        #[command(flatten)]
        paging: Paging,
    },
    /// Change metadata; fails if the project moved past `--expected-version`.
    Update {
        id: String,
        #[arg(long)]
        expected_version: u64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        description: Option<String>,
        /// Replaces all tags.
        #[arg(long = "tag")]
        tags: Option<Vec<String>>,
        #[arg(long)]
        visibility: Option<VisibilityArg>,
    },
    Copy {
        id: String,
        #[arg(long)]
        name: String,
    },
    /// Copy selected folders and artifacts into a folder of your own project.
    Import {
        source: String,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(long)]
        into_project: String,
        /// Target folder id or path, e.g. TrainData/apples.
        #[arg(long)]
        into_folder: String,
    },
    Delete {
        id: String,
    },
    Rate {
        id: String,
        value: Vote,
    },
    Unrate {
        id: String,
    },
    /// Aggregate score, own vote and whether you may vote.
    Rating {
        id: String,
    },
    Events {
        id: String,
        #[arg(long, default_value_t = 50)]
        limit: usize,
        #[arg(long)]
        before: Option<u64>,
    },
    /// Download selected folders and artifacts as a zip package.
    Download {
        id: String,
        #[command(flatten)]
        selection: SelectionArgs,
        #[arg(short, long)]
        output: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct SelectionArgs {
    /// Folder ids or paths (TrainData, Model/v2), comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub folders: Vec<String>,
    /// Artifact ids, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pub artifacts: Vec<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum Vote {
    Up,
    Down,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum VisibilityArg {
    Public,
    Private,
}

#[derive(Subcommand, Debug)]
pub enum FolderCmd {
    Create {
        project: String,
        /// Parent folder id or path.
        parent: String,
        name: String,
    },
    List {
        id: String,
    },
    Rename {
        id: String,
        name: String,
    },
    Delete {
        id: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum AssetCmd {
    Upload {
        file: PathBuf,
        #[arg(long = "tag")]
        tags: Vec<String>,
        /// Stored filename; defaults to the file's own name.
        #[arg(long)]
        name: Option<String>,
    },
    Search {
        #[arg(required = true)]
        query: Vec<String>,
        #[command(flatten)]
        paging: Paging,
    },
    /// Download an asset's bytes, verifying them against the hash.
    Get {
        hash: String,
        #[arg(short, long)]
        output: PathBuf,
    },
    Show {
        hash: String,
    },
}

#[derive(Subcommand, Debug)]
pub enum ArtifactCmd {
    Add {
        folder: String,
        asset: String,
        #[arg(long)]
        name: String,
        /// Byte range OFFSET:LEN of the asset.
        #[arg(long, conflicts_with = "member")]
        range: Option<String>,
        /// Archive member path; repeat for several.
        #[arg(long)]
        member: Vec<String>,
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
    Remove {
        id: String,
    },
}
