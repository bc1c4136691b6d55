use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "sfs", version, about = "Secure file exchange client", propagate_version = true)]
pub struct Cli {
    #[command(flatten)]
    pub conn: ConnFlags,
    /// Print machine-readable JSON instead of tables.
    #[arg(long, global = true)]
    pub json: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Default, Clone, Args)]
pub struct ConnFlags {
    /// Server URL, e.g. https://sfs.example.org:8443
    #[arg(long, global = true, value_name = "URL")]
    pub server: Option<String>,
    /// CA certificate the server must chain to.
    #[arg(long, global = true, value_name = "PEM")]
    pub ca: Option<PathBuf>,
    /// Client certificate.
    #[arg(long, global = true, value_name = "PEM")]
    pub cert: Option<PathBuf>,
    /// Client private key.
    #[arg(long, global = true, value_name = "PEM")]
    pub key: Option<PathBuf>,
    /// Client config file (default ~/.sfs/config).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List files in a scope (home:<user> or group:<name>).
    Ls { scope: String },
    /// Download a file and verify its SHA-256.
    Get {
        scope: String,
        name: String,
        /// Destination path (default: the file name in the current directory).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Upload a local file.
    Put {
        scope: String,
        file: PathBuf,
        /// Stored name (default: the local file name).
        #[arg(long)]
        name: Option<String>,
    },
    /// Delete a file.
    Rm { scope: String, name: String },
    /// Show the authenticated principal and effective permissions.
    Whoami,
    /// Administrator commands.
    #[command(subcommand)]
    Admin(AdminCommand),
    /// Local certificate authority bootstrap.
    #[command(subcommand)]
    Ca(CaCommand),
}

#[derive(Debug, Subcommand)]
pub enum AdminCommand {
    #[command(subcommand)]
    User(UserCommand),
    #[command(subcommand)]
    Cert(CertCommand),
    #[command(subcommand)]
    Group(GroupCommand),
    #[command(subcommand)]
    Acl(AclCommand),
    /// Query the audit log.
    Audit {
        #[arg(long)]
        principal: Option<String>,
        #[arg(long)]
        action: Option<String>,
        #[arg(long)]
        from_seq: Option<u64>,
        #[arg(long)]
        to_seq: Option<u64>,
    },
    /// Download a backup archive.
    Backup {
        /// Destination (default: the server-suggested name).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RoleArg {
    Client,
    Administrator,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StatusArg {
    Active,
    Suspended,
}

#[derive(Debug, Subcommand)]
pub enum UserCommand {
    Add {
        username: String,
        #[arg(long, value_enum)]
        role: Option<RoleArg>,
        #[arg(long, value_enum)]
        status: Option<StatusArg>,
    },
    Del {
        username: String,
    },
    Mod {
        username: String,
        #[arg(long, value_enum)]
        role: Option<RoleArg>,
        #[arg(long, value_enum)]
        status: Option<StatusArg>,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum CertCommand {
    /// Issue a fresh certificate and unpack the credential bundle.
    Issue {
        username: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        days: Option<u32>,
    },
}

#[derive(Debug, Subcommand)]
pub enum GroupCommand {
    Add {
        name: String,
    },
    Del {
        name: String,
    },
    List,
    #[command(subcommand)]
    Member(MemberCommand),
}

#[derive(Debug, Subcommand)]
pub enum MemberCommand {
    Add { group: String, username: String },
    Del { group: String, username: String },
}

#[derive(Debug, Subcommand)]
pub enum AclCommand {
    /// Grant `permissions` (comma separated, e.g. VIEW,DOWNLOAD) to
    /// `subject` (user:<name> or group:<name>) on `scope`.
    Set {
        subject: String,
        scope: String,
        permissions: String,
    },
    Del {
        subject: String,
        scope: String,
    },
    List,
}

#[derive(Debug, Subcommand)]
pub enum CaCommand {
    /// Create a self-signed root CA.
    Init {
        #[arg(long)]
        cn: String,
        #[arg(long, default_value = "SFS")]
        org: String,
        #[arg(long, default_value_t = 3650)]
        days: u32,
        #[arg(long, default_value = ".")]
        dir: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Issue the server's TLS certificate.
    IssueServer {
        #[arg(long = "host", required = true)]
        hosts: Vec<String>,
        #[arg(long, default_value_t = 825)]
        days: u32,
        /// Directory holding ca.crt.pem and ca.key.pem.
        #[arg(long, default_value = ".")]
        ca_dir: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}
