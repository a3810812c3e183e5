use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Feature- and clone-aware bookkeeping for clone-and-own development.
///
/// Asset paths are `/`-separated names below the workspace root (`/` is the
/// root itself); feature paths are the path of the asset owning the feature
/// model followed by feature names, e.g. `BC/EXP`.
#[derive(Debug, Parser)]
#[command(name = "vplat", version)]
pub struct Cli {
    /// Print reports as JSON instead of TSV.
    #[arg(long, global = true)]
    pub json: bool,

    /// Workspace root; defaults to the nearest ancestor holding `.vp/`.
    #[arg(long, global = true, env = "VPLAT_ROOT")]
    pub root: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Create a workspace and record the directory's current contents.
    Init,
    /// Reconcile the workspace with the directory's current contents.
    Sync {
        /// Propagate detected changes into clones.
        #[arg(long)]
        apply: bool,
    },
    /// Add a file or directory from disk (or, with --kind, an empty asset).
    AddAsset {
        src: String,
        target: String,
        /// Treat SRC as the name of a new empty asset of this kind.
        #[arg(long)]
        kind: Option<String>,
        #[arg(long)]
        pc: Option<String>,
    },
    ChangeAsset {
        path: String,
        /// New content, inline.
        #[arg(long, conflicts_with = "from")]
        content: Option<String>,
        /// New content, read from a file.
        #[arg(long)]
        from: Option<PathBuf>,
        #[arg(long)]
        rename: Option<String>,
    },
    RemoveAsset { path: String },
    MoveAsset { src: String, target: String },
    /// Map an asset to a feature of its scope's feature model.
    Map { path: String, feature: String },
    CloneAsset { src: String, target: String },
    PropagateAsset { src: String, target: String },
    AddFeature { name: String, parent: String },
    /// Attach a feature model, read from FMFILE, to an asset.
    AddFm { path: String, fm_file: PathBuf },
    RemoveFeature { feature: String },
    MoveFeature { feature: String, parent: String },
    MakeOptional { feature: String },
    RenameFeature { feature: String, name: String },
    CloneFeature { src: String, target: String },
    PropagateFeature { src: String, target: String },
    #[command(subcommand)]
    Query(Query),
    /// Replay a history manifest (with `clones.tsv` beside it).
    Replay {
        manifest: PathBuf,
        #[arg(long)]
        apply: bool,
        /// Save the replayed workspace into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Operator usage counts and cost-benefit figures of the log.
    Metrics {
        #[arg(long, default_value_t = 5.0)]
        cost_per_invocation: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum Query {
    /// Assets whose presence condition names the feature.
    MappedAssets { feature: String },
    /// Assets linked to PATH by clone traces.
    Clones { path: String },
    /// Source/clone pairs where the source changed since the last sync.
    Changes,
    /// Presence condition of an asset.
    Pc { path: String },
}
