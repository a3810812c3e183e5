use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use vplat_core::model::{AssetKind, NewAsset};
use vplat_core::parse::{build_file_structure, parse_feature_model};
use vplat_core::sync::{diff_snapshots, load, read_snapshot, save, WriterLock, STATE_DIR};
use vplat_core::{scan, tally, AssetId, CostModel, Error, History, Pc, Result, SyncReport, Workspace};

use crate::args::{Command, Query};
use crate::report::Report;

/// `VPLAT_ROOT`/`--root` if given, else the nearest ancestor of the current
/// directory that holds `.vp/`.
pub fn discover(explicit: Option<&Path>) -> Result<PathBuf> {
    if let Some(root) = explicit {
        return Ok(root.to_path_buf());
    }
    let cwd = std::env::current_dir().map_err(|e| Error::io(".", e))?;
    cwd.ancestors()
        .find(|d| d.join(STATE_DIR).is_dir())
        .map(Path::to_path_buf)
        .ok_or(Error::NoWorkspace(cwd))
}

pub fn run(command: Command, root: Option<&Path>) -> Result<Report> {
    match command {
        Command::Init => init(root),
        Command::Sync { apply } => sync(&discover(root)?, apply),
        Command::Replay { manifest, apply, out } => replay(&manifest, apply, out.as_deref()),
        Command::Query(q) => query(&load(&discover(root)?)?, q),
        Command::Metrics { cost_per_invocation } => metrics(&load(&discover(root)?)?, cost_per_invocation),
        op => mutate(&discover(root)?, |ws| operator(ws, op)),
    }
}

fn init(root: Option<&Path>) -> Result<Report> {
    let root = match root {
        Some(r) => r.to_path_buf(),
        None => std::env::current_dir().map_err(|e| Error::io(".", e))?,
    };
    let state = root.join(STATE_DIR);
    if state.exists() {
        return Err(Error::AlreadyInitialized(root));
    }
    let result = (|| {
        let _lock = WriterLock::acquire(&root)?;
        let (ws, sync) = scan(&root)?;
        save(&ws, &root)?;
        Ok(sync_report(&ws, &sync))
    })();
    if result.is_err() {
        let _ = fs::remove_dir_all(&state);
    }
    result
}

fn sync(root: &Path, apply: bool) -> Result<Report> {
    let _lock = WriterLock::acquire(root)?;
    let mut ws = load(root)?;
    let snapshot = read_snapshot(root, ws.layout())?;
    let changes = diff_snapshots(ws.files(), &snapshot);
    if changes.is_empty() && !apply {
        let mut r = sync_report(&ws, &SyncReport { propagations: ws.detect_propagations(), ..Default::default() });
        r.set("changes", json!(0));
        return Ok(r);
    }
    ws.set_step(ws.step() + 1);
    let sync = ws.apply_change_set(&changes, &snapshot, &[], apply)?;
    save(&ws, root)?;
    let mut r = sync_report(&ws, &sync);
    r.set("changes", json!(changes.entries.len()));
    Ok(r)
}

fn sync_report(ws: &Workspace, sync: &SyncReport) -> Report {
    let mut r = Report::default();
    for op in &sync.applied {
        r.row(op_row(op));
    }
    for (s, c) in &sync.propagations {
        r.row(["propagate".to_string(), ws.path_of(*s).to_string(), ws.path_of(*c).to_string()]);
    }
    for w in &sync.warnings {
        r.row(["warning", w.as_str()]);
    }
    r.set("operations", json!(sync.applied));
    r.set("propagations", pairs_json(ws, &sync.propagations));
    r.set("warnings", json!(sync.warnings));
    r
}

fn op_row(op: &vplat_core::OperatorApplication) -> Vec<String> {
    let mut row = vec![op.operator.to_string()];
    row.extend(op.args.iter().cloned());
    row.push(op.result_version.to_string());
    row
}

fn pairs_json(ws: &Workspace, pairs: &[(AssetId, AssetId)]) -> Value {
    let items: Vec<Value> = pairs
        .iter()
        .map(|(s, c)| json!({ "source": ws.path_of(*s).to_string(), "clone": ws.path_of(*c).to_string() }))
        .collect();
    Value::Array(items)
}

/// Runs one operator under the writer lock and saves the result. The report
/// lists the new log entries and every asset created on the way.
fn mutate(root: &Path, f: impl FnOnce(&mut Workspace) -> Result<()>) -> Result<Report> {
    let _lock = WriterLock::acquire(root)?;
    let mut ws = load(root)?;
    let logged = ws.log().len();
    let before: BTreeSet<AssetId> = ws.assets().map(|a| a.id).collect();
    f(&mut ws)?;
    save(&ws, root)?;

    let mut r = Report::default();
    let ops = &ws.log()[logged..];
    for op in ops {
        r.row(op_row(op));
    }
    let created: Vec<String> =
        ws.assets().filter(|a| !before.contains(&a.id)).map(|a| ws.path_of(a.id).to_string()).collect();
    for path in &created {
        r.row(["created", path.as_str()]);
    }
    r.set("operations", json!(ops));
    r.set("created", json!(created));
    Ok(r)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn operator(ws: &mut Workspace, op: Command) -> Result<()> {
    let asset = |ws: &Workspace, p: &str| ws.resolve_str(p);
    match op {
        Command::AddAsset { src, target, kind, pc } => {
            let mut new = match kind {
                Some(kind) => NewAsset::new(src, kind.parse::<AssetKind>()?),
                None => import(Path::new(&src))?,
            };
            if let Some(pc) = pc {
                new = new.with_pc(pc.parse::<Pc>()?);
            }
            let target = asset(ws, &target)?;
            ws.add_asset(new, target).map(drop)
        }
        Command::ChangeAsset { path, content, from, rename } => {
            let content = match (content, from) {
                (Some(c), _) => Some(c),
                (None, Some(f)) => Some(read_text(&f)?),
                (None, None) => None,
            };
            let id = asset(ws, &path)?;
            ws.change_asset(id, content, rename)
        }
        Command::RemoveAsset { path } => {
            let id = asset(ws, &path)?;
            ws.remove_asset(id)
        }
        Command::MoveAsset { src, target } => {
            let (s, t) = (asset(ws, &src)?, asset(ws, &target)?);
            ws.move_asset(s, t).map(drop)
        }
        Command::Map { path, feature } => {
            let id = asset(ws, &path)?;
            ws.map_asset_to_feature(id, &feature)
        }
        Command::CloneAsset { src, target } => {
            let (s, t) = (asset(ws, &src)?, asset(ws, &target)?);
            ws.clone_asset(s, t).map(drop)
        }
        Command::PropagateAsset { src, target } => {
            let (s, t) = (asset(ws, &src)?, asset(ws, &target)?);
            ws.propagate_asset(s, t).map(drop)
        }
        Command::AddFeature { name, parent } => {
            let p = ws.resolve_feature(&parent)?;
            ws.add_feature(&name, p).map(drop)
        }
        Command::AddFm { path, fm_file } => {
            let fm = parse_feature_model(&read_text(&fm_file)?)?;
            let id = asset(ws, &path)?;
            ws.add_feature_model_to_asset(id, fm)
        }
        Command::RemoveFeature { feature } => {
            let f = ws.resolve_feature(&feature)?;
            ws.remove_feature(f)
        }
        Command::MoveFeature { feature, parent } => {
            let (f, p) = (ws.resolve_feature(&feature)?, ws.resolve_feature(&parent)?);
            ws.move_feature(f, p).map(drop)
        }
        Command::MakeOptional { feature } => {
            let f = ws.resolve_feature(&feature)?;
            ws.make_feature_optional(f).map(drop)
        }
        Command::RenameFeature { feature, name } => {
            let f = ws.resolve_feature(&feature)?;
            ws.rename_feature(f, &name)
        }
        Command::CloneFeature { src, target } => {
            let (s, t) = (ws.resolve_feature(&src)?, ws.resolve_feature(&target)?);
            ws.clone_feature(s, t).map(drop)
        }
        Command::PropagateFeature { src, target } => {
            let (s, t) = (ws.resolve_feature(&src)?, ws.resolve_feature(&target)?);
            ws.propagate_feature(s, t).map(drop)
        }
        Command::Init | Command::Sync { .. } | Command::Query(_) | Command::Replay { .. } | Command::Metrics { .. } => {
            unreachable!("not an operator")
        }
    }
}

/// A file (with its annotation blocks) or a directory tree read from disk.
fn import(path: &Path) -> Result<NewAsset> {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .ok_or_else(|| Error::InvalidName(path.display().to_string()))?;
    let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
    if meta.is_file() {
        return build_file_structure(&name, &read_text(path)?);
    }
    let mut entries: Vec<PathBuf> = fs::read_dir(path)
        .map_err(|e| Error::io(path, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(path, err)))
        .collect::<Result<_>>()?;
    entries.sort();
    let mut folder = NewAsset::new(name, AssetKind::Folder);
    for entry in entries {
        if entry.file_name().is_some_and(|n| n == STATE_DIR || n == ".git") {
            continue;
        }
        folder = folder.with_child(import(&entry)?);
    }
    Ok(folder)
}

fn query(ws: &Workspace, q: Query) -> Result<Report> {
    let mut r = Report::default();
    match q {
        Query::MappedAssets { feature } => {
            let f = ws.resolve_feature(&feature)?;
            let mut paths: Vec<String> = ws.mapped_assets(f).into_iter().map(|a| ws.path_of(a).to_string()).collect();
            paths.sort();
            for p in &paths {
                r.row([p.as_str()]);
            }
            r.set("feature", json!(ws.feature_ref(f)));
            r.set("assets", json!(paths));
        }
        Query::Clones { path } => {
            let id = ws.resolve_str(&path)?;
            let mut paths: Vec<String> = ws.clones_of(id).into_iter().map(|a| ws.path_of(a).to_string()).collect();
            paths.sort();
            for p in &paths {
                r.row([p.as_str()]);
            }
            r.set("asset", json!(ws.path_of(id).to_string()));
            r.set("clones", json!(paths));
        }
        Query::Changes => {
            let pairs = ws.detect_propagations();
            for (s, c) in &pairs {
                r.row([ws.path_of(*s).to_string(), ws.path_of(*c).to_string()]);
            }
            r.set("propagations", pairs_json(ws, &pairs));
        }
        Query::Pc { path } => {
            let id = ws.resolve_str(&path)?;
            let pc = ws.get(id)?.pc.to_string();
            r.row([pc.as_str()]);
            r.set("asset", json!(ws.path_of(id).to_string()));
            r.set("pc", json!(pc));
        }
    }
    Ok(r)
}

fn replay(manifest: &Path, apply: bool, out: Option<&Path>) -> Result<Report> {
    let history = History::load(manifest)?;
    let (ws, reports) = history.replay(apply)?;
    if let Some(out) = out {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        let _lock = WriterLock::acquire(out)?;
        save(&ws, out)?;
    }
    let mut r = Report::default();
    let mut steps = Vec::new();
    for (step, rep) in history.steps.iter().zip(&reports) {
        r.row([
            "step".to_string(),
            step.index.to_string(),
            rep.applied.len().to_string(),
            rep.propagations.len().to_string(),
            rep.warnings.len().to_string(),
        ]);
        steps.push(json!({
            "index": step.index,
            "operations": rep.applied.len(),
            "propagations": pairs_json(&ws, &rep.propagations),
            "warnings": rep.warnings,
        }));
    }
    let pending = ws.detect_propagations();
    for (s, c) in &pending {
        r.row(["propagate".to_string(), ws.path_of(*s).to_string(), ws.path_of(*c).to_string()]);
    }
    r.set("steps", Value::Array(steps));
    r.set("propagations", pairs_json(&ws, &pending));
    r.set("log_length", json!(ws.log().len()));
    Ok(r)
}

fn metrics(ws: &Workspace, per_invocation: f64) -> Result<Report> {
    let counts = tally(ws.log());
    let model = CostModel::default();
    let benefit = model.total_benefit(&counts, per_invocation);
    let break_even = model.break_even(&counts).ok();
    let mut r = Report::default();
    for (op, n) in &counts.per_operator {
        r.row(["operator".to_string(), op.clone(), n.to_string()]);
    }
    for (k, v) in [
        ("feature_ops", counts.feature_ops),
        ("late", counts.late),
        ("saved_loc", counts.saved_loc),
        ("saved_clone", counts.saved_clone),
    ] {
        r.row([k.to_string(), v.to_string()]);
    }
    r.row(["cost_per_invocation".to_string(), per_invocation.to_string()]);
    r.row(["total_benefit".to_string(), format!("{benefit:.1}")]);
    r.row(["break_even".to_string(), break_even.map_or("undefined".into(), |t| format!("{t:.1}"))]);
    r.set("counts", json!(counts));
    r.set("cost_model", json!(model));
    r.set("cost_per_invocation", json!(per_invocation));
    r.set("total_benefit", json!(benefit));
    r.set("break_even", json!(break_even));
    Ok(r)
}
