//! The `.vp/` state directory: tab-separated tables, a writer lock, and a
//! loader that refuses anything violating the workspace invariants.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::model::{Asset, AssetId, AssetKind, Feature, FeatureId, FeatureModel, GroupKind};
use crate::oplog::{OperatorApplication, OperatorKind};
use crate::pc::Pc;
use crate::trace::{Trace, TraceDatabase};
use crate::workspace::{Layout, Workspace, ROOT_ID};

pub const STATE_DIR: &str = ".vp";
const FORMAT: &str = "vplat-state-1";

pub const STATE_FILES: [&str; 8] = [
    "meta",
    "assets.tsv",
    "features.tsv",
    "pcs.tsv",
    "traces.tsv",
    "ftraces.tsv",
    "log.tsv",
    "files.tsv",
];

pub fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape(s: &str) -> Result<String> {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('\\') => out.push('\\'),
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            other => return Err(corrupt(format!("bad escape `\\{}`", other.map(String::from).unwrap_or_default()))),
        }
    }
    Ok(out)
}

fn corrupt(msg: impl Into<String>) -> Error {
    Error::CorruptState(msg.into())
}

fn opt_id(v: Option<u64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_else(|| "-".into())
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

/// Renders every state file; the map is keyed by file name.
pub fn render_state(ws: &Workspace) -> BTreeMap<&'static str, String> {
    let mut files = BTreeMap::new();

    let layout = match &ws.layout {
        Layout::Multi => "multi".to_string(),
        Layout::Single(name) => format!("single:{}", escape(name)),
    };
    let meta = [
        ("format", FORMAT.to_string()),
        ("global_version", ws.global_version().to_string()),
        ("layout", layout),
        ("next_asset", ws.next_asset.to_string()),
        ("next_feature", ws.next_feature.to_string()),
        ("next_seq", ws.traces.next_seq().to_string()),
        ("step", ws.step.to_string()),
    ];
    files.insert(
        "meta",
        meta.iter().map(|(k, v)| format!("{k}\t{v}\n")).collect(),
    );

    let mut assets = String::from("id\tparent\tord\tkind\tname\tversion\tcreated_step\tcontent\n");
    let mut pcs = String::from("asset\tpc\n");
    for a in ws.assets.values() {
        let ord = a
            .parent
            .map(|p| ws.assets[&p].children.iter().position(|c| *c == a.id).unwrap())
            .unwrap_or(0);
        let content = match &a.content {
            None => "-".to_string(),
            Some(c) => format!("+{}", escape(c)),
        };
        assets.push_str(&format!(
            "{}\t{}\t{ord}\t{}\t{}\t{}\t{}\t{content}\n",
            a.id,
            opt_id(a.parent.map(|p| p.0)),
            a.kind,
            escape(&a.name),
            a.version,
            a.created_step
        ));
        if a.pc != Pc::True {
            pcs.push_str(&format!("{}\t{}\n", a.id, a.pc));
        }
    }
    files.insert("assets.tsv", assets);
    files.insert("pcs.tsv", pcs);

    let mut features =
        String::from("owner\tid\tparent\tord\tname\toptional\tincomplete\tgroup\tversion\trole\n");
    let mut rows = Vec::new();
    for (owner, fm) in &ws.models {
        for f in fm.features() {
            let ord = f
                .parent
                .map(|p| fm.feature(p).children.iter().position(|c| *c == f.id).unwrap())
                .unwrap_or(0);
            let role = if f.id == fm.root() {
                "root"
            } else if f.id == fm.unassigned() {
                "unassigned"
            } else {
                "-"
            };
            rows.push((
                f.id,
                format!(
                    "{owner}\t{}\t{}\t{ord}\t{}\t{}\t{}\t{}\t{}\t{role}\n",
                    f.id,
                    opt_id(f.parent.map(|p| p.0)),
                    escape(&f.name),
                    flag(f.optional),
                    flag(f.incomplete),
                    f.group.keyword(),
                    f.version
                ),
            ));
        }
    }
    rows.sort();
    features.extend(rows.into_iter().map(|(_, r)| r));
    files.insert("features.tsv", features);

    let traces = |header: &str, rows: Vec<(u64, u64, u64, u64)>| {
        let mut out = format!("{header}\n");
        for (seq, s, c, v) in rows {
            out.push_str(&format!("{seq}\t{s}\t{c}\t{v}\n"));
        }
        out
    };
    files.insert(
        "traces.tsv",
        traces(
            "seq\tsource\tclone\tversion_at",
            ws.traces.asset_traces().iter().map(|t| (t.seq, t.source.0, t.clone.0, t.version_at)).collect(),
        ),
    );
    files.insert(
        "ftraces.tsv",
        traces(
            "seq\tsource\tclone\tversion_at",
            ws.traces.feature_traces().iter().map(|t| (t.seq, t.source.0, t.clone.0, t.version_at)).collect(),
        ),
    );

    let mut log = String::from("seq\tstep\toperator\tresult_version\tderived\tlate\targs\n");
    for op in &ws.log {
        log.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            op.seq,
            op.step,
            op.operator,
            op.result_version,
            flag(op.derived),
            flag(op.late)
        ));
        for a in &op.args {
            log.push('\t');
            log.push_str(&escape(a));
        }
        log.push('\n');
    }
    files.insert("log.tsv", log);

    let mut tracked = String::from("path\tdigest\n");
    for (p, d) in &ws.files {
        tracked.push_str(&format!("{}\t{d}\n", escape(p)));
    }
    files.insert("files.tsv", tracked);
    files
}

/// Writes the state below `<root>/.vp/`, each file replaced atomically.
pub fn save(ws: &Workspace, root: &Path) -> Result<()> {
    let dir = root.join(STATE_DIR);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    for (name, text) in render_state(ws) {
        let tmp = dir.join(format!("{name}.tmp"));
        let path = dir.join(name);
        fs::write(&tmp, text).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

pub fn load(root: &Path) -> Result<Workspace> {
    let dir = root.join(STATE_DIR);
    if !dir.is_dir() {
        return Err(Error::NoWorkspace(root.to_path_buf()));
    }
    let mut texts = BTreeMap::new();
    for name in STATE_FILES {
        let path = dir.join(name);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        texts.insert(name, text);
    }
    parse_state(&texts)
}

struct Table<'a> {
    name: &'a str,
    rows: Vec<(usize, Vec<&'a str>)>,
}

fn table<'a>(texts: &'a BTreeMap<&str, String>, name: &'a str, min_cols: usize) -> Result<Table<'a>> {
    let text = texts.get(name).ok_or_else(|| corrupt(format!("{name} missing")))?;
    let mut lines = text.lines().enumerate();
    if name != "meta" && lines.next().is_none() {
        return Err(corrupt(format!("{name}: missing header")));
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < min_cols {
            return Err(corrupt(format!("{name}:{}: expected {min_cols} columns", i + 1)));
        }
        rows.push((i + 1, cols));
    }
    Ok(Table { name, rows })
}

impl Table<'_> {
    fn num(&self, line: usize, v: &str) -> Result<u64> {
        v.parse().map_err(|_| corrupt(format!("{}:{line}: `{v}` is not a number", self.name)))
    }

    fn opt(&self, line: usize, v: &str) -> Result<Option<u64>> {
        if v == "-" {
            Ok(None)
        } else {
            self.num(line, v).map(Some)
        }
    }

    fn flag(&self, line: usize, v: &str) -> Result<bool> {
        match v {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(corrupt(format!("{}:{line}: `{v}` is not 0 or 1", self.name))),
        }
    }
}

/// Rebuilds a workspace from state file texts (keyed by file name).
pub fn parse_state(texts: &BTreeMap<&str, String>) -> Result<Workspace> {
    let meta = table(texts, "meta", 2)?;
    let mut kv = BTreeMap::new();
    for (_, cols) in &meta.rows {
        if cols.len() != 2 || kv.insert(cols[0], cols[1]).is_some() {
            return Err(corrupt("meta: malformed or repeated key"));
        }
    }
    let get = |k: &str| kv.get(k).copied().ok_or_else(|| corrupt(format!("meta: missing `{k}`")));
    if get("format")? != FORMAT {
        return Err(corrupt("meta: unknown format"));
    }
    let layout = match get("layout")? {
        "multi" => Layout::Multi,
        s => match s.strip_prefix("single:") {
            Some(name) if !name.is_empty() => Layout::Single(unescape(name)?),
            _ => return Err(corrupt("meta: bad layout")),
        },
    };
    let meta_num = |k: &str| meta.num(0, get(k)?);

    let mut ws = Workspace::new();
    ws.assets.clear();
    ws.layout = layout;
    ws.next_asset = meta_num("next_asset")?;
    ws.next_feature = meta_num("next_feature")?;
    ws.step = meta_num("step")?;

    let assets = table(texts, "assets.tsv", 8)?;
    let mut order: BTreeMap<AssetId, Vec<(u64, AssetId)>> = BTreeMap::new();
    for (line, cols) in &assets.rows {
        let line = *line;
        if cols.len() != 8 {
            return Err(corrupt(format!("assets.tsv:{line}: expected 8 columns")));
        }
        let id = AssetId(assets.num(line, cols[0])?);
        let parent = assets.opt(line, cols[1])?.map(AssetId);
        let ord = assets.num(line, cols[2])?;
        let kind: AssetKind = cols[3].parse().map_err(|_| corrupt(format!("assets.tsv:{line}: bad kind")))?;
        let content = match cols[7] {
            "-" => None,
            c => match c.strip_prefix('+') {
                Some(body) => Some(unescape(body)?),
                None => return Err(corrupt(format!("assets.tsv:{line}: bad content cell"))),
            },
        };
        let asset = Asset {
            id,
            name: unescape(cols[4])?,
            kind,
            version: assets.num(line, cols[5])?,
            parent,
            children: Vec::new(),
            pc: Pc::True,
            content,
            created_step: assets.num(line, cols[6])?,
        };
        if ws.assets.insert(id, asset).is_some() {
            return Err(corrupt(format!("assets.tsv:{line}: duplicate id {id}")));
        }
        if let Some(p) = parent {
            order.entry(p).or_default().push((ord, id));
        }
    }
    for (parent, mut kids) in order {
        kids.sort();
        let asset = ws
            .assets
            .get_mut(&parent)
            .ok_or_else(|| corrupt(format!("assets.tsv: unknown parent {parent}")))?;
        asset.children = kids.into_iter().map(|(_, k)| k).collect();
    }
    match ws.assets.get(&ROOT_ID) {
        Some(root) if root.parent.is_none() => {}
        _ => return Err(corrupt("assets.tsv: missing root")),
    }
    if meta_num("global_version")? != ws.global_version() {
        return Err(corrupt("meta: global version disagrees with the root"));
    }

    let pcs = table(texts, "pcs.tsv", 2)?;
    for (line, cols) in &pcs.rows {
        let id = AssetId(pcs.num(*line, cols[0])?);
        let pc: Pc = cols[1].parse().map_err(|e: Error| corrupt(format!("pcs.tsv:{line}: {e}")))?;
        ws.assets
            .get_mut(&id)
            .ok_or_else(|| corrupt(format!("pcs.tsv:{line}: unknown asset {id}")))?
            .pc = pc;
    }

    let features = table(texts, "features.tsv", 10)?;
    let mut per_owner: BTreeMap<AssetId, BTreeMap<FeatureId, Feature>> = BTreeMap::new();
    let mut roles: BTreeMap<AssetId, (Option<FeatureId>, Option<FeatureId>)> = BTreeMap::new();
    let mut forder: BTreeMap<FeatureId, Vec<(u64, FeatureId)>> = BTreeMap::new();
    for (line, cols) in &features.rows {
        let line = *line;
        let owner = AssetId(features.num(line, cols[0])?);
        let id = FeatureId(features.num(line, cols[1])?);
        let parent = features.opt(line, cols[2])?.map(FeatureId);
        let group = GroupKind::from_keyword(cols[7])
            .ok_or_else(|| corrupt(format!("features.tsv:{line}: bad group")))?;
        let f = Feature {
            id,
            name: unescape(cols[4])?,
            optional: features.flag(line, cols[5])?,
            incomplete: features.flag(line, cols[6])?,
            parent,
            children: Vec::new(),
            group,
            version: features.num(line, cols[8])?,
        };
        let role = roles.entry(owner).or_default();
        match cols[9] {
            "root" if role.0.is_none() => role.0 = Some(id),
            "unassigned" if role.1.is_none() => role.1 = Some(id),
            "-" => {}
            _ => return Err(corrupt(format!("features.tsv:{line}: bad role"))),
        }
        if let Some(p) = parent {
            forder.entry(p).or_default().push((features.num(line, cols[3])?, id));
        }
        if per_owner.entry(owner).or_default().insert(id, f).is_some() {
            return Err(corrupt(format!("features.tsv:{line}: duplicate id {id}")));
        }
    }
    for (owner, mut map) in per_owner {
        for (id, f) in map.iter_mut() {
            if let Some(mut kids) = forder.remove(id) {
                kids.sort();
                f.children = kids.into_iter().map(|(_, k)| k).collect();
            }
        }
        let (Some(root), Some(unassigned)) = roles[&owner] else {
            return Err(corrupt(format!("features.tsv: model of {owner} lacks root or UNASSIGNED")));
        };
        ws.models.insert(owner, FeatureModel::from_parts(map, root, unassigned));
    }
    if !forder.is_empty() {
        return Err(corrupt("features.tsv: child of a feature in another model"));
    }

    let next_seq = meta_num("next_seq")?;
    let read_traces = |name: &'static str| -> Result<Vec<Trace<u64>>> {
        let t = table(texts, name, 4)?;
        let mut out = Vec::new();
        for (line, cols) in &t.rows {
            out.push(Trace {
                seq: t.num(*line, cols[0])?,
                source: t.num(*line, cols[1])?,
                clone: t.num(*line, cols[2])?,
                version_at: t.num(*line, cols[3])?,
            });
        }
        Ok(out)
    };
    let atraces: Vec<Trace<AssetId>> = read_traces("traces.tsv")?
        .into_iter()
        .map(|t| Trace { seq: t.seq, source: AssetId(t.source), clone: AssetId(t.clone), version_at: t.version_at })
        .collect();
    let ftraces: Vec<Trace<FeatureId>> = read_traces("ftraces.tsv")?
        .into_iter()
        .map(|t| Trace { seq: t.seq, source: FeatureId(t.source), clone: FeatureId(t.clone), version_at: t.version_at })
        .collect();
    check_seqs(atraces.iter().map(|t| (t.seq, t.source.0 == t.clone.0)), next_seq, "traces.tsv")?;
    check_seqs(ftraces.iter().map(|t| (t.seq, t.source.0 == t.clone.0)), next_seq, "ftraces.tsv")?;
    let mut all: Vec<u64> = atraces.iter().map(|t| t.seq).chain(ftraces.iter().map(|t| t.seq)).collect();
    all.sort();
    all.dedup();
    if all.len() != atraces.len() + ftraces.len() {
        return Err(corrupt("trace sequence numbers repeat"));
    }
    ws.traces = TraceDatabase::from_parts(atraces, ftraces, next_seq);

    let log = table(texts, "log.tsv", 6)?;
    let mut prev = 0;
    for (line, cols) in &log.rows {
        let line = *line;
        let seq = log.num(line, cols[0])?;
        if seq <= prev {
            return Err(corrupt(format!("log.tsv:{line}: sequence not increasing")));
        }
        prev = seq;
        let operator: OperatorKind =
            cols[2].parse().map_err(|_| corrupt(format!("log.tsv:{line}: unknown operator")))?;
        ws.log.push(OperatorApplication {
            seq,
            step: log.num(line, cols[1])?,
            operator,
            result_version: log.num(line, cols[3])?,
            derived: log.flag(line, cols[4])?,
            late: log.flag(line, cols[5])?,
            args: cols[6..].iter().map(|a| unescape(a)).collect::<Result<_>>()?,
        });
    }

    let files = table(texts, "files.tsv", 2)?;
    for (line, cols) in &files.rows {
        let valid = cols.len() == 2 && cols[1].len() == 64 && cols[1].bytes().all(|b| b.is_ascii_hexdigit());
        if !valid {
            return Err(corrupt(format!("files.tsv:{line}: bad row")));
        }
        ws.files.insert(unescape(cols[0])?, cols[1].to_string());
    }

    ws.check_invariants().map_err(corrupt)?;
    Ok(ws)
}

fn check_seqs(rows: impl Iterator<Item = (u64, bool)>, next: u64, name: &str) -> Result<()> {
    let mut prev = 0;
    for (seq, self_trace) in rows {
        if seq <= prev || seq >= next || self_trace {
            return Err(corrupt(format!("{name}: bad trace row (seq {seq})")));
        }
        prev = seq;
    }
    Ok(())
}

/// Exclusive writer lock on a workspace, released on drop.
#[derive(Debug)]
pub struct WriterLock {
    path: PathBuf,
}

impl WriterLock {
    pub fn acquire(root: &Path) -> Result<WriterLock> {
        let dir = root.join(STATE_DIR);
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let path = dir.join("lock");
        match fs::OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(WriterLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::LockHeld(path)),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for WriterLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
