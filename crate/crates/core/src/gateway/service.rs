use std::collections::BTreeMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};

use crate::inference::{Answer, Question, TraceNode};
use crate::kb::FactStore;
use crate::scenarios::{CriticalEvent, Package, ScenarioConfig, ScenarioReport};

use super::csvio::{read_table_str, write_table};
use super::session::{Clock, JournalEntry, Session, SessionState, SessionView, SystemClock};
use super::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableKind {
    Experience,
    TimeSeries,
    Decision,
}

impl TableKind {
    pub fn parse(s: &str) -> Option<TableKind> {
        Some(match s.replace('-', "_").as_str() {
            "experience" => TableKind::Experience,
            "time_series" | "series" => TableKind::TimeSeries,
            "decision" => TableKind::Decision,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableInfo {
    pub name: String,
    pub kind: TableKind,
    pub columns: Vec<String>,
    pub rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PackageInfo {
    pub name: String,
    pub clauses: usize,
    pub facts: usize,
    pub tables: Vec<String>,
}

/// Sessions, packages and uploaded tables. With a data directory every
/// session is journaled to `<data>/sessions/<id>.jsonl` and replayed on
/// open; uploaded tables go to `<data>/tables/<name>.<kind>.csv`.
pub struct Service {
    packages: RwLock<BTreeMap<String, Arc<Package>>>,
    tables: RwLock<(FactStore, Vec<TableInfo>)>,
    sessions: RwLock<BTreeMap<String, Arc<Mutex<Session>>>>,
    data_dir: Option<PathBuf>,
    config: ScenarioConfig,
    clock: Box<dyn Clock>,
    next_id: AtomicU64,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> GatewayError {
    GatewayError::Io(format!("{}: {e}", path.display()))
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Service {
    /// In-memory service with the shipped packages.
    pub fn new(config: ScenarioConfig) -> Service {
        let mut packages = BTreeMap::new();
        for name in Package::SHIPPED {
            let p = Package::builtin(name).expect("shipped packages parse");
            packages.insert(name.to_string(), Arc::new(p));
        }
        Service {
            packages: RwLock::new(packages),
            tables: RwLock::new((FactStore::new(), Vec::new())),
            sessions: RwLock::new(BTreeMap::new()),
            data_dir: None,
            config,
            clock: Box::new(SystemClock),
            next_id: AtomicU64::new(1),
        }
    }

    pub fn with_clock(mut self, clock: impl Clock + 'static) -> Service {
        self.clock = Box::new(clock);
        self
    }

    /// Service backed by a data directory:
    /// `<data>/<package>/*.kb` is enterprise data appended to that package
    /// (a directory without a shipped package of that name becomes a new
    /// package), `<data>/tables/*.csv` are uploaded tables, and
    /// `<data>/sessions/*.jsonl` are replayed.
    pub fn open(data: impl AsRef<Path>, config: ScenarioConfig) -> Result<Service, GatewayError> {
        let data = data.as_ref();
        fs::create_dir_all(data.join("sessions")).map_err(|e| io_err(data, e))?;
        fs::create_dir_all(data.join("tables")).map_err(|e| io_err(data, e))?;
        let mut svc = Service::new(config);
        svc.data_dir = Some(data.to_path_buf());

        let mut dirs: Vec<PathBuf> = fs::read_dir(data)
            .map_err(|e| io_err(data, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        dirs.sort();
        for dir in dirs {
            let name = dir.file_name().unwrap_or_default().to_string_lossy().to_string();
            if name == "sessions" || name == "tables" {
                continue;
            }
            let mut files: Vec<PathBuf> = fs::read_dir(&dir)
                .map_err(|e| io_err(&dir, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "kb"))
                .collect();
            files.sort();
            let mut pkg = match Package::builtin(&name) {
                Ok(p) => p,
                Err(_) => Package::from_sources(&name, &[])?,
            };
            for f in files {
                pkg.add_file(f)?;
            }
            svc.packages.get_mut().unwrap().insert(name, Arc::new(pkg));
        }

        let tdir = data.join("tables");
        let mut tfiles: Vec<PathBuf> = fs::read_dir(&tdir)
            .map_err(|e| io_err(&tdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        tfiles.sort();
        for f in tfiles {
            // <name>.<kind>.csv
            let stem = f.file_stem().unwrap_or_default().to_string_lossy().to_string();
            let (name, kind) = stem.rsplit_once('.').unwrap_or((&stem, "decision"));
            let kind = TableKind::parse(kind).unwrap_or(TableKind::Decision);
            let text = fs::read_to_string(&f).map_err(|e| io_err(&f, e))?;
            svc.install_table(name, kind, &text)?;
        }

        let sdir = data.join("sessions");
        let mut sfiles: Vec<PathBuf> = fs::read_dir(&sdir)
            .map_err(|e| io_err(&sdir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        sfiles.sort();
        let mut max_id = 0;
        for f in sfiles {
            let (entries, torn) = read_journal(&f)?;
            if torn {
                // Drop the partial line so later appends start clean.
                let mut text = String::new();
                for e in &entries {
                    text.push_str(&serde_json::to_string(e).map_err(|e| GatewayError::Journal(e.to_string()))?);
                    text.push('\n');
                }
                fs::write(&f, text).map_err(|e| io_err(&f, e))?;
            }
            let Some(JournalEntry::Created { package, .. }) = entries.first() else {
                return Err(GatewayError::Journal(format!("{}: no created entry", f.display())));
            };
            let kb = svc.session_package(package)?;
            let s = Session::replay(&entries, kb, svc.config.clone())?;
            svc.persist(&s, entries.len())?;
            if let Some(n) = s.id.strip_prefix('s').and_then(|n| n.parse::<u64>().ok()) {
                max_id = max_id.max(n);
            }
            svc.sessions
                .get_mut()
                .unwrap()
                .insert(s.id.clone(), Arc::new(Mutex::new(s)));
        }
        svc.next_id = AtomicU64::new(max_id + 1);
        Ok(svc)
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn packages(&self) -> Vec<PackageInfo> {
        self.packages
            .read()
            .unwrap()
            .iter()
            .map(|(name, p)| PackageInfo {
                name: name.clone(),
                clauses: p.kb.clauses.len(),
                facts: p.store.fact_count(),
                tables: p.store.tables().map(|(n, _)| n.to_string()).collect(),
            })
            .collect()
    }

    /// Adds source text to a package, creating it when new.
    pub fn add_package_source(&self, package: &str, file: &str, text: &str) -> Result<(), GatewayError> {
        let mut packages = self.packages.write().unwrap();
        let mut pkg = match packages.get(package) {
            Some(p) => (**p).clone(),
            None => Package::from_sources(package, &[])?,
        };
        pkg.add_source(file, text)?;
        packages.insert(package.to_string(), Arc::new(pkg));
        Ok(())
    }

    /// Package snapshot for a new session: the package plus uploaded tables.
    fn session_package(&self, name: &str) -> Result<Arc<Package>, GatewayError> {
        let packages = self.packages.read().unwrap();
        let base = packages
            .get(name)
            .ok_or_else(|| GatewayError::UnknownPackage(name.to_string()))?;
        let tables = self.tables.read().unwrap();
        if tables.0.is_empty() {
            return Ok(base.clone());
        }
        let mut p = (**base).clone();
        p.store.merge(&tables.0);
        Ok(Arc::new(p))
    }

    fn journal_path(&self, id: &str) -> Option<PathBuf> {
        self.data_dir
            .as_ref()
            .map(|d| d.join("sessions").join(format!("{id}.jsonl")))
    }

    /// Appends the entries past `from` to the session's journal file.
    fn persist(&self, s: &Session, from: usize) -> Result<(), GatewayError> {
        let Some(path) = self.journal_path(&s.id) else {
            return Ok(());
        };
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(|e| io_err(&path, e))?;
        let mut buf = String::new();
        for e in &s.journal()[from..] {
            buf.push_str(&serde_json::to_string(e).map_err(|e| GatewayError::Journal(e.to_string()))?);
            buf.push('\n');
        }
        f.write_all(buf.as_bytes()).map_err(|e| io_err(&path, e))?;
        f.sync_data().map_err(|e| io_err(&path, e))
    }

    pub fn create_session(&self, package: &str, event: serde_json::Value) -> Result<SessionView, GatewayError> {
        let kb = self.session_package(package)?;
        let event = CriticalEvent::from_value(event)?;
        let id = format!("s{:06}", self.next_id.fetch_add(1, Ordering::SeqCst));
        let s = Session::start(id.clone(), package, kb, event, self.config.clone(), &*self.clock);
        self.persist(&s, 0)?;
        let view = s.view();
        self.sessions.write().unwrap().insert(id, Arc::new(Mutex::new(s)));
        Ok(view)
    }

    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, GatewayError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| GatewayError::NotFound(id.to_string()))
    }

    pub fn session_ids(&self) -> Vec<String> {
        self.sessions.read().unwrap().keys().cloned().collect()
    }

    pub fn session(&self, id: &str) -> Result<SessionView, GatewayError> {
        Ok(self.get(id)?.lock().unwrap().view())
    }

    pub fn question(&self, id: &str) -> Result<Question, GatewayError> {
        let s = self.get(id)?;
        let s = s.lock().unwrap();
        s.pending_question()
            .cloned()
            .ok_or(GatewayError::NotAwaiting(s.state()))
    }

    pub fn answer(&self, id: &str, question_id: u64, answer: Answer) -> Result<SessionView, GatewayError> {
        let s = self.get(id)?;
        let mut s = s.lock().unwrap();
        let from = s.journal().len();
        s.submit(question_id, answer, &*self.clock)?;
        self.persist(&s, from)?;
        Ok(s.view())
    }

    pub fn report(&self, id: &str) -> Result<ScenarioReport, GatewayError> {
        let s = self.get(id)?;
        let s = s.lock().unwrap();
        s.report().cloned().ok_or(GatewayError::NotDone(s.state()))
    }

    pub fn trace(&self, id: &str) -> Result<TraceNode, GatewayError> {
        let s = self.get(id)?;
        let s = s.lock().unwrap();
        s.trace().cloned().ok_or(GatewayError::NotDone(s.state()))
    }

    pub fn journal(&self, id: &str) -> Result<Vec<JournalEntry>, GatewayError> {
        Ok(self.get(id)?.lock().unwrap().journal().to_vec())
    }

    pub fn state(&self, id: &str) -> Result<SessionState, GatewayError> {
        Ok(self.get(id)?.lock().unwrap().state())
    }

    fn install_table(&self, name: &str, kind: TableKind, csv: &str) -> Result<TableInfo, GatewayError> {
        if !valid_name(name) {
            return Err(GatewayError::BadRequest(format!("invalid table name {name:?}")));
        }
        let t = read_table_str(csv)?;
        let (min_cols, min_rows) = match kind {
            TableKind::Experience => (2, 1),
            TableKind::TimeSeries => (1, 2),
            TableKind::Decision => (1, 1),
        };
        if t.columns.len() < min_cols || t.rows.len() < min_rows {
            return Err(GatewayError::Csv(format!(
                "{kind:?} table needs at least {min_cols} columns and {min_rows} rows"
            )));
        }
        let info = TableInfo {
            name: name.to_string(),
            kind,
            columns: t.columns.clone(),
            rows: t.rows.len(),
        };
        let mut tables = self.tables.write().unwrap();
        tables
            .0
            .insert_table(name, t)
            .map_err(|e| GatewayError::Csv(e.to_string()))?;
        tables.1.retain(|i| i.name != name);
        tables.1.push(info.clone());
        Ok(info)
    }

    /// Stores a CSV table under `name`; later sessions see it as a KB table.
    pub fn upload_table(&self, name: &str, kind: TableKind, csv: &str) -> Result<TableInfo, GatewayError> {
        let info = self.install_table(name, kind, csv)?;
        if let Some(d) = &self.data_dir {
            let kinds = ["experience", "time_series", "decision"];
            for k in kinds {
                let _ = fs::remove_file(d.join("tables").join(format!("{name}.{k}.csv")));
            }
            let k = serde_json::to_value(kind)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default();
            let path = d.join("tables").join(format!("{name}.{k}.csv"));
            let t = self.tables.read().unwrap().0.table(name).cloned().unwrap_or_default();
            fs::write(&path, write_table(&t)?).map_err(|e| io_err(&path, e))?;
        }
        Ok(info)
    }

    pub fn tables(&self) -> Vec<TableInfo> {
        self.tables.read().unwrap().1.clone()
    }
}

/// Reads a journal; the flag is set when a torn final line was dropped.
pub fn read_journal(path: &Path) -> Result<(Vec<JournalEntry>, bool), GatewayError> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    let lines: Vec<&str> = text.lines().collect();
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(e) => out.push(e),
            // A torn final line from a crash mid-write is dropped.
            Err(_) if i + 1 == lines.len() && !text.ends_with('\n') => return Ok((out, true)),
            Err(e) => return Err(GatewayError::Journal(format!("{}:{}: {e}", path.display(), i + 1))),
        }
    }
    Ok((out, false))
}
