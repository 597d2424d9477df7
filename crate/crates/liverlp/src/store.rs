//! File-backed document store: one JSON file per entity under
//! `classifiers/`, `datasets/` and `runs/`.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, MutexGuard};

use chrono::{DateTime, Utc};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::classifier::{clone_as, is_slug, Classifier};
use crate::records::Dataset;
use crate::runs::Run;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Classifier,
    Dataset,
    Run,
}

impl Kind {
    fn dir(self) -> &'static str {
        match self {
            Kind::Classifier => "classifiers",
            Kind::Dataset => "datasets",
            Kind::Run => "runs",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kind::Classifier => "classifier",
            Kind::Dataset => "dataset",
            Kind::Run => "run",
        }
    }
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{} `{id}` not found", kind.name())]
    NotFound { kind: Kind, id: String },
    #[error("{} `{id}` already exists", kind.name())]
    Exists { kind: Kind, id: String },
    #[error("classifier `{id}` is used by runs {}", runs.join(", "))]
    Referenced { id: String, runs: Vec<String> },
    #[error("`{0}` is not a valid id")]
    InvalidId(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Short description of a stored dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub id: String,
    pub name: String,
    pub cases: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: String,
    pub classifier_id: String,
    pub classifier_version: u64,
    pub dataset_id: String,
    pub created: DateTime<Utc>,
    pub cases: usize,
    pub failures: usize,
}

#[derive(Debug)]
pub struct Store {
    root: PathBuf,
    /// Serializes every write.
    writer: Mutex<()>,
}

/// The stored form of an entity: pretty JSON with a final newline.
pub fn to_document<T: Serialize>(value: &T) -> Result<String, StoreError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

impl Store {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        for kind in [Kind::Classifier, Kind::Dataset, Kind::Run] {
            fs::create_dir_all(root.join(kind.dir()))?;
        }
        Ok(Store {
            root,
            writer: Mutex::new(()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn lock(&self) -> MutexGuard<'_, ()> {
        self.writer.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn path(&self, kind: Kind, id: &str) -> Result<PathBuf, StoreError> {
        if !is_slug(id) {
            return Err(StoreError::InvalidId(id.to_string()));
        }
        Ok(self.root.join(kind.dir()).join(format!("{id}.json")))
    }

    pub fn exists(&self, kind: Kind, id: &str) -> bool {
        self.path(kind, id).is_ok_and(|p| p.exists())
    }

    /// The stored document exactly as written.
    pub fn raw(&self, kind: Kind, id: &str) -> Result<String, StoreError> {
        let path = self.path(kind, id)?;
        fs::read_to_string(&path).map_err(|e| match e.kind() {
            io::ErrorKind::NotFound => StoreError::NotFound {
                kind,
                id: id.to_string(),
            },
            _ => e.into(),
        })
    }

    pub fn get<T: DeserializeOwned>(&self, kind: Kind, id: &str) -> Result<T, StoreError> {
        Ok(serde_json::from_str(&self.raw(kind, id)?)?)
    }

    /// Writes to a temporary file in the same directory and renames it over
    /// the target, so readers never see a partial document.
    fn write(&self, kind: Kind, id: &str, text: &str) -> Result<(), StoreError> {
        let path = self.path(kind, id)?;
        let dir = path.parent().expect("entity paths have a parent");
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(text.as_bytes())?;
        tmp.as_file().sync_all()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }

    pub fn ids(&self, kind: Kind) -> Result<Vec<String>, StoreError> {
        let mut ids: Vec<String> = fs::read_dir(self.root.join(kind.dir()))?
            .filter_map(Result::ok)
            .filter_map(|e| {
                let name = e.file_name().into_string().ok()?;
                name.strip_suffix(".json").map(str::to_string)
            })
            .filter(|id| is_slug(id))
            .collect();
        ids.sort();
        Ok(ids)
    }

    fn list<T: DeserializeOwned>(&self, kind: Kind) -> Result<Vec<T>, StoreError> {
        self.ids(kind)?.iter().map(|id| self.get(kind, id)).collect()
    }

    // ---- classifiers ----

    pub fn classifiers(&self) -> Result<Vec<Classifier>, StoreError> {
        self.list(Kind::Classifier)
    }

    pub fn classifier(&self, id: &str) -> Result<Classifier, StoreError> {
        self.get(Kind::Classifier, id)
    }

    /// Stores a new classifier at version 1.
    pub fn create_classifier(&self, mut c: Classifier, now: DateTime<Utc>) -> Result<Classifier, StoreError> {
        let _guard = self.lock();
        if self.exists(Kind::Classifier, &c.id) {
            return Err(StoreError::Exists {
                kind: Kind::Classifier,
                id: c.id,
            });
        }
        c.version = 1;
        c.created = Some(now);
        c.modified = Some(now);
        self.write(Kind::Classifier, &c.id, &to_document(&c)?)?;
        Ok(c)
    }

    /// Replaces a classifier, bumping its version and keeping its creation
    /// time.
    pub fn update_classifier(&self, id: &str, mut c: Classifier, now: DateTime<Utc>) -> Result<Classifier, StoreError> {
        let _guard = self.lock();
        let old = self.classifier(id)?;
        c.id = id.to_string();
        c.version = old.version + 1;
        c.created = old.created;
        c.modified = Some(now);
        self.write(Kind::Classifier, id, &to_document(&c)?)?;
        Ok(c)
    }

    pub fn clone_classifier(
        &self,
        source: &str,
        id: &str,
        name: &str,
        now: DateTime<Utc>,
    ) -> Result<Classifier, StoreError> {
        let src = self.classifier(source)?;
        self.create_classifier(clone_as(&src, id, name, now), now)
    }

    /// Removes a classifier. Refuses while runs reference it unless forced.
    pub fn delete_classifier(&self, id: &str, force: bool) -> Result<(), StoreError> {
        let _guard = self.lock();
        let path = self.path(Kind::Classifier, id)?;
        if !path.exists() {
            return Err(StoreError::NotFound {
                kind: Kind::Classifier,
                id: id.to_string(),
            });
        }
        if !force {
            let runs: Vec<String> = self
                .runs()?
                .into_iter()
                .filter(|r| r.classifier_id == id)
                .map(|r| r.run_id)
                .collect();
            if !runs.is_empty() {
                return Err(StoreError::Referenced {
                    id: id.to_string(),
                    runs,
                });
            }
        }
        fs::remove_file(path)?;
        Ok(())
    }

    // ---- datasets ----

    pub fn datasets(&self) -> Result<Vec<DatasetSummary>, StoreError> {
        Ok(self
            .list::<Dataset>(Kind::Dataset)?
            .into_iter()
            .map(|d| DatasetSummary {
                cases: d.records.len(),
                id: d.id,
                name: d.name,
            })
            .collect())
    }

    pub fn dataset(&self, id: &str) -> Result<Dataset, StoreError> {
        self.get(Kind::Dataset, id)
    }

    /// Stores a new dataset with its records in case order.
    pub fn create_dataset(&self, mut d: Dataset) -> Result<Dataset, StoreError> {
        let _guard = self.lock();
        if self.exists(Kind::Dataset, &d.id) {
            return Err(StoreError::Exists {
                kind: Kind::Dataset,
                id: d.id,
            });
        }
        d.records.sort_by_key(|r| r.case_id);
        self.write(Kind::Dataset, &d.id, &to_document(&d)?)?;
        Ok(d)
    }

    // ---- runs ----

    pub fn runs(&self) -> Result<Vec<RunSummary>, StoreError> {
        Ok(self
            .list::<Run>(Kind::Run)?
            .into_iter()
            .map(|r| RunSummary {
                cases: r.scores.len(),
                failures: r.failures.len(),
                run_id: r.run_id,
                classifier_id: r.classifier_id,
                classifier_version: r.classifier_version,
                dataset_id: r.dataset_id,
                created: r.created,
            })
            .collect())
    }

    pub fn run(&self, id: &str) -> Result<Run, StoreError> {
        self.get(Kind::Run, id)
    }

    /// Assigns the next run id and writes the run.
    pub fn save_run(&self, mut run: Run) -> Result<Run, StoreError> {
        let _guard = self.lock();
        let next = self
            .ids(Kind::Run)?
            .iter()
            .filter_map(|id| id.strip_prefix("run-")?.parse::<u64>().ok())
            .max()
            .unwrap_or(0)
            + 1;
        run.run_id = format!("run-{next:04}");
        self.write(Kind::Run, &run.run_id, &to_document(&run)?)?;
        Ok(run)
    }
}
