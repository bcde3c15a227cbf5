//! JSON Lines manifests.
//!
//! Line 1 is a header `{"schema_version", "kind", "source_descriptor"}`;
//! every following line is one record of that kind. Record ids are unique
//! within a manifest.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::capgen::CaptionPairRecord;
use crate::error::{Error, Result};
use crate::imgen::CounterfactualRow;

pub const SCHEMA_VERSION: &str = "cfpairs/1";

pub trait ManifestRecord: Serialize + DeserializeOwned {
    const KIND: &'static str;
    fn record_id(&self) -> String;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct Header {
    schema_version: String,
    kind: String,
    source_descriptor: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest<R> {
    pub schema_version: String,
    pub source_descriptor: String,
    pub records: Vec<R>,
}

impl<R: ManifestRecord> Manifest<R> {
    pub fn new(source_descriptor: impl Into<String>, records: Vec<R>) -> Result<Self> {
        let m = Self {
            schema_version: SCHEMA_VERSION.to_string(),
            source_descriptor: source_descriptor.into(),
            records,
        };
        m.check_unique_ids()?;
        Ok(m)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn check_unique_ids(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.records.len());
        for (i, r) in self.records.iter().enumerate() {
            let id = r.record_id();
            if !seen.insert(id.clone()) {
                // header occupies line 1
                return Err(Error::schema(i + 2, format!("duplicate record id `{id}`")));
            }
        }
        Ok(())
    }

    pub fn to_writer<W: Write>(&self, mut w: W) -> Result<()> {
        let header = Header {
            schema_version: self.schema_version.clone(),
            kind: R::KIND.to_string(),
            source_descriptor: self.source_descriptor.clone(),
        };
        let io = |e| Error::io("writing manifest", e);
        serde_json::to_writer(&mut w, &header).map_err(|e| Error::io("writing manifest", e.into()))?;
        w.write_all(b"\n").map_err(io)?;
        for r in &self.records {
            serde_json::to_writer(&mut w, r).map_err(|e| Error::io("writing manifest", e.into()))?;
            w.write_all(b"\n").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.to_writer(&mut buf)?;
        Ok(buf)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
        }
        let f = File::create(path).map_err(|e| Error::io(format!("creating {}", path.display()), e))?;
        self.to_writer(BufWriter::new(f))
    }

    pub fn from_reader<Rd: Read>(r: Rd) -> Result<Self> {
        let mut lines = BufReader::new(r).lines();
        let first = match lines.next() {
            Some(l) => l.map_err(|e| Error::io("reading manifest", e))?,
            None => return Err(Error::schema(1, "missing header line")),
        };
        let header: Header = serde_json::from_str(&first)
            .map_err(|e| Error::schema(1, format!("bad header: {e}")))?;
        if header.schema_version != SCHEMA_VERSION {
            return Err(Error::schema(
                1,
                format!("schema version `{}` (expected `{SCHEMA_VERSION}`)", header.schema_version),
            ));
        }
        if header.kind != R::KIND {
            return Err(Error::schema(
                1,
                format!("manifest kind `{}` (expected `{}`)", header.kind, R::KIND),
            ));
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line.map_err(|e| Error::io("reading manifest", e))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: R = serde_json::from_str(&line).map_err(|e| Error::schema(i + 2, e.to_string()))?;
            records.push(rec);
        }
        let m = Self {
            schema_version: header.schema_version,
            source_descriptor: header.source_descriptor,
            records,
        };
        m.check_unique_ids()?;
        Ok(m)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
        Self::from_reader(f)
    }
}

/// Input caption corpus line: `{id, caption, image_path?}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub caption: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image_path: Option<String>,
}

impl ManifestRecord for CorpusRecord {
    const KIND: &'static str = "caption";
    fn record_id(&self) -> String {
        self.id.clone()
    }
}

/// Read a caption corpus. A manifest header is accepted but not required,
/// so plain JSON Lines exports work as input.
pub fn read_corpus(path: &Path) -> Result<Vec<CorpusRecord>> {
    let f = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(|e| Error::io("reading corpus", e))?;
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 && line.contains("\"schema_version\"") {
            let h: Header = serde_json::from_str(&line).map_err(|e| Error::schema(1, e.to_string()))?;
            if h.kind != CorpusRecord::KIND {
                return Err(Error::schema(1, format!("manifest kind `{}` is not a caption corpus", h.kind)));
            }
            continue;
        }
        let rec: CorpusRecord = serde_json::from_str(&line).map_err(|e| Error::schema(i + 1, e.to_string()))?;
        if rec.caption.trim().is_empty() {
            return Err(Error::schema(i + 1, "empty caption"));
        }
        if !seen.insert(rec.id.clone()) {
            return Err(Error::schema(i + 1, format!("duplicate id `{}`", rec.id)));
        }
        out.push(rec);
    }
    Ok(out)
}

impl ManifestRecord for CaptionPairRecord {
    const KIND: &'static str = "caption_pair";
    fn record_id(&self) -> String {
        self.pair.source_id.clone()
    }
}

impl ManifestRecord for CounterfactualRow {
    const KIND: &'static str = "counterfactual_record";
    fn record_id(&self) -> String {
        self.source_id.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleOrigin {
    Coco,
    Counterfactual,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairRole {
    Original,
    Counterfactual,
}

/// One caption-image training sample.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub id: String,
    pub caption: String,
    /// Relative to the manifest's directory.
    pub image_path: String,
    pub origin: SampleOrigin,
    /// Shared by both members of a counterfactual pair.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub role: Option<PairRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altered_from: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altered_to: Option<String>,
}

impl Sample {
    /// The altered subject as it appears in this sample's own caption.
    pub fn altered_subject(&self) -> Option<&str> {
        match self.role? {
            PairRole::Original => self.altered_from.as_deref(),
            PairRole::Counterfactual => self.altered_to.as_deref(),
        }
    }
}

impl ManifestRecord for Sample {
    const KIND: &'static str = "sample";
    fn record_id(&self) -> String {
        self.id.clone()
    }
}

/// Fail when any sample's image is missing under `base`.
pub fn check_images_exist(manifest: &Manifest<Sample>, base: &Path) -> Result<()> {
    for (i, s) in manifest.records.iter().enumerate() {
        if !base.join(&s.image_path).is_file() {
            return Err(Error::schema(i + 2, format!("image `{}` does not exist", s.image_path)));
        }
    }
    Ok(())
}

/// Split a counterfactual-record manifest into the two sample manifests the
/// mixes are built from: the originating captions (with their corpus images)
/// and the counterfactual samples, two per record.
pub fn assemble_samples(
    rows: &[CounterfactualRow],
    corpus: &[CorpusRecord],
    images_prefix: &str,
    corpus_prefix: &str,
) -> Result<(Vec<Sample>, Vec<Sample>)> {
    let by_id: std::collections::HashMap<&str, &CorpusRecord> =
        corpus.iter().map(|c| (c.id.as_str(), c)).collect();
    let join = |prefix: &str, p: &str| {
        if prefix.is_empty() {
            p.to_string()
        } else {
            format!("{}/{}", prefix.trim_end_matches('/'), p)
        }
    };
    let mut coco = Vec::with_capacity(rows.len());
    let mut cfs = Vec::with_capacity(rows.len() * 2);
    for row in rows {
        let src = by_id.get(row.source_id.as_str()).ok_or_else(|| Error::Coverage {
            missing: 1,
            first: row.source_id.clone(),
        })?;
        let image = src.image_path.as_deref().ok_or_else(|| {
            Error::Precondition(format!("corpus record `{}` has no image_path", src.id))
        })?;
        coco.push(Sample {
            id: src.id.clone(),
            caption: src.caption.clone(),
            image_path: join(corpus_prefix, image),
            origin: SampleOrigin::Coco,
            pair_id: None,
            role: None,
            altered_from: None,
            altered_to: None,
        });
        for (role, caption, path, suffix) in [
            (PairRole::Original, &row.original, &row.image_o, "orig"),
            (PairRole::Counterfactual, &row.counterfactual, &row.image_c, "cf"),
        ] {
            cfs.push(Sample {
                id: format!("{}:{suffix}", row.source_id),
                caption: caption.clone(),
                image_path: join(images_prefix, path),
                origin: SampleOrigin::Counterfactual,
                pair_id: Some(row.source_id.clone()),
                role: Some(role),
                altered_from: Some(row.altered_from.clone()),
                altered_to: Some(row.altered_to.clone()),
            });
        }
    }
    Ok((coco, cfs))
}
