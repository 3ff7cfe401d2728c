//! Resource records and the in-memory repository.
//!
//! A record line is one JSON object per line:
//!
//! ```text
//! {"id": "m1", "properties": {"key": ["swarm", "algorithms"], "cite": ["m2"]}}
//! ```
//!
//! `properties` may be omitted. Blank lines are skipped. Values are opaque
//! strings compared byte-for-byte; duplicates within one property collapse.
//! Ids and values must be non-empty and may not contain tab, CR or LF, since
//! they are written verbatim into tab-separated network and store files.

use std::borrow::Borrow;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type ValueSet = BTreeSet<String>;

static EMPTY: ValueSet = BTreeSet::new();

/// Name of a metadata property (`auth`, `cite`, `key`, ...). The set of
/// property types is open.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct PropertyType(String);

impl PropertyType {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        if name.is_empty() || name.chars().any(|c| c.is_whitespace() || c == ',') {
            return Err(Error::InvalidProperty(name));
        }
        Ok(PropertyType(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for PropertyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for PropertyType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PropertyType::new(s)
    }
}

impl TryFrom<String> for PropertyType {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        PropertyType::new(s)
    }
}

impl From<PropertyType> for String {
    fn from(p: PropertyType) -> String {
        p.0
    }
}

impl Borrow<str> for PropertyType {
    fn borrow(&self) -> &str {
        &self.0
    }
}

fn bad_token(s: &str) -> bool {
    s.is_empty() || s.contains(['\t', '\n', '\r'])
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResourceRecord {
    id: String,
    properties: BTreeMap<PropertyType, ValueSet>,
}

impl ResourceRecord {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if bad_token(&id) {
            return Err(Error::Malformed {
                line: 0,
                message: format!("invalid resource id {id:?}"),
            });
        }
        Ok(ResourceRecord {
            id,
            properties: BTreeMap::new(),
        })
    }

    /// Builder-style [`ResourceRecord::insert`]. Panics on invalid input; meant
    /// for fixtures and tests.
    pub fn with<I, S>(mut self, property: &str, values: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let p = PropertyType::new(property).expect("valid property type");
        self.insert(p, values).expect("valid values");
        self
    }

    /// Adds values to a property. Empty input leaves the property absent.
    pub fn insert<I, S>(&mut self, property: PropertyType, values: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut set = ValueSet::new();
        for v in values {
            let v = v.into();
            if bad_token(&v) {
                return Err(Error::Malformed {
                    line: 0,
                    message: format!("invalid value {v:?} for property {property}"),
                });
            }
            set.insert(v);
        }
        if !set.is_empty() {
            self.properties.entry(property).or_default().extend(set);
        }
        Ok(())
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// Values of `property`; an absent property is the empty set.
    pub fn meta(&self, property: &str) -> &ValueSet {
        self.properties.get(property).unwrap_or(&EMPTY)
    }

    pub fn properties(&self) -> impl Iterator<Item = (&PropertyType, &ValueSet)> {
        self.properties.iter()
    }

    /// Removes and returns the values of `property`.
    pub fn take(&mut self, property: &str) -> ValueSet {
        self.properties.remove(property).unwrap_or_default()
    }

    /// Replaces the values of `property` wholesale. Used for controlled
    /// corpus manipulation (e.g. baselines); an empty set removes it.
    pub fn replace(&mut self, property: PropertyType, values: ValueSet) {
        if values.is_empty() {
            self.properties.remove(property.as_str());
        } else {
            self.properties.insert(property, values);
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecordLine {
    id: String,
    #[serde(default)]
    properties: BTreeMap<String, Vec<String>>,
}

impl RecordLine {
    fn into_record(self) -> std::result::Result<ResourceRecord, String> {
        let mut rec = ResourceRecord::new(self.id).map_err(|e| strip_line(&e))?;
        for (name, values) in self.properties {
            let p = PropertyType::new(name).map_err(|e| e.to_string())?;
            rec.insert(p, values).map_err(|e| strip_line(&e))?;
        }
        Ok(rec)
    }

    fn from_record(rec: &ResourceRecord) -> Self {
        RecordLine {
            id: rec.id.clone(),
            properties: rec
                .properties
                .iter()
                .map(|(p, vs)| (p.0.clone(), vs.iter().cloned().collect()))
                .collect(),
        }
    }
}

fn strip_line(e: &Error) -> String {
    match e {
        Error::Malformed { message, .. } => message.clone(),
        other => other.to_string(),
    }
}

/// Parses one record line. `line` is the 1-based line number used in errors.
pub fn parse_record_line(text: &str, line: usize) -> Result<ResourceRecord> {
    let raw: RecordLine = serde_json::from_str(text).map_err(|e| Error::Malformed {
        line,
        message: e.to_string(),
    })?;
    raw.into_record()
        .map_err(|message| Error::Malformed { line, message })
}

/// Serializes a record into the line format accepted by [`parse_record_line`].
pub fn record_to_line(rec: &ResourceRecord) -> String {
    serde_json::to_string(&RecordLine::from_record(rec)).expect("record serializes")
}

/// An immutable collection of records, sorted by id.
#[derive(Debug, Clone, Default)]
pub struct Repository {
    records: Vec<ResourceRecord>,
    index: HashMap<String, usize>,
}

impl PartialEq for Repository {
    fn eq(&self, other: &Self) -> bool {
        self.records == other.records
    }
}

impl Eq for Repository {}

const REPO_MAGIC: &str = "metaprop-repository";
const REPO_VERSION: &str = "1";

impl Repository {
    pub fn from_records<I: IntoIterator<Item = ResourceRecord>>(records: I) -> Result<Self> {
        let mut records: Vec<ResourceRecord> = records.into_iter().collect();
        records.sort_by(|a, b| a.id.cmp(&b.id));
        if let Some(w) = records.windows(2).find(|w| w[0].id == w[1].id) {
            return Err(Error::DuplicateId {
                id: w[0].id.clone(),
                line: 0,
            });
        }
        Ok(Self::from_sorted(records))
    }

    fn from_sorted(records: Vec<ResourceRecord>) -> Self {
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.id.clone(), i))
            .collect();
        Repository { records, index }
    }

    /// Reads a record stream. Duplicate ids and malformed lines are errors
    /// carrying the 1-based line number.
    pub fn ingest<R: BufRead>(reader: R) -> Result<Self> {
        let mut records = Vec::new();
        let mut seen: HashMap<String, usize> = HashMap::new();
        for (i, line) in reader.lines().enumerate() {
            let lineno = i + 1;
            let line = line.map_err(|e| Error::Malformed {
                line: lineno,
                message: e.to_string(),
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec = parse_record_line(&line, lineno)?;
            if seen.insert(rec.id.clone(), lineno).is_some() {
                return Err(Error::DuplicateId {
                    id: rec.id,
                    line: lineno,
                });
            }
            records.push(rec);
        }
        records.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Self::from_sorted(records))
    }

    pub fn ingest_str(text: &str) -> Result<Self> {
        Self::ingest(text.as_bytes())
    }

    pub fn ingest_file(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::ingest(BufReader::new(f))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[ResourceRecord] {
        &self.records
    }

    /// Dense index of `id` in [`Repository::records`].
    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn get(&self, id: &str) -> Result<&ResourceRecord> {
        self.index_of(id)
            .map(|i| &self.records[i])
            .ok_or_else(|| Error::UnknownId(id.to_string()))
    }

    pub fn meta(&self, id: &str, property: &str) -> Result<&ValueSet> {
        Ok(self.get(id)?.meta(property))
    }

    /// Mutable access for building derived repositories (atrophy). Ids are
    /// not reachable through the returned records, so the index stays valid.
    pub(crate) fn record_mut(&mut self, index: usize) -> &mut ResourceRecord {
        &mut self.records[index]
    }

    /// Applies `f` to every record; ids cannot change.
    pub fn map_records<F: FnMut(&mut ResourceRecord)>(mut self, mut f: F) -> Self {
        for r in &mut self.records {
            let id = r.id.clone();
            f(r);
            r.id = id;
        }
        self
    }

    pub fn property_types(&self) -> BTreeSet<PropertyType> {
        self.records
            .iter()
            .flat_map(|r| r.properties.keys().cloned())
            .collect()
    }

    /// Properties usable for occurrence networks: at least one value, and at
    /// least half of all listed values, resolve to stored resource ids.
    pub fn reference_properties(&self) -> BTreeSet<PropertyType> {
        let mut tally: BTreeMap<&PropertyType, (usize, usize)> = BTreeMap::new();
        for r in &self.records {
            for (p, vs) in &r.properties {
                let t = tally.entry(p).or_default();
                t.0 += vs.len();
                t.1 += vs.iter().filter(|v| self.contains(v)).count();
            }
        }
        tally
            .into_iter()
            .filter(|(_, (total, resolved))| *resolved > 0 && 2 * resolved >= *total)
            .map(|(p, _)| p.clone())
            .collect()
    }

    fn body(&self) -> String {
        let mut body = String::new();
        for r in &self.records {
            body.push_str(&record_to_line(r));
            body.push('\n');
        }
        body
    }

    /// Writes the repository with a header carrying record count and a
    /// SHA-256 of the body.
    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let body = self.body();
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        writeln!(
            w,
            "{REPO_MAGIC} {REPO_VERSION} {} {digest}",
            self.records.len()
        )?;
        w.write_all(body.as_bytes())?;
        w.flush()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_to(std::io::BufWriter::new(f))
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_from<R: Read>(mut r: R, origin: &Path) -> Result<Self> {
        let mut text = String::new();
        r.read_to_string(&mut text)
            .map_err(|e| Error::corrupt(origin, format!("unreadable: {e}")))?;
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| Error::corrupt(origin, "line 1: missing header"))?;
        let fields: Vec<&str> = header.split(' ').collect();
        if fields.len() != 4 || fields[0] != REPO_MAGIC {
            return Err(Error::corrupt(origin, "line 1: not a repository file"));
        }
        if fields[1] != REPO_VERSION {
            return Err(Error::corrupt(
                origin,
                format!("line 1: unsupported version {}", fields[1]),
            ));
        }
        let count: usize = fields[2]
            .parse()
            .map_err(|_| Error::corrupt(origin, "line 1: bad record count"))?;
        let digest = hex::encode(Sha256::digest(body.as_bytes()));
        if digest != fields[3] {
            return Err(Error::corrupt(origin, "checksum mismatch (truncated or edited)"));
        }
        let mut records = Vec::with_capacity(count);
        for (i, line) in body.lines().enumerate() {
            let rec = parse_record_line(line, i + 2)
                .map_err(|e| Error::corrupt(origin, e.to_string()))?;
            records.push(rec);
        }
        if records.len() != count {
            return Err(Error::corrupt(
                origin,
                format!("expected {count} records, found {}", records.len()),
            ));
        }
        if records.windows(2).any(|w| w[0].id >= w[1].id) {
            return Err(Error::corrupt(origin, "records not sorted by unique id"));
        }
        Ok(Self::from_sorted(records))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_from(BufReader::new(f), path)
    }
}
