//! Leaf manifests and the serialized leaf pool.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{canonicalize_plant_leaf, canonicalize_single_leaf, LeafGeomError, LeafGeometry, SingleLeafOptions};
use crate::imageops::{io, BinaryMask, ThresholdChannel};

/// First line of every pool file.
pub const LEAF_POOL_FORMAT: &str = "plantsynth-leaf-pool/1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IngestMode {
    /// One leaf on a contrasting background.
    SingleLeaf,
    /// Instance label image of a whole plant; every label becomes a leaf.
    Plant,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolSplit {
    #[default]
    Train,
    HeldOut,
}

/// One manifest row. `id` defaults to the file stem.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeafManifestEntry {
    pub path: PathBuf,
    pub mode: IngestMode,
    pub species: String,
    #[serde(default)]
    pub angle_hint: Option<f64>,
    #[serde(default)]
    pub split: Option<PoolSplit>,
    #[serde(default)]
    pub id: Option<String>,
}

impl LeafManifestEntry {
    pub fn source_id(&self) -> String {
        match &self.id {
            Some(id) if !id.is_empty() => id.clone(),
            _ => self
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
        }
    }
}

/// Reads a CSV manifest with header `path,mode,species[,angle_hint,split,id]`.
/// Relative paths resolve against the manifest's directory.
pub fn read_leaf_manifest(path: &Path) -> Result<Vec<LeafManifestEntry>, LeafGeomError> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| LeafGeomError::Manifest(format!("{}: {e}", path.display())))?;
    let mut entries = Vec::new();
    for row in reader.deserialize::<LeafManifestEntry>() {
        let mut entry = row.map_err(|e| LeafGeomError::Manifest(e.to_string()))?;
        if entry.path.is_relative() {
            entry.path = base.join(&entry.path);
        }
        entries.push(entry);
    }
    Ok(entries)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LeafPool {
    pub leaves: Vec<LeafGeometry>,
    pub held_out: Vec<LeafGeometry>,
}

/// Outcome counts of a pool build.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PoolBuildReport {
    pub entries: usize,
    pub leaves: usize,
    pub skipped: Vec<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct PoolHeader {
    format: String,
    leaves: usize,
    held_out: usize,
}

#[derive(Serialize, Deserialize)]
struct PoolRecord {
    split: PoolSplit,
    #[serde(flatten)]
    leaf: LeafGeometry,
}

impl LeafPool {
    pub fn is_empty(&self) -> bool {
        self.leaves.is_empty()
    }

    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        let header = PoolHeader {
            format: LEAF_POOL_FORMAT.into(),
            leaves: self.leaves.len(),
            held_out: self.held_out.len(),
        };
        writeln!(out, "{}", serde_json::to_string(&header)?)?;
        let tagged = self
            .leaves
            .iter()
            .map(|l| (PoolSplit::Train, l))
            .chain(self.held_out.iter().map(|l| (PoolSplit::HeldOut, l)));
        for (split, leaf) in tagged {
            let rec = PoolRecord { split, leaf: leaf.clone() };
            writeln!(out, "{}", serde_json::to_string(&rec)?)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to memory cannot fail");
        buf
    }

    pub fn read_from(input: impl BufRead) -> Result<LeafPool, LeafGeomError> {
        let bad = |e: String| LeafGeomError::PoolFormat(e);
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| bad("empty file".into()))?.map_err(|e| bad(e.to_string()))?;
        let header: PoolHeader = serde_json::from_str(&first).map_err(|e| bad(e.to_string()))?;
        if header.format != LEAF_POOL_FORMAT {
            return Err(bad(format!("unsupported format {:?}", header.format)));
        }
        let mut pool = LeafPool::default();
        for line in lines {
            let line = line.map_err(|e| bad(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: PoolRecord = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            match rec.split {
                PoolSplit::Train => pool.leaves.push(rec.leaf),
                PoolSplit::HeldOut => pool.held_out.push(rec.leaf),
            }
        }
        if pool.leaves.len() != header.leaves || pool.held_out.len() != header.held_out {
            return Err(bad("record count does not match header".into()));
        }
        Ok(pool)
    }

    pub fn load(path: &Path) -> Result<LeafPool, LeafGeomError> {
        let file = std::fs::File::open(path).map_err(|e| LeafGeomError::PoolFormat(format!("{}: {e}", path.display())))?;
        Self::read_from(std::io::BufReader::new(file))
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }
}

fn ingest_entry(entry: &LeafManifestEntry, spacing: f64) -> Result<Vec<LeafGeometry>, LeafGeomError> {
    let id = entry.source_id();
    match entry.mode {
        IngestMode::SingleLeaf => {
            let image = io::read_rgb(&entry.path)?;
            let opts = SingleLeafOptions {
                threshold: ThresholdChannel::GreenDominance,
                angle_hint: entry.angle_hint,
                interior_spacing: spacing,
            };
            Ok(vec![canonicalize_single_leaf(&image, &id, &entry.species, &opts)?])
        }
        IngestMode::Plant => {
            let (w, h, labels) = io::read_labels(&entry.path)?;
            let mut sum = [0.0f64; 2];
            let mut n = 0usize;
            let mut ids = BTreeMap::<u32, ()>::new();
            for (i, &v) in labels.iter().enumerate() {
                if v != 0 {
                    sum[0] += (i % w) as f64;
                    sum[1] += (i / w) as f64;
                    n += 1;
                    ids.insert(v, ());
                }
            }
            if n == 0 {
                return Err(LeafGeomError::AllBackground);
            }
            let center = [sum[0] / n as f64, sum[1] / n as f64];
            let mut out = Vec::new();
            for (k, &label) in ids.keys().enumerate() {
                let mask = BinaryMask::from_fn(w, h, |x, y| labels[y * w + x] == label);
                match canonicalize_plant_leaf(&mask, center, &format!("{id}#{:03}", k + 1), &entry.species, spacing) {
                    Ok(leaf) => out.push(leaf),
                    Err(e) => log::warn!("{}: label {label} skipped: {e}", entry.path.display()),
                }
            }
            Ok(out)
        }
    }
}

/// Canonicalizes every manifest entry in parallel. Unreadable or
/// unusable entries are logged and skipped.
pub fn build_leaf_pool(entries: &[LeafManifestEntry], interior_spacing: f64) -> Result<(LeafPool, PoolBuildReport), LeafGeomError> {
    let results: Vec<_> = entries
        .par_iter()
        .map(|e| (e, ingest_entry(e, interior_spacing)))
        .collect();
    let mut report = PoolBuildReport { entries: entries.len(), ..Default::default() };
    let mut tagged = Vec::new();
    for (entry, res) in results {
        match res {
            Ok(leaves) => {
                let split = entry.split.unwrap_or_default();
                tagged.extend(leaves.into_iter().map(|l| (split, l)));
            }
            Err(e) => {
                log::warn!("skipping {}: {e}", entry.path.display());
                report.skipped.push((entry.source_id(), e.to_string()));
            }
        }
    }
    tagged.sort_by(|a, b| a.1.source_id.cmp(&b.1.source_id));
    tagged.dedup_by(|a, b| {
        let dup = a.1.source_id == b.1.source_id;
        if dup {
            log::warn!("duplicate leaf id {} dropped", a.1.source_id);
        }
        dup
    });
    let mut pool = LeafPool::default();
    for (split, leaf) in tagged {
        match split {
            PoolSplit::Train => pool.leaves.push(leaf),
            PoolSplit::HeldOut => pool.held_out.push(leaf),
        }
    }
    report.skipped.sort();
    report.leaves = pool.leaves.len() + pool.held_out.len();
    if pool.leaves.is_empty() {
        return Err(LeafGeomError::EmptyPool);
    }
    Ok((pool, report))
}
