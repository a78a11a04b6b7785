//! Seed pool, on-disk queue layout and the AI-queue importer.

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use md5::{Digest as _, Md5};
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coverage::{accumulate, CoverageDelta, CoverageMap};
use crate::fsutil::write_atomic;
use crate::harness::{ExecResult, TargetHarness, Verdict};
use crate::metrics::MetricsError;
use crate::parallel;

pub const QUEUE_DIR: &str = "queue";
pub const AI_QUEUE_DIR: &str = "ai_queue";
pub const CRASH_DIR: &str = "crashes";
pub const STATS_FILE: &str = "stats.json";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("the seed pool is empty")]
    EmptyPool,
    #[error("unrecognized queue file name {0:?}")]
    BadName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// 128-bit md5 content digest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u8; 16]);

impl Digest {
    pub fn of(bytes: &[u8]) -> Self {
        Digest(Md5::digest(bytes).into())
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Origin {
    Fuzzer,
    Ai,
    Initial,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Origin::Fuzzer => "fuzzer",
            Origin::Ai => "ai",
            Origin::Initial => "initial",
        })
    }
}

impl FromStr for Origin {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "fuzzer" => Ok(Origin::Fuzzer),
            "ai" => Ok(Origin::Ai),
            "initial" => Ok(Origin::Initial),
            _ => Err(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub id: u64,
    pub bytes: Vec<u8>,
    pub digest: Digest,
    pub origin: Origin,
    pub parent_id: Option<u64>,
    pub found_at: f64,
}

impl AsRef<[u8]> for Seed {
    fn as_ref(&self) -> &[u8] {
        &self.bytes
    }
}

impl Seed {
    /// `id:%06d,src:%s,origin:%s`; `src` is the parent id or `none`.
    pub fn file_name(&self) -> String {
        let src = match self.parent_id {
            Some(p) => format!("{p:06}"),
            None => "none".to_string(),
        };
        format!("id:{:06},src:{},origin:{}", self.id, src, self.origin)
    }
}

fn parse_queue_name(name: &str) -> Option<(u64, Option<u64>, Origin)> {
    let rest = name.strip_prefix("id:")?;
    let (id, rest) = rest.split_once(",src:")?;
    let (src, origin) = rest.split_once(",origin:")?;
    let parent = match src {
        "none" => None,
        s => Some(s.parse().ok()?),
    };
    Some((id.parse().ok()?, parent, origin.parse().ok()?))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueStats {
    pub queue_len: usize,
    pub imported_from_ai: usize,
}

pub fn import_ratio(stats: QueueStats) -> Result<f64, MetricsError> {
    if stats.queue_len == 0 {
        return Err(MetricsError::UndefinedRatio);
    }
    Ok(stats.imported_from_ai as f64 / stats.queue_len as f64)
}

#[derive(Debug, Default, Clone)]
pub struct Corpus {
    seeds: Vec<Seed>,
    digests: HashSet<Digest>,
    next_id: u64,
    cursor: usize,
    imported_from_ai: usize,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seeds.is_empty()
    }

    pub fn seeds(&self) -> &[Seed] {
        &self.seeds
    }

    pub fn get(&self, id: u64) -> Option<&Seed> {
        self.seeds.binary_search_by_key(&id, |s| s.id).ok().map(|i| &self.seeds[i])
    }

    pub fn contains_digest(&self, d: &Digest) -> bool {
        self.digests.contains(d)
    }

    pub fn stats(&self) -> QueueStats {
        QueueStats {
            queue_len: self.seeds.len(),
            imported_from_ai: self.imported_from_ai,
        }
    }

    /// Appends unconditionally unless the digest is already present.
    pub fn push(&mut self, bytes: Vec<u8>, origin: Origin, parent_id: Option<u64>, found_at: f64) -> Option<&Seed> {
        let digest = Digest::of(&bytes);
        if !self.digests.insert(digest) {
            return None;
        }
        if origin == Origin::Ai {
            self.imported_from_ai += 1;
        }
        self.seeds.push(Seed {
            id: self.next_id,
            bytes,
            digest,
            origin,
            parent_id,
            found_at,
        });
        self.next_id += 1;
        self.seeds.last()
    }

    pub fn add_if_interesting(
        &mut self,
        bytes: Vec<u8>,
        origin: Origin,
        parent_id: Option<u64>,
        found_at: f64,
        delta: &CoverageDelta,
    ) -> Option<&Seed> {
        if !delta.is_interesting {
            return None;
        }
        self.push(bytes, origin, parent_id, found_at)
    }

    pub fn pick_random<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<&Seed, CorpusError> {
        if self.seeds.is_empty() {
            return Err(CorpusError::EmptyPool);
        }
        Ok(&self.seeds[rng.random_range(0..self.seeds.len())])
    }

    /// Cycles through the queue in admission order.
    pub fn next_round_robin(&mut self) -> Result<&Seed, CorpusError> {
        if self.seeds.is_empty() {
            return Err(CorpusError::EmptyPool);
        }
        if self.cursor >= self.seeds.len() {
            self.cursor = 0;
        }
        let i = self.cursor;
        self.cursor += 1;
        Ok(&self.seeds[i])
    }

    pub fn write_seed(dir: &Path, seed: &Seed) -> std::io::Result<()> {
        write_atomic(&dir.join(seed.file_name()), &seed.bytes)
    }

    pub fn persist(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for s in &self.seeds {
            Self::write_seed(dir, s)?;
        }
        Ok(())
    }

    /// Reloads a persisted queue in id order. Files not following the queue
    /// naming scheme are rejected.
    pub fn load(dir: &Path) -> Result<Corpus, CorpusError> {
        let mut entries = Vec::new();
        for e in std::fs::read_dir(dir)? {
            let e = e?;
            let name = e.file_name().to_string_lossy().into_owned();
            if name.starts_with('.') {
                continue;
            }
            let (id, parent, origin) = parse_queue_name(&name).ok_or(CorpusError::BadName(name))?;
            entries.push((id, parent, origin, e.path()));
        }
        entries.sort_by_key(|e| e.0);
        let mut c = Corpus::new();
        for (id, parent_id, origin, path) in entries {
            let bytes = std::fs::read(path)?;
            let digest = Digest::of(&bytes);
            c.digests.insert(digest);
            if origin == Origin::Ai {
                c.imported_from_ai += 1;
            }
            c.seeds.push(Seed {
                id,
                bytes,
                digest,
                origin,
                parent_id,
                found_at: 0.0,
            });
            c.next_id = id + 1;
        }
        Ok(c)
    }
}

/// Reads every plain file in `dir`, sorted by name.
pub fn read_dir_sorted(dir: &Path) -> std::io::Result<Vec<(String, Vec<u8>)>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(Result::ok)
        .filter(|e| e.file_type().map(|t| t.is_file()).unwrap_or(false))
        .map(|e| e.path())
        .filter(|p| !p.file_name().is_some_and(|n| n.to_string_lossy().starts_with('.')))
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| {
            let bytes = std::fs::read(&p)?;
            Ok((p.file_name().unwrap_or_default().to_string_lossy().into_owned(), bytes))
        })
        .collect()
}

#[derive(Debug, Default)]
pub struct ImportOutcome {
    pub imported: usize,
    pub executed: usize,
    /// Inputs that crashed the target, by AI-queue file name.
    pub crashes: Vec<(String, Vec<u8>)>,
}

/// Tracks which AI-queue files have been evaluated so each one is run once.
#[derive(Debug, Default)]
pub struct Importer {
    processed: HashSet<String>,
}

impl Importer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn processed(&self) -> usize {
        self.processed.len()
    }

    pub fn scan_and_import(
        &mut self,
        pool: &mut Corpus,
        dir: &Path,
        harness: &TargetHarness,
        map: &mut CoverageMap,
        found_at: f64,
    ) -> Result<usize, CorpusError> {
        Ok(self.scan(pool, dir, harness, map, found_at, |_| true)?.imported)
    }

    /// Like [`Importer::scan_and_import`], considering only file names accepted by
    /// `visible`. Files that are not yet visible stay pending for a later scan.
    pub fn scan(
        &mut self,
        pool: &mut Corpus,
        dir: &Path,
        harness: &TargetHarness,
        map: &mut CoverageMap,
        found_at: f64,
        visible: impl Fn(&str) -> bool,
    ) -> Result<ImportOutcome, CorpusError> {
        let mut names: Vec<String> = std::fs::read_dir(dir)?
            .filter_map(Result::ok)
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| !n.starts_with('.') && !self.processed.contains(n) && visible(n))
            .collect();
        names.sort();

        let mut fresh: Vec<(String, Vec<u8>)> = Vec::new();
        let mut batch_digests = HashSet::new();
        for name in names {
            self.processed.insert(name.clone());
            let bytes = match std::fs::read(dir.join(&name)) {
                Ok(b) => b,
                Err(e) => {
                    log::warn!("skipping unreadable AI seed {name}: {e}");
                    continue;
                }
            };
            let digest = Digest::of(&bytes);
            if pool.contains_digest(&digest) || !batch_digests.insert(digest) {
                continue;
            }
            fresh.push((name, bytes));
        }

        let results: Vec<Option<ExecResult>> = parallel::map(&fresh, |(name, bytes)| match harness.run(bytes) {
            Ok(r) => Some(r),
            Err(e) => {
                log::warn!("skipping AI seed {name}: {e}");
                None
            }
        });

        let mut out = ImportOutcome {
            executed: results.iter().filter(|r| r.is_some()).count(),
            ..ImportOutcome::default()
        };
        for ((name, bytes), result) in fresh.into_iter().zip(results) {
            let Some(r) = result else { continue };
            let delta = accumulate(map, &r.trace);
            if r.verdict == Verdict::Crash {
                out.crashes.push((name.clone(), bytes.clone()));
            }
            let parent = crate::mutate::chat::parse_ai_name(&name).map(|n| n.source_id);
            if pool.add_if_interesting(bytes, Origin::Ai, parent, found_at, &delta).is_some() {
                out.imported += 1;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::lookup;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn interesting() -> CoverageDelta {
        CoverageDelta::new(1, 1)
    }

    #[test]
    fn admission_rules() {
        let mut c = Corpus::new();
        assert!(c.add_if_interesting(b"a".to_vec(), Origin::Fuzzer, None, 0.0, &interesting()).is_some());
        assert!(c.add_if_interesting(b"a".to_vec(), Origin::Fuzzer, None, 0.0, &interesting()).is_none());
        assert!(c.add_if_interesting(b"b".to_vec(), Origin::Fuzzer, None, 0.0, &CoverageDelta::new(0, 0)).is_none());
        assert_eq!(c.len(), 1);
    }

    #[test]
    fn import_ratio_examples() {
        let r = import_ratio(QueueStats { queue_len: 1856, imported_from_ai: 348 }).unwrap();
        assert!((r * 100.0 - 18.75).abs() < 0.01);
        assert_eq!(import_ratio(QueueStats { queue_len: 2890, imported_from_ai: 0 }).unwrap(), 0.0);
        assert_eq!(import_ratio(QueueStats { queue_len: 10, imported_from_ai: 10 }).unwrap(), 1.0);
        assert!(import_ratio(QueueStats::default()).is_err());
    }

    #[test]
    fn pick_random_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = Corpus::new();
        assert!(matches!(c.pick_random(&mut rng), Err(CorpusError::EmptyPool)));
        c.push(b"only".to_vec(), Origin::Initial, None, 0.0);
        assert_eq!(c.pick_random(&mut rng).unwrap().bytes, b"only");
        c.push(b"two".to_vec(), Origin::Initial, None, 0.0);
        c.push(b"three".to_vec(), Origin::Initial, None, 0.0);
        let draw = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|_| c.pick_random(&mut rng).unwrap().id).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
    }

    #[test]
    fn pick_random_is_uniform() {
        let mut c = Corpus::new();
        for i in 0..4u8 {
            c.push(vec![i], Origin::Initial, None, 0.0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut counts = [0usize; 4];
        for _ in 0..10_000 {
            counts[c.pick_random(&mut rng).unwrap().id as usize] += 1;
        }
        // Binomial(10000, 1/4) has sd ~43.3; 200 is beyond 4.6 sd.
        let sd = (10_000.0f64 * 0.25 * 0.75).sqrt();
        assert!(200.0 / sd > 4.0);
        assert!(counts.iter().all(|&n| n.abs_diff(2500) <= 200), "{counts:?}");
    }

    #[test]
    fn round_robin_cycles() {
        let mut c = Corpus::new();
        assert!(c.next_round_robin().is_err());
        for i in 0..3u8 {
            c.push(vec![i], Origin::Initial, None, 0.0);
        }
        let ids: Vec<u64> = (0..7).map(|_| c.next_round_robin().unwrap().id).collect();
        assert_eq!(ids, [0, 1, 2, 0, 1, 2, 0]);
    }

    #[test]
    fn persist_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = Corpus::new();
        c.push(b"<a/>".to_vec(), Origin::Initial, None, 0.0);
        c.push(b"<b/>".to_vec(), Origin::Fuzzer, Some(0), 1.5);
        c.push(b"<c/>".to_vec(), Origin::Ai, Some(1), 2.0);
        c.persist(dir.path()).unwrap();
        assert!(dir.path().join("id:000001,src:000000,origin:fuzzer").exists());
        let back = Corpus::load(dir.path()).unwrap();
        let digests = |c: &Corpus| c.seeds().iter().map(|s| (s.id, s.digest)).collect::<Vec<_>>();
        assert_eq!(digests(&back), digests(&c));
        assert_eq!(back.stats(), c.stats());
    }

    fn xml_import_fixture() -> (tempfile::TempDir, TargetHarness, Corpus, CoverageMap) {
        let dir = tempfile::tempdir().unwrap();
        let h = lookup("toy-xml").unwrap();
        let mut pool = Corpus::new();
        let mut map = CoverageMap::new();
        let seed = b"<doc><clean>YES</clean></doc>".to_vec();
        accumulate(&mut map, &h.run(&seed).unwrap().trace);
        pool.push(seed.clone(), Origin::Initial, None, 0.0);
        // Same document, a parse error, and one with a new tag.
        std::fs::write(dir.path().join("ai:00000000,src:000000,t:1.25"), &seed).unwrap();
        std::fs::write(dir.path().join("ai:00000001,src:000000,t:1.25"), b"").unwrap();
        std::fs::write(dir.path().join("ai:00000002,src:000000,t:1.25"), b"<doc><book>YES</book></doc>").unwrap();
        (dir, h, pool, map)
    }

    #[test]
    fn import_admits_new_coverage_once() {
        let (dir, h, mut pool, mut map) = xml_import_fixture();
        let mut imp = Importer::new();
        assert_eq!(imp.scan_and_import(&mut pool, dir.path(), &h, &mut map, 1.0).unwrap(), 1);
        assert_eq!(pool.stats().imported_from_ai, 1);
        assert_eq!(pool.seeds().last().unwrap().parent_id, Some(0));
        assert_eq!(imp.scan_and_import(&mut pool, dir.path(), &h, &mut map, 2.0).unwrap(), 0);
        assert_eq!(imp.processed(), 3);
    }

    #[test]
    fn import_empty_dir() {
        let dir = tempfile::tempdir().unwrap();
        let h = lookup("toy-json").unwrap();
        let mut imp = Importer::new();
        let n = imp
            .scan_and_import(&mut Corpus::new(), dir.path(), &h, &mut CoverageMap::new(), 0.0)
            .unwrap();
        assert_eq!(n, 0);
    }

    #[test]
    fn invisible_files_stay_pending() {
        let (dir, h, mut pool, mut map) = xml_import_fixture();
        let mut imp = Importer::new();
        let first = imp.scan(&mut pool, dir.path(), &h, &mut map, 0.0, |n| !n.contains("00000002")).unwrap();
        assert_eq!(first.imported, 0);
        let second = imp.scan(&mut pool, dir.path(), &h, &mut map, 0.0, |_| true).unwrap();
        assert_eq!((second.imported, second.executed), (1, 1));
    }

    proptest! {
        #[test]
        fn ids_increase_and_digests_unique(inputs in proptest::collection::vec(proptest::collection::vec(0u8..4, 0..3), 0..40)) {
            let mut c = Corpus::new();
            for i in inputs {
                c.push(i, Origin::Fuzzer, None, 0.0);
            }
            let seeds = c.seeds();
            prop_assert!(seeds.windows(2).all(|w| w[0].id < w[1].id));
            let digests: HashSet<Digest> = seeds.iter().map(|s| s.digest).collect();
            prop_assert_eq!(digests.len(), seeds.len());
        }

        #[test]
        fn rescans_are_exactly_once(files in proptest::collection::vec("[<>a-c/]{0,12}", 0..8), rescans in 1usize..4) {
            let dir = tempfile::tempdir().unwrap();
            for (i, f) in files.iter().enumerate() {
                std::fs::write(dir.path().join(format!("ai:{i:08},src:000000,t:1.00")), f).unwrap();
            }
            let h = lookup("toy-xml").unwrap();
            let mut pool = Corpus::new();
            let mut map = CoverageMap::new();
            let mut imp = Importer::new();
            let first = imp.scan_and_import(&mut pool, dir.path(), &h, &mut map, 0.0).unwrap();
            let mut total = first;
            for _ in 0..rescans {
                total += imp.scan_and_import(&mut pool, dir.path(), &h, &mut map, 0.0).unwrap();
            }
            prop_assert_eq!(total, first);
        }
    }
}
