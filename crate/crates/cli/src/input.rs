use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use anyhow::{bail, Context, Result};
use blockassoc::simulate::{Sampler, SampleBatch, SourceSpec};
use blockassoc::{BlockPartition, SeedLineage};
use serde::de::DeserializeOwned;

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("cannot parse {}", path.display()))
}

/// `singleton`, `whole`, inline JSON of 1-based lists, or a JSON file.
pub fn parse_blocks(spec: &str, dim: usize) -> Result<BlockPartition> {
    let spec = spec.trim();
    match spec {
        "singleton" | "singletons" => return Ok(BlockPartition::singletons(dim)),
        "whole" => return Ok(BlockPartition::whole(dim)),
        _ => {}
    }
    let blocks: Vec<Vec<usize>> = if spec.starts_with('[') {
        serde_json::from_str(spec).context("cannot parse --blocks")?
    } else {
        read_json(Path::new(spec))?
    };
    let p = BlockPartition::try_from(blocks)?;
    if p.index_count() != dim {
        bail!("partition covers {} indices but the input has dimension {dim}", p.index_count());
    }
    Ok(p)
}

/// Comma-separated or JSON list of numbers.
pub fn parse_times(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.starts_with('[') {
        return serde_json::from_str(spec).context("cannot parse time list");
    }
    spec.split(',')
        .map(|t| t.trim().parse::<f64>().with_context(|| format!("bad time {t:?}")))
        .collect()
}

/// A sampling source as given on the command line.
pub enum Source {
    Spec(SourceSpec),
    Batch(SampleBatch),
}

impl Source {
    pub fn load(arg: &str) -> Result<Self> {
        if let Some(spec) = SourceSpec::preset(arg) {
            return Ok(Source::Spec(spec));
        }
        let path = Path::new(arg);
        if !path.exists() {
            bail!(
                "source {arg:?} is neither a preset ({}) nor an existing file",
                SourceSpec::PRESETS.join(", ")
            );
        }
        let open = || File::open(path).with_context(|| format!("cannot open {}", path.display()));
        // file batches carry no seed; lineage 0 marks them
        let lineage = SeedLineage::new(0);
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Source::Batch(SampleBatch::read_csv(BufReader::new(open()?), lineage)?)),
            Some("bin") => Ok(Source::Batch(SampleBatch::read_binary(BufReader::new(open()?), lineage)?)),
            _ => Ok(Source::Spec(read_json(path)?)),
        }
    }

    pub fn spec(&self) -> Option<&SourceSpec> {
        match self {
            Source::Spec(s) => Some(s),
            Source::Batch(_) => None,
        }
    }

    pub fn sampler(&self) -> Result<Box<dyn Sampler + '_>> {
        Ok(match self {
            Source::Spec(s) => s.build()?,
            Source::Batch(b) => Box::new(BatchRef(b)),
        })
    }
}

struct BatchRef<'a>(&'a SampleBatch);

impl Sampler for BatchRef<'_> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn sample(&self, count: usize, lineage: SeedLineage) -> blockassoc::Result<SampleBatch> {
        self.0.sample(count, lineage)
    }
    fn finite_second_moments(&self) -> bool {
        self.0.finite_second_moments()
    }
}
