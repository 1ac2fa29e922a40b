use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::monotone::{sparse_weights, FunctionFamily, MonotoneFunction};
use crate::error::{Error, Result};
use crate::partition::BlockPartition;
use crate::rng::{SeedLineage, StreamRng, DEFAULT_SEED};
use crate::simulate::{SampleBatch, Sampler, SourceSpec};
use crate::stats::{covariance_with_se, normal_cdf, normal_sf, CovEstimate};
use crate::verdict::{Statistics, Status, Verdict, Witness};

/// Minimum sample count accepted by the testers.
pub const MIN_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyWeight {
    pub family: FunctionFamily,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McConfig {
    /// Sample count `N`.
    pub samples: usize,
    /// Function pairs `M`.
    pub pairs: usize,
    /// Familywise significance level; each pair is tested at `significance / pairs`.
    pub significance: f64,
    pub seed: u64,
    /// Families for the outer functions `g`, `h`.
    pub families: Vec<FamilyWeight>,
    /// Admit unbounded outer functions when the source has finite second moments.
    pub allow_unbounded: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 100_000,
            pairs: 200,
            significance: 0.01,
            seed: DEFAULT_SEED,
            families: vec![
                FamilyWeight {
                    family: FunctionFamily::Indicator,
                    weight: 0.7,
                },
                FamilyWeight {
                    family: FunctionFamily::IndicatorSum,
                    weight: 0.3,
                },
            ],
            allow_unbounded: false,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InsufficientSamples {
                needed: MIN_SAMPLES,
                got: self.samples,
            });
        }
        if self.pairs == 0 {
            return Err(Error::InvalidArgument(
                "at least one function pair is required".into(),
            ));
        }
        if !(self.significance > 0.0 && self.significance < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "significance must lie in (0,1), got {}",
                self.significance
            )));
        }
        if self.families.is_empty()
            || self
                .families
                .iter()
                .any(|f| !(f.weight >= 0.0 && f.weight.is_finite()))
        {
            return Err(Error::InvalidArgument(
                "family weights must be finite and non-negative".into(),
            ));
        }
        if self.families.iter().all(|f| f.weight == 0.0) {
            return Err(Error::InvalidArgument(
                "at least one family weight must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Per-pair level after Bonferroni correction.
    pub fn level(&self) -> f64 {
        self.significance / self.pairs as f64
    }

    pub fn root(&self) -> SeedLineage {
        SeedLineage::new(self.seed)
    }

    pub fn batch_lineage(&self) -> SeedLineage {
        self.root().derive("mc-test/batch", 0)
    }
}

/// Which inequality is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TestMode {
    /// `Cov(g(F), h(F)) ≥ 0` with `g`, `h` on the full block image.
    Block,
    /// `Cov(g(F_A), h(F_B)) ≥ 0` for disjoint block sets `A`, `B`.
    Weak,
    /// `Cov(g(F_A), h(F_B)) ≤ 0` for disjoint block sets `A`, `B`.
    Negative,
}

impl TestMode {
    pub fn check_name(self) -> &'static str {
        match self {
            TestMode::Block => "mc_block_association_test",
            TestMode::Weak => "mc_weak_block_association_test",
            TestMode::Negative => "mc_negative_block_association_test",
        }
    }

    /// One-sided p-value of `z` against the null of the mode.
    pub fn p_value(self, z: f64) -> f64 {
        match self {
            TestMode::Block | TestMode::Weak => normal_cdf(z),
            TestMode::Negative => normal_sf(z),
        }
    }
}

/// The functions of one trial: per-block `f_k` and outer `g`, `h` on the
/// block image. Block sets are 0-based here.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialFunctions {
    pub block_functions: Vec<MonotoneFunction>,
    pub g: MonotoneFunction,
    pub h: MonotoneFunction,
    pub g_blocks: Vec<usize>,
    pub h_blocks: Vec<usize>,
}

/// Replayable evidence of a significant covariance. Block sets are 1-based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionPairWitness {
    pub mode: TestMode,
    pub trial: usize,
    pub partition: BlockPartition,
    pub block_functions: Vec<MonotoneFunction>,
    pub g: MonotoneFunction,
    pub h: MonotoneFunction,
    pub g_blocks: Vec<usize>,
    pub h_blocks: Vec<usize>,
    pub estimate: f64,
    pub standard_error: f64,
    pub z: f64,
    pub p_value: f64,
    pub level: f64,
    pub samples: usize,
    pub batch_lineage: SeedLineage,
    /// Filled by front ends that know how the batch was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SourceSpec>,
}

impl FunctionPairWitness {
    pub fn functions(&self) -> TrialFunctions {
        TrialFunctions {
            block_functions: self.block_functions.clone(),
            g: self.g.clone(),
            h: self.h.clone(),
            g_blocks: self.g_blocks.iter().map(|b| b - 1).collect(),
            h_blocks: self.h_blocks.iter().map(|b| b - 1).collect(),
        }
    }
}

/// Batch stored column by column.
pub(crate) struct Columns {
    cols: Vec<Vec<f64>>,
    count: usize,
}

impl Columns {
    pub(crate) fn new(batch: &SampleBatch) -> Self {
        let mut cols = vec![Vec::with_capacity(batch.count); batch.dim];
        for r in batch.rows() {
            for (c, v) in cols.iter_mut().zip(r) {
                c.push(*v);
            }
        }
        Self {
            cols,
            count: batch.count,
        }
    }
}

/// Reusable per-thread buffers for one trial evaluation.
struct Scratch {
    image: Vec<Vec<f64>>,
    g: Vec<f64>,
    h: Vec<f64>,
    buf: Vec<f64>,
}

impl Scratch {
    fn new(count: usize, blocks: usize) -> Self {
        Self {
            image: vec![vec![0.0; count]; blocks],
            g: vec![0.0; count],
            h: vec![0.0; count],
            buf: Vec::new(),
        }
    }
}

/// Block image columns `F_b = f_b(X(I_b))`, written into `image`.
fn block_image_into(
    cols: &Columns,
    partition: &BlockPartition,
    fs: &[MonotoneFunction],
    image: &mut [Vec<f64>],
    buf: &mut Vec<f64>,
) {
    for (b, f) in fs.iter().enumerate() {
        let inputs: Vec<&[f64]> = partition
            .block(b)
            .iter()
            .map(|&c| cols.cols[c].as_slice())
            .collect();
        f.eval_columns_buf(&inputs, &mut image[b], buf);
    }
}

fn block_image(
    cols: &Columns,
    partition: &BlockPartition,
    fs: &[MonotoneFunction],
) -> Vec<Vec<f64>> {
    let mut image = vec![vec![0.0; cols.count]; fs.len()];
    block_image_into(cols, partition, fs, &mut image, &mut Vec::new());
    image
}

fn check_shapes(
    batch: &SampleBatch,
    partition: &BlockPartition,
    funcs: &TrialFunctions,
) -> Result<()> {
    if batch.dim != partition.index_count() {
        return Err(Error::DimensionMismatch {
            what: "sample batch",
            expected: partition.index_count(),
            found: batch.dim,
        });
    }
    if funcs.block_functions.len() != partition.block_count() {
        return Err(Error::DimensionMismatch {
            what: "block functions",
            expected: partition.block_count(),
            found: funcs.block_functions.len(),
        });
    }
    for (b, f) in funcs.block_functions.iter().enumerate() {
        if f.dim() != partition.block(b).len() {
            return Err(Error::DimensionMismatch {
                what: "block function",
                expected: partition.block(b).len(),
                found: f.dim(),
            });
        }
    }
    for f in [&funcs.g, &funcs.h] {
        f.validate()?;
        if f.dim() != partition.block_count() {
            return Err(Error::DimensionMismatch {
                what: "outer function",
                expected: partition.block_count(),
                found: f.dim(),
            });
        }
    }
    if batch.count < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: batch.count,
        });
    }
    Ok(())
}

fn evaluate_columns(
    cols: &Columns,
    partition: &BlockPartition,
    funcs: &TrialFunctions,
    s: &mut Scratch,
) -> CovEstimate {
    block_image_into(
        cols,
        partition,
        &funcs.block_functions,
        &mut s.image,
        &mut s.buf,
    );
    let inputs: Vec<&[f64]> = s.image.iter().map(Vec::as_slice).collect();
    funcs.g.eval_columns_buf(&inputs, &mut s.g, &mut s.buf);
    funcs.h.eval_columns_buf(&inputs, &mut s.h, &mut s.buf);
    covariance_with_se(&s.g, &s.h)
}

/// Covariance estimate of `g(F)` and `h(F)` on `batch`.
pub fn evaluate_pair(
    batch: &SampleBatch,
    partition: &BlockPartition,
    funcs: &TrialFunctions,
) -> Result<CovEstimate> {
    check_shapes(batch, partition, funcs)?;
    for f in &funcs.block_functions {
        f.validate()?;
    }
    let mut scratch = Scratch::new(batch.count, partition.block_count());
    Ok(evaluate_columns(
        &Columns::new(batch),
        partition,
        funcs,
        &mut scratch,
    ))
}

fn pick_row<'a>(rng: &mut StreamRng, data: &'a [f64], width: usize) -> &'a [f64] {
    let rows = data.len() / width;
    let r = rng.random_range(0..rows);
    &data[r * width..(r + 1) * width]
}

/// Threshold just below `⟨w, x⟩` so that `1{⟨w,·⟩ > c}` includes `x`.
fn threshold_at(w: &[f64], x: &[f64]) -> f64 {
    let v = crate::levy::dot(w, x);
    v - 1e-9 * (1.0 + v.abs())
}

fn draw_block_function(
    rng: &mut StreamRng,
    batch: &SampleBatch,
    coords: &[usize],
) -> MonotoneFunction {
    let m = coords.len();
    let local: Vec<usize> = (0..m).collect();
    if m > 1 && rng.random_bool(0.2) {
        let row = pick_row(rng, &batch.data, batch.dim);
        MonotoneFunction::ShiftedMax {
            shifts: coords.iter().map(|&c| row[c]).collect(),
        }
    } else {
        MonotoneFunction::Linear {
            weights: sparse_weights(rng, m, &local, 0.7),
        }
    }
}

fn draw_outer(
    rng: &mut StreamRng,
    families: &[FunctionFamily],
    pick: &WeightedIndex<f64>,
    img: &[f64],
    n: usize,
    allowed: &[usize],
) -> MonotoneFunction {
    let w = sparse_weights(rng, n, allowed, 0.5);
    match families[pick.sample(rng)] {
        FunctionFamily::Indicator => {
            let x = pick_row(rng, img, n);
            MonotoneFunction::HalfSpace {
                threshold: threshold_at(&w, x),
                weights: w,
            }
        }
        FunctionFamily::IndicatorSum => {
            let mut cs: Vec<f64> = (0..3)
                .map(|_| threshold_at(&w, pick_row(rng, img, n)))
                .collect();
            cs.sort_by(f64::total_cmp);
            MonotoneFunction::Sum {
                terms: cs
                    .into_iter()
                    .map(|c| MonotoneFunction::HalfSpace {
                        weights: w.clone(),
                        threshold: c,
                    })
                    .collect(),
            }
        }
        FunctionFamily::Linear => MonotoneFunction::Linear { weights: w },
        // a max over all image coordinates cannot be restricted to a block set,
        // so it is used only when every block is allowed
        FunctionFamily::ShiftedMax if allowed.len() == n => MonotoneFunction::ShiftedMax {
            shifts: pick_row(rng, img, n).to_vec(),
        },
        FunctionFamily::ShiftedMax => MonotoneFunction::Linear { weights: w },
    }
}

/// Two disjoint non-empty block sets.
fn disjoint_block_sets(rng: &mut StreamRng, n: usize) -> (Vec<usize>, Vec<usize>) {
    loop {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for k in 0..n {
            match rng.random_range(0..3) {
                0 => a.push(k),
                1 => b.push(k),
                _ => {}
            }
        }
        if !a.is_empty() && !b.is_empty() {
            return (a, b);
        }
    }
}

/// Draws the functions of trial `t` from `cfg.root().derive("mc-test/trial", t)`.
pub fn draw_trial(
    t: usize,
    batch: &SampleBatch,
    partition: &BlockPartition,
    cfg: &McConfig,
    mode: TestMode,
    unbounded_ok: bool,
) -> TrialFunctions {
    let mut rng = cfg.root().derive("mc-test/trial", t as u64).rng();
    let n = partition.block_count();
    let block_functions: Vec<MonotoneFunction> = (0..n)
        .map(|b| draw_block_function(&mut rng, batch, partition.block(b)))
        .collect();
    let (families, weights): (Vec<FunctionFamily>, Vec<f64>) = cfg
        .families
        .iter()
        .filter(|f| unbounded_ok || f.family.is_bounded())
        .map(|f| (f.family, f.weight))
        .unzip();
    let pick = WeightedIndex::new(weights).expect("validated weights");
    // image rows used only for thresholds: a few hundred suffice
    let probe = batch.count.min(512);
    let probe_batch = SampleBatch {
        dim: batch.dim,
        count: probe,
        data: batch.data[..probe * batch.dim].to_vec(),
        lineage: batch.lineage,
    };
    let img_cols = block_image(&Columns::new(&probe_batch), partition, &block_functions);
    let img: Vec<f64> = (0..probe)
        .flat_map(|i| img_cols.iter().map(move |c| c[i]))
        .collect();
    let (g_blocks, h_blocks) = match mode {
        TestMode::Block => ((0..n).collect(), (0..n).collect()),
        TestMode::Weak | TestMode::Negative => disjoint_block_sets(&mut rng, n),
    };
    let g = draw_outer(&mut rng, &families, &pick, &img, n, &g_blocks);
    let h = draw_outer(&mut rng, &families, &pick, &img, n, &h_blocks);
    TrialFunctions {
        block_functions,
        g,
        h,
        g_blocks,
        h_blocks,
    }
}

struct TrialResult {
    funcs: TrialFunctions,
    est: CovEstimate,
    z: f64,
    p: f64,
}

/// Runs the test on an already drawn batch.
pub fn mc_test_batch(
    batch: &SampleBatch,
    partition: &BlockPartition,
    cfg: &McConfig,
    mode: TestMode,
    finite_second_moments: bool,
) -> Result<Verdict> {
    cfg.validate()?;
    if batch.dim != partition.index_count() {
        return Err(Error::DimensionMismatch {
            what: "source",
            expected: partition.index_count(),
            found: batch.dim,
        });
    }
    if batch.count < MIN_SAMPLES {
        return Err(Error::InsufficientSamples {
            needed: MIN_SAMPLES,
            got: batch.count,
        });
    }
    let n = partition.block_count();
    if mode != TestMode::Block && n < 2 {
        return Err(Error::InvalidArgument(format!(
            "{} needs at least two blocks, got {n}",
            mode.check_name()
        )));
    }
    let unbounded_ok = cfg.allow_unbounded && finite_second_moments;
    if !unbounded_ok
        && !cfg
            .families
            .iter()
            .any(|f| f.family.is_bounded() && f.weight > 0.0)
    {
        return Err(Error::InvalidArgument(
            "no bounded function family has positive weight and unbounded functions are not admitted".into(),
        ));
    }
    let cols = Columns::new(batch);
    let results: Vec<TrialResult> = (0..cfg.pairs)
        .into_par_iter()
        .map_init(
            || Scratch::new(batch.count, n),
            |scratch, t| {
                let funcs = draw_trial(t, batch, partition, cfg, mode, unbounded_ok);
                let est = evaluate_columns(&cols, partition, &funcs, scratch);
                let z = est.z_score();
                let p = mode.p_value(z);
                TrialResult { funcs, est, z, p }
            },
        )
        .collect();
    let (worst_t, worst) = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.p.total_cmp(&b.1.p).then(a.0.cmp(&b.0)))
        .expect("at least one pair");
    let level = cfg.level();
    let status = if worst.p < level {
        Status::Violation
    } else {
        Status::Pass
    };
    let mut v = Verdict::new(mode.check_name(), status);
    v.statistics = Statistics {
        checked: cfg.pairs,
        sample_size: Some(batch.count),
        significance: Some(cfg.significance),
        min_p_value: Some(worst.p),
        tolerance: Some(level),
        lineage: Some(batch.lineage),
    };
    if status == Status::Violation {
        let f = &worst.funcs;
        v.witness = Some(Witness::FunctionPair(Box::new(FunctionPairWitness {
            mode,
            trial: worst_t,
            partition: partition.clone(),
            block_functions: f.block_functions.clone(),
            g: f.g.clone(),
            h: f.h.clone(),
            g_blocks: f.g_blocks.iter().map(|b| b + 1).collect(),
            h_blocks: f.h_blocks.iter().map(|b| b + 1).collect(),
            estimate: worst.est.estimate,
            standard_error: worst.est.standard_error,
            z: worst.z,
            p_value: worst.p,
            level,
            samples: batch.count,
            batch_lineage: batch.lineage,
            source: None,
        })));
    } else {
        v = v.with_note("PASS is statistical evidence at the stated level, not a proof");
    }
    Ok(v.with_note(format!(
        "one-sided z-tests over {} function pairs, Bonferroni level {:.3e}",
        cfg.pairs, level
    )))
}

fn run(
    source: &dyn Sampler,
    partition: &BlockPartition,
    cfg: &McConfig,
    mode: TestMode,
) -> Result<Verdict> {
    cfg.validate()?;
    if source.dim() != partition.index_count() {
        return Err(Error::DimensionMismatch {
            what: "source",
            expected: partition.index_count(),
            found: source.dim(),
        });
    }
    let batch = source.sample(cfg.samples, cfg.batch_lineage())?;
    mc_test_batch(&batch, partition, cfg, mode, source.finite_second_moments())
}

/// Monte Carlo falsification of association between blocks.
pub fn mc_block_association_test(
    source: &dyn Sampler,
    partition: &BlockPartition,
    cfg: &McConfig,
) -> Result<Verdict> {
    run(source, partition, cfg, TestMode::Block)
}

/// Monte Carlo falsification of weak association between blocks.
pub fn mc_weak_block_association_test(
    source: &dyn Sampler,
    partition: &BlockPartition,
    cfg: &McConfig,
) -> Result<Verdict> {
    run(source, partition, cfg, TestMode::Weak)
}

/// Monte Carlo falsification of negative association between blocks.
pub fn mc_negative_block_association_test(
    source: &dyn Sampler,
    partition: &BlockPartition,
    cfg: &McConfig,
) -> Result<Verdict> {
    run(source, partition, cfg, TestMode::Negative)
}

/// Re-evaluates a witness on a batch drawn from `source` with `lineage`
/// (default: the recorded one). The status is VIOLATION iff the pair is
/// again significant at the recorded level.
pub fn replay_witness(
    witness: &FunctionPairWitness,
    source: &dyn Sampler,
    lineage: Option<SeedLineage>,
) -> Result<Verdict> {
    let lineage = lineage.unwrap_or(witness.batch_lineage);
    let batch = source.sample(witness.samples, lineage)?;
    let est = evaluate_pair(&batch, &witness.partition, &witness.functions())?;
    let z = est.z_score();
    let p = witness.mode.p_value(z);
    let status = if p < witness.level {
        Status::Violation
    } else {
        Status::Pass
    };
    let mut replayed = witness.clone();
    replayed.estimate = est.estimate;
    replayed.standard_error = est.standard_error;
    replayed.z = z;
    replayed.p_value = p;
    replayed.batch_lineage = lineage;
    let mut v = Verdict::new("replay", status);
    v.statistics = Statistics {
        checked: 1,
        sample_size: Some(batch.count),
        significance: Some(witness.level),
        min_p_value: Some(p),
        tolerance: Some(witness.level),
        lineage: Some(lineage),
    };
    v.witness = Some(Witness::FunctionPair(Box::new(replayed)));
    Ok(v)
}
