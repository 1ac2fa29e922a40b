use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use blockassoc::checkers::{
    gaussian_block_association, id_sufficient_conditions, id_process_support_check,
    l_superadditivity_check_with_budget, levy_support_equivalence, mixed_derivative_check, TrajectoryAtom,
};
use blockassoc::limits::{
    certify_weak_block_association, run_clt_experiment, run_invariance_check, CltConfig, InvarianceConfig,
};
use blockassoc::mctest::{
    exact_discrete_association, exact_discrete_block_association, hps_formula_verify, mc_test_batch,
    replay_witness, FunctionPairWitness, HpsConfig, McConfig, OracleBudget, SmoothFunction, TestMode,
};
use blockassoc::simulate::{MaModel, CHUNK_ROWS};
use blockassoc::{
    CovFunction, CovFunctionSpec, CovarianceMatrix, DiscreteJointDistribution, DiscreteLevyMeasure, Error,
    IdTriplet, SeedLineage, Status, Verdict, Witness,
};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::args::{self, BatchFormat, Command, CovfunMethod, Mode};
use crate::input::{parse_blocks, parse_times, read_json, Source};
use crate::report::{matrix, num, Report, Table};

pub fn dispatch(command: &Command) -> Result<Report> {
    match command {
        Command::CheckGaussian(a) => check_gaussian(a),
        Command::CheckId(a) => check_id(a),
        Command::CheckCovfun(a) => check_covfun(a),
        Command::CheckSupport(a) => check_support(a),
        Command::Oracle(a) => oracle(a),
        Command::McTest(a) => mc_test(a),
        Command::Simulate(a) => simulate(a),
        Command::HpsVerify(a) => hps_verify(a),
        Command::Clt(a) => clt(a),
        Command::Replay(a) => replay(a),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("core types serialize")
}

fn witness_row(table: &mut Table, verdict: &Verdict) {
    if let Some(w) = &verdict.witness {
        let text = match w {
            Witness::FunctionPair(p) => format!(
                "trial {} estimate {} (se {}, z {:.3}, p {:.3e})",
                p.trial,
                num(p.estimate),
                num(p.standard_error),
                p.z,
                p.p_value
            ),
            other => serde_json::to_string(other).expect("witness serializes"),
        };
        // a passing verdict still reports its closest call
        let label = if verdict.status == Status::Pass { "worst case" } else { "witness" };
        table.row(label, text);
    }
    for n in &verdict.notes {
        table.row("note", n);
    }
}

fn verdict_report(subcommand: &'static str, verdict: Verdict, config: Value, mut table: Table) -> Report {
    table.row("checked", verdict.statistics.checked);
    witness_row(&mut table, &verdict);
    let lineage = verdict.statistics.lineage;
    let report = Report::new(subcommand, verdict.status, config, to_value(&verdict), table);
    match lineage {
        Some(l) => report.with_lineage(l),
        None => report,
    }
}

fn check_gaussian(a: &args::CheckGaussian) -> Result<Report> {
    let sigma: CovarianceMatrix = read_json(&a.sigma)?;
    let p = parse_blocks(&a.blocks, sigma.dim())?;
    let verdict = gaussian_block_association(&sigma, &p)?;
    let config = json!({"sigma": sigma, "blocks": p});
    let mut t = Table::default();
    t.row("dimension", sigma.dim()).row("blocks", format!("{:?}", p.to_one_based()));
    Ok(verdict_report("check-gaussian", verdict, config, t))
}

fn check_id(a: &args::CheckId) -> Result<Report> {
    let triplet: IdTriplet = read_json(&a.triplet)?;
    let p = parse_blocks(&a.blocks, triplet.dim())?;
    let verdict = id_sufficient_conditions(&triplet, &p)?;
    let config = json!({"triplet": triplet, "blocks": p});
    let mut t = Table::default();
    t.row("dimension", triplet.dim())
        .row("levy atoms", triplet.levy().atoms().len())
        .row("blocks", format!("{:?}", p.to_one_based()));
    Ok(verdict_report("check-id", verdict, config, t))
}

fn check_covfun(a: &args::CheckCovfun) -> Result<Report> {
    let spec: CovFunctionSpec = read_json(&a.covfun)?;
    let cov = CovFunction::from_spec(spec.clone())?;
    let times = parse_times(&a.times)?;
    let mut t = Table::default();
    t.row("dimension", cov.dim()).row("times", format!("{times:?}"));
    match a.method {
        CovfunMethod::Rectangles => {
            let verdict = l_superadditivity_check_with_budget(&cov, &times, a.budget)?;
            let config = json!({"covfun": spec, "times": times, "method": "rectangles", "budget": a.budget});
            Ok(verdict_report("check-covfun", verdict, config, t))
        }
        CovfunMethod::Derivative => {
            let report = mixed_derivative_check(&cov, &times, a.step)?;
            let config = json!({"covfun": spec, "times": times, "method": "derivative", "step": a.step});
            let verdict = report.verdict.clone();
            t.row("checked", verdict.statistics.checked);
            witness_row(&mut t, &verdict);
            Ok(Report::new("check-covfun", verdict.status, config, to_value(&report), t))
        }
    }
}

fn check_support(a: &args::CheckSupport) -> Result<Report> {
    if let Some(path) = &a.input.levy {
        let nu: DiscreteLevyMeasure = read_json(path)?;
        let p = parse_blocks(&a.blocks, nu.dim())?;
        let (projections, membership) = levy_support_equivalence(&nu, &p)?;
        if projections != membership {
            bail!("internal inconsistency: projection condition {projections} but support membership {membership}");
        }
        // the support condition is sufficient only
        let status = if membership { Status::Pass } else { Status::Inconclusive };
        let config = json!({"levy": nu, "blocks": p});
        let result = json!({"projections_in_quadrants": projections, "atoms_in_support_set": membership});
        let mut t = Table::default();
        t.row("atoms", nu.atoms().len())
            .row("blocks", format!("{:?}", p.to_one_based()))
            .row("cross-block projections in closed quadrants", projections)
            .row("atoms in support set", membership);
        return Ok(Report::new("check-support", status, config, result, t));
    }
    let path = a.input.trajectories.as_ref().expect("clap enforces one input");
    let atoms: Vec<TrajectoryAtom> = read_json(path)?;
    let verdict = id_process_support_check(&atoms)?;
    let config = json!({"trajectories": atoms});
    let mut t = Table::default();
    t.row("atoms", atoms.len());
    Ok(verdict_report("check-support", verdict, config, t))
}

fn oracle(a: &args::Oracle) -> Result<Report> {
    let dist: DiscreteJointDistribution = read_json(&a.dist)?;
    let budget = OracleBudget {
        max_support: a.max_support,
        max_upper_sets: a.max_upper_sets,
        max_block_support: a.max_block_support,
        max_blocks: a.max_blocks,
        max_combinations: a.max_combinations,
        max_pair_evaluations: a.max_pair_evaluations,
    };
    let (outcome, blocks) = match &a.blocks {
        Some(spec) => {
            let p = parse_blocks(spec, dist.dim())?;
            (exact_discrete_block_association(&dist, &p, &budget)?, Some(p))
        }
        None => (exact_discrete_association(&dist, &budget)?, None),
    };
    let status = if outcome.associated { Status::Pass } else { Status::Violation };
    let config = json!({"dist": dist, "blocks": blocks, "budget": budget});
    let mut t = Table::default();
    t.row("support points", dist.len())
        .row("upper sets", outcome.upper_sets)
        .row("block images", outcome.combinations)
        .row("worst covariance", num(outcome.worst_covariance));
    if let Some(w) = &outcome.witness {
        t.row("witness", serde_json::to_string(w)?);
    }
    Ok(Report::new("oracle", status, config, to_value(&outcome), t))
}

fn test_mode(m: Mode) -> TestMode {
    match m {
        Mode::Block => TestMode::Block,
        Mode::Weak => TestMode::Weak,
        Mode::Negative => TestMode::Negative,
    }
}

fn mc_test(a: &args::McTest) -> Result<Report> {
    let source = Source::load(&a.source)?;
    let sampler = source.sampler()?;
    let p = parse_blocks(&a.blocks, sampler.dim())?;
    let samples = match (&source, a.n) {
        (_, Some(n)) => n,
        (Source::Batch(b), None) => b.count,
        (Source::Spec(_), None) => McConfig::default().samples,
    };
    let cfg = McConfig {
        samples,
        pairs: a.pairs,
        significance: a.alpha,
        seed: a.seed,
        allow_unbounded: a.allow_unbounded,
        ..McConfig::default()
    };
    cfg.validate()?;
    let batch = sampler.sample(cfg.samples, cfg.batch_lineage())?;
    let mode = test_mode(a.mode);
    let mut verdict = mc_test_batch(&batch, &p, &cfg, mode, sampler.finite_second_moments())?;
    if let Some(Witness::FunctionPair(w)) = &mut verdict.witness {
        w.source = source.spec().cloned();
    }
    let config = json!({
        "source": source.spec(),
        "source_file": matches!(source, Source::Batch(_)).then(|| a.source.clone()),
        "blocks": p,
        "mode": mode,
        "mc": cfg,
    });
    let mut t = Table::default();
    t.row("mode", mode.check_name())
        .row("samples", cfg.samples)
        .row("pairs", cfg.pairs)
        .row("significance", cfg.significance)
        .row("seed", cfg.seed);
    if let Some(pv) = verdict.statistics.min_p_value {
        t.row("min p-value", format!("{pv:.3e}"));
    }
    Ok(verdict_report("mc-test", verdict, config, t))
}

fn simulate(a: &args::Simulate) -> Result<Report> {
    let source = Source::load(&a.source)?;
    let spec = source
        .spec()
        .ok_or_else(|| anyhow!("simulate needs a preset or source spec, not a batch file"))?;
    let sampler = spec.build()?;
    let lineage = SeedLineage::new(a.seed).derive("simulate", 0);
    let batch = sampler.sample(a.n, lineage)?;
    let file = File::create(&a.batch).with_context(|| format!("cannot create {}", a.batch.display()))?;
    let mut w = BufWriter::new(file);
    match a.batch_format {
        BatchFormat::Csv => batch.write_csv(&mut w)?,
        BatchFormat::Binary => batch.write_binary(&mut w)?,
    }
    std::io::Write::flush(&mut w)?;
    let streams = match spec {
        blockassoc::simulate::SourceSpec::Ma { .. } => a.n,
        _ => a.n.div_ceil(CHUNK_ROWS),
    };
    let format = match a.batch_format {
        BatchFormat::Csv => "csv",
        BatchFormat::Binary => "binary",
    };
    let config = json!({"source": spec, "n": a.n, "seed": a.seed, "format": format});
    let result = json!({
        "rows": batch.count,
        "columns": batch.dim,
        "format": format,
        "seed": a.seed,
        "streams": streams,
    });
    let mut t = Table::default();
    t.row("rows", batch.count)
        .row("columns", batch.dim)
        .row("format", format)
        .row("streams", streams)
        .row("batch", a.batch.display());
    let report = Report::new("simulate", Status::Pass, config, result, t).with_lineage(lineage);
    let mut meta = a.batch.clone().into_os_string();
    meta.push(".meta.json");
    let meta = PathBuf::from(meta);
    std::fs::write(&meta, report.to_json()).with_context(|| format!("cannot write {}", meta.display()))?;
    Ok(report)
}

#[derive(Deserialize)]
struct FunctionPair {
    psi1: SmoothFunction,
    psi2: SmoothFunction,
}

fn hps_verify(a: &args::HpsVerify) -> Result<Report> {
    let triplet: IdTriplet = read_json(&a.triplet)?;
    let f: FunctionPair = read_json(&a.functions)?;
    let cfg = HpsConfig {
        samples: a.n,
        nodes: a.nodes,
        seed: a.seed,
    };
    let r = hps_formula_verify(&triplet, &f.psi1, &f.psi2, &cfg)?;
    // disagreement beyond 3 combined standard errors falsifies the identity
    let status = if r.agree { Status::Pass } else { Status::Violation };
    let config = json!({"triplet": triplet, "psi1": f.psi1, "psi2": f.psi2, "hps": cfg});
    let mut t = Table::default();
    t.row("covariance (lhs)", format!("{} ± {}", num(r.lhs), num(r.lhs_standard_error)))
        .row("integral (rhs)", format!("{} ± {}", num(r.rhs), num(r.rhs_standard_error)))
        .row("|lhs - rhs|", num((r.lhs - r.rhs).abs()))
        .row("3 combined se", num(3.0 * r.combined_standard_error));
    let lineage = r.lineage;
    Ok(Report::new("hps-verify", status, config, to_value(&r), t).with_lineage(lineage))
}

fn clt(a: &args::Clt) -> Result<Report> {
    let model: MaModel = read_json(&a.model)?;
    let partition = a.blocks.as_deref().map(|b| parse_blocks(b, model.dim())).transpose()?;
    let times = a.times.as_deref().map(parse_times).transpose()?;
    let cfg = CltConfig {
        n: a.n,
        reps: a.reps,
        seed: a.seed,
        override_hypothesis: a.override_hypothesis,
        partition: partition.clone(),
    };
    let inv_cfg = times.clone().map(|times| InvarianceConfig {
        n: a.n,
        reps: a.reps,
        seed: a.seed,
        times,
        override_hypothesis: a.override_hypothesis,
        partition: partition.clone(),
    });
    let config = json!({"model": model, "clt": cfg, "invariance": inv_cfg});
    let report = match run_clt_experiment(&model, &cfg) {
        Err(Error::HypothesisNotCertified(msg)) => {
            let p = partition.unwrap_or_else(|| blockassoc::BlockPartition::whole(model.dim()));
            let certificate = certify_weak_block_association(&model, &p)?;
            let mut t = Table::default();
            t.row("hypothesis", "not certified").row("reason", &msg);
            witness_row(&mut t, &certificate);
            t.row("note", "rerun with --override-hypothesis for an exploratory run");
            return Ok(Report::new(
                "clt",
                Status::Inconclusive,
                config,
                json!({"hypothesis": certificate, "message": msg}),
                t,
            ));
        }
        r => r?,
    };
    let mut t = Table::default();
    t.row("n", report.n)
        .row("reps", report.reps)
        .row("hypothesis", report.hypothesis.status)
        .row("exploratory", report.exploratory)
        .row("theoretical sigma", matrix(&report.theoretical))
        .row("empirical sigma", matrix(&report.empirical))
        .row("max |deviation| / tolerance", num(report.max_deviation_ratio))
        .row(
            "min projection KS p-value",
            format!("{:.3e}", report.projection_p_values.iter().cloned().fold(f64::INFINITY, f64::min)),
        )
        .row("covariance within 6 se", report.covariance_pass)
        .row("normality", report.normality_pass)
        .row("negative limit entry", report.has_negative_entry);
    let mut status = report.status();
    let invariance = match &inv_cfg {
        Some(c) => {
            let inv = run_invariance_check(&model, c)?;
            t.row("invariance", inv.status());
            if inv.status() != Status::Pass {
                status = Status::Violation;
            }
            Some(inv)
        }
        None => None,
    };
    let lineage = report.lineage;
    let result = json!({"clt": report, "invariance": invariance});
    Ok(Report::new("clt", status, config, result, t).with_lineage(lineage))
}

/// Accepts a full mc-test report, a bare verdict, or a bare witness.
fn extract_witness(v: Value) -> Result<FunctionPairWitness> {
    let verdict = v.get("result").cloned().unwrap_or(v.clone());
    if verdict.get("status").is_some() {
        let verdict: Verdict = serde_json::from_value(verdict).context("cannot parse verdict")?;
        return match verdict.witness {
            Some(Witness::FunctionPair(w)) => Ok(*w),
            _ => bail!("nothing to replay: the report has status {} and no function-pair witness", verdict.status),
        };
    }
    serde_json::from_value(v).context("cannot parse function-pair witness")
}

fn replay(a: &args::Replay) -> Result<Report> {
    let w = extract_witness(read_json(&a.witness)?)?;
    let source = match (&a.source, &w.source) {
        (Some(s), _) => Source::load(s)?,
        (None, Some(spec)) => Source::Spec(spec.clone()),
        (None, None) => bail!("the witness records no source; pass --source"),
    };
    let sampler = source.sampler()?;
    let lineage = a.seed.map(|seed| McConfig { seed, ..McConfig::default() }.batch_lineage());
    let verdict = replay_witness(&w, sampler.as_ref(), lineage)?;
    let config = json!({"witness": w, "source": source.spec(), "seed": a.seed});
    let mut t = Table::default();
    t.row("recorded estimate", format!("{} (se {})", num(w.estimate), num(w.standard_error)));
    if let Some(Witness::FunctionPair(r)) = &verdict.witness {
        t.row("replayed estimate", format!("{} (se {})", num(r.estimate), num(r.standard_error)))
            .row("replayed p-value", format!("{:.3e}", r.p_value));
    }
    let report_lineage = lineage.unwrap_or(w.batch_lineage);
    let mut verdict = verdict;
    verdict.statistics.lineage = Some(report_lineage);
    Ok(verdict_report("replay", verdict, config, t))
}
