use std::fs::File;
use std::path::Path;

use baycv_core::decision::{
    rank as rank_systems, tally, ttest_triple, DecisionError, DecisionTriple, PairVerdict, RopeInterval, RopeSizing,
};
use baycv_core::harness::{
    assemble_differences, make_splits, run_external, CommandTemplate, Dataset, DifferenceSeries, ExternalOptions,
    HarnessError, OovVocabulary, RhoPolicy, ScoreKey, ScoreMatrix, SplitPlan,
};
use baycv_core::io::{
    chains_meta_path, parse_key_values, read_chains, read_report, write_chains, write_report, IoError, ReportRow,
};
use baycv_core::metrics::{MetricsError, TaggedCorpus};
use baycv_core::model::{
    correlated_ttest, fit, generate as simulate, Convergence, GammaPrior, GenerateParams, ModelConfig, ModelError,
    PosteriorChains,
};
use baycv_core::plot::{render_simplex_svg, simplex_points};

use crate::manifest::{beside, reference, Manifest};
use crate::{io_error, CliError, CompareArgs, GenerateArgs, ModelArgs, PlotArgs, RankArgs, RopeArgs, ScoreArgs, SplitArgs};

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Io(_) | HarnessError::CommandFailed { .. } | HarnessError::OutputUnreadable { .. } => {
                CliError::Io(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Io(_) => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<DecisionError> for CliError {
    fn from(e: DecisionError) -> Self {
        CliError::Usage(e.to_string())
    }
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| io_error(path, e))
}

fn read_scores(path: &Path) -> Result<ScoreMatrix, CliError> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    ScoreMatrix::read_csv(file).map_err(|e| match e {
        HarnessError::Parse { line, detail } => CliError::Usage(format!("{}: line {line}: {detail}", path.display())),
        other => other.into(),
    })
}

pub fn split(a: &SplitArgs) -> Result<(), CliError> {
    let plan = make_splits(a.n, a.k as usize, a.m as usize, a.seed)?;
    let manifest_path = beside(&a.out);
    write_file(&a.out, &plan.to_text(Some(&reference(&manifest_path))))?;
    let mut m = Manifest::new("split");
    m.config("n", a.n);
    m.config("k", a.k);
    m.config("m", a.m);
    m.set("seed", a.seed);
    m.output("plan", &a.out);
    m.write(&manifest_path)?;
    println!("{}", manifest_path.display());
    Ok(())
}

pub fn score(a: &ScoreArgs) -> Result<(), CliError> {
    let template = CommandTemplate::parse(&a.command)?;
    let oov: OovVocabulary = a.oov_vocab.parse().map_err(CliError::Usage)?;
    let mut m = Manifest::new("score");
    let shared_plan = match &a.plan {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| io_error(p, e))?;
            m.input("plan", p)?;
            Some(SplitPlan::parse(&text)?)
        }
        None => None,
    };
    let mut matrix = if a.out.exists() {
        m.input("previous_scores", &a.out)?;
        read_scores(&a.out)?
    } else {
        ScoreMatrix::new()
    };

    let scratch;
    let work_dir = match &a.work_dir {
        Some(d) => d.clone(),
        None => {
            scratch = tempfile::tempdir().map_err(|e| CliError::Io(format!("temporary directory: {e}")))?;
            scratch.path().to_path_buf()
        }
    };
    let options = ExternalOptions {
        workers: a.workers.max(1),
        oov_vocabulary: oov,
        work_dir,
        keep_files: a.work_dir.is_some(),
    };
    for (name, path) in &a.datasets {
        m.input(&format!("dataset.{name}"), path)?;
        let corpus = TaggedCorpus::read(path)?;
        let plan = match &shared_plan {
            Some(p) => p.clone(),
            None => make_splits(corpus.len(), a.k as usize, a.m as usize, a.seed)?,
        };
        let dataset = Dataset {
            id: name.clone(),
            corpus,
        };
        let scores = run_external(&plan, &dataset, &a.system, &template, &options)?;
        matrix.merge(scores)?;
    }

    let manifest_path = beside(&a.out);
    let file = File::create(&a.out).map_err(|e| io_error(&a.out, e))?;
    matrix.write_csv(file, Some(&reference(&manifest_path)))?;
    m.config("system", &a.system);
    m.config("command", &a.command);
    m.config("oov_vocab", oov);
    m.config("workers", a.workers);
    if shared_plan.is_none() {
        m.config("k", a.k);
        m.config("m", a.m);
        m.set("seed", a.seed);
    }
    m.output("scores", &a.out);
    m.write(&manifest_path)?;
    println!("{}", manifest_path.display());
    Ok(())
}

fn rho_policy(s: &str) -> Result<RhoPolicy, CliError> {
    if s == "1/k" {
        return Ok(RhoPolicy::TestFraction);
    }
    let v: f64 = s
        .parse()
        .map_err(|_| CliError::Usage(format!("--rho must be `1/k` or a number, got `{s}`")))?;
    Ok(RhoPolicy::Fixed(v))
}

fn rope_sizing(r: &RopeArgs) -> RopeSizing {
    match r.rope {
        Some(h) => RopeSizing::Fixed(h),
        None => RopeSizing::Ci95,
    }
}

fn model_config(a: &ModelArgs) -> ModelConfig {
    ModelConfig {
        sigma_bar_factor: a.sigma_bar_factor,
        delta0_prior_halfwidth: a.delta0_halfwidth,
        nu_prior: GammaPrior {
            shape: a.nu_shape,
            rate: a.nu_rate,
        },
        standardize: !a.no_standardize,
        chains: a.chains,
        samples_per_chain: a.samples,
        warmup: a.warmup,
        thin: a.thin,
        seed: a.seed,
        workers: a.workers,
    }
}

fn record_model(m: &mut Manifest, a: &ModelArgs, rope: &RopeArgs) {
    let cfg = model_config(a);
    m.config("model", &a.model);
    m.config("rho", &a.rho);
    m.config("rope", rope_sizing(rope).describe());
    m.set("seed", cfg.seed);
    if a.model == "hierarchical" {
        m.config("chains", cfg.chains);
        m.config("samples_per_chain", cfg.samples_per_chain);
        m.config("warmup", cfg.warmup);
        m.config("thin", cfg.thin);
        m.config("workers", cfg.workers);
        m.config("standardize", cfg.standardize);
        m.config("sigma_bar_factor", cfg.sigma_bar_factor);
        m.config("delta0_prior_halfwidth", cfg.delta0_prior_halfwidth);
        m.config("nu_prior", format!("gamma(shape={}, rate={})", cfg.nu_prior.shape, cfg.nu_prior.rate));
    }
}

struct PairOutcome {
    triple: DecisionTriple,
    rope: RopeInterval,
    chains: Option<PosteriorChains>,
}

impl PairOutcome {
    fn convergence(&self) -> Convergence {
        self.chains.as_ref().map_or(Convergence::Converged, PosteriorChains::convergence)
    }
}

fn compare_pair(
    scores: &ScoreMatrix,
    a: &str,
    b: &str,
    metric: &str,
    dataset: Option<&str>,
    rope: &RopeArgs,
    model: &ModelArgs,
) -> Result<PairOutcome, CliError> {
    let mut series: Vec<DifferenceSeries> = assemble_differences(scores, a, b, metric, rho_policy(&model.rho)?)?;
    if let Some(d) = dataset {
        series.retain(|s| s.dataset_id == d);
        if series.is_empty() {
            return Err(CliError::Usage(format!("data set {d} is not scored for both {a} and {b}")));
        }
    }
    let rope = rope_sizing(rope).resolve(&series)?;
    if model.model == "ttest" {
        if series.len() != 1 {
            return Err(CliError::Usage(format!(
                "the t-test compares one data set, found {}; select one with --dataset",
                series.len()
            )));
        }
        let posterior = correlated_ttest(&series[0])?;
        return Ok(PairOutcome {
            triple: ttest_triple(&posterior, rope),
            rope,
            chains: None,
        });
    }
    let chains = fit(&series, &model_config(model))?;
    let triple = tally(&chains, rope)?;
    Ok(PairOutcome {
        triple,
        rope,
        chains: Some(chains),
    })
}

fn check_metric(scores: &ScoreMatrix, metric: &str) -> Result<(), CliError> {
    if scores.metrics().contains(metric) {
        Ok(())
    } else {
        let known: Vec<&str> = scores.metrics().into_iter().collect();
        Err(CliError::Usage(format!(
            "metric `{metric}` not found in scores (have: {})",
            known.join(", ")
        )))
    }
}

fn chains_extra(a: &str, b: &str, metric: &str, model: &ModelArgs, rope: RopeInterval) -> Vec<(String, String)> {
    vec![
        ("system_a".into(), a.into()),
        ("system_b".into(), b.into()),
        ("metric".into(), metric.into()),
        ("seed".into(), model.seed.to_string()),
        ("warmup".into(), model.warmup.to_string()),
        ("thin".into(), model.thin.to_string()),
        ("rho".into(), model.rho.clone()),
        ("rope_halfwidth".into(), rope.halfwidth().to_string()),
        ("scale".into(), "working (raw differences / standardization_constant)".into()),
    ]
}

fn not_converged(label: &str, c: &Convergence) -> Option<String> {
    match c {
        Convergence::Converged => None,
        Convergence::NotConverged { parameter, r_hat } => {
            Some(format!("{label}: not converged, R-hat of {parameter} is {r_hat:.3}"))
        }
    }
}

pub fn compare(a: &CompareArgs) -> Result<(), CliError> {
    let scores = read_scores(&a.scores)?;
    check_metric(&scores, &a.metric)?;
    let outcome = compare_pair(&scores, &a.a, &a.b, &a.metric, a.dataset.as_deref(), &a.rope, &a.model)?;

    create_dir(&a.out_dir)?;
    let manifest_path = a.out_dir.join("manifest.txt");
    let mref = reference(&manifest_path);
    let mut m = Manifest::new("compare");
    m.input("scores", &a.scores)?;
    m.config("system_a", &a.a);
    m.config("system_b", &a.b);
    m.config("metric", &a.metric);
    if let Some(d) = &a.dataset {
        m.config("dataset", d);
    }
    record_model(&mut m, &a.model, &a.rope);
    m.set("rope_halfwidth", outcome.rope.halfwidth());

    let report_path = a.out_dir.join("report.csv");
    let row = ReportRow {
        system_a: a.a.clone(),
        system_b: a.b.clone(),
        metric: a.metric.clone(),
        triple: outcome.triple,
        rope_halfwidth: outcome.rope.halfwidth(),
    };
    let file = File::create(&report_path).map_err(|e| io_error(&report_path, e))?;
    write_report(file, &[row], Some(&mref))?;
    m.output("report", &report_path);

    if let Some(chains) = &outcome.chains {
        let chains_path = a.out_dir.join("chains.csv");
        let extra = chains_extra(&a.a, &a.b, &a.metric, &a.model, outcome.rope);
        write_chains(&chains_path, chains, &extra, Some(&mref))?;
        m.output("chains", &chains_path);
        m.output("chains_meta", &chains_meta_path(&chains_path));
        m.set("standardization_constant", chains.standardization_constant);
        m.set("convergence", if chains.is_converged() { "converged" } else { "not converged" });
    }
    m.write(&manifest_path)?;

    let t = &outcome.triple;
    eprintln!(
        "{} vs {} on {}: p_left={:.4} p_rope={:.4} p_right={:.4} verdict={}",
        a.a, a.b, a.metric, t.p_left, t.p_rope, t.p_right, t.verdict
    );
    println!("{}", manifest_path.display());
    match not_converged(&format!("{} vs {}", a.a, a.b), &outcome.convergence()) {
        Some(msg) => Err(CliError::NotConverged(msg)),
        None => Ok(()),
    }
}

fn file_safe(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' })
        .collect()
}

pub fn rank(a: &RankArgs) -> Result<(), CliError> {
    let scores = read_scores(&a.scores)?;
    check_metric(&scores, &a.metric)?;
    let systems: Vec<String> = match &a.systems {
        Some(s) => s.clone(),
        None => scores.systems().into_iter().map(str::to_string).collect(),
    };
    if systems.len() < 2 {
        return Err(CliError::Usage(format!(
            "ranking needs at least two systems, got {}",
            systems.len()
        )));
    }
    let known = scores.systems();
    if let Some(missing) = systems.iter().find(|s| !known.contains(s.as_str())) {
        return Err(CliError::Usage(format!("system `{missing}` not found in scores")));
    }

    create_dir(&a.out_dir)?;
    let manifest_path = a.out_dir.join("manifest.txt");
    let mref = reference(&manifest_path);
    let mut m = Manifest::new("rank");
    m.input("scores", &a.scores)?;
    m.config("metric", &a.metric);
    m.config("systems", systems.join(","));
    record_model(&mut m, &a.model, &a.rope);

    let mut rows = Vec::new();
    let mut verdicts = Vec::new();
    let mut failures = Vec::new();
    for i in 0..systems.len() {
        for j in (i + 1)..systems.len() {
            let (sa, sb) = (&systems[i], &systems[j]);
            let outcome = compare_pair(&scores, sa, sb, &a.metric, None, &a.rope, &a.model)?;
            if let Some(msg) = not_converged(&format!("{sa} vs {sb}"), &outcome.convergence()) {
                failures.push(msg);
            }
            if let (true, Some(chains)) = (a.save_chains, &outcome.chains) {
                let path = a.out_dir.join(format!("chains_{}_vs_{}.csv", file_safe(sa), file_safe(sb)));
                let extra = chains_extra(sa, sb, &a.metric, &a.model, outcome.rope);
                write_chains(&path, chains, &extra, Some(&mref))?;
                m.output(&format!("chains.{sa}.{sb}"), &path);
            }
            verdicts.push(PairVerdict {
                a: sa.clone(),
                b: sb.clone(),
                verdict: outcome.triple.verdict,
            });
            rows.push(ReportRow {
                system_a: sa.clone(),
                system_b: sb.clone(),
                metric: a.metric.clone(),
                triple: outcome.triple,
                rope_halfwidth: outcome.rope.halfwidth(),
            });
        }
    }
    let ranking = rank_systems(&systems, &verdicts)?;

    let report_path = a.out_dir.join("report.csv");
    let file = File::create(&report_path).map_err(|e| io_error(&report_path, e))?;
    write_report(file, &rows, Some(&mref))?;
    m.output("report", &report_path);

    let mut text = format!("# manifest: {mref}\n");
    let width = systems.iter().map(String::len).max().unwrap_or(0).max(8);
    text.push_str(&format!(
        "{:<width$}  {:<width$}  {:>7}  {:>7}  {:>7}  relation\n",
        "system_a", "system_b", "p_left", "p_rope", "p_right"
    ));
    for (row, (sa, rel, sb)) in rows.iter().zip(&ranking.relations) {
        let t = &row.triple;
        text.push_str(&format!(
            "{:<width$}  {:<width$}  {:>7.3}  {:>7.3}  {:>7.3}  {sa} {} {sb}\n",
            row.system_a,
            row.system_b,
            t.p_left,
            t.p_rope,
            t.p_right,
            rel.symbol()
        ));
    }
    match &ranking.chain {
        Some(chain) => text.push_str(&format!("{}: {chain}\n", a.metric)),
        None => {
            text.push_str(&format!("{}: no consistent ordering\n", a.metric));
            for inc in &ranking.inconsistencies {
                text.push_str(&format!("  {inc}\n"));
            }
        }
    }
    let ranking_path = a.out_dir.join("ranking.txt");
    write_file(&ranking_path, &text)?;
    m.output("ranking", &ranking_path);
    m.set("chain", ranking.chain.as_deref().unwrap_or("none"));
    m.write(&manifest_path)?;

    print!("{}", text.split_once('\n').map_or("", |(_, rest)| rest));
    println!("{}", manifest_path.display());
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::NotConverged(failures.join("; ")))
    }
}

pub fn plot(a: &PlotArgs) -> Result<(), CliError> {
    let chains = read_chains(&a.chains)?;
    let meta_path = chains_meta_path(&a.chains);
    let meta_text = std::fs::read_to_string(&meta_path).map_err(|e| io_error(&meta_path, e))?;
    let meta = parse_key_values(&meta_text)?;
    let meta_get = |k: &str| meta.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
    let system_a = meta_get("system_a").unwrap_or_else(|| "A".into());
    let system_b = meta_get("system_b").unwrap_or_else(|| "B".into());

    let mut m = Manifest::new("plot");
    m.input("chains", &a.chains)?;
    m.input("chains_meta", &meta_path)?;
    let (triple, halfwidth) = match &a.report {
        Some(path) => {
            m.input("report", path)?;
            let file = File::open(path).map_err(|e| io_error(path, e))?;
            let rows = read_report(file, &path.display().to_string())?;
            let row = rows
                .iter()
                .find(|r| r.system_a == system_a && r.system_b == system_b)
                .or_else(|| rows.first())
                .ok_or_else(|| CliError::Usage(format!("{}: no report rows", path.display())))?;
            (row.triple, row.rope_halfwidth)
        }
        None => {
            let h = a.rope.expect("clap requires --rope without --report");
            let rope = RopeInterval::new(h)?;
            (tally(&chains, rope)?, h)
        }
    };
    m.config("rope_halfwidth", halfwidth);

    let points = simplex_points(chains.hyper_draws(), halfwidth / chains.standardization_constant);
    let svg = render_simplex_svg(&points, &system_b, &system_a, &triple);
    let manifest_path = beside(&a.out);
    let comment = format!("<!-- manifest: {} -->\n", reference(&manifest_path));
    let svg = match svg.split_once('\n') {
        Some((decl, rest)) => format!("{decl}\n{comment}{rest}"),
        None => svg,
    };
    write_file(&a.out, &svg)?;
    m.output("plot", &a.out);
    m.write(&manifest_path)?;
    println!("{}", manifest_path.display());
    Ok(())
}

pub fn generate(a: &GenerateArgs) -> Result<(), CliError> {
    let mut matrix = ScoreMatrix::new();
    let rho = a.rho.unwrap_or(1.0 / a.k as f64);
    let mut insert = |system: &str, dataset: &str, j: usize, score: f64| -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&score) {
            return Err(CliError::Usage(format!(
                "simulated score {score} for {system} leaves [0, 1]; adjust --base or the offsets"
            )));
        }
        matrix.insert(ScoreKey::new(dataset, system, &a.metric, j / a.k, j % a.k), Some(score))?;
        Ok(())
    };
    for (idx, (name, delta0)) in a.systems.iter().enumerate() {
        let params = GenerateParams {
            delta0: *delta0,
            sigma0: a.sigma0,
            nu: a.nu,
            q: a.q,
            m: a.m,
            k: a.k,
            rho,
            sigma_range: (a.sigma_lo, a.sigma_hi),
            seed: a.seed.wrapping_add(idx as u64),
        };
        for s in simulate(&params)? {
            for (j, x) in s.x.iter().enumerate() {
                insert(name, &s.dataset_id, j, a.base + x)?;
            }
        }
    }
    if let Some(r) = &a.reference {
        for i in 0..a.q {
            for j in 0..a.m * a.k {
                insert(r, &format!("d{i}"), j, a.base)?;
            }
        }
    }
    let manifest_path = beside(&a.out);
    let file = File::create(&a.out).map_err(|e| io_error(&a.out, e))?;
    matrix.write_csv(file, Some(&reference(&manifest_path)))?;
    let mut m = Manifest::new("generate");
    for (name, d) in &a.systems {
        m.config(&format!("system.{name}.delta0"), d);
    }
    if let Some(r) = &a.reference {
        m.config("reference", r);
    }
    m.config("base", a.base);
    m.config("sigma0", a.sigma0);
    m.config("nu", a.nu);
    m.config("q", a.q);
    m.config("m", a.m);
    m.config("k", a.k);
    m.config("rho", rho);
    m.config("sigma_range", format!("{},{}", a.sigma_lo, a.sigma_hi));
    m.config("metric", &a.metric);
    m.set("seed", a.seed);
    m.output("scores", &a.out);
    m.write(&manifest_path)?;
    println!("{}", manifest_path.display());
    Ok(())
}
