use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use falsematch::builder::{
    build_corpus, make_nonmetamorphic, BuildOptions, HttpGenerator, HttpGeneratorConfig, RecordedGenerator,
    RuleBasedGenerator, TextGenerator,
};
use falsematch::config::RunConfig;
use falsematch::corpus::{parse_corpus, parse_pairs, serialize_corpus, serialize_pairs, Corpus, MrCategory};
use falsematch::embedding::{ProviderSpec, VectorEncoding, VectorFile};
use falsematch::io::write_atomic;
use falsematch::scorer::{Cassette, CassetteScorer, ContainmentScorer, HttpScorer, JaccardScorer, Scorer, ScorerSpec};
use falsematch::simulate::{
    accuracy_drop, evaluate_cached, evaluate_with_scorer, merge_dumps, parse_dump, serialize_dump, EmbeddingCache,
    EvalOptions, EvalReport, Evaluation, MethodSpec, OutcomeDump, ScoreOrder,
};
use falsematch::tables::{accuracy_table, distance_table, drop_table, plot_table, report_table, Table};
use falsematch::tagger::MrTagger;
use falsematch::{ExecMode, MetricId};

use crate::failure::{CmdResult, Failure};
use crate::{BuildArgs, Cli, Command, EmbedArgs, EvalArgs, ReportArgs, TagArgs, TransformArgs};

/// Share of failed pairs above which `build` exits with status 1.
const MAX_BUILD_FAILURE_RATE: f64 = 0.10;

struct Env {
    config: RunConfig,
    exec: ExecMode,
}

pub fn run(cli: Cli) -> CmdResult {
    let config = match &cli.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            cfg.check_paths()?;
            cfg
        }
        None => RunConfig::default(),
    };
    let ctx = Env {
        config,
        exec: if cli.sequential {
            ExecMode::Sequential
        } else {
            ExecMode::Parallel
        },
    };
    match cli.command {
        Command::Tag(a) => tag(&ctx, a),
        Command::Build(a) => build(&ctx, a),
        Command::Transform(a) => transform(a),
        Command::Embed(a) => embed(&ctx, a),
        Command::Eval(a) => eval(&ctx, a),
        Command::Report(a) => report(a),
    }
}

fn write(path: &Path, text: &str) -> anyhow::Result<()> {
    write_atomic(path, text.as_bytes()).with_context(|| format!("writing {}", path.display()))
}

/// `dir/stem.suffix` next to `path`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn read_corpus(path: &Path) -> anyhow::Result<Corpus> {
    parse_corpus(open(path)?).with_context(|| format!("reading corpus {}", path.display()))
}

fn required<T>(value: Option<T>, what: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| anyhow!("{what} is required (flag or config)"))
}

fn tag(ctx: &Env, a: TagArgs) -> CmdResult {
    let input = required(a.input.or_else(|| ctx.config.pairs.clone()), "--input")?;
    let output = a.output.unwrap_or_else(|| sibling(&input, "tagged.jsonl"));
    let mut records = parse_pairs(open(&input)?).with_context(|| format!("reading pairs {}", input.display()))?;
    let tagger = MrTagger::default();
    let mut histogram: BTreeMap<MrCategory, usize> = BTreeMap::new();
    for r in &mut records {
        let c = tagger.tag(&r.to_pair());
        r.category = Some(c);
        *histogram.entry(c).or_default() += 1;
    }
    write(&output, &serialize_pairs(&records))?;
    println!("{}", serde_json::to_string(&histogram).expect("histogram serializes"));
    Ok(())
}

fn generator(ctx: &Env, a: &BuildArgs) -> anyhow::Result<Box<dyn TextGenerator>> {
    if a.stub {
        return Ok(Box::new(RuleBasedGenerator));
    }
    if let Some(path) = &a.recorded {
        return Ok(Box::new(RecordedGenerator::load(path)?));
    }
    let cfg = ctx.config.generator.as_ref();
    let endpoint = a
        .gen_endpoint
        .clone()
        .or_else(|| cfg.map(|g| g.endpoint.clone()))
        .ok_or_else(|| anyhow!("choose a generator: --stub, --recorded FILE or --gen-endpoint URL"))?;
    Ok(Box::new(HttpGenerator::new(HttpGeneratorConfig {
        endpoint,
        api_key_env: cfg.and_then(|g| g.api_key_env.clone()),
        timeout: Duration::from_secs(cfg.map_or(60, |g| g.timeout_secs)),
        retries: cfg.map_or(3, |g| g.retries),
    })))
}

fn build(ctx: &Env, a: BuildArgs) -> CmdResult {
    let input = required(a.input.clone().or_else(|| ctx.config.pairs.clone()), "--input")?;
    let seed = required(a.seed.or(ctx.config.seed), "--seed")?;
    let output = a.output.clone().unwrap_or_else(|| sibling(&input, "corpus.jsonl"));
    let gen = generator(ctx, &a)?;
    let records = parse_pairs(open(&input)?).with_context(|| format!("reading pairs {}", input.display()))?;
    let tagger = MrTagger::default();
    let pairs: Vec<_> = records
        .iter()
        .map(|r| {
            let pair = r.to_pair();
            let category = r.category.unwrap_or_else(|| tagger.tag(&pair));
            (pair, category)
        })
        .collect();
    let name = a.name.clone().unwrap_or_else(|| {
        output
            .file_stem()
            .and_then(|s| s.to_str())
            .map(|s| s.trim_end_matches(".corpus").to_string())
            .unwrap_or_default()
    });
    let mut opts = BuildOptions::new(seed);
    opts.exec = ctx.exec;
    if let Some(n) = a.max_in_flight.or(ctx.config.max_in_flight) {
        opts.max_in_flight = n.max(1);
    }
    let outcome = build_corpus(&name, &pairs, gen.as_ref(), &opts);
    write(&output, &serialize_corpus(&outcome.corpus))?;
    for f in &outcome.failures {
        eprintln!("failed {} ({}): {}", f.id, f.category, f.error);
    }
    eprintln!(
        "built {} triplets, {} failed, {} skipped",
        outcome.corpus.len(),
        outcome.failures.len(),
        outcome.skipped.len()
    );
    if outcome.failure_rate() > MAX_BUILD_FAILURE_RATE {
        return Err(Failure::Partial(format!(
            "{:.1}% of pairs failed (limit {:.0}%)",
            outcome.failure_rate() * 100.0,
            MAX_BUILD_FAILURE_RATE * 100.0
        )));
    }
    Ok(())
}

fn transform(a: TransformArgs) -> CmdResult {
    debug_assert!(a.non_metamorphic);
    let corpus = read_corpus(&a.input)?;
    let restoring = corpus.metadata.nonmetamorphic;
    let out = make_nonmetamorphic(&corpus);
    if !restoring && out.metadata.unpaired.len() == corpus.len() && !corpus.is_empty() {
        log::warn!("no triplet found a swap partner; negatives are unchanged");
    }
    let output = a.output.unwrap_or_else(|| {
        sibling(
            &a.input,
            if restoring {
                "restored.jsonl"
            } else {
                "nonmetamorphic.jsonl"
            },
        )
    });
    write(&output, &serialize_corpus(&out))?;
    Ok(())
}

fn embed(ctx: &Env, a: EmbedArgs) -> CmdResult {
    let path = required(a.corpus.or_else(|| ctx.config.corpus.clone()), "--corpus")?;
    let corpus = read_corpus(&path)?;
    let spec: ProviderSpec = a.provider.parse().map_err(|e: String| anyhow!(e))?;
    let embedder = spec.build()?;
    let encoding = if a.binary {
        VectorEncoding::Binary
    } else {
        VectorEncoding::Decimal
    };
    let mut file = VectorFile::new(embedder.model_id(), embedder.dimension(), encoding);
    let texts = corpus.distinct_texts();
    let mut failed = 0usize;
    for (text, v) in texts.iter().zip(embedder.embed_batch(&texts)) {
        match v.and_then(|v| file.insert(text, v, a.keep_text)) {
            Ok(()) => {}
            Err(e) => {
                failed += 1;
                log::error!("embedding {text:?}: {e}");
            }
        }
    }
    if failed > 0 {
        return Err(Failure::Partial(format!(
            "{failed} of {} texts could not be embedded",
            texts.len()
        )));
    }
    write(&a.output, &file.to_text())?;
    eprintln!("wrote {} vectors of dimension {}", file.len(), file.header.dimension);
    Ok(())
}

fn method_specs(ctx: &Env, a: &EvalArgs) -> anyhow::Result<Vec<MethodSpec>> {
    let mut methods = Vec::new();
    for m in &a.methods {
        methods.push(m.parse::<MethodSpec>().map_err(|e| anyhow!(e))?);
    }
    let providers: Vec<ProviderSpec> = if a.providers.is_empty() {
        ctx.config.provider_specs()?
    } else {
        a.providers
            .iter()
            .map(|p| p.parse().map_err(|e: String| anyhow!(e)))
            .collect::<anyhow::Result<_>>()?
    };
    let metrics: Vec<MetricId> = if a.metrics.is_empty() {
        ctx.config.metrics.clone()
    } else {
        a.metrics
            .iter()
            .map(|m| m.parse().map_err(|e: String| anyhow!(e)))
            .collect::<anyhow::Result<_>>()?
    };
    if providers.is_empty() != metrics.is_empty() {
        bail!("providers and metrics must be given together");
    }
    for p in &providers {
        for m in &metrics {
            methods.push(MethodSpec::new(p.clone(), *m));
        }
    }
    Ok(methods)
}

fn scorers(ctx: &Env, a: &EvalArgs) -> anyhow::Result<Vec<Box<dyn Scorer>>> {
    let mut out: Vec<Box<dyn Scorer>> = Vec::new();
    for s in &a.scorer {
        let scorer: Box<dyn Scorer> = match s.as_str() {
            "containment" => Box::new(ContainmentScorer),
            "jaccard" => Box::new(JaccardScorer),
            _ if s.starts_with("cassette:") => {
                let path = Path::new(&s["cassette:".len()..]);
                let id = path.file_stem().and_then(|x| x.to_str()).unwrap_or("cassette");
                let id = id.trim_end_matches(".cassette");
                Box::new(CassetteScorer::new(id, Cassette::load(path)?, true))
            }
            _ if s.starts_with("http://") || s.starts_with("https://") => {
                let mut spec = ScorerSpec::new(s.clone());
                spec.order_sensitive = true;
                Box::new(HttpScorer::new(spec))
            }
            _ => bail!("unknown scorer {s:?}"),
        };
        out.push(scorer);
    }
    if a.scorer.is_empty() {
        for spec in &ctx.config.scorers {
            out.push(Box::new(HttpScorer::new(spec.clone())));
        }
    }
    Ok(out)
}

/// All method and scorer outcomes for one corpus, in a fixed order.
fn run_all(
    corpus: &Corpus,
    methods: &[MethodSpec],
    scorers: &[Box<dyn Scorer>],
    reverse: bool,
    opts: &EvalOptions,
    cache: &mut EmbeddingCache,
) -> anyhow::Result<Evaluation> {
    let mut eval = Evaluation {
        corpus_name: corpus.metadata.name.clone(),
        corpus_hash: corpus.content_hash(),
        outcomes: Vec::new(),
    };
    if !methods.is_empty() {
        eval.outcomes
            .extend(evaluate_cached(corpus, methods, opts, cache)?.outcomes);
    }
    for s in scorers {
        eval.outcomes
            .extend(evaluate_with_scorer(corpus, s.as_ref(), ScoreOrder::Forward, opts)?.outcomes);
        if reverse && s.order_sensitive() {
            eval.outcomes
                .extend(evaluate_with_scorer(corpus, s.as_ref(), ScoreOrder::Reverse, opts)?.outcomes);
        }
    }
    Ok(eval)
}

fn write_table(dir: &Path, name: &str, t: &Table) -> anyhow::Result<()> {
    write(&dir.join(format!("{name}.csv")), &t.to_csv())?;
    write(&dir.join(format!("{name}.txt")), &t.to_pretty())
}

fn write_report_tables(dir: &Path, report: &EvalReport) -> anyhow::Result<()> {
    write_table(dir, "accuracy", &accuracy_table(report))?;
    write_table(dir, "distances", &distance_table(report))?;
    write_table(dir, "report", &report_table(report))
}

fn check_methods(report: &EvalReport, which: &str) -> CmdResult {
    let empty = report.empty_methods();
    if empty.is_empty() {
        Ok(())
    } else {
        Err(Failure::Partial(format!(
            "no valid outcomes on the {which} corpus for: {}",
            empty.join(", ")
        )))
    }
}

fn eval(ctx: &Env, a: EvalArgs) -> CmdResult {
    let methods = method_specs(ctx, &a)?;
    let scorers = scorers(ctx, &a)?;
    if methods.is_empty() && scorers.is_empty() {
        return Err(Failure::Usage(anyhow!(
            "nothing to evaluate: give --methods, --providers with --metrics, or --scorer"
        )));
    }
    let corpus_path = required(a.corpus.clone().or_else(|| ctx.config.corpus.clone()), "--corpus")?;
    let out_dir = required(
        a.output_dir.clone().or_else(|| ctx.config.output_dir.clone()),
        "--output-dir",
    )?;
    let control_path = a.control.clone().or_else(|| ctx.config.control_corpus.clone());
    let corpus = read_corpus(&corpus_path)?;
    let control = control_path.as_deref().map(read_corpus).transpose()?;
    if corpus.is_empty() {
        return Err(Failure::Usage(anyhow!("corpus {} is empty", corpus_path.display())));
    }

    let mut opts = EvalOptions {
        exec: ctx.exec,
        ..EvalOptions::default()
    };
    if let Some(e) = a.eps_scale.or(ctx.config.eps_scale) {
        opts.eps_scale = e;
    }
    if let Some(n) = a.max_in_flight.or(ctx.config.max_in_flight) {
        opts.max_in_flight = n.max(1);
    }

    let mut cache = EmbeddingCache::new();
    let eval = run_all(&corpus, &methods, &scorers, a.reverse, &opts, &mut cache)?;
    let report = eval.report();
    write(&out_dir.join("outcomes.jsonl"), &serialize_dump(&eval.dump()))?;
    write_report_tables(&out_dir, &report)?;
    print!("{}", accuracy_table(&report).to_pretty());

    let mut status = check_methods(&report, "metamorphic");
    if let Some(control) = control {
        let ctrl = run_all(&control, &methods, &scorers, a.reverse, &opts, &mut cache)?;
        let ctrl_report = ctrl.report();
        write(&out_dir.join("control.outcomes.jsonl"), &serialize_dump(&ctrl.dump()))?;
        let drop = drop_table(&accuracy_drop(&report, &ctrl_report));
        write_table(&out_dir, "drop", &drop)?;
        println!();
        print!("{}", drop.to_pretty());
        if status.is_ok() {
            status = check_methods(&ctrl_report, "control");
        }
    }
    status
}

fn report(a: ReportArgs) -> CmdResult {
    let mut dumps: Vec<OutcomeDump> = Vec::new();
    for path in &a.dumps {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        dumps.push(parse_dump(&text).with_context(|| format!("parsing {}", path.display()))?);
    }
    let merged = merge_dumps(dumps)?;
    let report = EvalReport::from_outcomes(&merged.outcomes);
    write_report_tables(&a.output_dir, &report)?;
    if a.plot {
        write(&a.output_dir.join("plot.csv"), &plot_table(&report).to_csv())?;
    }
    print!("{}", report_table(&report).to_pretty());
    Ok(())
}
