use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use geoburst::eval::BaseGrid;
use geoburst::search::{top_k, IndexedPattern};
use geoburst::stlocal::mine_term;
use geoburst::synth::{DistanceRule, Rounding};
use geoburst::temporal::significant_intervals;
use geoburst::{
    build_index, extract_patterns, AggregateFn, BaselineModel, Corpus, ExperimentConfig, GeneratorConfig,
    GeneratorMode, InvertedIndex, Method, PatternIndex, PatternKind, StreamId, TemporalInterval,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::args::*;
use crate::config::{render, Entry};
use crate::formats::{self, load_corpus, sorted_terms, to_json, to_json_line};
use crate::output::Stage;
use crate::UsageError;

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::Mine(a) => mine(a),
        Command::Generate(a) => generate(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Index(a) => index(a),
        Command::Search(a) => search(a),
        Command::Stats(a) => stats(a),
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn baseline(args: &BaselineArgs) -> Result<BaselineModel> {
    Ok(match args.baseline {
        BaselineKind::RunningMean => BaselineModel::RunningMean,
        BaselineKind::WindowMean => {
            if args.window == 0 {
                bail!(UsageError("--window must be at least 1".into()));
            }
            BaselineModel::WindowMean(args.window)
        }
        BaselineKind::External => {
            let path = args
                .expected
                .as_deref()
                .ok_or_else(|| UsageError("--baseline external needs --expected".into()))?;
            BaselineModel::External(formats::read_expected(path)?)
        }
    })
}

/// Terms to mine: the requested ones present in the corpus, or all of them.
fn selected_terms(corpus: &Corpus, wanted: &Option<Vec<String>>) -> Vec<String> {
    let all = sorted_terms(corpus);
    match wanted {
        None => all,
        Some(w) => {
            let mut w: Vec<String> = w.iter().map(|t| t.trim().to_owned()).filter(|t| corpus.term_id(t).is_some()).collect();
            w.sort_unstable();
            w.dedup();
            w
        }
    }
}

fn ingest(args: IngestArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let mut stage = Stage::new();
    stage.dir(&args.output)?;
    let summary = serde_json::json!({
        "streams": corpus.stream_count(),
        "timeline": corpus.timeline_length(),
        "documents": corpus.documents().len(),
        "terms": corpus.vocabulary().len(),
    });
    stage.write(&args.output.join("summary.json"), to_json(&summary)? + "\n")?;
    let mut out = stage.create(&args.output.join("streams.json"))?;
    formats::write_streams(&mut out, corpus.streams())?;
    out.flush()?;
    drop(out);
    let mut out = stage.create(&args.output.join("frequencies.csv"))?;
    formats::write_frequencies(&mut out, &corpus)?;
    out.flush()?;
    drop(out);
    stage.commit()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalRecord {
    pub stream: String,
    pub l: usize,
    pub r: usize,
    pub score: f64,
}

impl From<&TemporalInterval> for IntervalRecord {
    fn from(i: &TemporalInterval) -> Self {
        Self {
            stream: i.stream.to_string(),
            l: i.l,
            r: i.r,
            score: i.burstiness,
        }
    }
}

/// One record of a patterns file. The `type` tag names the pattern family.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum PatternRecord {
    Temporal {
        term: String,
        stream: String,
        l: usize,
        r: usize,
        score: f64,
    },
    Combinatorial {
        term: String,
        streams: Vec<String>,
        timeframe: (usize, usize),
        score: f64,
        members: Vec<IntervalRecord>,
    },
    Regional {
        term: String,
        streams: Vec<String>,
        bounds: [f64; 4],
        timeframe: (usize, usize),
        score: f64,
        /// Members bursty at most of the window's timestamps.
        bursty: Vec<String>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternFile {
    pub kind: String,
    pub patterns: Vec<PatternRecord>,
}

fn temporal_records(corpus: &Corpus, term: &str, rounds: usize, seed: u64) -> Vec<TemporalInterval> {
    let id = corpus.term_id(term).expect("selected term");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id.0 as u64 + 1);
    let mut out = Vec::new();
    for (s, meta) in corpus.streams().iter().enumerate() {
        out.extend(significant_intervals(&meta.id, corpus.series_values(s, id), rounds, &mut rng));
    }
    out
}

fn comb_records(term: &str, pool: &[TemporalInterval]) -> Vec<PatternRecord> {
    extract_patterns(term, pool, None)
        .into_iter()
        .map(|p| PatternRecord::Combinatorial {
            term: p.term,
            streams: p.streams.iter().map(|s| s.to_string()).collect(),
            timeframe: p.timeframe,
            score: p.score,
            members: p.members.iter().map(IntervalRecord::from).collect(),
        })
        .collect()
}

fn sorted_ids(corpus: &Corpus, members: &[usize]) -> Vec<String> {
    let mut ids: Vec<String> = members.iter().map(|&m| corpus.streams()[m].id.to_string()).collect();
    ids.sort_unstable();
    ids
}

fn local_records(corpus: &Corpus, term: &str, model: &BaselineModel) -> Result<Vec<PatternRecord>> {
    let id = corpus.term_id(term).expect("selected term");
    let ids: Vec<&str> = corpus.streams().iter().map(|s| s.id.as_str()).collect();
    let run = mine_term(term, &ids, &corpus.locations(), &corpus.term_matrix(id), model)?;
    Ok(run
        .windows
        .into_iter()
        .map(|w| PatternRecord::Regional {
            term: w.term.clone(),
            streams: sorted_ids(corpus, w.region.members()),
            bounds: w.bounds.to_array(),
            timeframe: w.timeframe,
            score: w.w_score,
            bursty: sorted_ids(corpus, &w.bursty),
        })
        .collect())
}

fn read_patterns(path: &Path) -> Result<PatternFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("{}: malformed patterns file", path.display()))
}

/// Temporal intervals of a patterns file, grouped by term.
fn interval_pool(file: PatternFile, path: &Path) -> Result<BTreeMap<String, Vec<TemporalInterval>>> {
    ensure!(file.kind == "temporal", "{}: expected temporal intervals, found `{}` patterns", path.display(), file.kind);
    let mut pools: BTreeMap<String, Vec<TemporalInterval>> = BTreeMap::new();
    for rec in file.patterns {
        let PatternRecord::Temporal { term, stream, l, r, score } = rec else {
            bail!("{}: non-temporal record in a temporal file", path.display());
        };
        ensure!(1 <= l && l <= r, "{}: invalid interval [{l}:{r}] for stream {stream}", path.display());
        ensure!(score.is_finite(), "{}: non-finite score for stream {stream}", path.display());
        pools.entry(term).or_default().push(TemporalInterval {
            stream: StreamId::from(stream),
            l,
            r,
            burstiness: score,
        });
    }
    Ok(pools)
}

fn mine(args: MineArgs) -> Result<()> {
    let pool = pool(args.threads)?;
    let (kind, patterns) = match (args.kind, &args.intervals) {
        (MineType::Comb, Some(path)) => {
            let mut pools = interval_pool(read_patterns(path)?, path)?;
            if let Some(wanted) = &args.terms {
                pools.retain(|t, _| wanted.iter().any(|w| w.trim() == t));
            }
            let patterns = pool.install(|| pools.par_iter().map(|(t, p)| comb_records(t, p)).collect::<Vec<_>>());
            ("combinatorial", patterns.into_iter().flatten().collect())
        }
        (_, Some(_)) => bail!(UsageError("--intervals only applies to --type comb".into())),
        (kind, None) => {
            let corpus = load_corpus(&args.corpus)?;
            let terms = selected_terms(&corpus, &args.terms);
            let model = baseline(&args.baseline)?;
            let per_term: Vec<Vec<PatternRecord>> = pool.install(|| {
                terms
                    .par_iter()
                    .map(|t| -> Result<Vec<PatternRecord>> {
                        Ok(match kind {
                            MineType::Temporal => temporal_records(&corpus, t, args.null_rounds, args.seed)
                                .into_iter()
                                .map(|i| PatternRecord::Temporal {
                                    term: t.clone(),
                                    stream: i.stream.to_string(),
                                    l: i.l,
                                    r: i.r,
                                    score: i.burstiness,
                                })
                                .collect(),
                            MineType::Comb => comb_records(t, &temporal_records(&corpus, t, args.null_rounds, args.seed)),
                            MineType::Local => local_records(&corpus, t, &model)?,
                        })
                    })
                    .collect::<Result<_>>()
            })?;
            let kind = match kind {
                MineType::Temporal => "temporal",
                MineType::Comb => "combinatorial",
                MineType::Local => "regional",
            };
            (kind, per_term.into_iter().flatten().collect())
        }
    };
    let file = PatternFile {
        kind: kind.to_owned(),
        patterns,
    };
    let mut stage = Stage::new();
    stage.write(&args.output, to_json(&file)? + "\n")?;
    stage.commit()
}

fn generator_config(args: &GeneratorArgs) -> GeneratorConfig {
    GeneratorConfig {
        timeline: args.timeline,
        streams: args.stream_count,
        terms: args.term_count,
        patterns: args.pattern_count,
        background_rate: args.background_rate,
        rounding: match args.rounding {
            RoundingArg::Nearest => Rounding::Nearest,
            RoundingArg::Stochastic => Rounding::Stochastic,
        },
        shape: args.shape,
        scale: args.scale,
        peak: args.peak,
        tau_scale: args.tau_scale,
        distance_rule: match args.distance_rule {
            DistanceRuleArg::Decaying => DistanceRule::Decaying,
            DistanceRuleArg::Proportional => DistanceRule::Proportional,
        },
        seed: args.seed,
        ..GeneratorConfig::default()
    }
}

fn mode(m: ModeArg) -> GeneratorMode {
    match m {
        ModeArg::Distgen => GeneratorMode::Distgen,
        ModeArg::Randgen => GeneratorMode::Randgen,
    }
}

fn generator_entries(args: &GeneratorArgs) -> Vec<Entry> {
    let e = |k: &str, v: String| Entry { key: k.to_owned(), value: v };
    let range = |(lo, hi): (f64, f64)| format!("{lo},{hi}");
    vec![
        e("seed", args.seed.to_string()),
        e("timeline", args.timeline.to_string()),
        e("stream-count", args.stream_count.to_string()),
        e("term-count", args.term_count.to_string()),
        e("pattern-count", args.pattern_count.to_string()),
        e("background-rate", args.background_rate.to_string()),
        e("rounding", format!("{:?}", args.rounding).to_lowercase()),
        e("shape", range(args.shape)),
        e("scale", range(args.scale)),
        e("peak", range(args.peak)),
        e("tau-scale", args.tau_scale.to_string()),
        e("distance-rule", format!("{:?}", args.distance_rule).to_lowercase()),
    ]
}

fn generate(args: GenerateArgs) -> Result<()> {
    let config = generator_config(&args.generator);
    let data = geoburst::generate(&config, mode(args.mode)).context("invalid generator settings")?;
    let mut stage = Stage::new();
    stage.dir(&args.output)?;
    let mut out = stage.create(&args.output.join("streams.json"))?;
    formats::write_streams(&mut out, &data.streams)?;
    out.flush()?;
    drop(out);

    let mut writer = formats::frequency_writer(stage.create(&args.output.join("frequencies.csv"))?);
    for (t, name) in data.terms.iter().enumerate() {
        formats::write_term_rows(&mut writer, name, &data.streams, &data.term_matrix(t))?;
    }
    writer.flush()?;
    drop(writer);

    stage.write(&args.output.join("ground_truth.json"), to_json(&data.truth)? + "\n")?;
    let mut entries = vec![
        Entry { key: "streams".into(), value: "streams.json".into() },
        Entry { key: "frequencies".into(), value: "frequencies.csv".into() },
        Entry { key: "mode".into(), value: format!("{:?}", args.mode).to_lowercase() },
    ];
    entries.extend(generator_entries(&args.generator));
    stage.write(&args.output.join("run.conf"), render(&entries))?;
    stage.commit()
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    if args.modes.is_empty() || args.methods.is_empty() {
        bail!(UsageError("--modes and --methods need at least one value".into()));
    }
    let config = ExperimentConfig {
        generator: generator_config(&args.generator),
        modes: args.modes.iter().copied().map(mode).collect(),
        methods: args
            .methods
            .iter()
            .map(|m| match m {
                MethodArg::Stlocal => Method::StLocal,
                MethodArg::Stcomb => Method::StComb,
                MethodArg::Base => Method::Base,
            })
            .collect(),
        baseline: baseline(&args.baseline)?,
        base_grid: BaseGrid::default(),
        depth: (args.depth > 0).then_some(args.depth),
        null_rounds: args.null_rounds,
    };
    let report = pool(args.threads)?.install(|| geoburst::run_experiment(&config))?;
    let mut stage = Stage::new();
    stage.write(&args.output, report.to_csv())?;
    if let Some(path) = &args.timing {
        let mut csv = String::from("method,generator,streams,ms_per_term\n");
        for r in &report.rows {
            csv.push_str(&format!(
                "{},{},{},{:.4}\n",
                r.method,
                format!("{:?}", r.mode).to_uppercase(),
                config.generator.streams,
                r.ms_per_term
            ));
        }
        stage.write(path, csv)?;
    }
    stage.commit()
}

fn index(args: IndexArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let file = read_patterns(&args.patterns)?;
    let kind = match file.kind.as_str() {
        "combinatorial" => PatternKind::Comb,
        "regional" => PatternKind::Local,
        other => bail!("{}: cannot index `{other}` patterns; mine comb or local patterns first", args.patterns.display()),
    };
    let mut patterns = PatternIndex::new(kind);
    for rec in file.patterns {
        let (term, streams, timeframe, score) = match (rec, kind) {
            (PatternRecord::Combinatorial { term, streams, timeframe, score, .. }, PatternKind::Comb)
            | (PatternRecord::Regional { term, streams, timeframe, score, .. }, PatternKind::Local) => {
                (term, streams, timeframe, score)
            }
            _ => bail!("{}: record type does not match `{}`", args.patterns.display(), file.kind),
        };
        let positions = streams
            .iter()
            .map(|s| corpus.stream_position(s))
            .collect::<geoburst::Result<Vec<_>>>()
            .with_context(|| format!("{}: term {term}", args.patterns.display()))?;
        patterns.insert(&term, IndexedPattern::new(positions, timeframe.0, timeframe.1, score)?);
    }
    let aggregate = match args.aggregate {
        AggregateArg::Max => AggregateFn::Max,
        AggregateArg::Min => AggregateFn::Min,
        AggregateArg::Median => AggregateFn::Median,
        AggregateArg::Mean => AggregateFn::Mean,
    };
    let built = build_index(&corpus, &patterns, aggregate);
    let mut stage = Stage::new();
    stage.write(&args.output, to_json(&built)? + "\n")?;
    stage.commit()
}

#[derive(Serialize)]
struct SearchHit<'a> {
    rank: usize,
    doc_id: &'a str,
    score: f64,
    contributions: &'a BTreeMap<String, f64>,
}

fn search(args: SearchArgs) -> Result<()> {
    if args.k == 0 {
        bail!(UsageError("--k must be at least 1".into()));
    }
    let terms: Vec<&str> = args.query.split_whitespace().collect();
    if terms.is_empty() {
        bail!(UsageError("--query needs at least one term".into()));
    }
    let text = std::fs::read_to_string(&args.index).with_context(|| format!("cannot read {}", args.index.display()))?;
    let index: InvertedIndex =
        serde_json::from_str(&text).with_context(|| format!("{}: malformed index", args.index.display()))?;
    if let Some(want) = args.pattern_type {
        let want = match want {
            PatternTypeArg::Comb => PatternKind::Comb,
            PatternTypeArg::Local => PatternKind::Local,
        };
        ensure!(
            index.kind() == want,
            "{} was built from {:?} patterns, not {:?}",
            args.index.display(),
            index.kind(),
            want
        );
    }
    let hits = top_k(&index, &terms, args.k)?;
    let mut lines = String::new();
    for (i, d) in hits.results.iter().enumerate() {
        let hit = SearchHit {
            rank: i + 1,
            doc_id: &d.doc_id,
            score: d.score,
            contributions: &d.contributions,
        };
        lines.push_str(&to_json_line(&hit)?);
        lines.push('\n');
    }
    match &args.output {
        Some(path) => {
            let mut stage = Stage::new();
            stage.write(path, lines)?;
            stage.commit()
        }
        None => {
            std::io::stdout().write_all(lines.as_bytes())?;
            Ok(())
        }
    }
}

fn stats(args: StatsArgs) -> Result<()> {
    let corpus = load_corpus(&args.corpus)?;
    let terms = selected_terms(&corpus, &args.terms);
    let model = baseline(&args.baseline)?;
    let ids: Vec<&str> = corpus.streams().iter().map(|s| s.id.as_str()).collect();
    let locations = corpus.locations();
    let runs = pool(args.threads)?.install(|| {
        terms
            .par_iter()
            .map(|t| {
                let id = corpus.term_id(t).expect("selected term");
                mine_term(t, &ids, &locations, &corpus.term_matrix(id), &model)
            })
            .collect::<geoburst::Result<Vec<_>>>()
    })?;

    let n = corpus.stream_count();
    let timeline = corpus.timeline_length();
    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut windows = String::from(
        "timestamp,live_sequences_mean,live_sequences_max,live_windows_mean,live_windows_max,sequence_bound\n",
    );
    let mut timing = String::from("timestamp,ms_per_term\n");
    let count = runs.len().max(1) as f64;
    for i in 1..=timeline {
        let mut seq = (0usize, 0usize);
        let mut win = (0usize, 0usize);
        let mut ms = 0.0;
        for (t, run) in terms.iter().zip(&runs) {
            let s = &run.stats[i - 1];
            ensure!(
                s.live_sequences <= n * i,
                "term {t}: {} live sequences at timestamp {i} exceed n*i = {}",
                s.live_sequences,
                n * i
            );
            *histogram.entry(s.rectangles).or_default() += 1;
            seq = (seq.0 + s.live_sequences, seq.1.max(s.live_sequences));
            win = (win.0 + s.live_windows, win.1.max(s.live_windows));
            ms += run.elapsed[i - 1].as_secs_f64() * 1e3;
        }
        windows.push_str(&format!(
            "{i},{:.4},{},{:.4},{},{}\n",
            seq.0 as f64 / count,
            seq.1,
            win.0 as f64 / count,
            win.1,
            n * i
        ));
        timing.push_str(&format!("{i},{:.4}\n", ms / count));
    }
    let mut rectangles = String::from("rectangles,snapshots\n");
    for (r, c) in &histogram {
        rectangles.push_str(&format!("{r},{c}\n"));
    }

    let mut stage = Stage::new();
    stage.dir(&args.output)?;
    stage.write(&args.output.join("rectangles.csv"), rectangles)?;
    stage.write(&args.output.join("windows.csv"), windows)?;
    stage.write(&args.output.join("timing.csv"), timing)?;
    stage.commit()
}
