//! One function per subcommand. Each reads its inputs, writes one staged
//! output directory under `out/`, and returns a JSON summary for stdout.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use geoprobe_core::corpus::{self, DatasetParams, NegativesMode, SpanAnnotations};
use geoprobe_core::country::{CountryNames, CountryUniverse};
use geoprobe_core::experts::{extract_experts, ExpertSet, ExtractOptions, TargetStat};
use geoprobe_core::gazetteer::Gazetteer;
use geoprobe_core::generation::{
    self, aggregate_distribution, annotate_records, count_values, drift_pairs_csv, ks_lognormal, language_drift, map_entities,
    representation_score, rs_table_csv, shape_table_csv, skewness, top_share_csv, CountryDistribution, GeneratedRecord,
    LanguageProfiles, RsRow, RsTarget, ShapeRow, ShareRow, KS_MIN_VALUES,
};
use geoprobe_core::georep::{build_similarity, to_csv, to_dot, to_geojson, GeoRepNetwork};
use geoprobe_core::metrics::{neighbourhood_score, AdjacencyMap};
use geoprobe_core::synthetic::{planted_fixture, PlantedSpec};
use geoprobe_core::{read_dump, write_dump, CountryCode, LanguageTag};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{require, PipelineConfig};
use crate::error::{at, io_at, CliError, CliResult};
use crate::stage::{build_manifest, verify_manifest, write_manifest, Manifest, Stage, MANIFEST};

/// Resolved configuration plus the output root.
pub struct Ctx {
    pub cfg: PipelineConfig,
    pub out: PathBuf,
}

fn read_text(path: &Path) -> CliResult<String> {
    require(path)?;
    fs::read_to_string(path).map_err(io_at(path))
}

fn open(path: &Path) -> CliResult<BufReader<fs::File>> {
    require(path)?;
    Ok(BufReader::new(fs::File::open(path).map_err(io_at(path))?))
}

/// First of flag, config value, fallback.
fn pick(flag: &Option<PathBuf>, cfg: &Option<PathBuf>) -> Option<PathBuf> {
    flag.clone().or_else(|| cfg.clone())
}

fn json_bytes<T: serde::Serialize>(v: &T) -> Vec<u8> {
    let mut s = serde_json::to_vec_pretty(v).expect("serializable");
    s.push(b'\n');
    s
}

fn load_gazetteer(path: Option<&Path>) -> CliResult<Gazetteer> {
    match path {
        Some(p) => Gazetteer::from_tsv(&read_text(p)?).map_err(at(p)),
        None => Ok(Gazetteer::builtin()),
    }
}

fn load_names(path: Option<&Path>) -> CliResult<CountryNames> {
    match path {
        Some(p) => CountryNames::from_tsv(&read_text(p)?).map_err(at(p)),
        None => Ok(CountryNames::builtin()),
    }
}

fn load_adjacency(path: Option<&Path>) -> CliResult<AdjacencyMap> {
    match path {
        Some(p) => AdjacencyMap::from_csv(open(p)?).map_err(at(p)),
        None => Ok(AdjacencyMap::builtin()),
    }
}

fn parse_code(s: &str) -> CliResult<CountryCode> {
    CountryCode::new(s).map_err(|e| CliError::Config(e.to_string()))
}

fn parse_tag(s: &str) -> CliResult<LanguageTag> {
    LanguageTag::new(s).map_err(|e| CliError::Config(e.to_string()))
}

/// Files directly inside `dir` with extension `ext`, sorted; or `path` itself
/// when it is a file.
fn inputs_with_ext(path: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    require(path)?;
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let mut v: Vec<PathBuf> = fs::read_dir(path)
        .map_err(io_at(path))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|e| e == ext))
        .collect();
    v.sort();
    if v.is_empty() {
        return Err(CliError::Config(format!("no *.{ext} files in {}", path.display())));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NegativesArg {
    OutOfDomain,
    InDomain,
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Raw news JSONL.
    #[arg(long)]
    pub news: Option<PathBuf>,
    /// ISO3 code of the news source country.
    #[arg(long)]
    pub source: Option<String>,
    /// ISO 639-3 language of the sentences.
    #[arg(long)]
    pub language: Option<String>,
    #[arg(long, value_enum)]
    pub negatives: Option<NegativesArg>,
    /// Also write a copy with other entities masked.
    #[arg(long)]
    pub mask: bool,
    /// Entity spans JSONL used by `--mask`.
    #[arg(long)]
    pub spans: Option<PathBuf>,
    /// One sentence per line; also write a random-text control copy.
    #[arg(long)]
    pub filler: Option<PathBuf>,
    /// Drop concepts without positive sentences instead of failing.
    #[arg(long)]
    pub skip_empty: bool,
}

pub fn build_corpus(ctx: &Ctx, a: &CorpusArgs) -> CliResult<Value> {
    let paths = &ctx.cfg.paths;
    let p = &ctx.cfg.params;
    let news = pick(&a.news, &paths.news).ok_or_else(|| CliError::Config("no news file given".into()))?;
    let source = a.source.clone().or_else(|| p.source_country.clone()).ok_or_else(|| CliError::Config("no source country given".into()))?;
    let language = a.language.clone().or_else(|| p.language.clone()).ok_or_else(|| CliError::Config("no language given".into()))?;
    let params = DatasetParams {
        source_country: parse_code(&source)?,
        language: parse_tag(&language)?,
        negatives_mode: match a.negatives {
            Some(NegativesArg::OutOfDomain) => NegativesMode::OutOfDomain,
            Some(NegativesArg::InDomain) => NegativesMode::InDomain,
            None => p.negatives_mode,
        },
        seed: p.seed,
        skip_empty_concepts: a.skip_empty || p.skip_empty_concepts,
    };
    let gaz = load_gazetteer(paths.gazetteer.as_deref())?;
    let raw = corpus::read_raw_news(open(&news)?).map_err(at(&news))?;
    info!("{} raw records from {}", raw.len(), news.display());
    let universe = CountryUniverse::default_universe();
    let ds = corpus::build_concept_dataset(&raw, &universe, &gaz, &params).map_err(at(&news))?;

    let mut stage = Stage::begin(&ctx.out, "corpus")?;
    let mut emit = |stem: &str, d: &corpus::ConceptDataset| -> CliResult<()> {
        let mut buf = Vec::new();
        d.write_jsonl(&mut buf).map_err(CliError::from_core)?;
        stage.write(&format!("{stem}.jsonl"), &buf)?;
        stage.write(&format!("{stem}.manifest.json"), &json_bytes(&d.manifest()))
    };
    emit(&ds.name, &ds)?;
    if a.mask {
        let spans = match pick(&a.spans, &paths.spans) {
            Some(sp) => Some(SpanAnnotations::read_jsonl(open(&sp)?).map_err(at(&sp))?),
            None => None,
        };
        emit(&format!("{}.masked", ds.name), &corpus::mask_entities(&ds, spans.as_ref(), &gaz))?;
    }
    if let Some(f) = pick(&a.filler, &paths.filler) {
        let filler: Vec<String> = read_text(&f)?.lines().map(str::to_string).collect();
        let names = load_names(paths.names.as_deref())?;
        let random = corpus::randomize_text(&ds, &filler, &names, p.seed).map_err(at(&f))?;
        emit(&format!("{}.random", ds.name), &random)?;
    }
    let files = stage.commit()?;
    Ok(json!({ "command": "build-corpus", "dataset": ds.name, "concepts": ds.concepts.len(), "artifacts": files }))
}

#[derive(Debug, Clone, Args)]
pub struct ExtractArgs {
    /// A `.gprb` activation dump or a directory of them.
    #[arg(long)]
    pub dumps: Option<PathBuf>,
    /// Forcing value statistic; defaults to the config value.
    #[arg(long, value_enum)]
    pub target_stat: Option<TargetArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TargetArg {
    Mean,
    Median,
}

pub fn extract(ctx: &Ctx, a: &ExtractArgs) -> CliResult<Value> {
    let dumps = pick(&a.dumps, &ctx.cfg.paths.dumps).ok_or_else(|| CliError::Config("no dumps given".into()))?;
    let files = inputs_with_ext(&dumps, "gprb")?;
    let p = &ctx.cfg.params;
    let opts = ExtractOptions {
        mode: p.topk_mode,
        target: match a.target_stat {
            Some(TargetArg::Mean) => TargetStat::Mean,
            Some(TargetArg::Median) => TargetStat::Median,
            None => p.target_stat,
        },
    };
    let k = p.k;
    let sets: Vec<ExpertSet<f64>> = files
        .par_iter()
        .map(|f| {
            let dump = read_dump(open(f)?).map_err(at(f))?;
            extract_experts::<f64>(&dump, k, opts).map_err(at(f))
        })
        .collect::<CliResult<_>>()?;
    let mut seen = BTreeMap::new();
    for (s, f) in sets.iter().zip(&files) {
        if let Some(prev) = seen.insert(s.concept, f) {
            return Err(CliError::Config(format!("concept {} appears in both {} and {}", s.concept, prev.display(), f.display())));
        }
    }
    let mut stage = Stage::begin(&ctx.out, "experts")?;
    for s in &sets {
        stage.write(&format!("{}.json", s.concept), &json_bytes(s))?;
    }
    let files = stage.commit()?;
    info!("extracted {} expert sets with k = {k}", sets.len());
    Ok(json!({ "command": "extract-experts", "k": k, "sets": sets.len(), "artifacts": files }))
}

#[derive(Debug, Clone, Args)]
pub struct NetworkArgs {
    /// Directory of expert-set JSON files; defaults to `out/experts`.
    #[arg(long)]
    pub experts: Option<PathBuf>,
    /// GeoJSON FeatureCollection of country boundaries to colour.
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
}

pub fn build_network(ctx: &Ctx, a: &NetworkArgs) -> CliResult<Value> {
    let dir = pick(&a.experts, &ctx.cfg.paths.experts).unwrap_or_else(|| ctx.out.join("experts"));
    let files = inputs_with_ext(&dir, "json")?;
    let sets: Vec<ExpertSet<f64>> = files
        .par_iter()
        .map(|f| ExpertSet::read_json(open(f)?).map_err(at(f)))
        .collect::<CliResult<_>>()?;
    let p = &ctx.cfg.params;
    let net = build_similarity(&sets).map_err(at(&dir))?.spanning_tree().louvain(p.louvain_graph, p.seed).map_err(at(&dir))?;
    let q = net.modularity(p.louvain_graph, &net.communities).map_err(at(&dir))?;

    let mut stage = Stage::begin(&ctx.out, "network")?;
    let mut buf = Vec::new();
    net.write_json(&mut buf).map_err(CliError::from_core)?;
    stage.write("network.json", &buf)?;
    stage.write("network.dot", to_dot(&net).as_bytes())?;
    stage.write("edges.csv", to_csv(&net).as_bytes())?;
    if let Some(b) = pick(&a.boundaries, &ctx.cfg.paths.boundaries) {
        let value: Value = serde_json::from_str(&read_text(&b)?).map_err(|e| CliError::Config(format!("{}: {e}", b.display())))?;
        let geo = to_geojson(&net, &value).map_err(at(&b))?;
        stage.write("communities.geojson", &json_bytes(&geo))?;
    }
    let files = stage.commit()?;
    Ok(json!({
        "command": "build-network",
        "nodes": net.len(),
        "tree_edges": net.tree_edges.len(),
        "communities": net.community_count(),
        "modularity": q,
        "artifacts": files,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct ScoreArgs {
    /// Network JSON; defaults to `out/network/network.json`.
    #[arg(long)]
    pub network: Option<PathBuf>,
    /// Border CSV `iso3,iso3`; the bundled table is used when absent.
    #[arg(long)]
    pub adjacency: Option<PathBuf>,
    /// Also report the share of nodes with a border inside their 2-hop ball.
    #[arg(long)]
    pub two_hop_ball: bool,
}

pub fn score_network(ctx: &Ctx, a: &ScoreArgs) -> CliResult<Value> {
    let adj_path = pick(&a.adjacency, &ctx.cfg.paths.adjacency);
    let adjacency = load_adjacency(adj_path.as_deref())?;
    let net_path = pick(&a.network, &ctx.cfg.paths.network).unwrap_or_else(|| ctx.out.join("network").join("network.json"));
    let net: GeoRepNetwork<f64> = GeoRepNetwork::read_json(open(&net_path)?).map_err(at(&net_path))?;
    let report = neighbourhood_score(&net, &adjacency, a.two_hop_ball || ctx.cfg.params.two_hop_ball);

    let mut stage = Stage::begin(&ctx.out, "metrics")?;
    let mut csv = Vec::new();
    report.write_csv(&mut csv).map_err(CliError::from_core)?;
    stage.write("neighbourhood.csv", &csv)?;
    let mut summary = Vec::new();
    report.write_summary_json(&mut summary).map_err(CliError::from_core)?;
    summary.push(b'\n');
    stage.write("neighbourhood.json", &summary)?;
    let files = stage.commit()?;
    Ok(json!({
        "command": "score-network",
        "raw": report.raw,
        "connected_pct": report.connected_pct,
        "missing_adjacency": report.missing,
        "artifacts": files,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct GenerationArgs {
    /// Generated-text records JSONL.
    #[arg(long)]
    pub generated: Option<PathBuf>,
    /// Reference news JSONL to compare entity shares against; repeatable.
    #[arg(long = "reference")]
    pub references: Vec<PathBuf>,
    #[arg(long)]
    pub drift_threshold: Option<f64>,
}

fn file_stem(p: &Path) -> String {
    p.file_stem().map_or_else(|| "reference".into(), |s| s.to_string_lossy().into_owned())
}

fn share_row(language: LanguageTag, source: String, d: &CountryDistribution) -> ShareRow {
    ShareRow { language, source, top10_share_pct: d.top_share(10).ok(), total: d.total() }
}

pub fn analyze_generation(ctx: &Ctx, a: &GenerationArgs) -> CliResult<Value> {
    let p = &ctx.cfg.params;
    let threshold = a.drift_threshold.unwrap_or(p.drift_threshold);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CliError::Config("drift threshold must lie in [0, 1]".into()));
    }
    let path = pick(&a.generated, &ctx.cfg.paths.generated).ok_or_else(|| CliError::Config("no generated records given".into()))?;
    let references: Vec<PathBuf> = if a.references.is_empty() { ctx.cfg.paths.references.clone() } else { a.references.clone() };
    let gaz = load_gazetteer(ctx.cfg.paths.gazetteer.as_deref())?;
    let mut records = generation::read_records(open(&path)?).map_err(at(&path))?;
    annotate_records(&mut records, &gaz, Some(&LanguageProfiles::builtin()));

    let mut by_lang: BTreeMap<LanguageTag, Vec<GeneratedRecord>> = BTreeMap::new();
    for r in &records {
        by_lang.entry(r.expected_language).or_default().push(r.clone());
    }
    let mut shares = Vec::new();
    let mut shapes = Vec::new();
    let mut rs_rows = Vec::new();
    for (&lang, recs) in &by_lang {
        let dist = aggregate_distribution(recs).map_err(at(&path))?;
        shares.push(share_row(lang, "generated".into(), &dist));
        let values = count_values(&dist, None);
        let (sk, ks) = if values.len() >= KS_MIN_VALUES {
            (skewness(&values).ok(), ks_lognormal(&values).ok())
        } else {
            warn!("{lang}: {} countries mentioned, too few for shape statistics", values.len());
            (None, None)
        };
        shapes.push(ShapeRow { language: lang, countries: values.len(), skewness: sk, ks });
        for target in RsTarget::ALL {
            let result = representation_score(recs, target, p.rs_m).map_err(at(&path))?;
            rs_rows.push(RsRow { language: lang, target, m: p.rs_m, result });
        }
    }
    for r in &references {
        let raw = corpus::read_raw_news(open(r)?).map_err(at(r))?;
        let mut dists: BTreeMap<LanguageTag, CountryDistribution> = BTreeMap::new();
        for rec in &raw {
            let Ok(lang) = LanguageTag::new(&rec.language) else { continue };
            if by_lang.contains_key(&lang) {
                dists.entry(lang).or_default().merge(&map_entities(&rec.text, lang, &gaz));
            }
        }
        for (lang, d) in dists {
            shares.push(share_row(lang, file_stem(r), &d));
        }
    }
    shares.sort_by(|x, y| (x.language, &x.source).cmp(&(y.language, &y.source)));
    let drift = language_drift(&records, threshold);

    let mut stage = Stage::begin(&ctx.out, "generation")?;
    let mut annotated = Vec::new();
    generation::write_records(&records, &mut annotated).map_err(CliError::from_core)?;
    stage.write("annotated.jsonl", &annotated)?;
    stage.write("top_share.csv", top_share_csv(&shares).as_bytes())?;
    stage.write("shape.csv", shape_table_csv(&shapes).as_bytes())?;
    stage.write("representation.csv", rs_table_csv(&rs_rows).as_bytes())?;
    stage.write("drift.csv", drift_pairs_csv(&drift).as_bytes())?;
    stage.write("drift.json", &json_bytes(&drift))?;
    let files = stage.commit()?;
    Ok(json!({
        "command": "analyze-generation",
        "records": records.len(),
        "languages": by_lang.len(),
        "drift_pairs": drift.pairs.len(),
        "undetected": drift.undetected,
        "artifacts": files,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct PlanArgs {
    /// Language of the prefix templates.
    #[arg(long, default_value = "eng")]
    pub language: String,
    /// Concepts; defaults to the bundled country universe.
    #[arg(long, value_delimiter = ',')]
    pub concepts: Vec<String>,
    /// Prefix countries; defaults to the bundled country universe.
    #[arg(long, value_delimiter = ',')]
    pub prefixes: Vec<String>,
    #[arg(long)]
    pub templates_per_concept: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
}

fn codes_or_universe(v: &[String]) -> CliResult<Vec<CountryCode>> {
    if v.is_empty() {
        return Ok(CountryUniverse::default_universe().iter().collect());
    }
    let mut out: Vec<CountryCode> = v.iter().map(|s| parse_code(s.trim())).collect::<CliResult<_>>()?;
    out.sort();
    out.dedup();
    Ok(out)
}

pub fn plan(ctx: &Ctx, a: &PlanArgs) -> CliResult<Value> {
    let p = &ctx.cfg.params;
    let language = parse_tag(&a.language)?;
    let templates = match &ctx.cfg.paths.templates {
        Some(t) => corpus::load_templates(&read_text(t)?).map_err(at(t))?,
        None => corpus::builtin_templates(),
    };
    let templates: BTreeMap<u32, corpus::PrefixTemplate> =
        templates.into_iter().filter(|t| t.language() == language).map(|t| (t.template_id(), t)).collect();
    let names = load_names(ctx.cfg.paths.names.as_deref())?;
    let concepts = codes_or_universe(&a.concepts)?;
    let prefixes = codes_or_universe(&a.prefixes)?;
    let n_t = a.templates_per_concept.unwrap_or(p.templates_per_concept);
    let samples = a.samples.unwrap_or(p.samples_per_prefix);
    let ids: Vec<u32> = templates.keys().copied().collect();
    let plan = generation::generation_plan(&concepts, &ids, n_t, &prefixes, samples, p.seed).map_err(CliError::from_core)?;

    let mut lines = String::new();
    for job in &plan.jobs {
        let prefix = corpus::build_prefix(&templates[&job.template_id], job.prefix_country, &names).map_err(CliError::from_core)?;
        let line = json!({
            "concept": job.concept,
            "template_id": job.template_id,
            "prefix_country": job.prefix_country,
            "language": language,
            "samples": job.samples,
            "prefix": prefix,
        });
        lines.push_str(&line.to_string());
        lines.push('\n');
    }
    let mut stage = Stage::begin(&ctx.out, "plan")?;
    stage.write("plan.jsonl", lines.as_bytes())?;
    let files = stage.commit()?;
    Ok(json!({
        "command": "plan",
        "jobs": plan.jobs.len(),
        "records": plan.total_records(),
        "artifacts": files,
    }))
}

#[derive(Debug, Clone, Args)]
pub struct FixtureArgs {
    #[arg(long, default_value_t = 3)]
    pub blocks: usize,
    #[arg(long, default_value_t = 4)]
    pub block_size: usize,
    #[arg(long, default_value_t = 2)]
    pub layers: usize,
    #[arg(long, default_value_t = 20)]
    pub planted_per_block: usize,
    #[arg(long, default_value_t = 2000)]
    pub noise_units: usize,
}

/// Writes planted-structure dumps and their border file to `out/fixture`.
pub fn synth_fixture(ctx: &Ctx, a: &FixtureArgs) -> CliResult<Value> {
    let spec = PlantedSpec {
        blocks: a.blocks,
        block_size: a.block_size,
        layers: a.layers,
        planted_per_block: a.planted_per_block,
        noise_units: a.noise_units,
        seed: ctx.cfg.params.seed,
        ..PlantedSpec::default()
    };
    let f = planted_fixture(&spec).map_err(|e| CliError::Config(e.to_string()))?;
    let mut stage = Stage::begin(&ctx.out, "fixture")?;
    for d in &f.dumps {
        let mut buf = Vec::with_capacity(d.encoded_len());
        write_dump(d, &mut buf).map_err(CliError::from_core)?;
        stage.write(&format!("dumps/{}.gprb", d.concept()), &buf)?;
    }
    let mut csv = String::from("a,b\n");
    for (x, y) in f.adjacency.pairs() {
        csv.push_str(&format!("{x},{y}\n"));
    }
    stage.write("adjacency.csv", csv.as_bytes())?;
    let blocks: BTreeMap<String, usize> = f.block_of.iter().map(|(c, &b)| (c.to_string(), b)).collect();
    stage.write("blocks.json", &json_bytes(&blocks))?;
    let files = stage.commit()?;
    Ok(json!({ "command": "synth-fixture", "countries": f.countries.len(), "artifacts": files }))
}

pub fn report(ctx: &Ctx) -> CliResult<Value> {
    let m = build_manifest(&ctx.out)?;
    let path = write_manifest(&ctx.out, &m)?;
    Ok(json!({ "command": "report", "manifest": path.display().to_string(), "artifacts": m.artifacts.len() }))
}

pub fn verify(ctx: &Ctx) -> CliResult<Value> {
    let path = ctx.out.join(MANIFEST);
    let m: Manifest = serde_json::from_str(&read_text(&path)?).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let bad = verify_manifest(&ctx.out, &m)?;
    if !bad.is_empty() {
        return Err(CliError::Verify(format!("{} artifacts differ: {}", bad.len(), bad.join(", "))));
    }
    Ok(json!({ "command": "verify", "artifacts": m.artifacts.len(), "ok": true }))
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub score: ScoreArgs,
    #[arg(long)]
    pub dumps: Option<PathBuf>,
    #[arg(long)]
    pub boundaries: Option<PathBuf>,
}

/// Dumps to manifest: extract, network, score, generation when configured,
/// then report.
pub fn run(ctx: &Ctx, a: &RunArgs) -> CliResult<Value> {
    // fail before any work when an explicit input is missing
    for p in [&a.dumps, &a.score.adjacency, &a.boundaries].into_iter().flatten() {
        require(p)?;
    }
    let mut steps = vec![extract(ctx, &ExtractArgs { dumps: a.dumps.clone(), target_stat: None })?];
    steps.push(build_network(ctx, &NetworkArgs { experts: Some(ctx.out.join("experts")), boundaries: a.boundaries.clone() })?);
    let score = ScoreArgs { network: Some(ctx.out.join("network").join("network.json")), ..a.score.clone() };
    steps.push(score_network(ctx, &score)?);
    if ctx.cfg.paths.generated.is_some() {
        steps.push(analyze_generation(ctx, &GenerationArgs { generated: None, references: Vec::new(), drift_threshold: None })?);
    }
    steps.push(report(ctx)?);
    Ok(json!({ "command": "run", "steps": steps }))
}

impl CliError {
    fn from_core(e: impl Into<geoprobe_core::Error>) -> Self {
        CliError::from(e.into())
    }
}
