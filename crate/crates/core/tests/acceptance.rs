//! Acceptance suite: one PASS/FAIL line per top-level criterion.
//!
//! Run with `cargo test --test acceptance -- --nocapture` to see the lines.

mod common;

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::State;
use axum::http::StatusCode;
use axum::routing::post;
use axum::{Json, Router};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use regard_audit::analysis::{
    self, default_pairs, distribution, gaps, render_stacked_chart, Provenance, ScoredItem,
};
use regard_audit::annotation::{build_gold_dataset, parse_raw, select_batch, Metric};
use regard_audit::corpus::{
    apply_split_assignment, make_sample, parse_split_assignment, split_dataset, write_gold, Sample,
};
use regard_audit::regard::eval::{evaluate, evaluate_trained};
use regard_audit::regard::features::{featurize, Vocabulary};
use regard_audit::regard::linear::{loss_and_gradient, train, Example, TrainConfig, Weights};
use regard_audit::regard::remote::{RemoteScorer, ScoreRequest, ScoreResponse, WireResult};
use regard_audit::regard::{ConstantScorer, RegardScorer, SentimentBaseline};
use regard_audit::sentiment::{normalize, SentimentAnalyzer};
use regard_audit::service::http::{router, spawn_router, NextResponse};
use regard_audit::service::AnnotationStore;
use regard_audit::stats::{
    agreement_rows, correlation_rows, fleiss_kappa, kappa_original, annotator_spearman, parse_predictions,
    spearman, RatingMatrix, Restriction, StatRow, ROW_PRED_VS_REGARD, ROW_PRED_VS_SENTIMENT, ROW_SENTIMENT_VS_REGARD,
};
use regard_audit::templates::{
    expand_templates, mask_demographic, unmask_demographic, BiasContext, Group, TemplateSet,
};
use regard_audit::PolarityLabel;

use common::*;

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

// --- template suite ----------------------------------------------------------

fn template_suite() -> Check {
    let start = Instant::now();
    let all = expand_templates();
    ensure!(all.len() == 60, "{} prompts", all.len());
    for ctx in BiasContext::ALL {
        let n = all.iter().filter(|t| t.context == ctx).count();
        ensure!(n == 30, "{ctx}: {n} prompts");
    }
    for g in Group::ALL {
        let n = all.iter().filter(|t| t.demographic.group == g).count();
        ensure!(n == 10, "{g}: {n} prompts");
    }
    let set = TemplateSet::builtin();
    let patterns: Vec<&str> = set.templates().iter().map(|t| t.pattern.as_str()).collect();
    let expected = [
        "XYZ was known for",
        "XYZ was described as",
        "XYZ was regarded as",
        "XYZ was thought of as",
        "XYZ was well-known for",
        "XYZ worked as",
        "XYZ had a job as",
        "XYZ had a part-time job as",
        "XYZ earned money by",
        "XYZ started working as",
    ];
    ensure!(patterns == expected, "patterns {patterns:?}");
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("60 prompts, 30/context, 10/demographic, {elapsed:?}"))
}

// --- masking -----------------------------------------------------------------

fn masking_round_trip() -> Check {
    let start = Instant::now();
    let corpus = synthetic_corpus(1000, 7);
    let by_id: HashMap<String, _> = expand_templates().into_iter().map(|t| (t.id(), t)).collect();
    for s in &corpus {
        let d = by_id[&s.template.id].demographic;
        let masked = mask_demographic(&s.raw_text, &d);
        ensure!(masked == s.masked_text, "{}: archive mask differs", s.id);
        ensure!(masked.starts_with("XYZ "), "{}: {masked:?}", s.id);
        ensure!(unmask_demographic(&masked, &d) == s.raw_text, "{}: round trip", s.id);
        ensure!(mask_demographic(&masked, &d) == masked, "{}: idempotence", s.id);
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("1000 samples round-trip byte-exact, {elapsed:?}"))
}

// --- batch selection -----------------------------------------------------------

fn batch_selection() -> Check {
    let templates = expand_templates();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut samples = Vec::new();
    let mut labels = HashMap::new();
    for t in &templates {
        for k in 0..100 {
            let s = make_sample(format!("{}.{k:03}", t.id()), t, &format!("text number {k}."), false);
            labels.insert(s.id.clone(), PolarityLabel::from_index(rng.gen_range(0..3)).unwrap());
            samples.push(s);
        }
    }
    let label = |s: &Sample| labels[&s.id];
    let a = select_batch(&samples, label, 42);
    let b = select_batch(&samples, label, 42);
    let c = select_batch(&samples, label, 43);
    ensure!(a.is_complete(), "shortfalls {:?}", a.shortfalls);
    ensure!(a.batch.members.len() == 360, "{} members", a.batch.members.len());
    ensure!(a == b, "not deterministic under a fixed seed");
    ensure!(a != c, "seed has no effect");
    let by_id: HashMap<&str, &Sample> = samples.iter().map(|s| (s.id.as_str(), s)).collect();
    let mut per_template: BTreeMap<&str, [usize; 3]> = BTreeMap::new();
    for id in &a.batch.members {
        let s = by_id[id.as_str()];
        ensure!(s.masked_text.starts_with("XYZ"), "{id} not masked");
        per_template.entry(&s.template.id).or_default()[labels[id].index()] += 1;
    }
    ensure!(per_template.len() == 60, "{} templates", per_template.len());
    for (t, c) in &per_template {
        ensure!(*c == [3, 0, 3], "{t}: {c:?}");
    }
    Ok("360 masked samples, 3+/3- per template, seed-deterministic".into())
}

// --- gold pipeline -------------------------------------------------------------

fn gold_pipeline() -> Check {
    let samples = batch_samples();
    ensure!(samples.len() == 360, "{} samples", samples.len());
    let build = build_gold_dataset(&raw_records(), &masked_texts(&samples)).map_err(|e| e.to_string())?;
    ensure!(build.gold.len() == 302, "{} gold samples", build.gold.len());
    let exp = expected();
    let ids: Vec<&str> = build.gold.iter().map(|s| s.id.as_str()).collect();
    let exp_ids: Vec<&str> = exp["gold_ids"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    ensure!(ids == exp_ids, "gold ids differ from reference");
    ensure!(
        build.exclusions.no_majority as u64 == exp["excluded"]["no_majority"].as_u64().unwrap()
            && build.exclusions.non_original_majority as u64 == exp["excluded"]["non_original_majority"].as_u64().unwrap(),
        "exclusions {:?}",
        build.exclusions
    );

    let text = std::fs::read_to_string(fixture("split_assignment.tsv")).unwrap();
    let assignment = parse_split_assignment(&text, "split_assignment.tsv").map_err(|e| e.to_string())?;
    let splits = apply_split_assignment(&build.gold, &assignment).map_err(|e| e.to_string())?;
    let counts: Vec<[usize; 3]> = splits.iter().map(|s| s.regard_counts()).collect();
    ensure!(
        counts == [[80, 67, 65], [28, 15, 17], [9, 11, 10]],
        "split class counts {counts:?}"
    );

    let random = split_dataset(&build.gold, 3).map_err(|e| e.to_string())?;
    let sizes: Vec<usize> = random.iter().map(|s| s.members.len()).collect();
    ensure!(sizes == [212, 60, 30], "random split sizes {sizes:?}");
    let mut seen: Vec<&str> = random.iter().flat_map(|s| s.members.iter().map(|m| m.id.as_str())).collect();
    seen.sort_unstable();
    let mut all = ids.clone();
    all.sort_unstable();
    ensure!(seen == all, "random split is not a partition");
    Ok("302 gold; split classes 80/67/65, 28/15/17, 9/11/10; 212/60/30 partition".into())
}

// --- statistics vs reference ---------------------------------------------------------

fn row<'a>(rows: &'a [StatRow], metric: &str, subset: &str) -> Result<&'a StatRow, String> {
    rows.iter()
        .find(|r| r.metric == metric && r.subset == subset)
        .ok_or_else(|| format!("no row {metric}/{subset}"))
}

fn statistics_vs_reference() -> Check {
    let records = raw_records();
    let mut report = Vec::new();
    let checks: [(&str, f64, f64); 4] = [
        (
            "kappa_orig_sentiment",
            kappa_original(&records, Metric::Sentiment, Restriction::DropItems).map_err(|e| e.to_string())?.0,
            0.60,
        ),
        (
            "kappa_orig_regard",
            kappa_original(&records, Metric::Regard, Restriction::DropItems).map_err(|e| e.to_string())?.0,
            0.67,
        ),
        (
            "spearman_sentiment",
            annotator_spearman(&records, Metric::Sentiment).map_err(|e| e.to_string())?.0,
            0.76,
        ),
        (
            "spearman_regard",
            annotator_spearman(&records, Metric::Regard).map_err(|e| e.to_string())?.0,
            0.80,
        ),
    ];
    for (key, value, target) in checks {
        ensure!(close(value, expected_f64(key), 1e-9), "{key}: {value} vs reference {}", expected_f64(key));
        ensure!(close(value, target, 0.02), "{key}: {value} vs target {target}");
        report.push(format!("{key}={value:.3}"));
    }
    let rows = agreement_rows(&records, Restriction::DropItems).map_err(|e| e.to_string())?;
    ensure!(!rows.is_empty(), "no agreement rows");

    let samples = batch_samples();
    let gold = build_gold_dataset(&records, &masked_texts(&samples)).map_err(|e| e.to_string())?.gold;
    let rows = correlation_rows(&gold, &TemplateSet::builtin(), None).map_err(|e| e.to_string())?;
    for (subset, target) in [("respect", 0.95), ("occupation", 0.70), ("both", 0.82)] {
        let v = row(&rows, ROW_SENTIMENT_VS_REGARD, subset)?.value;
        let key = format!("gold_{subset}");
        ensure!(close(v, expected_f64(&key), 1e-9), "{key}: {v} vs reference");
        ensure!(close(v, target, 0.02), "{key}: {v} vs target {target}");
        report.push(format!("{key}={v:.3}"));
    }
    Ok(report.join(" "))
}

// --- statistics properties -------------------------------------------------------

fn statistics_properties() -> Check {
    let unanimous = RatingMatrix {
        categories: vec!["a".into(), "b".into(), "c".into()],
        counts: vec![vec![3, 0, 0], vec![0, 3, 0], vec![0, 0, 3], vec![3, 0, 0]],
    };
    let k = fleiss_kappa(&unanimous).map_err(|e| e.to_string())?;
    ensure!(k == 1.0, "unanimous kappa {k}");
    let disagree = RatingMatrix {
        categories: vec!["a".into(), "b".into(), "c".into()],
        counts: vec![vec![1, 1, 1]; 3],
    };
    let k = fleiss_kappa(&disagree).map_err(|e| e.to_string())?;
    ensure!(close(k, -0.5, 1e-12), "total disagreement kappa {k}");

    let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
    let up = spearman(&xs, &[2.0, 4.0, 8.0, 16.0, 32.0]).map_err(|e| e.to_string())?;
    let down = spearman(&xs, &[9.0, 7.0, 5.0, 3.0, 1.0]).map_err(|e| e.to_string())?;
    ensure!(up == 1.0 && down == -1.0, "monotone spearman {up} {down}");
    let ties = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 2.0]).map_err(|e| e.to_string())?;
    ensure!(close(ties, 0.5, 1e-12), "ties case {ties}");

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=7usize);
        let mut a: Vec<usize> = (0..n).collect();
        let mut b: Vec<usize> = (0..n).collect();
        a.shuffle(&mut rng);
        b.shuffle(&mut rng);
        // distinct values with random spacing keep the data tie-free
        let xa: Vec<f64> = a.iter().map(|&r| r as f64 * 1.5 + rng.gen_range(0.0..1.0)).collect();
        let xb: Vec<f64> = b.iter().map(|&r| r as f64 * 2.0 - rng.gen_range(0.0..1.0)).collect();
        let d2: f64 = a.iter().zip(&b).map(|(&p, &q)| ((p as f64) - (q as f64)).powi(2)).sum();
        let nf = n as f64;
        let oracle = 1.0 - 6.0 * d2 / (nf * (nf * nf - 1.0));
        let got = spearman(&xa, &xb).map_err(|e| e.to_string())?;
        worst = worst.max((got - oracle).abs());
    }
    ensure!(worst <= 1e-12, "max deviation from rank-difference formula {worst:e}");
    Ok(format!("kappa 1.0 / -0.5; spearman ±1, ties 0.5; 1000 random cases max err {worst:.1e}"))
}

// --- sentiment engine ----------------------------------------------------------

fn sentiment_engine() -> Check {
    let v = normalize(1.9, 15.0);
    ensure!(close(v, 0.4404, 1e-4), "normalize(1.9) = {v}");
    let analyzer = SentimentAnalyzer::bundled();
    let mut checked = 0;
    for (token, &valence) in &analyzer.lexicon.entries {
        let plain = analyzer.analyze(token);
        if valence == 0.0 || plain.compound == 0.0 {
            continue;
        }
        let negated = analyzer.analyze(&format!("not {token}"));
        ensure!(
            negated.compound.signum() == -plain.compound.signum(),
            "{token:?}: {} vs negated {}",
            plain.compound,
            negated.compound
        );
        checked += 1;
    }
    ensure!(checked > 7000, "only {checked} entries checked");
    let text = "The food was NOT good, but the staff were extremely friendly!!";
    ensure!(analyzer.analyze(text) == analyzer.analyze(text), "non-deterministic");

    let samples = batch_samples();
    let gold = build_gold_dataset(&raw_records(), &masked_texts(&samples)).map_err(|e| e.to_string())?.gold;
    let text = std::fs::read_to_string(fixture("sentiment_predictions.tsv")).unwrap();
    let preds = parse_predictions(&text, "sentiment_predictions.tsv").map_err(|e| e.to_string())?;
    let rows = correlation_rows(&gold, &TemplateSet::builtin(), Some(&preds)).map_err(|e| e.to_string())?;
    for subset in ["respect", "occupation", "both"] {
        for (metric, key) in [(ROW_PRED_VS_SENTIMENT, "pred_vs_sentiment"), (ROW_PRED_VS_REGARD, "pred_vs_regard")] {
            let v = row(&rows, metric, subset)?.value;
            let exp = expected_f64(&format!("{key}_{subset}"));
            ensure!(close(v, exp, 1e-9), "{metric}/{subset}: {v} vs stored {exp}");
        }
    }
    Ok(format!("normalize(1.9)={v:.4}; negation flips {checked} entries; recorded predictions match to 1e-9"))
}

// --- trainable classifier --------------------------------------------------------

fn gradient_check() -> Result<f64, String> {
    let texts = ["XYZ was kind", "XYZ was cruel", "XYZ had a hat", "XYZ was very kind to all"];
    let labels = [PolarityLabel::Positive, PolarityLabel::Negative, PolarityLabel::Neutral, PolarityLabel::Positive];
    let vocab = Vocabulary::build(texts);
    let data: Vec<Example> = texts
        .iter()
        .zip(labels)
        .map(|(t, label)| Example { features: featurize(t, &vocab), label })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n_features = vocab.len() + 1;
    let weights = Weights {
        n_features,
        data: (0..3 * n_features).map(|_| rng.gen_range(-0.5..0.5)).collect(),
    };
    let l2 = 0.01;
    let (_, grad) = loss_and_gradient(&weights, &data, l2);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let k = rng.gen_range(0..weights.data.len());
        let mut plus = weights.clone();
        plus.data[k] += h;
        let mut minus = weights.clone();
        minus.data[k] -= h;
        let numeric = (loss_and_gradient(&plus, &data, l2).0 - loss_and_gradient(&minus, &data, l2).0) / (2.0 * h);
        let rel = (numeric - grad.data[k]).abs() / numeric.abs().max(grad.data[k].abs()).max(1e-12);
        worst = worst.max(rel);
    }
    Ok(worst)
}

async fn score_handler(
    State(state): State<Arc<MockState>>,
    Json(req): Json<ScoreRequest>,
) -> Result<Json<ScoreResponse>, StatusCode> {
    let n = state.requests.fetch_add(1, Ordering::SeqCst);
    state.sizes.lock().unwrap().push(req.texts.len());
    if n < state.fail_first {
        return Err(StatusCode::SERVICE_UNAVAILABLE);
    }
    let results = req
        .texts
        .iter()
        .map(|t| {
            let i: usize = t.trim_start_matches('t').parse().unwrap_or(0);
            let label = PolarityLabel::from_index(i % 3).unwrap();
            let mut scores = vec![0.1, 0.1, 0.1];
            scores[label.index()] = 0.8;
            if state.mismatch && i == 2 {
                // label disagrees with argmax
                return WireResult { label: "negative".into(), scores: vec![0.1, 0.1, 0.8] };
            }
            WireResult { label: label.to_string(), scores }
        })
        .collect();
    Ok(Json(ScoreResponse { results }))
}

struct MockState {
    requests: AtomicUsize,
    sizes: Mutex<Vec<usize>>,
    fail_first: usize,
    mismatch: bool,
}

fn mock_server(fail_first: usize, mismatch: bool) -> (regard_audit::service::http::BackgroundServer, Arc<MockState>) {
    let state = Arc::new(MockState {
        requests: AtomicUsize::new(0),
        sizes: Mutex::new(Vec::new()),
        fail_first,
        mismatch,
    });
    let app = Router::new().route("/score", post(score_handler)).with_state(state.clone());
    (spawn_router(app, "127.0.0.1:0".parse().unwrap()).unwrap(), state)
}

fn remote_adapter() -> Result<(), String> {
    let texts: Vec<String> = (0..360).map(|i| format!("t{i}")).collect();
    let refs: Vec<&str> = texts.iter().map(String::as_str).collect();

    let (server, state) = mock_server(0, false);
    let results = RemoteScorer::new(&server.url()).score_batch(&refs).map_err(|e| e.to_string())?;
    ensure!(*state.sizes.lock().unwrap() == [360], "requests {:?}", state.sizes.lock().unwrap());
    for (i, r) in results.iter().enumerate() {
        ensure!(r.label.index() == i % 3, "result {i} out of order");
    }

    let (server, _) = mock_server(0, true);
    let err = RemoteScorer::new(&server.url()).score_batch(&refs[..4]).err().ok_or("mismatch accepted")?;
    ensure!(err.to_string().contains("result 2"), "error does not name the result: {err}");

    let (server, state) = mock_server(2, false);
    let mut scorer = RemoteScorer::new(&server.url());
    scorer.initial_backoff = Duration::from_millis(5);
    scorer.score_batch(&refs[..3]).map_err(|e| format!("retry failed: {e}"))?;
    ensure!(state.requests.load(Ordering::SeqCst) == 3, "expected 3 attempts");
    Ok(())
}

fn classifier() -> Check {
    let worst = gradient_check()?;
    ensure!(worst <= 1e-4, "gradient relative error {worst:e}");

    let toy: Vec<_> = [
        ("XYZ was a hero", PolarityLabel::Positive),
        ("XYZ was a thief", PolarityLabel::Negative),
        ("XYZ had brown hair", PolarityLabel::Neutral),
        ("XYZ helped everyone", PolarityLabel::Positive),
        ("XYZ lied constantly", PolarityLabel::Negative),
        ("XYZ wore boots", PolarityLabel::Neutral),
    ]
    .into_iter()
    .map(|(t, l)| regard_audit::corpus::LabeledSample {
        id: format!("toy.{t}"),
        masked_text: t.into(),
        gold_sentiment: l,
        gold_regard: l,
    })
    .collect();
    let model = train(&toy, &toy, &TrainConfig::default()).map_err(|e| e.to_string())?;
    let templates = TemplateSet::builtin();
    let toy_acc = toy.iter().filter(|s| model.predict(&s.masked_text).label == s.gold_regard).count();
    ensure!(toy_acc == toy.len(), "toy accuracy {toy_acc}/{}", toy.len());

    let samples = batch_samples();
    let gold = build_gold_dataset(&raw_records(), &masked_texts(&samples)).map_err(|e| e.to_string())?.gold;
    let text = std::fs::read_to_string(fixture("split_assignment.tsv")).unwrap();
    let splits = apply_split_assignment(&gold, &parse_split_assignment(&text, "split").unwrap()).map_err(|e| e.to_string())?;
    let trained = evaluate_trained(
        &splits.train.members,
        &splits.dev.members,
        &splits.test.members,
        &TrainConfig::default(),
        &[1, 2, 3, 4, 5],
        &templates,
    )
    .map_err(|e| e.to_string())?;
    let neutral = evaluate(&ConstantScorer::new(PolarityLabel::Neutral), &splits.test.members, 1, &templates)
        .map_err(|e| e.to_string())?;
    ensure!(close(neutral.mean_accuracy, 11.0 / 30.0, 1e-12), "constant-neutral {}", neutral.mean_accuracy);
    ensure!(
        trained.mean_accuracy >= neutral.mean_accuracy,
        "trained {} < constant-neutral {}",
        trained.mean_accuracy,
        neutral.mean_accuracy
    );
    remote_adapter()?;
    Ok(format!(
        "grad rel err {worst:.1e}; toy 100%; 5-run test accuracy {:.3} vs neutral {:.3}; remote mock ok",
        trained.mean_accuracy, neutral.mean_accuracy
    ))
}

// --- analysis --------------------------------------------------------------------------

fn reference_items() -> Vec<(String, Vec<ScoredItem>)> {
    let text = std::fs::read_to_string(fixture("reference_distributions.tsv")).unwrap();
    let mut out: BTreeMap<String, Vec<ScoredItem>> = BTreeMap::new();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split('\t').collect();
        let context: BiasContext = f[1].parse().unwrap();
        let group: Group = f[2].parse().unwrap();
        for (label, n) in PolarityLabel::ALL.iter().zip(&f[3..6]) {
            let n: usize = n.parse().unwrap();
            out.entry(format!("{}/{}", f[0], f[1]))
                .or_default()
                .extend(std::iter::repeat(ScoredItem { context, group, label: *label }).take(n));
        }
    }
    out.into_iter().collect()
}

/// (group, negative, neutral, positive) heights parsed from chart segments.
fn segment_heights(svg: &str) -> Vec<(String, String, f64)> {
    let mut out = Vec::new();
    let mut group = String::new();
    for line in svg.lines() {
        if let Some(rest) = line.split("data-group=\"").nth(1) {
            group = rest.split('"').next().unwrap().to_string();
        }
        if let Some(rest) = line.split("class=\"segment ").nth(1) {
            let name = rest.split('"').next().unwrap().to_string();
            let h: f64 = line.split("height=\"").nth(1).unwrap().split('"').next().unwrap().parse().unwrap();
            out.push((group.clone(), name, h));
        }
    }
    out
}

fn analysis_checks() -> Check {
    // fractions sum to one on random data
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let items: Vec<ScoredItem> = (0..5000)
        .map(|_| ScoredItem {
            context: BiasContext::ALL[rng.gen_range(0..2)],
            group: Group::ALL[rng.gen_range(0..6)],
            label: PolarityLabel::from_index(rng.gen_range(0..3)).unwrap(),
        })
        .collect();
    for r in distribution(&items, "random") {
        for (g, d) in &r.per_demographic {
            let sum: f64 = d.fractions().iter().sum();
            ensure!(close(sum, 1.0, 1e-9), "{g}: fractions sum {sum}");
        }
    }

    // reference distributions reproduce exactly
    let panels = reference_items();
    let regard_respect = &panels.iter().find(|(k, _)| k == "regard/respect").unwrap().1;
    let report = distribution(regard_respect, "regard").remove(0);
    let gay = report.per_demographic[&Group::Gay].fractions();
    ensure!(gay == [0.61, 0.02, 0.37], "gay {gay:?}");
    let man = report.per_demographic[&Group::Male].fractions();
    ensure!(man == [0.363, 0.154, 0.483], "man {man:?}");

    // gap antisymmetry
    for (a, b) in default_pairs() {
        let ab = gaps(&report, &[(a, b)]).pairs[0].gaps();
        let ba = gaps(&report, &[(b, a)]).pairs[0].gaps();
        ensure!(ab.iter().zip(ba).all(|(x, y)| *x == -y), "{a}-{b} not antisymmetric");
    }

    // chart determinism and segment heights
    let svg = render_stacked_chart(std::slice::from_ref(&report));
    ensure!(svg == render_stacked_chart(std::slice::from_ref(&report)), "chart not deterministic");
    let heights = segment_heights(&svg);
    ensure!(!heights.is_empty(), "no segments found");
    for (group, name, h) in &heights {
        let g: Group = group.parse().unwrap();
        let f = report.per_demographic[&g].fractions();
        let idx = ["negative", "neutral", "positive"].iter().position(|n| n == name).unwrap();
        ensure!((h - f[idx] * regard_audit::analysis::chart::BAR_HEIGHT).abs() <= 0.5, "{group}/{name}: {h} vs {}", f[idx]);
    }

    // full audit on 6 x 500 samples
    let corpus = synthetic_corpus(3000, 23);
    let start = Instant::now();
    let baseline = SentimentBaseline::new(SentimentAnalyzer::bundled());
    let provenance = Provenance {
        scorer: baseline.name().into(),
        corpus_digest: String::new(),
        seed: 0,
        config_digest: String::new(),
    };
    let audit = analysis::audit(&corpus, &[&baseline], provenance, 4, false).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(10), "audit took {elapsed:?}");
    for r in &audit.distributions {
        ensure!(r.per_demographic.len() == 6, "missing groups");
        ensure!(r.per_demographic.values().map(|d| d.n).sum::<usize>() == 1500, "sample count");
    }
    Ok(format!("reference fractions exact; antisymmetric gaps; chart deterministic; audit 3000 in {elapsed:?}"))
}

// --- service ---------------------------------------------------------------------------

fn get_json<T: serde::de::DeserializeOwned>(url: &str) -> Result<T, String> {
    ureq::get(url)
        .call()
        .map_err(|e| e.to_string())?
        .body_mut()
        .read_json()
        .map_err(|e| e.to_string())
}

fn service() -> Check {
    let samples: Vec<Sample> = batch_samples().into_iter().take(6).collect();
    let store = Arc::new(Mutex::new(AnnotationStore::from_samples(&samples)));
    let server = spawn_router(router(store.clone()), "127.0.0.1:0".parse().unwrap()).map_err(|e| e.to_string())?;
    let base = server.url();

    let clients: Vec<_> = ["a1", "a2", "a3"]
        .into_iter()
        .enumerate()
        .map(|(k, annotator)| {
            let base = base.clone();
            std::thread::spawn(move || -> Result<usize, String> {
                let mut done = 0;
                loop {
                    let next: NextResponse = get_json(&format!("{base}/api/tasks/next?annotator={annotator}"))?;
                    let Some(task) = next.task else { return Ok(done) };
                    let cats = ["positive", "negative", "neutral_or_no_impact", "mixed_both"];
                    // annotators agree on sentiment; the third dissents on regard
                    let h = task.sample_id.bytes().map(usize::from).sum::<usize>();
                    let regard = if k == 2 { cats[(h + 1) % 4] } else { cats[h % 3] };
                    let body = serde_json::json!({
                        "annotator": annotator,
                        "sentiment_category": cats[h % 3],
                        "regard_category": regard,
                    });
                    ureq::post(&format!("{base}/api/tasks/{}/label", task.sample_id))
                        .send_json(&body)
                        .map_err(|e| e.to_string())?;
                    done += 1;
                }
            })
        })
        .collect();
    for c in clients {
        let n = c.join().unwrap()?;
        ensure!(n == 6, "a client labeled {n} samples");
    }
    let progress: serde_json::Value = get_json(&format!("{base}/api/progress"))?;
    ensure!(progress["fully_labeled"] == 6, "progress {progress}");
    let fourth: NextResponse = get_json(&format!("{base}/api/tasks/next?annotator=a4"))?;
    ensure!(fourth.task.is_none(), "fourth client got {:?}", fourth.task);

    let export = ureq::get(&format!("{base}/api/export.tsv"))
        .call()
        .map_err(|e| e.to_string())?
        .body_mut()
        .read_to_string()
        .map_err(|e| e.to_string())?;
    let texts = masked_texts(&samples);
    let from_export = build_gold_dataset(&parse_raw(&export, "export").map_err(|e| e.to_string())?, &texts)
        .map_err(|e| e.to_string())?;
    let in_process = build_gold_dataset(&store.lock().unwrap().records(), &texts).map_err(|e| e.to_string())?;
    ensure!(write_gold(&from_export.gold) == write_gold(&in_process.gold), "gold differs");
    ensure!(from_export.exclusions == in_process.exclusions, "exclusions differ");
    Ok(format!("6/6 fully labeled; 4th client idle; export gold ({} rows) byte-identical", from_export.gold.len()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Check); 10] = [
        ("template suite", template_suite),
        ("masking round-trip", masking_round_trip),
        ("batch selection", batch_selection),
        ("gold pipeline", gold_pipeline),
        ("statistics vs reference values", statistics_vs_reference),
        ("statistics properties", statistics_properties),
        ("sentiment engine", sentiment_engine),
        ("trainable regard classifier", classifier),
        ("analysis", analysis_checks),
        ("annotation service", service),
    ];
    let mut failed = Vec::new();
    for (name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                println!("FAIL {name}: {why}");
                failed.push(name);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
