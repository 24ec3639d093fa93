//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use clap::Parser;
use pubstyle::config::RunConfig;
use pubstyle::discriminators::Discriminators;
use pubstyle::eval::{classification_metrics, corpus_bleu, fluency_scores, FluencyConfig, HashingEmbedder};
use pubstyle::generator::{batch_generate, LanguageModel};
use pubstyle::prompting::{build_prompt, frame_len};
use pubstyle::schedule::{run_schedule, DataSource, Phase, RunOptions};
use pubstyle::vocab::SpecialTokens;
use pubstyle::wordgraph::{
    argmax_trace, build_graph, cross_entropy, forward_with_alpha, loss_and_gradients, sigmoid, DmBackbone, DmGradients,
    DmHead, DropoutPlacement, EmbeddingTable,
};
use pubstyle::{toy, NewsRecord, Source, Split, TokenId, Vocab};
use pubstyle_cli::{checkpoint_digest, run, Cli};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

// ---------------------------------------------------------------- word graph

/// Definition-level evaluation on maps: neighbourhoods from adjacent pairs,
/// synchronous rounds, pooling over every token occurrence.
fn oracle_logits(
    tokens: &[TokenId],
    table: &[Vec<f64>],
    alpha: f64,
    hops: usize,
    w: &[Vec<f64>],
    b: &[f64],
) -> Vec<f64> {
    let mut nbrs: BTreeMap<TokenId, BTreeSet<TokenId>> = tokens.iter().map(|&t| (t, BTreeSet::new())).collect();
    for p in tokens.windows(2) {
        if p[0] != p[1] {
            nbrs.get_mut(&p[0]).unwrap().insert(p[1]);
            nbrs.get_mut(&p[1]).unwrap().insert(p[0]);
        }
    }
    let d = table[0].len();
    let mut reps: BTreeMap<TokenId, Vec<f64>> = nbrs.keys().map(|&t| (t, table[t as usize].clone())).collect();
    for _ in 0..hops {
        reps = nbrs
            .iter()
            .map(|(&t, ns)| {
                let v = (0..d)
                    .map(|j| {
                        let m = ns.iter().map(|u| reps[u][j]).fold(f64::NEG_INFINITY, f64::max);
                        let m = if ns.is_empty() { 0.0 } else { m };
                        (1.0 - alpha) * m + alpha * reps[&t][j]
                    })
                    .collect();
                (t, v)
            })
            .collect();
    }
    let mut r = vec![0.0; d];
    for t in tokens {
        for j in 0..d {
            r[j] += reps[t][j];
        }
    }
    (0..b.len())
        .map(|c| b[c] + (0..d).map(|j| r[j] * w[j][c]).sum::<f64>())
        .collect()
}

struct Instance {
    tokens: Vec<TokenId>,
    table: Vec<Vec<f64>>,
    hops: usize,
    w: Vec<Vec<f64>>,
    b: Vec<f64>,
}

impl Instance {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let vocab = rng.random_range(2..16);
        let d = rng.random_range(1..8);
        let classes = rng.random_range(2..5);
        let len = rng.random_range(1..40);
        Instance {
            tokens: (0..len).map(|_| rng.random_range(0..vocab as TokenId)).collect(),
            table: (0..vocab)
                .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
                .collect(),
            hops: rng.random_range(1..5),
            w: (0..d)
                .map(|_| (0..classes).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect(),
            b: (0..classes).map(|_| rng.random_range(-1.0..1.0)).collect(),
        }
    }

    fn parts(&self) -> (EmbeddingTable, DmHead) {
        let d = self.table[0].len();
        let table = EmbeddingTable::new(self.table.len(), d, self.table.concat(), 0).unwrap();
        let head = DmHead::from_parts(
            d,
            self.b.len(),
            self.w.concat(),
            self.b.clone(),
            0.0,
            DropoutPlacement::Logits,
        );
        (table, head)
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for n in 0..1000 {
        let inst = Instance::random(&mut rng);
        let alpha = rng.random_range(0.0..1.0);
        let (table, head) = inst.parts();
        let fast = forward_with_alpha(&build_graph(&inst.tokens, inst.hops).unwrap(), &table, alpha, &head).unwrap();
        let slow = oracle_logits(&inst.tokens, &inst.table, alpha, inst.hops, &inst.w, &inst.b);
        for (a, o) in fast.iter().zip(&slow) {
            worst = worst.max((a - o).abs());
        }
        check(worst <= 1e-6, format!("instance {n}: deviation {worst:e}"))?;
    }
    let secs = start.elapsed().as_secs_f64();
    check(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!("1000 instances, max deviation {worst:.1e}, {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(202);
    let h = 1e-4;
    let close = |a: f64, n: f64| (a - n).abs() <= 1e-4 * a.abs().max(n.abs()).max(1e-2);
    let (mut instances, mut alpha_checks, mut skipped) = (0, 0, 0);
    while alpha_checks < 100 {
        let inst = Instance::random(&mut rng);
        let (table, head) = inst.parts();
        let raw = rng.random_range(-2.0..2.0);
        let label = rng.random_range(0..inst.b.len());
        let g = build_graph(&inst.tokens, inst.hops).unwrap();
        let backbone = DmBackbone {
            alpha_raw: raw,
            ..DmBackbone::new(Arc::new(table.clone()), inst.hops, true)
        };
        let mut grads = DmGradients::zeros(&backbone, &head);
        loss_and_gradients(&g, label, 1.0, &backbone, &head, None, &mut grads).unwrap();
        let loss = |a_raw: f64, hd: &DmHead| {
            cross_entropy(&forward_with_alpha(&g, &table, sigmoid(a_raw), hd).unwrap(), label).unwrap()
        };

        // The loss is piecewise smooth in alpha; compare only away from argmax flips.
        let trace = argmax_trace(&g, &table, sigmoid(raw));
        if argmax_trace(&g, &table, sigmoid(raw + h)) == trace && argmax_trace(&g, &table, sigmoid(raw - h)) == trace {
            let numeric = (loss(raw + h, &head) - loss(raw - h, &head)) / (2.0 * h);
            check(
                close(grads.alpha_raw, numeric),
                format!("alpha_raw: {} vs {numeric}", grads.alpha_raw),
            )?;
            alpha_checks += 1;
        } else {
            skipped += 1;
        }
        for i in 0..head.weight.len() {
            let (mut up, mut down) = (head.clone(), head.clone());
            up.weight[i] += h;
            down.weight[i] -= h;
            let numeric = (loss(raw, &up) - loss(raw, &down)) / (2.0 * h);
            check(
                close(grads.weight[i], numeric),
                format!("W'[{i}]: {} vs {numeric}", grads.weight[i]),
            )?;
        }
        for i in 0..head.bias.len() {
            let (mut up, mut down) = (head.clone(), head.clone());
            up.bias[i] += h;
            down.bias[i] -= h;
            let numeric = (loss(raw, &up) - loss(raw, &down)) / (2.0 * h);
            check(
                close(grads.bias[i], numeric),
                format!("b'[{i}]: {} vs {numeric}", grads.bias[i]),
            )?;
        }
        instances += 1;
    }
    Ok(format!(
        "{instances} instances (W', b'), {alpha_checks} alpha checks, {skipped} alpha points at argmax flips skipped"
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    for case in 0..50 {
        let inst = Instance::random(&mut rng);
        let (table, head) = inst.parts();
        let reference = forward_with_alpha(&build_graph(&inst.tokens, inst.hops).unwrap(), &table, 1.0, &head).unwrap();
        for _ in 0..20 {
            let mut rewired = inst.tokens.clone();
            rewired.shuffle(&mut rng);
            let hops = rng.random_range(1..5);
            let logits = forward_with_alpha(&build_graph(&rewired, hops).unwrap(), &table, 1.0, &head).unwrap();
            check(logits == reference, format!("case {case}: {logits:?} != {reference:?}"))?;
        }
    }
    Ok("50 documents x 20 rewirings, bitwise equal".into())
}

// ------------------------------------------------------------------ schedule

fn criterion_4() -> Outcome {
    let mut config = RunConfig::desk_scale();
    config.schedule.epochs_source = 3;
    config.schedule.epochs_style = 2;
    let out =
        run_schedule(&toy::corpus(0), &config.schedule_config(), RunOptions::default()).map_err(|e| e.to_string())?;
    let epochs = &out.trace.epochs;
    check(epochs.len() == 3, format!("{} epochs", epochs.len()))?;
    let order = [
        Phase::FineTuneGenerator,
        Phase::TrainStyle,
        Phase::Generate,
        Phase::TrainSource,
    ];
    let mut last_seq = None;
    for e in epochs {
        let phases: Vec<Phase> = e.events.iter().map(|ev| ev.phase).collect();
        check(phases == order, format!("epoch {}: phases {phases:?}", e.epoch))?;
        for ev in &e.events {
            check(last_seq.is_none_or(|s| ev.seq > s), "sequence numbers not increasing")?;
            last_seq = Some(ev.seq);
        }
        let want = if e.epoch == 1 {
            DataSource::Human
        } else {
            DataSource::Synthetic
        };
        check(
            e.style_source == want && e.events[1].data == want,
            format!("epoch {}: style data {:?}", e.epoch, e.style_source),
        )?;
        check(
            e.style_epochs == 2,
            format!("epoch {}: {} style epochs", e.epoch, e.style_epochs),
        )?;
        check(
            e.events[2].records == out.split.sampled.len(),
            format!(
                "epoch {}: |N_M| = {} but |N_H^sp| = {}",
                e.epoch,
                e.events[2].records,
                out.split.sampled.len()
            ),
        )?;
    }
    // From epoch 2 the style discriminator trains on the previous epoch's output.
    for pair in epochs.windows(2) {
        let (gen, style) = (&pair[0].events[2], &pair[1].events[1]);
        if gen.records == style.records {
            check(
                gen.ids_digest == style.ids_digest,
                format!("epoch {}: style data is not N_M", pair[1].epoch),
            )?;
        }
    }
    Ok(format!(
        "3 epochs, |N_M| = |N_H^sp| = {}, HUMAN then SYNTHETIC, FT/TS/G/TD order",
        out.split.sampled.len()
    ))
}

// ------------------------------------------------------------ desk-scale run

struct Desk {
    style_f1: f64,
    source_f1: f64,
    markers_a: usize,
    markers_b: usize,
    parameters: usize,
    elapsed: Duration,
}

/// Trains on the toy corpus and scores on its held-out TEST documents.
fn desk_run(config: &RunConfig) -> Result<Desk, String> {
    let start = Instant::now();
    let corpus = toy::corpus(0);
    let out = run_schedule(&corpus, &config.schedule_config(), RunOptions::default()).map_err(|e| e.to_string())?;
    let art = &out.artifacts;
    let vocab = art.generator.vocab();
    let test: Vec<&NewsRecord> = corpus
        .iter()
        .filter(|r| r.split == Split::Test && r.source == Source::Human)
        .collect();

    let mut predicted = Vec::new();
    for r in &test {
        predicted.push(
            art.discriminators
                .classify_publisher(&vocab.encode_content(&r.content))
                .map_err(|e| e.to_string())?
                .0,
        );
    }
    let gold: Vec<String> = test.iter().map(|r| r.publisher.clone()).collect();
    let style_f1 = classification_metrics(&predicted, &gold)
        .map_err(|e| e.to_string())?
        .macro_f1;

    let generated = batch_generate(&art.generator, &test, &pubstyle_cli::generation_config(config));
    check(
        generated.failures.is_empty(),
        format!("{} generation failures", generated.failures.len()),
    )?;
    let (mut predicted, mut gold) = (Vec::new(), Vec::new());
    for r in test.iter().copied().chain(&generated.records) {
        // An empty article cannot be scored; count it as judged human.
        let p = art
            .discriminators
            .detect_source(&vocab.encode_content(&r.content))
            .map(|x| x.0)
            .unwrap_or(Source::Human);
        predicted.push(p);
        gold.push(r.source);
    }
    let source_f1 = classification_metrics(&predicted, &gold)
        .map_err(|e| e.to_string())?
        .macro_f1;

    let (mut markers_a, mut markers_b) = (0, 0);
    for r in generated.records.iter().filter(|r| r.publisher == toy::PUBLISHER_A) {
        let m = toy::marker_counts(&r.content);
        markers_a += m.a;
        markers_b += m.b;
    }
    Ok(Desk {
        style_f1,
        source_f1,
        markers_a,
        markers_b,
        parameters: art.generator.parameters().len(),
        elapsed: start.elapsed(),
    })
}

fn criterion_5(base: &Result<Desk, String>) -> Outcome {
    let d = base.as_ref().map_err(Clone::clone)?;
    let summary = format!(
        "params {}, style F1 {:.3}, source F1 {:.3}, A markers {} vs B {}, {:.1}s",
        d.parameters,
        d.style_f1,
        d.source_f1,
        d.markers_a,
        d.markers_b,
        d.elapsed.as_secs_f64()
    );
    let mut failed = Vec::new();
    if d.parameters > 200_000 {
        failed.push("backbone over 200k parameters");
    }
    if d.style_f1 < 0.90 {
        failed.push("(a) style F1 < 0.90");
    }
    if d.source_f1 < 0.80 {
        failed.push("(b) source F1 < 0.80");
    }
    if d.markers_a == 0 || d.markers_a < 3 * d.markers_b {
        failed.push("(c) marker ratio < 3");
    }
    if d.elapsed >= Duration::from_secs(15 * 60) {
        failed.push("runtime >= 15 min");
    }
    if failed.is_empty() {
        Ok(summary)
    } else {
        Err(format!("{}; {summary}", failed.join(", ")))
    }
}

// ------------------------------------------------------------------- metrics

fn criterion_6() -> Outcome {
    let texts: Vec<String> = toy::corpus(0).into_iter().map(|r| r.content).collect();
    let fluency = fluency_scores(&texts, &texts, &HashingEmbedder::new(64, 0), &FluencyConfig::default())
        .map_err(|e| e.to_string())?;
    check(
        fluency.mauve >= 0.99,
        format!("mauve {} on identical sets", fluency.mauve),
    )?;
    check(
        fluency.frontier <= 0.01,
        format!("frontier {} on identical sets", fluency.frontier),
    )?;

    let bleu = corpus_bleu(&texts, &texts).map_err(|e| e.to_string())?;
    check(bleu == 100.0, format!("bleu(x, x) = {bleu}"))?;

    let gold: Vec<usize> = (0..90).map(|i| i % 3).collect();
    let r = classification_metrics(&gold, &gold).map_err(|e| e.to_string())?;
    check(
        [r.accuracy, r.precision, r.recall, r.macro_f1] == [1.0; 4],
        format!("perfect predictions: {r:?}"),
    )?;

    let gold: Vec<usize> = (0..100).map(|i| i % 2).collect();
    let r = classification_metrics(&vec![0usize; 100], &gold).map_err(|e| e.to_string())?;
    // One class: F1 = 2 * 0.5 * 1 / 1.5; the other scores 0.
    let expected = (2.0 * 0.5 / 1.5) / 2.0;
    check(
        (r.macro_f1 - 0.3333).abs() <= 1e-4 && (r.macro_f1 - expected).abs() < 1e-12,
        format!("one-class macro F1 {}", r.macro_f1),
    )?;
    Ok(format!(
        "mauve {:.4}, frontier {:.2e}, bleu {bleu}, perfect 1.0, one-class macro F1 {:.4}",
        fluency.mauve, fluency.frontier, r.macro_f1
    ))
}

// ------------------------------------------------------------------- prompts

fn criterion_7() -> Outcome {
    const WORDS: [&str; 14] = [
        "the", "council", "met", "on", "monday", "colour", "centre", ".", ",", "said", "it", "new", "harbour", "grey",
    ];
    let mut vocab = Vocab::build(WORDS);
    vocab.add_special_tokens(&SpecialTokens::default());
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    let words = |rng: &mut ChaCha8Rng, lo: usize, hi: usize| -> String {
        let n = rng.random_range(lo..hi);
        (0..n)
            .map(|_| WORDS[rng.random_range(0..WORDS.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    let (mut fit, mut over) = (0, 0);
    for case in 0..10_000 {
        let publisher = words(&mut rng, 1, 4);
        let highlight = words(&mut rng, 0, 12);
        let content = words(&mut rng, 0, 120);
        let (p, h, c) = (
            vocab.encode(&publisher),
            vocab.encode(&highlight),
            vocab.encode(&content),
        );
        let frame = frame_len(p.len(), h.len());
        let l = frame + rng.random_range(0..=c.len() + 10);
        let seq = build_prompt(&publisher, &highlight, &content, l, &vocab).map_err(|e| format!("case {case}: {e}"))?;
        let spans_ok = seq.token_ids[seq.publisher_span.clone()] == p[..]
            && seq.token_ids[seq.highlight_span.clone()] == h[..]
            && vocab.decode(&seq.token_ids[seq.publisher_span.clone()]) == publisher
            && vocab.decode(&seq.token_ids[seq.highlight_span.clone()]) == highlight;
        check(spans_ok, format!("case {case}: publisher or highlight span damaged"))?;
        if frame + c.len() <= l {
            fit += 1;
            check(
                !seq.truncated && seq.len() == frame + c.len(),
                format!("case {case}: fitting input changed length"),
            )?;
            check(
                vocab.decode(seq.content_tokens()) == content,
                format!("case {case}: content does not round-trip"),
            )?;
        } else {
            over += 1;
            check(
                seq.truncated && seq.len() == l,
                format!("case {case}: length {} instead of {l}", seq.len()),
            )?;
            check(
                seq.content_tokens() == &c[..l - frame],
                format!("case {case}: truncation is not a content prefix"),
            )?;
        }
    }
    check(
        fit > 1000 && over > 1000,
        format!("unbalanced draw: {fit} fitting, {over} over-length"),
    )?;
    Ok(format!(
        "10000 inputs: {fit} round-trip exactly, {over} truncated to l with spans intact"
    ))
}

// ----------------------------------------------------------- reproducibility

fn cli(out: &Path, args: &[&str]) -> Result<String, String> {
    let mut argv = vec!["pubstyle", "--out-dir", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    run(&Cli::try_parse_from(argv).map_err(|e| e.to_string())?).map_err(|e| e.one_line())
}

fn artifacts(out: &Path) -> Result<(Vec<u8>, BTreeMap<String, String>), String> {
    let trace = std::fs::read(out.join("trace.jsonl")).map_err(|e| e.to_string())?;
    let digest = checkpoint_digest(&out.join("checkpoint")).map_err(|e| e.one_line())?;
    Ok((trace, digest))
}

fn criterion_8() -> Outcome {
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b, c) = (root.path().join("a"), root.path().join("b"), root.path().join("c"));
    cli(&a, &["train"])?;
    cli(&b, &["train"])?;
    let (trace_a, ckpt_a) = artifacts(&a)?;
    let (trace_b, ckpt_b) = artifacts(&b)?;
    check(trace_a == trace_b, "traces differ between identical runs")?;
    check(ckpt_a == ckpt_b, "checkpoints differ between identical runs")?;

    cli(&c, &["train", "--stop-after-epoch", "1"])?;
    let (partial, _) = artifacts(&c)?;
    check(partial != trace_a, "interrupted run already finished")?;
    cli(&c, &["train", "--resume"])?;
    let (trace_c, ckpt_c) = artifacts(&c)?;
    check(trace_c == trace_a, "resumed trace differs from the uninterrupted one")?;
    check(
        ckpt_c == ckpt_a,
        "resumed checkpoint differs from the uninterrupted one",
    )?;
    Ok(format!(
        "trace and {} checkpoint files identical; resume after epoch 1 matches",
        ckpt_a.len()
    ))
}

// ----------------------------------------------------------- shared backbone

fn criterion_9(base: &Result<Desk, String>) -> Outcome {
    let corpus = toy::corpus(0);
    let human: Vec<NewsRecord> = corpus.iter().filter(|r| r.split == Split::Train).cloned().collect();
    let mut config = RunConfig::desk_scale();
    config.dm.shared_backbone = true;
    let mut vocab = Vocab::build(human.iter().map(|r| r.content.as_str()));
    vocab.add_special_tokens(&SpecialTokens::default());
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let width = 8;
    let table = Arc::new(
        EmbeddingTable::new(
            vocab.len(),
            width,
            (0..vocab.len() * width).map(|_| rng.random_range(-0.5..0.5)).collect(),
            Vocab::UNKNOWN,
        )
        .map_err(|e| e.to_string())?,
    );
    let labels = pubstyle::discriminators::LabelIndex::from_records(&human);
    let mut d = Discriminators::new(table, labels, &config.dm, 1);
    let Discriminators::Shared(before) = d.clone() else {
        return Err("shared_backbone = true built separate discriminators".into());
    };
    let (half_a, half_b) = human.split_at(human.len() / 2);
    let machine: Vec<NewsRecord> = half_b
        .iter()
        .map(|r| NewsRecord {
            source: Source::Machine,
            ..r.clone()
        })
        .collect();

    d.train_style(half_a, &vocab, 1, &config.dm, 2)
        .map_err(|e| e.to_string())?;
    let Discriminators::Shared(after_style) = d.clone() else {
        unreachable!()
    };
    check(
        after_style.backbone.alpha_raw != before.backbone.alpha_raw,
        "style training did not move the backbone",
    )?;
    check(
        after_style.source_view().model.backbone == after_style.style_view().model.backbone,
        "views see different backbones",
    )?;
    check(
        after_style.source_head == before.source_head,
        "style training touched the source head",
    )?;

    d.train_source(half_a, &machine, &vocab, 1, &config.dm, 3)
        .map_err(|e| e.to_string())?;
    let Discriminators::Shared(after_source) = d else {
        unreachable!()
    };
    check(
        after_source.backbone.alpha_raw != after_style.backbone.alpha_raw,
        "source training did not move the backbone",
    )?;
    check(
        after_source.style_head == after_style.style_head,
        "source training touched the style head",
    )?;

    let unshared = base.as_ref().map_err(Clone::clone)?;
    let shared = desk_run(&config)?;
    let (ds, dq) = (
        (shared.style_f1 - unshared.style_f1).abs(),
        (shared.source_f1 - unshared.source_f1).abs(),
    );
    let summary = format!(
        "aliasing and isolation hold; shared style {:.3} / source {:.3} vs unshared {:.3} / {:.3}",
        shared.style_f1, shared.source_f1, unshared.style_f1, unshared.source_f1
    );
    check(ds <= 0.15 && dq <= 0.15, format!("F1 gap over 0.15; {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------- hops

fn criterion_10(base: &Result<Desk, String>) -> Outcome {
    let mut scores = Vec::new();
    for p in [1, 2, 3] {
        let f1 = if p == RunConfig::desk_scale().dm.hops {
            base.as_ref().map_err(Clone::clone)?.style_f1
        } else {
            let mut config = RunConfig::desk_scale();
            config.dm.hops = p;
            desk_run(&config)?.style_f1
        };
        scores.push(f1);
    }
    let spread =
        scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - scores.iter().cloned().fold(f64::INFINITY, f64::min);
    let summary = format!(
        "style F1 p=1 {:.3}, p=2 {:.3}, p=3 {:.3}, spread {spread:.3}",
        scores[0], scores[1], scores[2]
    );
    check(spread < 0.10, format!("spread too large; {summary}"))?;
    Ok(summary)
}

// ---------------------------------------------------------------------------

fn guarded<T>(f: impl FnOnce() -> Result<T, String>) -> Result<T, String> {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|panic| {
        let msg = panic
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into());
        Err(msg)
    })
}

fn main() {
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let wanted = |n: usize| filter.as_deref().is_none_or(|f| f == n.to_string());

    let needs_base = [5, 9, 10].iter().any(|&n| wanted(n));
    let base = if needs_base {
        guarded(|| desk_run(&RunConfig::desk_scale()))
    } else {
        Err("not run".into())
    };

    let criteria: Vec<(usize, &str, Box<dyn FnOnce() -> Outcome + '_>)> = vec![
        (1, "word-graph forward matches brute force", Box::new(criterion_1)),
        (2, "gradients match central differences", Box::new(criterion_2)),
        (3, "alpha = 1 is invariant to rewiring", Box::new(criterion_3)),
        (4, "schedule conformance", Box::new(criterion_4)),
        (5, "desk-scale end-to-end run", Box::new(|| criterion_5(&base))),
        (6, "metric extremes", Box::new(criterion_6)),
        (7, "prompt contract", Box::new(criterion_7)),
        (8, "reproducibility and resume", Box::new(criterion_8)),
        (9, "shared backbone", Box::new(|| criterion_9(&base))),
        (10, "hop-count robustness", Box::new(|| criterion_10(&base))),
    ];
    let mut failures = 0;
    for (n, name, f) in criteria {
        if !wanted(n) {
            continue;
        }
        match guarded(f) {
            Ok(detail) => println!("criterion {n:>2} PASS  {name}: {detail}"),
            Err(detail) => {
                failures += 1;
                println!("criterion {n:>2} FAIL  {name}: {detail}");
            }
        }
    }
    if failures > 0 {
        println!("{failures} criterion(s) failed");
        std::process::exit(1);
    }
}
