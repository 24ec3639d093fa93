//! A news-sized corpus: thousands of long articles from a skewed set of
//! publishers, written to disk in both formats and read back.

use pubstyle::corpus::{compute_stats, filter_top_publishers, load_corpus, save_corpus, split_sampled, Format};
use pubstyle::{rng, NewsRecord, Source, Split};
use rand::Rng;

const ARTICLES: usize = 6000;
const WORDS_PER_ARTICLE: usize = 400;

fn synthetic() -> Vec<NewsRecord> {
    let mut r = rng::stream(1, &[rng::tag("large_corpus")]);
    let publishers = ["cnn", "dailymail", "bbc", "guardian", "reuters", "ap", "fox", "nyt"];
    let words: Vec<String> = (0..5000).map(|i| format!("w{i}")).collect();
    (0..ARTICLES)
        .map(|i| {
            // Zipf-like skew: the first publishers dominate.
            let p = publishers[(r.random::<f64>().powi(3) * publishers.len() as f64) as usize];
            let len = WORDS_PER_ARTICLE / 2 + r.random_range(0..WORDS_PER_ARTICLE);
            let content: Vec<&str> = (0..len)
                .map(|_| words[r.random_range(0..words.len())].as_str())
                .collect();
            NewsRecord {
                id: format!("{p}-{i:06}"),
                publisher: p.into(),
                highlight: content[..12].join(" "),
                content: content.join(" "),
                source: Source::Human,
                split: match i % 20 {
                    0 => Split::Val,
                    1 => Split::Test,
                    _ => Split::Train,
                },
            }
        })
        .collect()
}

#[test]
fn loads_a_news_sized_corpus_in_both_formats() {
    let records = synthetic();
    let dir = tempfile::tempdir().unwrap();

    let jsonl = dir.path().join("corpus.jsonl");
    save_corpus(&jsonl, &records, Some("feedface")).unwrap();
    assert_eq!(load_corpus(&jsonl, Format::Jsonl).unwrap(), records);

    let tsv = dir.path().join("corpus.tsv");
    let mut text = String::from("id\tpublisher\thighlight\tcontent\tsource\tsplit\n");
    for r in &records {
        text.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\n",
            r.id, r.publisher, r.highlight, r.content, r.source, r.split
        ));
    }
    std::fs::write(&tsv, text).unwrap();
    assert_eq!(load_corpus(&tsv, Format::Tsv).unwrap(), records);

    let stats = compute_stats(&records).unwrap();
    assert_eq!(stats.total, ARTICLES);
    assert_eq!(
        stats.counts["VAL"] + stats.counts["TEST"] + stats.counts["TRAIN"],
        ARTICLES
    );
    assert_eq!(stats.publisher_classes, 8);
    assert!((stats.avg_content_tokens - WORDS_PER_ARTICLE as f64).abs() < 10.0);
    assert!((stats.avg_prompt_tokens - stats.avg_content_tokens - 16.0).abs() < 1e-9);

    let top = filter_top_publishers(&records, 3);
    let kept: std::collections::BTreeSet<&str> = top.iter().map(|r| r.publisher.as_str()).collect();
    assert_eq!(kept.into_iter().collect::<Vec<_>>(), ["bbc", "cnn", "dailymail"]);

    let train: Vec<NewsRecord> = records.into_iter().filter(|r| r.split == Split::Train).collect();
    let split = split_sampled(&train, 0.5, 4).unwrap();
    assert_eq!(split.sampled.len() + split.unsampled.len(), train.len());
}
