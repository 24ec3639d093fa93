use std::collections::BTreeSet;

use proptest::prelude::*;
use pubstyle::corpus::{read_corpus, split_sampled, write_corpus, Format};
use pubstyle::prompting::{build_prompt, frame_len, strip_to_content};
use pubstyle::vocab::SpecialTokens;
use pubstyle::{NewsRecord, Source, Split, Vocab};

const WORDS: [&str; 12] = [
    "the", "council", "met", "on", "monday", "colour", "centre", ".", ",", "said", "it", "new",
];

fn vocab() -> Vocab {
    let mut v = Vocab::build(WORDS);
    v.add_special_tokens(&SpecialTokens::default());
    v
}

fn text(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 0..max).prop_map(|w| w.join(" "))
}

fn nonempty(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(WORDS.to_vec()), 1..max).prop_map(|w| w.join(" "))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn prompt_fits_or_truncates_only_content(
        publisher in nonempty(4),
        highlight in text(10),
        content in text(60),
        max_len in 1usize..80,
    ) {
        let v = vocab();
        let (p, h, c) = (v.encode(&publisher), v.encode(&highlight), v.encode(&content));
        let frame = frame_len(p.len(), h.len());
        let built = build_prompt(&publisher, &highlight, &content, max_len, &v);
        if frame > max_len {
            prop_assert!(built.is_err());
            return Ok(());
        }
        let seq = built.unwrap();
        prop_assert_eq!(&seq.token_ids[seq.publisher_span.clone()], &p[..]);
        prop_assert_eq!(&seq.token_ids[seq.highlight_span.clone()], &h[..]);
        let special = v.special_ids().unwrap();
        if frame + c.len() <= max_len {
            prop_assert!(!seq.truncated);
            prop_assert_eq!(seq.len(), frame + c.len());
            prop_assert_eq!(seq.content_tokens(), &c[..]);
            prop_assert_eq!(v.decode(seq.content_tokens()), content.split_whitespace().collect::<Vec<_>>().join(" "));
        } else {
            prop_assert!(seq.truncated);
            prop_assert_eq!(seq.len(), max_len);
            prop_assert_eq!(seq.content_tokens(), &c[..max_len - frame]);
        }
        prop_assert_eq!(strip_to_content(&seq.token_ids, &special).unwrap(), seq.content_tokens().to_vec());
    }
}

fn records(n: usize) -> Vec<NewsRecord> {
    (0..n)
        .map(|i| NewsRecord {
            id: format!("doc-{i}"),
            publisher: if i % 3 == 0 { "A".into() } else { "B".into() },
            highlight: "h".into(),
            content: format!("body {i}"),
            source: Source::Human,
            split: Split::Train,
        })
        .collect()
}

proptest! {
    #[test]
    fn split_is_a_partition_of_the_ids(n in 2usize..300, ratio in 0.01..0.99f64, seed in any::<u64>()) {
        let recs = records(n);
        let split = split_sampled(&recs, ratio, seed).unwrap();
        prop_assert!(split.sampled.is_disjoint(&split.unsampled));
        let union: BTreeSet<String> = split.sampled.union(&split.unsampled).cloned().collect();
        let ids: BTreeSet<String> = recs.iter().map(|r| r.id.clone()).collect();
        prop_assert_eq!(union, ids);
        prop_assert_eq!(split.sampled.len(), (ratio * n as f64).round() as usize);
        prop_assert_eq!(split_sampled(&recs, ratio, seed).unwrap(), split);
    }

    #[test]
    fn corpus_files_round_trip(n in 1usize..40, tsv in any::<bool>()) {
        let recs = records(n);
        let format = if tsv { Format::Tsv } else { Format::Jsonl };
        let mut buf = Vec::new();
        if tsv {
            buf.extend_from_slice(b"split\tid\tpublisher\thighlight\tcontent\tsource\n");
            for r in &recs {
                buf.extend_from_slice(format!("{}\t{}\t{}\t{}\t{}\t{}\n", r.split, r.id, r.publisher, r.highlight, r.content, r.source).as_bytes());
            }
        } else {
            write_corpus(&mut buf, &recs, Some("abc")).unwrap();
        }
        prop_assert_eq!(read_corpus(buf.as_slice(), format).unwrap(), recs);
    }
}
