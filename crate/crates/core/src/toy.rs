//! Deterministic two-publisher toy corpus used by smoke tests, the acceptance
//! suite and the CLI.
//!
//! Both publishers share sentence templates and filler words; they differ only
//! in the marker words that fill the template slots. Publisher A uses British
//! spellings and vocabulary, publisher B the American equivalents.

use rand::seq::IndexedRandom;
use rand::Rng;

use crate::corpus::{NewsRecord, Source, Split};
use crate::rng;

pub const PUBLISHER_A: &str = "Gazette";
pub const PUBLISHER_B: &str = "Courier";

pub const MARKERS_A: [&str; 30] = [
    "colour",
    "favour",
    "centre",
    "theatre",
    "labour",
    "defence",
    "programme",
    "organise",
    "analyse",
    "realise",
    "travelled",
    "neighbour",
    "honour",
    "licence",
    "catalogue",
    "metre",
    "flavour",
    "humour",
    "behaviour",
    "harbour",
    "cheque",
    "tyre",
    "grey",
    "jewellery",
    "lorry",
    "flat",
    "holiday",
    "football",
    "pavement",
    "queue",
];

pub const MARKERS_B: [&str; 30] = [
    "color",
    "favor",
    "center",
    "theater",
    "labor",
    "defense",
    "program",
    "organize",
    "analyze",
    "realize",
    "traveled",
    "neighbor",
    "honor",
    "license",
    "catalog",
    "meter",
    "flavor",
    "humor",
    "behavior",
    "harbor",
    "check",
    "tire",
    "gray",
    "jewelry",
    "truck",
    "apartment",
    "vacation",
    "soccer",
    "sidewalk",
    "line",
];

const PLACES: [&str; 12] = [
    "council", "city", "market", "school", "station", "river", "bridge", "hospital", "park", "museum", "court",
    "village",
];

/// `M` is a marker slot, `S` a shared place slot.
const SENTENCES: [&str; 6] = [
    "the M of the S was M .",
    "officials said the S will M the M .",
    "a new M opened near the S this week .",
    "residents of the S reported M after the M .",
    "the S plans a M and a M next month .",
    "police at the S found M on the M .",
];

const HIGHLIGHTS: [&str; 3] = ["M at the S", "S debates M", "new M for S"];

pub const DOCUMENTS: usize = 200;

/// Per publisher: 70 TRAIN, 10 VAL, 20 TEST.
fn split_for(rank: usize) -> Split {
    match rank {
        0..70 => Split::Train,
        70..80 => Split::Val,
        _ => Split::Test,
    }
}

fn fill<R: Rng>(template: &str, markers: &[&str], place: &str, rng: &mut R) -> String {
    template
        .split(' ')
        .map(|w| match w {
            "M" => *markers.choose(rng).unwrap(),
            "S" => place,
            other => other,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Markers drawn for one document.
pub const TOPIC_MARKERS: usize = 4;

/// The 200-document corpus. Records alternate A, B, A, ...; ids are
/// `toy-000` to `toy-199`. Each document is about one place and draws its
/// markers from a small per-document subset of its publisher's markers.
pub fn corpus(seed: u64) -> Vec<NewsRecord> {
    let mut rng = rng::stream(seed, &[rng::tag("toy_corpus")]);
    (0..DOCUMENTS)
        .map(|i| {
            let (publisher, markers): (&str, &[&str]) = if i % 2 == 0 {
                (PUBLISHER_A, &MARKERS_A)
            } else {
                (PUBLISHER_B, &MARKERS_B)
            };
            let place = *PLACES.choose(&mut rng).unwrap();
            let topic: Vec<&str> = markers.choose_multiple(&mut rng, TOPIC_MARKERS).copied().collect();
            let highlight = fill(HIGHLIGHTS.choose(&mut rng).unwrap(), &topic, place, &mut rng);
            let n = rng.random_range(3..=5);
            let content: Vec<String> = (0..n)
                .map(|_| fill(SENTENCES.choose(&mut rng).unwrap(), &topic, place, &mut rng))
                .collect();
            NewsRecord {
                id: format!("toy-{i:03}"),
                publisher: publisher.to_string(),
                highlight,
                content: content.join(" "),
                source: Source::Human,
                split: split_for(i / 2),
            }
        })
        .collect()
}

/// The bundled copy of `corpus(0)`, one JSON record per line.
pub const BUNDLED_JSONL: &str = include_str!("../data/toy_corpus.jsonl");

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct MarkerCounts {
    pub a: usize,
    pub b: usize,
}

pub fn marker_counts(text: &str) -> MarkerCounts {
    let mut counts = MarkerCounts::default();
    for w in text.split_whitespace() {
        if MARKERS_A.contains(&w) {
            counts.a += 1;
        } else if MARKERS_B.contains(&w) {
            counts.b += 1;
        }
    }
    counts
}
