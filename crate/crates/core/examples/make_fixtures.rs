//! Regenerates the synthetic corpus under `tests/fixtures/`.
//!
//! ```text
//! cargo run -p llaca --example make_fixtures -- crates/core/tests/fixtures
//! ```
//!
//! Sentences are drawn from a handful of frames over a small lexicon. Several
//! frames contain overlaps that trip one greedy direction: 武汉市长 (forward
//! reads 武汉市 长), 研究生命, 和尚未, 大学生活, and 美国会 (backward reads
//! 美 国会). The clean fixture answers every sentence with its gold line; the
//! noisy one answers a tenth of them with an English gloss instead.

use std::fs;
use std::path::PathBuf;

use llaca::llm::{run_llm_ws, Fixture, WsOptions};
use llaca::pipeline::evaluate;
use llaca::{strip_gold, Decoder, GoldCorpus, Segmenter, SuffixIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SENTENCES: usize = 240;
const SEED: u64 = 2024;

const SUBJECT: &[&str] = &["我们", "他们", "学生", "市长"];
const TIME: &[&str] = &["今天", "明天", "2024 年"];
const PLACE: &[&str] = &["武汉", "武汉市", "长江 大桥", "大学", "学校"];
const VERB: &[&str] = &["通过", "讨论"];
const OBJECT: &[&str] = &["法案", "问题"];

const FRAMES: &[&str] = &[
    "$S $T 参观 $P 。",
    "武汉 市长 $T 参观 $P 。",
    "$T 武汉市 长江 大桥 很 好 。",
    "$S 喜欢 研究 生命 的 起源 。",
    "$S 讨论 结婚 的 和 尚未 结婚 的 $S 。",
    "美国 会 $T $V $O 。",
    "国会 $T $V $O 。",
    "$S 的 大学 生活 很 好 。",
    "$S 在 大学 学习 ， $S 是 研究生 。",
    "大学生 $T 参观 $P 。",
    "和尚 $T 参观 $P 。",
    "$S 和 $S $T $V $O 。",
    "$S $T 研究 $O 。",
];

const GLOSS: &[(&str, &str)] = &[
    ("我们", "we"),
    ("他们", "they"),
    ("学生", "students"),
    ("市长", "mayor"),
    ("大学生", "undergraduates"),
    ("今天", "today"),
    ("明天", "tomorrow"),
    ("年", "year"),
    ("武汉", "Wuhan"),
    ("武汉市", "Wuhan city"),
    ("长江", "Yangtze"),
    ("大桥", "bridge"),
    ("大学", "university"),
    ("学校", "school"),
    ("参观", "visit"),
    ("很", "very"),
    ("好", "good"),
    ("研究生", "graduate students"),
    ("喜欢", "like"),
    ("研究", "studying"),
    ("生命", "life"),
    ("的", "of"),
    ("起源", "origin"),
    ("讨论", "discuss"),
    ("结婚", "married"),
    ("和", "and"),
    ("尚未", "not yet"),
    ("美国", "US"),
    ("会", "will"),
    ("通过", "pass"),
    ("法案", "bill"),
    ("国会", "Congress"),
    ("生活", "life"),
    ("在", "at"),
    ("学习", "study"),
    ("是", "are"),
    ("和尚", "monks"),
    ("问题", "problems"),
];

fn fill(frame: &str, rng: &mut ChaCha8Rng) -> String {
    frame
        .split(' ')
        .map(|slot| match slot {
            "$S" => *SUBJECT.choose(rng).unwrap(),
            "$T" => *TIME.choose(rng).unwrap(),
            "$P" => *PLACE.choose(rng).unwrap(),
            "$V" => *VERB.choose(rng).unwrap(),
            "$O" => *OBJECT.choose(rng).unwrap(),
            w => w,
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn gloss(tokens: &[String]) -> String {
    tokens
        .iter()
        .map(|t| {
            GLOSS
                .iter()
                .find(|(w, _)| w == t)
                .map_or(t.as_str(), |(_, g)| g)
                .replace(['，', '。'], "")
        })
        .filter(|t| !t.is_empty())
        .collect::<Vec<_>>()
        .join(" ")
}

fn main() {
    let out = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/core/tests/fixtures".into()),
    );
    fs::create_dir_all(&out).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);

    let lines: Vec<String> = (0..SENTENCES)
        .map(|_| fill(FRAMES[rng.gen_range(0..FRAMES.len())], &mut rng))
        .collect();
    let gold = GoldCorpus::parse(&lines.join("\n"));
    let raw = strip_gold(&gold);

    // the fixture answers each distinct sentence once, so pick distinct
    // sentences until a tenth of the lines are covered
    let mut distinct: Vec<&str> = raw.sentences.iter().map(String::as_str).collect();
    distinct.sort_unstable();
    distinct.dedup();
    distinct.shuffle(&mut rng);
    let mut noisy = std::collections::HashSet::new();
    let mut covered = 0;
    for s in distinct {
        if covered >= SENTENCES / 10 {
            break;
        }
        covered += raw.sentences.iter().filter(|r| r.as_str() == s).count();
        noisy.insert(s.to_owned());
    }

    let mut clean = Fixture::new();
    let mut noise = Fixture::new();
    for tokens in &gold.sentences {
        let sentence = tokens.concat();
        clean.insert(sentence.clone(), tokens.join(" "));
        let answer = if noisy.contains(&sentence) {
            gloss(tokens)
        } else {
            tokens.join(" ")
        };
        noise.insert(sentence, answer);
    }

    gold.save(out.join("gold.txt")).unwrap();
    raw.save(out.join("raw.txt")).unwrap();
    clean.save(out.join("fixture_clean.txt")).unwrap();
    noise.save(out.join("fixture_noise.txt")).unwrap();

    let lexicon: std::collections::BTreeSet<&String> = gold.sentences.iter().flatten().collect();
    println!(
        "sentences={} lexicon={} noisy_lines={covered}",
        gold.len(),
        lexicon.len()
    );
    let index = SuffixIndex::build(&raw);
    for (name, fixture) in [("clean", &clean), ("noise", &noise)] {
        let v = run_llm_ws(fixture, &raw, &index, &WsOptions::default()).unwrap();
        let s = Segmenter::new(&v);
        for d in Decoder::ALL {
            let f = evaluate(&s, &raw, &gold, d).unwrap().f_measure;
            println!("{name} {d} F={f:.4}");
        }
    }
}
