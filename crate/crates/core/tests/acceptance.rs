//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.
//!
//! Run alone with `cargo test -p llaca --test acceptance`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::{Duration, Instant};

use llaca::automaton::{Automaton, ROOT};
use llaca::corpus::{load_gold, load_raw, Span};
use llaca::llm::{run_llm_ws, Fixture, WsOptions};
use llaca::pipeline::evaluate;
use llaca::segmenter::{
    build_dag, corpus_ppl, sentence_ppl, viterbi, PreprocessRules, SentenceScore, Weighting,
};
use llaca::{Decoder, GoldCorpus, RawCorpus, Segmenter, SuffixIndex, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: impl Into<String>) -> Outcome {
    if ok {
        Ok(detail.into())
    } else {
        Err(detail.into())
    }
}

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures"))
}

fn random_word(rng: &mut ChaCha8Rng, alphabet: &[char], max_len: usize) -> String {
    let len = rng.gen_range(1..=max_len);
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

fn random_vocab(
    rng: &mut ChaCha8Rng,
    alphabet: &[char],
    max_words: usize,
    max_len: usize,
) -> BTreeMap<String, u64> {
    let n = rng.gen_range(0..=max_words);
    (0..n)
        .map(|_| (random_word(rng, alphabet, max_len), rng.gen_range(1..10)))
        .collect()
}

fn vocabulary(words: &BTreeMap<String, u64>) -> Vocabulary {
    Vocabulary::from_counts(words.iter().map(|(w, c)| (w.as_str(), *c)))
}

fn eq2_worked_example() -> Outcome {
    let a = Automaton::build(&Vocabulary::from_counts([
        ("a", 1),
        ("ab", 2),
        ("ac", 3),
        ("bc", 4),
    ]));
    let ratio = |w: &str| {
        let n = a.node(a.find(w).unwrap());
        (n.count(), a.node(n.prev_final()).subtree_sum())
    };
    let (ab, bc) = (ratio("ab"), ratio("bc"));
    let pab = a.word_prob("ab").unwrap();
    let pbc = a.word_prob("bc").unwrap();
    check(
        ab.0 * 3 == ab.1
            && bc.0 * 5 == bc.1 * 2
            && (pab - 1.0 / 3.0).abs() < 1e-12
            && (pbc - 0.4).abs() < 1e-12,
        format!("p(ab)={}/{} p(bc)={}/{}", ab.0, ab.1, bc.0, bc.1),
    )
}

fn sherd_trace() -> Outcome {
    let a = Automaton::build(&Vocabulary::from_counts([
        ("she", 1),
        ("he", 1),
        ("her", 1),
    ]));
    let got: BTreeSet<(String, usize, usize)> = a
        .scan("sherd")
        .into_iter()
        .map(|m| (a.spell(m.node), m.start(), m.end))
        .collect();
    let want: BTreeSet<(String, usize, usize)> = [("she", 0, 3), ("he", 1, 3), ("her", 1, 4)]
        .into_iter()
        .map(|(w, s, e)| (w.to_owned(), s, e))
        .collect();
    check(got == want, format!("{got:?}"))
}

fn aho_corasick_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut link_checks = 0;
    for case in 0..1000 {
        let size = rng.gen_range(1..=6);
        let alphabet: Vec<char> = "abcdef".chars().take(size).collect();
        let words = random_vocab(&mut rng, &alphabet, 15, 5);
        let text: Vec<char> = (0..rng.gen_range(0..=60))
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        let a = Automaton::build(&vocabulary(&words));

        let got: BTreeSet<(usize, usize)> = a
            .scan(&text.iter().collect::<String>())
            .into_iter()
            .map(|m| (m.start(), m.end))
            .collect();
        let mut want = BTreeSet::new();
        for i in 0..text.len() {
            for j in i + 1..=text.len() {
                if words.contains_key(&text[i..j].iter().collect::<String>()) {
                    want.insert((i, j));
                }
            }
        }
        if got != want {
            return Err(format!("case {case}: scan {got:?} != naive {want:?}"));
        }

        if a.node_count() <= 30 {
            for id in 1..a.node_count() as u32 {
                let s: Vec<char> = a.spell(id).chars().collect();
                let expect = (1..=s.len())
                    .find_map(|k| a.find(&s[k..].iter().collect::<String>()))
                    .unwrap_or(ROOT);
                if a.node(id).fail() != expect {
                    return Err(format!("case {case}: fail link of {:?}", a.spell(id)));
                }
                link_checks += 1;
            }
        }
    }
    Ok(format!("1000 instances, {link_checks} fail links checked"))
}

/// Word probability straight from the definition: the count over the summed
/// counts of every word extending the longest proper prefix that is a word.
fn brute_word_prob(words: &BTreeMap<String, u64>, w: &str) -> f64 {
    let chars: Vec<char> = w.chars().collect();
    let prev: String = (1..chars.len())
        .rev()
        .map(|k| chars[..k].iter().collect::<String>())
        .find(|p| words.contains_key(p))
        .unwrap_or_default();
    let denom: u64 = words
        .iter()
        .filter(|(v, _)| v.starts_with(&prev))
        .map(|(_, c)| c)
        .sum();
    words[w] as f64 / denom as f64
}

/// Best tiling over all boundary sets; among near-equal scores, the longer
/// last word, then the same rule leftwards.
fn brute_viterbi(words: &BTreeMap<String, u64>, text: &[char]) -> (f64, Vec<Span>) {
    let n = text.len();
    let total: u64 = words.values().sum();
    let fallback = (1.0 / (total as f64 + 1.0)).ln();
    let mut all = Vec::new();
    for mask in 0u32..(1 << (n - 1)) {
        let mut cuts = vec![0];
        cuts.extend((1..n).filter(|i| mask & (1 << (i - 1)) != 0));
        cuts.push(n);
        let mut score = 0.0;
        let mut spans = Vec::new();
        let mut ok = true;
        for w in cuts.windows(2) {
            let piece: String = text[w[0]..w[1]].iter().collect();
            if words.contains_key(&piece) {
                score += brute_word_prob(words, &piece).ln();
            } else if w[1] - w[0] == 1 {
                score += fallback;
            } else {
                ok = false;
            }
            spans.push(Span::new(w[0], w[1]));
        }
        if ok {
            all.push((score, spans));
        }
    }
    let best = all
        .iter()
        .map(|(s, _)| *s)
        .fold(f64::NEG_INFINITY, f64::max);
    all.into_iter()
        .filter(|(s, _)| best - *s <= 1e-9)
        .min_by(|(_, a), (_, b)| {
            a.iter()
                .rev()
                .map(|s| s.start)
                .cmp(b.iter().rev().map(|s| s.start))
        })
        .unwrap()
}

fn viterbi_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let alphabet: Vec<char> = "abcd".chars().collect();
    for case in 0..500 {
        let words = random_vocab(&mut rng, &alphabet, 8, 4);
        let text: Vec<char> = (0..rng.gen_range(1..=10))
            .map(|_| *alphabet.choose(&mut rng).unwrap())
            .collect();
        let a = Automaton::build(&vocabulary(&words));
        let dag = build_dag(&text, &a, &PreprocessRules::default(), Weighting::Context);
        let seg = viterbi(&dag).map_err(|e| e.to_string())?;
        let (score, spans) = brute_viterbi(&words, &text);
        if (seg.score - score).abs() > 1e-9 || seg.spans != spans {
            return Err(format!(
                "case {case}: {:?} {words:?}: decoded {:?} ({}), enumeration {:?} ({score})",
                text.iter().collect::<String>(),
                seg.spans,
                seg.score,
                spans
            ));
        }
    }
    Ok("500 instances".into())
}

fn naive_count(sentences: &[Vec<char>], pat: &[char]) -> usize {
    sentences
        .iter()
        .map(|s| s.windows(pat.len()).filter(|w| *w == pat).count())
        .sum()
}

fn brute_pmi(sentences: &[Vec<char>], n: usize, w: &[char]) -> f64 {
    if w.len() == 1 {
        return f64::INFINITY;
    }
    let p = |s: &[char]| naive_count(sentences, s) as f64 / n as f64;
    let pw = p(w);
    if pw == 0.0 {
        return f64::NEG_INFINITY;
    }
    (1..w.len())
        .map(|k| (pw / (p(&w[..k]) * p(&w[k..]))).ln())
        .fold(f64::INFINITY, f64::min)
}

fn suffix_index_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let alphabet: Vec<char> = "abc".chars().collect();
    let mut checked = 0;
    for case in 0..100 {
        let budget = rng.gen_range(1..=200);
        let mut sentences: Vec<Vec<char>> = Vec::new();
        let mut used = 0;
        while used < budget {
            let len = rng.gen_range(1..=20).min(budget - used);
            sentences.push(
                (0..len)
                    .map(|_| *alphabet.choose(&mut rng).unwrap())
                    .collect(),
            );
            used += len;
        }
        let strings: Vec<String> = sentences.iter().map(|s| s.iter().collect()).collect();
        let index = SuffixIndex::from_sentences(strings.iter().map(String::as_str));
        let mut substrings = BTreeSet::new();
        for s in &sentences {
            for i in 0..s.len() {
                for j in i + 1..=s.len().min(i + 8) {
                    substrings.insert(s[i..j].to_vec());
                }
            }
        }
        // a few strings that span a sentence break or never occur
        substrings.insert("cccccccccc".chars().collect());
        substrings.insert("abcabcabca".chars().collect());
        for sub in &substrings {
            let got = index.occurrences_chars(sub);
            let want = naive_count(&sentences, sub);
            if got != want {
                return Err(format!(
                    "case {case}: occurrences({:?}) = {got}, naive {want}",
                    sub.iter().collect::<String>()
                ));
            }
            let (p, q) = (index.pmi_chars(sub), brute_pmi(&sentences, used, sub));
            let same = if p.is_finite() {
                (p - q).abs() < 1e-9
            } else {
                p == q
            };
            if !same {
                return Err(format!(
                    "case {case}: pmi({:?}) = {p}, brute {q}",
                    sub.iter().collect::<String>()
                ));
            }
            checked += 1;
        }
    }
    Ok(format!("100 corpora, {checked} substrings"))
}

fn perplexity_identities() -> Outcome {
    let a = Automaton::build(&Vocabulary::from_counts([("ab", 3), ("b", 2), ("bc", 1)]));
    let s = Segmenter::from_automaton(a);
    let sentences = ["abc", "bcab", "cab", "b"];
    let base = corpus_ppl(&s.score_all(&sentences, Decoder::Llaca)).map_err(|e| e.to_string())?;
    for k in 2..=5 {
        let dup: Vec<&str> = sentences
            .iter()
            .copied()
            .cycle()
            .take(sentences.len() * k)
            .collect();
        let ppl = corpus_ppl(&s.score_all(&dup, Decoder::Llaca)).map_err(|e| e.to_string())?;
        if (ppl - base).abs() > 1e-12 * base {
            return Err(format!("{k}-fold duplication: {ppl} vs {base}"));
        }
    }
    let two = SentenceScore {
        log_p: -(2f64.ln()),
        n: 1,
    };
    let eight = SentenceScore {
        log_p: -(8f64.ln()),
        n: 1,
    };
    let pair = corpus_ppl(&[two, eight]).map_err(|e| e.to_string())?;
    let one = sentence_ppl(SentenceScore { log_p: 0.0, n: 5 });
    check(
        (pair - 4.0).abs() < 1e-12 && one == 1.0,
        format!("duplication ok, PPL(2,8)={pair}, PPL(log 0)={one}"),
    )
}

fn unigram_degeneration() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let alphabet: Vec<char> = "abcde".chars().collect();
    let mut vocabularies = 0;
    let mut words_checked = 0;
    while vocabularies < 100 {
        let mut words = random_vocab(&mut rng, &alphabet, 12, 4);
        let keys: Vec<String> = words.keys().cloned().collect();
        words.retain(|w, _| !keys.iter().any(|k| k != w && k.starts_with(w.as_str())));
        if words.is_empty() {
            continue;
        }
        vocabularies += 1;
        let total: u64 = words.values().sum();
        let a = Automaton::build(&vocabulary(&words));
        for (w, c) in &words {
            let p = a.word_prob(w).map_err(|e| e.to_string())?;
            if (p - *c as f64 / total as f64).abs() > 1e-12 {
                return Err(format!("{words:?}: p({w}) = {p}, expected {c}/{total}"));
            }
            words_checked += 1;
        }
    }
    Ok(format!("100 vocabularies, {words_checked} words"))
}

struct FixtureRun {
    gold: GoldCorpus,
    raw: RawCorpus,
    clean: BTreeMap<Decoder, f64>,
    noise: f64,
}

fn fixture_run() -> Result<FixtureRun, String> {
    let dir = fixtures();
    let gold = load_gold(dir.join("gold.txt")).map_err(|e| e.to_string())?;
    let raw = load_raw(dir.join("raw.txt")).map_err(|e| e.to_string())?;
    let index = SuffixIndex::build(&raw);
    let f_scores = |fixture: &str| -> Result<BTreeMap<Decoder, f64>, String> {
        let fx = Fixture::load(dir.join(fixture)).map_err(|e| e.to_string())?;
        let v = run_llm_ws(&fx, &raw, &index, &WsOptions::default()).map_err(|e| e.to_string())?;
        let s = Segmenter::new(&v);
        Decoder::ALL
            .into_iter()
            .map(|d| {
                Ok((
                    d,
                    evaluate(&s, &raw, &gold, d)
                        .map_err(|e| e.to_string())?
                        .f_measure,
                ))
            })
            .collect()
    };
    let clean = f_scores("fixture_clean.txt")?;
    let noise = f_scores("fixture_noise.txt")?[&Decoder::Llaca];
    Ok(FixtureRun {
        gold,
        raw,
        clean,
        noise,
    })
}

fn end_to_end(run: &FixtureRun) -> Outcome {
    let lexicon: BTreeSet<&String> = run.gold.sentences.iter().flatten().collect();
    let f = run.clean[&Decoder::Llaca];
    check(
        run.raw.len() >= 200 && lexicon.len() <= 50 && f >= 0.95 && f - run.noise < 0.02,
        format!(
            "{} sentences, {} words, F clean={f:.4} noisy={:.4}",
            run.raw.len(),
            lexicon.len(),
            run.noise
        ),
    )
}

fn decoder_ordering(run: &FixtureRun) -> Outcome {
    let f = |d| run.clean[&d];
    let (llaca, uni, fmm, bmm) = (
        f(Decoder::Llaca),
        f(Decoder::Uni),
        f(Decoder::Fmm),
        f(Decoder::Bmm),
    );
    check(
        llaca >= uni && uni >= fmm.max(bmm) - 0.005 && llaca > fmm,
        format!("llaca={llaca:.4} uni={uni:.4} fmm={fmm:.4} bmm={bmm:.4}"),
    )
}

/// Zipf-weighted vocabulary over a few thousand CJK characters.
fn synthetic_vocab(rng: &mut ChaCha8Rng, size: usize) -> Vec<(String, u64)> {
    let alphabet: Vec<char> = (0x4E00..0x4E00 + 3000).filter_map(char::from_u32).collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::with_capacity(size);
    while out.len() < size {
        let len = rng.gen_range(1..=4);
        let w: String = (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect();
        if seen.insert(w.clone()) {
            out.push((w, 1 + 20_000 / (out.len() as u64 + 1)));
        }
    }
    out
}

fn throughput() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let words = synthetic_vocab(&mut rng, 10_000);
    let vocab = Vocabulary::from_counts(words.iter().map(|(w, c)| (w.as_str(), *c)));
    let mut sentences = Vec::new();
    let mut chars = 0;
    while chars < 180_000 {
        let mut s = String::new();
        while s.chars().count() < 30 {
            // favour frequent words, as running text does
            let r = (rng.gen::<f64>().powi(3) * words.len() as f64) as usize;
            s.push_str(&words[r].0);
        }
        s.push('。');
        chars += s.chars().count();
        sentences.push(s);
    }
    let started = Instant::now();
    let segmenter = Segmenter::new(&vocab);
    let out = segmenter.segment_all(&sentences, Decoder::Llaca);
    let segment_time = started.elapsed();
    let produced: usize = out.iter().flatten().map(|t| t.chars().count()).sum();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let tsv = dir.path().join("vocab.tsv");
    let big = synthetic_vocab(&mut rng, 20_000);
    Vocabulary::from_counts(big.iter().map(|(w, c)| (w.as_str(), *c)))
        .save_tsv(&tsv)
        .map_err(|e| e.to_string())?;
    let started = Instant::now();
    let a = Automaton::build(&Vocabulary::load_tsv(&tsv).map_err(|e| e.to_string())?);
    let build_time = started.elapsed();

    check(
        produced == chars
            && segment_time <= Duration::from_secs(4)
            && build_time <= Duration::from_secs(1)
            && a.word_count() == 20_000,
        format!(
            "segmented {chars} chars with {} words in {:.2}s; built {} words from TSV in {:.3}s",
            vocab.len(),
            segment_time.as_secs_f64(),
            a.word_count(),
            build_time.as_secs_f64()
        ),
    )
}

fn main() {
    let fixture = fixture_run();
    let from_fixture =
        |f: fn(&FixtureRun) -> Outcome| fixture.as_ref().map_err(Clone::clone).and_then(f);
    let results: Vec<(&str, Outcome)> = vec![
        ("1 context probability worked example", eq2_worked_example()),
        ("2 sherd match trace", sherd_trace()),
        ("3 Aho-Corasick vs naive matching", aho_corasick_oracle()),
        ("4 Viterbi vs exhaustive enumeration", viterbi_oracle()),
        (
            "5 suffix index vs naive counting and PMI",
            suffix_index_oracle(),
        ),
        ("6 perplexity identities", perplexity_identities()),
        (
            "7 unigram degeneration on prefix-free vocabularies",
            unigram_degeneration(),
        ),
        ("8 end-to-end fixture run", from_fixture(end_to_end)),
        (
            "9 decoder ordering on the ambiguity fixture",
            from_fixture(decoder_ordering),
        ),
        ("10 throughput", throughput()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name}: {detail}");
            }
        }
    }
    println!("SKIP  11 published multilingual F-measures: need a live model endpoint and licensed benchmark corpora");
    println!("{} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
