//! Shared fixtures for integration tests: an independent straight-line
//! Kneser-Ney oracle (string-keyed, no backoff tables, everything
//! recomputed per query) and synthetic multilingual corpus generators.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use synthpipe::lang::Lang;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// Brute-force interpolated modified Kneser-Ney implementation.
///
/// Deliberately different machinery from the production model: word-string
/// keys, linear scans for denominators and per-context statistics, and a
/// fresh recursive evaluation for every probability query.
pub struct KnOracle {
    order: usize,
    /// adjusted[k-1]: k-gram -> count (raw at the top order and for
    /// BOS-prefixed grams, continuation counts elsewhere; grams ending in
    /// BOS excluded).
    adjusted: Vec<HashMap<Vec<String>, u64>>,
    /// (d1, d2, d3) per order.
    discounts: Vec<(f64, f64, f64)>,
    /// Predictable events: every vocab word except BOS.
    pub event_vocab: Vec<String>,
}

impl KnOracle {
    pub fn build(sentences: &[Vec<String>], order: usize) -> KnOracle {
        assert!(order >= 1);

        // Raw counts over padded sentences, every window counted.
        let mut raw: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
        for sentence in sentences {
            let mut padded: Vec<String> = vec![BOS.to_string(); order - 1];
            padded.extend(sentence.iter().cloned());
            padded.push(EOS.to_string());
            for k in 1..=order {
                for i in 0..=padded.len() - k {
                    *raw[k - 1].entry(padded[i..i + k].to_vec()).or_insert(0) += 1;
                }
            }
        }

        // Adjusted counts.
        let mut adjusted: Vec<HashMap<Vec<String>, u64>> = vec![HashMap::new(); order];
        adjusted[order - 1] = raw[order - 1]
            .iter()
            .filter(|(g, _)| g.last().map(|w| w != BOS).unwrap_or(false))
            .map(|(g, &c)| (g.clone(), c))
            .collect();
        for k in (1..order).rev() {
            let mut continuation: HashMap<Vec<String>, HashSet<String>> = HashMap::new();
            for gram in raw[k].keys() {
                let suffix = gram[1..].to_vec();
                if suffix.last().map(|w| w == BOS).unwrap_or(true) {
                    continue;
                }
                continuation.entry(suffix).or_default().insert(gram[0].clone());
            }
            let mut table: HashMap<Vec<String>, u64> = continuation
                .into_iter()
                .map(|(g, predecessors)| (g, predecessors.len() as u64))
                .collect();
            for (gram, &c) in &raw[k - 1] {
                if gram[0] == BOS && gram.last().map(|w| w != BOS).unwrap_or(false) {
                    table.insert(gram.clone(), c);
                }
            }
            adjusted[k - 1] = table;
        }

        let discounts = adjusted
            .iter()
            .map(|table| {
                let mut n = [0u64; 4];
                for &c in table.values() {
                    if (1..=4).contains(&c) {
                        n[(c - 1) as usize] += 1;
                    }
                }
                oracle_discounts(n[0], n[1], n[2], n[3])
            })
            .collect();

        // Event vocabulary: every observed word plus EOS and UNK, no BOS.
        let mut vocab: HashSet<String> = HashSet::new();
        for sentence in sentences {
            vocab.extend(sentence.iter().cloned());
        }
        vocab.insert(EOS.to_string());
        vocab.insert(UNK.to_string());
        let mut event_vocab: Vec<String> = vocab.into_iter().collect();
        event_vocab.sort();

        KnOracle {
            order,
            adjusted,
            discounts,
            event_vocab,
        }
    }

    fn discount_for(&self, level: usize, count: u64) -> f64 {
        let (d1, d2, d3) = self.discounts[level - 1];
        match count {
            0 => 0.0,
            1 => d1,
            2 => d2,
            _ => d3,
        }
    }

    fn map_word(&self, w: &str) -> String {
        if self.event_vocab.iter().any(|v| v == w) || w == BOS {
            w.to_string()
        } else {
            UNK.to_string()
        }
    }

    /// P(w | ctx), evaluated directly from the interpolation formula.
    pub fn prob(&self, ctx: &[&str], w: &str) -> f64 {
        let ctx: Vec<String> = ctx
            .iter()
            .skip(ctx.len().saturating_sub(self.order - 1))
            .map(|t| self.map_word(t))
            .collect();
        let w = self.map_word(w);
        self.prob_level(&ctx, &w)
    }

    fn prob_level(&self, ctx: &[String], w: &str) -> f64 {
        let level = ctx.len() + 1;
        let table = &self.adjusted[level - 1];
        if level == 1 {
            let denom: u64 = table.values().sum();
            let (mut n1, mut n2, mut n3p) = (0u64, 0u64, 0u64);
            for &c in table.values() {
                match c {
                    1 => n1 += 1,
                    2 => n2 += 1,
                    _ => n3p += 1,
                }
            }
            let (d1, d2, d3) = self.discounts[0];
            let gamma = (d1 * n1 as f64 + d2 * n2 as f64 + d3 * n3p as f64) / denom as f64;
            let a = table.get(&vec![w.to_string()]).copied().unwrap_or(0);
            let discounted = (a as f64 - self.discount_for(1, a)).max(0.0);
            return discounted / denom as f64 + gamma / self.event_vocab.len() as f64;
        }

        // Per-context statistics by linear scan.
        let mut denom = 0u64;
        let (mut n1, mut n2, mut n3p) = (0u64, 0u64, 0u64);
        for (gram, &c) in table {
            if gram[..level - 1] == *ctx {
                denom += c;
                match c {
                    1 => n1 += 1,
                    2 => n2 += 1,
                    _ => n3p += 1,
                }
            }
        }
        if denom == 0 {
            return self.prob_level(&ctx[1..], w);
        }
        let (d1, d2, d3) = self.discounts[level - 1];
        let gamma = (d1 * n1 as f64 + d2 * n2 as f64 + d3 * n3p as f64) / denom as f64;
        let mut key = ctx.to_vec();
        key.push(w.to_string());
        let a = table.get(&key).copied().unwrap_or(0);
        let discounted = (a as f64 - self.discount_for(level, a)).max(0.0);
        discounted / denom as f64 + gamma * self.prob_level(&ctx[1..], w)
    }

    /// Every gram in the model event space, per level, as word vectors.
    pub fn observed_grams(&self, level: usize) -> Vec<Vec<String>> {
        let mut grams: Vec<Vec<String>> = self.adjusted[level - 1].keys().cloned().collect();
        grams.sort();
        grams
    }

    pub fn perplexity(&self, words: &[String]) -> f64 {
        assert!(!words.is_empty());
        let mut padded: Vec<String> = vec![BOS.to_string(); self.order - 1];
        padded.extend(words.iter().map(|w| self.map_word(w)));
        padded.push(EOS.to_string());
        let scored = (words.len() + 1) as f64;
        let mut log_sum = 0.0;
        for pos in self.order - 1..padded.len() {
            let ctx: Vec<&str> = padded[pos.saturating_sub(self.order - 1)..pos]
                .iter()
                .map(|s| s.as_str())
                .collect();
            log_sum += self.prob(&ctx, &padded[pos]).log10();
        }
        10f64.powf(-log_sum / scored)
    }
}

/// Modified Kneser-Ney discount triple from count-of-counts, with the fixed
/// 0.75 fallback whenever the estimator is undefined or lands out of range.
fn oracle_discounts(n1: u64, n2: u64, n3: u64, n4: u64) -> (f64, f64, f64) {
    if n1 == 0 || n2 == 0 {
        return (0.75, 0.75, 0.75);
    }
    let (f1, f2, f3, f4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
    let y = f1 / (f1 + 2.0 * f2);
    let d1 = 1.0 - 2.0 * y * f2 / f1;
    let d2 = if n3 > 0 { 2.0 - 3.0 * y * f3 / f2 } else { 2.0 };
    let d3 = if n3 > 0 { 3.0 - 4.0 * y * f4 / f3 } else { 3.0 };
    let ok = |d: f64, j: f64| d.is_finite() && d > 0.0 && d <= j;
    if ok(d1, 1.0) && ok(d2, 2.0) && ok(d3, 3.0) {
        (d1, d2, d3)
    } else {
        (0.75, 0.75, 0.75)
    }
}

// --- synthetic multilingual text ------------------------------------------

/// Ten letters per language: ka kha ga cha ja ta na ma ra sa at the shared
/// Brahmic block offsets (Tamil uses its own letter inventory).
pub fn alphabet(lang: Lang) -> Vec<char> {
    let from_base = |base: u32| -> Vec<char> {
        [0x15u32, 0x16, 0x17, 0x1A, 0x1C, 0x24, 0x28, 0x2E, 0x30, 0x38]
            .iter()
            .map(|off| char::from_u32(base + off).unwrap())
            .collect()
    };
    match lang {
        Lang::Bengali => from_base(0x0980),
        Lang::Gujarati => from_base(0x0A80),
        Lang::Hindi | Lang::Marathi => from_base(0x0900),
        Lang::Kannada => from_base(0x0C80),
        Lang::Malayalam => from_base(0x0D00),
        Lang::Odia => from_base(0x0B00),
        Lang::Punjabi => from_base(0x0A00),
        Lang::Telugu => from_base(0x0C00),
        Lang::Tamil => vec!['க', 'ங', 'ச', 'ஞ', 'ட', 'த', 'ந', 'ப', 'ம', 'ர'],
        Lang::English => ('a'..='j').collect(),
    }
}

pub const HINDI_FUNCTION_WORDS: [&str; 5] = ["है", "और", "का", "में", "से"];
pub const MARATHI_FUNCTION_WORDS: [&str; 5] = ["आहे", "आणि", "चा", "मध्ये", "पासून"];

pub fn word(rng: &mut ChaCha8Rng, alphabet: &[char]) -> String {
    let len = rng.random_range(3..=6);
    (0..len)
        .map(|_| alphabet[rng.random_range(0..alphabet.len())])
        .collect()
}

/// A sentence in the language's script; Hindi and Marathi sentences carry
/// their disjoint function words so a classifier can tell them apart.
pub fn sentence(rng: &mut ChaCha8Rng, lang: Lang, words: usize) -> String {
    let alphabet = alphabet(lang);
    let mut out: Vec<String> = (0..words).map(|_| word(rng, &alphabet)).collect();
    let function_words: &[&str] = match lang {
        Lang::Hindi => &HINDI_FUNCTION_WORDS,
        Lang::Marathi => &MARATHI_FUNCTION_WORDS,
        _ => &[],
    };
    for (i, fw) in function_words.iter().enumerate() {
        let pos = (i * 2 + 1).min(out.len());
        out.insert(pos, fw.to_string());
    }
    out.join(" ")
}

/// Labeled corpus covering every supported language.
pub fn langid_corpus(per_lang: usize, seed: u64) -> Vec<(String, Lang)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Vec::new();
    for _ in 0..per_lang {
        for lang in Lang::ALL {
            corpus.push((sentence(&mut rng, lang, 8), lang));
        }
    }
    corpus
}
