use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::document::Document;
use crate::error::{Error, Result};
use crate::lang::Lang;
use crate::tokenize::tokenize_words;
use crate::verdict::FilterVerdict;

use super::counts::{NgramCounts, Vocab, BOS_ID};

pub const FLUENCY_FILTER: &str = "perplexity";

/// Per-order discount triple (D1, D2, D3+).
///
/// Estimated from count-of-counts when that estimator is well-defined: n1
/// and n2 positive and every Dj landing in `(0, j]`. Anything else (tiny or
/// degenerate corpora) falls back to a fixed 0.75 triple with
/// `estimated == false`. Keeping each Dj strictly positive and at most j
/// guarantees positive backoff mass for every observed context.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Discounts {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    pub estimated: bool,
}

impl Discounts {
    const FALLBACK: Discounts = Discounts {
        d1: 0.75,
        d2: 0.75,
        d3: 0.75,
        estimated: false,
    };

    pub fn from_count_of_counts(n1: u64, n2: u64, n3: u64, n4: u64) -> Discounts {
        if n1 == 0 || n2 == 0 {
            return Discounts::FALLBACK;
        }
        let (n1, n2, n3, n4) = (n1 as f64, n2 as f64, n3 as f64, n4 as f64);
        let y = n1 / (n1 + 2.0 * n2);
        let d1 = 1.0 - 2.0 * y * n2 / n1;
        let d2 = if n3 > 0.0 { 2.0 - 3.0 * y * n3 / n2 } else { 2.0 };
        let d3 = if n3 > 0.0 { 3.0 - 4.0 * y * n4 / n3 } else { 3.0 };
        let in_range = |d: f64, j: f64| d.is_finite() && d > 0.0 && d <= j;
        if !(in_range(d1, 1.0) && in_range(d2, 2.0) && in_range(d3, 3.0)) {
            return Discounts::FALLBACK;
        }
        Discounts {
            d1,
            d2,
            d3,
            estimated: true,
        }
    }

    pub fn for_count(&self, count: u64) -> f64 {
        match count {
            0 => 0.0,
            1 => self.d1,
            2 => self.d2,
            _ => self.d3,
        }
    }
}

/// Interpolated modified Kneser-Ney model.
///
/// Stores fully interpolated probabilities for observed n-grams and a
/// backoff weight per observed context; queries walk from the longest
/// matching n-gram down to the unigram distribution, multiplying backoff
/// weights on the way (`<unk>` is always reachable, so every query returns
/// a positive probability).
#[derive(Debug, Clone)]
pub struct KneserNeyLM {
    pub(crate) order: usize,
    pub(crate) vocab: Vocab,
    pub(crate) discounts: Vec<Discounts>,
    /// P(w) indexed by word id; BOS is 0 by convention.
    pub(crate) unigram: Vec<f64>,
    /// probs[i]: (i+2)-gram -> interpolated probability
    pub(crate) probs: Vec<HashMap<Box<[u32]>, f64>>,
    /// backoffs[i]: context of length i+1 -> backoff weight
    pub(crate) backoffs: Vec<HashMap<Box<[u32]>, f64>>,
}

struct CtxStats {
    denom: u64,
    n1: u64,
    n2: u64,
    n3p: u64,
}

/// Estimate an interpolated modified Kneser-Ney model from raw counts.
///
/// Lower-order distributions use continuation counts, except for n-grams
/// beginning with BOS (which cannot be preceded and keep raw counts); grams
/// ending in BOS are structural and excluded from the event space.
pub fn estimate_kneser_ney(counts: &NgramCounts) -> Result<KneserNeyLM> {
    let order = counts.order;
    if counts.tables[order - 1].is_empty() {
        return Err(Error::input(
            "cannot estimate a model from empty counts (no highest-order n-grams)",
        ));
    }

    // Adjusted counts per order: raw at the top, continuation below.
    let mut adjusted: Vec<HashMap<Box<[u32]>, u64>> = vec![HashMap::new(); order];
    adjusted[order - 1] = counts.tables[order - 1]
        .iter()
        .filter(|(g, _)| *g.last().unwrap() != BOS_ID)
        .map(|(g, &c)| (g.clone(), c))
        .collect();
    for k in (1..order).rev() {
        let mut table: HashMap<Box<[u32]>, u64> = HashMap::new();
        for gram in counts.tables[k].keys() {
            let suffix = &gram[1..];
            if *suffix.last().unwrap() == BOS_ID {
                continue;
            }
            *table.entry(suffix.into()).or_insert(0) += 1;
        }
        for (gram, &c) in &counts.tables[k - 1] {
            if gram[0] == BOS_ID && *gram.last().unwrap() != BOS_ID {
                table.insert(gram.clone(), c);
            }
        }
        adjusted[k - 1] = table;
    }

    let discounts: Vec<Discounts> = adjusted
        .iter()
        .enumerate()
        .map(|(i, table)| {
            let mut n = [0u64; 4];
            for &c in table.values() {
                if (1..=4).contains(&c) {
                    n[(c - 1) as usize] += 1;
                }
            }
            let d = Discounts::from_count_of_counts(n[0], n[1], n[2], n[3]);
            if !d.estimated {
                log::warn!(
                    "order-{} count-of-counts too sparse (n1={}, n2={}); using fixed discount 0.75",
                    i + 1,
                    n[0],
                    n[1]
                );
            }
            d
        })
        .collect();

    let vocab = counts.vocab.clone();
    // Event space excludes BOS.
    let vocab_events = (vocab.len() - 1) as f64;

    // Unigram level.
    let d = &discounts[0];
    let mut denom1 = 0u64;
    let (mut n1, mut n2, mut n3p) = (0u64, 0u64, 0u64);
    for &c in adjusted[0].values() {
        denom1 += c;
        match c {
            1 => n1 += 1,
            2 => n2 += 1,
            _ => n3p += 1,
        }
    }
    if denom1 == 0 {
        return Err(Error::input("no unigram events in counts"));
    }
    let gamma1 =
        (d.d1 * n1 as f64 + d.d2 * n2 as f64 + d.d3 * n3p as f64) / denom1 as f64;
    let mut unigram = vec![0.0f64; vocab.len()];
    for id in 0..vocab.len() as u32 {
        if id == BOS_ID {
            continue;
        }
        let a = adjusted[0].get([id].as_slice()).copied().unwrap_or(0);
        let discounted = (a as f64 - d.for_count(a)).max(0.0);
        unigram[id as usize] = discounted / denom1 as f64 + gamma1 / vocab_events;
    }

    let mut lm = KneserNeyLM {
        order,
        vocab,
        discounts,
        unigram,
        probs: vec![HashMap::new(); order.saturating_sub(1)],
        backoffs: vec![HashMap::new(); order.saturating_sub(1)],
    };

    // Higher levels, built bottom-up so each level can query the one below.
    for k in 2..=order {
        let d = lm.discounts[k - 1];
        let table = &adjusted[k - 1];
        let mut ctx_stats: HashMap<&[u32], CtxStats> = HashMap::new();
        for (gram, &a) in table.iter() {
            let stats = ctx_stats.entry(&gram[..k - 1]).or_insert(CtxStats {
                denom: 0,
                n1: 0,
                n2: 0,
                n3p: 0,
            });
            stats.denom += a;
            match a {
                0 => {}
                1 => stats.n1 += 1,
                2 => stats.n2 += 1,
                _ => stats.n3p += 1,
            }
        }
        let mut probs: HashMap<Box<[u32]>, f64> = HashMap::with_capacity(table.len());
        let mut backoffs: HashMap<Box<[u32]>, f64> = HashMap::with_capacity(ctx_stats.len());
        for (gram, &a) in table.iter() {
            let stats = &ctx_stats[&gram[..k - 1]];
            let denom = stats.denom as f64;
            let gamma = (d.d1 * stats.n1 as f64
                + d.d2 * stats.n2 as f64
                + d.d3 * stats.n3p as f64)
                / denom;
            let lower = lm.lookup(&gram[1..k - 1], gram[k - 1]);
            let p = (a as f64 - d.for_count(a)).max(0.0) / denom + gamma * lower;
            probs.insert(gram.clone(), p);
            backoffs.entry(gram[..k - 1].into()).or_insert(gamma);
        }
        lm.probs[k - 2] = probs;
        lm.backoffs[k - 2] = backoffs;
    }

    Ok(lm)
}

impl KneserNeyLM {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn discounts(&self) -> &[Discounts] {
        &self.discounts
    }

    /// Vocabulary size of the predicted event space (BOS excluded).
    pub fn event_vocab_size(&self) -> usize {
        self.vocab.len() - 1
    }

    /// Uniform unigram model over `words` plus EOS and UNK; every event has
    /// probability 1/V. Useful as a calibration baseline.
    pub fn uniform<I, S>(words: I) -> KneserNeyLM
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocab::new();
        for w in words {
            vocab.intern(w.as_ref());
        }
        let v = (vocab.len() - 1) as f64;
        let mut unigram = vec![1.0 / v; vocab.len()];
        unigram[BOS_ID as usize] = 0.0;
        KneserNeyLM {
            order: 1,
            vocab,
            discounts: vec![Discounts::FALLBACK],
            unigram,
            probs: Vec::new(),
            backoffs: Vec::new(),
        }
    }

    /// P(w | ctx) by ids. `ctx` is truncated to the model's context length.
    pub fn prob_ids(&self, ctx: &[u32], w: u32) -> f64 {
        let start = ctx.len().saturating_sub(self.order - 1);
        self.lookup(&ctx[start..], w)
    }

    fn lookup(&self, ctx: &[u32], w: u32) -> f64 {
        if ctx.is_empty() {
            return self.unigram[w as usize];
        }
        let k = ctx.len() + 1;
        let mut key = Vec::with_capacity(k);
        key.extend_from_slice(ctx);
        key.push(w);
        if let Some(&p) = self.probs[k - 2].get(key.as_slice()) {
            return p;
        }
        let bo = self.backoffs[ctx.len() - 1]
            .get(ctx)
            .copied()
            .unwrap_or(1.0);
        bo * self.lookup(&ctx[1..], w)
    }

    /// P(w | context words). OOV words (in context or target) map to UNK.
    pub fn prob(&self, ctx: &[&str], w: &str) -> f64 {
        let ctx_ids: Vec<u32> = ctx.iter().map(|t| self.vocab.get_or_unk(t)).collect();
        self.prob_ids(&ctx_ids, self.vocab.get_or_unk(w))
    }

    /// Document perplexity: `10^(-(1/N) * sum log10 P)` over all words plus
    /// EOS, with BOS markers as initial context only.
    pub fn perplexity(&self, text: &str) -> Result<f64> {
        let t = tokenize_words(text);
        self.perplexity_words(&t.words)
    }

    pub fn perplexity_words<S: AsRef<str>>(&self, words: &[S]) -> Result<f64> {
        if words.is_empty() {
            return Err(Error::input("cannot score an empty text"));
        }
        let pad = self.order - 1;
        let mut ids = Vec::with_capacity(words.len() + pad + 1);
        ids.extend(std::iter::repeat_n(BOS_ID, pad));
        for w in words {
            ids.push(self.vocab.get_or_unk(w.as_ref()));
        }
        ids.push(super::counts::EOS_ID);

        let scored = (words.len() + 1) as f64;
        let mut log_sum = 0.0f64;
        for pos in pad..ids.len() {
            let ctx = &ids[pos.saturating_sub(pad)..pos];
            let p = self.lookup(ctx, ids[pos]);
            debug_assert!(p > 0.0, "zero probability at position {pos}");
            log_sum += p.log10();
        }
        Ok(10f64.powf(-log_sum / scored))
    }
}

/// Per-language perplexity cutoffs plus the percentile they were calibrated
/// at. Documents scoring strictly above their language's cutoff fail the
/// fluency filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerplexityThresholds {
    pub cutoffs: BTreeMap<Lang, f64>,
    pub percentile: f64,
}

impl Default for PerplexityThresholds {
    fn default() -> Self {
        PerplexityThresholds {
            cutoffs: BTreeMap::new(),
            percentile: 0.8,
        }
    }
}

impl PerplexityThresholds {
    /// Reference cutoffs calibrated on held-out validation corpora at the
    /// 80th percentile (absolute values are corpus-specific; recalibrate for
    /// new data with `calibrate_threshold`).
    pub fn reference() -> Self {
        let mut cutoffs = BTreeMap::new();
        cutoffs.insert(Lang::Bengali, 5_800.0);
        cutoffs.insert(Lang::Gujarati, 7_740.0);
        cutoffs.insert(Lang::Hindi, 640.0);
        cutoffs.insert(Lang::Kannada, 29_400.0);
        cutoffs.insert(Lang::Malayalam, 84_400.0);
        cutoffs.insert(Lang::Marathi, 5_400.0);
        cutoffs.insert(Lang::Punjabi, 520.0);
        cutoffs.insert(Lang::Tamil, 35_100.0);
        cutoffs.insert(Lang::Telugu, 23_100.0);
        PerplexityThresholds {
            cutoffs,
            percentile: 0.8,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.percentile) {
            return Err(Error::config(format!(
                "percentile must be in [0,1], got {}",
                self.percentile
            )));
        }
        for (lang, &cutoff) in &self.cutoffs {
            if cutoff.is_nan() || cutoff <= 1.0 {
                return Err(Error::config(format!(
                    "perplexity cutoff for {lang} must exceed 1, got {cutoff}"
                )));
            }
        }
        Ok(())
    }
}

/// Nearest-rank percentile: the smallest value whose rank is at least
/// `ceil(p * N)` in the sorted sample.
pub fn nearest_rank(values: &mut [f64], percentile: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::input("cannot take a percentile of an empty sample"));
    }
    if !(0.0..=1.0).contains(&percentile) {
        return Err(Error::config(format!(
            "percentile must be in [0,1], got {percentile}"
        )));
    }
    let n = values.len();
    let rank = ((percentile * n as f64).ceil() as usize).clamp(1, n);
    let (_, v, _) = values.select_nth_unstable_by(rank - 1, f64::total_cmp);
    Ok(*v)
}

/// Score a validation set and return the nearest-rank percentile of the
/// per-document perplexity distribution.
pub fn calibrate_threshold(
    lm: &KneserNeyLM,
    validation: &[Document],
    percentile: f64,
) -> Result<f64> {
    if validation.is_empty() {
        return Err(Error::input("validation set is empty"));
    }
    let mut ppls = Vec::with_capacity(validation.len());
    for doc in validation {
        ppls.push(lm.perplexity(&doc.text)?);
    }
    nearest_rank(&mut ppls, percentile)
}

/// Fluency filter: fail iff perplexity strictly exceeds the language cutoff.
pub fn fluency_check(
    lm: &KneserNeyLM,
    doc: &Document,
    thresholds: &PerplexityThresholds,
) -> Result<FilterVerdict> {
    let cutoff = thresholds
        .cutoffs
        .get(&doc.target_language)
        .copied()
        .ok_or_else(|| {
            Error::config(format!(
                "no perplexity threshold configured for language {}",
                doc.target_language
            ))
        })?;
    let ppl = lm.perplexity(&doc.text)?;
    Ok(if ppl > cutoff {
        FilterVerdict::fail(&doc.id, FLUENCY_FILTER, "high_perplexity").with_measured(ppl)
    } else {
        FilterVerdict::pass(&doc.id, FLUENCY_FILTER).with_measured(ppl)
    })
}
