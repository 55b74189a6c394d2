use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::tokenize::tokenize_words;

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

pub const BOS_ID: u32 = 0;
pub const EOS_ID: u32 = 1;
pub const UNK_ID: u32 = 2;

/// Word <-> id mapping. Ids 0..=2 are reserved for `<s>`, `</s>`, `<unk>`;
/// the rest follow corpus order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocab {
    pub fn new() -> Self {
        let mut v = Vocab {
            words: Vec::new(),
            index: HashMap::new(),
        };
        for w in [BOS, EOS, UNK] {
            v.intern(w);
        }
        v
    }

    pub fn intern(&mut self, word: &str) -> u32 {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len() as u32;
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), id);
        id
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn get_or_unk(&self, word: &str) -> u32 {
        self.get(word).unwrap_or(UNK_ID)
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

/// Raw n-gram counts for every order `k <= order`, over sentences padded
/// with `order - 1` BOS markers and one EOS. Every window of the padded
/// sentence is counted, so each k-gram's (k-1)-prefix is itself a counted
/// window.
#[derive(Debug, Clone)]
pub struct NgramCounts {
    pub(crate) order: usize,
    pub(crate) vocab: Vocab,
    /// tables[k-1]: k-gram -> count
    pub(crate) tables: Vec<HashMap<Box<[u32]>, u64>>,
}

impl NgramCounts {
    pub fn new(order: usize) -> Result<Self> {
        if order < 1 {
            return Err(Error::config("n-gram order must be >= 1"));
        }
        Ok(NgramCounts {
            order,
            vocab: Vocab::new(),
            tables: vec![HashMap::new(); order],
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn add_sentence(&mut self, words: &[String]) {
        let mut ids = vec![BOS_ID; self.order - 1];
        ids.reserve(words.len() + 1);
        for w in words {
            ids.push(self.vocab.intern(w));
        }
        ids.push(EOS_ID);
        for k in 1..=self.order {
            let table = &mut self.tables[k - 1];
            for window in ids.windows(k) {
                *table.entry(window.into()).or_insert(0) += 1;
            }
        }
    }

    /// Count of a k-gram given as words; 0 when absent or out-of-vocabulary.
    pub fn count(&self, gram: &[&str]) -> u64 {
        if gram.is_empty() || gram.len() > self.order {
            return 0;
        }
        let mut ids = Vec::with_capacity(gram.len());
        for w in gram {
            match self.vocab.get(w) {
                Some(id) => ids.push(id),
                None => return 0,
            }
        }
        self.tables[gram.len() - 1]
            .get(ids.as_slice())
            .copied()
            .unwrap_or(0)
    }

    pub fn table_len(&self, k: usize) -> usize {
        self.tables[k - 1].len()
    }

    /// Merge counts from another shard. Associative and commutative on the
    /// observable (word-level) counts; internal ids may differ.
    pub fn merge(mut self, other: NgramCounts) -> Result<NgramCounts> {
        if self.order != other.order {
            return Err(Error::input(format!(
                "cannot merge counts of order {} with order {}",
                self.order, other.order
            )));
        }
        // Remap the other shard's ids through this vocab.
        let remap: Vec<u32> = other
            .vocab
            .words()
            .iter()
            .map(|w| self.vocab.intern(w))
            .collect();
        for (k, table) in other.tables.into_iter().enumerate() {
            let dest = &mut self.tables[k];
            for (gram, c) in table {
                let mapped: Box<[u32]> = gram.iter().map(|&id| remap[id as usize]).collect();
                *dest.entry(mapped).or_insert(0) += c;
            }
        }
        Ok(self)
    }

    /// Counts keyed by words, for order-independent comparisons.
    pub fn as_word_counts(&self, k: usize) -> HashMap<Vec<String>, u64> {
        self.tables[k - 1]
            .iter()
            .map(|(gram, &c)| {
                (
                    gram.iter().map(|&id| self.vocab.word(id).to_string()).collect(),
                    c,
                )
            })
            .collect()
    }
}

/// Count n-grams over pre-tokenized sentences.
pub fn count_ngrams<I, S>(corpus: I, order: usize) -> Result<NgramCounts>
where
    I: IntoIterator<Item = S>,
    S: AsRef<[String]>,
{
    let mut counts = NgramCounts::new(order)?;
    for sentence in corpus {
        counts.add_sentence(sentence.as_ref());
    }
    Ok(counts)
}

/// Count n-grams over raw texts, tokenizing each with the shared word rules.
/// Empty texts are skipped.
pub fn count_ngrams_from_texts<'a, I>(corpus: I, order: usize) -> Result<NgramCounts>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts = NgramCounts::new(order)?;
    for text in corpus {
        let t = tokenize_words(text);
        if t.counts > 0 {
            counts.add_sentence(&t.words);
        }
    }
    Ok(counts)
}
