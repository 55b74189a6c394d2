//! ARPA text export for interoperability with standard n-gram toolchains.
//!
//! The model stores fully interpolated probabilities, so entries are written
//! as-is: `log10(P)` per n-gram and `log10(backoff)` per context. `<s>`
//! carries the conventional -99 placeholder probability. Zero probabilities
//! and zero backoffs are also written as -99.

use std::io::Write;

use crate::error::Result;

use super::counts::BOS_ID;
use super::model::KneserNeyLM;

fn log10_or_floor(v: f64) -> f64 {
    if v > 0.0 {
        v.log10()
    } else {
        -99.0
    }
}

fn fmt_log(v: f64) -> String {
    format!("{:.7}", v)
}

/// Write the model in ARPA format.
pub fn write_arpa<W: Write>(lm: &KneserNeyLM, out: &mut W) -> Result<()> {
    let order = lm.order();

    // Unigram section covers the entire vocabulary (including <s> and <unk>).
    let mut unigrams: Vec<u32> = (0..lm.vocab.len() as u32).collect();
    unigrams.sort_by(|&a, &b| lm.vocab.word(a).cmp(lm.vocab.word(b)));

    let mut sections: Vec<Vec<(Vec<u32>, f64)>> = Vec::new();
    for k in 2..=order {
        let mut entries: Vec<(Vec<u32>, f64)> = lm.probs[k - 2]
            .iter()
            .map(|(g, &p)| (g.to_vec(), p))
            .collect();
        entries.sort_by(|a, b| {
            let wa: Vec<&str> = a.0.iter().map(|&id| lm.vocab.word(id)).collect();
            let wb: Vec<&str> = b.0.iter().map(|&id| lm.vocab.word(id)).collect();
            wa.cmp(&wb)
        });
        sections.push(entries);
    }

    writeln!(out, "\\data\\")?;
    writeln!(out, "ngram 1={}", unigrams.len())?;
    for (i, section) in sections.iter().enumerate() {
        writeln!(out, "ngram {}={}", i + 2, section.len())?;
    }
    writeln!(out)?;

    writeln!(out, "\\1-grams:")?;
    for &id in &unigrams {
        let p = if id == BOS_ID {
            -99.0
        } else {
            log10_or_floor(lm.unigram[id as usize])
        };
        let word = lm.vocab.word(id);
        if order > 1 {
            let bo = lm.backoffs[0]
                .get([id].as_slice())
                .copied()
                .map(log10_or_floor);
            match bo {
                Some(b) => writeln!(out, "{}\t{}\t{}", fmt_log(p), word, fmt_log(b))?,
                None => writeln!(out, "{}\t{}", fmt_log(p), word)?,
            }
        } else {
            writeln!(out, "{}\t{}", fmt_log(p), word)?;
        }
    }
    writeln!(out)?;

    for (i, section) in sections.iter().enumerate() {
        let k = i + 2;
        writeln!(out, "\\{}-grams:", k)?;
        for (gram, p) in section {
            let words: Vec<&str> = gram.iter().map(|&id| lm.vocab.word(id)).collect();
            let line = words.join(" ");
            if k < order {
                let bo = lm.backoffs[k - 1]
                    .get(gram.as_slice())
                    .copied()
                    .map(log10_or_floor);
                match bo {
                    Some(b) => {
                        writeln!(out, "{}\t{}\t{}", fmt_log(log10_or_floor(*p)), line, fmt_log(b))?
                    }
                    None => writeln!(out, "{}\t{}", fmt_log(log10_or_floor(*p)), line)?,
                }
            } else {
                writeln!(out, "{}\t{}", fmt_log(log10_or_floor(*p)), line)?;
            }
        }
        writeln!(out)?;
    }

    writeln!(out, "\\end\\")?;
    Ok(())
}
