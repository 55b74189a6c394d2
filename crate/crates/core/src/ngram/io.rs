//! Versioned binary container for trained models (magic `KNLM`).
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic       4 bytes  "KNLM"
//! version     u32      currently 1
//! order       u8
//! vocab_len   u32      then per word: u16 byte-length + UTF-8 bytes
//! discounts   order x (f64 d1, f64 d2, f64 d3, u8 estimated)
//! unigram     vocab_len x f64
//! per k in 2..=order:
//!   entries   u64      then per entry (sorted by id tuple): k x u32 ids, f64 prob
//! per j in 1..order:
//!   entries   u64      then per entry (sorted by id tuple): j x u32 ids, f64 backoff
//! ```

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

use super::counts::Vocab;
use super::model::{Discounts, KneserNeyLM};

const MAGIC: &[u8; 4] = b"KNLM";
const VERSION: u32 = 1;

fn write_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn write_f64<W: Write>(w: &mut W, v: f64) -> Result<()> {
    w.write_all(&v.to_le_bytes())?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u8<R: Read>(r: &mut R) -> Result<u8> {
    Ok(read_exact::<_, 1>(r)?[0])
}

fn read_u16<R: Read>(r: &mut R) -> Result<u16> {
    Ok(u16::from_le_bytes(read_exact(r)?))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    Ok(u32::from_le_bytes(read_exact(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    Ok(u64::from_le_bytes(read_exact(r)?))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_le_bytes(read_exact(r)?))
}

fn write_string<W: Write>(w: &mut W, s: &str) -> Result<()> {
    let bytes = s.as_bytes();
    if bytes.len() > u16::MAX as usize {
        return Err(Error::format(format!("word too long to serialize: {} bytes", bytes.len())));
    }
    w.write_all(&(bytes.len() as u16).to_le_bytes())?;
    w.write_all(bytes)?;
    Ok(())
}

fn read_string<R: Read>(r: &mut R) -> Result<String> {
    let len = read_u16(r)? as usize;
    let mut buf = vec![0u8; len];
    r.read_exact(&mut buf)?;
    String::from_utf8(buf).map_err(|e| Error::format(format!("invalid UTF-8 in model: {e}")))
}

fn write_table<W: Write>(w: &mut W, table: &HashMap<Box<[u32]>, f64>, k: usize) -> Result<()> {
    let mut entries: Vec<(&Box<[u32]>, &f64)> = table.iter().collect();
    entries.sort_by(|a, b| a.0.cmp(b.0));
    write_u64(w, entries.len() as u64)?;
    for (gram, &v) in entries {
        debug_assert_eq!(gram.len(), k);
        for &id in gram.iter() {
            write_u32(w, id)?;
        }
        write_f64(w, v)?;
    }
    Ok(())
}

fn read_table<R: Read>(r: &mut R, k: usize) -> Result<HashMap<Box<[u32]>, f64>> {
    let n = read_u64(r)? as usize;
    let mut table = HashMap::with_capacity(n);
    for _ in 0..n {
        let mut gram = Vec::with_capacity(k);
        for _ in 0..k {
            gram.push(read_u32(r)?);
        }
        table.insert(gram.into_boxed_slice(), read_f64(r)?);
    }
    Ok(table)
}

impl KneserNeyLM {
    pub fn write<W: Write>(&self, out: &mut W) -> Result<()> {
        out.write_all(MAGIC)?;
        write_u32(out, VERSION)?;
        out.write_all(&[self.order as u8])?;
        write_u32(out, self.vocab.len() as u32)?;
        for w in self.vocab.words() {
            write_string(out, w)?;
        }
        for d in &self.discounts {
            write_f64(out, d.d1)?;
            write_f64(out, d.d2)?;
            write_f64(out, d.d3)?;
            out.write_all(&[u8::from(d.estimated)])?;
        }
        for &p in &self.unigram {
            write_f64(out, p)?;
        }
        for k in 2..=self.order {
            write_table(out, &self.probs[k - 2], k)?;
        }
        for j in 1..self.order {
            write_table(out, &self.backoffs[j - 1], j)?;
        }
        Ok(())
    }

    pub fn read<R: Read>(input: &mut R) -> Result<Self> {
        let magic = read_exact::<_, 4>(input)?;
        if &magic != MAGIC {
            return Err(Error::format("not a KNLM model file (bad magic)"));
        }
        let version = read_u32(input)?;
        if version != VERSION {
            return Err(Error::format(format!(
                "unsupported KNLM version {version} (expected {VERSION})"
            )));
        }
        let order = read_u8(input)? as usize;
        if order == 0 {
            return Err(Error::format("model order must be positive"));
        }
        let vocab_len = read_u32(input)? as usize;
        let mut vocab = Vocab::new();
        for i in 0..vocab_len {
            let word = read_string(input)?;
            let id = vocab.intern(&word);
            if id as usize != i {
                return Err(Error::format(format!(
                    "duplicate or out-of-order vocab entry {word:?}"
                )));
            }
        }
        let mut discounts = Vec::with_capacity(order);
        for _ in 0..order {
            let d1 = read_f64(input)?;
            let d2 = read_f64(input)?;
            let d3 = read_f64(input)?;
            let estimated = read_u8(input)? != 0;
            discounts.push(Discounts {
                d1,
                d2,
                d3,
                estimated,
            });
        }
        let mut unigram = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            unigram.push(read_f64(input)?);
        }
        let mut probs = Vec::with_capacity(order.saturating_sub(1));
        for k in 2..=order {
            probs.push(read_table(input, k)?);
        }
        let mut backoffs = Vec::with_capacity(order.saturating_sub(1));
        for j in 1..order {
            backoffs.push(read_table(input, j)?);
        }
        Ok(KneserNeyLM {
            order,
            vocab,
            discounts,
            unigram,
            probs,
            backoffs,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write(&mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut input = BufReader::new(File::open(path)?);
        Self::read(&mut input)
    }
}
