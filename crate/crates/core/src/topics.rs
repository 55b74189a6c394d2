//! Topic-gap detection: keep a candidate topic only when it is far (by
//! cosine similarity) from every centroid of the already-covered topic
//! clusters.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

fn cosine_f64(a: &[f64], b: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Keep topics whose maximum cosine similarity to any centroid is strictly
/// below `threshold` (default 0.4): those are the coverage gaps worth
/// generating for.
pub fn filter_novel_topics(
    topics: &[(String, Vec<f64>)],
    centroids: &[Vec<f64>],
    threshold: f64,
) -> Result<Vec<String>> {
    if centroids.is_empty() {
        return Err(Error::input("no centroids given"));
    }
    let dim = centroids[0].len();
    for (i, c) in centroids.iter().enumerate() {
        if c.len() != dim {
            return Err(Error::input(format!(
                "centroid {i} has dimension {}, expected {dim}",
                c.len()
            )));
        }
    }
    let mut kept = Vec::new();
    for (name, vector) in topics {
        if vector.len() != dim {
            return Err(Error::input(format!(
                "topic {name:?} has dimension {}, expected {dim}",
                vector.len()
            )));
        }
        let max_sim = centroids
            .iter()
            .map(|c| cosine_f64(vector, c))
            .fold(f64::NEG_INFINITY, f64::max);
        if max_sim < threshold {
            kept.push(name.clone());
        }
    }
    Ok(kept)
}

pub const NOVELTY_THRESHOLD: f64 = 0.4;

/// TSV topic vectors: `phrase<TAB>v1 v2 ... vD` per line, `#` comments.
/// Phrases may contain spaces.
pub fn load_topic_vectors(path: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    let content = fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (lineno, raw) in content.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (phrase, rest) = line.split_once('\t').ok_or_else(|| {
            Error::format(format!(
                "{}:{}: expected `phrase<TAB>components`",
                path.display(),
                lineno + 1
            ))
        })?;
        let vector: Vec<f64> = rest
            .split_whitespace()
            .map(|p| p.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        if vector.is_empty() {
            return Err(Error::format(format!(
                "{}:{}: topic {phrase:?} has no vector components",
                path.display(),
                lineno + 1
            )));
        }
        out.push((phrase.to_string(), vector));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn named(pairs: &[(&str, Vec<f64>)]) -> Vec<(String, Vec<f64>)> {
        pairs.iter().map(|(n, v)| (n.to_string(), v.clone())).collect()
    }

    #[test]
    fn centroid_duplicate_excluded_orthogonal_kept() {
        let centroids = vec![vec![1.0, 0.0]];
        let topics = named(&[
            ("same", vec![2.0, 0.0]),      // similarity 1.0
            ("orthogonal", vec![0.0, 3.0]), // similarity 0.0
        ]);
        let kept = filter_novel_topics(&topics, &centroids, NOVELTY_THRESHOLD).unwrap();
        assert_eq!(kept, vec!["orthogonal".to_string()]);
    }

    #[test]
    fn threshold_comparison_is_strict() {
        // (3,0,4) vs (1,0,0): cosine exactly 0.6 (integer norms).
        let centroids = vec![vec![1.0, 0.0, 0.0]];
        let topics = named(&[("edge", vec![3.0, 0.0, 4.0])]);
        let at = filter_novel_topics(&topics, &centroids, 0.6).unwrap();
        assert!(at.is_empty(), "similarity == threshold is not novel");
        let above = filter_novel_topics(&topics, &centroids, 0.6000001).unwrap();
        assert_eq!(above, vec!["edge".to_string()]);
    }

    #[test]
    fn counted_selection_matches_hand_cosines() {
        // 7 topics against 2 centroids; exactly 3 are below 0.4 everywhere.
        let centroids = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        let topics = named(&[
            ("t1", vec![0.9, 0.1, 0.0]),  // high sim to c1
            ("t2", vec![0.0, 0.0, 1.0]),  // orthogonal -> kept
            ("t3", vec![0.1, 0.9, 0.0]),  // high sim to c2
            ("t4", vec![0.2, 0.2, 0.9]),  // low sims -> kept
            ("t5", vec![0.5, 0.5, 0.0]),  // ~0.707 to both
            ("t6", vec![-1.0, 0.0, 0.1]), // negative sim -> kept
            ("t7", vec![0.6, 0.0, 0.3]),  // ~0.89 to c1
        ]);
        let kept = filter_novel_topics(&topics, &centroids, 0.4).unwrap();
        assert_eq!(kept, vec!["t2".to_string(), "t4".to_string(), "t6".to_string()]);
    }

    #[test]
    fn dimension_mismatch_is_input_error() {
        let centroids = vec![vec![1.0, 0.0]];
        let topics = named(&[("bad", vec![1.0, 0.0, 0.0])]);
        assert!(matches!(
            filter_novel_topics(&topics, &centroids, 0.4),
            Err(Error::Input(_))
        ));
        assert!(matches!(
            filter_novel_topics(&topics, &[], 0.4),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("topics.tsv");
        std::fs::write(&path, "# comment\nIndian classical music\t0.1 0.2 0.3\nfolk dance\t0.4 0.5 0.6\n").unwrap();
        let topics = load_topic_vectors(&path).unwrap();
        assert_eq!(topics.len(), 2);
        assert_eq!(topics[0].0, "Indian classical music");
        assert_eq!(topics[1].1, vec![0.4, 0.5, 0.6]);
    }
}
