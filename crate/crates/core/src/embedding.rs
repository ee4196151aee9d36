//! Per-article vectors, cosine similarity and exact nearest-neighbour search.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use thiserror::Error;

use crate::corpus::{normalize_text, tokenize, Article};

#[derive(Debug, Error)]
pub enum EmbeddingError {
    #[error("embedding ids do not match the corpus: missing {missing:?}, extra {extra:?}")]
    Alignment {
        missing: Vec<String>,
        extra: Vec<String>,
    },
    #[error("non-finite value in embedding row {row}")]
    NonFinite { row: usize },
    #[error("malformed embedding file: {0}")]
    Format(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid argument: {0}")]
    Contract(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

const MAGIC: &[u8; 4] = b"EMB1";

/// Dense row-major vectors, one row per article.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    dim: usize,
    values: Vec<f32>,
    row_ids: Vec<String>,
}

impl EmbeddingMatrix {
    pub fn new(row_ids: Vec<String>, dim: usize, values: Vec<f32>) -> Result<Self, EmbeddingError> {
        if dim == 0 {
            return Err(EmbeddingError::Contract("dimension must be positive".into()));
        }
        if values.len() != row_ids.len() * dim {
            return Err(EmbeddingError::Format(format!(
                "{} values for {} rows of dimension {dim}",
                values.len(),
                row_ids.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(EmbeddingError::NonFinite { row: pos / dim });
        }
        Ok(EmbeddingMatrix {
            dim,
            values,
            row_ids,
        })
    }

    pub fn from_rows(row_ids: Vec<String>, rows: &[Vec<f64>]) -> Result<Self, EmbeddingError> {
        let dim = rows.first().map(Vec::len).unwrap_or(1);
        let mut values = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(EmbeddingError::DimensionMismatch(dim, r.len()));
            }
            values.extend(r.iter().map(|&v| v as f32));
        }
        Self::new(row_ids, dim, values)
    }

    pub fn n(&self) -> usize {
        self.row_ids.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| v as f64).collect()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Rows scaled to unit length in f64; zero rows stay zero.
    pub fn normalized_rows(&self) -> Vec<Vec<f64>> {
        (0..self.n())
            .map(|i| {
                let mut r = self.row_f64(i);
                let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    r.iter_mut().for_each(|v| *v /= norm);
                }
                r
            })
            .collect()
    }

    /// Reorders rows to follow `expected_ids`; the id sets must match exactly.
    pub fn aligned_to(&self, expected_ids: &[String]) -> Result<Self, EmbeddingError> {
        let pos: HashMap<&str, usize> = self
            .row_ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.as_str(), i))
            .collect();
        if pos.len() != self.row_ids.len() {
            return Err(EmbeddingError::Format("duplicate row id in embedding file".into()));
        }
        let expected: HashSet<&str> = expected_ids.iter().map(String::as_str).collect();
        let mut missing: Vec<String> = expected_ids
            .iter()
            .filter(|id| !pos.contains_key(id.as_str()))
            .cloned()
            .collect();
        let mut extra: Vec<String> = self
            .row_ids
            .iter()
            .filter(|id| !expected.contains(id.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() || !extra.is_empty() {
            missing.sort();
            extra.sort();
            return Err(EmbeddingError::Alignment { missing, extra });
        }
        let mut values = Vec::with_capacity(self.values.len());
        for id in expected_ids {
            values.extend_from_slice(self.row(pos[id.as_str()]));
        }
        Ok(EmbeddingMatrix {
            dim: self.dim,
            values,
            row_ids: expected_ids.to_vec(),
        })
    }

    /// Binary layout: `EMB1`, u32 n, u32 d, n*d f32 values, then n newline-terminated ids.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.n() as u32).to_le_bytes())?;
        w.write_all(&(self.dim as u32).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.values.len() * 4);
        for v in &self.values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
        for id in &self.row_ids {
            w.write_all(id.as_bytes())?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8]) -> Result<Self, EmbeddingError> {
        if bytes.len() < 12 || &bytes[..4] != MAGIC {
            return Err(EmbeddingError::Format("missing EMB1 header".into()));
        }
        let n = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let d = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body_end = n
            .checked_mul(d)
            .and_then(|nd| nd.checked_mul(4))
            .and_then(|b| b.checked_add(12))
            .filter(|&end| end <= bytes.len())
            .ok_or_else(|| EmbeddingError::Format(format!("truncated body for n={n} d={d}")))?;
        let values: Vec<f32> = bytes[12..body_end]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let ids_text = std::str::from_utf8(&bytes[body_end..])
            .map_err(|_| EmbeddingError::Format("id block is not UTF-8".into()))?;
        let row_ids: Vec<String> = ids_text.lines().map(str::to_owned).collect();
        if row_ids.len() != n {
            return Err(EmbeddingError::Format(format!("{} ids for {n} rows", row_ids.len())));
        }
        if d == 0 && n > 0 {
            return Err(EmbeddingError::Format("zero dimension".into()));
        }
        Self::new(row_ids, d.max(1), if d == 0 { Vec::new() } else { values })
    }

    /// TSV layout: header `pmid v0 .. v{d-1}`, one row per id.
    pub fn read_tsv<R: Read>(mut r: R) -> Result<Self, EmbeddingError> {
        let mut text = String::new();
        r.read_to_string(&mut text)?;
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| EmbeddingError::Format("empty embedding TSV".into()))?;
        let d = header.split('\t').count().saturating_sub(1);
        if d == 0 || !header.starts_with("pmid") {
            return Err(EmbeddingError::Format("header must be pmid followed by vector columns".into()));
        }
        let mut ids = Vec::new();
        let mut values = Vec::new();
        for (row, line) in lines.enumerate() {
            let mut cells = line.split('\t');
            ids.push(cells.next().unwrap_or_default().trim().to_owned());
            let before = values.len();
            for c in cells {
                let v: f32 = c
                    .trim()
                    .parse()
                    .map_err(|_| EmbeddingError::Format(format!("row {row}: bad float {c:?}")))?;
                if !v.is_finite() {
                    return Err(EmbeddingError::NonFinite { row });
                }
                values.push(v);
            }
            if values.len() - before != d {
                return Err(EmbeddingError::DimensionMismatch(d, values.len() - before));
            }
        }
        Self::new(ids, d, values)
    }

    pub fn write_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header: Vec<String> = std::iter::once("pmid".to_string())
            .chain((0..self.dim).map(|j| format!("v{j}")))
            .collect();
        writeln!(w, "{}", header.join("\t"))?;
        for i in 0..self.n() {
            let cells: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}\t{}", self.row_ids[i], cells.join("\t"))?;
        }
        Ok(())
    }
}

/// Loads a binary or TSV embedding file and orders rows to match `expected_ids`.
pub fn load_embeddings(path: &Path, expected_ids: &[String]) -> Result<EmbeddingMatrix, EmbeddingError> {
    let bytes = std::fs::read(path)?;
    let m = if bytes.starts_with(MAGIC) {
        EmbeddingMatrix::read_binary(&bytes)?
    } else {
        EmbeddingMatrix::read_tsv(bytes.as_slice())?
    };
    m.aligned_to(expected_ids)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded feature hash of a token: bucket in `[0, d)` and a ±1 sign.
pub fn hash_feature(token: &str, seed: u64, d: usize) -> (usize, f64) {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325 ^ splitmix64(seed);
    for b in token.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let h = splitmix64(h);
    let bucket = (h % d as u64) as usize;
    let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

#[derive(Debug, Clone)]
pub struct HashedEmbedding {
    pub matrix: EmbeddingMatrix,
    /// Articles whose text produced no tokens; their rows are zero.
    pub empty_rows: Vec<String>,
}

/// Deterministic offline embedder: hashed tf-idf over title+abstract unigrams.
///
/// `tf` is the raw token count, `idf = ln((1+N)/(1+df)) + 1`, and each row is
/// L2-normalised.
pub fn embed_hashed_tfidf(articles: &[Article], d: usize, seed: u64) -> Result<HashedEmbedding, EmbeddingError> {
    if d < 16 {
        return Err(EmbeddingError::Contract(format!("dimension {d} < 16")));
    }
    let docs: Vec<HashMap<String, u32>> = articles
        .iter()
        .map(|a| {
            let mut counts = HashMap::new();
            for t in tokenize(&normalize_text(&a.text())) {
                *counts.entry(t).or_insert(0u32) += 1;
            }
            counts
        })
        .collect();
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in &docs {
        for t in doc.keys() {
            *df.entry(t.as_str()).or_insert(0) += 1;
        }
    }
    let n = articles.len() as f64;
    let mut values = vec![0f32; articles.len() * d];
    let mut empty_rows = Vec::new();
    for (i, doc) in docs.iter().enumerate() {
        if doc.is_empty() {
            log::warn!("article {} has no text; embedding is a zero vector", articles[i].pmid);
            empty_rows.push(articles[i].pmid.clone());
            continue;
        }
        let mut terms: Vec<(&String, &u32)> = doc.iter().collect();
        terms.sort();
        let mut row = vec![0f64; d];
        for (t, &tf) in terms {
            let idf = ((1.0 + n) / (1.0 + df[t.as_str()] as f64)).ln() + 1.0;
            let (bucket, sign) = hash_feature(t, seed, d);
            row[bucket] += sign * tf as f64 * idf;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for (dst, v) in values[i * d..(i + 1) * d].iter_mut().zip(&row) {
                *dst = (v / norm) as f32;
            }
        }
    }
    let ids = articles.iter().map(|a| a.pmid.clone()).collect();
    Ok(HashedEmbedding {
        matrix: EmbeddingMatrix::new(ids, d, values)?,
        empty_rows,
    })
}

/// Cosine similarity; zero vectors have similarity 0 with everything.
pub fn cosine<A, B>(u: &[A], v: &[B]) -> Result<f64, EmbeddingError>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    if u.len() != v.len() {
        return Err(EmbeddingError::DimensionMismatch(u.len(), v.len()));
    }
    let (mut dot, mut nu, mut nv) = (0.0, 0.0, 0.0);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b): (f64, f64) = (a.into(), b.into());
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if nu == 0.0 || nv == 0.0 {
        return Ok(0.0);
    }
    Ok((dot / (nu.sqrt() * nv.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Neighbor {
    pub index: usize,
    pub id: String,
    pub similarity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnResult {
    pub neighbors: Vec<Neighbor>,
    /// Set when fewer than `k` candidates were available.
    pub short: bool,
}

/// Exact top-`k` rows by cosine to `query_row`, excluding itself and `exclude`.
/// Ties are broken by ascending id.
pub fn knn_exact(
    matrix: &EmbeddingMatrix,
    query_row: usize,
    k: usize,
    exclude: &HashSet<String>,
) -> Result<KnnResult, EmbeddingError> {
    if query_row >= matrix.n() {
        return Err(EmbeddingError::Contract(format!("row {query_row} out of range")));
    }
    let q = matrix.row_f64(query_row);
    knn_by_vector(matrix, &q, k, |i| i == query_row || exclude.contains(&matrix.row_ids[i]))
}

/// Exact top-`k` rows by cosine to an arbitrary query vector.
pub fn knn_by_vector<F: Fn(usize) -> bool>(
    matrix: &EmbeddingMatrix,
    query: &[f64],
    k: usize,
    skip: F,
) -> Result<KnnResult, EmbeddingError> {
    if k == 0 {
        return Err(EmbeddingError::Contract("k must be at least 1".into()));
    }
    if query.len() != matrix.dim() {
        return Err(EmbeddingError::DimensionMismatch(query.len(), matrix.dim()));
    }
    let mut scored: Vec<Neighbor> = (0..matrix.n())
        .filter(|&i| !skip(i))
        .map(|i| Neighbor {
            index: i,
            id: matrix.row_ids[i].clone(),
            similarity: cosine(query, matrix.row(i)).expect("dimensions checked"),
        })
        .collect();
    scored.sort_by(|a, b| {
        b.similarity
            .total_cmp(&a.similarity)
            .then_with(|| a.id.cmp(&b.id))
    });
    let short = scored.len() < k;
    scored.truncate(k);
    Ok(KnnResult {
        neighbors: scored,
        short,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn ids(n: usize) -> Vec<String> {
        (1..=n).map(|i| i.to_string()).collect()
    }

    #[test]
    fn cosine_values() {
        assert!((cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(cosine(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        let c = cosine(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!((c - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert_eq!(cosine(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!(matches!(
            cosine(&[1.0], &[1.0, 2.0]),
            Err(EmbeddingError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn knn_identical_rows() {
        let m = EmbeddingMatrix::from_rows(ids(3), &[vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let r = knn_exact(&m, 0, 2, &HashSet::new()).unwrap();
        assert_eq!(r.neighbors.len(), 2);
        assert!(r.neighbors.iter().all(|n| (n.similarity - 1.0).abs() < 1e-12));
        assert!(!r.short);
    }

    #[test]
    fn knn_tie_break_prefers_smaller_pmid() {
        let m = EmbeddingMatrix::from_rows(
            ids(3),
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
        )
        .unwrap();
        let r = knn_exact(&m, 0, 1, &HashSet::new()).unwrap();
        assert_eq!(r.neighbors[0].id, "2");
        assert_eq!(r.neighbors[0].similarity, 0.0);
    }

    #[test]
    fn knn_short_result_and_exclusion() {
        let m = EmbeddingMatrix::from_rows(ids(3), &[vec![1.0, 0.0], vec![1.0, 0.1], vec![0.0, 1.0]]).unwrap();
        let exclude: HashSet<String> = ["2".to_string()].into();
        let r = knn_exact(&m, 0, 5, &exclude).unwrap();
        assert!(r.short);
        assert_eq!(r.neighbors.len(), 1);
        assert_eq!(r.neighbors[0].id, "3");
        assert!(knn_exact(&m, 0, 0, &exclude).is_err());
    }

    #[test]
    fn knn_matches_brute_force_on_random_matrix() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| (0..16).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let m = EmbeddingMatrix::from_rows(ids(50), &rows).unwrap();
        for q in 0..50 {
            // brute force over f32-rounded rows, full scan and sort
            let qr: Vec<f64> = rows[q].iter().map(|&v| v as f32 as f64).collect();
            let mut all: Vec<(f64, String)> = (0..50)
                .filter(|&j| j != q)
                .map(|j| {
                    let r: Vec<f64> = rows[j].iter().map(|&v| v as f32 as f64).collect();
                    let dot: f64 = qr.iter().zip(&r).map(|(a, b)| a * b).sum();
                    let nq = qr.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let nr = r.iter().map(|v| v * v).sum::<f64>().sqrt();
                    (dot / (nq * nr), (j + 1).to_string())
                })
                .collect();
            all.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
            let expect: Vec<String> = all.into_iter().take(5).map(|p| p.1).collect();
            let got: Vec<String> = knn_exact(&m, q, 5, &HashSet::new())
                .unwrap()
                .neighbors
                .into_iter()
                .map(|n| n.id)
                .collect();
            assert_eq!(got, expect, "query {q}");
        }
    }

    fn article(pmid: &str, title: &str, abs: &str) -> Article {
        let mut a = Article::new(pmid);
        a.title = title.into();
        a.abstract_text = abs.into();
        a
    }

    #[test]
    fn hashed_embedding_is_deterministic_and_flags_empty_text() {
        let arts = vec![
            article("1", "Glioma therapy", "temozolomide trial"),
            article("2", "Glioma therapy", "temozolomide trial"),
            article("3", "", ""),
        ];
        let a = embed_hashed_tfidf(&arts, 64, 7).unwrap();
        let b = embed_hashed_tfidf(&arts, 64, 7).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.matrix.row(0), a.matrix.row(1));
        assert!((cosine(a.matrix.row(0), a.matrix.row(1)).unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(a.empty_rows, ["3"]);
        assert!(a.matrix.row(2).iter().all(|&v| v == 0.0));
        assert!(embed_hashed_tfidf(&arts, 8, 7).is_err());
    }

    #[test]
    fn disjoint_vocabularies_are_nearly_orthogonal() {
        let arts = vec![
            article("1", "alpha beta gamma delta", "epsilon zeta eta theta iota kappa"),
            article("2", "lambda mu nu xi", "omicron pi rho sigma tau upsilon"),
        ];
        let d = 4096;
        let seed = 42;
        let emb = embed_hashed_tfidf(&arts, d, seed).unwrap();
        let got = cosine(emb.matrix.row(0), emb.matrix.row(1)).unwrap();

        // Hand-built sparse vectors: every token occurs once in one doc, so
        // tf = 1 and idf = ln(3/2) + 1 for all of them.
        let idf = (3.0f64 / 2.0).ln() + 1.0;
        let build = |text: &str| {
            let mut v = vec![0.0f64; d];
            for t in text.split(' ') {
                let (b, s) = hash_feature(t, seed, d);
                v[b] += s * idf;
            }
            v
        };
        let u = build("alpha beta gamma delta epsilon zeta eta theta iota kappa");
        let v = build("lambda mu nu xi omicron pi rho sigma tau upsilon");
        let expect = cosine(&u, &v).unwrap();
        assert!((got - expect).abs() < 1e-6, "{got} vs {expect}");
        assert!(got.abs() < 0.1);
    }

    #[test]
    fn binary_and_tsv_round_trip() {
        let m = EmbeddingMatrix::from_rows(ids(3), &[vec![0.5, -1.0], vec![0.25, 2.0], vec![0.0, 0.0]]).unwrap();
        let mut bin = Vec::new();
        m.write_binary(&mut bin).unwrap();
        assert_eq!(&bin[..4], b"EMB1");
        assert_eq!(EmbeddingMatrix::read_binary(&bin).unwrap(), m);
        let mut tsv = Vec::new();
        m.write_tsv(&mut tsv).unwrap();
        assert_eq!(EmbeddingMatrix::read_tsv(tsv.as_slice()).unwrap(), m);
    }

    #[test]
    fn load_reorders_and_reports_alignment_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.emb");
        let m = EmbeddingMatrix::from_rows(ids(3), &[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        m.write_binary(std::fs::File::create(&path).unwrap()).unwrap();
        let want: Vec<String> = ["3", "1", "2"].iter().map(|s| s.to_string()).collect();
        let loaded = load_embeddings(&path, &want).unwrap();
        assert_eq!(loaded.row(0), &[3.0]);
        let want: Vec<String> = ["1", "3", "4"].iter().map(|s| s.to_string()).collect();
        match load_embeddings(&path, &want) {
            Err(EmbeddingError::Alignment { missing, extra }) => {
                assert_eq!(missing, ["4"]);
                assert_eq!(extra, ["2"]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn nan_row_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.tsv");
        std::fs::write(&path, "pmid\tv0\tv1\n1\tNaN\t0\n2\t1\t1\n").unwrap();
        let want = ids(2);
        assert!(matches!(
            load_embeddings(&path, &want),
            Err(EmbeddingError::NonFinite { row: 0 })
        ));
        let bad = EmbeddingMatrix::new(ids(2), 2, vec![0.0, 1.0, f32::INFINITY, 0.0]);
        assert!(matches!(bad, Err(EmbeddingError::NonFinite { row: 1 })));
    }

    proptest! {
        #[test]
        fn self_similarity_is_one(v in proptest::collection::vec(-100.0f64..100.0, 1..32)) {
            prop_assume!(v.iter().any(|x| x.abs() > 1e-6));
            prop_assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn knn_is_scale_invariant(seed in 0u64..1000, scale_exp in -4i32..5) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..6).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let scale = 2f64.powi(scale_exp);
            let scaled: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v * scale).collect()).collect();
            let a = EmbeddingMatrix::from_rows(ids(12), &rows).unwrap();
            let b = EmbeddingMatrix::from_rows(ids(12), &scaled).unwrap();
            for q in 0..12 {
                let ra: Vec<String> = knn_exact(&a, q, 4, &HashSet::new()).unwrap().neighbors.into_iter().map(|n| n.id).collect();
                let rb: Vec<String> = knn_exact(&b, q, 4, &HashSet::new()).unwrap().neighbors.into_iter().map(|n| n.id).collect();
                prop_assert_eq!(ra, rb);
            }
        }
    }
}
