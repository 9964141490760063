//! Persistent index: corpus, build parameters and adjacency matrices in one
//! versioned, checksummed binary file.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic   8 bytes  "TAGRIDX\0"
//! version u32
//! config  k: f64, zero_diagonal: u8, literal_k: u8
//! vocab   count: u64, then per tag: len: u64, UTF-8 bytes
//! posts   count: u64, then per post: post_id, user_id (len-prefixed),
//!         views: u64, tag count: u64, tag indices: u64 each
//! mats    count: u64, then per matrix: variant: u8, n_rows, n_cols, nnz: u64,
//!         offsets (n_rows + 1) x u64, columns nnz x u64, values nnz x f64
//! sha256  32 bytes over everything above
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Post, Vocabulary};
use crate::matrix::{build_variants, AdjacencyMatrix, BuildConfig, MatrixError, Smoothing, Variant};
use crate::sparse::{SparseError, SparseMatrix};

pub const MAGIC: &[u8; 8] = b"TAGRIDX\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("not an index file")]
    BadMagic,
    #[error("index format version {found} is not supported (expected {FORMAT_VERSION})")]
    VersionMismatch { found: u32 },
    #[error("index checksum mismatch")]
    ChecksumMismatch,
    #[error("index truncated or malformed: {0}")]
    Malformed(String),
    #[error("variant {0} not present in index")]
    MissingVariant(Variant),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
    #[error(transparent)]
    Sparse(#[from] SparseError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, IndexError>;

#[derive(Debug, Clone, PartialEq)]
pub struct TagIndex {
    pub corpus: Corpus,
    pub config: BuildConfig,
    pub matrices: Vec<AdjacencyMatrix>,
}

impl TagIndex {
    pub fn build(corpus: Corpus, variants: &[Variant], config: BuildConfig) -> Result<Self> {
        let matrices = build_variants(&corpus, variants, &config)?;
        Ok(TagIndex {
            corpus,
            config,
            matrices,
        })
    }

    pub fn variants(&self) -> Vec<Variant> {
        self.matrices.iter().map(|m| m.variant()).collect()
    }

    pub fn get(&self, variant: Variant) -> Result<&AdjacencyMatrix> {
        self.matrices
            .iter()
            .find(|m| m.variant() == variant)
            .ok_or(IndexError::MissingVariant(variant))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut enc = Encoder(Vec::new());
        enc.0.extend_from_slice(MAGIC);
        enc.u32(FORMAT_VERSION);
        enc.f64(self.config.smoothing.value());
        enc.u8(self.config.zero_diagonal as u8);
        enc.u8(self.config.literal_k as u8);

        let vocab = self.corpus.vocabulary();
        enc.usize(vocab.len());
        for tag in vocab.iter() {
            enc.str(tag);
        }
        enc.usize(self.corpus.num_posts());
        for post in self.corpus.posts() {
            enc.str(&post.post_id);
            enc.str(&post.user_id);
            enc.u64(post.popularity);
            enc.usize(post.tags.len());
            for &t in &post.tags {
                enc.usize(t);
            }
        }
        enc.usize(self.matrices.len());
        for adj in &self.matrices {
            let m = adj.matrix();
            enc.u8(adj.variant().code());
            enc.usize(m.n_rows());
            enc.usize(m.n_cols());
            enc.usize(m.nnz());
            m.offsets().iter().for_each(|&o| enc.usize(o));
            m.col_indices().iter().for_each(|&c| enc.usize(c));
            m.values().iter().for_each(|&v| enc.f64(v));
        }
        let digest = Sha256::digest(&enc.0);
        enc.0.extend_from_slice(&digest);
        enc.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(IndexError::BadMagic);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(IndexError::VersionMismatch { found: version });
        }
        if bytes.len() < 12 + 32 {
            return Err(IndexError::Malformed("missing checksum".into()));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(IndexError::ChecksumMismatch);
        }

        let mut dec = Decoder { buf: body, pos: 12 };
        let smoothing = Smoothing::new(dec.f64()?)?;
        let zero_diagonal = dec.flag()?;
        let literal_k = dec.flag()?;
        let config = BuildConfig {
            smoothing,
            zero_diagonal,
            literal_k,
        };

        let n_tags = dec.len()?;
        let mut vocab = Vocabulary::new();
        for _ in 0..n_tags {
            let tag = dec.str()?;
            vocab.intern(&tag);
        }
        if vocab.len() != n_tags {
            return Err(IndexError::Malformed("duplicate vocabulary entry".into()));
        }
        let n_posts = dec.len()?;
        let mut posts = Vec::with_capacity(n_posts.min(1 << 20));
        for _ in 0..n_posts {
            let post_id = dec.str()?;
            let user_id = dec.str()?;
            let popularity = dec.u64()?;
            let k = dec.len()?;
            let tags = (0..k).map(|_| dec.len()).collect::<Result<Vec<_>>>()?;
            posts.push(Post {
                post_id,
                user_id,
                popularity,
                tags,
            });
        }
        let corpus = Corpus::from_posts(posts, vocab)?;

        let n_mats = dec.len()?;
        let mut matrices = Vec::with_capacity(n_mats.min(16));
        for _ in 0..n_mats {
            let code = dec.u8()?;
            let variant = Variant::from_code(code)
                .ok_or_else(|| IndexError::Malformed(format!("unknown variant code {code}")))?;
            let n_rows = dec.len()?;
            let n_cols = dec.len()?;
            let nnz = dec.len()?;
            let offsets = (0..=n_rows).map(|_| dec.len()).collect::<Result<Vec<_>>>()?;
            let cols = (0..nnz).map(|_| dec.len()).collect::<Result<Vec<_>>>()?;
            let values = (0..nnz).map(|_| dec.f64()).collect::<Result<Vec<_>>>()?;
            let m = SparseMatrix::try_from_csr(n_rows, n_cols, offsets, cols, values)?;
            if n_rows != corpus.num_tags() || n_cols != n_rows {
                return Err(IndexError::Malformed("matrix does not match vocabulary".into()));
            }
            matrices.push(AdjacencyMatrix::from_normalized(m, variant, config));
        }
        if dec.pos != body.len() {
            return Err(IndexError::Malformed("trailing bytes".into()));
        }
        Ok(TagIndex {
            corpus,
            config,
            matrices,
        })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

struct Encoder(Vec<u8>);

impl Encoder {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn usize(&mut self, v: usize) {
        self.u64(v as u64);
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_bits().to_le_bytes());
    }
    fn str(&mut self, s: &str) {
        self.usize(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Decoder<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| IndexError::Malformed(format!("truncated at byte {}", self.pos)))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn flag(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            b => Err(IndexError::Malformed(format!("bad flag byte {b}"))),
        }
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| IndexError::Malformed("length overflow".into()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| IndexError::Malformed("invalid UTF-8".into()))
    }
}
