//! Parameter tensors, initialization and persistence.
//!
//! Layout is row-major and contiguous per tensor:
//!
//! * `P`: `|W| × d` context word embeddings,
//! * `Q`: `|W| × n × d` sense selection weights,
//! * `U`: `(|W|·n) × d` input sense embeddings,
//! * `V`: `(|W|·n) × d` collocation embeddings.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::TrainingConfig;
use crate::corpus::Vocabulary;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"MUSE1";

/// One sense of one word, with its row index into `U` and `V`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SenseRef {
    pub word: u32,
    pub sense: u32,
    pub flat: usize,
}

impl SenseRef {
    pub fn new(word: u32, sense: u32, senses_per_word: usize) -> Self {
        debug_assert!((sense as usize) < senses_per_word);
        SenseRef {
            word,
            sense,
            flat: word as usize * senses_per_word + sense as usize,
        }
    }

    pub fn from_flat(flat: usize, senses_per_word: usize) -> Self {
        SenseRef {
            word: (flat / senses_per_word) as u32,
            sense: (flat % senses_per_word) as u32,
            flat,
        }
    }

    /// `word#sense`, the label used in text exports.
    pub fn label(&self, vocab: &Vocabulary) -> String {
        format!("{}#{}", vocab.word(self.word), self.sense)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    vocab_size: usize,
    dim: usize,
    senses: usize,
    pub p: Vec<f32>,
    pub q: Vec<f32>,
    pub u: Vec<f32>,
    pub v: Vec<f32>,
}

/// Tensor selector for text export.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tensor {
    P,
    U,
    V,
}

impl std::str::FromStr for Tensor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "P" | "p" => Ok(Tensor::P),
            "U" | "u" => Ok(Tensor::U),
            "V" | "v" => Ok(Tensor::V),
            _ => Err(Error::Usage(format!("unknown tensor {s:?}, expected P, U or V"))),
        }
    }
}

impl ModelParams {
    /// All-zero tensors.
    pub fn zeros(vocab_size: usize, dim: usize, senses: usize) -> Self {
        ModelParams {
            vocab_size,
            dim,
            senses,
            p: vec![0.0; vocab_size * dim],
            q: vec![0.0; vocab_size * senses * dim],
            u: vec![0.0; vocab_size * senses * dim],
            v: vec![0.0; vocab_size * senses * dim],
        }
    }

    /// `Q` and `V` zero; `P` and `U` uniform on `±√(3/d)` so rows have unit
    /// expected squared norm.
    pub fn init(vocab_size: usize, dim: usize, senses: usize, seed: u64) -> Self {
        assert!(dim >= 1 && senses >= 1, "dim and senses must be positive");
        let mut params = Self::zeros(vocab_size, dim, senses);
        let bound = init_bound(dim) as f32;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for x in params.p.iter_mut().chain(params.u.iter_mut()) {
            *x = rng.random_range(-bound..bound);
        }
        params
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn senses(&self) -> usize {
        self.senses
    }

    pub fn num_senses_total(&self) -> usize {
        self.vocab_size * self.senses
    }

    pub fn sense(&self, word: u32, sense: u32) -> SenseRef {
        SenseRef::new(word, sense, self.senses)
    }

    #[inline]
    pub fn p_row(&self, word: u32) -> &[f32] {
        let d = self.dim;
        &self.p[word as usize * d..(word as usize + 1) * d]
    }

    #[inline]
    pub fn p_row_mut(&mut self, word: u32) -> &mut [f32] {
        let d = self.dim;
        &mut self.p[word as usize * d..(word as usize + 1) * d]
    }

    /// Row of `Q` for `(word, sense)`.
    #[inline]
    pub fn q_row(&self, word: u32, sense: u32) -> &[f32] {
        let start = (word as usize * self.senses + sense as usize) * self.dim;
        &self.q[start..start + self.dim]
    }

    #[inline]
    pub fn q_row_mut(&mut self, word: u32, sense: u32) -> &mut [f32] {
        let start = (word as usize * self.senses + sense as usize) * self.dim;
        &mut self.q[start..start + self.dim]
    }

    /// All `n` rows of `Q` for a word, contiguous.
    #[inline]
    pub fn q_block(&self, word: u32) -> &[f32] {
        let len = self.senses * self.dim;
        &self.q[word as usize * len..(word as usize + 1) * len]
    }

    #[inline]
    pub fn u_row(&self, flat: usize) -> &[f32] {
        &self.u[flat * self.dim..(flat + 1) * self.dim]
    }

    #[inline]
    pub fn u_row_mut(&mut self, flat: usize) -> &mut [f32] {
        &mut self.u[flat * self.dim..(flat + 1) * self.dim]
    }

    #[inline]
    pub fn v_row(&self, flat: usize) -> &[f32] {
        &self.v[flat * self.dim..(flat + 1) * self.dim]
    }

    #[inline]
    pub fn v_row_mut(&mut self, flat: usize) -> &mut [f32] {
        &mut self.v[flat * self.dim..(flat + 1) * self.dim]
    }

    pub fn all_finite(&self) -> bool {
        [&self.p, &self.q, &self.u, &self.v]
            .iter()
            .all(|t| t.iter().all(|x| x.is_finite()))
    }

    /// FNV-1a over the little-endian bytes of all tensors.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf29ce484222325;
        for t in [&self.p, &self.q, &self.u, &self.v] {
            for x in t.iter() {
                for b in x.to_le_bytes() {
                    h ^= b as u64;
                    h = h.wrapping_mul(0x100000001b3);
                }
            }
        }
        h
    }

    /// Writes the binary container; the layout is described in the README.
    pub fn save(&self, vocab: &Vocabulary, config: &TrainingConfig, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        self.write_to(vocab, config, &mut out)?;
        out.flush()?;
        Ok(())
    }

    pub fn write_to<W: Write>(&self, vocab: &Vocabulary, config: &TrainingConfig, out: &mut W) -> Result<()> {
        if vocab.len() != self.vocab_size {
            return Err(Error::config(format!(
                "vocabulary has {} words but parameters have {}",
                vocab.len(),
                self.vocab_size
            )));
        }
        out.write_all(MAGIC)?;
        for x in [self.vocab_size, self.dim, self.senses] {
            out.write_all(&(x as u32).to_le_bytes())?;
        }
        for (word, &count) in vocab.words().iter().zip(vocab.counts()) {
            out.write_all(&(word.len() as u32).to_le_bytes())?;
            out.write_all(word.as_bytes())?;
            out.write_all(&count.to_le_bytes())?;
        }
        for tensor in [&self.p, &self.q, &self.u, &self.v] {
            let mut buf = Vec::with_capacity(tensor.len() * 4);
            for x in tensor.iter() {
                buf.extend_from_slice(&x.to_le_bytes());
            }
            out.write_all(&buf)?;
        }
        let echo = config.to_json();
        out.write_all(&(echo.len() as u32).to_le_bytes())?;
        out.write_all(echo.as_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<(ModelParams, Vocabulary, TrainingConfig)> {
        let mut reader = BufReader::new(File::open(path)?);
        Self::read_from(&mut reader)
    }

    pub fn read_from<R: Read>(reader: &mut R) -> Result<(ModelParams, Vocabulary, TrainingConfig)> {
        let mut magic = [0u8; 5];
        read_section(reader, &mut magic, "magic")?;
        if &magic != MAGIC {
            return Err(Error::format("not a MUSE1 model file (bad magic)"));
        }
        let vocab_size = read_u32(reader, "header")? as usize;
        let dim = read_u32(reader, "header")? as usize;
        let senses = read_u32(reader, "header")? as usize;
        if dim == 0 || senses == 0 {
            return Err(Error::format("header declares zero dim or senses"));
        }

        let mut pairs = Vec::with_capacity(vocab_size);
        for _ in 0..vocab_size {
            let len = read_u32(reader, "vocabulary")? as usize;
            let mut bytes = vec![0u8; len];
            read_section(reader, &mut bytes, "vocabulary")?;
            let word = String::from_utf8(bytes)
                .map_err(|_| Error::format("vocabulary word is not UTF-8"))?;
            let mut count = [0u8; 8];
            read_section(reader, &mut count, "vocabulary")?;
            pairs.push((word, u64::from_le_bytes(count)));
        }

        let mut params = ModelParams::zeros(vocab_size, dim, senses);
        for (name, tensor) in [
            ("P", &mut params.p),
            ("Q", &mut params.q),
            ("U", &mut params.u),
            ("V", &mut params.v),
        ] {
            let mut buf = vec![0u8; tensor.len() * 4];
            read_section(reader, &mut buf, &format!("tensor {name}"))?;
            for (x, chunk) in tensor.iter_mut().zip(buf.chunks_exact(4)) {
                *x = f32::from_le_bytes(chunk.try_into().unwrap());
            }
        }

        let len = read_u32(reader, "config echo")? as usize;
        let mut echo = vec![0u8; len];
        read_section(reader, &mut echo, "config echo")?;
        let echo = String::from_utf8(echo).map_err(|_| Error::format("config echo is not UTF-8"))?;
        let config = TrainingConfig::from_json(&echo)?;
        let vocab = Vocabulary::from_ordered(pairs, config.min_count)?;
        Ok((params, vocab, config))
    }

    /// word2vec-style text export with a `rows dims` header.
    ///
    /// Sense rows are labeled `word#k`; `P` rows carry the bare word.
    pub fn export_text(&self, vocab: &Vocabulary, which: Tensor, path: &Path) -> Result<()> {
        let mut out = BufWriter::new(File::create(path)?);
        let rows = match which {
            Tensor::P => self.vocab_size,
            Tensor::U | Tensor::V => self.num_senses_total(),
        };
        writeln!(out, "{rows} {}", self.dim)?;
        for r in 0..rows {
            let (label, row) = match which {
                Tensor::P => (vocab.word(r as u32).to_owned(), self.p_row(r as u32)),
                Tensor::U => (SenseRef::from_flat(r, self.senses).label(vocab), self.u_row(r)),
                Tensor::V => (SenseRef::from_flat(r, self.senses).label(vocab), self.v_row(r)),
            };
            write!(out, "{label}")?;
            for x in row {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Reads a word2vec-style text embedding file.
pub fn read_text_embeddings(path: &Path) -> Result<Vec<(String, Vec<f32>)>> {
    let reader = BufReader::new(File::open(path)?);
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::format("missing header line"))??;
    let mut parts = header.split_whitespace();
    let (rows, dims): (usize, usize) = match (parts.next(), parts.next()) {
        (Some(r), Some(d)) => (
            r.parse().map_err(|_| Error::format("bad row count in header"))?,
            d.parse().map_err(|_| Error::format("bad dimension in header"))?,
        ),
        _ => return Err(Error::format("header must be `rows dims`")),
    };
    let mut out = Vec::with_capacity(rows);
    for line in lines {
        let line = line?;
        let mut parts = line.split(' ');
        let label = parts.next().unwrap_or_default().to_owned();
        let row: Vec<f32> = parts
            .filter(|s| !s.is_empty())
            .map(|s| s.parse::<f32>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::format(format!("bad value in row {label:?}")))?;
        if row.len() != dims {
            return Err(Error::format(format!("row {label:?} has {} values, expected {dims}", row.len())));
        }
        out.push((label, row));
    }
    if out.len() != rows {
        return Err(Error::format(format!("expected {rows} rows, found {}", out.len())));
    }
    Ok(out)
}

pub fn init_bound(dim: usize) -> f64 {
    (3.0 / dim as f64).sqrt()
}

fn read_section<R: Read>(reader: &mut R, buf: &mut [u8], section: &str) -> Result<()> {
    reader.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated model file: missing {section}")),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(reader: &mut R, section: &str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_section(reader, &mut b, section)?;
    Ok(u32::from_le_bytes(b))
}
