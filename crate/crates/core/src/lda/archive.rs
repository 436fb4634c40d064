//! Single-file model archive: config and backend as JSON, beta and gamma as
//! row-major little-endian f64 blocks with dimension headers, the vocabulary
//! in its sidecar text format, and the ELBO trace as a JSON array.
//! Round-trips are bit-exact.

use std::io::{BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lda::{Backend, LdaConfig, LdaModel};
use crate::mat::DenseMatrix;
use crate::prep::Vocabulary;

const MAGIC: &[u8; 4] = b"LDAR";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: LdaConfig,
    backend: Backend,
}

fn write_block(w: &mut impl Write, bytes: &[u8]) -> std::io::Result<()> {
    w.write_all(&(bytes.len() as u64).to_le_bytes())?;
    w.write_all(bytes)
}

fn write_matrix(w: &mut impl Write, m: &DenseMatrix) -> std::io::Result<()> {
    w.write_all(&(m.rows() as u64).to_le_bytes())?;
    w.write_all(&(m.cols() as u64).to_le_bytes())?;
    for x in m.data() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

/// Saves a fitted model and its vocabulary.
pub fn save_model(model: &LdaModel, vocab: &Vocabulary, path: &Path) -> Result<()> {
    let io_err = |e| Error::unreadable(path, e);
    let file = std::fs::File::create(path).map_err(io_err)?;
    let mut w = BufWriter::new(file);
    let mut step = || -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        let header = Header {
            config: model.config.clone(),
            backend: model.backend,
        };
        write_block(
            &mut w,
            &serde_json::to_vec(&header).expect("header serializes"),
        )?;
        write_matrix(&mut w, &model.beta)?;
        write_matrix(&mut w, &model.gamma)?;
        let mut vocab_text = String::new();
        for term in vocab.terms() {
            vocab_text.push_str(term);
            vocab_text.push('\n');
        }
        write_block(&mut w, vocab_text.as_bytes())?;
        write_block(
            &mut w,
            &serde_json::to_vec(&model.elbo_trace).expect("trace serializes"),
        )?;
        w.flush()
    };
    step().map_err(io_err)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::malformed(0, "archive truncated"));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        let b = self.take(8)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    fn block(&mut self) -> Result<&'a [u8]> {
        let len = self.u64()?;
        let len = usize::try_from(len).map_err(|_| Error::malformed(0, "oversized block"))?;
        self.take(len)
    }

    fn matrix(&mut self, what: &str) -> Result<DenseMatrix> {
        let rows = usize::try_from(self.u64()?)
            .map_err(|_| Error::malformed(0, format!("{what}: bad row count")))?;
        let cols = usize::try_from(self.u64()?)
            .map_err(|_| Error::malformed(0, format!("{what}: bad column count")))?;
        let n = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::malformed(0, format!("{what}: dimension overflow")))?;
        let raw = self.take(n * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Ok(DenseMatrix::from_vec(rows, cols, data))
    }
}

/// Loads a model archive, verifying shape agreement between config, beta,
/// gamma, and the vocabulary.
pub fn load_model(path: &Path) -> Result<(LdaModel, Vocabulary)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::unreadable(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        pos: 0,
    };
    if r.take(4)? != MAGIC {
        return Err(Error::malformed(0, "not a model archive"));
    }
    let version = u32::from_le_bytes(r.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::malformed(
            0,
            format!("unsupported version {version}"),
        ));
    }
    let header: Header = serde_json::from_slice(r.block()?)
        .map_err(|e| Error::malformed(0, format!("bad header: {e}")))?;
    let beta = r.matrix("beta")?;
    let gamma = r.matrix("gamma")?;
    let vocab_text =
        std::str::from_utf8(r.block()?).map_err(|_| Error::NonUtf8Content { path: path.into() })?;
    let terms: Vec<String> = vocab_text.lines().map(str::to_string).collect();
    if terms.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::malformed(0, "vocabulary not sorted and distinct"));
    }
    let elbo_trace: Vec<f64> = serde_json::from_slice(r.block()?)
        .map_err(|e| Error::malformed(0, format!("bad elbo trace: {e}")))?;
    if r.pos != bytes.len() {
        return Err(Error::malformed(0, "trailing bytes in archive"));
    }

    if beta.rows() != header.config.k {
        return Err(Error::DimensionMismatch {
            context: "archive: beta rows vs config k".into(),
            expected: header.config.k,
            actual: beta.rows(),
        });
    }
    if gamma.cols() != header.config.k {
        return Err(Error::DimensionMismatch {
            context: "archive: gamma columns vs config k".into(),
            expected: header.config.k,
            actual: gamma.cols(),
        });
    }
    if beta.cols() != terms.len() {
        return Err(Error::DimensionMismatch {
            context: "archive: beta columns vs vocabulary".into(),
            expected: terms.len(),
            actual: beta.cols(),
        });
    }
    let model = LdaModel {
        config: header.config,
        beta,
        gamma,
        elbo_trace,
        backend: header.backend,
    };
    Ok((model, Vocabulary::from_sorted_terms(terms)))
}
