//! Binary dataset container.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes            | content                                              |
//! |------------------|------------------------------------------------------|
//! | 8                | magic `MDICTDS\0`                                     |
//! | 4 (`u32`)        | schema version                                       |
//! | 4 (`u32`)        | header length `h`                                    |
//! | `h`              | UTF-8 JSON [`DatasetHeader`]                          |
//! | `8·d·p`          | ground-truth dictionary, column-major `f64`          |
//! | per sample       | `y` (`d` × `f64`), `nnz` (`u32`), support (`nnz` × `u32`), values (`nnz` × `f64`), `ε` (`d` × `f64`) |
//! | 8                | end marker `MDICTEND`                                |
//!
//! The `n` training samples come first, then the `n_holdout` holdout samples.
//! Floats are stored as raw bit patterns, so a save/load round trip is
//! bitwise exact. Loading never returns a partial dataset: a short read,
//! a missing end marker or trailing bytes are all errors.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use maskdict::model::SupportDist;
use maskdict::{Dataset, GroundTruthModel, Matrix, Sample, SparseVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult, DatasetFileError};

pub const MAGIC: &[u8; 8] = b"MDICTDS\0";
pub const END_MARKER: &[u8; 8] = b"MDICTEND";
pub const SCHEMA_VERSION: u32 = 1;

/// Largest header accepted when reading, as a guard against garbage lengths.
const MAX_HEADER_BYTES: u32 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub schema_version: u32,
    pub d: usize,
    pub p: usize,
    pub k: usize,
    pub sigma_z: f64,
    pub normalize_codes: bool,
    pub noise_var: f64,
    pub support_dist: SupportDist,
    pub seed: u64,
    pub stream: u64,
    pub n: usize,
    pub n_holdout: usize,
}

impl DatasetHeader {
    pub fn of(ds: &Dataset) -> Self {
        let m = ds.model();
        Self {
            schema_version: SCHEMA_VERSION,
            d: m.d(),
            p: m.p(),
            k: m.k(),
            sigma_z: m.sigma_z(),
            normalize_codes: m.normalize_codes(),
            noise_var: m.noise_var(),
            support_dist: m.support_dist(),
            seed: ds.seed(),
            stream: ds.stream(),
            n: ds.len(),
            n_holdout: ds.holdout_len(),
        }
    }

    /// Byte offset of the first training sample's `y`.
    pub fn first_record_offset(&self, header_len: usize) -> usize {
        MAGIC.len() + 8 + header_len + 8 * self.d * self.p
    }
}

pub fn write_dataset<W: Write>(ds: &Dataset, mut w: W) -> Result<(), DatasetFileError> {
    let header = serde_json::to_vec(&DatasetHeader::of(ds))?;
    let header_len = u32::try_from(header.len())
        .map_err(|_| DatasetFileError::Malformed("header too large".into()))?;
    w.write_all(MAGIC)?;
    w.write_all(&SCHEMA_VERSION.to_le_bytes())?;
    w.write_all(&header_len.to_le_bytes())?;
    w.write_all(&header)?;
    write_f64s(&mut w, ds.model().dictionary().as_col_major())?;
    for s in ds.samples().iter().chain(ds.holdout()) {
        write_f64s(&mut w, &s.y)?;
        let nnz = u32::try_from(s.z_true.nnz())
            .map_err(|_| DatasetFileError::Malformed("code too long".into()))?;
        w.write_all(&nnz.to_le_bytes())?;
        for &i in s.z_true.support() {
            let i = u32::try_from(i)
                .map_err(|_| DatasetFileError::Malformed("support index too large".into()))?;
            w.write_all(&i.to_le_bytes())?;
        }
        write_f64s(&mut w, s.z_true.values())?;
        write_f64s(&mut w, &s.eps_true)?;
    }
    w.write_all(END_MARKER)?;
    w.flush()?;
    Ok(())
}

fn write_f64s<W: Write>(w: &mut W, xs: &[f64]) -> std::io::Result<()> {
    for x in xs {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

struct Reader<R> {
    inner: R,
}

impl<R: Read> Reader<R> {
    fn exact<const N: usize>(&mut self, what: &'static str) -> Result<[u8; N], DatasetFileError> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| eof_as_truncation(e, what))?;
        Ok(buf)
    }

    fn u32(&mut self, what: &'static str) -> Result<u32, DatasetFileError> {
        Ok(u32::from_le_bytes(self.exact(what)?))
    }

    fn f64s(&mut self, n: usize, what: &'static str) -> Result<Vec<f64>, DatasetFileError> {
        (0..n).map(|_| Ok(f64::from_le_bytes(self.exact(what)?))).collect()
    }
}

fn eof_as_truncation(e: std::io::Error, what: &'static str) -> DatasetFileError {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        DatasetFileError::Truncated(what)
    } else {
        DatasetFileError::Io(e)
    }
}

/// Reads the fixed prefix and header only.
pub fn read_header<R: Read>(r: R) -> Result<(DatasetHeader, usize), DatasetFileError> {
    let mut r = Reader { inner: r };
    read_header_from(&mut r)
}

fn read_header_from<R: Read>(r: &mut Reader<R>) -> Result<(DatasetHeader, usize), DatasetFileError> {
    if &r.exact::<8>("magic")? != MAGIC {
        return Err(DatasetFileError::BadMagic);
    }
    let version = r.u32("schema version")?;
    if version != SCHEMA_VERSION {
        return Err(DatasetFileError::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let len = r.u32("header length")?;
    if len > MAX_HEADER_BYTES {
        return Err(DatasetFileError::Malformed(format!("header length {len} is implausible")));
    }
    let mut buf = vec![0u8; len as usize];
    r.inner.read_exact(&mut buf).map_err(|e| eof_as_truncation(e, "header"))?;
    let header: DatasetHeader = serde_json::from_slice(&buf)?;
    if header.schema_version != version {
        return Err(DatasetFileError::SchemaVersion {
            found: header.schema_version,
            expected: SCHEMA_VERSION,
        });
    }
    Ok((header, len as usize))
}

pub fn read_dataset<R: Read>(r: R) -> Result<Dataset, DatasetFileError> {
    let mut r = Reader { inner: r };
    let (h, _) = read_header_from(&mut r)?;
    let (d, p) = (h.d, h.p);
    if d == 0 || p == 0 {
        return Err(DatasetFileError::Malformed("empty dictionary".into()));
    }
    let a = Matrix::from_col_major(d, p, r.f64s(d * p, "dictionary")?)
        .map_err(|e| DatasetFileError::Malformed(e.to_string()))?;
    let model = GroundTruthModel::new(a, h.k, h.sigma_z, h.normalize_codes, h.noise_var)
        .map_err(|e| DatasetFileError::Malformed(e.to_string()))?;
    if model.support_dist() != h.support_dist {
        return Err(DatasetFileError::Malformed("unsupported support distribution".into()));
    }

    let read_sample = |r: &mut Reader<R>| -> Result<Sample, DatasetFileError> {
        let y = r.f64s(d, "sample measurement")?;
        let nnz = r.u32("code length")? as usize;
        if nnz > p {
            return Err(DatasetFileError::Malformed(format!("code has {nnz} > p = {p} entries")));
        }
        let support = (0..nnz)
            .map(|_| r.u32("code support").map(|i| i as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let values = r.f64s(nnz, "code values")?;
        let z_true = SparseVector::new(p, support, values)
            .map_err(|e| DatasetFileError::Malformed(e.to_string()))?;
        let eps_true = r.f64s(d, "sample noise")?;
        Ok(Sample { y, z_true, eps_true })
    };
    let samples = (0..h.n).map(|_| read_sample(&mut r)).collect::<Result<Vec<_>, _>>()?;
    let holdout = (0..h.n_holdout)
        .map(|_| read_sample(&mut r))
        .collect::<Result<Vec<_>, _>>()?;

    if &r.exact::<8>("end marker")? != END_MARKER {
        return Err(DatasetFileError::Malformed("missing end marker".into()));
    }
    let mut trailing = [0u8; 1];
    if r.inner.read(&mut trailing)? != 0 {
        return Err(DatasetFileError::Malformed("trailing bytes after end marker".into()));
    }
    Dataset::from_parts(model, samples, holdout, h.seed, h.stream)
        .map_err(|e| DatasetFileError::Malformed(e.to_string()))
}

pub fn save_dataset(ds: &Dataset, path: &Path) -> CliResult<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_dataset(ds, BufWriter::new(file)).map_err(|source| CliError::DatasetFile {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_dataset(path: &Path) -> CliResult<Dataset> {
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    read_dataset(BufReader::new(file)).map_err(|source| CliError::DatasetFile {
        path: path.to_path_buf(),
        source,
    })
}
