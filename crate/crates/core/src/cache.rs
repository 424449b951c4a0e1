//! Binary sidecar files for orthonormal bases and sample sets.
//!
//! Files are little-endian with a four-byte magic and a format version;
//! names are derived from a SHA-256 of the cache key.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::basis::{CoeffMatrix, FourierBasis, Measure, MeasureSource, MultiIndex};
use crate::error::{Error, Result};
use crate::geometry::{Manifold, SurfacePoint};
use crate::integrate::{SampleMethod, SampleSet};

const BASIS_MAGIC: &[u8; 4] = b"SZGB";
const SAMPLES_MAGIC: &[u8; 4] = b"SZGS";
const FORMAT_VERSION: u32 = 1;

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: &[u8; 4]) -> Self {
        let mut w = Self(magic.to_vec());
        w.u32(FORMAT_VERSION);
        w
    }
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn c64(&mut self, v: Complex64) {
        self.f64(v.re);
        self.f64(v.im);
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Self> {
        if bytes.len() < 8 || &bytes[..4] != magic {
            return Err(Error::Cache("bad magic".into()));
        }
        let mut r = Self { bytes, pos: 4 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Cache(format!("unsupported format version {version}")));
        }
        Ok(r)
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Cache("truncated file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn c64(&mut self) -> Result<Complex64> {
        Ok(Complex64::new(self.f64()?, self.f64()?))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.bytes.len() {
            return Err(Error::Cache(format!("length {n} exceeds file size")));
        }
        Ok(n)
    }
    fn finish(self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Cache("trailing bytes".into()));
        }
        Ok(())
    }
}

fn write_measure(w: &mut Writer, m: &Measure) {
    match m {
        Measure::RoundExact => w.u8(0),
        Measure::CompliantQuadrature { samples, seed } => {
            w.u8(1);
            w.u64(*samples as u64);
            w.u64(*seed);
        }
    }
}

fn read_measure(r: &mut Reader<'_>) -> Result<Measure> {
    match r.u8()? {
        0 => Ok(Measure::RoundExact),
        1 => Ok(Measure::CompliantQuadrature {
            samples: r.u64()? as usize,
            seed: r.u64()?,
        }),
        t => Err(Error::Cache(format!("unknown measure tag {t}"))),
    }
}

pub fn encode_basis(b: &FourierBasis) -> Vec<u8> {
    let mut w = Writer::new(BASIS_MAGIC);
    w.u32(b.level);
    w.u64(b.n as u64);
    w.u64(b.weights.len() as u64);
    for &x in &b.weights {
        w.u32(x);
    }
    w.u64(b.indices.len() as u64);
    for a in &b.indices {
        for &e in a.exponents() {
            w.u32(e);
        }
    }
    match &b.coeff {
        CoeffMatrix::Diagonal(v) => {
            w.u8(0);
            for &x in v {
                w.f64(x);
            }
        }
        CoeffMatrix::Lower(c) => {
            w.u8(1);
            for i in 0..c.nrows() {
                for j in 0..=i {
                    w.c64(c[(i, j)]);
                }
            }
        }
    }
    write_measure(&mut w, &b.measure);
    w.f64(b.condition_number);
    w.0
}

pub fn decode_basis(bytes: &[u8]) -> Result<FourierBasis> {
    let mut r = Reader::new(bytes, BASIS_MAGIC)?;
    let level = r.u32()?;
    let n = r.len()?;
    let wn = r.len()?;
    if wn != n {
        return Err(Error::Cache(format!("{wn} weights for dimension {n}")));
    }
    let weights = (0..wn).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let d = r.len()?;
    let mut indices = Vec::with_capacity(d);
    for _ in 0..d {
        let e = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        indices.push(MultiIndex::with_weights(e, &weights));
    }
    let coeff = match r.u8()? {
        0 => CoeffMatrix::Diagonal((0..d).map(|_| r.f64()).collect::<Result<_>>()?),
        1 => {
            let mut c = DMatrix::<Complex64>::zeros(d, d);
            for i in 0..d {
                for j in 0..=i {
                    c[(i, j)] = r.c64()?;
                }
            }
            CoeffMatrix::Lower(c)
        }
        t => return Err(Error::Cache(format!("unknown coefficient tag {t}"))),
    };
    let measure = read_measure(&mut r)?;
    let condition = r.f64()?;
    r.finish()?;
    FourierBasis::from_parts(level, n, weights, indices, coeff, measure, condition)
}

pub fn encode_samples(s: &SampleSet) -> Vec<u8> {
    let mut w = Writer::new(SAMPLES_MAGIC);
    w.u8(match s.method {
        SampleMethod::SphereUniform => 0,
        SampleMethod::ImplicitProjection => 1,
    });
    w.u64(s.seed);
    let n = s.points.first().map_or(0, |p| p.dim());
    w.u64(n as u64);
    w.u64(s.len() as u64);
    for (p, &wt) in s.points.iter().zip(&s.weights) {
        for &c in &p.coords {
            w.c64(c);
        }
        w.f64(p.residual);
        w.f64(wt);
    }
    w.0
}

pub fn decode_samples(bytes: &[u8]) -> Result<SampleSet> {
    let mut r = Reader::new(bytes, SAMPLES_MAGIC)?;
    let method = match r.u8()? {
        0 => SampleMethod::SphereUniform,
        1 => SampleMethod::ImplicitProjection,
        t => return Err(Error::Cache(format!("unknown sample method tag {t}"))),
    };
    let seed = r.u64()?;
    let n = r.len()?;
    let count = r.len()?;
    let mut points = Vec::with_capacity(count);
    let mut weights = Vec::with_capacity(count);
    for _ in 0..count {
        let coords = (0..n).map(|_| r.c64()).collect::<Result<Vec<_>>>()?;
        let residual = r.f64()?;
        points.push(SurfacePoint { coords, residual });
        weights.push(r.f64()?);
    }
    r.finish()?;
    Ok(SampleSet {
        points,
        weights,
        seed,
        method,
    })
}

fn digest(parts: &[String]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    hex::encode(&h.finalize()[..16])
}

/// Directory of cached bases and sample sets.
#[derive(Clone, Debug)]
pub struct Cache {
    dir: PathBuf,
}

impl Cache {
    pub fn new(dir: impl AsRef<Path>) -> Result<Self> {
        fs::create_dir_all(dir.as_ref())?;
        Ok(Self {
            dir: dir.as_ref().to_path_buf(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Path for the basis of level `m` keyed by `(manifold hash, m, measure)`;
    /// the measure carries the quadrature seed.
    pub fn basis_path(&self, manifold: &Manifold, m: u32, measure: &Measure) -> PathBuf {
        let key = digest(&[
            "basis".into(),
            manifold.hash(),
            m.to_string(),
            serde_json::to_string(measure).unwrap_or_default(),
        ]);
        self.dir.join(format!("basis-{key}.bin"))
    }

    pub fn samples_path(&self, manifold: &Manifold, count: usize, seed: u64, method: SampleMethod) -> PathBuf {
        let key = digest(&[
            "samples".into(),
            manifold.hash(),
            count.to_string(),
            seed.to_string(),
            serde_json::to_string(&method).unwrap_or_default(),
        ]);
        self.dir.join(format!("samples-{key}.bin"))
    }

    fn read(path: &Path) -> Result<Option<Vec<u8>>> {
        match fs::read(path) {
            Ok(b) => Ok(Some(b)),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Writes through a temporary file so readers never see partial data.
    fn write(path: &Path, bytes: &[u8]) -> Result<()> {
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, bytes)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load_basis(&self, manifold: &Manifold, m: u32, measure: &Measure) -> Result<Option<FourierBasis>> {
        Self::read(&self.basis_path(manifold, m, measure))?
            .map(|b| decode_basis(&b))
            .transpose()
    }

    pub fn store_basis(&self, manifold: &Manifold, basis: &FourierBasis) -> Result<PathBuf> {
        let path = self.basis_path(manifold, basis.level, &basis.measure);
        Self::write(&path, &encode_basis(basis))?;
        Ok(path)
    }

    /// Cached basis, built and stored on a miss.
    pub fn basis(&self, manifold: &Manifold, m: u32, source: &MeasureSource<'_>) -> Result<FourierBasis> {
        let measure = source.measure();
        if let Some(b) = self.load_basis(manifold, m, &measure)? {
            return Ok(b);
        }
        let b = FourierBasis::build(manifold, m, source)?;
        self.store_basis(manifold, &b)?;
        Ok(b)
    }

    pub fn load_samples(
        &self,
        manifold: &Manifold,
        count: usize,
        seed: u64,
        method: SampleMethod,
    ) -> Result<Option<SampleSet>> {
        Self::read(&self.samples_path(manifold, count, seed, method))?
            .map(|b| decode_samples(&b))
            .transpose()
    }

    pub fn store_samples(&self, manifold: &Manifold, samples: &SampleSet) -> Result<PathBuf> {
        let path = self.samples_path(manifold, samples.len(), samples.seed, samples.method);
        Self::write(&path, &encode_samples(samples))?;
        Ok(path)
    }
}
