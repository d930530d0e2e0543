//! Checksummed binary container for on-disk artifacts (trajectory databases
//! and inverted indexes). Layout: an 8-byte magic, a format version, an
//! artifact kind, then length-prefixed sections each followed by a SHA-256
//! digest of the payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::traj::{Representation, Trajectory, TrajectoryDb};

const MAGIC: &[u8; 8] = b"STRJBIN\0";
pub(crate) const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ArtifactKind {
    TrajectoryDb = 1,
    InvertedIndex = 2,
}

pub(crate) struct Writer<W: Write> {
    out: W,
}

impl<W: Write> Writer<W> {
    pub(crate) fn new(mut out: W, kind: ArtifactKind) -> Result<Self> {
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        out.write_u32::<LittleEndian>(kind as u32)?;
        Ok(Writer { out })
    }

    pub(crate) fn section(&mut self, tag: u32, payload: &[u8]) -> Result<()> {
        self.out.write_u32::<LittleEndian>(tag)?;
        self.out.write_u64::<LittleEndian>(payload.len() as u64)?;
        self.out.write_all(payload)?;
        let digest = Sha256::digest(payload);
        self.out.write_all(&digest)?;
        Ok(())
    }

    pub(crate) fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub(crate) struct Reader<R: Read> {
    input: R,
}

impl<R: Read> Reader<R> {
    pub(crate) fn new(mut input: R, kind: ArtifactKind) -> Result<Self> {
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|_| Error::Corrupt("missing magic header".into()))?;
        if &magic != MAGIC {
            return Err(Error::Corrupt("bad magic header".into()));
        }
        let version = input
            .read_u32::<LittleEndian>()
            .map_err(|_| Error::Corrupt("missing version".into()))?;
        if version != FORMAT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let found_kind = input
            .read_u32::<LittleEndian>()
            .map_err(|_| Error::Corrupt("missing artifact kind".into()))?;
        if found_kind != kind as u32 {
            return Err(Error::Corrupt(format!(
                "artifact kind {found_kind} does not match expected {}",
                kind as u32
            )));
        }
        Ok(Reader { input })
    }

    /// Read the next section; `None` at a clean end of file. Truncated
    /// payloads and digest mismatches both surface as corruption errors.
    pub(crate) fn section(&mut self) -> Result<Option<(u32, Vec<u8>)>> {
        let tag = match self.input.read_u32::<LittleEndian>() {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        let len = self
            .input
            .read_u64::<LittleEndian>()
            .map_err(|_| Error::Corrupt("truncated section header".into()))?;
        let mut payload = vec![0u8; len as usize];
        self.input
            .read_exact(&mut payload)
            .map_err(|_| Error::Corrupt("truncated section payload".into()))?;
        let mut digest = [0u8; 32];
        self.input
            .read_exact(&mut digest)
            .map_err(|_| Error::Corrupt("truncated section checksum".into()))?;
        if Sha256::digest(&payload)[..] != digest {
            return Err(Error::Corrupt(format!(
                "checksum mismatch in section {tag}"
            )));
        }
        Ok(Some((tag, payload)))
    }
}

const SEC_DB_META: u32 = 1;
const SEC_DB_TRAJS: u32 = 2;

fn representation_code(rep: Representation) -> u8 {
    match rep {
        Representation::Vertex => 0,
        Representation::Edge => 1,
    }
}

fn representation_from(code: u8) -> Result<Representation> {
    match code {
        0 => Ok(Representation::Vertex),
        1 => Ok(Representation::Edge),
        other => Err(Error::Corrupt(format!("bad representation code {other}"))),
    }
}

/// Persist a trajectory database.
pub fn save_db(db: &TrajectoryDb, path: &Path) -> Result<()> {
    let mut w = Writer::new(
        BufWriter::new(File::create(path)?),
        ArtifactKind::TrajectoryDb,
    )?;

    let mut meta = Vec::new();
    meta.write_u8(representation_code(db.representation()))?;
    meta.write_u64::<LittleEndian>(db.alphabet_size() as u64)?;
    meta.write_u64::<LittleEndian>(db.len() as u64)?;
    w.section(SEC_DB_META, &meta)?;

    let mut body = Vec::new();
    for (_, t) in db.iter() {
        body.write_i64::<LittleEndian>(t.external_id)?;
        body.write_u64::<LittleEndian>(t.symbols.len() as u64)?;
        for &s in &t.symbols {
            body.write_u32::<LittleEndian>(s)?;
        }
        match &t.timestamps {
            None => body.write_u8(0)?,
            Some(ts) => {
                body.write_u8(1)?;
                body.write_u64::<LittleEndian>(ts.len() as u64)?;
                for &v in ts {
                    body.write_f64::<LittleEndian>(v)?;
                }
            }
        }
    }
    w.section(SEC_DB_TRAJS, &body)?;
    w.finish()
}

/// Load a trajectory database saved by [`save_db`].
pub fn load_db(path: &Path) -> Result<TrajectoryDb> {
    let mut r = Reader::new(
        BufReader::new(File::open(path)?),
        ArtifactKind::TrajectoryDb,
    )?;
    let (tag, meta) = r
        .section()?
        .ok_or_else(|| Error::Corrupt("missing database metadata".into()))?;
    if tag != SEC_DB_META {
        return Err(Error::Corrupt(format!("unexpected section {tag}")));
    }
    let mut meta = &meta[..];
    let representation = representation_from(meta.read_u8()?)?;
    let alphabet_size = meta.read_u64::<LittleEndian>()? as usize;
    let count = meta.read_u64::<LittleEndian>()? as usize;

    let (tag, body) = r
        .section()?
        .ok_or_else(|| Error::Corrupt("missing trajectory section".into()))?;
    if tag != SEC_DB_TRAJS {
        return Err(Error::Corrupt(format!("unexpected section {tag}")));
    }
    let mut body = &body[..];
    let mut trajs = Vec::with_capacity(count);
    for _ in 0..count {
        let external_id = body.read_i64::<LittleEndian>()?;
        let len = body.read_u64::<LittleEndian>()? as usize;
        let mut symbols = Vec::with_capacity(len);
        for _ in 0..len {
            symbols.push(body.read_u32::<LittleEndian>()?);
        }
        let timestamps = match body.read_u8()? {
            0 => None,
            1 => {
                let n = body.read_u64::<LittleEndian>()? as usize;
                let mut ts = Vec::with_capacity(n);
                for _ in 0..n {
                    ts.push(body.read_f64::<LittleEndian>()?);
                }
                Some(ts)
            }
            other => return Err(Error::Corrupt(format!("bad timestamp flag {other}"))),
        };
        trajs.push(Trajectory {
            external_id,
            symbols,
            timestamps,
        });
    }
    TrajectoryDb::from_parts(representation, alphabet_size, trajs)
}
