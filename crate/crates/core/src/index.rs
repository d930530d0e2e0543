//! Inverted index over trajectory symbols: one postings list per symbol,
//! each entry a `(trajectory, position)` pair. Lists are either sorted by
//! `(trajectory, position)` for deterministic candidate order, or by
//! departure time to let time-constrained lookups binary-search.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::persist::{ArtifactKind, Reader, Writer};
use crate::traj::{Representation, Symbol, Trajectory, TrajectoryDb};

/// One occurrence of a symbol: trajectory id and 1-based position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Posting {
    pub traj: u32,
    pub pos: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexOrdering {
    ByPosition,
    ByDeparture,
}

/// Time span attached to a posting when the index is departure-ordered.
/// Trajectories without timestamps carry an unbounded span, which makes them
/// immune to temporal pruning.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PostingSpan {
    depart: f64,
    last: f64,
}

#[derive(Debug)]
pub struct InvertedIndex {
    representation: Representation,
    ordering: IndexOrdering,
    alphabet_size: usize,
    lists: Vec<Vec<Posting>>,
    spans: Vec<Vec<PostingSpan>>,
    max_traj: Option<u32>,
}

impl InvertedIndex {
    /// Index every symbol occurrence of the database, lists sorted by
    /// `(trajectory, position)`.
    pub fn build(db: &TrajectoryDb) -> Self {
        Self::build_with_ordering(db, IndexOrdering::ByPosition)
    }

    pub fn build_with_ordering(db: &TrajectoryDb, ordering: IndexOrdering) -> Self {
        let mut index = InvertedIndex {
            representation: db.representation(),
            ordering,
            alphabet_size: db.alphabet_size(),
            lists: vec![Vec::new(); db.alphabet_size()],
            spans: match ordering {
                IndexOrdering::ByPosition => Vec::new(),
                IndexOrdering::ByDeparture => vec![Vec::new(); db.alphabet_size()],
            },
            max_traj: None,
        };
        for (id, traj) in db.iter() {
            index.add(id, traj);
        }
        index
    }

    /// Append one trajectory's occurrences. Lists remain ordered; appending
    /// in increasing trajectory id is the cheap path.
    pub fn add(&mut self, id: u32, traj: &Trajectory) {
        let span = traj
            .time_span()
            .map(|(a, b)| PostingSpan { depart: a, last: b })
            .unwrap_or(PostingSpan {
                depart: f64::NEG_INFINITY,
                last: f64::INFINITY,
            });
        let in_order = self.max_traj.is_none_or(|m| id > m);
        let mut touched = Vec::new();
        for (i, &sym) in traj.symbols.iter().enumerate() {
            let posting = Posting {
                traj: id,
                pos: (i + 1) as u32,
            };
            self.lists[sym as usize].push(posting);
            if self.ordering == IndexOrdering::ByDeparture {
                self.spans[sym as usize].push(span);
            }
            if !in_order || self.ordering == IndexOrdering::ByDeparture {
                touched.push(sym);
            }
        }
        touched.sort_unstable();
        touched.dedup();
        for sym in touched {
            self.resort(sym);
        }
        self.max_traj = Some(self.max_traj.map_or(id, |m| m.max(id)));
    }

    fn resort(&mut self, sym: Symbol) {
        let list = &mut self.lists[sym as usize];
        match self.ordering {
            IndexOrdering::ByPosition => list.sort_unstable(),
            IndexOrdering::ByDeparture => {
                let spans = &mut self.spans[sym as usize];
                let mut joined: Vec<(PostingSpan, Posting)> =
                    spans.iter().copied().zip(list.iter().copied()).collect();
                joined.sort_by(|a, b| {
                    a.0.depart
                        .partial_cmp(&b.0.depart)
                        .unwrap_or(std::cmp::Ordering::Equal)
                        .then(a.1.cmp(&b.1))
                });
                for (i, (sp, po)) in joined.into_iter().enumerate() {
                    spans[i] = sp;
                    list[i] = po;
                }
            }
        }
    }

    /// The exact postings for a symbol; empty for unseen symbols.
    pub fn lookup(&self, sym: Symbol) -> &[Posting] {
        self.lists
            .get(sym as usize)
            .map(|v| v.as_slice())
            .unwrap_or(&[])
    }

    /// Postings whose trajectory's full time span can intersect
    /// `[t_lo, t_hi]`: binary search on the departure key bounds the scan,
    /// then the last-timestamp check completes the span test. A superset of
    /// the postings whose matched span intersects the interval.
    pub fn lookup_temporal(&self, sym: Symbol, t_lo: f64, t_hi: f64) -> Result<Vec<Posting>> {
        if self.ordering != IndexOrdering::ByDeparture {
            return Err(Error::NotTemporal);
        }
        let Some(list) = self.lists.get(sym as usize) else {
            return Ok(Vec::new());
        };
        let spans = &self.spans[sym as usize];
        let cut = spans.partition_point(|s| s.depart <= t_hi);
        Ok(list[..cut]
            .iter()
            .zip(&spans[..cut])
            .filter(|(_, s)| s.last >= t_lo)
            .map(|(p, _)| *p)
            .collect())
    }

    /// Occurrence count of a symbol across the database.
    pub fn frequency(&self, sym: Symbol) -> u64 {
        self.lookup(sym).len() as u64
    }

    pub fn total_postings(&self) -> u64 {
        self.lists.iter().map(|l| l.len() as u64).sum()
    }

    pub fn representation(&self) -> Representation {
        self.representation
    }

    pub fn ordering(&self) -> IndexOrdering {
        self.ordering
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = Writer::new(
            BufWriter::new(File::create(path)?),
            ArtifactKind::InvertedIndex,
        )?;
        let mut meta = Vec::new();
        meta.write_u8(match self.representation {
            Representation::Vertex => 0,
            Representation::Edge => 1,
        })?;
        meta.write_u8(match self.ordering {
            IndexOrdering::ByPosition => 0,
            IndexOrdering::ByDeparture => 1,
        })?;
        meta.write_u64::<LittleEndian>(self.alphabet_size as u64)?;
        meta.write_i64::<LittleEndian>(self.max_traj.map(|m| m as i64).unwrap_or(-1))?;
        w.section(1, &meta)?;

        let mut body = Vec::new();
        for (sym, list) in self.lists.iter().enumerate() {
            body.write_u64::<LittleEndian>(list.len() as u64)?;
            for (i, p) in list.iter().enumerate() {
                body.write_u32::<LittleEndian>(p.traj)?;
                body.write_u32::<LittleEndian>(p.pos)?;
                if self.ordering == IndexOrdering::ByDeparture {
                    let s = self.spans[sym][i];
                    body.write_f64::<LittleEndian>(s.depart)?;
                    body.write_f64::<LittleEndian>(s.last)?;
                }
            }
        }
        w.section(2, &body)?;
        w.finish()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut r = Reader::new(
            BufReader::new(File::open(path)?),
            ArtifactKind::InvertedIndex,
        )?;
        let (tag, meta) = r
            .section()?
            .ok_or_else(|| Error::Corrupt("missing index metadata".into()))?;
        if tag != 1 {
            return Err(Error::Corrupt(format!("unexpected section {tag}")));
        }
        let mut meta = &meta[..];
        let representation = match meta.read_u8()? {
            0 => Representation::Vertex,
            1 => Representation::Edge,
            other => return Err(Error::Corrupt(format!("bad representation code {other}"))),
        };
        let ordering = match meta.read_u8()? {
            0 => IndexOrdering::ByPosition,
            1 => IndexOrdering::ByDeparture,
            other => return Err(Error::Corrupt(format!("bad ordering code {other}"))),
        };
        let alphabet_size = meta.read_u64::<LittleEndian>()? as usize;
        let max_traj = match meta.read_i64::<LittleEndian>()? {
            -1 => None,
            m => Some(m as u32),
        };

        let (tag, body) = r
            .section()?
            .ok_or_else(|| Error::Corrupt("missing postings section".into()))?;
        if tag != 2 {
            return Err(Error::Corrupt(format!("unexpected section {tag}")));
        }
        let mut body = &body[..];
        let mut lists = Vec::with_capacity(alphabet_size);
        let mut spans = Vec::new();
        if ordering == IndexOrdering::ByDeparture {
            spans.reserve(alphabet_size);
        }
        for _ in 0..alphabet_size {
            let n = body.read_u64::<LittleEndian>()? as usize;
            let mut list = Vec::with_capacity(n);
            let mut span_list = Vec::new();
            for _ in 0..n {
                let traj = body.read_u32::<LittleEndian>()?;
                let pos = body.read_u32::<LittleEndian>()?;
                list.push(Posting { traj, pos });
                if ordering == IndexOrdering::ByDeparture {
                    span_list.push(PostingSpan {
                        depart: body.read_f64::<LittleEndian>()?,
                        last: body.read_f64::<LittleEndian>()?,
                    });
                }
            }
            lists.push(list);
            if ordering == IndexOrdering::ByDeparture {
                spans.push(span_list);
            }
        }
        Ok(InvertedIndex {
            representation,
            ordering,
            alphabet_size,
            lists,
            spans,
            max_traj,
        })
    }
}
