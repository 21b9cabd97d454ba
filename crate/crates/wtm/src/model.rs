//! Model persistence: the WTMM container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     "WTMM"
//! version   u8 (currently 1)
//! timestamp u64   wall-clock seconds; excluded from the checksum so
//!                 identical training runs produce identical checksums
//! payload:
//!   seed        u64    rng seed of the training run
//!   o           u32    feature count
//!   classes     u32
//!   clauses_pos u32
//!   clauses_neg u32
//!   half_range  u32
//!   target      u32
//!   p_s         f64
//!   gamma       f64
//!   per class, positive bank then negative bank, per clause:
//!     2o automaton states as u32, then the weight as f64
//! checksum  u32  CRC-32 (IEEE) over the payload bytes
//! ```
//!
//! Loading rebuilds the machine exactly: states and weights round-trip
//! bit-for-bit, so predictions after a load match the saved machine on
//! every input.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use crate::automata::Clause;
use crate::error::{Error, ParseError, Result};
use crate::machine::{BinaryWtm, MulticlassWtm, WtmParams};

const WTMM_MAGIC: &[u8; 4] = b"WTMM";
const WTMM_VERSION: u8 = 1;

/// CRC-32 (IEEE 802.3, reflected, polynomial 0xEDB88320).
pub fn crc32(bytes: &[u8]) -> u32 {
    const TABLE: [u32; 256] = crc32_table();
    let mut crc = 0xFFFF_FFFFu32;
    for &b in bytes {
        crc = (crc >> 8) ^ TABLE[((crc ^ u32::from(b)) & 0xFF) as usize];
    }
    !crc
}

const fn crc32_table() -> [u32; 256] {
    let mut table = [0u32; 256];
    let mut i = 0;
    while i < 256 {
        let mut crc = i as u32;
        let mut bit = 0;
        while bit < 8 {
            crc = if crc & 1 == 1 {
                (crc >> 1) ^ 0xEDB8_8320
            } else {
                crc >> 1
            };
            bit += 1;
        }
        table[i] = crc;
        i += 1;
    }
    table
}

/// A machine loaded from (or about to be written to) a model file.
#[derive(Debug)]
pub struct StoredModel {
    pub machine: MulticlassWtm,
    pub seed: u64,
    pub timestamp: u64,
    /// CRC-32 of the payload, as stored in the file.
    pub checksum: u32,
}

fn payload_bytes(machine: &MulticlassWtm, seed: u64) -> Vec<u8> {
    let params = machine.params();
    let mut out = Vec::new();
    out.extend_from_slice(&seed.to_le_bytes());
    out.extend_from_slice(&(params.num_features as u32).to_le_bytes());
    out.extend_from_slice(&(machine.num_classes() as u32).to_le_bytes());
    out.extend_from_slice(&(params.clauses_pos as u32).to_le_bytes());
    out.extend_from_slice(&(params.clauses_neg as u32).to_le_bytes());
    out.extend_from_slice(&params.half_range.to_le_bytes());
    out.extend_from_slice(&params.target.to_le_bytes());
    out.extend_from_slice(&params.p_s.to_le_bytes());
    out.extend_from_slice(&params.gamma.to_le_bytes());
    for machine in machine.machines() {
        for clause in machine
            .positive_clauses()
            .iter()
            .chain(machine.negative_clauses())
        {
            for &state in clause.states() {
                out.extend_from_slice(&state.to_le_bytes());
            }
            out.extend_from_slice(&clause.weight().to_le_bytes());
        }
    }
    out
}

/// Checksum a save of this machine would carry. Depends on the seed and
/// every state and weight, but not on the timestamp.
pub fn model_checksum(machine: &MulticlassWtm, seed: u64) -> u32 {
    crc32(&payload_bytes(machine, seed))
}

/// Current wall-clock time in seconds, for the model header.
pub fn now_timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Writes the model; returns the payload checksum.
pub fn save_model(
    machine: &MulticlassWtm,
    seed: u64,
    timestamp: u64,
    writer: impl Write,
) -> Result<u32> {
    let payload = payload_bytes(machine, seed);
    let checksum = crc32(&payload);
    let mut w = BufWriter::new(writer);
    w.write_all(WTMM_MAGIC)?;
    w.write_all(&[WTMM_VERSION])?;
    w.write_all(&timestamp.to_le_bytes())?;
    w.write_all(&payload)?;
    w.write_all(&checksum.to_le_bytes())?;
    w.flush()?;
    Ok(checksum)
}

pub fn save_model_file(
    machine: &MulticlassWtm,
    seed: u64,
    timestamp: u64,
    path: impl AsRef<Path>,
) -> Result<u32> {
    save_model(machine, seed, timestamp, File::create(path.as_ref())?)
}

pub fn load_model(reader: impl Read) -> Result<StoredModel> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| ParseError::Header("missing magic".into()))?;
    if &magic != WTMM_MAGIC {
        return Err(ParseError::Header(format!("bad magic {magic:?}")).into());
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)
        .map_err(|_| ParseError::Header("missing version".into()))?;
    if version[0] != WTMM_VERSION {
        return Err(ParseError::Version(version[0]).into());
    }
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)
        .map_err(|_| ParseError::Header("missing timestamp".into()))?;
    let timestamp = u64::from_le_bytes(u64buf);

    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if rest.len() < 4 {
        return Err(ParseError::Truncated("checksum".into()).into());
    }
    let (payload, checksum_bytes) = rest.split_at(rest.len() - 4);
    let stored = u32::from_le_bytes(checksum_bytes.try_into().unwrap());
    let computed = crc32(payload);
    if stored != computed {
        return Err(ParseError::Checksum { stored, computed }.into());
    }

    let mut cursor = Cursor::new(payload);
    let seed = cursor.u64()?;
    let num_features = cursor.u32()? as usize;
    let num_classes = cursor.u32()? as usize;
    let clauses_pos = cursor.u32()? as usize;
    let clauses_neg = cursor.u32()? as usize;
    let half_range = cursor.u32()?;
    let target = cursor.u32()?;
    let p_s = cursor.f64()?;
    let gamma = cursor.f64()?;
    let params = WtmParams {
        num_features,
        clauses_pos,
        clauses_neg,
        target,
        p_s,
        gamma,
        half_range,
    };
    params.validate().map_err(|e| match e {
        Error::Argument(msg) => Error::Parse(ParseError::Header(msg)),
        other => other,
    })?;

    let mut machines = Vec::with_capacity(num_classes);
    for _ in 0..num_classes {
        let mut banks = [
            Vec::with_capacity(clauses_pos),
            Vec::with_capacity(clauses_neg),
        ];
        for (bank_index, count) in [(0, clauses_pos), (1, clauses_neg)] {
            for _ in 0..count {
                let mut states = Vec::with_capacity(2 * num_features);
                for _ in 0..2 * num_features {
                    states.push(cursor.u32()?);
                }
                let weight = cursor.f64()?;
                let clause =
                    Clause::from_states(states, weight, half_range).map_err(|e| match e {
                        Error::Argument(msg) => Error::Parse(ParseError::Header(msg)),
                        other => other,
                    })?;
                banks[bank_index].push(clause);
            }
        }
        let [positive, negative] = banks;
        let machine = BinaryWtm::from_banks(params, positive, negative).map_err(|e| match e {
            Error::Argument(msg) => Error::Parse(ParseError::Header(msg)),
            other => other,
        })?;
        machines.push(machine);
    }
    if !cursor.is_done() {
        return Err(ParseError::TrailingBytes(cursor.remaining()).into());
    }
    let machine = MulticlassWtm::from_machines(machines).map_err(|e| match e {
        Error::Argument(msg) => Error::Parse(ParseError::Header(msg)),
        other => other,
    })?;
    Ok(StoredModel {
        machine,
        seed,
        timestamp,
        checksum: stored,
    })
}

pub fn load_model_file(path: impl AsRef<Path>) -> Result<StoredModel> {
    load_model(File::open(path.as_ref())?)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    offset: usize,
}

impl<'a> Cursor<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, offset: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.offset + n > self.bytes.len() {
            return Err(ParseError::Truncated(format!("payload at byte {}", self.offset)).into());
        }
        let slice = &self.bytes[self.offset..self.offset + n];
        self.offset += n;
        Ok(slice)
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

    fn is_done(&self) -> bool {
        self.offset == self.bytes.len()
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.offset
    }
}
