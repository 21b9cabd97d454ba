//! Binary datasets, encoders and the on-disk container format.
//!
//! Rows are fixed-width bit vectors with integer class labels. The native
//! container is WTMD, a small self-describing binary format:
//!
//! ```text
//! magic   "WTMD"
//! version u8 (currently 1)
//! o       u32 LE   feature count
//! classes u32 LE
//! rows    u64 LE
//! per row: label u32 LE, then ceil(o / 8) bytes of features packed
//!          least-significant-bit first (bit k in byte k/8, position k%8)
//! ```
//!
//! A line-oriented text form (`label` whitespace `o` characters of
//! '0'/'1') is accepted on input for hand-written fixtures. Grayscale
//! images arrive through the IDX container pair and are thresholded to
//! bits; game boards arrive through the comma-separated cell format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::bits::BitVec;
use crate::error::{Error, ParseError, Result};
use crate::rng::RngState;
use crate::sampling::bounded;

const WTMD_MAGIC: &[u8; 4] = b"WTMD";
const WTMD_VERSION: u8 = 1;

/// Rows of `o` binary features with class labels below `n_classes`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct BinaryDataset {
    num_features: usize,
    num_classes: u32,
    rows: Vec<BitVec>,
    labels: Vec<u32>,
}

impl BinaryDataset {
    pub fn new(num_features: usize, num_classes: u32) -> Result<BinaryDataset> {
        if num_features == 0 {
            return Err(Error::Argument("datasets need at least one feature".into()));
        }
        if num_classes == 0 {
            return Err(Error::Argument("datasets need at least one class".into()));
        }
        Ok(BinaryDataset {
            num_features,
            num_classes,
            rows: Vec::new(),
            labels: Vec::new(),
        })
    }

    pub fn push_row(&mut self, features: BitVec, label: u32) -> Result<()> {
        if features.len() != self.num_features {
            return Err(Error::Argument(format!(
                "row width {} does not match dataset width {}",
                features.len(),
                self.num_features
            )));
        }
        if label >= self.num_classes {
            return Err(Error::Argument(format!(
                "label {label} out of range for {} classes",
                self.num_classes
            )));
        }
        self.rows.push(features);
        self.labels.push(label);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }

    #[inline]
    pub fn features(&self, row: usize) -> &BitVec {
        &self.rows[row]
    }

    #[inline]
    pub fn label(&self, row: usize) -> u32 {
        self.labels[row]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BitVec, u32)> {
        self.rows.iter().zip(self.labels.iter().copied())
    }

    /// Per-class row counts, indexed by label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes as usize];
        for &label in &self.labels {
            counts[label as usize] += 1;
        }
        counts
    }
}

/// Thresholds grayscale pixels to bits: bit k is 1 iff `pixels[k] >=
/// threshold`.
pub fn binarize_grayscale(pixels: &[u8], threshold: u8) -> BitVec {
    let mut bits = BitVec::zeros(pixels.len());
    for (k, &p) in pixels.iter().enumerate() {
        if p >= threshold {
            bits.set(k, true);
        }
    }
    bits
}

/// Default grayscale binarization threshold (30% of the 8-bit range,
/// rounded up).
pub const DEFAULT_BINARIZE_THRESHOLD: u8 = 77;

/// Occupancy of one board cell.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Cell {
    Empty,
    PlayerOne,
    PlayerTwo,
}

/// Number of cells on the 6x7 board.
pub const CONNECT4_CELLS: usize = 42;
/// Encoded feature width: one occupancy plane per player.
pub const CONNECT4_FEATURES: usize = 2 * CONNECT4_CELLS;

/// Two-plane occupancy encoding of a 6x7 board, cells in column-major
/// order (a1..a6, b1..b6, ..., g1..g6): bits 0..41 are player-one
/// occupancy, bits 42..83 player-two.
pub fn encode_connect4(cells: &[Cell]) -> Result<BitVec> {
    if cells.len() != CONNECT4_CELLS {
        return Err(Error::Argument(format!(
            "expected {CONNECT4_CELLS} cells, got {}",
            cells.len()
        )));
    }
    let mut bits = BitVec::zeros(CONNECT4_FEATURES);
    for (i, &cell) in cells.iter().enumerate() {
        match cell {
            Cell::Empty => {}
            Cell::PlayerOne => bits.set(i, true),
            Cell::PlayerTwo => bits.set(CONNECT4_CELLS + i, true),
        }
    }
    Ok(bits)
}

/// Parses the comma-separated board format: 42 cells of `x`/`o`/`b`
/// followed by a `win`/`loss`/`draw` outcome, one position per line.
/// Labels map to classes win = 0, loss = 1, draw = 2.
pub fn load_connect4(reader: impl Read) -> Result<BinaryDataset> {
    let mut text = String::new();
    let mut reader = BufReader::new(reader);
    reader.read_to_string(&mut text)?;
    let mut dataset = BinaryDataset::new(CONNECT4_FEATURES, 3)?;
    let mut saw_any = false;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        saw_any = true;
        let row = line_no + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != CONNECT4_CELLS + 1 {
            return Err(ParseError::RowWidth {
                row,
                expected: CONNECT4_CELLS + 1,
                found: fields.len(),
            }
            .into());
        }
        let mut cells = [Cell::Empty; CONNECT4_CELLS];
        for (i, field) in fields[..CONNECT4_CELLS].iter().enumerate() {
            cells[i] = match field.trim() {
                "b" => Cell::Empty,
                "x" => Cell::PlayerOne,
                "o" => Cell::PlayerTwo,
                other => {
                    return Err(ParseError::Symbol {
                        row,
                        symbol: other.chars().next().unwrap_or(' '),
                    }
                    .into())
                }
            };
        }
        let label = match fields[CONNECT4_CELLS].trim() {
            "win" => 0,
            "loss" => 1,
            "draw" => 2,
            other => {
                return Err(ParseError::Symbol {
                    row,
                    symbol: other.chars().next().unwrap_or(' '),
                }
                .into())
            }
        };
        dataset.push_row(encode_connect4(&cells)?, label)?;
    }
    if !saw_any {
        return Err(ParseError::Header("empty board file".into()).into());
    }
    Ok(dataset)
}

const IDX_IMAGES_MAGIC: u32 = 2051;
const IDX_LABELS_MAGIC: u32 = 2049;

fn read_be_u32(reader: &mut impl Read, what: &str) -> Result<u32> {
    let mut buf = [0u8; 4];
    reader
        .read_exact(&mut buf)
        .map_err(|_| ParseError::Header(format!("missing {what}")))?;
    Ok(u32::from_be_bytes(buf))
}

/// Loads an IDX image/label container pair, binarizing each image at the
/// given threshold. The class count is the largest label plus one.
pub fn load_idx(images: impl Read, labels: impl Read, threshold: u8) -> Result<BinaryDataset> {
    let mut images = BufReader::new(images);
    let magic = read_be_u32(&mut images, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(ParseError::Header(format!(
            "image magic {magic} (expected {IDX_IMAGES_MAGIC})"
        ))
        .into());
    }
    let count = read_be_u32(&mut images, "image count")? as usize;
    let rows = read_be_u32(&mut images, "image rows")? as usize;
    let cols = read_be_u32(&mut images, "image cols")? as usize;
    let pixels_per_image = rows * cols;
    if pixels_per_image == 0 {
        return Err(ParseError::Header("zero-sized images".into()).into());
    }

    let mut labels = BufReader::new(labels);
    let magic = read_be_u32(&mut labels, "label magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(ParseError::Header(format!(
            "label magic {magic} (expected {IDX_LABELS_MAGIC})"
        ))
        .into());
    }
    let label_count = read_be_u32(&mut labels, "label count")? as usize;
    if label_count != count {
        return Err(ParseError::Header(format!("{count} images but {label_count} labels")).into());
    }

    let mut label_bytes = vec![0u8; count];
    labels
        .read_exact(&mut label_bytes)
        .map_err(|_| ParseError::Truncated("label payload".into()))?;
    let num_classes = u32::from(label_bytes.iter().copied().max().unwrap_or(0)) + 1;

    let mut dataset = BinaryDataset::new(pixels_per_image, num_classes)?;
    let mut pixels = vec![0u8; pixels_per_image];
    for (row, &label) in label_bytes.iter().enumerate() {
        images
            .read_exact(&mut pixels)
            .map_err(|_| ParseError::Truncated(format!("image {row}")))?;
        dataset.push_row(binarize_grayscale(&pixels, threshold), u32::from(label))?;
    }
    Ok(dataset)
}

/// Writes the WTMD container.
pub fn save_wtmd(dataset: &BinaryDataset, writer: impl Write) -> Result<()> {
    let mut w = BufWriter::new(writer);
    w.write_all(WTMD_MAGIC)?;
    w.write_all(&[WTMD_VERSION])?;
    w.write_all(&(dataset.num_features as u32).to_le_bytes())?;
    w.write_all(&dataset.num_classes.to_le_bytes())?;
    w.write_all(&(dataset.len() as u64).to_le_bytes())?;
    for (features, label) in dataset.iter() {
        w.write_all(&label.to_le_bytes())?;
        w.write_all(&features.to_bytes_lsb())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads the WTMD container, validating every row.
pub fn load_wtmd(reader: impl Read) -> Result<BinaryDataset> {
    let mut r = BufReader::new(reader);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| ParseError::Header("missing magic".into()))?;
    if &magic != WTMD_MAGIC {
        return Err(ParseError::Header(format!("bad magic {magic:?}")).into());
    }
    let mut version = [0u8; 1];
    r.read_exact(&mut version)
        .map_err(|_| ParseError::Header("missing version".into()))?;
    if version[0] != WTMD_VERSION {
        return Err(ParseError::Version(version[0]).into());
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| ParseError::Header("missing feature count".into()))?;
    let num_features = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf)
        .map_err(|_| ParseError::Header("missing class count".into()))?;
    let num_classes = u32::from_le_bytes(u32buf);
    let mut u64buf = [0u8; 8];
    r.read_exact(&mut u64buf)
        .map_err(|_| ParseError::Header("missing row count".into()))?;
    let row_count = u64::from_le_bytes(u64buf) as usize;

    if num_features == 0 || num_classes == 0 {
        return Err(ParseError::Header("zero feature or class count".into()).into());
    }
    let mut dataset = BinaryDataset::new(num_features, num_classes)?;
    let bytes_per_row = num_features.div_ceil(8);
    let mut row_buf = vec![0u8; bytes_per_row];
    for row in 0..row_count {
        r.read_exact(&mut u32buf)
            .map_err(|_| ParseError::Truncated(format!("row {row} label")))?;
        let label = u32::from_le_bytes(u32buf);
        if label >= num_classes {
            return Err(ParseError::LabelRange {
                row,
                label,
                n_classes: num_classes,
            }
            .into());
        }
        r.read_exact(&mut row_buf)
            .map_err(|_| ParseError::Truncated(format!("row {row} features")))?;
        let features =
            BitVec::from_bytes_lsb(&row_buf, num_features).ok_or(ParseError::RowWidth {
                row,
                expected: num_features,
                found: bytes_per_row * 8,
            })?;
        dataset.push_row(features, label)?;
    }
    let trailing = std::io::copy(&mut r, &mut std::io::sink())?;
    if trailing != 0 {
        return Err(ParseError::TrailingBytes(trailing as usize).into());
    }
    Ok(dataset)
}

/// Parses the line-oriented text form: `label` whitespace, then `o`
/// characters of '0'/'1'. The width comes from the first row and the
/// class count is the largest label plus one.
pub fn load_text(reader: impl Read) -> Result<BinaryDataset> {
    let mut text = String::new();
    BufReader::new(reader).read_to_string(&mut text)?;
    let mut parsed: Vec<(u32, BitVec)> = Vec::new();
    let mut width = 0usize;
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line_no + 1;
        let (label_str, bits_str) = line
            .split_once(char::is_whitespace)
            .ok_or_else(|| ParseError::Header(format!("row {row}: expected 'label bits'")))?;
        let label: u32 = label_str.parse().map_err(|_| ParseError::Symbol {
            row,
            symbol: label_str.chars().next().unwrap_or(' '),
        })?;
        let bits_str = bits_str.trim();
        if parsed.is_empty() {
            width = bits_str.len();
            if width == 0 {
                return Err(ParseError::Header(format!("row {row}: empty feature string")).into());
            }
        } else if bits_str.len() != width {
            return Err(ParseError::RowWidth {
                row,
                expected: width,
                found: bits_str.len(),
            }
            .into());
        }
        let mut bits = BitVec::zeros(width);
        for (k, ch) in bits_str.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => bits.set(k, true),
                other => return Err(ParseError::Symbol { row, symbol: other }.into()),
            }
        }
        parsed.push((label, bits));
    }
    if parsed.is_empty() {
        return Err(ParseError::Header("empty text dataset".into()).into());
    }
    let num_classes = parsed.iter().map(|(l, _)| *l).max().unwrap() + 1;
    let mut dataset = BinaryDataset::new(width, num_classes)?;
    for (label, bits) in parsed {
        dataset.push_row(bits, label)?;
    }
    Ok(dataset)
}

/// Input formats the generic loader understands.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum DatasetFormat {
    Wtmd,
    Text,
}

pub fn load_dataset(path: impl AsRef<Path>, format: DatasetFormat) -> Result<BinaryDataset> {
    let file = File::open(path.as_ref())?;
    match format {
        DatasetFormat::Wtmd => load_wtmd(file),
        DatasetFormat::Text => load_text(file),
    }
}

/// Saves in the WTMD container format.
pub fn save_dataset(dataset: &BinaryDataset, path: impl AsRef<Path>) -> Result<()> {
    save_wtmd(dataset, File::create(path.as_ref())?)
}

/// Loads an IDX image/label file pair from disk.
pub fn load_idx_files(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    threshold: u8,
) -> Result<BinaryDataset> {
    load_idx(
        File::open(images.as_ref())?,
        File::open(labels.as_ref())?,
        threshold,
    )
}

pub fn load_connect4_file(path: impl AsRef<Path>) -> Result<BinaryDataset> {
    load_connect4(File::open(path.as_ref())?)
}

/// Random disjoint split into (train, test). The test side receives
/// `round(len * test_fraction)` rows; the partition is a deterministic
/// function of the rng state.
pub fn split_dataset(
    dataset: &BinaryDataset,
    test_fraction: f64,
    rng: &mut RngState,
) -> Result<(BinaryDataset, BinaryDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    let n = dataset.len();
    let test_n = (n as f64 * test_fraction).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = bounded(rng, i as u64 + 1) as usize;
        order.swap(i, j);
    }
    let mut test = BinaryDataset::new(dataset.num_features, dataset.num_classes)?;
    let mut train = BinaryDataset::new(dataset.num_features, dataset.num_classes)?;
    for (pos, &i) in order.iter().enumerate() {
        let target = if pos < test_n { &mut test } else { &mut train };
        target.push_row(dataset.features(i).clone(), dataset.label(i))?;
    }
    Ok((train, test))
}
