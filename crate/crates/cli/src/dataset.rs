//! Tokenized dataset files.
//!
//! Layout, little-endian: magic `TMDS`, `u32` version, `u8` number-tree
//! flag, `u64` sequence count, then per sequence a `u32` length and per
//! token a `u32` id, a `u8` type tag and a `u8` path depth followed by that
//! many `u8` path entries. Depth `0xFF` marks a token without a tree
//! position; `0` is the root.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use treemath_core::encode::EncodedSequence;
use treemath_core::{TreePosition, TypeTag};

use crate::error::CliError;

const MAGIC: &[u8; 4] = b"TMDS";
const VERSION: u32 = 1;
const NO_POSITION: u8 = 0xFF;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    /// Whether numbers were expanded into digit sub-trees.
    pub number_trees: bool,
    pub sequences: Vec<EncodedSequence>,
}

impl Dataset {
    pub fn write_to(&self, out: &mut impl Write) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_u32::<LittleEndian>(VERSION)?;
        out.write_u8(u8::from(self.number_trees))?;
        out.write_u64::<LittleEndian>(self.sequences.len() as u64)?;
        for seq in &self.sequences {
            out.write_u32::<LittleEndian>(seq.len() as u32)?;
            for i in 0..seq.len() {
                out.write_u32::<LittleEndian>(seq.ids[i])?;
                out.write_u8(seq.tags[i].index() as u8)?;
                match &seq.positions[i] {
                    None => out.write_u8(NO_POSITION)?,
                    Some(p) => {
                        out.write_u8(p.depth() as u8)?;
                        out.write_all(p.entries())?;
                    }
                }
            }
        }
        Ok(())
    }

    pub fn read_from(input: &mut impl Read) -> Result<Dataset, CliError> {
        let bad = |what: &str| CliError::Data(format!("malformed dataset: {what}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(|_| bad("missing header"))?;
        if &magic != MAGIC {
            return Err(bad("wrong magic bytes"));
        }
        let version = input.read_u32::<LittleEndian>().map_err(|_| bad("missing version"))?;
        if version != VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let number_trees = input.read_u8().map_err(|_| bad("missing flags"))? != 0;
        let count = input.read_u64::<LittleEndian>().map_err(|_| bad("missing count"))?;
        let mut sequences = Vec::new();
        for s in 0..count {
            let truncated = |_| bad(&format!("sequence {s} is truncated"));
            let len = input.read_u32::<LittleEndian>().map_err(truncated)?;
            let mut seq = EncodedSequence::default();
            for _ in 0..len {
                let id = input.read_u32::<LittleEndian>().map_err(truncated)?;
                let tag = input.read_u8().map_err(truncated)?;
                let tag = TypeTag::from_index(tag as usize).ok_or_else(|| bad(&format!("type tag {tag}")))?;
                let depth = input.read_u8().map_err(truncated)?;
                let position = if depth == NO_POSITION {
                    None
                } else {
                    let mut entries = vec![0u8; depth as usize];
                    input.read_exact(&mut entries).map_err(truncated)?;
                    Some(TreePosition(entries))
                };
                seq.push(id, position, tag);
            }
            sequences.push(seq);
        }
        let mut rest = [0u8; 1];
        if input.read(&mut rest).map_err(|e| bad(&e.to_string()))? != 0 {
            return Err(bad("trailing bytes"));
        }
        Ok(Dataset {
            number_trees,
            sequences,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        let file = File::create(path).map_err(|e| CliError::User(format!("cannot create {}: {e}", path.display())))?;
        let mut out = BufWriter::new(file);
        self.write_to(&mut out)
            .and_then(|_| out.flush())
            .map_err(|e| CliError::User(format!("cannot write {}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Dataset, CliError> {
        let file = File::open(path).map_err(|e| CliError::User(format!("cannot open {}: {e}", path.display())))?;
        Dataset::read_from(&mut BufReader::new(file)).map_err(|e| match e {
            CliError::Data(m) => CliError::Data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use treemath_core::vocab::{MathVocab, TextVocab};
    use treemath_core::{encode, segment_regions, NormalizeOptions, Vocab};

    fn sample() -> Dataset {
        let vocab = Vocab::new(TextVocab::default(), MathVocab::default());
        let docs = ["Let $x=12.5+y$ be", "no math", "$\\frac{a}{b}$ end"];
        let sequences = docs
            .iter()
            .map(|d| {
                let mut e = encode(&segment_regions(d, &vocab, NormalizeOptions::default()).unwrap(), &vocab).unwrap();
                e.push_eos();
                e
            })
            .collect();
        Dataset {
            number_trees: true,
            sequences,
        }
    }

    #[test]
    fn round_trips() {
        let ds = sample();
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"TMDS");
        assert_eq!(Dataset::read_from(&mut buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn root_and_missing_positions_are_distinct() {
        let mut seq = EncodedSequence::default();
        seq.push(300, Some(TreePosition::root()), TypeTag::Operator);
        seq.push(7, None, TypeTag::Text);
        let ds = Dataset {
            number_trees: false,
            sequences: vec![seq],
        };
        let mut buf = Vec::new();
        ds.write_to(&mut buf).unwrap();
        assert_eq!(Dataset::read_from(&mut buf.as_slice()).unwrap(), ds);
    }

    #[test]
    fn rejects_truncation_and_garbage() {
        let mut buf = Vec::new();
        sample().write_to(&mut buf).unwrap();
        assert!(matches!(
            Dataset::read_from(&mut &buf[..buf.len() - 3]),
            Err(CliError::Data(_))
        ));
        buf.push(0);
        assert!(Dataset::read_from(&mut buf.as_slice()).is_err());
        assert!(Dataset::read_from(&mut &b"JUNKJUNK"[..]).is_err());
    }
}
