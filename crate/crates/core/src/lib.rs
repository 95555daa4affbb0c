//! Operator trees for mathematical expressions, the math/text vocabulary,
//! the constrained generation automaton, tree metrics, and a synthetic
//! word-problem corpus.

pub mod corpus;
pub mod decoder;
pub mod encode;
pub mod error;
pub mod eval;
pub mod latex;
pub mod normalize;
pub mod parse;
pub mod sample;
pub mod segment;
pub mod token;
pub mod tree;
pub mod vocab;

pub use decoder::{infer_next_position, DecoderState, Mode, TokenMask};
pub use encode::{decode, encode, render_document, EncodedSequence};
pub use error::{Error, Result};
pub use latex::{tree_to_latex, tree_to_latex_with, FracStyle, LatexOptions};
pub use normalize::{normalize_tree, NormalizeOptions};
pub use parse::parse_math;
pub use segment::{segment_regions, MixedSequence, Region, SeqItem, SeqToken};
pub use token::{MathToken, TokenKind, TypeTag};
pub use tree::{compute_positions, delinearize, linearize, MathItem, OptNode, TreePosition, MAX_DEPTH, MAX_WIDTH};
pub use vocab::{IdKind, MathVocab, SymbolClass, TextVocab, Vocab, EOS_ID};
