//! Math tokens and the type tags shared by the embedder and the decoder.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenKind {
    Operator,
    Variable,
    /// A whole number kept as one leaf: raw trees, or in-vocabulary numbers
    /// when number sub-trees are disabled.
    Number,
    /// A single digit character or the decimal point.
    Digit,
    End,
    StartFormula,
    EndFormula,
    NumHead,
    OovHead,
    /// A text token inside an out-of-vocabulary sub-tree.
    MathText,
}

impl TokenKind {
    /// Kinds that own a child list in a normalized tree.
    pub fn is_parent(self) -> bool {
        matches!(self, TokenKind::Operator | TokenKind::NumHead | TokenKind::OovHead)
    }

    pub fn is_control(self) -> bool {
        matches!(self, TokenKind::StartFormula | TokenKind::EndFormula)
    }

    /// Kinds whose symbol is fixed and never user supplied.
    pub fn is_special(self) -> bool {
        matches!(
            self,
            TokenKind::End
                | TokenKind::StartFormula
                | TokenKind::EndFormula
                | TokenKind::NumHead
                | TokenKind::OovHead
        )
    }

    pub fn type_tag(self) -> TypeTag {
        match self {
            TokenKind::Operator | TokenKind::NumHead | TokenKind::OovHead => TypeTag::Operator,
            TokenKind::Variable => TypeTag::Variable,
            TokenKind::Number | TokenKind::Digit => TypeTag::Number,
            TokenKind::End => TypeTag::End,
            TokenKind::StartFormula | TokenKind::EndFormula => TypeTag::Control,
            TokenKind::MathText => TypeTag::Text,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            TokenKind::Operator => "operator",
            TokenKind::Variable => "variable",
            TokenKind::Number => "number",
            TokenKind::Digit => "digit",
            TokenKind::End => "end",
            TokenKind::StartFormula => "formula_start",
            TokenKind::EndFormula => "formula_end",
            TokenKind::NumHead => "num_head",
            TokenKind::OovHead => "oov_head",
            TokenKind::MathText => "text",
        }
    }

    pub fn from_str_tag(s: &str) -> Option<TokenKind> {
        Some(match s {
            "operator" => TokenKind::Operator,
            "variable" => TokenKind::Variable,
            "number" => TokenKind::Number,
            "digit" => TokenKind::Digit,
            "end" => TokenKind::End,
            "formula_start" => TokenKind::StartFormula,
            "formula_end" => TokenKind::EndFormula,
            "num_head" => TokenKind::NumHead,
            "oov_head" => TokenKind::OovHead,
            "text" => TokenKind::MathText,
            _ => return None,
        })
    }
}

/// The six symbol types that get their own type embedding row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TypeTag {
    Text,
    Operator,
    Variable,
    Number,
    End,
    Control,
}

impl TypeTag {
    pub const COUNT: usize = 6;

    pub const ALL: [TypeTag; 6] = [
        TypeTag::Text,
        TypeTag::Operator,
        TypeTag::Variable,
        TypeTag::Number,
        TypeTag::End,
        TypeTag::Control,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<TypeTag> {
        TypeTag::ALL.get(i).copied()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MathToken {
    pub kind: TokenKind,
    pub symbol: String,
}

impl MathToken {
    pub fn new(kind: TokenKind, symbol: impl Into<String>) -> MathToken {
        MathToken {
            kind,
            symbol: symbol.into(),
        }
    }

    pub fn operator(symbol: impl Into<String>) -> MathToken {
        MathToken::new(TokenKind::Operator, symbol)
    }

    pub fn variable(symbol: impl Into<String>) -> MathToken {
        MathToken::new(TokenKind::Variable, symbol)
    }

    pub fn number(symbol: impl Into<String>) -> MathToken {
        MathToken::new(TokenKind::Number, symbol)
    }

    pub fn digit(c: char) -> MathToken {
        MathToken::new(TokenKind::Digit, c.to_string())
    }

    pub fn text(symbol: impl Into<String>) -> MathToken {
        MathToken::new(TokenKind::MathText, symbol)
    }

    pub fn special(kind: TokenKind) -> MathToken {
        debug_assert!(kind.is_special());
        MathToken::new(kind, "")
    }

    pub fn end() -> MathToken {
        MathToken::special(TokenKind::End)
    }

    pub fn type_tag(&self) -> TypeTag {
        self.kind.type_tag()
    }
}

impl fmt::Display for MathToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            TokenKind::End => f.write_str("E"),
            TokenKind::StartFormula => f.write_str("F^s"),
            TokenKind::EndFormula => f.write_str("F^e"),
            TokenKind::NumHead => f.write_str("O^N"),
            TokenKind::OovHead => f.write_str("O^U"),
            TokenKind::MathText => write!(f, "{:?}", self.symbol),
            _ => f.write_str(&self.symbol),
        }
    }
}

pub fn is_digit_symbol(s: &str) -> bool {
    matches!(s.as_bytes(), [b'0'..=b'9'] | [b'.'])
}
