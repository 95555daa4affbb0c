//! Printing operator trees back to the LaTeX subset accepted by
//! [`parse_math`](crate::parse::parse_math).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::parse::{FUNCTIONS, GREEK};
use crate::token::TokenKind;
use crate::tree::OptNode;
use crate::vocab::is_number_literal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FracStyle {
    #[default]
    Slash,
    Frac,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LatexOptions {
    pub frac: FracStyle,
}

// Binding levels, loosest first. They mirror the parser's grammar rules.
const REL: u8 = 1;
const ADD: u8 = 2;
const MUL: u8 = 3;
const IMPL: u8 = 4;
const UNARY: u8 = 5;
const POW: u8 = 6;
const ATOM: u8 = 7;

pub fn tree_to_latex(tree: &OptNode) -> Result<String> {
    tree_to_latex_with(tree, LatexOptions::default())
}

pub fn tree_to_latex_with(tree: &OptNode, opts: LatexOptions) -> Result<String> {
    Printer { opts }.at(tree, REL)
}

struct Printer {
    opts: LatexOptions,
}

fn unprintable(node: &OptNode, why: &str) -> Error {
    Error::UnprintableNode(format!("{}: {why}", node.token))
}

fn is_plain_identifier(s: &str) -> bool {
    let (base, sub) = match s.split_once('_') {
        Some((b, sub)) => (b, Some(sub)),
        None => (s, None),
    };
    let base_ok = (!base.is_empty() && base.bytes().all(|b| b.is_ascii_alphabetic()))
        || base.strip_prefix('\\').is_some_and(|g| GREEK.contains(&g));
    let sub_ok = match sub {
        None => true,
        Some(sub) => {
            (sub.len() == 1 && sub.bytes().all(|b| b.is_ascii_alphanumeric()))
                || sub
                    .strip_prefix('{')
                    .and_then(|r| r.strip_suffix('}'))
                    .is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_alphanumeric()))
        }
    };
    base_ok && sub_ok
}

fn identifier(node: &OptNode, name: &str) -> Result<String> {
    if is_plain_identifier(name) {
        Ok(name.to_owned())
    } else if !name.trim().is_empty()
        && name.trim() == name
        && !name.contains(['{', '}', '\\', '$'])
    {
        Ok(format!("\\operatorname{{{name}}}"))
    } else {
        Err(unprintable(node, "name cannot be written as an identifier"))
    }
}

fn relation_symbol(sym: &str) -> Option<u8> {
    match sym {
        "=" | "<" | ">" | "\\le" | "\\ge" | "\\neq" | "\\approx" => Some(REL),
        "+" | "-" | "\\pm" | "\\mp" => Some(ADD),
        _ => None,
    }
}

fn spaced(sym: &str) -> String {
    if sym.starts_with('\\') {
        format!("{sym} ")
    } else {
        sym.to_owned()
    }
}

fn is_unary_minus(node: &OptNode) -> bool {
    node.kind() == TokenKind::Operator && node.token.symbol == "-" && operands(node).is_ok_and(|a| a.len() == 1)
}

/// Children without the trailing End node.
fn operands(node: &OptNode) -> Result<&[OptNode]> {
    let children = node.children.as_slice();
    let args = match children.last() {
        Some(last) if last.kind() == TokenKind::End => &children[..children.len() - 1],
        _ => children,
    };
    if args.iter().any(|c| c.kind() == TokenKind::End) {
        return Err(unprintable(node, "End node before the last child"));
    }
    Ok(args)
}

impl Printer {
    fn at(&self, node: &OptNode, min: u8) -> Result<String> {
        let (s, level) = self.print(node)?;
        Ok(if level < min { format!("({s})") } else { s })
    }

    /// Right operand of an infix operator: a leading minus always gets parentheses.
    fn right(&self, node: &OptNode, min: u8) -> Result<String> {
        if is_unary_minus(node) {
            Ok(format!("({})", self.at(node, UNARY)?))
        } else {
            self.at(node, min)
        }
    }

    fn print(&self, node: &OptNode) -> Result<(String, u8)> {
        let sym = node.token.symbol.as_str();
        match node.kind() {
            TokenKind::Variable if node.is_leaf() => Ok((identifier(node, sym)?, ATOM)),
            TokenKind::Number if node.is_leaf() && is_number_literal(sym) => Ok((sym.to_owned(), ATOM)),
            TokenKind::Digit if node.is_leaf() && sym.len() == 1 && sym.as_bytes()[0].is_ascii_digit() => {
                Ok((sym.to_owned(), ATOM))
            }
            TokenKind::NumHead => {
                let args = operands(node)?;
                let digits: String = args
                    .iter()
                    .map(|c| match c.kind() {
                        TokenKind::Digit => Ok(c.token.symbol.as_str()),
                        _ => Err(unprintable(node, "non-digit child")),
                    })
                    .collect::<Result<_>>()?;
                if !is_number_literal(&digits) {
                    return Err(unprintable(node, "digits do not form a number"));
                }
                Ok((digits, ATOM))
            }
            TokenKind::OovHead => {
                let args = operands(node)?;
                let name: String = args
                    .iter()
                    .map(|c| match c.kind() {
                        TokenKind::MathText => Ok(c.token.symbol.as_str()),
                        _ => Err(unprintable(node, "non-text child")),
                    })
                    .collect::<Result<_>>()?;
                Ok((identifier(node, &name)?, ATOM))
            }
            TokenKind::Operator => self.operator(node),
            _ => Err(unprintable(node, "not printable here")),
        }
    }

    fn operator(&self, node: &OptNode) -> Result<(String, u8)> {
        let sym = node.token.symbol.as_str();
        let args = operands(node)?;
        if args.is_empty() {
            return Err(unprintable(node, "operator without operands"));
        }

        if sym == "-" && args.len() == 1 {
            return Ok((format!("-{}", self.at(&args[0], UNARY)?), UNARY));
        }
        if let Some(level) = relation_symbol(sym) {
            if args.len() < 2 {
                return Err(unprintable(node, "infix operator needs two operands"));
            }
            return self.chain(args, &spaced(sym), level);
        }
        match sym {
            "*" if args.len() >= 2 => self.product(args),
            "/" if args.len() == 2 && self.opts.frac == FracStyle::Frac => Ok((
                format!(
                    "\\frac{{{}}}{{{}}}",
                    self.at(&args[0], REL)?,
                    self.at(&args[1], REL)?
                ),
                ATOM,
            )),
            "/" if args.len() >= 2 => self.chain(args, "/", MUL),
            "^" if args.len() == 2 => {
                let base = self.at(&args[0], ATOM)?;
                let exp = self.at(&args[1], REL)?;
                let single = exp.len() == 1 && exp.as_bytes()[0].is_ascii_alphanumeric();
                let s = if single {
                    format!("{base}^{exp}")
                } else {
                    format!("{base}^{{{exp}}}")
                };
                Ok((s, POW))
            }
            "\\sqrt" if args.len() == 1 => Ok((format!("\\sqrt{{{}}}", self.at(&args[0], REL)?), ATOM)),
            f if args.len() == 1 && f.strip_prefix('\\').is_some_and(|n| FUNCTIONS.contains(&n)) => {
                Ok((format!("{f}({})", self.at(&args[0], REL)?), POW))
            }
            _ => Err(unprintable(node, &format!("unsupported operator with {} operands", args.len()))),
        }
    }

    /// Left-associative chain `a op b op c`.
    fn chain(&self, args: &[OptNode], op: &str, level: u8) -> Result<(String, u8)> {
        let mut s = self.at(&args[0], level)?;
        for a in &args[1..] {
            s.push_str(op);
            s.push_str(&self.right(a, level + 1)?);
        }
        Ok((s, level))
    }

    /// Products print as juxtaposition when the boundary is unambiguous,
    /// otherwise with `\cdot`.
    fn product(&self, args: &[OptNode]) -> Result<(String, u8)> {
        let (mut acc, mut level) = self.print(&args[0])?;
        for a in &args[1..] {
            let left = if level < IMPL { format!("({acc})") } else { acc.clone() };
            let r = self.at(a, POW)?;
            let lc = left.chars().last().expect("non-empty");
            let fc = r.chars().next().expect("non-empty");
            let juxtapose = (fc == '(' || fc == '\\' || fc.is_ascii_alphabetic())
                && !(lc.is_ascii_alphabetic() && fc.is_ascii_alphabetic());
            if juxtapose {
                acc = left + &r;
                level = IMPL;
            } else {
                let left = if level < MUL { format!("({acc})") } else { acc };
                acc = format!("{left}\\cdot {}", self.right(a, IMPL)?);
                level = MUL;
            }
        }
        Ok((acc, level))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalize::{normalize_tree, NormalizeOptions};
    use crate::parse::parse_math;
    use crate::token::MathToken;
    use crate::vocab::Vocab;

    fn round(s: &str) -> String {
        tree_to_latex(&parse_math(s).unwrap()).unwrap()
    }

    fn closes(s: &str) {
        let v = Vocab::default();
        let o = NormalizeOptions::default();
        let t = normalize_tree(&parse_math(s).unwrap(), &v, o).unwrap();
        for style in [FracStyle::Slash, FracStyle::Frac] {
            let printed = tree_to_latex_with(&t, LatexOptions { frac: style }).unwrap();
            let back = normalize_tree(&parse_math(&printed).unwrap(), &v, o).unwrap();
            assert_eq!(back, t, "{s} -> {printed}");
        }
    }

    #[test]
    fn simple_forms() {
        let t = normalize_tree(&parse_math("a+2").unwrap(), &Vocab::default(), NormalizeOptions::default()).unwrap();
        assert_eq!(tree_to_latex(&t).unwrap(), "a+2");
        assert_eq!(round("newvelocity = 9.8t"), "newvelocity=9.8t");
        assert_eq!(round("x=280/(1-(2/5)-(1/3))"), "x=280/(1-2/5-1/3)");
        assert_eq!(round("a - (b - c)"), "a-(b-c)");
        assert_eq!(round("a \\cdot b"), "a\\cdot b");
        assert_eq!(round("(a+b)(c+d)"), "(a+b)(c+d)");
        assert_eq!(round("-(2x)"), "-(2x)");
        assert_eq!(round("a+(-b)"), "a+(-b)");
        assert_eq!(round("(x^2)^3"), "(x^2)^3");
        assert_eq!(round("(\\sin x)^2"), "(\\sin(x))^2");
    }

    #[test]
    fn frac_flag() {
        let t = normalize_tree(&parse_math("280/(1-x)").unwrap(), &Vocab::default(), NormalizeOptions::default()).unwrap();
        assert_eq!(tree_to_latex(&t).unwrap(), "280/(1-x)");
        assert_eq!(
            tree_to_latex_with(&t, LatexOptions { frac: FracStyle::Frac }).unwrap(),
            "\\frac{280}{1-x}"
        );
    }

    #[test]
    fn print_parse_closure_examples() {
        for s in [
            "x=280/(1-(2/5)-(1/3))",
            "newvelocity = 9.8t",
            "y = 2x^{2} - 3x + 1",
            "\\frac{a}{b c} \\le \\sqrt{x_1}",
            "2(3 + 4)(5)",
            "a/(b/c)",
            "a\\cdot (b\\cdot c)",
            "x^{y^{z}}",
            "-(-x)",
            "\\sin(x+1) \\cos y",
            "3.25 \\cdot 4 + 12 / 7",
            "\\operatorname{total cost} = 3",
        ] {
            closes(s);
        }
    }

    #[test]
    fn oov_prints_as_name() {
        let t = OptNode::new(
            MathToken::special(TokenKind::OovHead),
            vec![OptNode::leaf(MathToken::text("new")), OptNode::leaf(MathToken::text("velocity")), OptNode::end()],
        );
        assert_eq!(tree_to_latex(&t).unwrap(), "newvelocity");
    }

    #[test]
    fn malformed_trees_are_unprintable() {
        let t = OptNode::op("+", vec![OptNode::end()]);
        assert!(matches!(tree_to_latex(&t), Err(Error::UnprintableNode(_))));
        let t = OptNode::new(
            MathToken::special(TokenKind::NumHead),
            vec![OptNode::leaf(MathToken::digit('.')), OptNode::end()],
        );
        assert!(tree_to_latex(&t).is_err());
        assert!(tree_to_latex(&OptNode::end()).is_err());
        assert!(tree_to_latex(&OptNode::op("^", vec![OptNode::var("x")])).is_err());
    }
}
