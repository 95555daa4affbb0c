//! Exact rational evaluation of operator trees.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::token::TokenKind;
use crate::tree::OptNode;

/// Largest exponent magnitude the evaluator will expand.
const MAX_EXPONENT: u32 = 1024;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("unbound variable {0:?}")]
    UnboundVariable(String),
    #[error("unsupported operator {0:?}")]
    UnsupportedOperator(String),
    #[error("malformed expression: {0}")]
    Malformed(String),
}

pub type Bindings = HashMap<String, BigRational>;

/// Parses a decimal literal such as `280` or `9.8` exactly.
pub fn parse_decimal(s: &str) -> Option<BigRational> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if int.is_empty() && frac.is_empty() {
        return None;
    }
    if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int}{frac}");
    let numer: BigInt = if digits.is_empty() { BigInt::zero() } else { digits.parse().ok()? };
    let denom = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(numer, denom))
}

/// Evaluates `tree` with the given variable values. An equation `lhs = rhs`
/// evaluates its right-hand side. Works on raw and normalized trees.
pub fn evaluate_expression(tree: &OptNode, bindings: &Bindings) -> Result<BigRational, EvalError> {
    if tree.kind() == TokenKind::Operator && tree.token.symbol == "=" {
        let operands = operands(tree);
        return match operands.as_slice() {
            [_, rhs] => eval(rhs, bindings),
            _ => Err(EvalError::Malformed("equation needs two sides".into())),
        };
    }
    eval(tree, bindings)
}

fn operands(node: &OptNode) -> Vec<&OptNode> {
    node.children.iter().filter(|c| c.kind() != TokenKind::End).collect()
}

fn eval(node: &OptNode, bindings: &Bindings) -> Result<BigRational, EvalError> {
    match node.kind() {
        TokenKind::Number | TokenKind::Digit => parse_decimal(&node.token.symbol)
            .ok_or_else(|| EvalError::Malformed(format!("bad number {:?}", node.token.symbol))),
        TokenKind::NumHead => {
            let literal: String = operands(node).iter().map(|c| c.token.symbol.as_str()).collect();
            parse_decimal(&literal).ok_or_else(|| EvalError::Malformed(format!("bad number {literal:?}")))
        }
        TokenKind::Variable => lookup(&node.token.symbol, bindings),
        TokenKind::OovHead => {
            let name: String = operands(node).iter().map(|c| c.token.symbol.as_str()).collect();
            lookup(&name, bindings)
        }
        TokenKind::Operator => apply(node, bindings),
        other => Err(EvalError::Malformed(format!("unexpected {} node", other.as_str()))),
    }
}

fn lookup(name: &str, bindings: &Bindings) -> Result<BigRational, EvalError> {
    bindings
        .get(name)
        .cloned()
        .ok_or_else(|| EvalError::UnboundVariable(name.to_owned()))
}

fn apply(node: &OptNode, bindings: &Bindings) -> Result<BigRational, EvalError> {
    let symbol = node.token.symbol.as_str();
    let args = operands(node)
        .into_iter()
        .map(|c| eval(c, bindings))
        .collect::<Result<Vec<_>, _>>()?;
    let mut it = args.into_iter();
    let first = it
        .next()
        .ok_or_else(|| EvalError::Malformed(format!("operator {symbol:?} without operands")))?;
    let rest: Vec<BigRational> = it.collect();
    match symbol {
        "+" => Ok(rest.into_iter().fold(first, |a, b| a + b)),
        "-" if rest.is_empty() => Ok(-first),
        "-" => Ok(rest.into_iter().fold(first, |a, b| a - b)),
        "*" => Ok(rest.into_iter().fold(first, |a, b| a * b)),
        "/" => rest.into_iter().try_fold(first, |a, b| {
            if b.is_zero() {
                Err(EvalError::DivisionByZero)
            } else {
                Ok(a / b)
            }
        }),
        "^" => match rest.as_slice() {
            [e] => power(first, e),
            _ => Err(EvalError::Malformed("power needs two operands".into())),
        },
        other => Err(EvalError::UnsupportedOperator(other.to_owned())),
    }
}

fn power(base: BigRational, exponent: &BigRational) -> Result<BigRational, EvalError> {
    if !exponent.is_integer() {
        return Err(EvalError::UnsupportedOperator("^ with a non-integer exponent".into()));
    }
    let e = exponent
        .to_integer()
        .abs()
        .to_u32()
        .filter(|&e| e <= MAX_EXPONENT)
        .ok_or_else(|| EvalError::UnsupportedOperator("^ with a huge exponent".into()))?;
    let raised = num_traits::pow(base, e as usize);
    if exponent.is_negative() {
        if raised.is_zero() {
            return Err(EvalError::DivisionByZero);
        }
        Ok(BigRational::one() / raised)
    } else {
        Ok(raised)
    }
}

/// Values of every variable in `tree`, each set to a distinct fixed prime.
/// Used to compare expressions that still contain free variables.
pub fn probe_bindings<'a>(trees: impl IntoIterator<Item = &'a OptNode>) -> Bindings {
    const PRIMES: [i64; 12] = [7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47];
    let mut names: Vec<String> = Vec::new();
    for tree in trees {
        collect_names(tree, &mut names);
    }
    names.sort();
    names.dedup();
    names
        .into_iter()
        .enumerate()
        .map(|(i, name)| {
            let p = PRIMES[i % PRIMES.len()] + 53 * (i / PRIMES.len()) as i64;
            (name, BigRational::new(BigInt::from(p), BigInt::from(3)))
        })
        .collect()
}

fn collect_names(node: &OptNode, out: &mut Vec<String>) {
    match node.kind() {
        TokenKind::Variable => out.push(node.token.symbol.clone()),
        TokenKind::OovHead => out.push(operands(node).iter().map(|c| c.token.symbol.as_str()).collect()),
        _ => node.children.iter().for_each(|c| collect_names(c, out)),
    }
}

/// True when both equations evaluate, under shared probe bindings for
/// their free variables, to the same value. The equation's own unknown
/// (left-hand side) is not evaluated.
pub fn solve_equal(pred: &OptNode, gold: &OptNode) -> bool {
    if pred == gold {
        return true;
    }
    let bindings = probe_bindings([pred, gold]);
    match (evaluate_expression(pred, &bindings), evaluate_expression(gold, &bindings)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse_math;

    fn value(expr: &str) -> Result<BigRational, EvalError> {
        evaluate_expression(&parse_math(expr).unwrap(), &Bindings::new())
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic() {
        assert_eq!(value("1+2").unwrap(), r(3, 1));
        assert_eq!(value("x=280/(1-(2/5)-(1/3))").unwrap(), r(1050, 1));
        assert_eq!(value("9.8*2").unwrap(), r(98, 5));
        assert_eq!(value("-3^2").unwrap(), r(-9, 1));
        assert_eq!(value("2^{-2}").unwrap(), r(1, 4));
        assert_eq!(value("\\frac{3}{4}").unwrap(), r(3, 4));
    }

    #[test]
    fn errors() {
        assert_eq!(value("1/(2-2)"), Err(EvalError::DivisionByZero));
        assert_eq!(value("y+1"), Err(EvalError::UnboundVariable("y".into())));
        assert!(matches!(value("\\sin(1)"), Err(EvalError::UnsupportedOperator(_))));
        assert!(matches!(value("2^{1/2}"), Err(EvalError::UnsupportedOperator(_))));
    }

    #[test]
    fn commutativity_is_solve_equal_not_tree_equal() {
        let a = parse_math("x=1+2").unwrap();
        let b = parse_math("x=2+1").unwrap();
        assert_ne!(a, b);
        assert!(solve_equal(&a, &b));
        assert!(!solve_equal(&a, &parse_math("x=4").unwrap()));
    }

    #[test]
    fn normalized_trees_evaluate() {
        use crate::normalize::{normalize_tree, NormalizeOptions};
        use crate::vocab::Vocab;
        let raw = parse_math("x=280/(1-(2/5)-(1/3))").unwrap();
        let norm = normalize_tree(&raw, &Vocab::default(), NormalizeOptions::default()).unwrap();
        assert_eq!(evaluate_expression(&norm, &Bindings::new()).unwrap(), r(1050, 1));
    }

    #[test]
    fn free_variables_use_probe_values() {
        let a = parse_math("y=2a+a").unwrap();
        let b = parse_math("y=3a").unwrap();
        assert!(solve_equal(&a, &b));
    }
}
