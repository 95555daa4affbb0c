//! Recursive-descent parser for the supported LaTeX subset.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! relation := additive (('=' | '<' | '>' | \le | \ge | \neq | \approx) additive)*
//! additive := term (('+' | '-' | \pm | \mp) term)*
//! term     := implicit (('*' | \times | \cdot | '/' | \div) implicit)*
//! implicit := unary power*              juxtaposition, tighter than '/'
//! unary    := '-' unary | '+' unary | power
//! power    := primary ('^' exponent)?
//! primary  := number | identifier | '(' relation ')' | '{' relation '}'
//!           | \frac{..}{..} | \sqrt{..} | \sin power | greek | \operatorname{..}
//! ```
//!
//! A run of letters is one identifier, so `xy` is a single variable. All
//! binary operators are left associative; `^` takes a braced group or a
//! single character, as in LaTeX.

use crate::error::{Error, Result};
use crate::token::MathToken;
use crate::tree::OptNode;

pub const FUNCTIONS: &[&str] = &[
    "sin", "cos", "tan", "cot", "sec", "csc", "arcsin", "arccos", "arctan", "sinh", "cosh", "tanh",
    "log", "ln", "exp",
];

pub const GREEK: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "epsilon", "varepsilon", "zeta", "eta", "theta", "vartheta",
    "iota", "kappa", "lambda", "mu", "nu", "xi", "pi", "rho", "sigma", "tau", "upsilon", "phi",
    "varphi", "chi", "psi", "omega", "Gamma", "Delta", "Theta", "Lambda", "Xi", "Pi", "Sigma",
    "Phi", "Psi", "Omega",
];

const SPACING: &[&str] = &[",", ";", ":", "!", " ", "quad", "qquad"];
const NAMED_IDENT: &[&str] = &["operatorname", "mathrm", "text", "mathit"];

/// Parses `expr` into a raw operator tree.
pub fn parse_math(expr: &str) -> Result<OptNode> {
    let mut p = Parser { src: expr, pos: 0 };
    p.skip_ws();
    if p.at_end() {
        return Err(p.error("empty expression"));
    }
    let tree = p.relation()?;
    p.skip_ws();
    if let Some(c) = p.peek() {
        let msg = match c {
            ')' | ']' | '}' => format!("unbalanced {c:?}"),
            _ => format!("unexpected {c:?}"),
        };
        return Err(p.error(msg));
    }
    Ok(tree)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.into(),
        }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn peek(&self) -> Option<char> {
        self.rest().chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    /// The command name at the cursor (without the backslash) and its byte length.
    fn peek_command(&self) -> Option<(&'a str, usize)> {
        let rest = self.rest();
        let body = rest.strip_prefix('\\')?;
        let letters = body.bytes().take_while(u8::is_ascii_alphabetic).count();
        if letters > 0 {
            Some((&body[..letters], letters + 1))
        } else {
            let c = body.chars().next()?;
            Some((&body[..c.len_utf8()], c.len_utf8() + 1))
        }
    }

    fn skip_ws(&mut self) {
        loop {
            match self.peek() {
                Some(c) if c.is_whitespace() => {
                    self.bump();
                }
                Some('\\') => match self.peek_command() {
                    Some((name, len)) if SPACING.contains(&name) => self.pos += len,
                    _ => return,
                },
                _ => return,
            }
        }
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c == want => {
                self.bump();
                Ok(())
            }
            Some(c) => Err(self.error(format!("expected {want:?}, found {c:?}"))),
            None => Err(self.error(format!("unbalanced: expected {want:?} before end of input"))),
        }
    }

    fn relation(&mut self) -> Result<OptNode> {
        let mut left = self.additive()?;
        loop {
            self.skip_ws();
            let Some((sym, len)) = self.peek_binary(&[
                ("=", "="),
                ("<", "<"),
                (">", ">"),
                ("≤", "\\le"),
                ("≥", "\\ge"),
                ("≠", "\\neq"),
                ("≈", "\\approx"),
                ("\\leq", "\\le"),
                ("\\le", "\\le"),
                ("\\geq", "\\ge"),
                ("\\ge", "\\ge"),
                ("\\neq", "\\neq"),
                ("\\ne", "\\neq"),
                ("\\approx", "\\approx"),
                ("\\lt", "<"),
                ("\\gt", ">"),
            ]) else {
                break;
            };
            self.pos += len;
            let right = self.additive()?;
            left = OptNode::op(sym, vec![left, right]);
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<OptNode> {
        let mut left = self.term()?;
        loop {
            self.skip_ws();
            let Some((sym, len)) = self.peek_binary(&[
                ("+", "+"),
                ("-", "-"),
                ("−", "-"),
                ("\\pm", "\\pm"),
                ("\\mp", "\\mp"),
            ]) else {
                break;
            };
            self.pos += len;
            let right = self.term()?;
            left = OptNode::op(sym, vec![left, right]);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<OptNode> {
        let mut left = self.implicit()?;
        loop {
            self.skip_ws();
            let Some((sym, len)) = self.peek_binary(&[
                ("*", "*"),
                ("×", "*"),
                ("·", "*"),
                ("\\times", "*"),
                ("\\cdot", "*"),
                ("/", "/"),
                ("÷", "/"),
                ("\\div", "/"),
            ]) else {
                break;
            };
            self.pos += len;
            let right = self.implicit()?;
            left = OptNode::op(sym, vec![left, right]);
        }
        Ok(left)
    }

    /// Matches one of `table`'s spellings at the cursor; commands must match
    /// the whole command name.
    fn peek_binary(&self, table: &[(&str, &'static str)]) -> Option<(&'static str, usize)> {
        let rest = self.rest();
        if rest.starts_with('\\') {
            let (name, len) = self.peek_command()?;
            return table
                .iter()
                .find(|(spelling, _)| spelling.strip_prefix('\\') == Some(name))
                .map(|&(_, sym)| (sym, len));
        }
        table
            .iter()
            .find(|(spelling, _)| !spelling.starts_with('\\') && rest.starts_with(spelling))
            .map(|&(spelling, sym)| (sym, spelling.len()))
    }

    fn implicit(&mut self) -> Result<OptNode> {
        let mut left = self.unary()?;
        loop {
            self.skip_ws();
            if !self.starts_factor() {
                break;
            }
            let right = self.power()?;
            left = OptNode::op("*", vec![left, right]);
        }
        Ok(left)
    }

    fn starts_factor(&self) -> bool {
        match self.peek() {
            Some(c) if c.is_ascii_alphanumeric() => true,
            Some('(' | '[' | '{') => true,
            Some('\\') => match self.peek_command() {
                Some((name, _)) => is_primary_command(name),
                None => false,
            },
            _ => false,
        }
    }

    fn unary(&mut self) -> Result<OptNode> {
        self.skip_ws();
        match self.peek() {
            Some('-' | '−') => {
                self.bump();
                let operand = self.unary()?;
                Ok(OptNode::op("-", vec![operand]))
            }
            Some('+') => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<OptNode> {
        let base = self.primary()?;
        self.skip_ws();
        if self.peek() != Some('^') {
            return Ok(base);
        }
        self.bump();
        let exponent = self.exponent()?;
        self.skip_ws();
        if self.peek() == Some('^') {
            return Err(self.error("double superscript"));
        }
        Ok(OptNode::op("^", vec![base, exponent]))
    }

    fn exponent(&mut self) -> Result<OptNode> {
        self.skip_ws();
        match self.peek() {
            Some('{') => self.group('{', '}'),
            Some(c) if c.is_ascii_digit() => {
                self.bump();
                Ok(OptNode::num(&c.to_string()))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                self.bump();
                Ok(OptNode::var(&c.to_string()))
            }
            Some('\\') => self.primary(),
            Some(c) => Err(self.error(format!("invalid exponent starting with {c:?}"))),
            None => Err(self.error("missing exponent")),
        }
    }

    fn group(&mut self, open: char, close: char) -> Result<OptNode> {
        self.expect(open)?;
        let inner = self.relation()?;
        self.expect(close)?;
        Ok(inner)
    }

    fn primary(&mut self) -> Result<OptNode> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let len = self.rest().bytes().take_while(u8::is_ascii_alphabetic).count();
                let name = self.rest()[..len].to_owned();
                self.pos += len;
                self.subscripted(name)
            }
            Some('(') => self.group('(', ')'),
            Some('[') => self.group('[', ']'),
            Some('{') => self.group('{', '}'),
            Some('\\') => {
                let (name, len) = self.peek_command().expect("backslash present");
                match name {
                    "frac" | "dfrac" | "tfrac" => {
                        self.pos += len;
                        let num = self.group('{', '}')?;
                        let den = self.group('{', '}')?;
                        Ok(OptNode::op("/", vec![num, den]))
                    }
                    "sqrt" => {
                        self.pos += len;
                        let arg = self.group('{', '}')?;
                        Ok(OptNode::op("\\sqrt", vec![arg]))
                    }
                    "left" => {
                        self.pos += len;
                        let close = match self.bump() {
                            Some('(') => ')',
                            Some('[') => ']',
                            _ => {
                                self.pos = start;
                                return Err(self.error("\\left must be followed by '(' or '['"));
                            }
                        };
                        let inner = self.relation()?;
                        self.skip_ws();
                        match self.peek_command() {
                            Some(("right", l)) => self.pos += l,
                            _ => return Err(self.error("unbalanced \\left without \\right")),
                        }
                        self.expect(close)?;
                        Ok(inner)
                    }
                    n if FUNCTIONS.contains(&n) => {
                        let symbol = format!("\\{n}");
                        self.pos += len;
                        let arg = self.power()?;
                        Ok(OptNode::op(&symbol, vec![arg]))
                    }
                    n if GREEK.contains(&n) => {
                        let symbol = format!("\\{n}");
                        self.pos += len;
                        self.subscripted(symbol)
                    }
                    n if NAMED_IDENT.contains(&n) => {
                        self.pos += len;
                        self.expect('{')?;
                        let body_len = self.rest().find('}').ok_or_else(|| self.error("unbalanced '{'"))?;
                        let name = self.rest()[..body_len].trim().to_owned();
                        if name.is_empty() || name.contains('{') || name.contains('\\') {
                            return Err(self.error("invalid name"));
                        }
                        self.pos += body_len + 1;
                        Ok(OptNode::var(&name))
                    }
                    other => Err(self.error(format!("unknown command \\{other}"))),
                }
            }
            Some(c) => Err(self.error(format!("unexpected {c:?}"))),
        }
    }

    fn number(&mut self) -> Result<OptNode> {
        let rest = self.rest().as_bytes();
        let mut len = rest.iter().take_while(|b| b.is_ascii_digit()).count();
        if rest.get(len) == Some(&b'.') && rest.get(len + 1).is_some_and(u8::is_ascii_digit) {
            len += 1 + rest[len + 1..].iter().take_while(|b| b.is_ascii_digit()).count();
        }
        let text = self.rest()[..len].to_owned();
        self.pos += len;
        Ok(OptNode::leaf(MathToken::number(text)))
    }

    fn subscripted(&mut self, mut name: String) -> Result<OptNode> {
        if self.peek() != Some('_') {
            return Ok(OptNode::var(&name));
        }
        self.bump();
        match self.peek() {
            Some(c) if c.is_ascii_alphanumeric() => {
                self.bump();
                name.push('_');
                name.push(c);
            }
            Some('{') => {
                self.bump();
                let len = self.rest().bytes().take_while(u8::is_ascii_alphanumeric).count();
                if len == 0 {
                    return Err(self.error("empty or invalid subscript"));
                }
                name.push_str("_{");
                name.push_str(&self.rest()[..len]);
                name.push('}');
                self.pos += len;
                if self.bump() != Some('}') {
                    return Err(self.error("unbalanced subscript brace"));
                }
            }
            _ => return Err(self.error("invalid subscript")),
        }
        Ok(OptNode::var(&name))
    }
}

pub(crate) fn is_primary_command(name: &str) -> bool {
    matches!(name, "frac" | "dfrac" | "tfrac" | "sqrt" | "left")
        || FUNCTIONS.contains(&name)
        || GREEK.contains(&name)
        || NAMED_IDENT.contains(&name)
}
