//! Expression trees recording how a column was derived, with a canonical
//! text form: `name`, `op(child)`, `op(a,b)`, `bin8(child)`.

use std::fmt;
use std::str::FromStr;

use super::OperatorId;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum FeatureExpression {
    Original(String),
    Apply {
        op: OperatorId,
        children: Vec<FeatureExpression>,
    },
    /// Supervised tree discretization with at most `max_leaves` categories.
    Bin {
        max_leaves: usize,
        child: Box<FeatureExpression>,
    },
}

impl FeatureExpression {
    pub fn original(name: &str) -> Self {
        FeatureExpression::Original(name.to_string())
    }

    pub fn unary(op: OperatorId, child: FeatureExpression) -> Self {
        FeatureExpression::Apply {
            op,
            children: vec![child],
        }
    }

    pub fn binary(op: OperatorId, a: FeatureExpression, b: FeatureExpression) -> Self {
        FeatureExpression::Apply {
            op,
            children: vec![a, b],
        }
    }

    pub fn bin(max_leaves: usize, child: FeatureExpression) -> Self {
        FeatureExpression::Bin {
            max_leaves,
            child: Box::new(child),
        }
    }

    pub fn order(&self) -> usize {
        expression_order(self)
    }

    pub fn is_original(&self) -> bool {
        matches!(self, FeatureExpression::Original(_))
    }
}

/// Number of operator layers above the original columns. Binning counts as a
/// layer, like any other node.
pub fn expression_order(e: &FeatureExpression) -> usize {
    match e {
        FeatureExpression::Original(_) => 0,
        FeatureExpression::Apply { children, .. } => {
            1 + children.iter().map(expression_order).max().unwrap_or(0)
        }
        FeatureExpression::Bin { child, .. } => 1 + expression_order(child),
    }
}

fn needs_quotes(name: &str) -> bool {
    name.is_empty()
        || name
            .chars()
            .any(|c| matches!(c, '(' | ')' | ',' | '"') || c.is_whitespace())
}

impl fmt::Display for FeatureExpression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureExpression::Original(name) if needs_quotes(name) => {
                write!(f, "\"{}\"", name.replace('"', "\"\""))
            }
            FeatureExpression::Original(name) => f.write_str(name),
            FeatureExpression::Apply { op, children } => {
                write!(f, "{}(", op.name())?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            FeatureExpression::Bin { max_leaves, child } => write!(f, "bin{max_leaves}({child})"),
        }
    }
}

impl FromStr for FeatureExpression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { src: s, pos: 0 };
        let e = p.expr()?;
        if p.pos != s.len() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, message: &str) -> Error {
        Error::Expression {
            pos: self.pos,
            message: message.to_string(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(self.err(&format!("expected {c:?}")))
        }
    }

    fn expr(&mut self) -> Result<FeatureExpression> {
        if self.peek() == Some('"') {
            return self.quoted().map(FeatureExpression::Original);
        }
        let start = self.pos;
        while let Some(c) = self.peek() {
            if matches!(c, '(' | ')' | ',' | '"') {
                break;
            }
            self.pos += c.len_utf8();
        }
        let ident = &self.src[start..self.pos];
        if self.peek() != Some('(') {
            if ident.is_empty() {
                return Err(self.err("expected a column name or operator"));
            }
            return Ok(FeatureExpression::Original(ident.to_string()));
        }
        self.eat('(')?;
        let mut children = vec![self.expr()?];
        while self.peek() == Some(',') {
            self.eat(',')?;
            children.push(self.expr()?);
        }
        self.eat(')')?;

        if let Some(leaves) = ident.strip_prefix("bin") {
            let max_leaves: usize = leaves.parse().map_err(|_| Error::Expression {
                pos: start,
                message: format!("bad bin size in {ident:?}"),
            })?;
            if children.len() != 1 {
                return Err(Error::Expression {
                    pos: start,
                    message: "bin takes one argument".into(),
                });
            }
            return Ok(FeatureExpression::bin(max_leaves, children.pop().unwrap()));
        }
        let op = OperatorId::from_name(ident).ok_or_else(|| Error::Expression {
            pos: start,
            message: format!("unknown operator {ident:?}"),
        })?;
        if children.len() != op.arity() {
            return Err(Error::Expression {
                pos: start,
                message: format!("{ident} takes {} argument(s)", op.arity()),
            });
        }
        Ok(FeatureExpression::Apply { op, children })
    }

    fn quoted(&mut self) -> Result<String> {
        self.eat('"')?;
        let mut out = String::new();
        loop {
            match self.peek() {
                None => return Err(self.err("unterminated quoted name")),
                Some('"') => {
                    self.pos += 1;
                    if self.peek() == Some('"') {
                        self.pos += 1;
                        out.push('"');
                    } else {
                        return Ok(out);
                    }
                }
                Some(c) => {
                    self.pos += c.len_utf8();
                    out.push(c);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use OperatorId::*;

    fn o(n: &str) -> FeatureExpression {
        FeatureExpression::original(n)
    }

    #[test]
    fn order_examples() {
        assert_eq!(o("x").order(), 0);
        assert_eq!(FeatureExpression::unary(Log, o("x")).order(), 1);
        let bmi = FeatureExpression::binary(
            Div,
            o("weight"),
            FeatureExpression::unary(Square, o("height")),
        );
        assert_eq!(bmi.order(), 2);
    }

    #[test]
    fn canonical_strings() {
        let bmi = FeatureExpression::binary(
            Div,
            o("weight"),
            FeatureExpression::unary(Square, o("height")),
        );
        assert_eq!(bmi.to_string(), "div(weight,square(height))");
        let c = FeatureExpression::binary(Cross, o("gender"), FeatureExpression::bin(8, o("age")));
        assert_eq!(c.to_string(), "cross(gender,bin8(age))");
        assert_eq!(bmi, "div(weight,square(height))".parse().unwrap());
        assert_eq!(c, c.to_string().parse().unwrap());
    }

    #[test]
    fn odd_names_are_quoted() {
        let e = FeatureExpression::unary(Abs, o("a,b (\"c\")"));
        let s = e.to_string();
        assert_eq!(s, "abs(\"a,b (\"\"c\"\")\")");
        assert_eq!(s.parse::<FeatureExpression>().unwrap(), e);
        // a bare operator name without parentheses is a column
        assert_eq!("log".parse::<FeatureExpression>().unwrap(), o("log"));
    }

    #[test]
    fn parse_errors() {
        for bad in [
            "", "abs(x", "abs(x,y)", "div(x)", "frob(x)", "bin(x)", "x)", "\"x",
        ] {
            assert!(bad.parse::<FeatureExpression>().is_err(), "{bad:?}");
        }
    }
}
