//! A small arithmetic grammar for Hamiltonians: numbers, the variables
//! x, y, z, `+ - * / ^`, unary minus, and sin, cos, exp.
//! Derivatives are taken symbolically.

use std::fmt;

use super::FlowError;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    /// Power with a constant exponent.
    Pow(Box<Expr>, f64),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

use Expr::*;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, FlowError> {
        let tokens = tokenize(src)?;
        let mut parser = Parser { tokens, pos: 0 };
        let e = parser.sum()?;
        if parser.pos != parser.tokens.len() {
            return Err(FlowError::Expression(format!("unexpected trailing input in {src:?}")));
        }
        Ok(e)
    }

    pub fn eval(&self, v: [f64; 3]) -> f64 {
        match self {
            Num(c) => *c,
            Var(i) => v[*i],
            Neg(a) => -a.eval(v),
            Add(a, b) => a.eval(v) + b.eval(v),
            Sub(a, b) => a.eval(v) - b.eval(v),
            Mul(a, b) => a.eval(v) * b.eval(v),
            Div(a, b) => a.eval(v) / b.eval(v),
            Pow(a, p) => a.eval(v).powf(*p),
            Sin(a) => a.eval(v).sin(),
            Cos(a) => a.eval(v).cos(),
            Exp(a) => a.eval(v).exp(),
        }
    }

    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Num(_) => Num(0.0),
            Var(i) => Num(if *i == var { 1.0 } else { 0.0 }),
            Neg(a) => neg(a.diff(var)),
            Add(a, b) => add(a.diff(var), b.diff(var)),
            Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Mul(a, b) => add(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
            Div(a, b) => div(
                sub(mul(a.diff(var), (**b).clone()), mul((**a).clone(), b.diff(var))),
                Pow(b.clone(), 2.0),
            ),
            Pow(a, p) => mul(mul(Num(*p), pow((**a).clone(), p - 1.0)), a.diff(var)),
            Sin(a) => mul(Cos(a.clone()), a.diff(var)),
            Cos(a) => mul(neg(Sin(a.clone())), a.diff(var)),
            Exp(a) => mul(Exp(a.clone()), a.diff(var)),
        }
    }

    pub fn uses_var(&self, var: usize) -> bool {
        match self {
            Num(_) => false,
            Var(i) => *i == var,
            Neg(a) | Pow(a, _) | Sin(a) | Cos(a) | Exp(a) => a.uses_var(var),
            Add(a, b) | Sub(a, b) | Mul(a, b) | Div(a, b) => a.uses_var(var) || b.uses_var(var),
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Num(c) if *c == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Num(c) if *c == 1.0)
}

fn neg(a: Expr) -> Expr {
    match a {
        Num(c) => Num(-c),
        a => Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x + y),
        (a, b) if is_zero(&a) => b,
        (a, b) if is_zero(&b) => a,
        (a, b) => Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x - y),
        (a, b) if is_zero(&b) => a,
        (a, b) if is_zero(&a) => neg(b),
        (a, b) => Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a, b) {
        (Num(x), Num(y)) => Num(x * y),
        (a, b) if is_zero(&a) || is_zero(&b) => Num(0.0),
        (a, b) if is_one(&a) => b,
        (a, b) if is_one(&b) => a,
        (a, b) => Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Num(0.0);
    }
    Div(Box::new(a), Box::new(b))
}

fn pow(a: Expr, p: f64) -> Expr {
    if p == 0.0 {
        Num(1.0)
    } else if p == 1.0 {
        a
    } else {
        Pow(Box::new(a), p)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Num(c) => write!(f, "{c}"),
            Var(i) => write!(f, "{}", ["x", "y", "z"][*i]),
            Neg(a) => write!(f, "(-{a})"),
            Add(a, b) => write!(f, "({a} + {b})"),
            Sub(a, b) => write!(f, "({a} - {b})"),
            Mul(a, b) => write!(f, "({a} * {b})"),
            Div(a, b) => write!(f, "({a} / {b})"),
            Pow(a, p) => write!(f, "({a} ^ {p})"),
            Sin(a) => write!(f, "sin({a})"),
            Cos(a) => write!(f, "cos({a})"),
            Exp(a) => write!(f, "exp({a})"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>, FlowError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            // exponent part such as 1e-3
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse().map_err(|_| FlowError::Expression(format!("bad number {text:?}")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(FlowError::Expression(format!("unexpected character {c:?}")));
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Token::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn sum(&mut self) -> Result<Expr, FlowError> {
        let mut lhs = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.product()?;
            lhs = if op == '+' { Add(Box::new(lhs), Box::new(rhs)) } else { Sub(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, FlowError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if op == '*' { Mul(Box::new(lhs), Box::new(rhs)) } else { Div(Box::new(lhs), Box::new(rhs)) };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, FlowError> {
        if self.peek_op() == Some('-') {
            self.pos += 1;
            return Ok(Neg(Box::new(self.unary()?)));
        }
        if self.peek_op() == Some('+') {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, FlowError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            if exponent.uses_var(0) || exponent.uses_var(1) || exponent.uses_var(2) {
                return Err(FlowError::Expression("exponents must be constant".into()));
            }
            return Ok(Pow(Box::new(base), exponent.eval([0.0; 3])));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, FlowError> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| FlowError::Expression("unexpected end".into()))?;
        self.pos += 1;
        match tok {
            Token::Num(v) => Ok(Num(v)),
            Token::Op('(') => {
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Token::Ident(name) => match name.as_str() {
                "x" => Ok(Var(0)),
                "y" => Ok(Var(1)),
                "z" => Ok(Var(2)),
                "pi" => Ok(Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    self.expect('(')?;
                    let arg = Box::new(self.sum()?);
                    self.expect(')')?;
                    Ok(match name.as_str() {
                        "sin" => Sin(arg),
                        "cos" => Cos(arg),
                        _ => Exp(arg),
                    })
                }
                other => Err(FlowError::Expression(format!("unknown identifier {other:?}"))),
            },
            Token::Op(c) => Err(FlowError::Expression(format!("unexpected {c:?}"))),
        }
    }

    fn expect(&mut self, c: char) -> Result<(), FlowError> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(FlowError::Expression(format!("expected {c:?}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, v: [f64; 3]) -> f64 {
        Expr::parse(s).unwrap().eval(v)
    }

    #[test]
    fn precedence_and_functions() {
        assert_eq!(ev("1 + 2 * 3", [0.0; 3]), 7.0);
        assert_eq!(ev("-2^2", [0.0; 3]), -4.0);
        assert_eq!(ev("2^-1", [0.0; 3]), 0.5);
        assert_eq!(ev("(x^2 + y^2)/2", [3.0, 4.0, 0.0]), 12.5);
        assert!((ev("sin(pi/2) + cos(0) + exp(0)", [0.0; 3]) - 3.0).abs() < 1e-15);
        assert_eq!(ev("1e-3 * z", [0.0, 0.0, 2.0]), 2e-3);
        assert!(Expr::parse("x^y").is_err());
        assert!(Expr::parse("2 +").is_err());
        assert!(Expr::parse("foo(x)").is_err());
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let sources = ["(x^2 + y^2)/2", "sin(3*x)*exp(-y^2) + z", "x/(1 + y^2) - cos(x*y)", "(1 - x^2 - y^2)^4"];
        let p = [0.3, -0.2, 0.7];
        for src in sources {
            let e = Expr::parse(src).unwrap();
            for var in 0..3 {
                let d = e.diff(var).eval(p);
                let h = 1e-6;
                let mut a = p;
                let mut b = p;
                a[var] += h;
                b[var] -= h;
                let fd = (e.eval(a) - e.eval(b)) / (2.0 * h);
                assert!((d - fd).abs() < 1e-7, "{src} d/d{var}: {d} vs {fd}");
            }
        }
    }
}
