use super::{FormulaError, FormulaErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Number(f64),
    /// `<sum>`
    Sum,
    /// `<in>`
    In,
    /// `_{`, opening a subscript or a summation domain.
    SubOpen,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Comma,
    Plus,
    Minus,
    Star,
    Slash,
    Le,
    Ge,
    Lt,
    Gt,
    Eq,
    Colon,
    Pipe,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(v) => format!("number `{v}`"),
            Tok::Sum => "`<sum>`".into(),
            Tok::In => "`<in>`".into(),
            Tok::SubOpen => "`_{`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Plus => "`+`".into(),
            Tok::Minus => "`-`".into(),
            Tok::Star => "`*`".into(),
            Tok::Slash => "`/`".into(),
            Tok::Le => "`<=`".into(),
            Tok::Ge => "`>=`".into(),
            Tok::Lt => "`<`".into(),
            Tok::Gt => "`>`".into(),
            Tok::Eq => "`=`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Pipe => "`|`".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Spanned {
    pub tok: Tok,
    pub offset: usize,
}

fn is_ident_start(c: u8) -> bool {
    c.is_ascii_alphabetic() || c == b'_'
}

fn is_ident_continue(c: u8) -> bool {
    c.is_ascii_alphanumeric() || c == b'_'
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<Spanned>, FormulaError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let start = pos;
        let rest = &src[pos..];
        let tok = if rest.starts_with("<sum>") {
            pos += 5;
            Tok::Sum
        } else if rest.starts_with("<in>") {
            pos += 4;
            Tok::In
        } else if rest.starts_with("_{") {
            pos += 2;
            Tok::SubOpen
        } else if is_ident_start(c) {
            // An identifier never swallows the `_` that opens a subscript.
            while pos < bytes.len() && is_ident_continue(bytes[pos]) {
                if bytes[pos] == b'_' && bytes.get(pos + 1) == Some(&b'{') && pos > start {
                    break;
                }
                pos += 1;
            }
            Tok::Ident(src[start..pos].to_string())
        } else if c.is_ascii_digit() || (c == b'.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit)) {
            pos = scan_number(bytes, pos);
            let text = &src[start..pos];
            let value = text
                .parse::<f64>()
                .map_err(|_| FormulaError::new(FormulaErrorKind::InvalidNumber(text.to_string()), src, start))?;
            Tok::Number(value)
        } else {
            let two = rest.get(..2).unwrap_or("");
            match two {
                "<=" => {
                    pos += 2;
                    Tok::Le
                }
                ">=" => {
                    pos += 2;
                    Tok::Ge
                }
                "==" => {
                    pos += 2;
                    Tok::Eq
                }
                _ => {
                    pos += 1;
                    match c {
                        b'{' => Tok::LBrace,
                        b'}' => Tok::RBrace,
                        b'(' => Tok::LParen,
                        b')' => Tok::RParen,
                        b',' => Tok::Comma,
                        b'+' => Tok::Plus,
                        b'-' => Tok::Minus,
                        b'*' => Tok::Star,
                        b'/' => Tok::Slash,
                        b'<' => Tok::Lt,
                        b'>' => Tok::Gt,
                        b'=' => Tok::Eq,
                        b':' => Tok::Colon,
                        b'|' => Tok::Pipe,
                        _ => {
                            let ch = rest.chars().next().unwrap_or('?');
                            return Err(FormulaError::new(FormulaErrorKind::UnexpectedChar(ch), src, start));
                        }
                    }
                }
            }
        };
        out.push(Spanned { tok, offset: start });
    }
    Ok(out)
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    while pos < bytes.len() && bytes[pos].is_ascii_digit() {
        pos += 1;
    }
    if pos < bytes.len() && bytes[pos] == b'.' {
        pos += 1;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
    }
    if pos < bytes.len() && (bytes[pos] == b'e' || bytes[pos] == b'E') {
        let mut look = pos + 1;
        if look < bytes.len() && (bytes[look] == b'+' || bytes[look] == b'-') {
            look += 1;
        }
        if look < bytes.len() && bytes[look].is_ascii_digit() {
            pos = look;
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
        }
    }
    pos
}
