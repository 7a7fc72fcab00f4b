use super::lexer::{tokenize, Spanned, Tok};
use super::{CompareChain, DomainSpec, Expr, FormulaAst, FormulaError, FormulaErrorKind, IndexBinding, Relation};

/// Parses a component domain string such as `{i <in> I, j <in> J}`.
///
/// The empty (or all-whitespace) string is the empty domain. Several brace
/// groups, and bindings separated by commas or whitespace, are accepted.
pub fn parse_domain(text: &str) -> Result<DomainSpec, FormulaError> {
    let toks = tokenize(text)?;
    let mut p = Parser::new(text, &toks);
    let mut bindings = Vec::new();
    while !p.at_end() {
        if p.eat(&Tok::Comma) {
            continue;
        }
        match p.peek() {
            Some(Tok::LBrace) => {
                p.bump();
            }
            Some(other) => {
                let found = other.describe();
                return Err(p.error(FormulaErrorKind::MalformedDomain(format!(
                    "expected `{{`, found {found}"
                ))));
            }
            None => unreachable!(),
        }
        p.binding_list(&mut bindings, false)?;
    }
    let spec = DomainSpec::new(bindings);
    check_distinct(&spec, text, 0)?;
    Ok(spec)
}

/// Parses a function string into one AST per top-level comma segment.
pub fn parse_formula(text: &str) -> Result<Vec<FormulaAst>, FormulaError> {
    let toks = tokenize(text)?;
    let mut segments: Vec<&[Spanned]> = Vec::new();
    let mut depth: i32 = 0;
    let mut start = 0;
    for (k, t) in toks.iter().enumerate() {
        match t.tok {
            Tok::SubOpen | Tok::LBrace | Tok::LParen => depth += 1,
            Tok::RBrace | Tok::RParen => depth -= 1,
            Tok::Comma if depth == 0 => {
                segments.push(&toks[start..k]);
                start = k + 1;
            }
            _ => {}
        }
    }
    segments.push(&toks[start..]);

    let mut out = Vec::with_capacity(segments.len());
    for (k, seg) in segments.iter().enumerate() {
        if seg.is_empty() {
            // offset of the comma that ends (or starts) the empty segment
            let offset = segment_offset(&toks, segments.as_slice(), k, text.len());
            return Err(FormulaError::new(FormulaErrorKind::EmptyFormula, text, offset));
        }
        let mut p = Parser::new(text, seg);
        let ast = p.chain()?;
        if let Some(t) = p.peek_spanned() {
            return Err(FormulaError::new(
                FormulaErrorKind::UnexpectedToken {
                    expected: "operator or end of formula".into(),
                    found: t.tok.describe(),
                },
                text,
                t.offset,
            ));
        }
        out.push(normalize(ast, text, seg[0].offset)?);
    }
    Ok(out)
}

fn segment_offset(toks: &[Spanned], segments: &[&[Spanned]], k: usize, end: usize) -> usize {
    let consumed: usize = segments[..k].iter().map(|s| s.len() + 1).sum();
    toks.get(consumed.saturating_sub(1)).map_or(end, |t| t.offset)
}

fn check_distinct(spec: &DomainSpec, src: &str, offset: usize) -> Result<(), FormulaError> {
    for (k, b) in spec.bindings.iter().enumerate() {
        if spec.bindings[..k].iter().any(|o| o.index == b.index) {
            return Err(FormulaError::new(
                FormulaErrorKind::DuplicateIndex(b.index.clone()),
                src,
                offset,
            ));
        }
    }
    Ok(())
}

/// Merges directly nested sums into one multi-binding sum.
fn normalize(ast: FormulaAst, src: &str, offset: usize) -> Result<FormulaAst, FormulaError> {
    Ok(match ast {
        FormulaAst::Expr(e) => FormulaAst::Expr(merge_sums(e, src, offset)?),
        FormulaAst::Compare(c) => FormulaAst::Compare(CompareChain {
            operands: c
                .operands
                .into_iter()
                .map(|e| merge_sums(e, src, offset))
                .collect::<Result<_, _>>()?,
            relations: c.relations,
        }),
    })
}

fn merge_sums(e: Expr, src: &str, offset: usize) -> Result<Expr, FormulaError> {
    let bin = |a: Box<Expr>, b: Box<Expr>| -> Result<(Box<Expr>, Box<Expr>), FormulaError> {
        Ok((
            Box::new(merge_sums(*a, src, offset)?),
            Box::new(merge_sums(*b, src, offset)?),
        ))
    };
    Ok(match e {
        Expr::Number(_) | Expr::Ref { .. } => e,
        Expr::Add(a, b) => {
            let (a, b) = bin(a, b)?;
            Expr::Add(a, b)
        }
        Expr::Sub(a, b) => {
            let (a, b) = bin(a, b)?;
            Expr::Sub(a, b)
        }
        Expr::Mul(a, b) => {
            let (a, b) = bin(a, b)?;
            Expr::Mul(a, b)
        }
        Expr::Div(a, b) => {
            let (a, b) = bin(a, b)?;
            Expr::Div(a, b)
        }
        Expr::Neg(a) => Expr::Neg(Box::new(merge_sums(*a, src, offset)?)),
        Expr::Sum { mut domain, body } => {
            let body = merge_sums(*body, src, offset)?;
            match body {
                Expr::Sum {
                    domain: inner,
                    body: inner_body,
                } => {
                    domain.bindings.extend(inner.bindings);
                    check_distinct(&domain, src, offset)?;
                    Expr::Sum {
                        domain,
                        body: inner_body,
                    }
                }
                other => Expr::Sum {
                    domain,
                    body: Box::new(other),
                },
            }
        }
    })
}

struct Parser<'a> {
    src: &'a str,
    toks: &'a [Spanned],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str, toks: &'a [Spanned]) -> Self {
        Self { src, toks, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    fn peek(&self) -> Option<&'a Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek_spanned(&self) -> Option<&'a Spanned> {
        self.toks.get(self.pos)
    }

    fn bump(&mut self) -> Option<&'a Spanned> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn offset(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|s| s.offset)
            .or_else(|| self.toks.last().map(|s| s.offset + 1))
            .unwrap_or(0)
            .min(self.src.len())
    }

    fn error(&self, kind: FormulaErrorKind) -> FormulaError {
        FormulaError::new(kind, self.src, self.offset())
    }

    fn unexpected(&self, expected: &str) -> FormulaError {
        match self.peek() {
            Some(t) => self.error(FormulaErrorKind::UnexpectedToken {
                expected: expected.into(),
                found: t.describe(),
            }),
            None => self.error(FormulaErrorKind::UnexpectedEnd {
                expected: expected.into(),
            }),
        }
    }

    fn ident(&mut self, expected: &str) -> Result<String, FormulaError> {
        match self.peek() {
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                Ok(name.clone())
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn relation(&self) -> Option<Relation> {
        match self.peek()? {
            Tok::Le => Some(Relation::Le),
            Tok::Ge => Some(Relation::Ge),
            Tok::Lt => Some(Relation::Lt),
            Tok::Gt => Some(Relation::Gt),
            Tok::Eq => Some(Relation::Eq),
            _ => None,
        }
    }

    fn chain(&mut self) -> Result<FormulaAst, FormulaError> {
        let first = self.expr()?;
        let mut operands = vec![first];
        let mut relations = Vec::new();
        while let Some(rel) = self.relation() {
            self.pos += 1;
            relations.push(rel);
            operands.push(self.expr()?);
        }
        if relations.is_empty() {
            Ok(FormulaAst::Expr(operands.pop().expect("one operand")))
        } else {
            Ok(FormulaAst::Compare(CompareChain { operands, relations }))
        }
    }

    fn expr(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(&Tok::Plus) {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(&Tok::Minus) {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, FormulaError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat(&Tok::Star) {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat(&Tok::Slash) {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(
                self.peek(),
                Some(Tok::Ident(_) | Tok::Number(_) | Tok::LParen | Tok::Sum)
            ) {
                // juxtaposition: `a_{i}x_{i}` reads as `a_{i}*x_{i}`
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, FormulaError> {
        if self.eat(&Tok::Minus) {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat(&Tok::Plus) {
            return self.unary();
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, FormulaError> {
        match self.peek() {
            Some(Tok::Number(v)) => {
                self.pos += 1;
                Ok(Expr::Number(*v))
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                let name = name.clone();
                let subscripts = if self.eat(&Tok::SubOpen) {
                    self.subscripts()?
                } else {
                    Vec::new()
                };
                Ok(Expr::Ref { name, subscripts })
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(&Tok::RParen) {
                    return Err(self.unexpected("`)`"));
                }
                Ok(inner)
            }
            Some(Tok::Sum) => {
                self.pos += 1;
                if !self.eat(&Tok::SubOpen) {
                    return Err(self.unexpected("`_{` after `<sum>`"));
                }
                let start = self.offset();
                let mut bindings = Vec::new();
                self.binding_list(&mut bindings, true)?;
                let domain = DomainSpec::new(bindings);
                check_distinct(&domain, self.src, start)?;
                // the body is the longest following multiplicative term
                let body = self.term()?;
                Ok(Expr::Sum {
                    domain,
                    body: Box::new(body),
                })
            }
            _ => Err(self.unexpected("number, reference, `(` or `<sum>`")),
        }
    }

    fn subscripts(&mut self) -> Result<Vec<String>, FormulaError> {
        let mut subs = Vec::new();
        loop {
            match self.peek() {
                Some(Tok::Ident(s)) => {
                    self.pos += 1;
                    subs.push(s.clone());
                }
                Some(Tok::Number(_)) => return Err(self.error(FormulaErrorKind::UnsupportedNumericSubscript)),
                Some(Tok::RBrace) if !subs.is_empty() => {
                    self.pos += 1;
                    return Ok(subs);
                }
                _ => return Err(self.unexpected("subscript index")),
            }
            self.eat(&Tok::Comma);
        }
    }

    /// Parses `i <in> I, j <in> J}` up to and including the closing brace.
    fn binding_list(&mut self, out: &mut Vec<IndexBinding>, in_sum: bool) -> Result<(), FormulaError> {
        let mut count = 0;
        loop {
            match self.peek() {
                Some(Tok::RBrace) if count > 0 => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Tok::LBrace | Tok::SubOpen) => return Err(self.error(FormulaErrorKind::NestedDomain)),
                None => return Err(self.error(FormulaErrorKind::MalformedDomain("missing closing `}`".into()))),
                _ => {}
            }
            let index = self.ident("index name")?;
            if !self.eat(&Tok::In) {
                if matches!(self.peek(), Some(Tok::LBrace | Tok::SubOpen)) {
                    return Err(self.error(FormulaErrorKind::NestedDomain));
                }
                return Err(self.error(FormulaErrorKind::MissingIn));
            }
            let set_offset = self.offset();
            let set_name = self.ident("set name")?;
            if index == set_name {
                return Err(FormulaError::new(
                    FormulaErrorKind::IndexShadowsSet(index),
                    self.src,
                    set_offset,
                ));
            }
            match self.peek() {
                Some(Tok::SubOpen) => {
                    let kind = if in_sum {
                        FormulaErrorKind::UnsupportedParametrizedSumDomain
                    } else {
                        FormulaErrorKind::NestedDomain
                    };
                    return Err(self.error(kind));
                }
                Some(Tok::LBrace) => return Err(self.error(FormulaErrorKind::NestedDomain)),
                Some(Tok::Colon | Tok::Pipe) => return Err(self.error(FormulaErrorKind::UnsupportedSumFilter)),
                Some(Tok::In) => return Err(self.error(FormulaErrorKind::NestedDomain)),
                _ => {}
            }
            out.push(IndexBinding { index, set_name });
            count += 1;
            self.eat(&Tok::Comma);
        }
    }
}
