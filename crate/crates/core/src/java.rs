//! Lightweight Java method extraction.
//!
//! A comment/string/char-aware lexer feeds a brace-matching member parser
//! that recognizes method and constructor declarations with bodies, in
//! top-level, nested, local and anonymous classes and in enum constant
//! bodies. Abstract/interface methods, initializer blocks, lambdas and record
//! compact constructors are not reported.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("unterminated {what} starting at line {line}")]
    Unterminated { what: &'static str, line: u32 },
    #[error("unbalanced braces near line {line}")]
    Unbalanced { line: u32 },
}

/// One method or constructor with a body.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MethodSpan {
    pub name: String,
    pub parameter_count: u32,
    pub start_line: u32,
    pub end_line: u32,
    /// Index (into the returned list) of the innermost enclosing method.
    pub parent: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Punct(char),
    Literal,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    line: u32,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1u32;
    let n = chars.len();
    while i < n {
        let c = chars[i];
        match c {
            '\n' => {
                line += 1;
                i += 1;
            }
            c if c.is_whitespace() => i += 1,
            '/' if i + 1 < n && chars[i + 1] == '/' => {
                while i < n && chars[i] != '\n' {
                    i += 1;
                }
            }
            '/' if i + 1 < n && chars[i + 1] == '*' => {
                let start = line;
                i += 2;
                loop {
                    if i + 1 >= n {
                        return Err(ParseError::Unterminated { what: "comment", line: start });
                    }
                    if chars[i] == '*' && chars[i + 1] == '/' {
                        i += 2;
                        break;
                    }
                    if chars[i] == '\n' {
                        line += 1;
                    }
                    i += 1;
                }
            }
            '"' if i + 2 < n && chars[i + 1] == '"' && chars[i + 2] == '"' => {
                let start = line;
                i += 3;
                loop {
                    if i + 2 >= n {
                        return Err(ParseError::Unterminated { what: "text block", line: start });
                    }
                    match chars[i] {
                        '\\' => i += 2,
                        '"' if chars[i + 1] == '"' && chars[i + 2] == '"' => {
                            i += 3;
                            break;
                        }
                        '\n' => {
                            line += 1;
                            i += 1;
                        }
                        _ => i += 1,
                    }
                }
                out.push(Token { tok: Tok::Literal, line: start });
            }
            '"' | '\'' => {
                let start = line;
                i += 1;
                loop {
                    if i >= n || chars[i] == '\n' {
                        let what = if c == '"' { "string" } else { "char literal" };
                        return Err(ParseError::Unterminated { what, line: start });
                    }
                    if chars[i] == '\\' {
                        i += 2;
                        continue;
                    }
                    if chars[i] == c {
                        i += 1;
                        break;
                    }
                    i += 1;
                }
                out.push(Token { tok: Tok::Literal, line: start });
            }
            c if c.is_alphabetic() || c == '_' || c == '$' => {
                let s = i;
                while i < n && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '$') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Ident(chars[s..i].iter().collect()), line });
            }
            c if c.is_ascii_digit() => {
                while i < n && (chars[i].is_alphanumeric() || chars[i] == '_' || chars[i] == '.') {
                    i += 1;
                }
                out.push(Token { tok: Tok::Literal, line });
            }
            c => {
                out.push(Token { tok: Tok::Punct(c), line });
                i += 1;
            }
        }
    }
    Ok(out)
}

const TYPE_KEYWORDS: [&str; 4] = ["class", "interface", "enum", "record"];

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    methods: Vec<MethodSpan>,
    /// Stack of enclosing method indices.
    enclosing: Vec<usize>,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    fn peek_at(&self, at: usize) -> Option<&Tok> {
        self.toks.get(at).map(|t| &t.tok)
    }

    fn is_punct(&self, at: usize, c: char) -> bool {
        matches!(self.peek_at(at), Some(Tok::Punct(p)) if *p == c)
    }

    fn last_line(&self) -> u32 {
        self.toks.last().map_or(1, |t| t.line)
    }

    fn line_at(&self, at: usize) -> u32 {
        self.toks.get(at).map_or_else(|| self.last_line(), |t| t.line)
    }

    /// Is the token at `at` a type-declaration keyword (not `Foo.class`)?
    fn type_keyword_at(&self, at: usize) -> Option<&'static str> {
        let Some(Tok::Ident(word)) = self.peek_at(at) else {
            return None;
        };
        let kw = TYPE_KEYWORDS.iter().copied().find(|k| k == word)?;
        if at > 0 && self.is_punct(at - 1, '.') {
            return None;
        }
        if kw == "record" {
            // Contextual keyword: `record Name(` or `record Name<`.
            let named = matches!(self.peek_at(at + 1), Some(Tok::Ident(_)));
            let opens = self.is_punct(at + 2, '(') || self.is_punct(at + 2, '<');
            if !(named && opens) {
                return None;
            }
        }
        Some(kw)
    }

    /// Top level: a sequence of members without a closing brace.
    fn compilation_unit(&mut self) -> Result<(), ParseError> {
        while let Some(tok) = self.peek() {
            match tok {
                Tok::Punct(';') => self.pos += 1,
                Tok::Punct('}') => {
                    return Err(ParseError::Unbalanced { line: self.line_at(self.pos) });
                }
                _ => self.member()?,
            }
        }
        Ok(())
    }

    /// Parses members up to and including the closing `}` of a type body.
    /// `self.pos` is just past the opening `{`.
    fn class_body(&mut self, is_enum: bool) -> Result<(), ParseError> {
        if is_enum {
            self.enum_constants()?;
        }
        loop {
            match self.peek() {
                None => return Err(ParseError::Unbalanced { line: self.last_line() }),
                Some(Tok::Punct('}')) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Tok::Punct(';')) => self.pos += 1,
                Some(_) => self.member()?,
            }
        }
    }

    fn enum_constants(&mut self) -> Result<(), ParseError> {
        let mut depth = 0usize;
        loop {
            match self.peek() {
                None => return Err(ParseError::Unbalanced { line: self.last_line() }),
                Some(Tok::Punct('(')) => {
                    depth += 1;
                    self.pos += 1;
                }
                Some(Tok::Punct(')')) => {
                    depth = depth.saturating_sub(1);
                    self.pos += 1;
                }
                Some(Tok::Punct(';')) if depth == 0 => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Tok::Punct('}')) if depth == 0 => return Ok(()),
                Some(Tok::Punct('{')) => {
                    self.pos += 1;
                    if depth == 0 {
                        self.class_body(false)?;
                    } else {
                        self.block()?;
                    }
                }
                Some(Tok::Ident(w)) if w == "new" => self.after_new()?,
                Some(_) => self.pos += 1,
            }
        }
    }

    /// One member declaration (field, method, constructor, nested type,
    /// initializer) starting at `self.pos`.
    fn member(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let mut paren = 0usize;
        let mut saw_assign = false;
        let mut type_kw: Option<&'static str> = None;
        loop {
            let Some(tok) = self.peek().cloned() else {
                // Unterminated member at end of input; nothing to report.
                return Ok(());
            };
            match tok {
                Tok::Punct('(') | Tok::Punct('[') => {
                    paren += 1;
                    self.pos += 1;
                }
                Tok::Punct(')') | Tok::Punct(']') => {
                    paren = paren.saturating_sub(1);
                    self.pos += 1;
                }
                Tok::Punct('=') if paren == 0 => {
                    saw_assign = true;
                    self.pos += 1;
                }
                Tok::Punct(';') if paren == 0 => {
                    self.pos += 1;
                    return Ok(());
                }
                Tok::Punct('}') if paren == 0 => {
                    // Enclosing body closes; leave the brace for the caller.
                    return Ok(());
                }
                Tok::Punct('{') if paren > 0 || saw_assign => {
                    self.pos += 1;
                    self.block()?;
                }
                Tok::Punct('{') => {
                    let brace = self.pos;
                    self.pos += 1;
                    if let Some(kw) = type_kw {
                        return self.class_body(kw == "enum");
                    }
                    if let Some((name, arity)) = self.method_header(start, brace) {
                        let idx = self.methods.len();
                        self.methods.push(MethodSpan {
                            name,
                            parameter_count: arity,
                            start_line: self.line_at(start),
                            end_line: 0,
                            parent: self.enclosing.last().copied(),
                        });
                        self.enclosing.push(idx);
                        let res = self.block();
                        self.enclosing.pop();
                        res?;
                        self.methods[idx].end_line = self.line_at(self.pos - 1);
                    } else {
                        // Initializer block or compact constructor.
                        self.block()?;
                    }
                    return Ok(());
                }
                Tok::Ident(ref w) if w == "new" => self.after_new()?,
                Tok::Ident(_) if paren == 0 && !saw_assign && type_kw.is_none() => {
                    type_kw = self.type_keyword_at(self.pos);
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
    }

    /// Recognizes `... name ( params ) [throws T, ...]` in `[start, brace)`.
    fn method_header(&self, start: usize, brace: usize) -> Option<(String, u32)> {
        if brace == start {
            return None;
        }
        // Find the last top-level ')' and check what follows it.
        let mut close = None;
        let mut depth = 0isize;
        for at in start..brace {
            match self.peek_at(at)? {
                Tok::Punct('(') => depth += 1,
                Tok::Punct(')') => {
                    depth -= 1;
                    if depth == 0 {
                        close = Some(at);
                    }
                }
                _ => {}
            }
        }
        let close = close?;
        let tail_ok = match self.peek_at(close + 1) {
            _ if close + 1 == brace => true,
            Some(Tok::Ident(w)) if w == "throws" => true,
            // Legacy array-returning syntax: `int f()[] {`
            Some(Tok::Punct('[')) => true,
            _ => false,
        };
        if !tail_ok {
            return None;
        }
        // Matching '('.
        let mut depth = 0isize;
        let mut open = None;
        for at in (start..=close).rev() {
            match self.peek_at(at)? {
                Tok::Punct(')') => depth += 1,
                Tok::Punct('(') => {
                    depth -= 1;
                    if depth == 0 {
                        open = Some(at);
                        break;
                    }
                }
                _ => {}
            }
        }
        let open = open?;
        if open == start {
            return None;
        }
        let Some(Tok::Ident(name)) = self.peek_at(open - 1) else {
            return None;
        };
        // An annotation's argument list, not a parameter list.
        if open >= start + 2 && self.is_punct(open - 2, '@') {
            return None;
        }
        Some((name.clone(), self.count_params(open + 1, close)))
    }

    fn count_params(&self, from: usize, to: usize) -> u32 {
        if from >= to {
            return 0;
        }
        let mut depth = 0isize;
        let mut commas = 0;
        for at in from..to {
            match self.peek_at(at) {
                Some(Tok::Punct('(' | '<' | '[' | '{')) => depth += 1,
                Some(Tok::Punct(')' | '>' | ']' | '}')) => depth -= 1,
                Some(Tok::Punct(',')) if depth == 0 => commas += 1,
                _ => {}
            }
        }
        commas + 1
    }

    /// Consumes a brace-delimited block; `self.pos` is just past `{`.
    /// Looks for anonymous classes and local type declarations inside.
    fn block(&mut self) -> Result<(), ParseError> {
        loop {
            match self.peek() {
                None => return Err(ParseError::Unbalanced { line: self.last_line() }),
                Some(Tok::Punct('}')) => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(Tok::Punct('{')) => {
                    self.pos += 1;
                    self.block()?;
                }
                Some(Tok::Ident(w)) if w == "new" => self.after_new()?,
                Some(Tok::Ident(_)) => {
                    if let Some(kw) = self.type_keyword_at(self.pos) {
                        self.local_type(kw)?;
                    } else {
                        self.pos += 1;
                    }
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    /// A local class/interface/enum/record: skip the header, parse the body.
    fn local_type(&mut self, kw: &str) -> Result<(), ParseError> {
        let mut paren = 0usize;
        loop {
            match self.peek() {
                None => return Err(ParseError::Unbalanced { line: self.last_line() }),
                Some(Tok::Punct('(')) => paren += 1,
                Some(Tok::Punct(')')) => paren = paren.saturating_sub(1),
                Some(Tok::Punct('{')) if paren == 0 => {
                    self.pos += 1;
                    return self.class_body(kw == "enum");
                }
                Some(Tok::Punct(';' | '}')) if paren == 0 => return Ok(()),
                _ => {}
            }
            self.pos += 1;
        }
    }

    /// At `new`: parses an anonymous class body if one follows.
    fn after_new(&mut self) -> Result<(), ParseError> {
        self.pos += 1;
        let mut angle = 0usize;
        // Type name, qualifiers, annotations and type arguments.
        loop {
            match self.peek() {
                Some(Tok::Ident(_)) | Some(Tok::Punct('.' | '@' | '?' | ',')) => self.pos += 1,
                Some(Tok::Punct('<')) => {
                    angle += 1;
                    self.pos += 1;
                }
                Some(Tok::Punct('>')) if angle > 0 => {
                    angle -= 1;
                    self.pos += 1;
                }
                _ => break,
            }
        }
        if !self.is_punct(self.pos, '(') {
            // Array creation or something unexpected; normal scanning resumes.
            return Ok(());
        }
        let mut depth = 0usize;
        loop {
            match self.peek() {
                None => return Err(ParseError::Unbalanced { line: self.last_line() }),
                Some(Tok::Punct('(')) => depth += 1,
                Some(Tok::Punct(')')) => {
                    depth -= 1;
                    if depth == 0 {
                        self.pos += 1;
                        break;
                    }
                }
                Some(Tok::Punct('{')) => {
                    // Lambda body or nested anonymous class in an argument.
                    self.pos += 1;
                    self.block()?;
                    continue;
                }
                Some(Tok::Ident(w)) if w == "new" => {
                    self.after_new()?;
                    continue;
                }
                _ => {}
            }
            self.pos += 1;
        }
        if self.is_punct(self.pos, '{') {
            self.pos += 1;
            self.class_body(false)?;
        }
        Ok(())
    }
}

/// Extracts every method and constructor that has a body.
///
/// Results are ordered by start line, then by end line descending (outer
/// before inner when they start on the same line).
pub fn extract_methods(source: &str) -> Result<Vec<MethodSpan>, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser {
        toks,
        pos: 0,
        methods: Vec::new(),
        enclosing: Vec::new(),
    };
    parser.compilation_unit()?;
    let mut methods = parser.methods;
    // Re-sort while keeping parent links valid.
    let mut order: Vec<usize> = (0..methods.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, mb) = (&methods[a], &methods[b]);
        ma.start_line
            .cmp(&mb.start_line)
            .then(mb.end_line.cmp(&ma.end_line))
            .then(a.cmp(&b))
    });
    let mut new_index = alloc::vec![0; methods.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    for m in &mut methods {
        m.parent = m.parent.map(|p| new_index[p]);
    }
    let mut slots: Vec<Option<MethodSpan>> = methods.into_iter().map(Some).collect();
    Ok(order.iter().filter_map(|&old| slots[old].take()).collect())
}
