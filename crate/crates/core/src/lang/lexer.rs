use super::Diagnostic;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    /// Upper-cased word.
    Ident(String),
    Int(i64),
    Real(f64),
    Str(String),
    /// `{NAME}`, upper-cased.
    Brace(String),
    LBracket,
    RBracket,
    LParen,
    RParen,
    Comma,
    Assign,
    EqEq,
    Ne,
    Gt,
    Ge,
    Lt,
    Le,
    Minus,
    At,
    Tilde,
    Dollar,
    Star,
    Bar,
    Amp,
    Bang,
    Dot,
    Newline,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub line: usize,
}

/// Splits a script into tokens. Newlines inside brackets or parentheses are
/// dropped so guards may span several lines; `;` separates statements.
pub fn lex(src: &str) -> (Vec<Token>, Vec<Diagnostic>) {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut diags = Vec::new();
    let mut line = 1usize;
    let mut depth = 0i32;
    let mut i = 0;
    let push = |out: &mut Vec<Token>, tok: Tok, line: usize| out.push(Token { tok, line });
    while i < chars.len() {
        let c = chars[i];
        match c {
            '\n' => {
                if depth <= 0 {
                    push(&mut out, Tok::Newline, line);
                }
                line += 1;
                i += 1;
            }
            ';' => {
                push(&mut out, Tok::Newline, line);
                i += 1;
            }
            '#' => {
                let rest: String = chars[i + 1..chars.len().min(i + 8)].iter().collect();
                if rest.eq_ignore_ascii_case("include") {
                    push(&mut out, Tok::Ident("INCLUDE".into()), line);
                    i += 8;
                    continue;
                }
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            '"' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '"' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '"' {
                    diags.push(Diagnostic::error(line, "unterminated string"));
                    i = j;
                } else {
                    push(&mut out, Tok::Str(chars[start..j].iter().collect()), line);
                    i = j + 1;
                }
            }
            '{' => {
                let start = i + 1;
                let mut j = start;
                while j < chars.len() && chars[j] != '}' && chars[j] != '\n' {
                    j += 1;
                }
                if j >= chars.len() || chars[j] != '}' {
                    diags.push(Diagnostic::error(line, "unterminated '{'"));
                    i = j;
                } else {
                    let name: String = chars[start..j].iter().collect();
                    push(&mut out, Tok::Brace(name.trim().to_ascii_uppercase()), line);
                    i = j + 1;
                }
            }
            c if c.is_ascii_digit() => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let is_real = i + 1 < chars.len() && chars[i] == '.' && chars[i + 1].is_ascii_digit();
                if is_real {
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                    let s: String = chars[start..i].iter().collect();
                    push(&mut out, Tok::Real(s.parse().unwrap_or(0.0)), line);
                } else {
                    let s: String = chars[start..i].iter().collect();
                    match s.parse() {
                        Ok(v) => push(&mut out, Tok::Int(v), line),
                        Err(_) => diags.push(Diagnostic::error(line, format!("integer {} out of range", s))),
                    }
                }
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_' || chars[i] == '\'') {
                    i += 1;
                }
                let mut word: String = chars[start..i].iter().collect::<String>().to_ascii_uppercase();
                // ALPHA-COUNT and N-VERSION are single keywords.
                if (word == "ALPHA" || word == "N") && i < chars.len() && chars[i] == '-' {
                    let j = i + 1;
                    let mut k = j;
                    while k < chars.len() && chars[k].is_ascii_alphabetic() {
                        k += 1;
                    }
                    let tail: String = chars[j..k].iter().collect::<String>().to_ascii_uppercase();
                    if (word == "ALPHA" && tail == "COUNT") || (word == "N" && tail == "VERSION") {
                        word = format!("{}{}", word, tail);
                        i = k;
                    }
                }
                push(&mut out, Tok::Ident(word), line);
            }
            _ => {
                let next = chars.get(i + 1).copied();
                let (tok, len) = match (c, next) {
                    ('=', Some('=')) => (Tok::EqEq, 2),
                    ('!', Some('=')) => (Tok::Ne, 2),
                    ('<', Some('>')) => (Tok::Ne, 2),
                    ('>', Some('=')) => (Tok::Ge, 2),
                    ('<', Some('=')) => (Tok::Le, 2),
                    ('=', _) => (Tok::Assign, 1),
                    ('>', _) => (Tok::Gt, 1),
                    ('<', _) => (Tok::Lt, 1),
                    ('!', _) => (Tok::Bang, 1),
                    ('[', _) => (Tok::LBracket, 1),
                    (']', _) => (Tok::RBracket, 1),
                    ('(', _) => (Tok::LParen, 1),
                    (')', _) => (Tok::RParen, 1),
                    (',', _) => (Tok::Comma, 1),
                    ('-', _) => (Tok::Minus, 1),
                    ('@', _) => (Tok::At, 1),
                    ('~', _) => (Tok::Tilde, 1),
                    ('$', _) => (Tok::Dollar, 1),
                    ('*', _) => (Tok::Star, 1),
                    ('|', Some('|')) => (Tok::Bar, 2),
                    ('|', _) => (Tok::Bar, 1),
                    ('&', Some('&')) => (Tok::Amp, 2),
                    ('&', _) => (Tok::Amp, 1),
                    ('.', _) => (Tok::Dot, 1),
                    _ => {
                        diags.push(Diagnostic::error(line, format!("unexpected character '{}'", c)));
                        i += 1;
                        continue;
                    }
                };
                match tok {
                    Tok::LBracket | Tok::LParen => depth += 1,
                    Tok::RBracket | Tok::RParen => depth -= 1,
                    _ => {}
                }
                push(&mut out, tok, line);
                i += len;
            }
        }
    }
    out.push(Token { tok: Tok::Newline, line });
    (out, diags)
}
