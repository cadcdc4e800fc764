//! Lexical extraction of test methods and imports from Java-like sources.
//!
//! This is deliberately not a parser. Transplantation only needs method
//! spans (including annotations), import lines and the closing brace of
//! the primary type, and all of those fall out of a brace-matching scan
//! that understands comments, string literals (including text blocks),
//! character literals and annotation arguments. Working lexically keeps
//! the extractor robust on sources that a version-pinned grammar would
//! reject.
//!
//! Known, accepted limits of the lexical approach: methods inside nested
//! types are not direct members and are not reported; an enum constant
//! with an argument list and a body is reported as a member named after
//! the constant. Neither shape occurs among fault-revealing tests in
//! practice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ExtractError {
    #[error("unterminated string literal starting on line {0}")]
    UnterminatedString(usize),
    #[error("unterminated block comment starting on line {0}")]
    UnterminatedComment(usize),
    #[error("unbalanced braces near line {0}")]
    Unbalanced(usize),
    #[error("no type declaration found")]
    NoTypeDeclaration,
    #[error("method `{0}` not found")]
    MethodNotFound(String),
}

/// One extracted member, with 1-based inclusive line bounds. `text` holds
/// the full source lines of the span, so re-scanning `text` yields the
/// same member again (the transplant planner relies on that).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodSpan {
    pub name: String,
    pub start_line: usize,
    pub end_line: usize,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImportLine {
    /// Exact source text, `import` through `;`.
    pub raw: String,
    /// Whitespace-free dotted path, without `import`/`static`/`;`.
    pub path: String,
    pub is_static: bool,
}

/// Result of an import scan. Line numbers are 1-based.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportScan {
    pub package_end_line: Option<usize>,
    pub last_import_line: Option<usize>,
    pub imports: Vec<ImportLine>,
}

impl ImportScan {
    /// 1-based line number at which new import lines should be inserted:
    /// right after the last import, else right after the package
    /// statement, else at the top of the file.
    pub fn insertion_line(&self) -> usize {
        self.last_import_line
            .or(self.package_end_line)
            .map(|l| l + 1)
            .unwrap_or(1)
    }

    pub fn has_import(&self, path: &str, is_static: bool) -> bool {
        self.imports
            .iter()
            .any(|i| i.path == path && i.is_static == is_static)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum TokKind {
    Ident(String),
    At,
    LBrace,
    RBrace,
    LParen,
    RParen,
    Semi,
    Assign,
    Punct(char),
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Tok {
    kind: TokKind,
    line: usize,
    offset: usize,
}

/// Characters that turn a following `=` into a comparison or compound
/// operator rather than an assignment.
const COMPOUND_HEADS: &str = "!<>+-*/%&|^=";

fn lex(source: &str, strict: bool) -> Result<Vec<Tok>, ExtractError> {
    let mut toks = Vec::new();
    let mut it = source.char_indices().peekable();
    let mut line = 1usize;
    let mut prev_sig: Option<char> = None;
    while let Some((off, c)) = it.next() {
        match c {
            '\n' => line += 1,
            c if c.is_whitespace() => {}
            '/' => match it.peek() {
                Some(&(_, '/')) => {
                    while let Some(&(_, c2)) = it.peek() {
                        if c2 == '\n' {
                            break;
                        }
                        it.next();
                    }
                }
                Some(&(_, '*')) => {
                    it.next();
                    let start = line;
                    let mut closed = false;
                    while let Some((_, c2)) = it.next() {
                        if c2 == '\n' {
                            line += 1;
                        } else if c2 == '*' {
                            if let Some(&(_, '/')) = it.peek() {
                                it.next();
                                closed = true;
                                break;
                            }
                        }
                    }
                    if !closed {
                        if strict {
                            return Err(ExtractError::UnterminatedComment(start));
                        }
                        break;
                    }
                }
                _ => {
                    toks.push(Tok {
                        kind: TokKind::Punct('/'),
                        line,
                        offset: off,
                    });
                    prev_sig = Some('/');
                }
            },
            '"' => {
                let start = line;
                let mut text_block = false;
                if let Some(&(_, '"')) = it.peek() {
                    it.next();
                    if let Some(&(_, '"')) = it.peek() {
                        it.next();
                        text_block = true;
                    } else {
                        // Empty string literal.
                        prev_sig = Some('"');
                        continue;
                    }
                }
                let mut closed = false;
                if text_block {
                    let mut quotes = 0;
                    for (_, c2) in it.by_ref() {
                        match c2 {
                            '"' => {
                                quotes += 1;
                                if quotes == 3 {
                                    closed = true;
                                    break;
                                }
                            }
                            '\n' => {
                                line += 1;
                                quotes = 0;
                            }
                            '\\' => quotes = 0, // escapes inside blocks are ignorable here
                            _ => quotes = 0,
                        }
                    }
                } else {
                    while let Some((_, c2)) = it.next() {
                        match c2 {
                            '\\' => {
                                if let Some((_, e)) = it.next() {
                                    if e == '\n' {
                                        line += 1;
                                    }
                                }
                            }
                            '"' => {
                                closed = true;
                                break;
                            }
                            '\n' => {
                                // A plain string cannot span lines; treat the
                                // literal as broken.
                                line += 1;
                                break;
                            }
                            _ => {}
                        }
                    }
                }
                if !closed {
                    if strict {
                        return Err(ExtractError::UnterminatedString(start));
                    }
                    break;
                }
                prev_sig = Some('"');
            }
            '\'' => {
                let start = line;
                let mut closed = false;
                while let Some((_, c2)) = it.next() {
                    match c2 {
                        '\\' => {
                            it.next();
                        }
                        '\'' => {
                            closed = true;
                            break;
                        }
                        '\n' => {
                            line += 1;
                            break;
                        }
                        _ => {}
                    }
                }
                if !closed && strict {
                    return Err(ExtractError::UnterminatedString(start));
                }
                prev_sig = Some('\'');
            }
            '=' => {
                let kind = if let Some(&(_, '=')) = it.peek() {
                    it.next();
                    TokKind::Punct('=')
                } else if prev_sig.is_some_and(|p| COMPOUND_HEADS.contains(p)) {
                    TokKind::Punct('=')
                } else {
                    TokKind::Assign
                };
                toks.push(Tok {
                    kind,
                    line,
                    offset: off,
                });
                prev_sig = Some('=');
            }
            '@' => {
                toks.push(Tok {
                    kind: TokKind::At,
                    line,
                    offset: off,
                });
                prev_sig = Some('@');
            }
            '{' | '}' | '(' | ')' | ';' => {
                let kind = match c {
                    '{' => TokKind::LBrace,
                    '}' => TokKind::RBrace,
                    '(' => TokKind::LParen,
                    ')' => TokKind::RParen,
                    _ => TokKind::Semi,
                };
                toks.push(Tok {
                    kind,
                    line,
                    offset: off,
                });
                prev_sig = Some(c);
            }
            c if c.is_alphabetic() || c == '_' || c == '$' => {
                let mut word = String::new();
                word.push(c);
                while let Some(&(_, c2)) = it.peek() {
                    if c2.is_alphanumeric() || c2 == '_' || c2 == '$' {
                        word.push(c2);
                        it.next();
                    } else {
                        break;
                    }
                }
                prev_sig = word.chars().last();
                toks.push(Tok {
                    kind: TokKind::Ident(word),
                    line,
                    offset: off,
                });
            }
            c if c.is_ascii_digit() => {
                // Numeric literals only matter as opaque tokens.
                let mut lit = String::new();
                lit.push(c);
                while let Some(&(_, c2)) = it.peek() {
                    if c2.is_alphanumeric() || c2 == '_' || c2 == '.' {
                        lit.push(c2);
                        it.next();
                    } else {
                        break;
                    }
                }
                prev_sig = lit.chars().last();
                toks.push(Tok {
                    kind: TokKind::Ident(lit),
                    line,
                    offset: off,
                });
            }
            other => {
                toks.push(Tok {
                    kind: TokKind::Punct(other),
                    line,
                    offset: off,
                });
                prev_sig = Some(other);
            }
        }
    }
    if strict {
        let mut depth = 0i64;
        for t in &toks {
            match t.kind {
                TokKind::LBrace => depth += 1,
                TokKind::RBrace => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(ExtractError::Unbalanced(t.line));
                    }
                }
                _ => {}
            }
        }
        if depth != 0 {
            let last = toks.last().map(|t| t.line).unwrap_or(1);
            return Err(ExtractError::Unbalanced(last));
        }
    }
    Ok(toks)
}

/// Index of the `RBrace` matching the `LBrace` at `open`.
fn matching_brace(toks: &[Tok], open: usize) -> Option<usize> {
    let mut depth = 0i64;
    for (i, t) in toks.iter().enumerate().skip(open) {
        match t.kind {
            TokKind::LBrace => depth += 1,
            TokKind::RBrace => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

/// Header token plus the paren depth at which it was captured; depth 0
/// means outside any argument list.
type Header = Vec<(usize, usize)>;

fn header_is_type_decl(header: &Header, toks: &[Tok]) -> bool {
    for (pos, &(idx, paren)) in header.iter().enumerate() {
        if paren != 0 {
            continue;
        }
        let TokKind::Ident(word) = &toks[idx].kind else {
            continue;
        };
        if !matches!(word.as_str(), "class" | "interface" | "enum" | "record") {
            continue;
        }
        // `Foo.class` is a literal, not a declaration.
        if pos > 0 && toks[header[pos - 1].0].kind == TokKind::Punct('.') {
            continue;
        }
        // The keyword must introduce a type name (`record` is a legal
        // method or variable name).
        if let Some(&(next_idx, _)) = header.get(pos + 1) {
            if matches!(toks[next_idx].kind, TokKind::Ident(_)) {
                return true;
            }
        }
    }
    false
}

fn header_has_assign(header: &Header, toks: &[Tok]) -> bool {
    header
        .iter()
        .any(|&(idx, paren)| paren == 0 && toks[idx].kind == TokKind::Assign)
}

/// Finds the member name in a header that precedes a body brace: the
/// identifier directly before the last top-level `(...)` group, ignoring
/// annotation argument groups.
fn find_method_name(header: &Header, toks: &[Tok]) -> Option<usize> {
    let mut end = header.len();
    loop {
        // Last top-level RParen before `end`.
        let rp = header[..end]
            .iter()
            .rposition(|&(idx, paren)| paren == 0 && toks[idx].kind == TokKind::RParen)?;
        // Match backwards to its LParen.
        let mut depth = 0i64;
        let mut lp = None;
        for k in (0..=rp).rev() {
            match toks[header[k].0].kind {
                TokKind::RParen => depth += 1,
                TokKind::LParen => {
                    depth -= 1;
                    if depth == 0 {
                        lp = Some(k);
                        break;
                    }
                }
                _ => {}
            }
        }
        let lp = lp?;
        if lp >= 1 {
            if let TokKind::Ident(_) = toks[header[lp - 1].0].kind {
                let preceded_by_at = lp >= 2 && toks[header[lp - 2].0].kind == TokKind::At;
                if !preceded_by_at {
                    return Some(header[lp - 1].0);
                }
            }
        }
        // That group belonged to an annotation (or nothing nameable);
        // keep looking further left.
        end = lp;
        if end == 0 {
            return None;
        }
    }
}

/// Scans direct members of a token slice that represents a body interior
/// (or a bare top-level fragment). Nested bodies are skipped whole.
fn scan_members(toks: &[Tok], lines: &[&str]) -> Vec<MethodSpan> {
    let mut spans = Vec::new();
    let mut header: Header = Vec::new();
    let mut paren = 0usize;
    let mut brace = 0usize;
    let mut i = 0;
    while i < toks.len() {
        match &toks[i].kind {
            TokKind::LParen => {
                header.push((i, paren));
                paren += 1;
            }
            TokKind::RParen => {
                paren = paren.saturating_sub(1);
                header.push((i, paren));
            }
            TokKind::Semi if paren == 0 && brace == 0 => header.clear(),
            TokKind::LBrace if paren == 0 && brace == 0 => {
                let Some(close) = matching_brace(toks, i) else {
                    break;
                };
                if !header_is_type_decl(&header, toks) && !header_has_assign(&header, toks) {
                    if let Some(name_idx) = find_method_name(&header, toks) {
                        let TokKind::Ident(name) = &toks[name_idx].kind else {
                            unreachable!("find_method_name returns identifiers");
                        };
                        let start_line = toks[header[0].0].line;
                        let end_line = toks[close].line;
                        let text = lines[start_line - 1..end_line].join("\n");
                        spans.push(MethodSpan {
                            name: name.clone(),
                            start_line,
                            end_line,
                            text,
                        });
                    }
                }
                header.clear();
                i = close + 1;
                continue;
            }
            TokKind::LBrace => {
                brace += 1;
                header.push((i, paren));
            }
            TokKind::RBrace => {
                brace = brace.saturating_sub(1);
                header.push((i, paren));
            }
            _ => header.push((i, paren)),
        }
        i += 1;
    }
    spans
}

struct TypeBody {
    open: usize,
    close: usize,
    is_public: bool,
}

fn scan_top_level(toks: &[Tok]) -> Vec<TypeBody> {
    let mut bodies = Vec::new();
    let mut header: Header = Vec::new();
    let mut paren = 0usize;
    let mut i = 0;
    while i < toks.len() {
        match &toks[i].kind {
            TokKind::LParen => {
                header.push((i, paren));
                paren += 1;
            }
            TokKind::RParen => {
                paren = paren.saturating_sub(1);
                header.push((i, paren));
            }
            TokKind::Semi if paren == 0 => header.clear(),
            TokKind::LBrace if paren == 0 => {
                let Some(close) = matching_brace(toks, i) else {
                    break;
                };
                if header_is_type_decl(&header, toks) {
                    let is_public = header.iter().any(|&(idx, p)| {
                        p == 0 && toks[idx].kind == TokKind::Ident("public".to_string())
                    });
                    bodies.push(TypeBody {
                        open: i,
                        close,
                        is_public,
                    });
                }
                header.clear();
                i = close + 1;
                continue;
            }
            _ => header.push((i, paren)),
        }
        i += 1;
    }
    bodies
}

/// All direct members of the source's top-level types, in source order.
/// A source with no type declaration is treated as a bare member
/// fragment, so spans extracted earlier can be re-scanned.
pub fn list_methods(source: &str) -> Result<Vec<MethodSpan>, ExtractError> {
    let toks = lex(source, true)?;
    let lines: Vec<&str> = source.lines().collect();
    let bodies = scan_top_level(&toks);
    if bodies.is_empty() {
        return Ok(scan_members(&toks, &lines));
    }
    let mut spans = Vec::new();
    for b in &bodies {
        spans.extend(scan_members(&toks[b.open + 1..b.close], &lines));
    }
    Ok(spans)
}

/// First direct member named `method_name`.
pub fn locate_method(source: &str, method_name: &str) -> Result<MethodSpan, ExtractError> {
    list_methods(source)?
        .into_iter()
        .find(|s| s.name == method_name)
        .ok_or_else(|| ExtractError::MethodNotFound(method_name.to_string()))
}

pub fn has_method(source: &str, method_name: &str) -> Result<bool, ExtractError> {
    Ok(list_methods(source)?.iter().any(|s| s.name == method_name))
}

/// Line of the closing brace of the primary type: the first `public`
/// top-level type, else the first top-level type.
pub fn primary_close_line(source: &str) -> Result<usize, ExtractError> {
    let toks = lex(source, true)?;
    let bodies = scan_top_level(&toks);
    let body = bodies
        .iter()
        .find(|b| b.is_public)
        .or_else(|| bodies.first())
        .ok_or(ExtractError::NoTypeDeclaration)?;
    Ok(toks[body.close].line)
}

/// Scans package and import statements. Lenient by design: a source that
/// fails strict lexing still yields whatever imports precede the damage.
pub fn extract_imports(source: &str) -> ImportScan {
    let toks = match lex(source, true) {
        Ok(t) => t,
        Err(_) => lex(source, false).unwrap_or_default(),
    };
    let mut scan = ImportScan::default();
    let mut depth = 0i64;
    let mut stmt_start = true;
    let mut i = 0;
    while i < toks.len() {
        let t = &toks[i];
        match &t.kind {
            TokKind::LBrace => {
                depth += 1;
                stmt_start = true;
            }
            TokKind::RBrace => {
                depth -= 1;
                stmt_start = true;
            }
            TokKind::Semi => stmt_start = true,
            TokKind::Ident(w) if depth == 0 && stmt_start && (w == "import" || w == "package") => {
                let semi = toks[i..]
                    .iter()
                    .position(|x| x.kind == TokKind::Semi)
                    .map(|p| i + p);
                let Some(semi) = semi else { break };
                if w == "package" {
                    scan.package_end_line = Some(toks[semi].line);
                } else {
                    let raw = source[t.offset..=toks[semi].offset].trim().to_string();
                    let is_static = matches!(&toks[i + 1].kind,
                        TokKind::Ident(s) if s == "static");
                    let body = raw
                        .trim_start_matches("import")
                        .trim_start()
                        .trim_end_matches(';')
                        .trim();
                    let body = if is_static {
                        body.trim_start_matches("static").trim_start()
                    } else {
                        body
                    };
                    let path: String = body.chars().filter(|c| !c.is_whitespace()).collect();
                    if !scan.has_import(&path, is_static) {
                        scan.imports.push(ImportLine {
                            raw,
                            path,
                            is_static,
                        });
                    }
                    scan.last_import_line = Some(toks[semi].line);
                }
                i = semi + 1;
                stmt_start = true;
                continue;
            }
            _ => stmt_start = false,
        }
        i += 1;
    }
    scan
}
