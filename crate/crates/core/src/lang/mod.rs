//! ARIEL front end: lexer, parser, symbol resolution, semantic checks and
//! translation into r-code plus a configuration bundle.

mod artifacts;
pub mod ast;
mod check;
mod lexer;
mod parser;
mod resolve;
mod symtab;
mod translate;

pub use artifacts::{artifact_files, emit_artifacts, ArtifactError};
pub use check::check_semantics;
pub use resolve::{parse_defines, resolve_symbols};
pub use symtab::{AliasDecl, InjectionSpec, SymbolTable, WatchdogAction, WatchdogConfig, DEFAULT_VERSION_TIMEOUT};
pub use translate::{translate, ConfigBundle};

use std::fmt;

use ast::Ast;
use crate::rcode::RcodeProgram;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: usize,
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    pub fn error(line: usize, message: impl Into<String>) -> Self {
        Diagnostic { line, severity: Severity::Error, message: message.into() }
    }

    pub fn warning(line: usize, message: impl Into<String>) -> Self {
        Diagnostic { line, severity: Severity::Warning, message: message.into() }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Line {}: {}", self.line, self.message)
    }
}

/// Parses a script; any syntax error rejects it.
pub fn parse(src: &str) -> Result<Ast, Vec<Diagnostic>> {
    let (toks, mut diags) = lexer::lex(src);
    let (ast, pdiags) = parser::Parser::new(toks).parse();
    diags.extend(pdiags);
    if diags.is_empty() {
        Ok(ast)
    } else {
        diags.sort_by_key(|d| d.line);
        Err(diags)
    }
}

#[derive(Debug, Clone)]
pub struct CompileOutput {
    pub program: Option<RcodeProgram>,
    pub bundle: Option<ConfigBundle>,
    pub diagnostics: Vec<Diagnostic>,
    /// Translator messages in the order they were produced.
    pub transcript: Vec<String>,
}

impl CompileOutput {
    pub fn error_count(&self) -> usize {
        self.diagnostics.iter().filter(|d| d.is_error()).count()
    }

    pub fn ok(&self) -> bool {
        self.program.is_some()
    }
}

/// Runs the whole front end. `loader` returns the text of an included file.
pub fn compile(src: &str, file_name: &str, loader: &dyn Fn(&str) -> Option<String>, verbose: bool) -> CompileOutput {
    let mut out = CompileOutput { program: None, bundle: None, diagnostics: Vec::new(), transcript: Vec::new() };
    out.transcript.push(format!("Parsing file {}...", file_name));
    let lines = src.lines().count();
    let mut has_sections = false;
    let result = (|| {
        let mut ast = parse(src)?;
        let st = resolve_symbols(&mut ast, loader)?;
        Ok::<_, Vec<Diagnostic>>((ast, st))
    })();
    match result {
        Err(d) => out.diagnostics = d,
        Ok((ast, st)) => {
            if verbose {
                out.transcript.extend(st.trace.iter().cloned());
            }
            out.diagnostics = check_semantics(&ast, &st);
            has_sections = !ast.sections.is_empty();
            if out.error_count() == 0 {
                match translate(&ast, &st) {
                    Ok((p, b)) => {
                        out.program = Some(p);
                        out.bundle = Some(b);
                    }
                    Err(d) => out.diagnostics.extend(d),
                }
            }
        }
    }
    for d in &out.diagnostics {
        out.transcript.push(format!("\t{}", d));
    }
    if has_sections {
        out.transcript.push("\tif-then-else: ok".into());
    }
    out.transcript.push(format!("...done ({} lines.)", lines));
    match out.error_count() {
        0 => {}
        1 => out.transcript.push("1 error detected --- output rejected.".into()),
        n => out.transcript.push(format!("{} errors detected --- output rejected.", n)),
    }
    out
}
