//! Command-line driver: `check`, `run`, `corpus`, and `probe` workflows
//! with stable diagnostics and exit codes.
//!
//! Exit codes: 0 success / final value, 1 type error (or failing corpus
//! entries), 2 runtime abort, 3 stuck configuration, 4 I/O or usage error.

use std::collections::BTreeSet;
use std::io::IsTerminal;
use std::path::{Path, PathBuf};

use crate::ast::{Expr, GlobalEnv};
use crate::diag::{Code, Diagnostic, SourceSpan};
use crate::interp::{eval, StepResult};
use crate::probes::{
    erasure_probe, preservation_probe, progress_probe, smallcheck_suite, ProbeReport,
};
use crate::typeck::{check_program_with_trace, CheckOutcome, TraceEvent};

pub const DEFAULT_FUEL: usize = 1_000_000;

/// The rendered outcome of a driver command.
#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Accepted { final_type: String },
    Rejected { code: Code, message: String, span: SourceSpan },
    Value { rendered: String },
    Aborted { message: String },
    Stuck { reason: String },
}

impl Verdict {
    pub fn exit_code(&self) -> i32 {
        match self {
            Verdict::Accepted { .. } | Verdict::Value { .. } => 0,
            Verdict::Rejected { .. } => 1,
            Verdict::Aborted { .. } => 2,
            Verdict::Stuck { .. } => 3,
        }
    }
}

struct Style {
    color: bool,
}

impl Style {
    fn detect() -> Style {
        let color = match std::env::var("OXIDE_COLOR").as_deref() {
            Ok("never") => false,
            Ok("always") => true,
            _ => std::io::stdout().is_terminal(),
        };
        Style { color }
    }

    fn error(&self, s: &str) -> String {
        if self.color {
            format!("\x1b[31m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }

    fn good(&self, s: &str) -> String {
        if self.color {
            format!("\x1b[32m{s}\x1b[0m")
        } else {
            s.to_string()
        }
    }
}

/// Entry point for the binary; returns the process exit code.
pub fn run(args: &[String]) -> i32 {
    let style = Style::detect();
    match args.first().map(String::as_str) {
        Some("check") => cmd_check_args(&args[1..], &style),
        Some("run") => cmd_run_args(&args[1..], &style),
        Some("corpus") => cmd_corpus_args(&args[1..], &style),
        Some("probe") => cmd_probe_args(&args[1..]),
        _ => {
            eprintln!(
                "usage: oxide check FILE [--trace-env]\n       \
                 oxide run FILE [--unchecked] [--force] [--fuel N]\n       \
                 oxide corpus MANIFEST\n       \
                 oxide probe MANIFEST [--progress|--preservation|--erasure|--smallcheck]"
            );
            4
        }
    }
}

/// The top-level verdict names the unit type by its name rather than its
/// written form.
fn verdict_type(ty: &crate::ast::Type) -> String {
    match ty {
        crate::ast::Type::Unit => "unit".to_string(),
        other => other.to_string(),
    }
}

fn read_source(path: &str) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read `{path}`: {e}");
        4
    })
}

fn parse_and_check(src: &str, path: &str, trace: bool) -> (Result<CheckOutcome, Diagnostic>, Vec<TraceEvent>) {
    match crate::parser::parse_program(src, path) {
        Ok((globals, body)) => {
            let (result, events) = check_program_with_trace(&globals, &body, trace);
            (result, events)
        }
        Err(d) => (Err(d), Vec::new()),
    }
}

fn render_trace(events: &[TraceEvent]) -> String {
    let mut out = String::new();
    for event in events {
        match event {
            TraceEvent::Env { label, note, rendered } => {
                out.push_str(&format!("\u{0393}{label} ({note}) = {rendered}\n"));
            }
            TraceEvent::Solved { name, loans } => {
                let set = crate::ast::Provenance::Concrete(loans.clone());
                out.push_str(&format!("'{name} = {set}\n"));
            }
        }
    }
    out
}

/// Check one file; prints the trace (when requested) and the verdict.
pub fn cmd_check(path: &str, trace_env: bool) -> Result<(Verdict, String), i32> {
    let src = read_source(path)?;
    let (result, events) = parse_and_check(&src, path, trace_env);
    let mut output = render_trace(&events);
    let verdict = match result {
        Ok(outcome) => {
            let rendered = verdict_type(&outcome.ty);
            output.push_str(&format!("ok: {rendered}\n"));
            Verdict::Accepted {
                final_type: rendered,
            }
        }
        Err(d) => {
            output.push_str(&format!("{d}\n"));
            Verdict::Rejected {
                code: d.code,
                message: d.message,
                span: d.span,
            }
        }
    };
    Ok((verdict, output))
}

fn cmd_check_args(args: &[String], style: &Style) -> i32 {
    let mut path = None;
    let mut trace_env = false;
    for arg in args {
        match arg.as_str() {
            "--trace-env" => trace_env = true,
            other if path.is_none() && !other.starts_with('-') => path = Some(other.to_string()),
            other => {
                eprintln!("error: unexpected argument `{other}`");
                return 4;
            }
        }
    }
    let Some(path) = path else {
        eprintln!("usage: oxide check FILE [--trace-env]");
        return 4;
    };
    match cmd_check(&path, trace_env) {
        Ok((verdict, output)) => {
            print!("{}", colorize_verdict_output(&output, style));
            verdict.exit_code()
        }
        Err(code) => code,
    }
}

fn colorize_verdict_output(output: &str, style: &Style) -> String {
    if !style.color {
        return output.to_string();
    }
    output
        .lines()
        .map(|line| {
            if line.starts_with("error[") {
                format!("{}\n", style.error(line))
            } else if line.starts_with("ok:") || line.starts_with("value:") {
                format!("{}\n", style.good(line))
            } else {
                format!("{line}\n")
            }
        })
        .collect()
}

/// Run one file under the interpreter. Ill-typed programs are refused
/// unless forced; `unchecked` disables the dynamic safety checks.
pub fn cmd_run(path: &str, unchecked: bool, force: bool, fuel: usize) -> Result<(Verdict, String), i32> {
    let src = read_source(path)?;
    let (globals, body) = match crate::parser::parse_program(&src, path) {
        Ok(parsed) => parsed,
        Err(d) => {
            return Ok((
                Verdict::Rejected {
                    code: d.code,
                    message: d.message.clone(),
                    span: d.span.clone(),
                },
                format!("{d}\n"),
            ))
        }
    };
    let (check_result, _) = check_program_with_trace(&globals, &body, false);
    if let Err(d) = &check_result {
        if !force {
            return Ok((
                Verdict::Rejected {
                    code: d.code,
                    message: d.message.clone(),
                    span: d.span.clone(),
                },
                format!("{d}\nrun refused: the program does not check (use --force to run anyway)\n"),
            ));
        }
    }
    let (verdict, line) = run_result(eval(&globals, &body, !unchecked, fuel));
    Ok((verdict, line))
}

fn run_result(result: StepResult) -> (Verdict, String) {
    match result {
        StepResult::Finished(v) => {
            let rendered = v.to_string();
            (
                Verdict::Value {
                    rendered: rendered.clone(),
                },
                format!("value: {rendered}\n"),
            )
        }
        StepResult::Aborted(message) => (
            Verdict::Aborted {
                message: message.clone(),
            },
            format!("abort: {message}\n"),
        ),
        StepResult::Stuck(reason) => (
            Verdict::Stuck {
                reason: reason.clone(),
            },
            format!("stuck: {reason}\n"),
        ),
        StepResult::Stepped(..) => unreachable!("eval never returns an intermediate step"),
    }
}

fn cmd_run_args(args: &[String], style: &Style) -> i32 {
    let mut path = None;
    let mut unchecked = false;
    let mut force = false;
    let mut fuel = DEFAULT_FUEL;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--unchecked" => unchecked = true,
            "--force" => force = true,
            "--fuel" => {
                let Some(n) = it.next().and_then(|s| s.parse::<usize>().ok()) else {
                    eprintln!("error: --fuel expects a number");
                    return 4;
                };
                fuel = n;
            }
            other if path.is_none() && !other.starts_with('-') => path = Some(other.to_string()),
            other => {
                eprintln!("error: unexpected argument `{other}`");
                return 4;
            }
        }
    }
    let Some(path) = path else {
        eprintln!("usage: oxide run FILE [--unchecked] [--force] [--fuel N]");
        return 4;
    };
    match cmd_run(&path, unchecked, force, fuel) {
        Ok((verdict, output)) => {
            print!("{}", colorize_verdict_output(&output, style));
            verdict.exit_code()
        }
        Err(code) => code,
    }
}

// ---------------------------------------------------------------------------
// Corpus: expectations live in the .ox files themselves.
// ---------------------------------------------------------------------------

/// What a corpus file claims about itself, read from `//~` markers.
#[derive(Clone, Debug, PartialEq)]
pub enum Expectation {
    /// No marker: the program must check.
    Accepted,
    /// `//~ ERROR <code>` on the offending line.
    Error { code: Code, line: u32 },
    /// `//~ VALUE <rendered>` anywhere: checks, runs, and prints this value.
    Value(String),
    /// `//~ ABORT <message>`: checks, runs, and aborts with this message.
    Abort(String),
}

pub fn parse_expectation(src: &str) -> Result<Expectation, String> {
    let mut expect = Expectation::Accepted;
    for (idx, line) in src.lines().enumerate() {
        let Some(pos) = line.find("//~") else {
            continue;
        };
        let marker = line[pos + 3..].trim();
        if let Some(code_str) = marker.strip_prefix("ERROR") {
            let code_str = code_str.trim();
            let code = Code::parse(code_str)
                .ok_or_else(|| format!("unknown diagnostic code `{code_str}` in marker"))?;
            if !matches!(expect, Expectation::Accepted) {
                return Err("multiple expectation markers".to_string());
            }
            expect = Expectation::Error {
                code,
                line: (idx + 1) as u32,
            };
        } else if let Some(value) = marker.strip_prefix("VALUE") {
            if !matches!(expect, Expectation::Accepted) {
                return Err("multiple expectation markers".to_string());
            }
            expect = Expectation::Value(value.trim().to_string());
        } else if let Some(msg) = marker.strip_prefix("ABORT") {
            if !matches!(expect, Expectation::Accepted) {
                return Err("multiple expectation markers".to_string());
            }
            expect = Expectation::Abort(msg.trim().to_string());
        } else {
            return Err(format!("unrecognized marker `//~ {marker}`"));
        }
    }
    Ok(expect)
}

/// Read the manifest: one corpus file per quoted string or bare token
/// ending in `.ox`, resolved relative to the manifest. Comments (`#`) and
/// TOML-style decoration lines are ignored.
pub fn parse_manifest(manifest_src: &str, manifest_dir: &Path) -> Vec<PathBuf> {
    let mut files = Vec::new();
    for line in manifest_src.lines() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        for token in line.split(|c: char| c == ',' || c == '[' || c == ']' || c.is_whitespace()) {
            let token = token.trim().trim_matches('"');
            if token.ends_with(".ox") {
                files.push(manifest_dir.join(token));
            }
        }
    }
    files
}

struct CorpusEntry {
    name: String,
    passed: bool,
    detail: String,
}

fn check_corpus_entry(path: &Path) -> CorpusEntry {
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let src = match std::fs::read_to_string(path) {
        Ok(src) => src,
        Err(e) => {
            return CorpusEntry {
                name,
                passed: false,
                detail: format!("cannot read file: {e}"),
            }
        }
    };
    let expect = match parse_expectation(&src) {
        Ok(e) => e,
        Err(msg) => {
            return CorpusEntry {
                name,
                passed: false,
                detail: msg,
            }
        }
    };

    let display_path = path.display().to_string();
    let (check_result, _) = parse_and_check(&src, &display_path, false);
    let (passed, detail) = match (&expect, &check_result) {
        (Expectation::Error { code, line }, Err(d)) => {
            if d.code == *code && d.span.start_line == *line {
                (true, format!("rejected with {} at line {line}", d.code))
            } else {
                (
                    false,
                    format!(
                        "expected {} at line {line}, got {} at line {}: {}",
                        code, d.code, d.span.start_line, d.message
                    ),
                )
            }
        }
        (Expectation::Error { code, line }, Ok(outcome)) => (
            false,
            format!(
                "expected {code} at line {line}, but the program checked at `{}`",
                outcome.ty
            ),
        ),
        (Expectation::Accepted, Ok(outcome)) => (true, format!("checked at `{}`", outcome.ty)),
        (Expectation::Accepted, Err(d)) => (false, format!("unexpected {d}")),
        (Expectation::Value(_) | Expectation::Abort(_), Err(d)) => {
            (false, format!("unexpected {d}"))
        }
        (Expectation::Value(expected), Ok(_)) | (Expectation::Abort(expected), Ok(_)) => {
            let (globals, body) =
                crate::parser::parse_program(&src, &display_path).expect("checked parse");
            match (expect.clone(), eval(&globals, &body, true, DEFAULT_FUEL)) {
                (Expectation::Value(want), StepResult::Finished(v)) => {
                    let got = v.to_string();
                    if got == want {
                        (true, format!("checked and evaluated to `{got}`"))
                    } else {
                        (false, format!("expected value `{want}`, got `{got}`"))
                    }
                }
                (Expectation::Abort(want), StepResult::Aborted(msg)) => {
                    if msg == want {
                        (true, format!("checked and aborted with `{msg}`"))
                    } else {
                        (false, format!("expected abort `{want}`, got `{msg}`"))
                    }
                }
                (_, other) => (
                    false,
                    format!("expected `{expected}`, evaluation produced {other:?}"),
                ),
            }
        }
    };
    CorpusEntry { name, passed, detail }
}

/// Run every corpus entry named by the manifest, printing one line per
/// entry in manifest order and a summary. Exit 0 iff all entries pass.
pub fn cmd_corpus(manifest_path: &str) -> Result<(String, i32), i32> {
    let manifest_src = read_source(manifest_path)?;
    let dir = Path::new(manifest_path)
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let files = parse_manifest(&manifest_src, &dir);
    let mut out = String::new();
    let mut passed = 0usize;
    let mut failed = 0usize;
    for file in &files {
        let entry = check_corpus_entry(file);
        if entry.passed {
            passed += 1;
            out.push_str(&format!("PASS {} ({})\n", entry.name, entry.detail));
        } else {
            failed += 1;
            out.push_str(&format!("FAIL {}: {}\n", entry.name, entry.detail));
        }
    }
    out.push_str(&format!(
        "corpus: {passed} passed, {failed} failed, {} total\n",
        files.len()
    ));
    Ok((out, if failed == 0 { 0 } else { 1 }))
}

fn cmd_corpus_args(args: &[String], style: &Style) -> i32 {
    let [manifest] = args else {
        eprintln!("usage: oxide corpus MANIFEST");
        return 4;
    };
    match cmd_corpus(manifest) {
        Ok((output, code)) => {
            if style.color {
                for line in output.lines() {
                    if line.starts_with("PASS") {
                        println!("{}", style.good(line));
                    } else if line.starts_with("FAIL") {
                        println!("{}", style.error(line));
                    } else {
                        println!("{line}");
                    }
                }
            } else {
                print!("{output}");
            }
            code
        }
        Err(code) => code,
    }
}

// ---------------------------------------------------------------------------
// Probes: machine-readable JSON-lines report.
// ---------------------------------------------------------------------------

fn json_escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => out.push_str(&format!("\\u{:04x}", c as u32)),
            c => out.push(c),
        }
    }
    out
}

pub fn report_to_json(report: &ProbeReport) -> String {
    let failures: Vec<String> = report
        .failures
        .iter()
        .map(|f| {
            format!(
                "{{\"step\":{},\"property\":\"{}\",\"detail\":\"{}\"}}",
                f.step,
                json_escape(&f.property),
                json_escape(&f.detail)
            )
        })
        .collect();
    format!(
        "{{\"id\":\"{}\",\"probe\":\"{}\",\"outcome\":\"{}\",\"steps\":{},\"failures\":[{}]}}",
        json_escape(&report.program_id),
        report.probe.as_str(),
        if report.passed() { "pass" } else { "fail" },
        report.steps_taken,
        failures.join(",")
    )
}

fn cmd_probe_args(args: &[String]) -> i32 {
    let mut manifest = None;
    let mut selected: BTreeSet<&str> = BTreeSet::new();
    for arg in args {
        match arg.as_str() {
            "--progress" => {
                selected.insert("progress");
            }
            "--preservation" => {
                selected.insert("preservation");
            }
            "--erasure" => {
                selected.insert("erasure");
            }
            "--smallcheck" => {
                selected.insert("smallcheck");
            }
            other if manifest.is_none() && !other.starts_with('-') => {
                manifest = Some(other.to_string())
            }
            other => {
                eprintln!("error: unexpected argument `{other}`");
                return 4;
            }
        }
    }
    let Some(manifest) = manifest else {
        eprintln!("usage: oxide probe MANIFEST [--progress|--preservation|--erasure|--smallcheck]");
        return 4;
    };
    let all = selected.is_empty();
    let want = |name: &str| all || selected.contains(name);

    match cmd_probe(&manifest, want("progress"), want("preservation"), want("erasure"), want("smallcheck")) {
        Ok((output, code)) => {
            print!("{output}");
            code
        }
        Err(code) => code,
    }
}

/// Run the selected probes over the accepted programs of a corpus
/// manifest; each report is one JSON object per line.
pub fn cmd_probe(
    manifest_path: &str,
    progress: bool,
    preservation: bool,
    erasure: bool,
    smallcheck: bool,
) -> Result<(String, i32), i32> {
    let manifest_src = read_source(manifest_path)?;
    let dir = Path::new(manifest_path)
        .parent()
        .unwrap_or_else(|| Path::new("."))
        .to_path_buf();
    let files = parse_manifest(&manifest_src, &dir);

    let mut out = String::new();
    let mut all_passed = true;
    let per_program = progress || preservation || erasure;
    for file in files.iter().filter(|_| per_program) {
        let id = file
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| file.display().to_string());
        let Ok(src) = std::fs::read_to_string(file) else {
            eprintln!("error: cannot read `{}`", file.display());
            return Err(4);
        };
        let Some((globals, body)) = accepted_program(&src, &file.display().to_string()) else {
            out.push_str(&format!(
                "{{\"id\":\"{}\",\"probe\":\"none\",\"outcome\":\"skipped\",\"steps\":0,\"failures\":[]}}\n",
                json_escape(&id)
            ));
            continue;
        };
        let mut reports = Vec::new();
        if progress {
            reports.push(progress_probe(&globals, &body, &id, DEFAULT_FUEL));
        }
        if preservation {
            reports.push(preservation_probe(&globals, &body, &id, DEFAULT_FUEL));
        }
        if erasure {
            reports.push(erasure_probe(&globals, &body, &id, DEFAULT_FUEL));
        }
        for report in reports {
            all_passed &= report.passed();
            out.push_str(&report_to_json(&report));
            out.push('\n');
        }
    }
    if smallcheck {
        let report = smallcheck_suite();
        all_passed &= report.passed();
        out.push_str(&report_to_json(&report));
        out.push('\n');
    }
    Ok((out, if all_passed { 0 } else { 1 }))
}

fn accepted_program(src: &str, path: &str) -> Option<(GlobalEnv, Expr)> {
    let (globals, body) = crate::parser::parse_program(src, path).ok()?;
    crate::typeck::check_program(&globals, &body).ok()?;
    Some((globals, body))
}
