//! A small, pure, sandboxed cost-pipeline language.
//!
//! Candidate cost functions exist as text in this language: one function
//! of one image parameter, `let` bindings, arithmetic over maps, scalars
//! and kernels, and a fixed set of builtins (convolutions, kernel
//! constructors, reciprocal, weighted sums, clamping, and boundary
//! wetting). There are no loops, no conditionals, and no recursion, so
//! every program terminates; the interpreter additionally enforces hard
//! resource limits. The grammar is documented in `docs/dsl-grammar.md`;
//! the canonical file extension is `.scf`.
//!
//! The six built-in cost functions ship as `.scf` transcriptions (under
//! `assets/`), which double as seed programs for evolution and as oracle
//! checks of the interpreter against the native implementations.

pub mod ast;
pub mod interp;
mod lexer;
mod parser;
pub mod printer;

pub use interp::{interpret, FaultKind, InterpLimits, RuntimeFault};

use ast::{Function, Pos};
use thiserror::Error;

/// Maximum AST node count accepted by the parser.
pub const NODE_BUDGET: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Severity {
    Error,
    Warning,
}

/// A positioned parse or validation message.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostic {
    pub pos: Pos,
    pub message: String,
}

impl Diagnostic {
    pub fn severity(&self) -> Severity {
        // the parser and validator only ever reject; warnings are reserved
        Severity::Error
    }

    pub fn line(&self) -> u32 {
        self.pos.line
    }

    pub fn column(&self) -> u32 {
        self.pos.col
    }
}

impl std::fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "error at {}: {}", self.pos, self.message)
    }
}

#[derive(Debug, Clone, Error)]
pub struct ParseError {
    pub diagnostics: Vec<Diagnostic>,
}

impl std::fmt::Display for ParseError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (i, d) in self.diagnostics.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

/// A parsed, validated program.
#[derive(Debug, Clone, PartialEq)]
pub struct DslProgram {
    source: String,
    canonical: String,
    function: Function,
    node_count: usize,
    name_span: (usize, usize),
}

impl DslProgram {
    /// The source text as given.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Canonical pretty-printed form; program identity and length are
    /// defined on this text.
    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    /// Character count of the canonical form.
    pub fn length(&self) -> usize {
        self.canonical.chars().count()
    }

    pub fn name(&self) -> &str {
        &self.function.name
    }

    /// The `_v<digits>` version, when the name carries one.
    pub fn version(&self) -> Option<u32> {
        ast::split_version(&self.function.name).map(|(_, v)| v)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn function(&self) -> &Function {
        &self.function
    }
}

/// Parses and validates source text into a program, or reports every
/// diagnostic found.
pub fn parse(source: &str) -> Result<DslProgram, ParseError> {
    let parsed = parser::parse_and_validate(source).map_err(|diagnostics| ParseError {
        diagnostics,
    })?;
    let canonical = printer::print_function(&parsed.function);
    let node_count = parsed.function.node_count();
    Ok(DslProgram {
        source: source.to_string(),
        canonical,
        function: parsed.function,
        node_count,
        name_span: parsed.name_span,
    })
}

/// Replaces (or appends) the function name's `_v<digits>` suffix with
/// `_v{k}`, touching nothing else: the body bytes are preserved exactly.
pub fn rename_version(source: &str, k: u32) -> Result<String, ParseError> {
    let prog = parse(source)?;
    let new_name = ast::with_version(prog.name(), k);
    let (start, end) = prog.name_span;
    let mut out = String::with_capacity(source.len() + 8);
    out.push_str(&source[..start]);
    out.push_str(&new_name);
    out.push_str(&source[end..]);
    Ok(out)
}

/// Pulls the program text out of an LLM response: the contents of the
/// first fenced code block if any, otherwise the whole response trimmed.
pub fn extract_code(response: &str) -> String {
    if let Some(open) = response.find("```") {
        let after_fence = &response[open + 3..];
        // skip an optional language tag up to end of line
        let body_start = after_fence.find('\n').map(|i| i + 1).unwrap_or(0);
        let body = &after_fence[body_start..];
        if let Some(close) = body.find("```") {
            return body[..close].trim().to_string();
        }
        return body.trim().to_string();
    }
    response.trim().to_string()
}

/// A DSL program packaged as a [`crate::cost::CostFunction`] with fixed
/// interpretation limits.
#[derive(Debug, Clone)]
pub struct DslCost {
    pub program: DslProgram,
    pub limits: InterpLimits,
}

impl DslCost {
    pub fn new(program: DslProgram) -> Self {
        DslCost {
            program,
            limits: InterpLimits::default(),
        }
    }
}

impl crate::cost::CostFunction for DslCost {
    fn cost_pair(
        &self,
        img: &crate::image::GrayImage,
    ) -> Result<crate::cost::CostPair, RuntimeFault> {
        interpret(&self.program, img, &self.limits)
    }

    fn label(&self) -> String {
        self.program.name().to_string()
    }
}

/// The shipped transcription of a built-in cost function.
pub fn shipped_source(algo: crate::cost::CostAlgo) -> &'static str {
    use crate::cost::CostAlgo::*;
    match algo {
        Wow => include_str!("../../assets/wow.scf"),
        WowEvolved => include_str!("../../assets/wow_evolved.scf"),
        Hill => include_str!("../../assets/hill.scf"),
        HillEvolved => include_str!("../../assets/hill_evolved.scf"),
        Suniward => include_str!("../../assets/suniward.scf"),
        SuniwardEvolved => include_str!("../../assets/suniward_evolved.scf"),
    }
}

/// Parses the shipped transcription; always valid by construction.
pub fn shipped_program(algo: crate::cost::CostAlgo) -> DslProgram {
    parse(shipped_source(algo)).expect("shipped transcriptions parse")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost::CostAlgo;
    use crate::synth;

    #[test]
    fn minimal_program_parses() {
        let prog = parse(
            "fn compute_cost_v0(image) { return (recip(absconv(image, kb()), 1e-10), recip(absconv(image, kb()), 1e-10)) }",
        )
        .unwrap();
        assert_eq!(prog.name(), "compute_cost_v0");
        assert_eq!(prog.version(), Some(0));
        assert!(prog.node_count() > 5);
    }

    #[test]
    fn unknown_builtin_is_positioned() {
        let err = parse("fn compute_cost_v0(image) { return (dct(image), image) }").unwrap_err();
        assert_eq!(err.diagnostics.len(), 1);
        let d = &err.diagnostics[0];
        assert!(d.message.contains("dct"), "{}", d.message);
        assert_eq!(d.line(), 1);
        assert!(d.column() > 30);
        assert_eq!(d.severity(), Severity::Error);
    }

    #[test]
    fn multiple_diagnostics_reported() {
        let err = parse(
            "fn compute_cost_v0(image) {
                let a = nosuch(image);
                let b = conv(a, image);
                return (b, alsomissing)
            }",
        )
        .unwrap_err();
        assert!(err.diagnostics.len() >= 3, "{:?}", err.diagnostics);
    }

    #[test]
    fn bad_name_rejected() {
        let err = parse("fn my_cost(image) { return (image, image) }").unwrap_err();
        assert!(err.diagnostics[0].message.contains("compute_cost"));
    }

    #[test]
    fn return_must_be_maps() {
        let err = parse("fn compute_cost_v0(image) { return (kb(), 3) }").unwrap_err();
        assert_eq!(err.diagnostics.len(), 2);
        assert!(err.diagnostics[0].message.contains("map"));
    }

    #[test]
    fn rename_version_examples() {
        let src = "fn compute_cost_adjusted(image) { return (image, image) }";
        let renamed = rename_version(src, 0).unwrap();
        assert!(renamed.contains("compute_cost_adjusted_v0"));
        // body untouched byte-for-byte
        assert_eq!(
            renamed.replace("compute_cost_adjusted_v0", "compute_cost_adjusted"),
            src
        );

        let src3 = "fn compute_cost_v3(image) { return (image, image) }";
        let renamed = rename_version(src3, 1).unwrap();
        assert!(renamed.contains("compute_cost_v1"));

        let twice = rename_version(&renamed, 1).unwrap();
        assert_eq!(renamed, twice);
    }

    #[test]
    fn extract_code_variants() {
        let fenced = "Here is my function:\n```scf\nfn compute_cost_v1(image) { return (image, image) }\n```\nHope it helps!";
        assert!(extract_code(fenced).starts_with("fn compute_cost_v1"));
        assert!(!extract_code(fenced).contains("```"));

        let bare = "  fn compute_cost_v1(image) { return (image, image) }  ";
        assert_eq!(extract_code(bare), bare.trim());

        let no_lang = "```\nfn f(x) { return (x, x) }\n```";
        assert_eq!(extract_code(no_lang), "fn f(x) { return (x, x) }");
    }

    #[test]
    fn shipped_programs_parse_and_are_canonical() {
        for algo in CostAlgo::ALL {
            let src = shipped_source(algo);
            let prog = parse(src).unwrap_or_else(|e| panic!("{algo}: {e}"));
            assert_eq!(
                prog.canonical(),
                src,
                "{algo}: shipped transcription is not in canonical form"
            );
        }
    }

    #[test]
    fn shipped_programs_interpret() {
        let img = synth::textured_cover(48, 48, 3);
        let limits = InterpLimits::default();
        for algo in CostAlgo::ALL {
            let prog = shipped_program(algo);
            let pair = interpret(&prog, &img, &limits)
                .unwrap_or_else(|e| panic!("{algo}: {e}"));
            assert_eq!(pair.width(), 48);
        }
    }

    #[test]
    fn shipped_match_native_closely() {
        let img = synth::textured_cover(48, 48, 7);
        let limits = InterpLimits::default();
        for algo in CostAlgo::ALL {
            let native = algo.compute(&img);
            let dsl = interpret(&shipped_program(algo), &img, &limits).unwrap();
            for (maps, which) in [
                ((&native.rho_plus, &dsl.rho_plus), "plus"),
                ((&native.rho_minus, &dsl.rho_minus), "minus"),
            ] {
                for (i, (a, b)) in maps.0.values().iter().zip(maps.1.values()).enumerate() {
                    if a.is_infinite() || b.is_infinite() {
                        assert_eq!(a, b, "{algo} {which} inf support at {i}");
                    } else {
                        assert!(
                            (a - b).abs() <= 1e-9 * a.abs().max(1.0),
                            "{algo} {which} at {i}: {a} vs {b}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn op_budget_fault() {
        let prog = parse(
            "fn compute_cost_v0(image) {
                let a = image + image;
                let b = a + a;
                return (b, b)
            }",
        )
        .unwrap();
        let img = synth::textured_cover(8, 8, 1);
        let limits = InterpLimits {
            max_ops: 3,
            ..Default::default()
        };
        let err = interpret(&prog, &img, &limits).unwrap_err();
        assert_eq!(err.kind, FaultKind::OpBudget);
    }

    #[test]
    fn kernel_bound_fault() {
        let prog = parse(
            "fn compute_cost_v0(image) { let r = conv(image, gauss(10, 4)); return (r, r) }",
        )
        .unwrap();
        let img = synth::textured_cover(8, 8, 1);
        let limits = InterpLimits {
            max_kernel: 16,
            ..Default::default()
        };
        let err = interpret(&prog, &img, &limits).unwrap_err();
        assert_eq!(err.kind, FaultKind::KernelBound);
    }

    #[test]
    fn division_by_zero_map_is_not_a_fault() {
        let prog = parse(
            "fn compute_cost_v0(image) {
                let zero = image - image;
                let r = recip(zero, 0);
                return (r, r)
            }",
        )
        .unwrap();
        let img = synth::textured_cover(8, 8, 2);
        let pair = interpret(&prog, &img, &InterpLimits::default()).unwrap();
        assert!(pair.rho_plus.values().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn nan_is_a_fault() {
        // inf - inf inside map arithmetic
        let prog = parse(
            "fn compute_cost_v0(image) {
                let z = recip(image - image, 0);
                let r = abs(z - z);
                return (r, r)
            }",
        )
        .unwrap();
        let img = synth::textured_cover(8, 8, 3);
        let err = interpret(&prog, &img, &InterpLimits::default()).unwrap_err();
        assert_eq!(err.kind, FaultKind::NanProduced);
    }

    #[test]
    fn negative_cost_is_a_fault() {
        let prog = parse(
            "fn compute_cost_v0(image) { let r = 0 - image; return (r, r) }",
        )
        .unwrap();
        let img = synth::textured_cover(8, 8, 4);
        let err = interpret(&prog, &img, &InterpLimits::default()).unwrap_err();
        assert_eq!(err.kind, FaultKind::NegativeCost);
    }

    #[test]
    fn bad_builtin_arguments_fault() {
        for (src, expect) in [
            ("fn compute_cost_v0(image) { let r = conv(image, avg(4)); return (r, r) }", FaultKind::BadArgument),
            ("fn compute_cost_v0(image) { let r = conv(image, db8(3)); return (r, r) }", FaultKind::BadArgument),
            ("fn compute_cost_v0(image) { let r = conv(image, gauss(0 - 1, 4)); return (r, r) }", FaultKind::BadArgument),
        ] {
            let prog = parse(src).unwrap();
            let img = synth::textured_cover(8, 8, 5);
            let err = interpret(&prog, &img, &InterpLimits::default()).unwrap_err();
            assert_eq!(err.kind, expect, "{src}");
        }
    }

    #[test]
    fn interpretation_is_pure() {
        let prog = shipped_program(CostAlgo::Hill);
        let img = synth::textured_cover(32, 32, 6);
        let limits = InterpLimits::default();
        let a = interpret(&prog, &img, &limits).unwrap();
        let b = interpret(&prog, &img, &limits).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn node_budget_enforced() {
        let mut src = String::from("fn compute_cost_v0(image) {\n");
        src.push_str("let a0 = image + 1;\n");
        for i in 1..1500 {
            src.push_str(&format!("let a{i} = a{} + {i};\n", i - 1));
        }
        src.push_str("return (a1499, a1499) }");
        let err = parse(&src).unwrap_err();
        assert!(err.diagnostics[0].message.contains("budget"));
    }
}
