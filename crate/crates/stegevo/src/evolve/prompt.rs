//! Prompt construction.
//!
//! A prompt is the sampled reference program(s), renamed `_v0..=_v{r-1}`,
//! followed by an empty placeholder function named `_v{r}` with the same
//! signature, followed by the natural-language instruction. The LLM's job
//! is to write the placeholder's body.

use thiserror::Error;

use super::database::CandidateProgram;
use crate::dsl::{self, ast};

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt needs at least one reference")]
    NoReferences,
    #[error("references come from sub-databases {0} and {1}; they must share one")]
    MixedSubDatabases(usize, usize),
    #[error("reference program does not parse: {0}")]
    BadReference(String),
}

/// A reference program together with the sub-database it was drawn from.
#[derive(Debug, Clone)]
pub struct SampledRef {
    pub sub_db: usize,
    pub program: CandidateProgram,
}

/// The instruction used when the config does not override it.
pub const DEFAULT_INSTRUCTION: &str = "\
You are designing an embedding cost function for grayscale image \
steganography. The function receives the cover image as a map of pixel \
values in [0, 255] and must return a pair of per-pixel cost maps for +1 \
and -1 changes: lower cost marks pixels whose modification is harder for \
a steganalyzer to detect (complex textures), higher cost marks smooth, \
predictable regions, and infinity forbids a change entirely.

Write the body of the empty function above. Keep its exact name and \
signature. The language provides: let bindings; arithmetic on maps and \
scalars (+, -, *, /); matrix literals like [1, -1; -1, 1]; and the \
builtins conv(map, kernel), corr(map, kernel), absconv(map, kernel), \
abs(x), pow(map, exponent), recip(map, epsilon), wsum(list(maps...), \
list(weights...)), clamp_top(map, fraction), floor_to_inf(map, theta), \
wet_boundary(map, image, tau, sign), and the kernel constructors kb(), \
avg(size), gauss(sigma, L), db8(direction). There are no loops, \
conditionals, or other functions.

Aim for a cost function that resists steganalysis better than the \
reference. Feel free to be creative: combine filters of different scales \
and orientations, reweight directional residuals, or post-process the \
cost surface in novel ways. More complex and innovative designs are \
encouraged as long as they remain valid in this language. Reply with a \
single fenced code block containing only the complete function.";

/// Builds the deterministic prompt text for one round.
pub fn build_prompt(refs: &[SampledRef], instruction: &str) -> Result<String, PromptError> {
    if refs.is_empty() {
        return Err(PromptError::NoReferences);
    }
    let home = refs[0].sub_db;
    if let Some(other) = refs.iter().find(|r| r.sub_db != home) {
        return Err(PromptError::MixedSubDatabases(home, other.sub_db));
    }

    let mut out = String::new();
    let mut base_name = String::new();
    for (k, r) in refs.iter().enumerate() {
        let renamed = dsl::rename_version(&r.program.dsl_source, k as u32)
            .map_err(|e| PromptError::BadReference(e.to_string()))?;
        if k == 0 {
            let parsed = dsl::parse(&renamed).map_err(|e| PromptError::BadReference(e.to_string()))?;
            base_name = parsed.name().to_string();
        }
        out.push_str(renamed.trim_end());
        out.push_str("\n\n");
    }
    let placeholder = ast::with_version(&base_name, refs.len() as u32);
    out.push_str(&format!("fn {placeholder}(image) {{\n}}\n\n"));
    out.push_str(instruction);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::database::{CandidateProgram, ProgramStatus};

    fn reference(sub_db: usize, name: &str) -> SampledRef {
        let source = format!("fn {name}(image) {{\n    return (image, image);\n}}\n");
        SampledRef {
            sub_db,
            program: CandidateProgram {
                id: 1,
                length: source.chars().count(),
                dsl_source: source,
                parents: vec![],
                sub_db: Some(sub_db),
                prelim_score: Some(0.1),
                accurate_score: None,
                status: ProgramStatus::Seed,
            },
        }
    }

    #[test]
    fn single_reference_naming() {
        let prompt = build_prompt(&[reference(0, "compute_cost_adjusted")], "Do better.").unwrap();
        assert!(prompt.contains("fn compute_cost_adjusted_v0(image)"));
        assert!(prompt.contains("fn compute_cost_adjusted_v1(image) {\n}"));
        assert!(prompt.ends_with("Do better."));
    }

    #[test]
    fn two_references_target_v2() {
        let refs = [
            reference(1, "compute_cost_a_v7"),
            reference(1, "compute_cost_b"),
        ];
        let prompt = build_prompt(&refs, "x").unwrap();
        assert!(prompt.contains("fn compute_cost_a_v0(image)"));
        assert!(prompt.contains("fn compute_cost_b_v1(image)"));
        assert!(prompt.contains("fn compute_cost_a_v2(image) {\n}"));
    }

    #[test]
    fn mixed_sub_databases_rejected() {
        let refs = [reference(0, "compute_cost_a"), reference(1, "compute_cost_b")];
        assert!(matches!(
            build_prompt(&refs, "x"),
            Err(PromptError::MixedSubDatabases(0, 1))
        ));
    }

    #[test]
    fn byte_stable() {
        let refs = [reference(0, "compute_cost_adjusted")];
        let a = build_prompt(&refs, DEFAULT_INSTRUCTION).unwrap();
        let b = build_prompt(&refs, DEFAULT_INSTRUCTION).unwrap();
        assert_eq!(a, b);
    }
}
