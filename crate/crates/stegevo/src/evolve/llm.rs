//! Pluggable chat-completion providers.
//!
//! The evolution loop only needs `complete(prompt) -> text`. Two
//! implementations ship: an HTTP client for any OpenAI-compatible
//! chat-completions endpoint, and a deterministic mock that mutates the
//! reference program found in the prompt (perturb a weight, swap a
//! smoothing kernel, insert a smoothing stage), which makes whole
//! evolution runs reproducible without a network.

use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Deserialize;
use thiserror::Error;

use super::config::LlmConfig;
use crate::dsl::ast::{Expr, ExprKind};
use crate::dsl::{self, printer, DslProgram};
use crate::prng::{fnv1a64, splitmix64, Prng};

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("transport: {0}")]
    Transport(String),
    #[error("missing api key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("endpoint returned status {status}: {body}")]
    BadStatus { status: u16, body: String },
    #[error("malformed completion response: {0}")]
    BadResponse(String),
    #[error("gave up after {0} attempts")]
    RetriesExhausted(u32),
    #[error("journal playback exhausted (call {0})")]
    PlaybackExhausted(u64),
}

pub trait LlmClient: Send + Sync {
    fn complete(&self, prompt: &str) -> Result<String, LlmError>;

    fn describe(&self) -> String;
}

/// Feeds one prompt to the client `n_p` times, keeping per-call results in
/// call order; failed calls never abort the round, they just yield fewer
/// candidates.
pub fn llm_generate(
    client: &dyn LlmClient,
    prompt: &str,
    n_p: usize,
) -> Vec<Result<String, LlmError>> {
    (0..n_p).map(|_| client.complete(prompt)).collect()
}

// ---------------------------------------------------------------------------
// HTTP provider

pub struct HttpProvider {
    config: LlmConfig,
    client: reqwest::blocking::Client,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: String,
}

impl HttpProvider {
    pub fn new(config: LlmConfig) -> Result<Self, LlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(config.timeout_secs))
            .build()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        Ok(HttpProvider { config, client })
    }

    fn attempt(&self, prompt: &str) -> Result<String, LlmError> {
        let key = std::env::var(&self.config.api_key_env)
            .map_err(|_| LlmError::MissingApiKey(self.config.api_key_env.clone()))?;
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": [{"role": "user", "content": prompt}],
            "n": 1,
            "temperature": self.config.temperature,
        });
        let response = self
            .client
            .post(&self.config.endpoint)
            .bearer_auth(key)
            .json(&body)
            .send()
            .map_err(|e| LlmError::Transport(e.to_string()))?;
        let status = response.status();
        if !status.is_success() {
            return Err(LlmError::BadStatus {
                status: status.as_u16(),
                body: response.text().unwrap_or_default(),
            });
        }
        let parsed: ChatResponse = response
            .json()
            .map_err(|e| LlmError::BadResponse(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| LlmError::BadResponse("no choices".into()))
    }
}

impl LlmClient for HttpProvider {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let attempts = self.config.max_retries + 1;
        let mut last = None;
        for i in 0..attempts {
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(e @ LlmError::MissingApiKey(_)) => return Err(e),
                Err(e) => {
                    last = Some(e);
                    if i + 1 < attempts {
                        std::thread::sleep(Duration::from_millis(200 * (i as u64 + 1)));
                    }
                }
            }
        }
        Err(last.unwrap_or(LlmError::RetriesExhausted(attempts)))
    }

    fn describe(&self) -> String {
        format!("http:{}@{}", self.config.model, self.config.endpoint)
    }
}

// ---------------------------------------------------------------------------
// Mock provider

/// Deterministic stand-in for a real model. Each call finds the reference
/// program and the placeholder name in the prompt, applies one seeded
/// mutation rule to the reference, and wraps the result in prose with a
/// fenced code block. Roughly one call in eight emits a deliberately
/// broken program so discard paths stay exercised.
pub struct MockProvider {
    seed: u64,
    calls: AtomicU64,
}

impl MockProvider {
    pub fn new(seed: u64) -> Self {
        MockProvider {
            seed,
            calls: AtomicU64::new(0),
        }
    }
}

impl LlmClient for MockProvider {
    fn complete(&self, prompt: &str) -> Result<String, LlmError> {
        let call = self.calls.fetch_add(1, Ordering::SeqCst);
        let mut rng = Prng::new(splitmix64(
            self.seed ^ call.wrapping_mul(0x9E37_79B9) ^ fnv1a64(prompt.as_bytes()),
        ));
        Ok(mock_response(prompt, &mut rng))
    }

    fn describe(&self) -> String {
        format!("mock:{}", self.seed)
    }
}

/// Plays back per-call results recorded in a journal, in order; recorded
/// failures replay as failures so rounds keep their shape.
pub struct PlaybackProvider {
    calls: std::sync::Mutex<std::collections::VecDeque<Result<String, String>>>,
    served: AtomicU64,
}

impl PlaybackProvider {
    pub fn new(responses: Vec<String>) -> Self {
        PlaybackProvider::from_calls(responses.into_iter().map(Ok).collect())
    }

    pub fn from_calls(calls: Vec<Result<String, String>>) -> Self {
        PlaybackProvider {
            calls: std::sync::Mutex::new(calls.into()),
            served: AtomicU64::new(0),
        }
    }
}

impl LlmClient for PlaybackProvider {
    fn complete(&self, _prompt: &str) -> Result<String, LlmError> {
        let n = self.served.fetch_add(1, Ordering::SeqCst);
        match self.calls.lock().expect("playback lock").pop_front() {
            Some(Ok(text)) => Ok(text),
            Some(Err(message)) => Err(LlmError::Transport(message)),
            None => Err(LlmError::PlaybackExhausted(n)),
        }
    }

    fn describe(&self) -> String {
        "playback".into()
    }
}

/// Finds every parseable program in the prompt plus the name of the final
/// (empty-bodied) placeholder function.
fn prompt_programs(prompt: &str) -> (Vec<DslProgram>, Option<String>) {
    let mut programs = Vec::new();
    let mut last_name = None;
    for (offset, _) in prompt.match_indices("fn ") {
        if offset > 0 && prompt.as_bytes()[offset - 1] != b'\n' {
            continue;
        }
        let tail = &prompt[offset..];
        if let Some(name) = tail
            .strip_prefix("fn ")
            .and_then(|t| t.split('(').next())
            .map(str::trim)
        {
            if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                last_name = Some(name.to_string());
            }
        }
        // balanced-brace slice starting at the first `{`
        if let Some(open) = tail.find('{') {
            let mut depth = 0usize;
            for (i, b) in tail.bytes().enumerate().skip(open) {
                match b {
                    b'{' => depth += 1,
                    b'}' => {
                        depth -= 1;
                        if depth == 0 {
                            if let Ok(p) = dsl::parse(&tail[..=i]) {
                                programs.push(p);
                            }
                            break;
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    (programs, last_name)
}

fn mock_response(prompt: &str, rng: &mut Prng) -> String {
    let (programs, placeholder) = prompt_programs(prompt);
    let target = placeholder.unwrap_or_else(|| "compute_cost_adjusted_v1".into());

    let Some(reference) = programs.first() else {
        return format!(
            "I could not find a reference, here is a fresh attempt.\n\n```\nfn {target}(image) {{\n    let r = recip(absconv(image, kb()), 1e-10);\n    return (r, r);\n}}\n```\n"
        );
    };

    // one call in eight emits a non-executable candidate
    if rng.next_below(8) == 0 {
        let broken = reference
            .canonical()
            .replacen("conv", "conv_fast", 1)
            .replacen(reference.name(), &target, 1);
        return format!(
            "This variant uses a faster convolution routine.\n\n```\n{broken}```\n"
        );
    }

    let mut function = reference.function().clone();
    function.name = target.clone();
    let applied = apply_mutation(&mut function, rng);
    let source = printer::print_function(&function);
    format!("Evolved the reference by {applied}.\n\n```\n{source}```\n")
}

/// Mutation rules over the AST. Every rule preserves validity: literals
/// are only perturbed in positions whose legal range is known, and
/// structural edits only wrap expressions that are maps by construction.
fn apply_mutation(f: &mut crate::dsl::ast::Function, rng: &mut Prng) -> &'static str {
    let choice = rng.next_below(4);
    if choice == 0 && perturb_weight(f, rng) {
        return "perturbing a weight";
    }
    if choice == 1 && swap_smoother(f, rng) {
        return "swapping a smoothing kernel";
    }
    if choice == 2 && scale_epsilon(f, rng) {
        return "rescaling a stabilizer";
    }
    // always applicable: smooth the maps feeding the boundary rule (or the
    // returned maps when no boundary rule exists)
    insert_smoothing(f);
    "inserting a smoothing stage"
}

fn visit_exprs_mut(f: &mut crate::dsl::ast::Function, visit: &mut dyn FnMut(&mut Expr)) {
    fn walk(e: &mut Expr, visit: &mut dyn FnMut(&mut Expr)) {
        visit(e);
        match &mut e.kind {
            ExprKind::Call { args, .. } => {
                for a in args {
                    walk(a, visit);
                }
            }
            ExprKind::Neg(inner) => walk(inner, visit),
            ExprKind::Binary { lhs, rhs, .. } => {
                walk(lhs, visit);
                walk(rhs, visit);
            }
            _ => {}
        }
    }
    for binding in &mut f.lets {
        walk(&mut binding.value, visit);
    }
    walk(&mut f.ret.0, visit);
    walk(&mut f.ret.1, visit);
}

/// Multiplies one scalar weight (a number multiplying a map or kernel, or
/// a `wsum` weight) by a factor in {0.5, 0.8, 1.25, 2}.
fn perturb_weight(f: &mut crate::dsl::ast::Function, rng: &mut Prng) -> bool {
    let factors = [0.5, 0.8, 1.25, 2.0];
    let factor = factors[rng.next_below(4) as usize];
    let mut sites = 0usize;
    visit_exprs_mut(f, &mut |e| {
        if let ExprKind::Binary {
            op: crate::dsl::ast::BinOp::Mul,
            lhs,
            ..
        } = &e.kind
        {
            if matches!(lhs.kind, ExprKind::Number(_)) {
                sites += 1;
            }
        }
    });
    if sites == 0 {
        return false;
    }
    let pick = rng.next_below(sites as u64) as usize;
    let mut seen = 0usize;
    visit_exprs_mut(f, &mut |e| {
        if let ExprKind::Binary {
            op: crate::dsl::ast::BinOp::Mul,
            lhs,
            ..
        } = &mut e.kind
        {
            if let ExprKind::Number(v) = &mut lhs.kind {
                if seen == pick {
                    *v *= factor;
                }
                seen += 1;
            }
        }
    });
    true
}

/// Replaces one `avg(k)` with a Gaussian of comparable support, or one
/// `gauss(sigma, L)` with a nearby sigma.
fn swap_smoother(f: &mut crate::dsl::ast::Function, rng: &mut Prng) -> bool {
    let mut avg_sites = 0usize;
    let mut gauss_sites = 0usize;
    visit_exprs_mut(f, &mut |e| match &e.kind {
        ExprKind::Call { name, args } if name == "avg" && args.len() == 1 => avg_sites += 1,
        ExprKind::Call { name, args } if name == "gauss" && args.len() == 2 => gauss_sites += 1,
        _ => {}
    });
    if avg_sites + gauss_sites == 0 {
        return false;
    }
    let pick = rng.next_below((avg_sites + gauss_sites) as u64) as usize;
    let sigma_scale = [0.5, 0.75, 1.5, 2.0][rng.next_below(4) as usize];
    let mut seen = 0usize;
    let mut changed = false;
    visit_exprs_mut(f, &mut |e| {
        let pos = e.pos;
        match &mut e.kind {
            ExprKind::Call { name, args } if name == "avg" && args.len() == 1 => {
                if seen == pick {
                    if let ExprKind::Number(k) = args[0].kind {
                        // an average of side k smooths about like a
                        // gaussian with sigma ~ k/5
                        let sigma = (k / 5.0).max(0.5);
                        e.kind = ExprKind::Call {
                            name: "gauss".into(),
                            args: vec![
                                Expr { kind: ExprKind::Number(sigma), pos },
                                Expr { kind: ExprKind::Number(4.0), pos },
                            ],
                        };
                        changed = true;
                    }
                }
                seen += 1;
            }
            ExprKind::Call { name, args } if name == "gauss" && args.len() == 2 => {
                if seen == pick {
                    if let ExprKind::Number(sigma) = &mut args[0].kind {
                        // keep the kernel inside the sandbox bound
                        *sigma = (*sigma * sigma_scale).clamp(0.3, 7.5);
                        changed = true;
                    }
                }
                seen += 1;
            }
            _ => {}
        }
    });
    changed
}

/// Scales one `recip(_, eps)` stabilizer by 10 or 0.1 (never to zero).
fn scale_epsilon(f: &mut crate::dsl::ast::Function, rng: &mut Prng) -> bool {
    let factor = if rng.next_below(2) == 0 { 10.0 } else { 0.1 };
    let mut sites = 0usize;
    visit_exprs_mut(f, &mut |e| {
        if let ExprKind::Call { name, args } = &e.kind {
            if name == "recip" && args.len() == 2 && matches!(args[1].kind, ExprKind::Number(v) if v > 0.0)
            {
                sites += 1;
            }
        }
    });
    if sites == 0 {
        return false;
    }
    let pick = rng.next_below(sites as u64) as usize;
    let mut seen = 0usize;
    visit_exprs_mut(f, &mut |e| {
        if let ExprKind::Call { name, args } = &mut e.kind {
            if name == "recip" && args.len() == 2 {
                if let ExprKind::Number(v) = &mut args[1].kind {
                    if *v > 0.0 {
                        if seen == pick {
                            *v *= factor;
                        }
                        seen += 1;
                    }
                }
            }
        }
    });
    true
}

/// Wraps the map feeding each `wet_boundary` (or the returned maps when
/// none exists) in a 3x3 average smoothing.
fn insert_smoothing(f: &mut crate::dsl::ast::Function) {
    let smooth = |e: &Expr| -> Expr {
        let pos = e.pos;
        Expr {
            kind: ExprKind::Call {
                name: "conv".into(),
                args: vec![
                    e.clone(),
                    Expr {
                        kind: ExprKind::Call {
                            name: "avg".into(),
                            args: vec![Expr { kind: ExprKind::Number(3.0), pos }],
                        },
                        pos,
                    },
                ],
            },
            pos,
        }
    };
    let mut wrapped_any = false;
    visit_exprs_mut(f, &mut |e| {
        if let ExprKind::Call { name, args } = &mut e.kind {
            if name == "wet_boundary" && !args.is_empty() {
                // only wrap once per site: a smoothed argument starts with
                // conv(..., avg(3)) already
                let already = matches!(
                    &args[0].kind,
                    ExprKind::Call { name, args } if name == "conv"
                        && matches!(args.last().map(|a| &a.kind), Some(ExprKind::Call { name, .. }) if name == "avg")
                );
                if !already {
                    args[0] = smooth(&args[0]);
                    wrapped_any = true;
                }
            }
        }
    });
    if !wrapped_any {
        f.ret.0 = smooth(&f.ret.0);
        f.ret.1 = smooth(&f.ret.1);
    }
}
