//! Abstract syntax of the cost-pipeline language.
//!
//! A program is a single function of one image parameter whose body is a
//! sequence of `let` bindings ending in `return (expr, expr)`. There is no
//! control flow of any kind, so every program terminates and the node
//! count bounds the work an interpretation can perform.

/// Source position, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl Pos {
    pub fn new(line: u32, col: u32) -> Self {
        Pos { line, col }
    }
}

impl std::fmt::Display for Pos {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

/// An expression with its source position. Equality ignores positions so
/// reformatted programs compare equal structurally.
#[derive(Debug, Clone)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Var(String),
    Call { name: String, args: Vec<Expr> },
    /// Literal kernel, row-major rows of equal length.
    Matrix(Vec<Vec<f64>>),
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    pub fn symbol(&self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone)]
pub struct LetBinding {
    pub name: String,
    pub value: Expr,
    pub pos: Pos,
}

impl PartialEq for LetBinding {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.value == other.value
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Function {
    pub name: String,
    pub param: String,
    pub lets: Vec<LetBinding>,
    pub ret: (Expr, Expr),
}

impl Function {
    /// Total AST node count: function + bindings + all expression nodes.
    pub fn node_count(&self) -> usize {
        fn expr_nodes(e: &Expr) -> usize {
            1 + match &e.kind {
                ExprKind::Number(_) | ExprKind::Var(_) => 0,
                ExprKind::Matrix(rows) => rows.iter().map(|r| r.len()).sum(),
                ExprKind::Call { args, .. } => args.iter().map(expr_nodes).sum(),
                ExprKind::Neg(inner) => expr_nodes(inner),
                ExprKind::Binary { lhs, rhs, .. } => expr_nodes(lhs) + expr_nodes(rhs),
            }
        }
        1 + self.lets.len()
            + self.lets.iter().map(|l| expr_nodes(&l.value)).sum::<usize>()
            + expr_nodes(&self.ret.0)
            + expr_nodes(&self.ret.1)
    }
}

/// Whether `name` is an acceptable cost-function name: `compute_cost`
/// followed by lowercase/underscore words, optionally ending in a
/// `_v<digits>` version suffix.
pub fn valid_function_name(name: &str) -> bool {
    let Some(tail) = name.strip_prefix("compute_cost") else {
        return false;
    };
    let base = match split_version(name) {
        Some((base, _)) => base.strip_prefix("compute_cost").unwrap_or(""),
        None => tail,
    };
    base.chars().all(|c| c.is_ascii_lowercase() || c == '_')
}

/// Splits a `_v<digits>` suffix off a function name.
pub fn split_version(name: &str) -> Option<(&str, u32)> {
    let idx = name.rfind("_v")?;
    let digits = &name[idx + 2..];
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().map(|v| (&name[..idx], v))
}

/// The name with its version suffix replaced (or appended) by `_v{k}`.
pub fn with_version(name: &str, k: u32) -> String {
    match split_version(name) {
        Some((base, _)) => format!("{base}_v{k}"),
        None => format!("{name}_v{k}"),
    }
}
