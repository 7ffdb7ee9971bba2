//! Resource-limited evaluator.
//!
//! Programs are pure pipelines over one image, so evaluation walks the
//! binding list once. Limits guard against hostile or accidental blowups:
//! an operation budget (one unit per evaluated node), a kernel size bound,
//! and a wall-clock budget checked between operations. Any produced NaN,
//! any dimension mismatch, and any invalid builtin argument is a fault;
//! a faulted program yields no partial result.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use super::ast::{BinOp, Expr, ExprKind, Function};
use super::DslProgram;
use crate::cost::{clamp_top_fraction, floor_to_inf, CostPair};
use crate::image::GrayImage;
use crate::map::{
    absconv2_mirror, avg_kernel, conv2_mirror, corr2_mirror, gaussian_kernel, kb_kernel, Kernel,
    RealMap,
};

/// Hard resource limits for one interpretation.
#[derive(Debug, Clone)]
pub struct InterpLimits {
    /// Budget of evaluated nodes; loop-free programs evaluate each node at
    /// most once, so this also caps work.
    pub max_ops: usize,
    /// Side bound for kernels built during evaluation.
    pub max_kernel: usize,
    /// Wall-clock budget.
    pub time_budget: Duration,
}

impl Default for InterpLimits {
    fn default() -> Self {
        InterpLimits {
            max_ops: 16_384,
            max_kernel: crate::map::MAX_KERNEL_SIDE,
            time_budget: Duration::from_secs(5),
        }
    }
}

/// Why an interpretation failed; used as prompt feedback and to discard
/// the candidate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum FaultKind {
    OpBudget,
    KernelBound,
    TimeBudget,
    NanProduced,
    DimensionMismatch,
    BadArgument,
    NegativeCost,
    Internal,
}

impl std::fmt::Display for FaultKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            FaultKind::OpBudget => "op-budget-exceeded",
            FaultKind::KernelBound => "kernel-bound-exceeded",
            FaultKind::TimeBudget => "time-budget-exceeded",
            FaultKind::NanProduced => "nan-produced",
            FaultKind::DimensionMismatch => "dimension-mismatch",
            FaultKind::BadArgument => "bad-argument",
            FaultKind::NegativeCost => "negative-cost",
            FaultKind::Internal => "internal",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("{kind} at {line}:{col}: {message}")]
pub struct RuntimeFault {
    pub kind: FaultKind,
    pub line: u32,
    pub col: u32,
    pub message: String,
}

#[derive(Debug, Clone)]
enum Value {
    Scalar(f64),
    Map(RealMap),
    Kern(Kernel),
    List(Vec<Value>),
}

impl Value {
    fn type_name(&self) -> &'static str {
        match self {
            Value::Scalar(_) => "scalar",
            Value::Map(_) => "map",
            Value::Kern(_) => "kernel",
            Value::List(_) => "list",
        }
    }
}

struct Interp<'a> {
    env: HashMap<String, Value>,
    limits: &'a InterpLimits,
    ops: usize,
    started: Instant,
}

fn fault(kind: FaultKind, expr: &Expr, message: impl Into<String>) -> RuntimeFault {
    RuntimeFault {
        kind,
        line: expr.pos.line,
        col: expr.pos.col,
        message: message.into(),
    }
}

impl<'a> Interp<'a> {
    fn charge(&mut self, expr: &Expr) -> Result<(), RuntimeFault> {
        self.ops += 1;
        if self.ops > self.limits.max_ops {
            return Err(fault(
                FaultKind::OpBudget,
                expr,
                format!("exceeded {} operations", self.limits.max_ops),
            ));
        }
        if self.started.elapsed() > self.limits.time_budget {
            return Err(fault(
                FaultKind::TimeBudget,
                expr,
                format!("exceeded {:?}", self.limits.time_budget),
            ));
        }
        Ok(())
    }

    fn check_map(&self, m: RealMap, expr: &Expr) -> Result<Value, RuntimeFault> {
        if m.has_nan() {
            return Err(fault(FaultKind::NanProduced, expr, "map contains NaN"));
        }
        Ok(Value::Map(m))
    }

    fn check_kernel(&self, k: Kernel, expr: &Expr) -> Result<Value, RuntimeFault> {
        if k.rows() > self.limits.max_kernel || k.cols() > self.limits.max_kernel {
            return Err(fault(
                FaultKind::KernelBound,
                expr,
                format!(
                    "{}x{} kernel exceeds the {} bound",
                    k.rows(),
                    k.cols(),
                    self.limits.max_kernel
                ),
            ));
        }
        Ok(Value::Kern(k))
    }

    fn eval(&mut self, expr: &Expr) -> Result<Value, RuntimeFault> {
        self.charge(expr)?;
        match &expr.kind {
            ExprKind::Number(v) => Ok(Value::Scalar(*v)),
            ExprKind::Var(name) => self.env.get(name).cloned().ok_or_else(|| {
                fault(FaultKind::Internal, expr, format!("unbound `{name}`"))
            }),
            ExprKind::Matrix(rows) => {
                let taps: Vec<f64> = rows.iter().flatten().copied().collect();
                let k = Kernel::from_taps(rows.len(), rows[0].len(), taps)
                    .map_err(|e| fault(FaultKind::BadArgument, expr, e.to_string()))?;
                self.check_kernel(k, expr)
            }
            ExprKind::Neg(inner) => match self.eval(inner)? {
                Value::Scalar(v) => Ok(Value::Scalar(-v)),
                Value::Map(m) => self.check_map(m.map(|v| -v), expr),
                Value::Kern(k) => {
                    let neg = k
                        .scaled(-1.0)
                        .map_err(|e| fault(FaultKind::BadArgument, expr, e.to_string()))?;
                    self.check_kernel(neg, expr)
                }
                other => Err(fault(
                    FaultKind::Internal,
                    expr,
                    format!("cannot negate a {}", other.type_name()),
                )),
            },
            ExprKind::Binary { op, lhs, rhs } => {
                let l = self.eval(lhs)?;
                let r = self.eval(rhs)?;
                self.apply_binary(*op, l, r, expr)
            }
            ExprKind::Call { name, args } => {
                let values = args
                    .iter()
                    .map(|a| self.eval(a))
                    .collect::<Result<Vec<_>, _>>()?;
                self.call(name, values, expr)
            }
        }
    }

    fn apply_binary(
        &mut self,
        op: BinOp,
        l: Value,
        r: Value,
        expr: &Expr,
    ) -> Result<Value, RuntimeFault> {
        let scalar_op = |a: f64, b: f64| match op {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        };
        match (l, r) {
            (Value::Scalar(a), Value::Scalar(b)) => {
                let v = scalar_op(a, b);
                if v.is_nan() {
                    return Err(fault(FaultKind::NanProduced, expr, "scalar result is NaN"));
                }
                Ok(Value::Scalar(v))
            }
            (Value::Map(a), Value::Map(b)) => {
                let m = a
                    .zip(&b, scalar_op)
                    .map_err(|e| fault(FaultKind::DimensionMismatch, expr, e.to_string()))?;
                self.check_map(m, expr)
            }
            (Value::Map(a), Value::Scalar(s)) => self.check_map(a.map(|v| scalar_op(v, s)), expr),
            (Value::Scalar(s), Value::Map(b)) => self.check_map(b.map(|v| scalar_op(s, v)), expr),
            (Value::Kern(k), Value::Scalar(s)) if matches!(op, BinOp::Mul | BinOp::Div) => {
                let factor = if matches!(op, BinOp::Mul) { s } else { 1.0 / s };
                let scaled = k
                    .scaled(factor)
                    .map_err(|e| fault(FaultKind::BadArgument, expr, e.to_string()))?;
                self.check_kernel(scaled, expr)
            }
            (Value::Scalar(s), Value::Kern(k)) if matches!(op, BinOp::Mul) => {
                let scaled = k
                    .scaled(s)
                    .map_err(|e| fault(FaultKind::BadArgument, expr, e.to_string()))?;
                self.check_kernel(scaled, expr)
            }
            (l, r) => Err(fault(
                FaultKind::Internal,
                expr,
                format!(
                    "operator `{}` on ({}, {})",
                    op.symbol(),
                    l.type_name(),
                    r.type_name()
                ),
            )),
        }
    }

    fn call(&mut self, name: &str, args: Vec<Value>, expr: &Expr) -> Result<Value, RuntimeFault> {
        let internal = |what: &str| fault(FaultKind::Internal, expr, format!("`{name}`: {what}"));
        let bad = |msg: String| fault(FaultKind::BadArgument, expr, msg);
        match name {
            "conv" | "corr" | "absconv" => {
                let [Value::Map(m), Value::Kern(k)] = &args[..] else {
                    return Err(internal("expects (map, kernel)"));
                };
                let result = match name {
                    "conv" => conv2_mirror(m, k),
                    "corr" => corr2_mirror(m, k),
                    _ => absconv2_mirror(m, k),
                }
                .map_err(|e| fault(FaultKind::DimensionMismatch, expr, e.to_string()))?;
                self.check_map(result, expr)
            }
            "abs" => match &args[..] {
                [Value::Scalar(v)] => Ok(Value::Scalar(v.abs())),
                [Value::Map(m)] => self.check_map(m.map(f64::abs), expr),
                [Value::Kern(k)] => self.check_kernel(k.abs(), expr),
                _ => Err(internal("expects one scalar, map, or kernel")),
            },
            "pow" => match &args[..] {
                [Value::Map(m), Value::Scalar(e)] => {
                    self.check_map(m.map(|v| v.powf(*e)), expr)
                }
                [Value::Scalar(b), Value::Scalar(e)] => {
                    let v = b.powf(*e);
                    if v.is_nan() {
                        Err(fault(FaultKind::NanProduced, expr, "pow result is NaN"))
                    } else {
                        Ok(Value::Scalar(v))
                    }
                }
                _ => Err(internal("expects (map|scalar, scalar)")),
            },
            "add" | "sub" | "mul" | "div" => {
                let op = match name {
                    "add" => BinOp::Add,
                    "sub" => BinOp::Sub,
                    "mul" => BinOp::Mul,
                    _ => BinOp::Div,
                };
                let mut it = args.into_iter();
                let (l, r) = (it.next().ok_or_else(|| internal("missing argument"))?,
                              it.next().ok_or_else(|| internal("missing argument"))?);
                self.apply_binary(op, l, r, expr)
            }
            "recip" => {
                let [Value::Map(m), Value::Scalar(eps)] = &args[..] else {
                    return Err(internal("expects (map, scalar)"));
                };
                if *eps < 0.0 {
                    return Err(bad(format!("recip epsilon must be >= 0, got {eps}")));
                }
                let eps = *eps;
                self.check_map(m.map(|v| 1.0 / (v + eps)), expr)
            }
            "wsum" => {
                let [Value::List(maps), Value::List(weights)] = &args[..] else {
                    return Err(internal("expects (list of map, list of scalar)"));
                };
                if maps.len() != weights.len() {
                    return Err(bad(format!(
                        "wsum got {} maps but {} weights",
                        maps.len(),
                        weights.len()
                    )));
                }
                if maps.is_empty() {
                    return Err(bad("wsum of an empty list".into()));
                }
                let mut acc: Option<RealMap> = None;
                for (m, w) in maps.iter().zip(weights) {
                    let (Value::Map(m), Value::Scalar(w)) = (m, w) else {
                        return Err(internal("list element types"));
                    };
                    let term = m.map(|v| w * v);
                    acc = Some(match acc {
                        None => term,
                        Some(a) => a.zip(&term, |x, y| x + y).map_err(|e| {
                            fault(FaultKind::DimensionMismatch, expr, e.to_string())
                        })?,
                    });
                }
                self.check_map(acc.expect("non-empty"), expr)
            }
            "list" => Ok(Value::List(args)),
            "clamp_top" => {
                let [Value::Map(m), Value::Scalar(fraction)] = &args[..] else {
                    return Err(internal("expects (map, scalar)"));
                };
                if !(0.0..1.0).contains(fraction) {
                    return Err(bad(format!(
                        "clamp_top fraction must be in [0, 1), got {fraction}"
                    )));
                }
                self.check_map(clamp_top_fraction(m, *fraction), expr)
            }
            "floor_to_inf" => {
                let [Value::Map(m), Value::Scalar(theta)] = &args[..] else {
                    return Err(internal("expects (map, scalar)"));
                };
                self.check_map(floor_to_inf(m, *theta), expr)
            }
            "wet_boundary" => {
                let [Value::Map(m), Value::Map(img), Value::Scalar(tau), Value::Scalar(sign)] =
                    &args[..]
                else {
                    return Err(internal("expects (map, map, scalar, scalar)"));
                };
                if !m.same_dims(img) {
                    return Err(fault(
                        FaultKind::DimensionMismatch,
                        expr,
                        "cost map and image dims differ".to_string(),
                    ));
                }
                if *sign == 0.0 {
                    return Err(bad("wet_boundary sign must be nonzero".into()));
                }
                // strict comparisons: +inf where pixel > 255 - tau for the
                // +1 direction, pixel < tau for the -1 direction
                let tau = *tau;
                let positive = *sign > 0.0;
                let out = m
                    .zip(img, |cost, x| {
                        let wet = if positive { x > 255.0 - tau } else { x < tau };
                        if wet {
                            f64::INFINITY
                        } else {
                            cost
                        }
                    })
                    .expect("dims checked");
                self.check_map(out, expr)
            }
            "kb" => self.check_kernel(kb_kernel(), expr),
            "avg" => {
                let [Value::Scalar(size)] = &args[..] else {
                    return Err(internal("expects one scalar"));
                };
                if size.fract() != 0.0 || *size < 1.0 || *size > 4096.0 {
                    return Err(bad(format!("avg size must be a small positive integer, got {size}")));
                }
                let side = *size as usize;
                if side > self.limits.max_kernel {
                    return Err(fault(
                        FaultKind::KernelBound,
                        expr,
                        format!("avg({side}) exceeds the {} bound", self.limits.max_kernel),
                    ));
                }
                let k = avg_kernel(side).map_err(|e| bad(e.to_string()))?;
                self.check_kernel(k, expr)
            }
            "gauss" => {
                let [Value::Scalar(sigma), Value::Scalar(l)] = &args[..] else {
                    return Err(internal("expects (scalar, scalar)"));
                };
                if !(*sigma > 0.0) || !(*l > 0.0) {
                    return Err(bad(format!("gauss needs positive sigma and L, got ({sigma}, {l})")));
                }
                let half = (l * sigma - 0.5).ceil().max(0.0);
                let side = 2.0 * half + 1.0;
                if side > self.limits.max_kernel as f64 {
                    return Err(fault(
                        FaultKind::KernelBound,
                        expr,
                        format!("gauss({sigma}, {l}) builds a {side}-wide kernel"),
                    ));
                }
                let k = gaussian_kernel(*sigma, *l).map_err(|e| bad(e.to_string()))?;
                self.check_kernel(k, expr)
            }
            "db8" => {
                let [Value::Scalar(dir)] = &args[..] else {
                    return Err(internal("expects one scalar"));
                };
                if dir.fract() != 0.0 || !(0.0..=2.0).contains(dir) {
                    return Err(bad(format!("db8 direction must be 0, 1, or 2, got {dir}")));
                }
                let bank = crate::cost::db8_bank();
                self.check_kernel(bank.kernels[*dir as usize].clone(), expr)
            }
            _ => Err(internal("unknown builtin")),
        }
    }
}

/// Evaluates a validated program on an image under the given limits.
pub fn interpret(
    prog: &DslProgram,
    img: &GrayImage,
    limits: &InterpLimits,
) -> Result<CostPair, RuntimeFault> {
    interpret_function(&prog.function, img, limits)
}

pub(super) fn interpret_function(
    f: &Function,
    img: &GrayImage,
    limits: &InterpLimits,
) -> Result<CostPair, RuntimeFault> {
    let mut interp = Interp {
        env: HashMap::new(),
        limits,
        ops: 0,
        started: Instant::now(),
    };
    interp
        .env
        .insert(f.param.clone(), Value::Map(RealMap::from_image(img)));

    for binding in &f.lets {
        let value = interp.eval(&binding.value)?;
        interp.env.insert(binding.name.clone(), value);
    }

    let mut out = Vec::with_capacity(2);
    for ret in [&f.ret.0, &f.ret.1] {
        match interp.eval(ret)? {
            Value::Map(m) => {
                if m.width() != img.width() || m.height() != img.height() {
                    return Err(fault(
                        FaultKind::DimensionMismatch,
                        ret,
                        format!(
                            "returned map is {}x{}, image is {}x{}",
                            m.width(),
                            m.height(),
                            img.width(),
                            img.height()
                        ),
                    ));
                }
                if m.values().iter().any(|&v| v < 0.0) {
                    return Err(fault(
                        FaultKind::NegativeCost,
                        ret,
                        "returned cost map has negative entries",
                    ));
                }
                out.push(m);
            }
            other => {
                return Err(fault(
                    FaultKind::Internal,
                    ret,
                    format!("return value is a {}", other.type_name()),
                ))
            }
        }
    }
    let rho_minus = out.pop().expect("two returns");
    let rho_plus = out.pop().expect("two returns");
    Ok(CostPair::new(rho_plus, rho_minus))
}
