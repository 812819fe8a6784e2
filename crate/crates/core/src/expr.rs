//! Scalar expressions in `x`, `y`, `r`, `theta` for problem files.

use std::sync::Arc;

use evalexpr::{
    build_operator_tree, ContextWithMutableFunctions, ContextWithMutableVariables, DefaultNumericTypes,
    Function, HashMapContext, Node, Value,
};

use crate::error::{Error, Result};

type Ctx = HashMapContext<DefaultNumericTypes>;

/// A parsed expression such as `0.2357*r^3 - 0.05*cos(2*theta)`.
///
/// Variables: `x` (alias `x1`), `y` (alias `x2`), `r`, `theta`, `pi`.
/// Functions: `sin cos tan exp ln sqrt abs atan2 pow min max` besides the
/// `math::` built-ins.
#[derive(Clone)]
pub struct Expr {
    source: String,
    tree: Arc<Node<DefaultNumericTypes>>,
}

impl std::fmt::Debug for Expr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

fn unary(ctx: &mut Ctx, name: &str, op: fn(f64) -> f64) {
    let _ = ctx.set_function(
        name.into(),
        Function::new(move |arg: &Value| Ok(Value::Float(op(arg.as_number()?)))),
    );
}

fn binary(ctx: &mut Ctx, name: &str, op: fn(f64, f64) -> f64) {
    let _ = ctx.set_function(
        name.into(),
        Function::new(move |arg: &Value| {
            let t = arg.as_fixed_len_tuple(2)?;
            Ok(Value::Float(op(t[0].as_number()?, t[1].as_number()?)))
        }),
    );
}

fn base_context() -> Ctx {
    let mut ctx = Ctx::new();
    unary(&mut ctx, "sin", f64::sin);
    unary(&mut ctx, "cos", f64::cos);
    unary(&mut ctx, "tan", f64::tan);
    unary(&mut ctx, "exp", f64::exp);
    unary(&mut ctx, "ln", f64::ln);
    unary(&mut ctx, "sqrt", f64::sqrt);
    unary(&mut ctx, "abs", f64::abs);
    binary(&mut ctx, "atan2", f64::atan2);
    binary(&mut ctx, "pow", f64::powf);
    binary(&mut ctx, "min", f64::min);
    binary(&mut ctx, "max", f64::max);
    let _ = ctx.set_value("pi".into(), Value::Float(std::f64::consts::PI));
    ctx
}

impl Expr {
    pub fn parse(source: &str) -> Result<Self> {
        let tree = build_operator_tree::<DefaultNumericTypes>(source)
            .map_err(|e| Error::Parse(format!("expression `{source}`: {e}")))?;
        let expr = Self {
            source: source.to_string(),
            tree: Arc::new(tree),
        };
        expr.eval([0.5, 0.25])?;
        Ok(expr)
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, p: [f64; 2]) -> Result<f64> {
        let mut ctx = base_context();
        let r = p[0].hypot(p[1]);
        let theta = p[1].atan2(p[0]);
        for (name, v) in [
            ("x", p[0]),
            ("x1", p[0]),
            ("y", p[1]),
            ("x2", p[1]),
            ("r", r),
            ("theta", theta),
        ] {
            let _ = ctx.set_value(name.into(), Value::Float(v));
        }
        self.tree
            .eval_number_with_context(&ctx)
            .map_err(|e| Error::Parse(format!("evaluating `{}`: {e}", self.source)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn variables_and_functions() {
        let e = Expr::parse("x^2 + 2*y - cos(2*theta) + sqrt(r)").unwrap();
        let p = [0.6, 0.8];
        let exact = 0.36 + 1.6 - (2.0 * 0.8f64.atan2(0.6)).cos() + 1.0;
        assert!((e.eval(p).unwrap() - exact).abs() < 1e-14);
        let e = Expr::parse("pow(abs(x1), 4) + x2^2 + pi*0").unwrap();
        assert!((e.eval([-0.5, 0.5]).unwrap() - 0.3125).abs() < 1e-15);
        assert!(Expr::parse("x +* 2").is_err());
        assert!(Expr::parse("unknown_var + 1").is_err());
    }
}
