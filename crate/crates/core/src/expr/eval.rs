use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};

impl Expr {
    /// Evaluates at `(x, t)`. Any operation that leaves the real domain or
    /// produces a non-finite value is reported as [`Error::Eval`].
    pub fn eval(&self, x: f64, t: f64) -> Result<f64> {
        let v = match self {
            Expr::Const(c) => return Ok(*c),
            Expr::Var(Var::X) => return Ok(x),
            Expr::Var(Var::T) => return Ok(t),
            Expr::Neg(a) => -a.eval(x, t)?,
            Expr::Func(f, a) => {
                let arg = a.eval(x, t)?;
                match f {
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Tan => arg.tan(),
                    Func::Exp => arg.exp(),
                    Func::Log => {
                        if arg <= 0.0 {
                            return Err(
                                self.domain_error(format!("log of non-positive value {arg}"))
                            );
                        }
                        arg.ln()
                    }
                    Func::Sqrt => {
                        if arg < 0.0 {
                            return Err(self.domain_error(format!("sqrt of negative value {arg}")));
                        }
                        arg.sqrt()
                    }
                    Func::Abs => arg.abs(),
                }
            }
            Expr::Binary(op, a, b) => {
                let l = a.eval(x, t)?;
                let r = b.eval(x, t)?;
                match op {
                    BinOp::Add => l + r,
                    BinOp::Sub => l - r,
                    BinOp::Mul => l * r,
                    BinOp::Div => {
                        if r == 0.0 {
                            return Err(self.domain_error("division by zero".into()));
                        }
                        l / r
                    }
                    BinOp::Pow => l.powf(r),
                }
            }
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.domain_error(format!("non-finite result at (x, t) = ({x}, {t})")))
        }
    }

    fn domain_error(&self, reason: String) -> Error {
        Error::Eval {
            node: self.to_string(),
            reason,
        }
    }
}
