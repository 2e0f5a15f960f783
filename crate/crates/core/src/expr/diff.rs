use super::{BinOp, Expr, Func, Var};
use crate::error::{Error, Result};

impl Expr {
    /// Exact symbolic partial derivative with respect to `var`.
    ///
    /// `abs` is rejected since it is not differentiable at the origin.
    pub fn differentiate(&self, var: Var) -> Result<Expr> {
        Ok(match self {
            Expr::Const(_) => Expr::zero(),
            Expr::Var(v) => Expr::Const(if *v == var { 1.0 } else { 0.0 }),
            Expr::Neg(a) => Expr::neg(a.differentiate(var)?),
            Expr::Func(f, a) => {
                let da = a.differentiate(var)?;
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => Expr::func(Func::Cos, a),
                    Func::Cos => Expr::neg(Expr::func(Func::Sin, a)),
                    Func::Tan => Expr::div(
                        Expr::constant(1.0),
                        Expr::pow(Expr::func(Func::Cos, a), Expr::constant(2.0)),
                    ),
                    Func::Exp => Expr::func(Func::Exp, a),
                    Func::Log => Expr::div(Expr::constant(1.0), a),
                    Func::Sqrt => Expr::div(Expr::constant(0.5), Expr::func(Func::Sqrt, a)),
                    Func::Abs => {
                        return Err(Error::Diff {
                            node: self.to_string(),
                            reason: "abs is not differentiable".into(),
                        })
                    }
                };
                Expr::mul(outer, da)
            }
            Expr::Binary(op, a, b) => {
                let da = a.differentiate(var)?;
                let db = b.differentiate(var)?;
                let (a, b) = ((**a).clone(), (**b).clone());
                match op {
                    BinOp::Add => Expr::add(da, db),
                    BinOp::Sub => Expr::sub(da, db),
                    BinOp::Mul => Expr::add(Expr::mul(da, b), Expr::mul(a, db)),
                    BinOp::Div => Expr::div(
                        Expr::sub(Expr::mul(da, b.clone()), Expr::mul(a, db)),
                        Expr::pow(b, Expr::constant(2.0)),
                    ),
                    BinOp::Pow => pow_rule(a, b, da, db),
                }
            }
        })
    }
}

fn pow_rule(base: Expr, exponent: Expr, dbase: Expr, dexp: Expr) -> Expr {
    let exponent_constant = !exponent.depends_on(Var::X) && !exponent.depends_on(Var::T);
    if exponent_constant {
        // c * a^(c-1) * a'
        let reduced = Expr::sub(exponent.clone(), Expr::constant(1.0));
        return Expr::mul(Expr::mul(exponent, Expr::pow(base, reduced)), dbase);
    }
    let base_constant = !base.depends_on(Var::X) && !base.depends_on(Var::T);
    let power = Expr::pow(base.clone(), exponent.clone());
    if base_constant {
        return Expr::mul(Expr::mul(power, Expr::func(Func::Log, base)), dexp);
    }
    // a^b * (b' ln a + b a'/a)
    Expr::mul(
        power,
        Expr::add(
            Expr::mul(dexp, Expr::func(Func::Log, base.clone())),
            Expr::div(Expr::mul(exponent, dbase), base),
        ),
    )
}
