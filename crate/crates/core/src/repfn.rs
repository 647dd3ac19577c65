//! Scalar generators: the `g` family (g(1) = 0, g'(1) = 1) used by the
//! generalized Karcher equation, and the representing functions `f`
//! (f(1) = 1) of two-variable operator means.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// g(1) = 0, g'(1) = 1.
    Generator,
    /// f(1) = 1, f > 0.
    Representing,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RepFunction {
    /// g(x) = log x
    Log,
    /// g(x) = x − 1
    Linear,
    /// g(x) = 1 − 1/x
    InvLinear,
    /// g(x) = (xᵗ − 1)/t, t ∈ [−1, 1] \ {0}
    PowerLog(f64),
    /// f(x) = xᵗ
    Power(f64),
    /// f(x) = (1 − t) + t x
    Arithmetic(f64),
    /// f(x) = ((1 − t) + t x⁻¹)⁻¹
    Harmonic(f64),
}

impl RepFunction {
    pub fn family(&self) -> Family {
        match self {
            RepFunction::Log | RepFunction::Linear | RepFunction::InvLinear | RepFunction::PowerLog(_) => {
                Family::Generator
            }
            _ => Family::Representing,
        }
    }

    pub fn param(&self) -> Option<f64> {
        match *self {
            RepFunction::PowerLog(t)
            | RepFunction::Power(t)
            | RepFunction::Arithmetic(t)
            | RepFunction::Harmonic(t) => Some(t),
            _ => None,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            RepFunction::Log => x.ln(),
            RepFunction::Linear => x - 1.0,
            RepFunction::InvLinear => 1.0 - 1.0 / x,
            RepFunction::PowerLog(t) => (t * x.ln()).exp_m1() / t,
            RepFunction::Power(t) => x.powf(t),
            RepFunction::Arithmetic(t) => (1.0 - t) + t * x,
            RepFunction::Harmonic(t) => 1.0 / ((1.0 - t) + t / x),
        }
    }

    /// Inverse function where it exists in closed form.
    pub fn inverse(&self, y: f64) -> Option<f64> {
        let v = match *self {
            RepFunction::Log => y.exp(),
            RepFunction::Linear => y + 1.0,
            RepFunction::InvLinear => 1.0 / (1.0 - y),
            RepFunction::PowerLog(t) => (1.0 + t * y).powf(1.0 / t),
            RepFunction::Power(t) if t != 0.0 => y.powf(1.0 / t),
            RepFunction::Arithmetic(t) if t != 0.0 => (y - (1.0 - t)) / t,
            RepFunction::Harmonic(t) if t != 0.0 => t / (1.0 / y - (1.0 - t)),
            _ => return None,
        };
        (v.is_finite() && v > 0.0).then_some(v)
    }

    /// Checks the normalization of the function's family and the parameter
    /// range.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("{self}: {msg}")));
        match *self {
            RepFunction::PowerLog(t) if !(t.abs() <= 1.0 && t != 0.0) => {
                return bad("parameter must lie in [-1, 1] \\ {0}".into())
            }
            RepFunction::Power(t) | RepFunction::Arithmetic(t) | RepFunction::Harmonic(t)
                if !(0.0..=1.0).contains(&t) =>
            {
                return bad("parameter must lie in [0, 1]".into())
            }
            _ => {}
        }
        match self.family() {
            Family::Generator => {
                let g1 = self.eval(1.0);
                let h = 1e-5;
                let d = (self.eval(1.0 + h) - self.eval(1.0 - h)) / (2.0 * h);
                if g1.abs() > 1e-14 || (d - 1.0).abs() > 1e-6 {
                    return bad(format!("g(1) = {g1}, g'(1) = {d}"));
                }
            }
            Family::Representing => {
                let f1 = self.eval(1.0);
                if (f1 - 1.0).abs() > 1e-14 {
                    return bad(format!("f(1) = {f1}"));
                }
            }
        }
        Ok(())
    }

    pub fn is_strictly_monotone(&self) -> bool {
        !matches!(self.param(), Some(t) if t == 0.0)
    }

    pub(crate) fn require(&self, family: Family) -> Result<()> {
        if self.family() != family {
            let want = match family {
                Family::Generator => "a generator g with g(1)=0, g'(1)=1",
                Family::Representing => "a representing function f with f(1)=1",
            };
            return Err(Error::InvalidArgument(format!("{self} is not {want}")));
        }
        self.validate()
    }
}

impl fmt::Display for RepFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepFunction::Log => write!(f, "log"),
            RepFunction::Linear => write!(f, "linear"),
            RepFunction::InvLinear => write!(f, "inv-linear"),
            RepFunction::PowerLog(t) => write!(f, "powlog:{t}"),
            RepFunction::Power(t) => write!(f, "pow:{t}"),
            RepFunction::Arithmetic(t) => write!(f, "arith:{t}"),
            RepFunction::Harmonic(t) => write!(f, "harm:{t}"),
        }
    }
}

impl FromStr for RepFunction {
    type Err = Error;

    /// Accepts `log`, `linear` (x−1), `inv-linear` (1−1/x), `powlog:T`,
    /// `pow:T`, `arith:T`, `harm:T`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => {
                let t: f64 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad parameter in '{s}'")))?;
                (n.trim(), Some(t))
            }
            None => (s.trim(), None),
        };
        let f = match (name, param) {
            ("log", None) => RepFunction::Log,
            ("linear" | "x-1", None) => RepFunction::Linear,
            ("inv-linear" | "1-1/x", None) => RepFunction::InvLinear,
            ("powlog", Some(t)) => RepFunction::PowerLog(t),
            ("pow", Some(t)) => RepFunction::Power(t),
            ("arith", Some(t)) => RepFunction::Arithmetic(t),
            ("harm", Some(t)) => RepFunction::Harmonic(t),
            _ => return Err(Error::Unknown(format!("function '{s}'"))),
        };
        f.validate()?;
        Ok(f)
    }
}
