//! Textual function and functional specifications.

use evalexpr::{
    build_operator_tree, ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Node,
    Value,
};
use gasket_core::functions::{
    Constant, FnFunction, GasketFunction, HarmonicFunction, SimpleFunction,
};
use gasket_core::Gasket;

/// The multiplier `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    Constant(f64),
    Simple(Vec<f64>),
    Harmonic([f64; 3]),
    Expr(String),
}

fn numbers(list: &str) -> Result<Vec<f64>, String> {
    list.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("'{}' is not a number", t.trim()))
        })
        .collect()
}

fn compile(expr: &str, vars: &[&str]) -> Result<Node<DefaultNumericTypes>, String> {
    let node = build_operator_tree::<DefaultNumericTypes>(expr).map_err(|e| e.to_string())?;
    if let Some(bad) = node
        .iter_read_variable_identifiers()
        .find(|v| !vars.contains(v))
    {
        return Err(format!(
            "unknown variable '{bad}' (expressions may use {})",
            vars.join(", ")
        ));
    }
    Ok(node)
}

fn eval(node: &Node<DefaultNumericTypes>, vars: &[&str], values: &[f64]) -> f64 {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    for (name, &v) in vars.iter().zip(values) {
        if ctx.set_value((*name).to_string(), Value::Float(v)).is_err() {
            return f64::NAN;
        }
    }
    node.eval_number_with_context(&ctx).unwrap_or(f64::NAN)
}

impl FunctionSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| format!("'{text}' should look like kind:arguments"))?;
        match kind.trim() {
            "constant" => {
                let v = numbers(rest)?;
                match v.as_slice() {
                    [c] => Ok(Self::Constant(*c)),
                    _ => Err("constant takes one value".into()),
                }
            }
            "simple" => Ok(Self::Simple(numbers(rest)?)),
            "harmonic" => {
                let v = numbers(rest)?;
                match v.as_slice() {
                    [a, b, c] => Ok(Self::Harmonic([*a, *b, *c])),
                    _ => Err("harmonic takes three boundary values".into()),
                }
            }
            "expr" => {
                compile(rest, &["x", "y"])?;
                Ok(Self::Expr(rest.to_string()))
            }
            other => Err(format!("unknown function kind '{other}'")),
        }
    }

    /// `N` with `3^N = count`.
    pub fn simple_scale(count: usize) -> Option<usize> {
        let mut n = 0;
        let mut p = 1;
        while p < count {
            p *= 3;
            n += 1;
        }
        (p == count).then_some(n)
    }

    /// Whether `f > 0` everywhere, when decidable from the spec alone.
    pub fn known_positive(&self) -> Option<bool> {
        match self {
            Self::Constant(c) => Some(*c > 0.0),
            Self::Simple(a) => Some(a.iter().all(|&x| x > 0.0)),
            // maximum principle
            Self::Harmonic(b) => Some(b.iter().all(|&x| x > 0.0)),
            Self::Expr(_) => None,
        }
    }

    pub fn simple(&self) -> Option<SimpleFunction<f64>> {
        match self {
            Self::Simple(a) => SimpleFunction::new(Self::simple_scale(a.len())?, a.clone()).ok(),
            _ => None,
        }
    }

    pub fn build(&self, gasket: &Gasket<f64>) -> Result<Box<dyn GasketFunction<f64>>, String> {
        Ok(match self {
            Self::Constant(c) => Box::new(Constant(*c)),
            Self::Simple(_) => Box::new(
                self.simple()
                    .ok_or("simple functions need 3^N coefficients")?,
            ),
            Self::Harmonic(b) => {
                Box::new(HarmonicFunction::new(gasket, *b).map_err(|e| e.to_string())?)
            }
            Self::Expr(text) => {
                let node = compile(text, &["x", "y"])?;
                Box::new(FnFunction::new(
                    format!("expr:{text}"),
                    move |x: f64, y: f64| eval(&node, &["x", "y"], &[x, y]),
                ))
            }
        })
    }
}

/// The scalar function `F` applied to eigenvalues and to values of `f`.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalSpec {
    Log,
    Power(f64),
    Expr(String),
}

impl FunctionalSpec {
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        if text == "log" {
            return Ok(Self::Log);
        }
        match text.split_once(':') {
            Some(("power", p)) => p
                .trim()
                .parse::<f64>()
                .map(Self::Power)
                .map_err(|_| format!("'{p}' is not an exponent")),
            Some(("expr", e)) => {
                compile(e, &["x"])?;
                Ok(Self::Expr(e.to_string()))
            }
            _ => Err(format!(
                "unknown functional '{text}' (log, power:p or expr:...)"
            )),
        }
    }

    pub fn needs_positive(&self) -> bool {
        match self {
            Self::Log => true,
            Self::Power(p) => p.fract() != 0.0 || *p < 0.0,
            Self::Expr(_) => false,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::Log => "log".into(),
            Self::Power(p) => format!("power:{p}"),
            Self::Expr(e) => format!("expr:{e}"),
        }
    }

    pub fn build(&self) -> Result<Box<dyn Fn(f64) -> f64>, String> {
        Ok(match self {
            Self::Log => Box::new(f64::ln),
            Self::Power(p) => {
                let p = *p;
                if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
                    Box::new(move |x: f64| x.powi(p as i32))
                } else {
                    Box::new(move |x: f64| x.powf(p))
                }
            }
            Self::Expr(e) => {
                let node = compile(e, &["x"])?;
                Box::new(move |x: f64| eval(&node, &["x"], &[x]))
            }
        })
    }
}
