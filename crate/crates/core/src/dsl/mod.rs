//! Kernel expression language: tree, parser, serializer and kernel files.

mod display;
mod expr;
mod parse;

pub use expr::{add, div, exp, log, mul, neg, pow, sub, Expr, ParameterBinding, Slot, Var};
pub use parse::parse;

use num_complex::Complex64;

use crate::{Error, Result};

pub fn serialize(expr: &Expr) -> String {
    expr.to_string()
}

/// A kernel in `m` variables together with its parameter values.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSpec {
    pub dim: usize,
    pub kernel: Expr,
    pub params: ParameterBinding,
}

/// Parses `name=value,name=value`.
pub fn parse_params(src: &str) -> Result<ParameterBinding> {
    let mut out = ParameterBinding::new();
    for item in src.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (name, value) = item.split_once('=').ok_or_else(|| {
            Error::InvalidParameters(format!("expected name=value, got `{item}`"))
        })?;
        let name = name.trim();
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(Error::InvalidParameters(format!(
                "bad parameter name `{name}`"
            )));
        }
        let value: f64 = value
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameters(format!("bad value for `{name}`")))?;
        out.insert(name.to_string(), value);
    }
    Ok(out)
}

impl KernelSpec {
    /// Reads the `key = value` kernel file format:
    ///
    /// ```text
    /// # comment
    /// dim = 2
    /// params = l=1, m=2
    /// kernel = (1 - z1*wb1)^(-l) * (1 - z2*wb2)^(-m)
    /// ```
    pub fn from_file_contents(src: &str) -> Result<Self> {
        let mut dim = None;
        let mut kernel = None;
        let mut params = ParameterBinding::new();
        for (lineno, line) in src.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::KernelFile(format!("line {}: expected key = value", lineno + 1))
            })?;
            match key.trim() {
                "dim" => {
                    let m: usize = value
                        .trim()
                        .parse()
                        .map_err(|_| Error::KernelFile(format!("line {}: bad dim", lineno + 1)))?;
                    if m == 0 {
                        return Err(Error::KernelFile("dim must be at least 1".into()));
                    }
                    dim = Some(m);
                }
                "kernel" => kernel = Some(value.trim().to_string()),
                "params" => params.extend(parse_params(value)?),
                other => {
                    return Err(Error::KernelFile(format!(
                        "line {}: unknown key `{other}`",
                        lineno + 1
                    )))
                }
            }
        }
        let dim = dim.ok_or_else(|| Error::KernelFile("missing `dim`".into()))?;
        let text = kernel.ok_or_else(|| Error::KernelFile("missing `kernel`".into()))?;
        Ok(KernelSpec {
            dim,
            kernel: parse(&text, dim)?,
            params,
        })
    }
}

/// The Hardy-type product kernel `prod (1 - z_i wb_i)^(-l_i)`.
pub fn product_kernel(exponents: &[f64]) -> Expr {
    exponents
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let base = sub(Expr::real(1.0), mul(Expr::z(i + 1), Expr::wb(i + 1)));
            pow(base, Expr::real(-l))
        })
        .reduce(mul)
        .unwrap_or_else(|| Expr::real(1.0))
}

/// `z_old = A z_new + b`, with the conjugate map on the `wb` slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineMap {
    pub matrix: Vec<Vec<Complex64>>,
    pub shift: Vec<Complex64>,
}

impl AffineMap {
    pub fn linear(matrix: Vec<Vec<Complex64>>) -> Self {
        let n = matrix.len();
        AffineMap {
            matrix,
            shift: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    fn real(rows: &[[f64; 2]; 2]) -> Self {
        Self::linear(
            rows.iter()
                .map(|r| r.iter().map(|&v| Complex64::new(v, 0.0)).collect())
                .collect(),
        )
    }

    /// `z1 = u1 + u2`, `z2 = u1 - u2`.
    pub fn u_coordinates() -> Self {
        Self::real(&[[1.0, 1.0], [1.0, -1.0]])
    }

    /// u-coordinates with the normal direction first: `x1 = u2`, `x2 = u1`.
    pub fn u_coordinates_normal_first() -> Self {
        Self::real(&[[1.0, 1.0], [-1.0, 1.0]])
    }

    /// `x1 = z2 - z1`, `x2 = z1`: the jet direction `d/dx1` is `d/dz2` along the diagonal.
    pub fn diagonal_normal_first() -> Self {
        Self::real(&[[0.0, 1.0], [1.0, 1.0]])
    }

    fn row(&self, i: usize, conj: bool, slot: fn(usize) -> Expr) -> Expr {
        let mut acc = Expr::real(0.0);
        for (j, &a) in self.matrix[i].iter().enumerate() {
            let a = if conj { a.conj() } else { a };
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = slot(j + 1);
            acc = if a == Complex64::new(-1.0, 0.0) {
                sub(acc, v)
            } else {
                add(acc, mul(Expr::Const(a), v))
            };
        }
        let b = if conj {
            self.shift[i].conj()
        } else {
            self.shift[i]
        };
        add(acc, Expr::Const(b))
    }

    pub fn apply(&self, e: &Expr) -> Expr {
        e.map_vars(&|v| match v.slot {
            Slot::Z => self.row(v.index - 1, false, Expr::z),
            Slot::Wb => self.row(v.index - 1, true, Expr::wb),
        })
    }

    /// Old coordinates of a point given in new coordinates.
    pub fn map_point(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.matrix
            .iter()
            .zip(&self.shift)
            .map(|(row, b)| row.iter().zip(x).map(|(a, v)| a * v).sum::<Complex64>() + b)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rt(src: &str, dim: usize) -> Expr {
        let e = parse(src, dim).unwrap();
        let back = parse(&serialize(&e), dim).unwrap();
        assert_eq!(e, back, "{src} -> {}", serialize(&e));
        e
    }

    #[test]
    fn parses_hardy_power() {
        let e = rt("(1 - z1*wb1)^(-l)", 1);
        match e {
            Expr::Pow(base, x) => {
                assert!(matches!(&*base, Expr::Sub(..)));
                assert_eq!(*x, Expr::Neg(Expr::param("l").into()));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn serializes_negative_exponent() {
        let e = pow(
            sub(Expr::real(1.0), mul(Expr::z(1), Expr::wb(1))),
            Expr::real(-2.0),
        );
        assert_eq!(serialize(&e), "(1 - z1*wb1)^(-2)");
        assert_eq!(parse("(1 - z1*wb1)^(-2)", 1).unwrap(), e);
        assert_eq!(parse("(1 - z1*wb1)^-2", 1).unwrap(), e);
    }

    #[test]
    fn rejects_out_of_range_variable() {
        assert!(matches!(
            parse("z3", 2),
            Err(Error::VariableOutOfRange { .. })
        ));
        assert!(matches!(
            parse("wb0", 2),
            Err(Error::VariableOutOfRange { .. })
        ));
    }

    #[test]
    fn unbalanced_paren_offset() {
        assert_eq!(
            parse("(1 - z1*wb1", 1).unwrap_err(),
            Error::Syntax {
                offset: 12,
                message: "expected `)`".into()
            }
        );
    }

    #[test]
    fn unknown_function() {
        assert!(matches!(
            parse("sin(z1)", 1),
            Err(Error::UnknownIdentifier { offset: 1, .. })
        ));
    }

    #[test]
    fn non_real_exponent() {
        assert!(matches!(
            parse("z1^z1", 1),
            Err(Error::NonRealExponent { .. })
        ));
        assert!(matches!(
            parse("z1^(2i)", 1),
            Err(Error::NonRealExponent { .. })
        ));
        assert!(matches!(
            parse("z1^2i", 1),
            Err(Error::NonRealExponent { .. })
        ));
        assert!(parse("z1^(a - 1)", 1).is_ok());
    }

    #[test]
    fn literals() {
        assert_eq!(
            parse("1 + 2i", 1).unwrap(),
            Expr::Const(Complex64::new(1.0, 2.0))
        );
        assert_eq!(parse("-3", 1).unwrap(), Expr::real(-3.0));
        assert_eq!(
            parse("-2^2", 1).unwrap(),
            Expr::Neg(Expr::Pow(Expr::real(2.0).into(), Expr::real(2.0).into()).into())
        );
        rt("1 - 2.5i", 1);
        rt("-(1) + 2i*z1 - -3", 1);
        rt("-(-4i)", 1);
        let tricky = Expr::Add(
            Expr::real(1.0).into(),
            Expr::Const(Complex64::new(0.0, 2.0)).into(),
        );
        assert_eq!(parse(&serialize(&tricky), 1).unwrap(), tricky);
    }

    #[test]
    fn precedence_round_trip() {
        for src in [
            "a - (b - c)",
            "a/(b*c)",
            "(a/b)*c",
            "-(x + y)*z1",
            "(z1^2)^3",
            "exp(log(z1 + wb1))^(p*2)",
            "x*-y",
            "((1 - z1*wb2)*(1 - z2*wb1))^(-b)",
        ] {
            rt(src, 2);
        }
    }

    #[test]
    fn kernel_file() {
        let spec = KernelSpec::from_file_contents(
            "# bidisc\ndim = 2\nparams = l=1, m=2\nkernel = (1 - z1*wb1)^(-l) * (1 - z2*wb2)^(-m)\n",
        )
        .unwrap();
        assert_eq!(spec.dim, 2);
        assert_eq!(spec.params["m"], 2.0);
        assert!(KernelSpec::from_file_contents("kernel = z1").is_err());
    }

    #[test]
    fn affine_chart() {
        let k = product_kernel(&[1.0, 1.0]);
        let u = AffineMap::u_coordinates().apply(&k);
        assert!(serialize(&u).contains("z1 + z2"));
        let p = AffineMap::u_coordinates()
            .map_point(&[Complex64::new(0.1, 0.0), Complex64::new(0.2, 0.0)]);
        assert!((p[1].re + 0.1).abs() < 1e-15);
    }
}
