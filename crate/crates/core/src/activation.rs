//! Element-wise activation functions, their derivatives, and the chain rule
//! for an activation applied to a matrix-valued function.

use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::matrix::{BlockDerivative, Matrix};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;
pub const DEFAULT_ELU_ALPHA: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    Identity,
    Sigmoid,
    Relu,
    LeakyRelu { slope: f64 },
    Elu { alpha: f64 },
    Silu,
}

#[inline]
fn sigmoid(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + libm::exp(-v))
    } else {
        let e = libm::exp(v);
        e / (1.0 + e)
    }
}

impl Activation {
    pub const fn leaky_relu() -> Self {
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        }
    }

    pub const fn elu() -> Self {
        Activation::Elu {
            alpha: DEFAULT_ELU_ALPHA,
        }
    }

    /// One of each kind with default parameters.
    pub const ALL: [Activation; 6] = [
        Activation::Identity,
        Activation::Sigmoid,
        Activation::Relu,
        Activation::LeakyRelu {
            slope: DEFAULT_LEAKY_SLOPE,
        },
        Activation::Elu {
            alpha: DEFAULT_ELU_ALPHA,
        },
        Activation::Silu,
    ];

    pub fn validate(&self) -> Result<()> {
        match *self {
            Activation::LeakyRelu { slope: p } | Activation::Elu { alpha: p } if !(p.is_finite() && p > 0.0) => {
                Err(Error::Config(alloc::format!("activation parameter must be finite and positive, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Sigmoid => "sigmoid",
            Activation::Relu => "relu",
            Activation::LeakyRelu { .. } => "leaky_relu",
            Activation::Elu { .. } => "elu",
            Activation::Silu => "silu",
        }
    }

    /// Whether σ′ is discontinuous at zero.
    pub fn has_kink(&self) -> bool {
        match *self {
            Activation::Relu | Activation::LeakyRelu { .. } => true,
            Activation::Elu { alpha } => alpha != 1.0,
            _ => false,
        }
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            Activation::Identity => v,
            Activation::Sigmoid => sigmoid(v),
            Activation::Relu => {
                if v > 0.0 {
                    v
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if v > 0.0 {
                    v
                } else {
                    slope * v
                }
            }
            Activation::Elu { alpha } => {
                if v > 0.0 {
                    v
                } else {
                    alpha * libm::expm1(v)
                }
            }
            Activation::Silu => v * sigmoid(v),
        }
    }

    /// σ′(v). At zero: ReLU gives 0, LeakyReLU gives its slope.
    #[inline]
    pub fn deriv(&self, v: f64) -> f64 {
        match *self {
            Activation::Identity => 1.0,
            Activation::Sigmoid => {
                let s = sigmoid(v);
                s * (1.0 - s)
            }
            Activation::Relu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu { slope } => {
                if v > 0.0 {
                    1.0
                } else {
                    slope
                }
            }
            Activation::Elu { alpha } => {
                if v > 0.0 {
                    1.0
                } else {
                    alpha * libm::exp(v)
                }
            }
            Activation::Silu => {
                let s = sigmoid(v);
                s * (1.0 + v * (1.0 - s))
            }
        }
    }

    pub fn apply(&self, x: &Matrix) -> Matrix {
        x.map(|v| self.eval(v))
    }

    pub fn apply_deriv(&self, x: &Matrix) -> Matrix {
        x.map(|v| self.deriv(v))
    }

    /// Derivative of `Σ(F(W))` given `f = F(W)` (`m×n`) and `df = ∂F/∂W` with
    /// outer shape `p×q`: `(J_{p×q} ⊗ Σ′(f)) ⊙ df`.
    pub fn chain_deriv(&self, f: &Matrix, df: &BlockDerivative) -> Result<BlockDerivative> {
        if df.inner() != f.shape() {
            return Err(Error::Dimension {
                op: "chain_deriv",
                left: f.shape(),
                right: df.inner(),
            });
        }
        let (p, q) = df.outer();
        let mask = Matrix::ones(p, q).kron(&self.apply_deriv(f));
        BlockDerivative::new(df.outer(), df.inner(), mask.hadamard(df.payload())?)
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Activation::LeakyRelu { slope } if slope != DEFAULT_LEAKY_SLOPE => write!(f, "leaky_relu({slope})"),
            Activation::Elu { alpha } if alpha != DEFAULT_ELU_ALPHA => write!(f, "elu({alpha})"),
            other => f.write_str(other.name()),
        }
    }
}

/// Parses `identity`, `sigmoid`, `relu`, `leaky_relu`, `elu`, `silu`; the two
/// parameterized kinds also accept `leaky_relu(0.2)` / `elu(0.5)`.
impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, param) = match s.find('(') {
            Some(open) if s.ends_with(')') => {
                let raw = &s[open + 1..s.len() - 1];
                let value: f64 = raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::Config(alloc::format!("bad activation parameter in {s:?}")))?;
                (s[..open].trim(), Some(value))
            }
            Some(_) => return Err(Error::Config(alloc::format!("unterminated activation parameter in {s:?}"))),
            None => (s, None),
        };
        let act = match (name, param) {
            ("identity", None) => Activation::Identity,
            ("sigmoid", None) => Activation::Sigmoid,
            ("relu", None) => Activation::Relu,
            ("silu", None) => Activation::Silu,
            ("leaky_relu", p) => Activation::LeakyRelu {
                slope: p.unwrap_or(DEFAULT_LEAKY_SLOPE),
            },
            ("elu", p) => Activation::Elu {
                alpha: p.unwrap_or(DEFAULT_ELU_ALPHA),
            },
            _ => return Err(Error::Config(alloc::format!("unknown activation {s:?}"))),
        };
        act.validate()?;
        Ok(act)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn apply_examples() {
        let m = Matrix::from_rows(&[[1.5, -2.0], [0.0, 3.0]]).unwrap();
        assert_eq!(Activation::Identity.apply(&m), m);
        assert_eq!(Activation::Sigmoid.apply(&Matrix::zeros(1, 1)).get(0, 0), 0.5);
        let r = Activation::Relu.apply(&Matrix::from_rows(&[[-1.0, 2.0]]).unwrap());
        assert_eq!(r.as_slice(), &[0.0, 2.0]);
    }

    #[test]
    fn deriv_examples() {
        let m = Matrix::from_fn(3, 2, |i, j| i as f64 - j as f64);
        assert_eq!(Activation::Identity.apply_deriv(&m), Matrix::ones(3, 2));
        assert_eq!(Activation::Sigmoid.deriv(0.0), 0.25);
        assert_eq!(Activation::Relu.deriv(0.0), 0.0);
        assert_eq!(Activation::leaky_relu().deriv(0.0), DEFAULT_LEAKY_SLOPE);
    }

    #[test]
    fn sigmoid_is_stable_at_extremes() {
        assert_eq!(Activation::Sigmoid.eval(-800.0), 0.0);
        assert_eq!(Activation::Sigmoid.eval(800.0), 1.0);
        assert!(Activation::Sigmoid.eval(-45.0) > 0.0);
        assert!(Activation::Silu.eval(-800.0).is_finite());
    }

    #[test]
    fn derivatives_match_central_differences() {
        // Fixed pseudo-random points away from zero.
        let mut state = 0x1234_5678_9abc_def0_u64;
        let h = 1e-6;
        for _ in 0..64 {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            let mut v = ((state >> 11) as f64 / (1u64 << 53) as f64) * 8.0 - 4.0;
            if v.abs() < 1e-3 {
                v += 0.5;
            }
            for act in Activation::ALL {
                let fd = (act.eval(v + h) - act.eval(v - h)) / (2.0 * h);
                let an = act.deriv(v);
                let rel = (fd - an).abs() / an.abs().max(1e-3);
                assert!(rel <= 1e-6, "{act} at {v}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn chain_deriv_identity_is_bitwise_noop() {
        let f = Matrix::from_fn(2, 3, |i, j| (i as f64 - 0.3) * (j as f64 + 0.7));
        let payload = Matrix::from_fn(8, 9, |i, j| libm::sin((i * 9 + j) as f64));
        let df = BlockDerivative::new((4, 3), (2, 3), payload).unwrap();
        assert_eq!(Activation::Identity.chain_deriv(&f, &df).unwrap(), df);
        let positive = f.map(|v| v.abs() + 1.0);
        assert_eq!(Activation::Relu.chain_deriv(&positive, &df).unwrap(), df);
        let bad = Matrix::zeros(3, 3);
        assert!(Activation::Relu.chain_deriv(&bad, &df).is_err());
    }

    #[test]
    fn parse_names() {
        for act in Activation::ALL {
            assert_eq!(act.to_string().parse::<Activation>().unwrap(), act);
        }
        assert_eq!(
            "leaky_relu(0.2)".parse::<Activation>().unwrap(),
            Activation::LeakyRelu { slope: 0.2 }
        );
        assert!("elu(-1)".parse::<Activation>().is_err());
        assert!("softmax".parse::<Activation>().is_err());
    }
}
