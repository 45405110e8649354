//! The CPPN activation dictionary.
//!
//! Every function here is total over finite inputs: the exponential family is
//! evaluated on a clamped argument, `inverse` and `log` have guarded domains,
//! and the polynomial functions saturate their input so that the result never
//! overflows.

use rand::Rng;
use serde::{Deserialize, Serialize};

// Polynomial activations saturate their argument here so x^3 stays finite.
const POLY_INPUT_LIMIT: f64 = 1e100;

const SELU_ALPHA: f64 = 1.6733;
const SELU_SCALE: f64 = 1.0507;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Sine,
    NegSine,
    Abs,
    NegAbs,
    Square,
    NegSquare,
    SqAbs,
    NegSqAbs,
    Sigmoid,
    Clamped,
    Cube,
    Exp,
    Gauss,
    Hat,
    Identity,
    Inverse,
    Log,
    Relu,
    Selu,
    Lelu,
    Elu,
    Softplus,
    Tanh,
}

impl Activation {
    pub const ALL: [Activation; 23] = [
        Activation::Sine,
        Activation::NegSine,
        Activation::Abs,
        Activation::NegAbs,
        Activation::Square,
        Activation::NegSquare,
        Activation::SqAbs,
        Activation::NegSqAbs,
        Activation::Sigmoid,
        Activation::Clamped,
        Activation::Cube,
        Activation::Exp,
        Activation::Gauss,
        Activation::Hat,
        Activation::Identity,
        Activation::Inverse,
        Activation::Log,
        Activation::Relu,
        Activation::Selu,
        Activation::Lelu,
        Activation::Elu,
        Activation::Softplus,
        Activation::Tanh,
    ];

    /// Draws a function uniformly from the dictionary.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::ALL[rng.random_range(0..Self::ALL.len())]
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Sine => "sine",
            Activation::NegSine => "neg_sine",
            Activation::Abs => "abs",
            Activation::NegAbs => "neg_abs",
            Activation::Square => "square",
            Activation::NegSquare => "neg_square",
            Activation::SqAbs => "sq_abs",
            Activation::NegSqAbs => "neg_sq_abs",
            Activation::Sigmoid => "sigmoid",
            Activation::Clamped => "clamped",
            Activation::Cube => "cube",
            Activation::Exp => "exp",
            Activation::Gauss => "gauss",
            Activation::Hat => "hat",
            Activation::Identity => "identity",
            Activation::Inverse => "inverse",
            Activation::Log => "log",
            Activation::Relu => "relu",
            Activation::Selu => "selu",
            Activation::Lelu => "lelu",
            Activation::Elu => "elu",
            Activation::Softplus => "softplus",
            Activation::Tanh => "tanh",
        }
    }

    pub fn apply(self, x: f64) -> f64 {
        evaluate_activation(self, x)
    }
}

/// Evaluates `kind` at `x`.
pub fn evaluate_activation(kind: Activation, x: f64) -> f64 {
    let poly = || x.clamp(-POLY_INPUT_LIMIT, POLY_INPUT_LIMIT);
    match kind {
        Activation::Sine => x.sin(),
        Activation::NegSine => -x.sin(),
        Activation::Abs => x.abs(),
        Activation::NegAbs => -x.abs(),
        Activation::Square => {
            let x = poly();
            x * x
        }
        Activation::NegSquare => {
            let x = poly();
            -(x * x)
        }
        Activation::SqAbs => {
            let a = poly().abs();
            a * a
        }
        Activation::NegSqAbs => {
            let a = poly().abs();
            -(a * a)
        }
        Activation::Sigmoid => 1.0 / (1.0 + (-x.clamp(-60.0, 60.0)).exp()),
        Activation::Clamped => x.clamp(-1.0, 1.0),
        Activation::Cube => {
            let x = poly();
            x * x * x
        }
        Activation::Exp => x.clamp(-60.0, 60.0).exp(),
        Activation::Gauss => {
            let z = x.clamp(-3.4, 3.4);
            (-5.0 * z * z).exp()
        }
        Activation::Hat => (1.0 - x.abs()).max(0.0),
        Activation::Identity => x,
        Activation::Inverse => {
            if x.abs() < 1e-7 {
                0.0
            } else {
                1.0 / x
            }
        }
        Activation::Log => x.max(1e-7).ln(),
        Activation::Relu => x.max(0.0),
        Activation::Selu => {
            if x > 0.0 {
                SELU_SCALE * poly()
            } else {
                SELU_SCALE * SELU_ALPHA * (x.max(-60.0).exp() - 1.0)
            }
        }
        Activation::Lelu => {
            if x > 0.0 {
                x
            } else {
                0.005 * x
            }
        }
        Activation::Elu => {
            if x > 0.0 {
                x
            } else {
                x.max(-60.0).exp() - 1.0
            }
        }
        Activation::Softplus => {
            let z = (5.0 * x).clamp(-60.0, 60.0);
            0.2 * z.exp().ln_1p()
        }
        Activation::Tanh => x.tanh(),
    }
}
