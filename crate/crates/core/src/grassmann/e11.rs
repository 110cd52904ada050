use super::element::{GrassmannElement, Parity};
use crate::error::{Error, Result};

/// An S-point `(t, θ)` of R^{1|1}, with S modeled by the Grassmann generators.
#[derive(Clone, Debug, PartialEq)]
pub struct SuperPoint11 {
    pub t: GrassmannElement,
    pub theta: GrassmannElement,
}

impl SuperPoint11 {
    pub fn new(t: GrassmannElement, theta: GrassmannElement) -> Result<Self> {
        let p = Self { t, theta };
        p.validate()?;
        Ok(p)
    }

    pub fn identity(q: usize) -> Self {
        Self {
            t: GrassmannElement::zero(q),
            theta: GrassmannElement::zero(q),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t.num_generators() != self.theta.num_generators() {
            return Err(Error::Dimension("t and θ generator counts differ".into()));
        }
        self.t.require_parity(Parity::Even, "t")?;
        self.theta.require_parity(Parity::Odd, "θ")
    }

    pub fn inverse(&self) -> Self {
        Self {
            t: -&self.t,
            theta: -&self.theta,
        }
    }
}

/// Group law of E^{1|1}: `(t,θ)·(s,η) = (t + s + θη, θ + η)`.
pub fn e11_compose(p: &SuperPoint11, q: &SuperPoint11) -> Result<SuperPoint11> {
    p.validate()?;
    q.validate()?;
    if p.t.num_generators() != q.t.num_generators() {
        return Err(Error::Dimension("super points use different generator counts".into()));
    }
    let t = &(&p.t + &q.t) + &(&p.theta * &q.theta);
    let theta = &p.theta + &q.theta;
    Ok(SuperPoint11 { t, theta })
}
