//! Real potentials on the sphere, given either as polynomials in the ambient
//! coordinates `(x₁, x₂, x₃)` restricted to `S²` or by spherical-harmonic
//! coefficients. On a Tannery surface the point `(θ, φ)` is identified with
//! the unit vector of the same spherical angles.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::legendre::{degree_order, flat_index, spherical_harmonics};

/// `coef · x₁^a x₂^b x₃^c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, x: [f64; 3]) -> f64 {
        self.coef * x[0].powi(self.powers[0] as i32) * x[1].powi(self.powers[1] as i32) * x[2].powi(self.powers[2] as i32)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Polynomial(Vec<Monomial>),
    /// Coefficients in flat `(l, m)` order; satisfies `c_{l,−m} = (−1)^m conj(c_{l,m})`.
    Harmonic(Vec<Complex64>),
}

impl Potential {
    pub fn constant(c: f64) -> Self {
        Self::Polynomial(vec![Monomial { coef: c, powers: [0, 0, 0] }])
    }

    pub fn monomial(coef: f64, powers: [u32; 3]) -> Self {
        Self::Polynomial(vec![Monomial { coef, powers }])
    }

    /// `V = x₃`.
    pub fn x3() -> Self {
        Self::monomial(1.0, [0, 0, 1])
    }

    /// `V = x₃²`.
    pub fn x3_squared() -> Self {
        Self::monomial(1.0, [0, 0, 2])
    }

    /// Harmonic coefficients, checked against the reality constraint.
    pub fn harmonic(coeffs: Vec<Complex64>) -> Result<Self> {
        let n = coeffs.len();
        let lmax = (n as f64).sqrt() as usize;
        if lmax * lmax != n || n == 0 {
            return Err(Error::Domain(format!("harmonic coefficient count {n} is not a perfect square")));
        }
        let scale = coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
        for (i, c) in coeffs.iter().enumerate() {
            let (l, m) = degree_order(i);
            let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            let partner = coeffs[flat_index(l, -m)];
            if (c - sign * partner.conj()).norm() > 1e-12 * scale {
                return Err(Error::Domain(format!(
                    "harmonic coefficients violate the reality constraint at (l, m) = ({l}, {m})"
                )));
            }
        }
        Ok(Self::Harmonic(coeffs))
    }

    /// Polynomial degree in ambient coordinates, or the top harmonic degree.
    pub fn degree(&self) -> usize {
        match self {
            Self::Polynomial(terms) => terms.iter().map(|t| t.degree() as usize).max().unwrap_or(0),
            Self::Harmonic(c) => (c.len() as f64).sqrt() as usize - 1,
        }
    }

    /// Value at a point of the unit sphere.
    pub fn eval(&self, x: [f64; 3]) -> f64 {
        match self {
            Self::Polynomial(terms) => terms.iter().map(|t| t.eval(x)).sum(),
            Self::Harmonic(c) => {
                let lmax = self.degree();
                let theta = (x[0] * x[0] + x[1] * x[1]).sqrt().atan2(x[2]);
                let phi = x[1].atan2(x[0]);
                let y = spherical_harmonics(lmax, theta, phi);
                c.iter().zip(&y).map(|(a, b)| (a * b).re).sum()
            }
        }
    }

    /// `V(−x) = −V(x)` identically, decided from the representation.
    pub fn is_odd(&self) -> bool {
        match self {
            Self::Polynomial(terms) => terms.iter().all(|t| t.coef == 0.0 || t.degree() % 2 == 1),
            Self::Harmonic(c) => c.iter().enumerate().all(|(i, a)| *a == Complex64::new(0.0, 0.0) || degree_order(i).0 % 2 == 1),
        }
    }

    pub fn record(&self) -> PotentialRecord {
        match self {
            Self::Polynomial(terms) => PotentialRecord {
                kind: "polynomial".into(),
                expr: Some(format_polynomial(terms)),
                coefficients: vec![],
            },
            Self::Harmonic(c) => PotentialRecord {
                kind: "harmonic".into(),
                expr: None,
                coefficients: c
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() != 0.0)
                    .map(|(i, a)| {
                        let (l, m) = degree_order(i);
                        HarmonicTerm { l, m, re: a.re, im: a.im }
                    })
                    .collect(),
            },
        }
    }

    /// Parses `"x3^2"`, `"0.5*x1*x2 - 2*x3 + 1"` and similar sums of monomials.
    pub fn parse_polynomial(expr: &str) -> Result<Self> {
        let err = |msg: String| Error::Config(format!("potential expression {expr:?}: {msg}"));
        let cleaned: String = expr.chars().filter(|c| !c.is_whitespace()).collect();
        if cleaned.is_empty() {
            return Err(err("empty".into()));
        }
        // Split into signed terms, keeping exponent signs such as 1e-3 intact.
        let mut terms = Vec::new();
        let mut start = 0;
        let bytes = cleaned.as_bytes();
        for i in 1..bytes.len() {
            if (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E' | b'*' | b'^' | b'+' | b'-') {
                terms.push(&cleaned[start..i]);
                start = i;
            }
        }
        terms.push(&cleaned[start..]);
        let mut out = Vec::new();
        for term in terms {
            let (sign, body) = match term.as_bytes()[0] {
                b'-' => (-1.0, &term[1..]),
                b'+' => (1.0, &term[1..]),
                _ => (1.0, term),
            };
            if body.is_empty() {
                return Err(err("dangling sign".into()));
            }
            let mut mono = Monomial { coef: sign, powers: [0; 3] };
            for factor in body.split('*') {
                let (base, exp) = match factor.split_once('^') {
                    Some((b, e)) => (b, e.parse::<u32>().map_err(|_| err(format!("bad exponent in {factor:?}")))?),
                    None => (factor, 1),
                };
                match base {
                    "x1" | "x" => mono.powers[0] += exp,
                    "x2" | "y" => mono.powers[1] += exp,
                    "x3" | "z" => mono.powers[2] += exp,
                    num => {
                        let v: f64 = num.parse().map_err(|_| err(format!("unknown factor {factor:?}")))?;
                        mono.coef *= v.powi(exp as i32);
                    }
                }
            }
            if !mono.coef.is_finite() {
                return Err(err("non-finite coefficient".into()));
            }
            out.push(mono);
        }
        Ok(Self::Polynomial(out))
    }
}

fn format_polynomial(terms: &[Monomial]) -> String {
    let names = ["x1", "x2", "x3"];
    let mut out = String::new();
    for (i, t) in terms.iter().enumerate() {
        let sign = if t.coef < 0.0 { "-" } else { "+" };
        if i == 0 {
            if t.coef < 0.0 {
                out.push('-');
            }
        } else {
            out.push_str(&format!(" {sign} "));
        }
        out.push_str(&format!("{:e}", t.coef.abs()));
        for (k, &p) in t.powers.iter().enumerate() {
            if p == 1 {
                out.push_str(&format!("*{}", names[k]));
            } else if p > 1 {
                out.push_str(&format!("*{}^{p}", names[k]));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTerm {
    pub l: usize,
    pub m: i64,
    pub re: f64,
    pub im: f64,
}

/// Text form of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PotentialRecord {
    /// `"polynomial"` or `"harmonic"`.
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub coefficients: Vec<HarmonicTerm>,
}

impl TryFrom<PotentialRecord> for Potential {
    type Error = Error;

    fn try_from(rec: PotentialRecord) -> Result<Self> {
        match rec.kind.as_str() {
            "polynomial" => {
                let expr = rec.expr.ok_or_else(|| Error::Config("potential.expr is required for kind = polynomial".into()))?;
                Potential::parse_polynomial(&expr)
            }
            "harmonic" => {
                let lmax = rec.coefficients.iter().map(|t| t.l).max().ok_or_else(|| {
                    Error::Config("potential.coefficients must be non-empty for kind = harmonic".into())
                })?;
                let mut c = vec![Complex64::new(0.0, 0.0); (lmax + 1) * (lmax + 1)];
                for t in &rec.coefficients {
                    if t.m.unsigned_abs() as usize > t.l {
                        return Err(Error::Config(format!("potential.coefficients: |m| > l at ({}, {})", t.l, t.m)));
                    }
                    c[flat_index(t.l, t.m)] = Complex64::new(t.re, t.im);
                }
                Potential::harmonic(c).map_err(|e| Error::Config(format!("potential.coefficients: {e}")))
            }
            other => Err(Error::Config(format!(
                "potential.kind must be \"polynomial\" or \"harmonic\", got {other:?}"
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_polynomials() {
        let v = Potential::parse_polynomial("0.5*x1*x2 - 2*x3^2 + 1").unwrap();
        let x = [0.6, 0.0, 0.8];
        assert!((v.eval(x) - (1.0 - 2.0 * 0.64)).abs() < 1e-15);
        assert_eq!(v.degree(), 2);
        assert!(!v.is_odd());
        assert!(Potential::parse_polynomial("x3 - 1e-3*x1^3").unwrap().is_odd());
        assert!(Potential::parse_polynomial("x4").is_err());
        assert!(Potential::parse_polynomial("").is_err());
        let back = Potential::try_from(v.record()).unwrap();
        assert!((back.eval(x) - v.eval(x)).abs() < 1e-15);
    }

    #[test]
    fn harmonic_matches_polynomial() {
        // x₃ = √(4π/3) Y₁⁰.
        let mut c = vec![Complex64::new(0.0, 0.0); 4];
        c[flat_index(1, 0)] = Complex64::new((4.0 * std::f64::consts::PI / 3.0).sqrt(), 0.0);
        let v = Potential::harmonic(c).unwrap();
        let x = [0.48, 0.6, 0.64];
        assert!((v.eval(x) - 0.64).abs() < 1e-14);
        assert!(v.is_odd());
        let mut bad = vec![Complex64::new(0.0, 0.0); 4];
        bad[flat_index(1, 1)] = Complex64::new(1.0, 0.0);
        assert!(Potential::harmonic(bad).is_err());
    }
}
