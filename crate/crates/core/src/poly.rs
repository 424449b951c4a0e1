//! Real polynomials in `(z, z̄)` with exact rational coefficients.
//!
//! A defining function `ρ` is stored as a canonical list of terms
//! `c · z^a · z̄^b`. Coefficients are kept exactly for bookkeeping and
//! hashing; a floating-point copy is used for evaluation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One monomial `coeff · z^z_exp · z̄^zbar_exp`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: BigRational,
    pub z_exp: Vec<u32>,
    pub zbar_exp: Vec<u32>,
}

impl Term {
    /// Weighted orbit degree `⟨a − b, w⟩`; the term picks up `e^{i·deg·θ}`
    /// under the action.
    pub fn orbit_degree(&self, weights: &[u32]) -> i64 {
        self.z_exp
            .iter()
            .zip(&self.zbar_exp)
            .zip(weights)
            .map(|((&a, &b), &w)| (a as i64 - b as i64) * w as i64)
            .sum()
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.coeff)?;
        for (j, (&a, &b)) in self.z_exp.iter().zip(&self.zbar_exp).enumerate() {
            if a > 0 {
                write!(f, "·z{}^{}", j + 1, a)?;
            }
            if b > 0 {
                write!(f, "·z̄{}^{}", j + 1, b)?;
            }
        }
        Ok(())
    }
}

/// JSON form of a term: `{ "coeff": "p/q", "z_exponents": [..], "zbar_exponents": [..] }`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermSpec {
    pub coeff: String,
    pub z_exponents: Vec<u32>,
    pub zbar_exponents: Vec<u32>,
}

#[derive(Clone, Debug)]
struct FloatTerm {
    coeff: f64,
    z_exp: Vec<i32>,
    zbar_exp: Vec<i32>,
}

/// Polynomial in `n` complex variables and their conjugates.
#[derive(Clone, Debug)]
pub struct Polynomial {
    n: usize,
    terms: Vec<Term>,
    float: Vec<FloatTerm>,
}

type ExpKey = (Vec<u32>, Vec<u32>);

impl Polynomial {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        let mut merged: BTreeMap<ExpKey, BigRational> = BTreeMap::new();
        for t in terms {
            if t.z_exp.len() != n || t.zbar_exp.len() != n {
                return Err(Error::InvalidSpec(format!(
                    "term {t} has exponent vectors of the wrong length (expected {n})"
                )));
            }
            *merged
                .entry((t.z_exp, t.zbar_exp))
                .or_insert_with(BigRational::zero) += t.coeff;
        }
        let terms: Vec<Term> = merged
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|((z_exp, zbar_exp), coeff)| Term {
                coeff,
                z_exp,
                zbar_exp,
            })
            .collect();
        let float = terms
            .iter()
            .map(|t| FloatTerm {
                coeff: t.coeff.to_f64().unwrap_or(f64::NAN),
                z_exp: t.z_exp.iter().map(|&e| e as i32).collect(),
                zbar_exp: t.zbar_exp.iter().map(|&e| e as i32).collect(),
            })
            .collect();
        Ok(Self { n, terms, float })
    }

    pub fn from_specs(n: usize, specs: &[TermSpec]) -> Result<Self> {
        let terms = specs
            .iter()
            .map(|s| {
                let coeff = parse_rational(&s.coeff)?;
                Ok(Term {
                    coeff,
                    z_exp: s.z_exponents.clone(),
                    zbar_exp: s.zbar_exponents.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, terms)
    }

    pub fn to_specs(&self) -> Vec<TermSpec> {
        self.terms
            .iter()
            .map(|t| TermSpec {
                coeff: t.coeff.to_string(),
                z_exponents: t.z_exp.clone(),
                zbar_exponents: t.zbar_exp.clone(),
            })
            .collect()
    }

    pub fn zero(n: usize) -> Self {
        Self::new(n, Vec::new()).expect("empty polynomial is valid")
    }

    pub fn constant(n: usize, c: BigRational) -> Self {
        Self::new(
            n,
            vec![Term {
                coeff: c,
                z_exp: vec![0; n],
                zbar_exp: vec![0; n],
            }],
        )
        .expect("constant polynomial is valid")
    }

    /// Holomorphic monomial `z^exp` with coefficient 1.
    pub fn monomial(exp: &[u32]) -> Self {
        let n = exp.len();
        Self::new(
            n,
            vec![Term {
                coeff: BigRational::one(),
                z_exp: exp.to_vec(),
                zbar_exp: vec![0; n],
            }],
        )
        .expect("monomial is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// Complex conjugate: swaps the roles of `z` and `z̄`.
    pub fn conj(&self) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: t.coeff.clone(),
                z_exp: t.zbar_exp.clone(),
                zbar_exp: t.z_exp.clone(),
            })
            .collect();
        Self::new(self.n, terms).expect("conjugate keeps arity")
    }

    pub fn add(&self, other: &Self) -> Self {
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::new(self.n, terms).expect("sum keeps arity")
    }

    pub fn scale(&self, c: &BigRational) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: &t.coeff * c,
                ..t.clone()
            })
            .collect();
        Self::new(self.n, terms).expect("scaling keeps arity")
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Term {
                    coeff: &a.coeff * &b.coeff,
                    z_exp: a.z_exp.iter().zip(&b.z_exp).map(|(x, y)| x + y).collect(),
                    zbar_exp: a
                        .zbar_exp
                        .iter()
                        .zip(&b.zbar_exp)
                        .map(|(x, y)| x + y)
                        .collect(),
                });
            }
        }
        Self::new(self.n, terms).expect("product keeps arity")
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut out = Self::constant(self.n, BigRational::one());
        for _ in 0..e {
            out = out.mul(self);
        }
        out
    }

    /// `|p|^{2e} = p^e · conj(p)^e`.
    pub fn abs_pow2(&self, e: u32) -> Self {
        let pe = self.pow(e);
        pe.mul(&pe.conj())
    }

    /// True when the polynomial equals its own conjugate (real-valued).
    pub fn real_check(&self) -> Result<()> {
        let conj = self.conj();
        for t in &self.terms {
            let partner = conj
                .terms
                .iter()
                .find(|c| c.z_exp == t.z_exp && c.zbar_exp == t.zbar_exp);
            match partner {
                Some(c) if c.coeff == t.coeff => {}
                _ => return Err(Error::NonReal(t.to_string())),
            }
        }
        Ok(())
    }

    /// Every term has `a = b`, so the polynomial depends only on `|z_j|`.
    pub fn is_torus_invariant(&self) -> bool {
        self.terms.iter().all(|t| t.z_exp == t.zbar_exp)
    }

    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        let mut acc = Complex64::zero();
        for t in &self.float {
            acc += t.coeff * mono(z, &t.z_exp) * mono(&zc, &t.zbar_exp);
        }
        acc
    }

    /// `∂p/∂z_j` for all `j`.
    pub fn grad_z(&self, z: &[Complex64]) -> Vec<Complex64> {
        let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        let mut g = vec![Complex64::zero(); self.n];
        for t in &self.float {
            let bar = mono(&zc, &t.zbar_exp);
            for (j, gj) in g.iter_mut().enumerate() {
                let a = t.z_exp[j];
                if a == 0 {
                    continue;
                }
                let mut e = t.z_exp.clone();
                e[j] -= 1;
                *gj += t.coeff * a as f64 * mono(z, &e) * bar;
            }
        }
        g
    }

    /// Mixed Hessian `∂²p/∂z_j∂z̄_k`, row-major `n × n`.
    pub fn hessian_mixed(&self, z: &[Complex64]) -> Vec<Complex64> {
        let n = self.n;
        let zc: Vec<Complex64> = z.iter().map(|v| v.conj()).collect();
        let mut h = vec![Complex64::zero(); n * n];
        for t in &self.float {
            for j in 0..n {
                if t.z_exp[j] == 0 {
                    continue;
                }
                let mut ea = t.z_exp.clone();
                ea[j] -= 1;
                let hol = t.coeff * t.z_exp[j] as f64 * mono(z, &ea);
                for k in 0..n {
                    if t.zbar_exp[k] == 0 {
                        continue;
                    }
                    let mut eb = t.zbar_exp.clone();
                    eb[k] -= 1;
                    h[j * n + k] += hol * t.zbar_exp[k] as f64 * mono(&zc, &eb);
                }
            }
        }
        h
    }
}

fn mono(z: &[Complex64], exp: &[i32]) -> Complex64 {
    let mut v = Complex64::one();
    for (zj, &e) in z.iter().zip(exp) {
        if e != 0 {
            v *= zj.powi(e);
        }
    }
    v
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"-0.25"`.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::InvalidSpec(format!("cannot parse rational coefficient {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num = BigInt::from_str(num.trim()).map_err(|_| bad())?;
        let den = BigInt::from_str(den.trim()).map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let digits = format!("{int}{frac}");
        let num = BigInt::from_str(&digits).map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(num, den));
    }
    BigInt::from_str(s)
        .map(BigRational::from_integer)
        .map_err(|_| bad())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_rationals() {
        assert_eq!(parse_rational("1/2").unwrap(), BigRational::new(1.into(), 2.into()));
        assert_eq!(parse_rational("-3").unwrap(), BigRational::from_integer((-3).into()));
        assert_eq!(
            parse_rational("0.25").unwrap(),
            BigRational::new(1.into(), 4.into())
        );
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn abs_pow_expands_and_is_real() {
        // |z1^2 + z2|^4
        let p = Polynomial::monomial(&[2, 0]).add(&Polynomial::monomial(&[0, 1]));
        let q = p.abs_pow2(2);
        assert_eq!(q.terms().len(), 9);
        q.real_check().unwrap();
        let z = [c(0.3, -0.4), c(0.1, 0.7)];
        let direct = (z[0] * z[0] + z[1]).norm().powi(4);
        assert!((q.eval(&z).re - direct).abs() < 1e-14);
        assert!(q.eval(&z).im.abs() < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let p = Polynomial::monomial(&[2, 0])
            .add(&Polynomial::monomial(&[0, 1]))
            .abs_pow2(2);
        let z = [c(0.3, -0.4), c(0.1, 0.7)];
        let h = 1e-6;
        let g = p.grad_z(&z);
        let hm = p.hessian_mixed(&z);
        for j in 0..2 {
            let shift = |dx: f64, dy: f64| {
                let mut w = z;
                w[j] += c(dx, dy);
                w
            };
            let dx = (p.eval(&shift(h, 0.0)) - p.eval(&shift(-h, 0.0))) / (2.0 * h);
            let dy = (p.eval(&shift(0.0, h)) - p.eval(&shift(0.0, -h))) / (2.0 * h);
            let dz = (dx - Complex64::i() * dy) / 2.0;
            assert!((dz - g[j]).norm() < 1e-8, "grad {j}");
            for k in 0..2 {
                // ∂/∂z̄_k of ∂p/∂z_j
                let gs = |dx: f64, dy: f64| {
                    let mut w = z;
                    w[k] += c(dx, dy);
                    p.grad_z(&w)[j]
                };
                let ddx = (gs(h, 0.0) - gs(-h, 0.0)) / (2.0 * h);
                let ddy = (gs(0.0, h) - gs(0.0, -h)) / (2.0 * h);
                let dzbar = (ddx + Complex64::i() * ddy) / 2.0;
                assert!((dzbar - hm[j * 2 + k]).norm() < 1e-7, "hess {j}{k}");
            }
        }
    }

    #[test]
    fn detects_non_real() {
        let p = Polynomial::monomial(&[1, 0]);
        assert!(matches!(p.real_check(), Err(Error::NonReal(_))));
    }

    #[test]
    fn merges_and_drops_zero_terms() {
        let p = Polynomial::monomial(&[1, 1]);
        let q = p.add(&p.scale(&BigRational::from_integer((-1).into())));
        assert!(q.terms().is_empty());
    }
}
