//! Parametric bivariate stable tail dependence functions and their edge
//! increment laws.
//!
//! An edge `e = (p, c)` is oriented parent to child. The increment `M_e`
//! has CDF `x ↦ ∂ℓ(x, 1)/∂x` (right derivative) where the first argument of
//! `ℓ` belongs to the node the path leaves from. Travelling child to parent
//! uses the family with its arguments swapped.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::normal;

/// Family tag without parameters, used to request a fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FamilyKind {
    #[serde(rename = "hr")]
    HuslerReiss,
    #[serde(rename = "alog")]
    AsymLogisticSpecial,
}

impl FamilyKind {
    pub fn n_params(self) -> usize {
        match self {
            FamilyKind::HuslerReiss => 1,
            FamilyKind::AsymLogisticSpecial => 2,
        }
    }

    /// Build a family from its parameter vector (`[gamma]` or
    /// `[psi_p, psi_s]`).
    pub fn with_params(self, params: &[f64]) -> Result<EdgeFamily> {
        if params.len() != self.n_params() {
            return Err(Error::invalid(format!(
                "{self:?} takes {} parameter(s), got {}",
                self.n_params(),
                params.len()
            )));
        }
        let f = match self {
            FamilyKind::HuslerReiss => EdgeFamily::HuslerReiss { gamma: params[0] },
            FamilyKind::AsymLogisticSpecial => EdgeFamily::AsymLogisticSpecial { psi_p: params[0], psi_s: params[1] },
        };
        f.validate()?;
        Ok(f)
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hr" | "husler-reiss" | "HuslerReiss" => Ok(FamilyKind::HuslerReiss),
            "alog" | "asym-logistic" | "AsymLogisticSpecial" => Ok(FamilyKind::AsymLogisticSpecial),
            _ => Err(Error::invalid(format!("unknown family '{s}' (expected hr or alog)"))),
        }
    }
}

/// A bivariate stdf on an oriented edge.
///
/// JSON: `{"family":"hr","gamma":g}` or `{"family":"alog","psi_p":a,"psi_s":b}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "FamilyRepr", into = "FamilyRepr")]
pub enum EdgeFamily {
    /// Hüsler–Reiss with variogram entry `gamma > 0`.
    HuslerReiss { gamma: f64 },
    /// Bivariate margin of the max-linear model with node weights `psi_p`
    /// (parent) and `psi_s` (child).
    AsymLogisticSpecial { psi_p: f64, psi_s: f64 },
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family")]
enum FamilyRepr {
    #[serde(rename = "hr")]
    Hr { gamma: f64 },
    #[serde(rename = "alog")]
    Alog { psi_p: f64, psi_s: f64 },
}

impl TryFrom<FamilyRepr> for EdgeFamily {
    type Error = Error;
    fn try_from(r: FamilyRepr) -> Result<Self> {
        let f = match r {
            FamilyRepr::Hr { gamma } => EdgeFamily::HuslerReiss { gamma },
            FamilyRepr::Alog { psi_p, psi_s } => EdgeFamily::AsymLogisticSpecial { psi_p, psi_s },
        };
        f.validate()?;
        Ok(f)
    }
}

impl From<EdgeFamily> for FamilyRepr {
    fn from(f: EdgeFamily) -> Self {
        match f {
            EdgeFamily::HuslerReiss { gamma } => FamilyRepr::Hr { gamma },
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => FamilyRepr::Alog { psi_p, psi_s },
        }
    }
}

fn check_args(x: f64, y: f64) -> Result<()> {
    if x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("stdf arguments must be finite and nonnegative, got ({x}, {y})")))
    }
}

/// `ℓ(x, y)` of the Hüsler–Reiss family, without argument checks.
pub(crate) fn hr_stdf(gamma: f64, x: f64, y: f64) -> f64 {
    if x == 0.0 {
        return y;
    }
    if y == 0.0 {
        return x;
    }
    let s = gamma.sqrt();
    let r = (x / y).ln() / s;
    x * normal::cdf(r + s / 2.0) + y * normal::cdf(-r + s / 2.0)
}

pub(crate) fn alog_stdf(psi_p: f64, psi_s: f64, x: f64, y: f64) -> f64 {
    (1.0 - psi_p) * x + (1.0 - psi_s) * y + (psi_p * x).max(psi_s * y)
}

impl EdgeFamily {
    pub fn kind(&self) -> FamilyKind {
        match self {
            EdgeFamily::HuslerReiss { .. } => FamilyKind::HuslerReiss,
            EdgeFamily::AsymLogisticSpecial { .. } => FamilyKind::AsymLogisticSpecial,
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            EdgeFamily::HuslerReiss { gamma } => vec![gamma],
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => vec![psi_p, psi_s],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            EdgeFamily::HuslerReiss { gamma } => {
                if !(gamma > 0.0 && gamma.is_finite()) {
                    return Err(Error::invalid(format!("Hüsler–Reiss gamma must be positive and finite, got {gamma}")));
                }
            }
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => {
                if !((0.0..=1.0).contains(&psi_p) && (0.0..=1.0).contains(&psi_s)) {
                    return Err(Error::invalid(format!("psi values must lie in [0, 1], got ({psi_p}, {psi_s})")));
                }
            }
        }
        Ok(())
    }

    /// The same stdf expressed with the edge orientation flipped, i.e.
    /// `ℓ'(x, y) = ℓ(y, x)`.
    pub fn reversed(&self) -> EdgeFamily {
        match *self {
            hr @ EdgeFamily::HuslerReiss { .. } => hr,
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => EdgeFamily::AsymLogisticSpecial { psi_p: psi_s, psi_s: psi_p },
        }
    }

    /// `ℓ(x, y)`; `x` belongs to the parent, `y` to the child.
    pub fn stdf(&self, x: f64, y: f64) -> Result<f64> {
        check_args(x, y)?;
        Ok(self.stdf_unchecked(x, y))
    }

    pub(crate) fn stdf_unchecked(&self, x: f64, y: f64) -> f64 {
        match *self {
            EdgeFamily::HuslerReiss { gamma } => hr_stdf(gamma, x, y),
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => alog_stdf(psi_p, psi_s, x, y),
        }
    }

    /// Upper tail dependence coefficient `2 − ℓ(1, 1)`.
    pub fn tdc(&self) -> f64 {
        match *self {
            EdgeFamily::HuslerReiss { gamma } => 2.0 * normal::sf(gamma.sqrt() / 2.0),
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => psi_p.min(psi_s),
        }
    }

    /// Law of the increment travelling parent to child.
    pub fn increment_law(&self) -> IncrementLaw {
        match *self {
            EdgeFamily::HuslerReiss { gamma } => IncrementLaw::Lognormal { mu: -gamma / 2.0, sigma2: gamma },
            EdgeFamily::AsymLogisticSpecial { psi_p, psi_s } => {
                if psi_p == 0.0 {
                    IncrementLaw::TwoAtom { p0: 1.0, atom: 0.0 }
                } else {
                    IncrementLaw::TwoAtom { p0: 1.0 - psi_p, atom: psi_s / psi_p }
                }
            }
        }
    }

    /// Law of the increment travelling child to parent.
    pub fn reverse_increment_law(&self) -> IncrementLaw {
        self.reversed().increment_law()
    }
}

/// Distribution of a multiplicative edge increment `M_e ≥ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum IncrementLaw {
    /// `log M ~ Normal(mu, sigma2)`.
    Lognormal { mu: f64, sigma2: f64 },
    /// `P(M = 0) = p0`, `P(M = atom) = 1 − p0`.
    TwoAtom { p0: f64, atom: f64 },
}

impl IncrementLaw {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            IncrementLaw::Lognormal { mu, sigma2 } => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal::cdf((x.ln() - mu) / sigma2.sqrt())
                }
            }
            IncrementLaw::TwoAtom { p0, atom } => {
                if x < 0.0 {
                    0.0
                } else if x < atom {
                    p0
                } else {
                    1.0
                }
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            IncrementLaw::Lognormal { mu, sigma2 } => (mu + sigma2 / 2.0).exp(),
            IncrementLaw::TwoAtom { p0, atom } => (1.0 - p0) * atom,
        }
    }

    /// `E[min(1, M)]`.
    pub fn expected_min_one(&self) -> f64 {
        match *self {
            IncrementLaw::Lognormal { mu, sigma2 } => {
                let s = sigma2.sqrt();
                // E[M; M < 1] + P(M >= 1)
                (mu + sigma2 / 2.0).exp() * normal::cdf((-mu - sigma2) / s) + normal::sf(-mu / s)
            }
            IncrementLaw::TwoAtom { p0, atom } => (1.0 - p0) * atom.min(1.0),
        }
    }

    pub fn is_point_mass_at_zero(&self) -> bool {
        matches!(*self, IncrementLaw::TwoAtom { p0, atom } if p0 >= 1.0 || atom == 0.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            IncrementLaw::Lognormal { mu, sigma2 } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma2.sqrt() * z).exp()
            }
            IncrementLaw::TwoAtom { p0, atom } => {
                // one uniform per draw keeps streams aligned across laws
                let u: f64 = rng.random();
                if u < p0 {
                    0.0
                } else {
                    atom
                }
            }
        }
    }
}

/// Convenience wrapper matching the free-function form of the API.
pub fn sample_increment<R: Rng + ?Sized>(law: &IncrementLaw, rng: &mut R) -> f64 {
    law.sample(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::integrate;
    use crate::rng::substream;

    fn families() -> Vec<EdgeFamily> {
        let mut v = Vec::new();
        for &g in &[0.05, 0.5, 1.0, 4.0, 12.0] {
            v.push(EdgeFamily::HuslerReiss { gamma: g });
        }
        for &(a, b) in &[(0.0, 0.0), (1.0, 1.0), (0.8, 0.7), (0.2, 0.9), (0.0, 0.6), (0.5, 0.0)] {
            v.push(EdgeFamily::AsymLogisticSpecial { psi_p: a, psi_s: b });
        }
        v
    }

    #[test]
    fn closed_form_examples() {
        let alog = |a, b| EdgeFamily::AsymLogisticSpecial { psi_p: a, psi_s: b };
        assert_eq!(alog(1.0, 1.0).stdf(0.3, 1.7).unwrap(), 1.7);
        assert_eq!(alog(0.0, 0.0).stdf(0.3, 1.7).unwrap(), 2.0);
        let hr = EdgeFamily::HuslerReiss { gamma: 4.0 };
        assert!((hr.stdf(1.0, 1.0).unwrap() - 2.0 * normal::cdf(1.0)).abs() < 1e-15);
        assert!((hr.stdf(1.0, 1.0).unwrap() - 1.682_689_492_137_086).abs() < 1e-12);
        assert!((hr.tdc() - 0.317_310_507_862_914).abs() < 1e-12);
        assert_eq!(alog(0.8, 0.7).tdc(), 0.7);
        assert_eq!(alog(0.0, 0.4).tdc(), 0.0);
        assert_eq!(hr.stdf(0.0, 2.5).unwrap(), 2.5);
        assert_eq!(hr.stdf(1.5, 0.0).unwrap(), 1.5);
        assert!(hr.stdf(-1.0, 1.0).is_err());
    }

    #[test]
    fn tdc_is_two_minus_stdf_at_one() {
        for f in families() {
            assert!((f.tdc() - (2.0 - f.stdf(1.0, 1.0).unwrap())).abs() < 1e-13, "{f:?}");
        }
    }

    #[test]
    fn stdf_bounds_homogeneity_and_monotonicity() {
        for f in families() {
            for i in 0..=20 {
                for j in 0..=20 {
                    let (x, y) = (i as f64 / 10.0, j as f64 / 10.0);
                    let l = f.stdf(x, y).unwrap();
                    assert!(l >= x.max(y) - 1e-12 && l <= x + y + 1e-12, "{f:?} ({x},{y}) = {l}");
                    if i < 20 {
                        assert!(f.stdf(x + 0.1, y).unwrap() >= l - 1e-12);
                    }
                    if j < 20 {
                        assert!(f.stdf(x, y + 0.1).unwrap() >= l - 1e-12);
                    }
                    let t = 3.7;
                    assert!((f.stdf(t * x, t * y).unwrap() - t * l).abs() < 1e-12 * (1.0 + t * l));
                }
            }
        }
    }

    #[test]
    fn stdf_is_convex_along_segments() {
        for f in families() {
            for &(p, q) in &[((0.1, 1.9), (1.7, 0.3)), ((0.0, 1.0), (1.0, 0.0)), ((0.4, 0.4), (2.0, 0.1))] {
                let a = f.stdf(p.0, p.1).unwrap();
                let b = f.stdf(q.0, q.1).unwrap();
                for k in 1..10 {
                    let t = k as f64 / 10.0;
                    let m = f.stdf(t * p.0 + (1.0 - t) * q.0, t * p.1 + (1.0 - t) * q.1).unwrap();
                    assert!(m <= t * a + (1.0 - t) * b + 1e-12);
                }
            }
        }
    }

    #[test]
    fn increment_cdf_is_right_derivative() {
        for &g in &[0.3, 1.0, 4.0] {
            let f = EdgeFamily::HuslerReiss { gamma: g };
            let law = f.increment_law();
            assert!((law.cdf(1.0) - normal::cdf(g.sqrt() / 2.0)).abs() < 1e-15);
            for i in 1..=100 {
                let x = i as f64 * 0.03;
                let h = 1e-5 * x;
                let num = (f.stdf(x + h, 1.0).unwrap() - f.stdf(x - h, 1.0).unwrap()) / (2.0 * h);
                assert!((num - law.cdf(x)).abs() < 1e-6, "gamma {g} x {x}: {num} vs {}", law.cdf(x));
            }
            // backward increment: derivative of l(1, y) in y
            let back = f.reverse_increment_law();
            let num = (f.stdf(1.0, 0.7 + 1e-6).unwrap() - f.stdf(1.0, 0.7 - 1e-6).unwrap()) / 2e-6;
            assert!((num - back.cdf(0.7)).abs() < 1e-6);
        }
        for &(a, b) in &[(0.8, 0.7), (0.2, 0.9), (0.5, 0.5)] {
            let f = EdgeFamily::AsymLogisticSpecial { psi_p: a, psi_s: b };
            let law = f.increment_law();
            assert_eq!(law, IncrementLaw::TwoAtom { p0: 1.0 - a, atom: b / a });
            let h = 1e-7;
            for &x in &[0.05, 0.3, b / a - 0.01, b / a + 0.01, 2.5] {
                let right = (f.stdf(x + h, 1.0).unwrap() - f.stdf(x, 1.0).unwrap()) / h;
                assert!((right - law.cdf(x)).abs() < 1e-6, "({a},{b}) x {x}");
            }
            let back = f.reverse_increment_law();
            assert_eq!(back, IncrementLaw::TwoAtom { p0: 1.0 - b, atom: a / b });
        }
        let zero = EdgeFamily::AsymLogisticSpecial { psi_p: 0.0, psi_s: 0.4 }.increment_law();
        assert!(zero.is_point_mass_at_zero());
        assert_eq!(zero.cdf(0.0), 1.0);
    }

    #[test]
    fn means_and_truncated_means() {
        for f in families() {
            let law = f.increment_law();
            assert!(law.mean() <= 1.0 + 1e-15);
            if let EdgeFamily::HuslerReiss { gamma } = f {
                assert!((law.mean() - 1.0).abs() < 1e-15);
                // E[min(1, M)] by quadrature over the normal density of log M
                let (mu, s) = (-gamma / 2.0, gamma.sqrt());
                let q = integrate(
                    |z| normal::pdf(z) * (mu + s * z).exp().min(1.0),
                    -40.0,
                    40.0,
                    1e-13,
                    1e-13,
                    100_000,
                );
                assert!((law.expected_min_one() - f.tdc()).abs() < 1e-8);
                assert!((q.value - f.tdc()).abs() < 1e-8, "{} vs {}", q.value, f.tdc());
            } else {
                assert!((law.expected_min_one() - f.tdc()).abs() < 1e-15, "{f:?}");
            }
        }
    }

    #[test]
    fn sampling() {
        let mut rng = substream(11, 0);
        let law = IncrementLaw::TwoAtom { p0: 1.0, atom: 3.0 };
        assert!((0..1000).all(|_| law.sample(&mut rng) == 0.0));

        let ln = IncrementLaw::Lognormal { mu: -2.0, sigma2: 4.0 };
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| sample_increment(&ln, &mut rng)).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        // Var = (e^{sigma2} - 1) e^{2 mu + sigma2}
        let sd = ((4.0f64.exp() - 1.0) * (0.0f64).exp()).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sd / (n as f64).sqrt(), "mean {mean}");

        let a: Vec<f64> = (0..10).map(|_| ln.sample(&mut substream(5, 2))).collect();
        let b: Vec<f64> = (0..10).map(|_| ln.sample(&mut substream(5, 2))).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn json_encoding() {
        let hr = EdgeFamily::HuslerReiss { gamma: 2.5 };
        assert_eq!(serde_json::to_string(&hr).unwrap(), r#"{"family":"hr","gamma":2.5}"#);
        let al: EdgeFamily = serde_json::from_str(r#"{"family":"alog","psi_p":0.8,"psi_s":0.4}"#).unwrap();
        assert_eq!(al, EdgeFamily::AsymLogisticSpecial { psi_p: 0.8, psi_s: 0.4 });
        assert!(serde_json::from_str::<EdgeFamily>(r#"{"family":"hr","gamma":-1}"#).is_err());
        assert!(serde_json::from_str::<EdgeFamily>(r#"{"family":"alog","psi_p":1.2,"psi_s":0.4}"#).is_err());
        assert!(serde_json::from_str::<EdgeFamily>(r#"{"family":"t","nu":3}"#).is_err());
    }
}
