//! Classical and quantum entropies, all in bits (base-2 logarithms),
//! with the convention `0 log 0 = 0`.

use crate::error::{Error, Result};
use crate::linalg::hermitian_eig;
use crate::quantum::{DensityOperator, ProbabilityDistribution};

#[inline]
fn xlog2x(p: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else {
        p * p.log2()
    }
}

/// `h(p) = -p log p - (1-p) log(1-p)`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::Domain(format!("binary entropy needs p in [0,1], got {p}")));
    }
    Ok(-xlog2x(p) - xlog2x(1.0 - p))
}

pub fn shannon_entropy(dist: &ProbabilityDistribution) -> f64 {
    -dist.probs().iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Joint probability mass function p(x, y) stored row-major by x.
#[derive(Debug, Clone)]
pub struct JointDistribution {
    nx: usize,
    ny: usize,
    p: Vec<f64>,
}

impl JointDistribution {
    pub fn new(nx: usize, ny: usize, p: Vec<f64>) -> Result<Self> {
        if p.len() != nx * ny {
            return Err(Error::DimMismatch(format!(
                "joint distribution needs {} entries, got {}",
                nx * ny,
                p.len()
            )));
        }
        if p.iter().any(|&x| x < -1e-12) {
            return Err(Error::BadDistribution("negative joint probability".into()));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-10 {
            return Err(Error::BadDistribution(format!(
                "joint probabilities sum to {sum}"
            )));
        }
        Ok(JointDistribution { nx, ny, p })
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.p[x * self.ny + y]
    }

    pub fn marginal_x(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|x| (0..self.ny).map(|y| self.get(x, y)).sum())
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<f64> {
        (0..self.ny)
            .map(|y| (0..self.nx).map(|x| self.get(x, y)).sum())
            .collect()
    }

    /// Product of two marginals; handy for independence tests.
    pub fn product(px: &ProbabilityDistribution, py: &ProbabilityDistribution) -> Self {
        let nx = px.len();
        let ny = py.len();
        let mut p = Vec::with_capacity(nx * ny);
        for &a in px.probs() {
            for &b in py.probs() {
                p.push(a * b);
            }
        }
        JointDistribution { nx, ny, p }
    }
}

/// `H(X, Y)`.
pub fn joint_entropy(joint: &JointDistribution) -> f64 {
    -joint.p.iter().map(|&p| xlog2x(p)).sum::<f64>()
}

/// Conditional entropy `H(Y|X) = H(X,Y) - H(X)`.
pub fn conditional_entropy(joint: &JointDistribution) -> f64 {
    let hx = -joint.marginal_x().iter().map(|&p| xlog2x(p)).sum::<f64>();
    joint_entropy(joint) - hx
}

/// Mutual information `I(X;Y) = H(Y) - H(Y|X)`.
pub fn mutual_information(joint: &JointDistribution) -> f64 {
    let hy = -joint.marginal_y().iter().map(|&p| xlog2x(p)).sum::<f64>();
    hy - conditional_entropy(joint)
}

/// Relative entropy `D(p||q)` in bits. Returns `f64::INFINITY` whenever
/// `q(x) = 0` while `p(x) > 0`.
pub fn relative_entropy(
    p: &ProbabilityDistribution,
    q: &ProbabilityDistribution,
) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimMismatch(
            "relative entropy needs equal-length distributions".into(),
        ));
    }
    let mut d = 0.0;
    for (&pi, &qi) in p.probs().iter().zip(q.probs().iter()) {
        if pi == 0.0 {
            continue;
        }
        if qi == 0.0 {
            return Ok(f64::INFINITY);
        }
        d += pi * (pi / qi).log2();
    }
    Ok(d)
}

/// Von Neumann entropy `S(rho) = -sum_i lambda_i log lambda_i`. Eigenvalues
/// are clamped to `[0, 1]` to absorb PSD slack before taking logs.
pub fn von_neumann_entropy(rho: &DensityOperator) -> Result<f64> {
    let eig = hermitian_eig(rho.matrix(), false)?;
    Ok(-eig
        .values
        .iter()
        .map(|&lam| xlog2x(lam.clamp(0.0, 1.0)))
        .sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{BlochVector, bloch_to_density, Ket};

    #[test]
    fn fair_coin_has_one_bit() {
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn pure_state_entropy_vanishes() {
        let rho = Ket::basis(3, 1).density();
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn maximally_mixed_qubit_has_one_bit() {
        let rho = crate::quantum::DensityOperator::maximally_mixed(2);
        assert!((von_neumann_entropy(&rho).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn relative_entropy_of_identical_distributions_is_zero() {
        let p = ProbabilityDistribution::new(vec![0.2, 0.3, 0.5]).unwrap();
        assert_eq!(relative_entropy(&p, &p).unwrap(), 0.0);
        let q = ProbabilityDistribution::new(vec![0.5, 0.5, 0.0]).unwrap();
        assert!(relative_entropy(&p, &q).unwrap().is_infinite());
    }

    #[test]
    fn independent_joint_has_zero_mutual_information() {
        let px = ProbabilityDistribution::new(vec![0.3, 0.7]).unwrap();
        let py = ProbabilityDistribution::new(vec![0.1, 0.4, 0.5]).unwrap();
        let joint = JointDistribution::product(&px, &py);
        assert!(mutual_information(&joint).abs() < 1e-12);
        // and H(X,Y) = H(X) + H(Y)
        let hx = shannon_entropy(&px);
        let hy = shannon_entropy(&py);
        assert!((joint_entropy(&joint) - hx - hy).abs() < 1e-12);
    }

    #[test]
    fn correlated_joint_has_positive_mutual_information() {
        // perfectly correlated bits
        let joint = JointDistribution::new(2, 2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!((mutual_information(&joint) - 1.0).abs() < 1e-12);
        assert!(conditional_entropy(&joint).abs() < 1e-12);
    }

    #[test]
    fn bloch_state_entropy_matches_binary_entropy() {
        let r = BlochVector::new(0.1, 0.3, 0.2).unwrap();
        let rho = bloch_to_density(&r).unwrap();
        let s = von_neumann_entropy(&rho).unwrap();
        let h = binary_entropy((1.0 + r.norm()) / 2.0).unwrap();
        assert!((s - h).abs() < 1e-10);
    }
}
