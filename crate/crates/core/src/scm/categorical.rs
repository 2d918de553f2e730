use crate::scalar::ProbFloat;
use crate::scm::ScmError;

/// Dense categorical distribution over an enumerated finite domain.
///
/// Index `j` of `probs` is the probability of category `j`; the vector length
/// is the domain size, so zero entries mark values outside the support.
#[derive(Clone, Debug, PartialEq)]
pub struct Categorical<F> {
    probs: Vec<F>,
}

impl<F: ProbFloat> Categorical<F> {
    pub fn new(probs: Vec<F>) -> Result<Self, ScmError> {
        if probs.is_empty() {
            return Err(ScmError::ContractViolation("empty categorical".into()));
        }
        let mut sum = F::zero();
        for &p in &probs {
            if !(p >= F::zero()) || !p.is_finite() {
                return Err(ScmError::ContractViolation(format!(
                    "invalid probability {p:?}"
                )));
            }
            sum = sum + p;
        }
        if (sum - F::one()).abs() > F::sum_tolerance(probs.len()) {
            return Err(ScmError::ContractViolation(format!(
                "probabilities sum to {sum:?}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    /// All mass on `index`.
    pub fn point(domain: usize, index: usize) -> Self {
        assert!(index < domain, "point mass outside domain");
        let mut probs = vec![F::zero(); domain];
        probs[index] = F::one();
        Self { probs }
    }

    /// Uniform over `support` (indices into a domain of size `domain`).
    pub fn uniform(domain: usize, support: &[usize]) -> Self {
        assert!(!support.is_empty(), "uniform over empty support");
        let mut probs = vec![F::zero(); domain];
        let w = F::one() / F::from_usize(support.len()).unwrap();
        for &j in support {
            probs[j] = probs[j] + w;
        }
        Self { probs }
    }

    /// Mass `main` on `target`, the remaining `1 - main` spread uniformly
    /// over `support` minus `target`. Degenerates to a point mass when
    /// `target` is the only member of `support`.
    pub fn target_or_uniform_rest(domain: usize, target: usize, main: F, support: &[usize]) -> Self {
        let rest: Vec<usize> = support.iter().copied().filter(|&j| j != target).collect();
        if rest.is_empty() {
            return Self::point(domain, target);
        }
        let mut probs = vec![F::zero(); domain];
        probs[target] = main;
        let w = (F::one() - main) / F::from_usize(rest.len()).unwrap();
        for j in rest {
            probs[j] = probs[j] + w;
        }
        Self { probs }
    }

    /// Mix `main` on `target` with `1 - main` uniform over all of `support`
    /// (including `target`).
    pub fn target_plus_uniform(domain: usize, target: usize, main: F, support: &[usize]) -> Self {
        let mut probs = vec![F::zero(); domain];
        probs[target] = main;
        let w = (F::one() - main) / F::from_usize(support.len()).unwrap();
        for &j in support {
            probs[j] = probs[j] + w;
        }
        Self { probs }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn probs(&self) -> &[F] {
        &self.probs
    }

    pub fn prob(&self, j: usize) -> F {
        self.probs.get(j).copied().unwrap_or_else(F::zero)
    }

    /// Log-probability with `ln 0 = -inf`.
    pub fn log_prob(&self, j: usize) -> F {
        let p = self.prob(j);
        if p > F::zero() {
            p.ln()
        } else {
            F::neg_infinity()
        }
    }

    /// The category holding all the mass, if any.
    pub fn point_mass(&self) -> Option<usize> {
        let mut found = None;
        for (j, &p) in self.probs.iter().enumerate() {
            if p > F::zero() {
                if found.is_some() {
                    return None;
                }
                found = Some(j);
            }
        }
        found
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > F::zero())
            .map(|(j, _)| j)
    }
}

/// `argmax_j (log p_j + g_j)`; zero-probability categories never win.
/// Exact ties resolve to the lowest index.
pub fn gumbel_argmax<F: ProbFloat>(probs: &[F], noise: &[F]) -> Result<usize, ScmError> {
    if probs.len() != noise.len() {
        return Err(ScmError::ContractViolation(format!(
            "gumbel_argmax: {} probabilities vs {} noise values",
            probs.len(),
            noise.len()
        )));
    }
    let mut best: Option<(usize, F)> = None;
    for (j, (&p, &g)) in probs.iter().zip(noise).enumerate() {
        if p <= F::zero() {
            continue;
        }
        let v = p.ln() + g;
        match best {
            Some((_, b)) if !(v > b) => {}
            _ => best = Some((j, v)),
        }
    }
    best.map(|(j, _)| j)
        .ok_or_else(|| ScmError::ContractViolation("gumbel_argmax: all-zero distribution".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scm::noise::standard_gumbel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_probability_categories_are_excluded() {
        let p = [1.0, 0.0, 0.0];
        for noise in [[0.0, 5.0, 9.0], [-3.0, 100.0, 100.0]] {
            assert_eq!(gumbel_argmax(&p, &noise).unwrap(), 0);
        }
    }

    #[test]
    fn equal_logs_larger_gumbel_wins() {
        assert_eq!(gumbel_argmax(&[0.5, 0.5], &[2.0, 1.0]).unwrap(), 0);
        assert_eq!(gumbel_argmax(&[0.5, 0.5], &[1.0, 2.0]).unwrap(), 1);
    }

    #[test]
    fn contract_violations() {
        assert!(matches!(
            gumbel_argmax(&[0.5, 0.5], &[1.0]),
            Err(ScmError::ContractViolation(_))
        ));
        assert!(matches!(
            gumbel_argmax(&[0.0, 0.0], &[1.0, 1.0]),
            Err(ScmError::ContractViolation(_))
        ));
    }

    #[test]
    fn monte_carlo_frequencies_match_probabilities() {
        let p = [0.2f64, 0.3, 0.5];
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 100_000;
        let mut counts = [0usize; 3];
        for _ in 0..draws {
            let g: Vec<f64> = (0..3).map(|_| standard_gumbel(&mut rng)).collect();
            counts[gumbel_argmax(&p, &g).unwrap()] += 1;
        }
        for j in 0..3 {
            let freq = counts[j] as f64 / draws as f64;
            assert!((freq - p[j]).abs() < 0.01, "category {j}: {freq}");
        }
    }

    #[test]
    fn constructors_validate() {
        assert!(Categorical::<f64>::new(vec![0.5, 0.4]).is_err());
        assert!(Categorical::<f64>::new(vec![-0.5, 1.5]).is_err());
        let c = Categorical::<f64>::target_or_uniform_rest(5, 2, 0.8, &[0, 2, 4]);
        assert!((c.prob(2) - 0.8).abs() < 1e-12);
        assert!((c.prob(0) - 0.1).abs() < 1e-12);
        assert_eq!(c.prob(1), 0.0);
        assert_eq!(Categorical::<f64>::target_or_uniform_rest(5, 2, 0.8, &[2]).point_mass(), Some(2));
        let u = Categorical::<f32>::uniform(4, &[1, 3]);
        assert!(Categorical::new(u.probs().to_vec()).is_ok());
        assert_eq!(u.log_prob(0), f32::NEG_INFINITY);
    }
}
