//! Entropy, mutual information, multivariate mutual information and the
//! degeneracy / complexity averages over input decompositions.
//!
//! Everything is expressed against an [`EntropyOracle`] so the same code runs
//! on the Gaussian small-noise limit and on sample-based estimates. All
//! logarithms are natural (nats).

use std::collections::HashMap;
use std::f64::consts::{E, PI};
use std::sync::Mutex;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index_set::IndexSet;
use crate::lyapunov::{principal_logdet, LyapunovError, StationaryShape};

/// Default cap on the input-set size for subset enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 20;
/// Largest dimension for which `ALL` output sets are enumerated exhaustively.
pub const MAX_EXHAUSTIVE_OUTPUT_DIM: usize = 12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InfoError {
    #[error("index sets {0} and {1} overlap")]
    Overlap(IndexSet, IndexSet),
    #[error("input set has {size} coordinates, above the enumeration cap of {cap}; restrict the output set")]
    EnumerationCap { size: usize, cap: usize },
    #[error("output set {0} must be a proper nonempty subset of the {1} coordinates")]
    ImproperOutput(IndexSet, usize),
    #[error("index set {0} out of range for dimension {1}")]
    OutOfRange(IndexSet, usize),
    #[error("noise scale must be positive, got {0}")]
    BadEps(f64),
    #[error(transparent)]
    Lyapunov(#[from] LyapunovError),
    #[error("entropy estimator: {0}")]
    Estimator(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Gaussian,
    Empirical,
    Quadrature,
}

/// Projected entropy `H(idx)` in nats, with `H(∅) = 0`.
pub trait EntropyOracle: Sync {
    fn entropy(&self, idx: &IndexSet) -> Result<f64, InfoError>;
    fn provenance(&self) -> Provenance;
}

impl<T: EntropyOracle + ?Sized> EntropyOracle for &T {
    fn entropy(&self, idx: &IndexSet) -> Result<f64, InfoError> {
        (**self).entropy(idx)
    }
    fn provenance(&self) -> Provenance {
        (**self).provenance()
    }
}

/// `½ log((2πe)^k |ε² S(idx)|)`.
pub fn gaussian_entropy(s: &DMatrix<f64>, idx: &IndexSet, eps: f64) -> Result<f64, InfoError> {
    if !(eps > 0.0) {
        return Err(InfoError::BadEps(eps));
    }
    if idx.max_index().is_some_and(|m| m >= s.nrows()) {
        return Err(InfoError::OutOfRange(idx.clone(), s.nrows()));
    }
    if idx.is_empty() {
        return Ok(0.0);
    }
    let k = idx.len() as f64;
    let logdet = principal_logdet(s, idx)?;
    Ok(0.5 * (k * (2.0 * PI * E).ln() + 2.0 * k * eps.ln() + logdet))
}

/// Entropies of the Gaussian with covariance `ε² S`.
#[derive(Debug, Clone)]
pub struct GaussianOracle {
    s: DMatrix<f64>,
    eps: f64,
}

impl GaussianOracle {
    pub fn new(s: DMatrix<f64>, eps: f64) -> Result<Self, InfoError> {
        if !(eps > 0.0) {
            return Err(InfoError::BadEps(eps));
        }
        Ok(Self { s, eps })
    }

    pub fn from_shape(shape: &StationaryShape, eps: f64) -> Result<Self, InfoError> {
        Self::new(shape.s.clone(), eps)
    }

    pub fn dim(&self) -> usize {
        self.s.nrows()
    }
}

impl EntropyOracle for GaussianOracle {
    fn entropy(&self, idx: &IndexSet) -> Result<f64, InfoError> {
        gaussian_entropy(&self.s, idx, self.eps)
    }
    fn provenance(&self) -> Provenance {
        Provenance::Gaussian
    }
}

/// Memoizing wrapper; subset enumeration revisits the same sets many times.
pub struct CachedOracle<O> {
    inner: O,
    cache: Mutex<HashMap<IndexSet, f64>>,
}

impl<O: EntropyOracle> CachedOracle<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn into_inner(self) -> O {
        self.inner
    }
}

impl<O: EntropyOracle> EntropyOracle for CachedOracle<O> {
    fn entropy(&self, idx: &IndexSet) -> Result<f64, InfoError> {
        if idx.is_empty() {
            return Ok(0.0);
        }
        if let Some(&h) = self.cache.lock().unwrap().get(idx) {
            return Ok(h);
        }
        let h = self.inner.entropy(idx)?;
        self.cache.lock().unwrap().insert(idx.clone(), h);
        Ok(h)
    }
    fn provenance(&self) -> Provenance {
        self.inner.provenance()
    }
}

fn check_disjoint(a: &IndexSet, b: &IndexSet) -> Result<(), InfoError> {
    if a.is_disjoint(b) {
        Ok(())
    } else {
        Err(InfoError::Overlap(a.clone(), b.clone()))
    }
}

/// `MI(a; b) = H(a) + H(b) - H(a ∪ b)`.
pub fn mutual_information(
    h: &(impl EntropyOracle + ?Sized),
    a: &IndexSet,
    b: &IndexSet,
) -> Result<f64, InfoError> {
    check_disjoint(a, b)?;
    if a.is_empty() || b.is_empty() {
        return Ok(0.0);
    }
    Ok(h.entropy(a)? + h.entropy(b)? - h.entropy(&a.union(b))?)
}

/// Interaction information `MI(ik; o) + MI(ikc; o) - MI(ik ∪ ikc; o)`.
pub fn multivariate_mi(
    h: &(impl EntropyOracle + ?Sized),
    ik: &IndexSet,
    ikc: &IndexSet,
    o: &IndexSet,
) -> Result<f64, InfoError> {
    check_disjoint(ik, ikc)?;
    check_disjoint(ik, o)?;
    check_disjoint(ikc, o)?;
    if ik.is_empty() || ikc.is_empty() {
        return Ok(0.0);
    }
    Ok(mutual_information(h, ik, o)? + mutual_information(h, ikc, o)?
        - mutual_information(h, &ik.union(ikc), o)?)
}

/// Closed-form Gaussian interaction information from seven principal
/// log-determinants:
/// `½ log(|S(a)||S(b)||S(o)||S(abo)| / (|S(ab)||S(ao)||S(bo)|))`.
pub fn gaussian_multivariate_mi(
    s: &DMatrix<f64>,
    a: &IndexSet,
    b: &IndexSet,
    o: &IndexSet,
) -> Result<f64, InfoError> {
    check_disjoint(a, b)?;
    check_disjoint(a, o)?;
    check_disjoint(b, o)?;
    let ld = |idx: &IndexSet| principal_logdet(s, idx);
    let num = ld(a)? + ld(b)? + ld(o)? + ld(&a.union(b).union(o))?;
    let den = ld(&a.union(b))? + ld(&a.union(o))? + ld(&b.union(o))?;
    Ok(0.5 * (num - den))
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn input_set(o: &IndexSet, n: usize, cap: usize) -> Result<IndexSet, InfoError> {
    if o.max_index().is_some_and(|m| m >= n) {
        return Err(InfoError::OutOfRange(o.clone(), n));
    }
    if o.is_empty() || o.len() >= n {
        return Err(InfoError::ImproperOutput(o.clone(), n));
    }
    let input = o.complement(n);
    if input.len() > cap {
        return Err(InfoError::EnumerationCap {
            size: input.len(),
            cap,
        });
    }
    Ok(input)
}

/// Degeneracy of output set `o` in an `n`-dimensional system:
/// `Σ_{Ik ⊆ I} max{MI(Ik; I\Ik; o), 0} / (2 C(|I|, |Ik|))`.
pub fn degeneracy_output(
    h: &(impl EntropyOracle + ?Sized),
    o: &IndexSet,
    n: usize,
    cap: usize,
) -> Result<f64, InfoError> {
    let input = input_set(o, n, cap)?;
    let m = input.len();
    let mut total = 0.0;
    for ik in input.subsets() {
        let ikc = input.difference(&ik);
        let mmi = multivariate_mi(h, &ik, &ikc, o)?;
        total += mmi.max(0.0) / (2.0 * binomial(m, ik.len()));
    }
    Ok(total)
}

/// Complexity of output set `o`: `Σ_{Ik ⊆ I} MI(Ik; I\Ik) / (2 C(|I|, |Ik|))`.
pub fn complexity_output(
    h: &(impl EntropyOracle + ?Sized),
    o: &IndexSet,
    n: usize,
    cap: usize,
) -> Result<f64, InfoError> {
    let input = input_set(o, n, cap)?;
    let m = input.len();
    let mut total = 0.0;
    for ik in input.subsets() {
        let ikc = input.difference(&ik);
        total += mutual_information(h, &ik, &ikc)? / (2.0 * binomial(m, ik.len()));
    }
    Ok(total)
}

/// Which output sets to evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum OutputSelection {
    Sets(Vec<IndexSet>),
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureOptions {
    pub enumeration_cap: usize,
    /// Keep the per-decomposition table for every output set.
    pub keep_decompositions: bool,
    /// Explicit `(I1; I2; O)` triples to report alongside the averages.
    pub triples: Vec<(IndexSet, IndexSet, IndexSet)>,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        Self {
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            keep_decompositions: true,
            triples: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionEntry {
    pub ik: IndexSet,
    pub ikc: IndexSet,
    pub multivariate_mi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TripleEntry {
    pub i1: IndexSet,
    pub i2: IndexSet,
    pub output: IndexSet,
    pub multivariate_mi: f64,
    pub mi_i1_i2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputMeasures {
    pub output: IndexSet,
    pub degeneracy: f64,
    pub complexity: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub decompositions: Vec<DecompositionEntry>,
}

/// The per-output table plus the headline maxima.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionMeasures {
    pub provenance: Provenance,
    pub outputs: Vec<OutputMeasures>,
    pub triples: Vec<TripleEntry>,
    /// `max_O D(O)` over the evaluated output sets.
    pub degeneracy: f64,
    /// `max_O C(O)` over the evaluated output sets.
    pub complexity: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub degeneracy_argmax: Option<IndexSet>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub complexity_argmax: Option<IndexSet>,
    /// Set when `ALL` was requested but only part of the output sets were evaluated.
    pub truncated: bool,
}

fn all_output_sets(n: usize, cap: usize) -> (Vec<IndexSet>, bool) {
    if n <= MAX_EXHAUSTIVE_OUTPUT_DIM {
        let sets = (1u64..(1u64 << n) - 1).map(IndexSet::from_mask).collect();
        return (sets, false);
    }
    // Beyond the exhaustive limit: output sets with the smallest input sets
    // first, up to the budget an exhaustive n = 12 run would have used.
    let budget = (1usize << MAX_EXHAUSTIVE_OUTPUT_DIM) - 2;
    let mut sets = Vec::new();
    'outer: for input_size in 1..n.min(cap + 1) {
        let mut comb: Vec<usize> = (0..input_size).collect();
        loop {
            sets.push(IndexSet::new(comb.clone()).complement(n));
            if sets.len() >= budget {
                break 'outer;
            }
            // next combination
            let mut i = input_size;
            while i > 0 && comb[i - 1] == n - input_size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            comb[i - 1] += 1;
            for j in i..input_size {
                comb[j] = comb[j - 1] + 1;
            }
        }
    }
    (sets, true)
}

/// Degeneracy and complexity for each selected output set of an
/// `n`-dimensional system, with the maxima over the selection.
pub fn measures_with_oracle(
    h: &(impl EntropyOracle + ?Sized),
    n: usize,
    selection: &OutputSelection,
    opts: &MeasureOptions,
) -> Result<DecompositionMeasures, InfoError> {
    let (sets, truncated) = match selection {
        OutputSelection::Sets(s) => (s.clone(), false),
        OutputSelection::All => all_output_sets(n, opts.enumeration_cap),
    };
    let keep = opts.keep_decompositions;
    let outputs = sets
        .par_iter()
        .map(|o| -> Result<OutputMeasures, InfoError> {
            let degeneracy = degeneracy_output(h, o, n, opts.enumeration_cap)?;
            let complexity = complexity_output(h, o, n, opts.enumeration_cap)?;
            let decompositions = if keep {
                let input = o.complement(n);
                input
                    .subsets()
                    .map(|ik| {
                        let ikc = input.difference(&ik);
                        let multivariate_mi = multivariate_mi(h, &ik, &ikc, o)?;
                        Ok(DecompositionEntry {
                            ik,
                            ikc,
                            multivariate_mi,
                        })
                    })
                    .collect::<Result<_, InfoError>>()?
            } else {
                Vec::new()
            };
            Ok(OutputMeasures {
                output: o.clone(),
                degeneracy,
                complexity,
                decompositions,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;

    let triples = opts
        .triples
        .iter()
        .map(|(i1, i2, o)| {
            Ok(TripleEntry {
                i1: i1.clone(),
                i2: i2.clone(),
                output: o.clone(),
                multivariate_mi: multivariate_mi(h, i1, i2, o)?,
                mi_i1_i2: mutual_information(h, i1, i2)?,
            })
        })
        .collect::<Result<Vec<_>, InfoError>>()?;

    let argmax = |key: fn(&OutputMeasures) -> f64| {
        outputs
            .iter()
            .fold(None::<&OutputMeasures>, |best, m| match best {
                Some(b) if key(b) >= key(m) => Some(b),
                _ => Some(m),
            })
            .map(|m| (key(m), m.output.clone()))
    };
    let (degeneracy, degeneracy_argmax) = argmax(|m| m.degeneracy).map_or((0.0, None), |(v, o)| (v, Some(o)));
    let (complexity, complexity_argmax) = argmax(|m| m.complexity).map_or((0.0, None), |(v, o)| (v, Some(o)));

    Ok(DecompositionMeasures {
        provenance: h.provenance(),
        outputs,
        triples,
        degeneracy,
        complexity,
        degeneracy_argmax,
        complexity_argmax,
        truncated,
    })
}

/// `{σ, ε}`-measures of a stationary shape in the Gaussian limit.
pub fn eps_sigma_measures(
    shape: &StationaryShape,
    eps: f64,
    selection: &OutputSelection,
    opts: &MeasureOptions,
) -> Result<DecompositionMeasures, InfoError> {
    let oracle = CachedOracle::new(GaussianOracle::from_shape(shape, eps)?);
    measures_with_oracle(&oracle, shape.dim(), selection, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn bivariate(rho: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[1.0, rho, rho, 1.0])
    }

    #[test]
    fn scalar_normal_entropy() {
        let s = DMatrix::from_element(1, 1, 0.5);
        let h = gaussian_entropy(&s, &IndexSet::from([0]), 1.0).unwrap();
        assert_abs_diff_eq!(h, 0.5 * (PI * E).ln(), epsilon = 1e-14);
        assert_eq!(gaussian_entropy(&s, &IndexSet::empty(), 1.0).unwrap(), 0.0);
        assert!(gaussian_entropy(&s, &IndexSet::from([0]), 0.0).is_err());
    }

    #[test]
    fn block_additivity() {
        let s = DMatrix::from_row_slice(
            3,
            3,
            &[2.0, 0.5, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 3.0],
        );
        let o = GaussianOracle::new(s, 0.3).unwrap();
        let h01 = o.entropy(&IndexSet::from([0, 1])).unwrap();
        let h2 = o.entropy(&IndexSet::from([2])).unwrap();
        let h_all = o.entropy(&IndexSet::full(3)).unwrap();
        assert_abs_diff_eq!(h_all, h01 + h2, epsilon = 1e-12);
    }

    #[test]
    fn bivariate_mutual_information() {
        let o = GaussianOracle::new(bivariate(0.5), 0.1).unwrap();
        let mi = mutual_information(&o, &IndexSet::from([0]), &IndexSet::from([1])).unwrap();
        assert_abs_diff_eq!(mi, -0.5 * (1.0f64 - 0.25).ln(), epsilon = 1e-13);
        assert!(matches!(
            mutual_information(&o, &IndexSet::from([0]), &IndexSet::from([0, 1])),
            Err(InfoError::Overlap(..))
        ));
    }

    #[test]
    fn diagonal_measures_vanish() {
        let s = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 2.0, 0.5, 4.0]));
        let o = GaussianOracle::new(s, 1.0).unwrap();
        let out = IndexSet::from([3]);
        assert_abs_diff_eq!(degeneracy_output(&o, &out, 4, 20).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(complexity_output(&o, &out, 4, 20).unwrap(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(
            multivariate_mi(&o, &IndexSet::from([0]), &IndexSet::from([1]), &out).unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn empty_input_part_is_zero() {
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.4, 0.2, 0.4, 1.0, 0.3, 0.2, 0.3, 1.0]);
        let o = GaussianOracle::new(s, 1.0).unwrap();
        let v = multivariate_mi(&o, &IndexSet::empty(), &IndexSet::from([0, 1]), &IndexSet::from([2])).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn two_input_degeneracy_is_half_interaction() {
        // |I| = 2: k = 0, 2 vanish; k = 1 gives two equal terms of weight 1/4
        let s = DMatrix::from_row_slice(3, 3, &[1.0, 0.6, 0.5, 0.6, 1.0, 0.5, 0.5, 0.5, 1.0]);
        let o = GaussianOracle::new(s.clone(), 1.0).unwrap();
        let out = IndexSet::from([2]);
        let mmi = gaussian_multivariate_mi(&s, &IndexSet::from([0]), &IndexSet::from([1]), &out).unwrap();
        let d = degeneracy_output(&o, &out, 3, 20).unwrap();
        assert_abs_diff_eq!(d, 0.5 * mmi.max(0.0), epsilon = 1e-13);
    }

    #[test]
    fn improper_outputs_and_cap() {
        let o = GaussianOracle::new(DMatrix::identity(4, 4), 1.0).unwrap();
        assert!(matches!(
            degeneracy_output(&o, &IndexSet::empty(), 4, 20),
            Err(InfoError::ImproperOutput(..))
        ));
        assert!(matches!(
            degeneracy_output(&o, &IndexSet::full(4), 4, 20),
            Err(InfoError::ImproperOutput(..))
        ));
        assert!(matches!(
            complexity_output(&o, &IndexSet::from([0]), 4, 2),
            Err(InfoError::EnumerationCap { size: 3, cap: 2 })
        ));
    }

    #[test]
    fn all_outputs_diagonal() {
        let shape = StationaryShape::from_parts(
            vec![0.0; 2],
            -DMatrix::identity(2, 2),
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let m = eps_sigma_measures(&shape, 0.1, &OutputSelection::All, &MeasureOptions::default()).unwrap();
        assert_eq!(m.outputs.len(), 2);
        assert_eq!(m.degeneracy, 0.0);
        assert_eq!(m.complexity, 0.0);
        assert!(!m.truncated);
    }

    #[test]
    fn large_all_selection_is_truncated() {
        let (sets, truncated) = all_output_sets(14, 20);
        assert!(truncated);
        assert_eq!(sets.len(), (1 << 12) - 2);
        assert!(sets.iter().all(|o| !o.is_empty() && o.len() < 14));
        let first_input = sets[0].complement(14);
        assert_eq!(first_input.len(), 1);
    }
}
