//! The two-local XX/ZZ Hamiltonian used by the energy test.
//!
//! Each term `(i, j, p, s)` contributes `p/2 · [(I + s X_i X_j)/2 + (I + s Z_i Z_j)/2]`.
//! Every bracket is a projector-sum with spectrum in `{0, 1/2, 1}` scaled by
//! `p`, so with `Σp = 1` the full spectrum lies in `[0, 1]`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::qcore::eig::hermitian_eig;
use crate::qcore::matrix::{ComplexMatrix, C64, ZERO};
use crate::qcore::random::random_pure;
use crate::qcore::state::PureState;

pub const MAX_QUBITS: usize = 8;
const WEIGHT_SUM_TOL: f64 = 1e-12;
const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 100_000;
/// Below this size the dense fallback is affordable.
const DENSE_FALLBACK_QUBITS: usize = 6;
const RESIDUAL_TOL: f64 = 1e-8;
const SHIFT: f64 = 1.1;
const START_SEED: u64 = 0x5EED_0FE0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub i: usize,
    pub j: usize,
    pub p: f64,
    pub s: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecRepr", into = "SpecRepr")]
pub struct HamiltonianSpec {
    n: usize,
    terms: Vec<Term>,
}

#[derive(Serialize, Deserialize)]
struct SpecRepr {
    n: usize,
    terms: Vec<Term>,
}

impl TryFrom<SpecRepr> for HamiltonianSpec {
    type Error = Error;

    fn try_from(r: SpecRepr) -> Result<Self> {
        HamiltonianSpec::new(r.n, r.terms)
    }
}

impl From<HamiltonianSpec> for SpecRepr {
    fn from(s: HamiltonianSpec) -> Self {
        SpecRepr { n: s.n, terms: s.terms }
    }
}

impl HamiltonianSpec {
    pub fn new(n: usize, terms: Vec<Term>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::InvalidSpec("no terms".into()));
        }
        for t in &terms {
            if !(t.i < t.j && t.j < n) {
                return Err(Error::InvalidSpec(format!(
                    "term ({}, {}) needs i < j < n = {n}",
                    t.i, t.j
                )));
            }
            if !(t.p.is_finite() && t.p > 0.0) {
                return Err(Error::InvalidSpec(format!("weight {} must be positive", t.p)));
            }
            if t.s != 1 && t.s != -1 {
                return Err(Error::InvalidSpec(format!("sign {} must be ±1", t.s)));
            }
        }
        let total: f64 = terms.iter().map(|t| t.p).sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidSpec(format!("weights sum to {total}, expected 1")));
        }
        Ok(Self { n, terms })
    }

    /// Single term on qubits `(i, j)` with full weight.
    pub fn single(n: usize, i: usize, j: usize, s: i8) -> Result<Self> {
        Self::new(n, vec![Term { i, j, p: 1.0, s }])
    }

    /// Equal-weight terms from `(i, j, s)` triples.
    pub fn uniform(n: usize, edges: &[(usize, usize, i8)]) -> Result<Self> {
        let p = 1.0 / edges.len() as f64;
        let mut terms: Vec<Term> = edges.iter().map(|&(i, j, s)| Term { i, j, p, s }).collect();
        // Make the sum exactly one so validation is not at the mercy of 1/3 rounding.
        if let Some(last) = terms.last_mut() {
            last.p = 1.0 - p * (edges.len() - 1) as f64;
        }
        Self::new(n, terms)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `w·self + (1−w)·other`, as a concatenated term list.
    pub fn mix(&self, other: &Self, w: f64) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::InvalidSpec("mixing specs on different qubit counts".into()));
        }
        let scaled = |t: &Term, k: f64| Term { p: t.p * k, ..*t };
        let terms = self
            .terms
            .iter()
            .map(|t| scaled(t, w))
            .chain(other.terms.iter().map(|t| scaled(t, 1.0 - w)))
            .collect();
        Self::new(self.n, terms)
    }

    /// SHA-256 over the canonical JSON encoding, hex encoded.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serializes");
        hex::encode(Sha256::digest(&json))
    }

    fn check_size(&self) -> Result<()> {
        if self.n > MAX_QUBITS {
            return Err(Error::DimensionCap {
                what: "Hamiltonian qubits",
                got: self.n,
                cap: MAX_QUBITS,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct GroundSolution {
    pub energy: f64,
    pub state: PureState,
    pub residual: f64,
}

#[inline]
fn bit(index: usize, q: usize, n: usize) -> usize {
    (index >> (n - 1 - q)) & 1
}

/// Sparse action `H|v⟩`.
pub fn apply(spec: &HamiltonianSpec, v: &[C64]) -> Result<Vec<C64>> {
    let n = spec.n;
    if v.len() != 1usize << n {
        return Err(Error::DimensionMismatch(format!(
            "vector of length {} for {n}-qubit Hamiltonian",
            v.len()
        )));
    }
    let mut out = vec![ZERO; v.len()];
    for t in &spec.terms {
        let flip = (1usize << (n - 1 - t.i)) | (1usize << (n - 1 - t.j));
        let s = f64::from(t.s);
        for (idx, o) in out.iter_mut().enumerate() {
            let zz = if bit(idx, t.i, n) == bit(idx, t.j, n) {
                1.0
            } else {
                -1.0
            };
            let xx = v[idx ^ flip];
            *o += (v[idx] + (xx + v[idx] * zz) * (0.5 * s)) * (0.5 * t.p);
        }
    }
    Ok(out)
}

/// Dense matrix of the Hamiltonian.
pub fn build(spec: &HamiltonianSpec) -> Result<ComplexMatrix> {
    spec.check_size()?;
    let d = 1usize << spec.n;
    let mut m = ComplexMatrix::zeros(d, d);
    let mut e = vec![ZERO; d];
    for col in 0..d {
        e[col] = C64::new(1.0, 0.0);
        let hv = apply(spec, &e)?;
        for (row, val) in hv.into_iter().enumerate() {
            m[(row, col)] = val;
        }
        e[col] = ZERO;
    }
    Ok(m)
}

/// `⟨ψ|H|ψ⟩`.
pub fn energy(spec: &HamiltonianSpec, psi: &PureState) -> Result<f64> {
    let hv = apply(spec, psi.amplitudes())?;
    Ok(psi.amplitudes().iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum())
}

fn norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(spec: &HamiltonianSpec, v: &[C64], lambda: f64) -> Result<f64> {
    let hv = apply(spec, v)?;
    Ok(hv
        .iter()
        .zip(v)
        .map(|(a, b)| (a - b * lambda).norm_sqr())
        .sum::<f64>()
        .sqrt())
}

fn rayleigh(spec: &HamiltonianSpec, v: &[C64]) -> Result<f64> {
    let hv = apply(spec, v)?;
    Ok(v.iter().zip(&hv).map(|(a, b)| (a.conj() * b).re).sum())
}

/// Lowest eigenpair, by power iteration on `1.1·I − H`.
pub fn ground(spec: &HamiltonianSpec) -> Result<GroundSolution> {
    spec.check_size()?;
    let mut rng = ChaCha8Rng::seed_from_u64(START_SEED);
    let mut v = random_pure(spec.n, &mut rng).amplitudes().to_vec();
    let mut iters = 0;
    while iters < POWER_MAX_ITERS {
        let hv = apply(spec, &v)?;
        let mut w: Vec<C64> = v.iter().zip(&hv).map(|(a, b)| a * SHIFT - b).collect();
        let nw = norm(&w);
        w.iter_mut().for_each(|z| *z /= nw);
        v = w;
        iters += 1;
        if iters % 16 == 0 && residual(spec, &v, rayleigh(spec, &v)?)? < POWER_TOL {
            break;
        }
    }
    let lambda = rayleigh(spec, &v)?;
    let res = residual(spec, &v, lambda)?;
    if res <= RESIDUAL_TOL {
        log::debug!("power iteration converged after {iters} steps, residual {res:.2e}");
        return Ok(GroundSolution {
            energy: lambda,
            state: PureState::normalized(v)?,
            residual: res,
        });
    }
    if spec.n <= DENSE_FALLBACK_QUBITS {
        log::debug!("power iteration stalled at residual {res:.2e}, diagonalising");
        return ground_dense(spec);
    }
    Err(Error::NonConvergence(iters))
}

/// Lowest eigenpair by full diagonalisation.
pub fn ground_dense(spec: &HamiltonianSpec) -> Result<GroundSolution> {
    let eig = hermitian_eig(&build(spec)?)?;
    let v = eig.vector(0);
    let energy = eig.values[0];
    let residual = residual(spec, &v, energy)?;
    Ok(GroundSolution {
        energy,
        state: PureState::normalized(v)?,
        residual,
    })
}

/// A named instance of the energy test.
#[derive(Debug, Clone)]
pub struct Instance {
    pub name: &'static str,
    pub spec: HamiltonianSpec,
}

/// Built-in instances, all with `N ≤ 4`.
pub fn instance_library() -> Vec<Instance> {
    let make = |name, spec: Result<HamiltonianSpec>| Instance {
        name,
        spec: spec.expect("built-in instance is valid"),
    };
    vec![
        make("pair-anti", HamiltonianSpec::single(2, 0, 1, -1)),
        make("pair-singlet", HamiltonianSpec::single(2, 0, 1, 1)),
        make("chain3-anti", HamiltonianSpec::uniform(3, &[(0, 1, -1), (1, 2, -1)])),
        make(
            "chain3-mixed",
            HamiltonianSpec::new(
                3,
                vec![
                    Term {
                        i: 0,
                        j: 1,
                        p: 0.7,
                        s: -1,
                    },
                    Term {
                        i: 1,
                        j: 2,
                        p: 0.3,
                        s: 1,
                    },
                ],
            ),
        ),
        make(
            "triangle3",
            HamiltonianSpec::uniform(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 1)]),
        ),
        make(
            "ring4",
            HamiltonianSpec::uniform(4, &[(0, 1, -1), (1, 2, 1), (2, 3, -1), (0, 3, 1)]),
        ),
    ]
}

pub fn instance(name: &str) -> Result<HamiltonianSpec> {
    instance_library()
        .into_iter()
        .find(|i| i.name == name)
        .map(|i| i.spec)
        .ok_or_else(|| Error::Unknown {
            kind: "instance",
            name: name.to_string(),
        })
}

/// Thresholds `(α, β)` of a yes/no pair, taken as their computed ground energies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha: f64,
    pub beta: f64,
}

impl Thresholds {
    pub fn from_pair(yes: &HamiltonianSpec, no: &HamiltonianSpec) -> Result<Self> {
        let alpha = ground(yes)?.energy;
        let beta = ground(no)?.energy;
        if alpha >= beta {
            return Err(Error::InvalidSpec(format!(
                "yes-instance energy {alpha} is not below no-instance energy {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }
}
