//! Truncated Fock-basis simulation of the probing circuit.
//!
//! States are stored block-diagonally in the total photon number. For two
//! modes, block `N` is indexed by the photon number `k` of the first mode,
//! with `N - k` photons in the second. Thermal inputs are truncated
//! individually so that the discarded mass stays below the tail bound.

use nalgebra::{Complex, DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{check_nonnegative, check_unit_interval, domain, Error, Result};
use crate::gaussian::CovarianceMatrix;
use crate::scenario::{ProbeSettings, SensingScenario};

pub type C64 = Complex<f64>;

pub const DEFAULT_TAIL_BOUND: f64 = 1e-10;
/// Largest per-input photon number the oracle will allocate.
pub const CUTOFF_CAP: usize = 160;
/// Eigenvalue floor for logarithms and support checks.
pub const EIGEN_FLOOR: f64 = 1e-14;
/// Largest thermal occupancy accepted by the circuit oracles.
pub const MAX_OCCUPANCY: f64 = 2.0;
/// Mass below which trailing photon-number blocks are discarded.
const TRIM_MASS: f64 = 1e-20;
/// Weight of `rho0` outside the numerical support of `rho1` that counts as
/// a support violation.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct FockDensityMatrix {
    modes: usize,
    tail_bound: f64,
    blocks: Vec<DMatrix<C64>>,
}

/// Smallest cutoff `c` with `(n / (1 + n))^(c + 1) <= tail`.
pub fn required_cutoff(nbar: f64, tail: f64) -> Result<usize> {
    check_nonnegative("nbar", nbar)?;
    if !(tail > 0.0 && tail < 1.0) {
        return Err(domain(format!("tail bound {tail} must lie in (0, 1)")));
    }
    if nbar == 0.0 {
        return Ok(0);
    }
    let ratio = nbar / (1.0 + nbar);
    let mut c = (tail.ln() / ratio.ln() - 1.0).ceil().max(0.0) as usize;
    while ratio.powi(c as i32 + 1) > tail {
        c += 1;
    }
    while c > 0 && ratio.powi(c as i32) <= tail {
        c -= 1;
    }
    Ok(c)
}

fn check_cutoff(required: usize, limit: Option<usize>) -> Result<()> {
    let cap = limit.map_or(CUTOFF_CAP, |l| l.min(CUTOFF_CAP));
    if required > cap {
        return Err(Error::Cutoff { required, cap });
    }
    Ok(())
}

fn thermal_probabilities(nbar: f64, cutoff: usize) -> Vec<f64> {
    if nbar == 0.0 {
        let mut p = vec![0.0; cutoff + 1];
        p[0] = 1.0;
        return p;
    }
    let ratio = nbar / (1.0 + nbar);
    let mut p = Vec::with_capacity(cutoff + 1);
    let mut x = 1.0 / (1.0 + nbar);
    for _ in 0..=cutoff {
        p.push(x);
        x *= ratio;
    }
    p
}

/// Single-mode thermal state truncated at `cutoff` photons.
pub fn thermal_fock(nbar: f64, cutoff: usize) -> Result<FockDensityMatrix> {
    thermal_fock_with(nbar, cutoff, DEFAULT_TAIL_BOUND)
}

pub fn thermal_fock_with(nbar: f64, cutoff: usize, tail_bound: f64) -> Result<FockDensityMatrix> {
    let required = required_cutoff(nbar, tail_bound)?;
    if cutoff < required || cutoff > CUTOFF_CAP {
        return Err(Error::Cutoff {
            required,
            cap: cutoff.min(CUTOFF_CAP),
        });
    }
    let blocks = thermal_probabilities(nbar, cutoff)
        .into_iter()
        .map(|p| DMatrix::from_element(1, 1, C64::new(p, 0.0)))
        .collect();
    Ok(FockDensityMatrix {
        modes: 1,
        tail_bound,
        blocks,
    })
}

/// Thermal state at the smallest cutoff meeting `tail_bound`.
pub fn thermal_fock_auto(nbar: f64, tail_bound: f64) -> Result<FockDensityMatrix> {
    let c = required_cutoff(nbar, tail_bound)?;
    check_cutoff(c, None)?;
    thermal_fock_with(nbar, c, tail_bound)
}

/// Beam-splitter matrices restricted to each total photon number.
///
/// `block(L)[(j, a)] = <j, L - j| U |a, L - a>` with `j`, `a` the photons
/// in the first port and Heisenberg action `a1 -> t a1 + r a2`,
/// `a2 -> -r a1 + t a2`.
#[derive(Debug, Clone)]
pub struct BeamSplitterTable {
    blocks: Vec<DMatrix<f64>>,
}

impl BeamSplitterTable {
    pub fn new(eta: f64, max_total: usize) -> Result<Self> {
        check_unit_interval("eta", eta)?;
        let (t, r) = (eta.sqrt(), (1.0 - eta).sqrt());
        let mut blocks = vec![DMatrix::from_element(1, 1, 1.0)];
        for l in 1..=max_total {
            let prev = &blocks[l - 1];
            let mut b = DMatrix::zeros(l + 1, l + 1);
            let lf = l as f64;
            for a in 0..=l {
                let (src, ci, cj, norm) = if a == 0 {
                    (prev.column(0), r, t, lf.sqrt())
                } else {
                    (prev.column(a - 1), t, -r, (a as f64).sqrt())
                };
                for j in 0..=l {
                    let mut v = 0.0;
                    if j > 0 {
                        v += ci * (j as f64).sqrt() * src[j - 1];
                    }
                    if j < l {
                        v += cj * ((l - j) as f64).sqrt() * src[j];
                    }
                    b[(j, a)] = v / norm;
                }
            }
            blocks.push(b);
        }
        Ok(BeamSplitterTable { blocks })
    }

    pub fn block(&self, total: usize) -> &DMatrix<f64> {
        &self.blocks[total]
    }

    pub fn max_total(&self) -> usize {
        self.blocks.len() - 1
    }
}

/// Which outputs survive when a thermal ancilla is mixed into a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Keep {
    /// Keep the ancilla and the untouched mode, trace the mixed mode.
    AncillaAndFirst,
    /// Keep the original two modes, trace the ancilla.
    Original,
}

/// Phase-covariant single-mode map `|y><y + d| -> E_d(y, z) |z><z + d|`
/// induced on the second port by a thermal ancilla and a beam splitter.
struct TransferMap {
    ymax: usize,
    zmax: usize,
    /// `E_d(y, z)` for `d >= 0`, index `(d (ymax + 1) + y) (zmax + 1) + z`.
    coeffs: Vec<f64>,
}

impl TransferMap {
    fn new(ancilla: &FockDensityMatrix, eta: f64, keep: Keep, ymax: usize) -> Result<Self> {
        let q: Vec<f64> = ancilla.blocks.iter().map(|b| b[(0, 0)].re).collect();
        let ct = q.len() - 1;
        let zmax = ct + ymax;
        let table = BeamSplitterTable::new(eta, ct + ymax)?;
        let per_d = (ymax + 1) * (zmax + 1);
        let slices: Vec<Vec<f64>> = (0..=ymax)
            .into_par_iter()
            .map(|d| {
                let mut e = vec![0.0; per_d];
                for y in 0..=ymax - d {
                    for (n, &qn) in q.iter().enumerate() {
                        if qn == 0.0 {
                            continue;
                        }
                        let (b1, b2) = (table.block(n + y), table.block(n + y + d));
                        for j in 0..=n + y {
                            let (z, v) = match keep {
                                Keep::Original => (n + y - j, b1[(j, n)] * b2[(j, n)]),
                                Keep::AncillaAndFirst => (j, b1[(j, n)] * b2[(j + d, n)]),
                            };
                            e[y * (zmax + 1) + z] += qn * v;
                        }
                    }
                }
                e
            })
            .collect();
        Ok(TransferMap {
            ymax,
            zmax,
            coeffs: slices.concat(),
        })
    }

    fn get(&self, d: i64, y: usize, z: usize) -> f64 {
        let (d, y, z) = if d >= 0 {
            (d as usize, y, z)
        } else {
            let s = (-d) as usize;
            if z < s || y < s {
                return 0.0;
            }
            (s, y - s, z - s)
        };
        if y + d > self.ymax || z > self.zmax {
            return 0.0;
        }
        self.coeffs[(d * (self.ymax + 1) + y) * (self.zmax + 1) + z]
    }
}

impl FockDensityMatrix {
    pub fn modes(&self) -> usize {
        self.modes
    }

    /// Largest total photon number represented.
    pub fn cutoff(&self) -> usize {
        self.blocks.len() - 1
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn blocks(&self) -> &[DMatrix<C64>] {
        &self.blocks
    }

    fn block_dim(&self, n: usize) -> usize {
        if self.modes == 1 {
            1
        } else {
            n + 1
        }
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace().re).sum()
    }

    pub fn purity(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| {
                (b - b.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.clone().symmetric_eigenvalues().min())
            .fold(f64::INFINITY, f64::min)
    }

    /// Checks the declared invariants.
    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if !(tr >= 1.0 - self.tail_bound - 1e-12 && tr <= 1.0 + 1e-12) {
            return Err(Error::Numeric(format!(
                "trace {tr} outside [1 - {}, 1]",
                self.tail_bound
            )));
        }
        let h = self.hermiticity_error();
        if h > 1e-12 {
            return Err(Error::Numeric(format!("not Hermitian: {h:e}")));
        }
        let m = self.min_eigenvalue();
        if m < -1e-12 {
            return Err(Error::Numeric(format!("negative eigenvalue {m:e}")));
        }
        Ok(())
    }

    /// Dense matrix in the product basis, index `n0 (c + 1) + n1`.
    pub fn to_dense(&self) -> DMatrix<C64> {
        let c = self.cutoff();
        if self.modes == 1 {
            return DMatrix::from_fn(c + 1, c + 1, |i, j| {
                if i == j {
                    self.blocks[i][(0, 0)]
                } else {
                    C64::new(0.0, 0.0)
                }
            });
        }
        let d = (c + 1) * (c + 1);
        let mut out = DMatrix::zeros(d, d);
        for (n, b) in self.blocks.iter().enumerate() {
            for k in 0..=n {
                for k2 in 0..=n {
                    out[(k * (c + 1) + n - k, k2 * (c + 1) + n - k2)] = b[(k, k2)];
                }
            }
        }
        out
    }

    /// Product of two single-mode states.
    pub fn tensor(&self, other: &FockDensityMatrix) -> Result<FockDensityMatrix> {
        if self.modes != 1 || other.modes != 1 {
            return Err(domain(
                "tensor product is implemented for single-mode factors",
            ));
        }
        let (ca, cb) = (self.cutoff(), other.cutoff());
        let blocks = (0..=ca + cb)
            .map(|m| {
                DMatrix::from_fn(m + 1, m + 1, |k, k2| {
                    if k == k2 && k <= ca && m - k <= cb {
                        self.blocks[k][(0, 0)] * other.blocks[m - k][(0, 0)]
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
            })
            .collect();
        Ok(FockDensityMatrix {
            modes: 2,
            tail_bound: self.tail_bound + other.tail_bound,
            blocks,
        })
    }

    fn require_two_modes(&self) -> Result<()> {
        if self.modes != 2 {
            return Err(domain("operation needs a two-mode state"));
        }
        Ok(())
    }

    /// Beam splitter between mode 0 (first port) and mode 1.
    pub fn beam_splitter(&self, eta: f64) -> Result<FockDensityMatrix> {
        self.require_two_modes()?;
        let table = BeamSplitterTable::new(eta, self.cutoff())?;
        let blocks = self
            .blocks
            .par_iter()
            .enumerate()
            .map(|(m, rho)| {
                let b = table.block(m).map(|x| C64::new(x, 0.0));
                &b * rho * b.transpose()
            })
            .collect();
        Ok(FockDensityMatrix {
            blocks,
            ..self.clone()
        })
    }

    /// Phase rotation `a -> e^{i theta} a` on one mode.
    pub fn phase(&self, mode: usize, theta: f64) -> Result<FockDensityMatrix> {
        if mode >= self.modes {
            return Err(domain(format!("mode {mode} out of range")));
        }
        if self.modes == 1 {
            return Ok(self.clone());
        }
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(m, rho)| {
                let count = |k: usize| if mode == 0 { k } else { m - k } as f64;
                DMatrix::from_fn(m + 1, m + 1, |x, y| {
                    rho[(x, y)] * C64::from_polar(1.0, theta * (count(x) - count(y)))
                })
            })
            .collect();
        Ok(FockDensityMatrix {
            blocks,
            ..self.clone()
        })
    }

    pub fn swap(&self) -> Result<FockDensityMatrix> {
        self.require_two_modes()?;
        let blocks = self
            .blocks
            .iter()
            .enumerate()
            .map(|(m, rho)| DMatrix::from_fn(m + 1, m + 1, |x, y| rho[(m - x, m - y)]))
            .collect();
        Ok(FockDensityMatrix {
            blocks,
            ..self.clone()
        })
    }

    /// Single-mode marginal of mode 0 or 1.
    pub fn reduced(&self, mode: usize) -> Result<FockDensityMatrix> {
        self.require_two_modes()?;
        if mode > 1 {
            return Err(domain(format!("mode {mode} out of range")));
        }
        let mut p = vec![0.0; self.cutoff() + 1];
        for (m, rho) in self.blocks.iter().enumerate() {
            for k in 0..=m {
                let n = if mode == 0 { k } else { m - k };
                p[n] += rho[(k, k)].re;
            }
        }
        Ok(FockDensityMatrix {
            modes: 1,
            tail_bound: self.tail_bound,
            blocks: p
                .into_iter()
                .map(|x| DMatrix::from_element(1, 1, C64::new(x, 0.0)))
                .collect(),
        })
    }

    /// Mixes a thermal ancilla (first port) with mode 1 (second port) on a
    /// beam splitter of transmissivity `eta`, then traces one output.
    ///
    /// `Keep::AncillaAndFirst` returns modes (ancilla, mode 0);
    /// `Keep::Original` returns (mode 0, mode 1).
    pub fn mix_thermal(
        &self,
        ancilla: &FockDensityMatrix,
        eta: f64,
        keep: Keep,
    ) -> Result<FockDensityMatrix> {
        self.require_two_modes()?;
        if ancilla.modes != 1 {
            return Err(domain("ancilla must be a single-mode state"));
        }
        let map = TransferMap::new(ancilla, eta, keep, self.cutoff())?;
        let ymax = self.cutoff();
        let blocks = (0..=map.zmax)
            .into_par_iter()
            .map(|big_n| {
                DMatrix::from_fn(big_n + 1, big_n + 1, |x, x2| {
                    let (k, z, k2, z2) = match keep {
                        Keep::Original => (x, big_n - x, x2, big_n - x2),
                        Keep::AncillaAndFirst => (big_n - x, x, big_n - x2, x2),
                    };
                    let d = z2 as i64 - z as i64;
                    let mut acc = C64::new(0.0, 0.0);
                    for y in 0..=ymax {
                        let y2 = y as i64 + d;
                        let m = k + y;
                        if y2 < 0 || y2 as usize > ymax || m > ymax || k2 > m {
                            continue;
                        }
                        let e = map.get(d, y, z);
                        if e != 0.0 {
                            acc += self.blocks[m][(k, k2)] * e;
                        }
                    }
                    acc
                })
            })
            .collect();
        Ok(FockDensityMatrix {
            modes: 2,
            tail_bound: self.tail_bound + ancilla.tail_bound,
            blocks,
        }
        .trimmed())
    }

    /// Drops trailing blocks holding less than `TRIM_MASS` in total.
    fn trimmed(mut self) -> Self {
        let mut dropped = 0.0;
        while self.blocks.len() > 1 {
            let m = self.blocks.last().map_or(0.0, |b| b.trace().re.abs());
            if dropped + m > TRIM_MASS {
                break;
            }
            dropped += m;
            self.blocks.pop();
        }
        self.tail_bound += dropped;
        self
    }

    /// `N_ij = <a_i^dagger a_j>`.
    pub fn number_matrix(&self) -> DMatrix<C64> {
        if self.modes == 1 {
            let n: f64 = self
                .blocks
                .iter()
                .enumerate()
                .map(|(k, b)| k as f64 * b[(0, 0)].re)
                .sum();
            return DMatrix::from_element(1, 1, C64::new(n, 0.0));
        }
        let mut nm = DMatrix::<C64>::zeros(2, 2);
        for (m, rho) in self.blocks.iter().enumerate() {
            for k in 0..=m {
                nm[(0, 0)] += rho[(k, k)] * k as f64;
                nm[(1, 1)] += rho[(k, k)] * (m - k) as f64;
                if k < m {
                    nm[(0, 1)] += rho[(k, k + 1)] * (((k + 1) * (m - k)) as f64).sqrt();
                }
            }
        }
        nm[(1, 0)] = nm[(0, 1)].conj();
        nm
    }

    /// Covariance matrix of the state. First moments vanish identically
    /// because every block has a fixed photon number.
    pub fn covariance(&self) -> Result<CovarianceMatrix> {
        let nm = self.number_matrix();
        let m = self.modes;
        let mut v = DMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let re = nm[(i, j)].re + if i == j { 0.5 } else { 0.0 };
                let im = nm[(i, j)].im;
                v[(i, j)] = re;
                v[(m + i, m + j)] = re;
                v[(i, m + j)] = im;
                v[(m + j, i)] = im;
            }
        }
        CovarianceMatrix::new(v)
    }
}

fn padded<'a>(
    blocks: &'a [DMatrix<C64>],
    n: usize,
    dim: usize,
) -> std::borrow::Cow<'a, DMatrix<C64>> {
    match blocks.get(n) {
        Some(b) => std::borrow::Cow::Borrowed(b),
        None => std::borrow::Cow::Owned(DMatrix::zeros(dim, dim)),
    }
}

fn check_pair(a: &FockDensityMatrix, b: &FockDensityMatrix) -> Result<usize> {
    if a.modes != b.modes {
        return Err(domain(format!("mode mismatch: {} vs {}", a.modes, b.modes)));
    }
    Ok(a.cutoff().max(b.cutoff()))
}

fn hermitian_eigen(m: &DMatrix<C64>) -> (DVector<f64>, DMatrix<C64>) {
    let e = m.clone().symmetric_eigen();
    (e.eigenvalues, e.eigenvectors)
}

/// `D(rho0 || rho1) = tr rho0 ln rho0 - tr rho0 ln rho1`, blockwise.
pub fn oracle_qre(rho0: &FockDensityMatrix, rho1: &FockDensityMatrix) -> Result<f64> {
    oracle_qre_with(rho0, rho1, EIGEN_FLOOR)
}

pub fn oracle_qre_with(
    rho0: &FockDensityMatrix,
    rho1: &FockDensityMatrix,
    floor: f64,
) -> Result<f64> {
    let c = check_pair(rho0, rho1)?;
    let terms: Vec<Result<f64>> = (0..=c)
        .into_par_iter()
        .map(|n| {
            let dim = rho0.block_dim(n);
            let a = padded(&rho0.blocks, n, dim);
            let b = padded(&rho1.blocks, n, dim);
            let (la, _) = hermitian_eigen(&a);
            let mut d: f64 = la.iter().filter(|&&x| x > floor).map(|&x| x * x.ln()).sum();
            let (lb, vb) = hermitian_eigen(&b);
            for (k, &mu) in lb.iter().enumerate() {
                let v = vb.column(k);
                let w = (v.adjoint() * a.as_ref() * v)[(0, 0)].re;
                if mu <= floor && w > SUPPORT_TOL {
                    return Err(Error::InfiniteQre { eigenvalue: mu });
                }
                d -= w * mu.max(floor).ln();
            }
            Ok(d)
        })
        .collect();
    terms.into_iter().sum()
}

/// Uhlmann fidelity `tr sqrt(sqrt(rho0) rho1 sqrt(rho0))`, blockwise.
pub fn oracle_fidelity(rho0: &FockDensityMatrix, rho1: &FockDensityMatrix) -> Result<f64> {
    let c = check_pair(rho0, rho1)?;
    let parts: Vec<f64> = (0..=c)
        .into_par_iter()
        .map(|n| {
            let dim = rho0.block_dim(n);
            let a = padded(&rho0.blocks, n, dim);
            let b = padded(&rho1.blocks, n, dim);
            let (la, va) = hermitian_eigen(&a);
            let sq = DMatrix::from_diagonal(&la.map(|x| C64::new(x.max(0.0).sqrt(), 0.0)));
            let root = &va * sq * va.adjoint();
            let inner = &root * b.as_ref() * &root;
            let inner = (&inner + inner.adjoint()) * C64::new(0.5, 0.0);
            inner
                .symmetric_eigenvalues()
                .iter()
                .map(|x| x.max(0.0).sqrt())
                .sum()
        })
        .collect();
    Ok(parts.into_iter().sum())
}

fn check_occupancy(name: &str, n: f64) -> Result<()> {
    check_nonnegative(name, n)?;
    if n > MAX_OCCUPANCY {
        return Err(domain(format!(
            "{name} = {n} exceeds the oracle limit {MAX_OCCUPANCY}"
        )));
    }
    Ok(())
}

/// Thermal inputs, each truncated at its own tail share.
fn thermal_inputs(
    occupancies: &[f64],
    cutoff: Option<usize>,
    tail_bound: f64,
) -> Result<Vec<FockDensityMatrix>> {
    let share = tail_bound / occupancies.len() as f64;
    occupancies
        .iter()
        .map(|&n| {
            let c = required_cutoff(n, share)?;
            check_cutoff(c, cutoff)?;
            thermal_fock_with(n, c, share)
        })
        .collect()
}

/// Willie's two-mode state `(W1, W2)` from the Fock-basis circuit.
/// `cutoff` limits the per-input truncation.
pub fn oracle_willie_state(
    s: &SensingScenario,
    ns: f64,
    theta: f64,
    cutoff: Option<usize>,
) -> Result<FockDensityMatrix> {
    s.validate()?;
    check_occupancy("nb1", s.nb1)?;
    check_occupancy("nb2", s.nb2)?;
    check_occupancy("ns", ns)?;
    if !theta.is_finite() {
        return Err(domain("theta must be finite"));
    }
    let inputs = thermal_inputs(&[s.nb1, ns, s.nb2], cutoff, DEFAULT_TAIL_BOUND)?;
    inputs[0]
        .tensor(&inputs[1])?
        .beam_splitter(s.eta1)?
        .phase(1, theta)?
        .mix_thermal(&inputs[2], s.eta2, Keep::AncillaAndFirst)
}

/// Alice's two-mode state `(returned signal, LO)` from the Fock-basis
/// circuit, with the ASE correlation produced by splitting one thermal beam.
pub fn oracle_alice_state(
    s: &SensingScenario,
    p: &ProbeSettings,
    cutoff: Option<usize>,
) -> Result<FockDensityMatrix> {
    s.validate()?;
    p.validate()?;
    check_occupancy("nb1", s.nb1)?;
    check_occupancy("nb2", s.nb2)?;
    let total = p.ns + p.nlo;
    check_occupancy("ns + nlo", total)?;
    let split = if total > 0.0 { p.ns / total } else { 0.0 };
    let inputs = thermal_inputs(&[0.0, total, s.nb1, s.nb2], cutoff, DEFAULT_TAIL_BOUND)?;
    inputs[0]
        .tensor(&inputs[1])?
        .beam_splitter(split)?
        .mix_thermal(&inputs[2], s.eta1, Keep::Original)?
        .phase(1, p.theta)?
        .mix_thermal(&inputs[3], s.eta2, Keep::Original)?
        .swap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::thermal_cm;
    use crate::scenario::{alice_cm, willie_cm};
    use approx::assert_relative_eq;

    #[test]
    fn cutoff_selection() {
        assert_eq!(required_cutoff(0.0, 1e-10).unwrap(), 0);
        let c = required_cutoff(1.0, 1e-10).unwrap();
        assert!(0.5f64.powi(c as i32 + 1) <= 1e-10);
        assert!(0.5f64.powi(c as i32) > 1e-10);
        assert!(
            matches!(thermal_fock(1.0, 5), Err(Error::Cutoff { required, .. }) if required == c)
        );
        assert!(matches!(
            thermal_fock_auto(1e4, 1e-10),
            Err(Error::Cutoff { .. })
        ));
    }

    #[test]
    fn thermal_distribution() {
        let t = thermal_fock_auto(1.0, 1e-10).unwrap();
        for k in 0..5 {
            assert_relative_eq!(
                t.blocks()[k][(0, 0)].re,
                0.5f64.powi(k as i32 + 1),
                max_relative = 1e-15
            );
        }
        assert!(t.trace() >= 1.0 - 1e-10);
        t.validate().unwrap();
        let v = thermal_fock(0.0, 0).unwrap();
        assert_eq!(v.trace(), 1.0);
        assert_eq!(v.purity(), 1.0);
    }

    #[test]
    fn beam_splitter_blocks_unitary() {
        let table = BeamSplitterTable::new(0.3, 40).unwrap();
        for l in [0, 1, 7, 40] {
            let b = table.block(l);
            let err = (b.transpose() * b - DMatrix::identity(l + 1, l + 1)).amax();
            assert!(err < 1e-10, "L = {l}: {err:e}");
        }
        let b1 = table.block(1);
        assert_relative_eq!(b1[(1, 1)], 0.3f64.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(b1[(0, 1)], -(0.7f64).sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn vacuum_thermal_qre_and_fidelity() {
        let vac = thermal_fock(0.0, 0)
            .unwrap()
            .tensor(&thermal_fock(0.0, 0).unwrap())
            .unwrap();
        let th = thermal_fock_auto(1.0, 1e-12).unwrap();
        let thth = th.tensor(&th).unwrap();
        assert_relative_eq!(
            oracle_qre(&vac, &thth).unwrap(),
            2.0 * 2f64.ln(),
            max_relative = 1e-9
        );
        assert!(oracle_qre(&vac, &vac).unwrap().abs() < 1e-10);
        let thv = th.tensor(&thermal_fock(0.0, 0).unwrap()).unwrap();
        assert_relative_eq!(
            oracle_fidelity(&vac, &thv).unwrap(),
            0.5f64.sqrt(),
            max_relative = 1e-10
        );
        assert!(matches!(
            oracle_qre(&thv, &vac),
            Err(Error::InfiniteQre { .. })
        ));
    }

    #[test]
    fn moments_of_product() {
        let a = thermal_fock_auto(0.7, 1e-12).unwrap();
        let b = thermal_fock_auto(1.5, 1e-12).unwrap();
        let v = a.tensor(&b).unwrap().covariance().unwrap();
        assert!(v.max_abs_diff(&thermal_cm(&[0.7, 1.5]).unwrap()) < 1e-8);
    }

    #[test]
    fn willie_moments_match() {
        let s = SensingScenario::new(0.6, 0.45, 1.2, 0.8).unwrap();
        let rho = oracle_willie_state(&s, 0.08, 0.7, None).unwrap();
        rho.validate().unwrap();
        let v = rho.covariance().unwrap();
        let expected = willie_cm(&s, 0.08, 0.7).unwrap();
        assert!(
            v.max_abs_diff(&expected) < 1e-6,
            "{}",
            v.max_abs_diff(&expected)
        );
        assert_relative_eq!(rho.purity(), expected.purity(), max_relative = 1e-6);
    }

    #[test]
    fn willie_lossless_is_product() {
        let s = SensingScenario::new(1.0, 1.0, 0.4, 0.9).unwrap();
        let rho = oracle_willie_state(&s, 0.0, 0.2, None).unwrap();
        let v = rho.covariance().unwrap();
        assert!(v.max_abs_diff(&thermal_cm(&[0.9, 0.4]).unwrap()) < 1e-8);
    }

    #[test]
    fn alice_moments_match() {
        let s = SensingScenario::new(0.7, 0.5, 0.6, 0.3).unwrap();
        let p = ProbeSettings::new(0.1, 1.2, 0.9).unwrap();
        let rho = oracle_alice_state(&s, &p, None).unwrap();
        rho.validate().unwrap();
        let v = rho.covariance().unwrap();
        let expected = alice_cm(&s, &p).unwrap();
        assert!(
            v.max_abs_diff(&expected) < 1e-6,
            "{}",
            v.max_abs_diff(&expected)
        );
    }

    #[test]
    fn occupancy_limit() {
        let s = SensingScenario::symmetric(0.5, 3.0).unwrap();
        assert!(oracle_willie_state(&s, 0.01, 0.0, None).is_err());
        let t = SensingScenario::symmetric(0.5, 2.0).unwrap();
        assert!(matches!(
            oracle_willie_state(&t, 0.01, 0.0, Some(10)),
            Err(Error::Cutoff { .. })
        ));
    }
}
