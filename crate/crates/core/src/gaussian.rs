//! Zero-mean Gaussian states in the covariance-matrix picture.
//!
//! Quadratures are ordered `q_1..q_N, p_1..p_N` and the vacuum has covariance
//! `I/2`.

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{check_nonnegative, check_unit_interval, domain, Error, Result};

/// Numerical tolerances used by the Gaussian routines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Allowed asymmetry before symmetrizing on construction.
    pub symmetry: f64,
    /// Slack below 1/2 accepted for symplectic eigenvalues.
    pub physicality: f64,
    /// Pairing tolerance for the doubly degenerate eigenvalue moduli.
    pub dedup: f64,
    /// Entry tolerance when checking a diagonalizer.
    pub diagonal: f64,
    /// Entry tolerance for detecting phase-insensitive structure.
    pub phase_insensitive: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symmetry: 1e-12,
            physicality: 1e-10,
            dedup: 1e-8,
            diagonal: 1e-10,
            phase_insensitive: 1e-12,
        }
    }
}

/// Covariance matrix of an `N`-mode zero-mean Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    n_modes: usize,
    entries: DMatrix<f64>,
}

/// The symplectic form `[[0, I], [-I, 0]]` for `n` modes.
pub fn omega(n: usize) -> DMatrix<f64> {
    let mut w = DMatrix::zeros(2 * n, 2 * n);
    for k in 0..n {
        w[(k, n + k)] = 1.0;
        w[(n + k, k)] = -1.0;
    }
    w
}

impl CovarianceMatrix {
    /// Validates and symmetrizes `entries`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::new_with(entries, &Tolerances::default())
    }

    pub fn new_with(entries: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        let cm = Self::from_raw(entries)?;
        let scale = cm.entries.amax().max(1.0);
        let asym = (&cm.entries - cm.entries.transpose()).amax();
        if asym > 1e6 * tol.symmetry * scale {
            return Err(domain(format!(
                "matrix is not symmetric (max asymmetry {asym})"
            )));
        }
        cm.check_physical(tol)?;
        Ok(cm)
    }

    /// Builds without the physicality check. Used for intermediate matrices
    /// known to be physical and for finite-difference stencils.
    pub(crate) fn from_raw(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || dim != entries.ncols() || dim % 2 != 0 {
            return Err(domain(format!(
                "covariance matrix must be 2N x 2N, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(domain("covariance matrix has non-finite entries"));
        }
        let entries = (&entries + entries.transpose()) * 0.5;
        Ok(CovarianceMatrix {
            n_modes: dim / 2,
            entries,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// Smallest symplectic eigenvalue; errors if the matrix is not positive definite.
    pub fn min_symplectic_eigenvalue(&self) -> Result<f64> {
        let eig = SymmetricEigen::new(self.entries.clone());
        let min_eig = eig.eigenvalues.min();
        if !(min_eig > 0.0) {
            return Err(Error::Unphysical {
                min_symplectic: 0.0,
            });
        }
        let u = symplectic_eigenvalues_generic(self, &Tolerances::default())?;
        Ok(u.iter().cloned().fold(f64::INFINITY, f64::min))
    }

    pub fn check_physical(&self, tol: &Tolerances) -> Result<()> {
        let u = self.min_symplectic_eigenvalue()?;
        if u < 0.5 - tol.physicality {
            return Err(Error::Unphysical { min_symplectic: u });
        }
        Ok(())
    }

    pub fn is_physical(&self) -> bool {
        self.check_physical(&Tolerances::default()).is_ok()
    }

    /// Marginal covariance matrix of the listed modes, in the given order.
    pub fn reduced(&self, modes: &[usize]) -> Result<CovarianceMatrix> {
        let n = self.n_modes;
        if modes.is_empty() {
            return Err(domain("reduced state needs at least one mode"));
        }
        for (a, &m) in modes.iter().enumerate() {
            if m >= n {
                return Err(domain(format!("mode {m} out of range for {n} modes")));
            }
            if modes[..a].contains(&m) {
                return Err(domain(format!("mode {m} listed twice")));
            }
        }
        let k = modes.len();
        let idx: Vec<usize> = modes
            .iter()
            .cloned()
            .chain(modes.iter().map(|&m| m + n))
            .collect();
        let out = DMatrix::from_fn(2 * k, 2 * k, |i, j| self.entries[(idx[i], idx[j])]);
        Ok(CovarianceMatrix {
            n_modes: k,
            entries: out,
        })
    }

    /// Direct sum with another state (this state's modes come first).
    pub fn tensor(&self, other: &CovarianceMatrix) -> CovarianceMatrix {
        let (a, b) = (self.n_modes, other.n_modes);
        let n = a + b;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        let map_a = |i: usize| if i < a { i } else { i - a + n };
        let map_b = |i: usize| if i < b { i + a } else { i - b + n + a };
        for i in 0..2 * a {
            for j in 0..2 * a {
                out[(map_a(i), map_a(j))] = self.entries[(i, j)];
            }
        }
        for i in 0..2 * b {
            for j in 0..2 * b {
                out[(map_b(i), map_b(j))] = other.entries[(i, j)];
            }
        }
        CovarianceMatrix {
            n_modes: n,
            entries: out,
        }
    }

    /// Maximum absolute entry difference.
    pub fn max_abs_diff(&self, other: &CovarianceMatrix) -> f64 {
        if self.entries.shape() != other.entries.shape() {
            return f64::INFINITY;
        }
        (&self.entries - &other.entries).amax()
    }

    /// Applies `V -> S V S^T`.
    pub fn transform(&self, s: &DMatrix<f64>) -> CovarianceMatrix {
        let out = s * &self.entries * s.transpose();
        CovarianceMatrix {
            n_modes: self.n_modes,
            entries: (&out + out.transpose()) * 0.5,
        }
    }

    /// Purity `tr(rho^2) = 1 / (2^N sqrt(det V))`.
    pub fn purity(&self) -> f64 {
        let det = self.entries.determinant();
        1.0 / (2f64.powi(self.n_modes as i32) * det.sqrt())
    }

    fn check_mode(&self, m: usize) -> Result<()> {
        if m >= self.n_modes {
            return Err(domain(format!(
                "mode {m} out of range for {} modes",
                self.n_modes
            )));
        }
        Ok(())
    }

    /// True when `V_qq = V_pp` and `V_qp` is antisymmetric.
    pub fn is_phase_insensitive(&self, tol: f64) -> bool {
        let n = self.n_modes;
        let scale = self.entries.amax().max(1.0);
        for i in 0..n {
            for j in 0..n {
                let dqq = self.entries[(i, j)] - self.entries[(n + i, n + j)];
                let dqp = self.entries[(i, n + j)] + self.entries[(j, n + i)];
                if dqq.abs() > tol * scale || dqp.abs() > tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Product of thermal states with the given occupancies.
pub fn thermal_cm(occupancies: &[f64]) -> Result<CovarianceMatrix> {
    if occupancies.is_empty() {
        return Err(domain("need at least one mode"));
    }
    for (k, &n) in occupancies.iter().enumerate() {
        check_nonnegative(&format!("occupancy[{k}]"), n)?;
    }
    let n = occupancies.len();
    let diag: Vec<f64> = occupancies
        .iter()
        .chain(occupancies.iter())
        .map(|x| x + 0.5)
        .collect();
    Ok(CovarianceMatrix {
        n_modes: n,
        entries: DMatrix::from_diagonal(&DVector::from_vec(diag)),
    })
}

/// Two-mode state emitted by the ASE source: a signal mode and its
/// classically correlated local-oscillator mode.
pub fn ase_two_mode_cm(ns: f64, nlo: f64) -> Result<CovarianceMatrix> {
    check_nonnegative("ns", ns)?;
    check_nonnegative("nlo", nlo)?;
    let c = (ns * nlo).sqrt();
    let mut v = DMatrix::zeros(4, 4);
    for off in [0, 2] {
        v[(off, off)] = ns + 0.5;
        v[(off + 1, off + 1)] = nlo + 0.5;
        v[(off, off + 1)] = c;
        v[(off + 1, off)] = c;
    }
    Ok(CovarianceMatrix {
        n_modes: 2,
        entries: v,
    })
}

/// Symplectic matrix of a beam splitter between modes `i` and `j`.
pub fn beam_splitter_matrix(n: usize, i: usize, j: usize, eta: f64) -> Result<DMatrix<f64>> {
    check_unit_interval("transmissivity", eta)?;
    if i >= n || j >= n || i == j {
        return Err(domain(format!(
            "invalid beam splitter modes ({i}, {j}) for {n} modes"
        )));
    }
    let t = eta.sqrt();
    let r = (1.0 - eta).sqrt();
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for off in [0, n] {
        s[(off + i, off + i)] = t;
        s[(off + i, off + j)] = r;
        s[(off + j, off + i)] = -r;
        s[(off + j, off + j)] = t;
    }
    Ok(s)
}

/// Symplectic matrix of a phase rotation on mode `i`.
pub fn phase_matrix(n: usize, i: usize, theta: f64) -> Result<DMatrix<f64>> {
    if i >= n {
        return Err(domain(format!("mode {i} out of range for {n} modes")));
    }
    let (s, c) = theta.sin_cos();
    let mut m = DMatrix::identity(2 * n, 2 * n);
    m[(i, i)] = c;
    m[(i, n + i)] = -s;
    m[(n + i, i)] = s;
    m[(n + i, n + i)] = c;
    Ok(m)
}

pub fn apply_beam_splitter(
    cm: &CovarianceMatrix,
    i: usize,
    j: usize,
    eta: f64,
) -> Result<CovarianceMatrix> {
    let s = beam_splitter_matrix(cm.n_modes, i, j, eta)?;
    Ok(cm.transform(&s))
}

pub fn apply_phase(cm: &CovarianceMatrix, i: usize, theta: f64) -> Result<CovarianceMatrix> {
    if !theta.is_finite() {
        return Err(domain("phase must be finite"));
    }
    let s = phase_matrix(cm.n_modes, i, theta)?;
    Ok(cm.transform(&s))
}

/// Thermal-loss channel on mode `i`: `V -> X V X^T + Y`.
pub fn apply_thermal_channel(
    cm: &CovarianceMatrix,
    i: usize,
    eta: f64,
    nb: f64,
) -> Result<CovarianceMatrix> {
    check_unit_interval("transmissivity", eta)?;
    check_nonnegative("nb", nb)?;
    cm.check_mode(i)?;
    let n = cm.n_modes;
    let t = eta.sqrt();
    let mut v = cm.entries.clone();
    for idx in [i, n + i] {
        for k in 0..2 * n {
            v[(idx, k)] *= t;
            v[(k, idx)] *= t;
        }
    }
    let y = (1.0 - eta) * (nb + 0.5);
    v[(i, i)] += y;
    v[(n + i, n + i)] += y;
    Ok(CovarianceMatrix {
        n_modes: n,
        entries: v,
    })
}

/// Williamson data of a covariance matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticSpectrum {
    /// Symplectic eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Symplectic `M` with `M V M^T = diag(u, u)`.
    pub eigenvector_matrix: DMatrix<f64>,
    /// Beam-splitter mixing of the two-mode closed form.
    pub mixing_angle: Option<f64>,
    /// Mean q/p diagonal of `M V0 M^T` for a reference state `V0`.
    pub relative_diagonal: Option<Vec<f64>>,
}

pub fn symplectic_spectrum(
    cm: &CovarianceMatrix,
    reference: Option<&CovarianceMatrix>,
) -> Result<SymplecticSpectrum> {
    symplectic_spectrum_with(cm, reference, &Tolerances::default())
}

pub fn symplectic_spectrum_with(
    cm: &CovarianceMatrix,
    reference: Option<&CovarianceMatrix>,
    tol: &Tolerances,
) -> Result<SymplecticSpectrum> {
    if let Some(r) = reference {
        if r.n_modes != cm.n_modes {
            return Err(domain(format!(
                "reference has {} modes, state has {}",
                r.n_modes, cm.n_modes
            )));
        }
    }
    let (eigenvalues, m, tau) = if cm.n_modes == 2 && cm.is_phase_insensitive(tol.phase_insensitive)
    {
        let (u, m, tau) = two_mode_closed_form(cm, tol)?;
        (u, m, Some(tau))
    } else {
        let (u, m) = williamson(cm, tol)?;
        (u, m, None)
    };
    if let Some(&umin) = eigenvalues.last() {
        if umin < 0.5 - tol.physicality {
            return Err(Error::Unphysical {
                min_symplectic: umin,
            });
        }
    }
    let relative_diagonal = reference.map(|r| relative_diagonal(&m, r));
    Ok(SymplecticSpectrum {
        eigenvalues,
        eigenvector_matrix: m,
        mixing_angle: tau,
        relative_diagonal,
    })
}

fn relative_diagonal(m: &DMatrix<f64>, v0: &CovarianceMatrix) -> Vec<f64> {
    let n = v0.n_modes;
    let w = m * &v0.entries * m.transpose();
    (0..n)
        .map(|k| 0.5 * (w[(k, k)] + w[(n + k, n + k)]))
        .collect()
}

/// Symplectic eigenvalues as the paired moduli of the eigenvalues of `Omega V`.
pub fn symplectic_eigenvalues_generic(cm: &CovarianceMatrix, tol: &Tolerances) -> Result<Vec<f64>> {
    let a = omega(cm.n_modes) * &cm.entries;
    let ev = a.complex_eigenvalues();
    let mut moduli: Vec<f64> = ev.iter().map(|z: &Complex<f64>| z.norm()).collect();
    moduli.sort_by(|x, y| y.total_cmp(x));
    let mut out = Vec::with_capacity(cm.n_modes);
    for pair in moduli.chunks(2) {
        let gap = (pair[0] - pair[1]).abs();
        if gap > tol.dedup * pair[0].max(1.0) {
            return Err(Error::Numeric(format!(
                "symplectic eigenvalue moduli {} and {} do not pair",
                pair[0], pair[1]
            )));
        }
        out.push(0.5 * (pair[0] + pair[1]));
    }
    Ok(out)
}

/// Closed form for phase-insensitive two-mode states. The Hermitian matrix
/// `H = V_qq + i V_qp` has the symplectic eigenvalues as eigenvalues and a
/// beam splitter with a phase as diagonalizer.
fn two_mode_closed_form(
    cm: &CovarianceMatrix,
    tol: &Tolerances,
) -> Result<(Vec<f64>, DMatrix<f64>, f64)> {
    let v = &cm.entries;
    let w11 = v[(0, 0)];
    let w22 = v[(1, 1)];
    let h12 = Complex::new(v[(0, 1)], v[(0, 3)]);
    let mag = h12.norm();
    let r = (4.0 * mag * mag + (w11 - w22).powi(2)).sqrt();
    let u1 = 0.5 * (w11 + w22) + 0.5 * r;
    let u2 = 0.5 * (w11 + w22) - 0.5 * r;
    // R = 0 means H is proportional to the identity; pick the balanced splitter.
    let (tau, phi) = if r > 0.0 {
        (((w11 - w22) / (2.0 * r) + 0.5).clamp(0.0, 1.0), h12.arg())
    } else {
        (0.5, 0.0)
    };
    let a = tau.sqrt();
    let b = (1.0 - tau).sqrt();
    let e = Complex::from_polar(1.0, phi);
    // Rows are the conjugated eigenvectors of H.
    let rows = [
        [Complex::new(a, 0.0), b * e],
        [-b * e.conj(), Complex::new(a, 0.0)],
    ];
    let build = |conj: bool| {
        let mut m = DMatrix::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                let z = if conj { rows[i][j].conj() } else { rows[i][j] };
                m[(i, j)] = z.re;
                m[(i, 2 + j)] = -z.im;
                m[(2 + i, j)] = z.im;
                m[(2 + i, 2 + j)] = z.re;
            }
        }
        m
    };
    let target = DMatrix::from_diagonal(&DVector::from_vec(vec![u1, u2, u1, u2]));
    let scale = u1.abs().max(1.0);
    let mut best: Option<(f64, DMatrix<f64>)> = None;
    for conj in [false, true] {
        let m = build(conj);
        let err = (&m * v * m.transpose() - &target).amax();
        if best.as_ref().is_none_or(|(e0, _)| err < *e0) {
            best = Some((err, m));
        }
    }
    let (err, m) = best.expect("two candidates");
    if err > tol.diagonal * scale * 1e3 {
        return Err(Error::Numeric(format!(
            "closed-form diagonalizer residual {err}"
        )));
    }
    Ok((vec![u1, u2], m, tau))
}

/// Williamson decomposition through `A = V^{-1/2} Omega V^{-1/2}`.
fn williamson(cm: &CovarianceMatrix, tol: &Tolerances) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let n = cm.n_modes;
    let dim = 2 * n;
    let eig = SymmetricEigen::new(cm.entries.clone());
    if !(eig.eigenvalues.min() > 0.0) {
        return Err(Error::Unphysical {
            min_symplectic: 0.0,
        });
    }
    let q = &eig.eigenvectors;
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|x| 1.0 / x.sqrt()));
    let v_inv_half = q * inv_sqrt * q.transpose();
    let a = &v_inv_half * omega(n) * &v_inv_half;
    let neg_a2 = -(&a * &a);
    let neg_a2 = (&neg_a2 + neg_a2.transpose()) * 0.5;
    let e2 = SymmetricEigen::new(neg_a2.clone());
    // Largest 1/u^2 first means smallest u first; reverse later.
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| e2.eigenvalues[y].total_cmp(&e2.eigenvalues[x]));

    let mut es: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut fs: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut us: Vec<f64> = Vec::with_capacity(n);
    for &k in &order {
        if es.len() == n {
            break;
        }
        let mut e = e2.eigenvectors.column(k).into_owned();
        for _ in 0..2 {
            for b in es.iter().chain(fs.iter()) {
                let c = b.dot(&e);
                e -= b * c;
            }
        }
        let norm = e.norm();
        if norm < 0.5 {
            continue;
        }
        e /= norm;
        let s2 = e.dot(&(&neg_a2 * &e));
        if !(s2 > 0.0) {
            return Err(Error::Numeric("non-positive Williamson eigenvalue".into()));
        }
        let s = s2.sqrt();
        let f = -(&a * &e) / s;
        us.push(1.0 / s);
        es.push(e);
        fs.push(f);
    }
    if es.len() != n {
        return Err(Error::Numeric(
            "Williamson basis construction failed".into(),
        ));
    }
    // Sort descending in u.
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| us[y].total_cmp(&us[x]));
    let mut o = DMatrix::zeros(dim, dim);
    let mut u_sorted = Vec::with_capacity(n);
    for (col, &k) in idx.iter().enumerate() {
        o.set_column(col, &es[k]);
        o.set_column(n + col, &fs[k]);
        u_sorted.push(us[k]);
    }
    let d_half: Vec<f64> = u_sorted
        .iter()
        .chain(u_sorted.iter())
        .map(|u| u.sqrt())
        .collect();
    let m = DMatrix::from_diagonal(&DVector::from_vec(d_half)) * o.transpose() * v_inv_half;
    let _ = tol;
    Ok((u_sorted, m))
}

/// Largest entry of `|M Omega M^T - Omega|`.
pub fn symplectic_residual(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows() / 2;
    let w = omega(n);
    (m * &w * m.transpose() - w).amax()
}

/// Largest off-diagonal entry of `M V M^T` together with the largest
/// deviation of its diagonal from `diag(u, u)`.
pub fn diagonalization_residual(m: &DMatrix<f64>, cm: &CovarianceMatrix, u: &[f64]) -> f64 {
    let n = cm.n_modes;
    let d = m * &cm.entries * m.transpose();
    let mut worst = 0.0f64;
    for i in 0..2 * n {
        for j in 0..2 * n {
            let target = if i == j { u[i % n] } else { 0.0 };
            worst = worst.max((d[(i, j)] - target).abs());
        }
    }
    worst
}
