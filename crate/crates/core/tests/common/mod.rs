#![allow(dead_code)]

use covsense::gaussian::{beam_splitter_matrix, phase_matrix, thermal_cm, CovarianceMatrix};
use covsense::scenario::{ProbeSettings, SensingScenario};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Product of random beam splitters, phases and squeezers.
pub fn random_symplectic(rng: &mut ChaCha8Rng, n: usize, squeeze: f64) -> DMatrix<f64> {
    let mut s = DMatrix::identity(2 * n, 2 * n);
    for _ in 0..6 {
        let i = rng.random_range(0..n);
        if n > 1 {
            let mut j = rng.random_range(0..n);
            while j == i {
                j = rng.random_range(0..n);
            }
            s = beam_splitter_matrix(n, i, j, rng.random::<f64>()).unwrap() * s;
        }
        s = phase_matrix(n, i, rng.random_range(-3.0..3.0)).unwrap() * s;
        if squeeze > 0.0 {
            let r: f64 = rng.random_range(-squeeze..squeeze);
            let mut sq = DMatrix::identity(2 * n, 2 * n);
            sq[(i, i)] = r.exp();
            sq[(n + i, n + i)] = (-r).exp();
            s = sq * s;
        }
    }
    s
}

/// `S thermal S^T` with occupancies in `[0, max_n]`.
pub fn random_physical_cm(
    rng: &mut ChaCha8Rng,
    n: usize,
    max_n: f64,
    squeeze: f64,
) -> CovarianceMatrix {
    let occ: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..max_n)).collect();
    let s = random_symplectic(rng, n, squeeze);
    thermal_cm(&occ).unwrap().transform(&s)
}

pub fn random_scenario(rng: &mut ChaCha8Rng, max_nb: f64) -> SensingScenario {
    SensingScenario::new(
        rng.random_range(0.05..0.95),
        rng.random_range(0.05..0.95),
        rng.random_range(0.01..max_nb),
        rng.random_range(0.01..max_nb),
    )
    .unwrap()
}

pub fn random_probe(rng: &mut ChaCha8Rng, max_ns: f64, max_nlo: f64) -> ProbeSettings {
    ProbeSettings::new(
        rng.random_range(1e-4..max_ns),
        rng.random_range(1.0..max_nlo),
        rng.random_range(-3.0..3.0),
    )
    .unwrap()
}
