//! Direction sets representing the uniform distribution on the unit sphere `S^{m-1}`.
//!
//! Monte Carlo samples normalize i.i.d. standard Gaussian vectors. Quasi-Monte Carlo
//! samples push a Sobol point set in `[0,1)^m` through the coordinatewise normal
//! quantile and normalize; the image of a uniform point under this map is uniform on
//! the sphere. Randomized QMC uses independent digital shifts per replicate.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::distributions::normal_quantile;
use crate::error::{Error, Result};

/// Joe–Kuo direction numbers (`new-joe-kuo-6.21201`) for dimensions 2..=21:
/// `(degree, polynomial coefficients, initial m_k)`. Dimension 1 is van der Corput.
const JOE_KUO: [(u32, u32, &[u32]); 20] = [
    (1, 0, &[1]),
    (2, 1, &[1, 3]),
    (3, 1, &[1, 3, 1]),
    (3, 2, &[1, 1, 1]),
    (4, 1, &[1, 1, 3, 3]),
    (4, 4, &[1, 3, 5, 13]),
    (5, 2, &[1, 1, 5, 5, 17]),
    (5, 4, &[1, 1, 5, 5, 5]),
    (5, 7, &[1, 1, 7, 11, 19]),
    (5, 11, &[1, 1, 5, 1, 1]),
    (5, 13, &[1, 1, 1, 3, 11]),
    (5, 14, &[1, 3, 5, 5, 31]),
    (6, 1, &[1, 3, 3, 9, 7, 49]),
    (6, 13, &[1, 1, 1, 15, 21, 21]),
    (6, 16, &[1, 3, 1, 13, 27, 49]),
    (6, 19, &[1, 1, 1, 15, 7, 5]),
    (6, 22, &[1, 3, 1, 15, 13, 25]),
    (6, 25, &[1, 1, 5, 5, 19, 61]),
    (7, 1, &[1, 3, 7, 11, 23, 15, 103]),
    (7, 4, &[1, 3, 7, 13, 13, 15, 69]),
];

pub const MAX_QMC_DIM: usize = JOE_KUO.len() + 1;
const BITS: usize = 32;

/// 32-bit Sobol generator over the first `dim` coordinates.
#[derive(Debug, Clone)]
pub struct Sobol {
    directions: Vec<[u32; BITS]>,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_QMC_DIM {
            return Err(Error::InvalidArgument(format!(
                "Sobol sequence supports dimensions 1..={MAX_QMC_DIM}, got {dim}"
            )));
        }
        let mut directions = Vec::with_capacity(dim);
        let mut first = [0u32; BITS];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1u32 << (BITS - 1 - k);
        }
        directions.push(first);
        for &(degree, poly, init) in JOE_KUO.iter().take(dim - 1) {
            let s = degree as usize;
            let mut v = [0u32; BITS];
            for k in 0..s.min(BITS) {
                v[k] = init[k] << (BITS - 1 - k);
            }
            for k in s..BITS {
                let mut value = v[k - s] ^ (v[k - s] >> s);
                for j in 1..s {
                    if (poly >> (s - 1 - j)) & 1 == 1 {
                        value ^= v[k - j];
                    }
                }
                v[k] = value;
            }
            directions.push(v);
        }
        Ok(Self { directions })
    }

    pub fn dim(&self) -> usize {
        self.directions.len()
    }

    /// Raw 32-bit coordinates of point `index` (Gray-code ordering).
    pub fn point_bits(&self, index: u64, out: &mut [u32]) {
        let gray = index ^ (index >> 1);
        for (slot, v) in out.iter_mut().zip(&self.directions) {
            let mut acc = 0u32;
            let mut bits = gray;
            let mut k = 0;
            while bits != 0 && k < BITS {
                if bits & 1 == 1 {
                    acc ^= v[k];
                }
                bits >>= 1;
                k += 1;
            }
            *slot = acc;
        }
    }

    /// Point `index` in `[0, 1)^dim`.
    pub fn point(&self, index: u64) -> Vec<f64> {
        let mut bits = vec![0u32; self.dim()];
        self.point_bits(index, &mut bits);
        bits.into_iter().map(|b| b as f64 / 4_294_967_296.0).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SamplerTag {
    MonteCarlo { seed: u64 },
    Sobol {
        offset: u64,
        replicates: usize,
        #[serde(skip_serializing_if = "Option::is_none")]
        shift_seed: Option<u64>,
    },
}

impl SamplerTag {
    pub fn is_qmc(&self) -> bool {
        matches!(self, SamplerTag::Sobol { .. })
    }
}

impl fmt::Display for SamplerTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerTag::MonteCarlo { seed } => write!(f, "mc(seed={seed})"),
            SamplerTag::Sobol { offset, replicates, shift_seed: None } => {
                write!(f, "qmc-sobol(offset={offset},replicates={replicates})")
            }
            SamplerTag::Sobol { offset, replicates, shift_seed: Some(s) } => {
                write!(f, "qmc-sobol(offset={offset},replicates={replicates},shift_seed={s})")
            }
        }
    }
}

/// Unit directions with equal weights `1/N`, stored row-major. The directions are split
/// into `blocks` consecutive groups of equal length (independent QMC replicates).
#[derive(Debug, Clone, PartialEq)]
pub struct SphereSample {
    dim: usize,
    directions: Vec<f64>,
    blocks: usize,
    tag: SamplerTag,
}

impl SphereSample {
    /// Builds a sample from explicit directions, normalizing each one.
    pub fn from_directions(dim: usize, directions: Vec<Vec<f64>>) -> Result<Self> {
        let mut flat = Vec::with_capacity(dim * directions.len());
        for d in &directions {
            if d.len() != dim {
                return Err(Error::DimensionMismatch(format!("direction of length {} in dimension {dim}", d.len())));
            }
            let norm = d.iter().map(|v| v * v).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::InvalidArgument("direction must be nonzero and finite".into()));
            }
            flat.extend(d.iter().map(|v| v / norm));
        }
        if flat.is_empty() {
            return Err(Error::InvalidArgument("sample needs at least one direction".into()));
        }
        Ok(Self { dim, directions: flat, blocks: 1, tag: SamplerTag::MonteCarlo { seed: 0 } })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.directions.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn block_len(&self) -> usize {
        self.len() / self.blocks
    }

    pub fn tag(&self) -> &SamplerTag {
        &self.tag
    }

    pub fn direction(&self, k: usize) -> &[f64] {
        &self.directions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.directions.chunks_exact(self.dim)
    }
}

fn push_normalized(out: &mut Vec<f64>, v: &[f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    out.extend(v.iter().map(|x| x / norm));
    true
}

/// `count` i.i.d. uniform directions on `S^{m-1}`; identical for identical arguments.
pub fn sample_mc(m: usize, count: usize, seed: u64) -> Result<SphereSample> {
    if m == 0 || count == 0 {
        return Err(Error::InvalidArgument("sample_mc needs m >= 1 and N >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(m * count);
    let mut g = vec![0.0; m];
    let mut produced = 0;
    while produced < count {
        for v in g.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        if push_normalized(&mut flat, &g) {
            produced += 1;
        }
    }
    Ok(SphereSample { dim: m, directions: flat, blocks: 1, tag: SamplerTag::MonteCarlo { seed } })
}

fn sobol_directions(sobol: &Sobol, start: u64, count: usize, shift: &[u32], out: &mut Vec<f64>) -> Result<()> {
    let m = sobol.dim();
    let mut bits = vec![0u32; m];
    let mut g = vec![0.0; m];
    for k in 0..count as u64 {
        sobol.point_bits(start + k, &mut bits);
        for ((gj, b), s) in g.iter_mut().zip(&bits).zip(shift) {
            // cell midpoints keep every coordinate strictly inside (0, 1)
            let u = ((b ^ s) as f64 + 0.5) / 4_294_967_296.0;
            *gj = normal_quantile(u)?;
        }
        if !push_normalized(out, &g) {
            return Err(Error::InvalidArgument("degenerate QMC point".into()));
        }
    }
    Ok(())
}

/// Deterministic Sobol directions starting at point `offset` of the sequence.
pub fn sample_qmc(m: usize, count: usize, offset: u64) -> Result<SphereSample> {
    if m == 0 || count == 0 {
        return Err(Error::InvalidArgument("sample_qmc needs m >= 1 and N >= 1".into()));
    }
    let sobol = Sobol::new(m)?;
    let mut flat = Vec::with_capacity(m * count);
    sobol_directions(&sobol, offset, count, &vec![0; m], &mut flat)?;
    Ok(SphereSample {
        dim: m,
        directions: flat,
        blocks: 1,
        tag: SamplerTag::Sobol { offset, replicates: 1, shift_seed: None },
    })
}

/// `replicates` independently digitally-shifted copies of the first `count / replicates`
/// Sobol points; the total size is rounded down to a multiple of `replicates`.
pub fn sample_qmc_shifted(m: usize, count: usize, replicates: usize, seed: u64) -> Result<SphereSample> {
    if m == 0 || count == 0 || replicates == 0 {
        return Err(Error::InvalidArgument("sample_qmc_shifted needs m, N, R >= 1".into()));
    }
    let per_block = (count / replicates).max(1);
    let sobol = Sobol::new(m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut flat = Vec::with_capacity(m * per_block * replicates);
    for _ in 0..replicates {
        let shift: Vec<u32> = (0..m).map(|_| rng.random::<u32>()).collect();
        sobol_directions(&sobol, 0, per_block, &shift, &mut flat)?;
    }
    Ok(SphereSample {
        dim: m,
        directions: flat,
        blocks: replicates,
        tag: SamplerTag::Sobol { offset: 0, replicates, shift_seed: Some(seed) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sobol_first_points() {
        let s = Sobol::new(3).unwrap();
        let pts: Vec<Vec<f64>> = (0..5).map(|i| s.point(i)).collect();
        assert_eq!(pts[0], vec![0.0, 0.0, 0.0]);
        assert_eq!(pts[1], vec![0.5, 0.5, 0.5]);
        assert_eq!(pts[2], vec![0.75, 0.25, 0.25]);
        assert_eq!(pts[3], vec![0.25, 0.75, 0.75]);
        assert_eq!(pts[4], vec![0.375, 0.375, 0.625]);
    }

    #[test]
    fn sobol_is_a_net_in_each_coordinate() {
        // The first 2^k points of every coordinate hit each dyadic interval once.
        let s = Sobol::new(MAX_QMC_DIM).unwrap();
        let k = 8;
        let mut bits = vec![0u32; MAX_QMC_DIM];
        let mut count = vec![vec![0u32; 1 << k]; MAX_QMC_DIM];
        for i in 0..(1u64 << k) {
            s.point_bits(i, &mut bits);
            for (d, b) in bits.iter().enumerate() {
                count[d][(b >> (32 - k)) as usize] += 1;
            }
        }
        assert!(count.iter().all(|c| c.iter().all(|&v| v == 1)));
        assert!(Sobol::new(MAX_QMC_DIM + 1).is_err());
    }

    #[test]
    fn mc_zero_sphere() {
        let n = 4000;
        let s = sample_mc(1, n, 3).unwrap();
        let plus = s.iter().filter(|v| v[0] == 1.0).count();
        assert!(s.iter().all(|v| v[0] == 1.0 || v[0] == -1.0));
        let freq = plus as f64 / n as f64;
        assert!((freq - 0.5).abs() <= 4.0 / (n as f64).sqrt());
    }

    #[test]
    fn mc_second_moment() {
        let n = 10_000;
        let s = sample_mc(3, n, 11).unwrap();
        let mean_sq = s.iter().map(|v| v[0] * v[0]).sum::<f64>() / n as f64;
        assert!((mean_sq - 1.0 / 3.0).abs() < 0.02);
    }

    #[test]
    fn mc_is_deterministic() {
        assert_eq!(sample_mc(4, 100, 42).unwrap(), sample_mc(4, 100, 42).unwrap());
        assert_ne!(sample_mc(4, 100, 42).unwrap(), sample_mc(4, 100, 43).unwrap());
    }

    #[test]
    fn qmc_single_point_and_moments() {
        let one = sample_qmc(3, 1, 0).unwrap();
        let v = one.direction(0);
        assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);

        let n = 1 << 12;
        let s = sample_qmc(2, n, 0).unwrap();
        let mean_sq = s.iter().map(|v| v[0] * v[0]).sum::<f64>() / n as f64;
        assert!((mean_sq - 0.5).abs() < 5e-3);
        let a = [0.3f64, -1.2];
        let norm_a = (a[0] * a[0] + a[1] * a[1]).sqrt();
        let lin = s.iter().map(|v| a[0] * v[0] + a[1] * v[1]).sum::<f64>() / n as f64;
        assert!(lin.abs() < 5e-3 * norm_a);
    }

    #[test]
    fn shifted_replicates() {
        let s = sample_qmc_shifted(3, 1000, 8, 5).unwrap();
        assert_eq!(s.blocks(), 8);
        assert_eq!(s.block_len(), 125);
        assert_eq!(s.len(), 1000);
        assert_eq!(s, sample_qmc_shifted(3, 1000, 8, 5).unwrap());
        for v in s.iter() {
            assert!((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
