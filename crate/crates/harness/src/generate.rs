use hmatrix::{DenseMatrix, Matrix, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::spec::{Generator, ProblemSpec};

fn point(i: usize, n: usize) -> f64 {
    (i as f64 + 0.5) / n as f64
}

/// Replaces the diagonal by the off-diagonal absolute row sum plus `shift`.
fn dominate(mut m: Matrix, shift: f64) -> Matrix {
    let n = m.rows();
    for i in 0..n {
        let row = m.row(i);
        let off: f64 = (0..n).filter(|&j| j != i).map(|j| row[j].abs()).sum();
        m.view_mut().set(i, i, off + shift);
    }
    m
}

/// Deterministic test matrix for a spec.
pub fn generate(spec: &ProblemSpec) -> Result<Matrix> {
    spec.validate()?;
    let n = spec.n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let m = match spec.generator {
        Generator::Identity => return Ok(DenseMatrix::identity(n)),
        Generator::Logkernel => DenseMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                (point(i, n) - point(j, n)).abs().ln()
            }
        }),
        Generator::Diagdom => {
            let data = (0..n * n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            DenseMatrix::from_vec(n, n, data)?
        }
        Generator::Randlowrank => {
            let r = spec.k.clamp(1, n);
            let mut factor = || {
                let data = (0..n * r).map(|_| rng.random_range(-1.0..=1.0)).collect();
                DenseMatrix::from_vec(n, r, data)
            };
            let (u, v) = (factor()?, factor()?);
            u.matmul(&v.transpose())
        }
    };
    Ok(dominate(m, spec.shift))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn logkernel_two_points() {
        let spec = ProblemSpec { n: 2, shift: 0.0, ..Default::default() };
        let m = generate(&spec).unwrap();
        let l = 0.5f64.ln();
        assert_eq!(m, DenseMatrix::from_rows(&[[-l, l], [l, -l]]));
    }

    #[test]
    fn identity() {
        let spec = ProblemSpec { n: 4, generator: Generator::Identity, ..Default::default() };
        assert_eq!(generate(&spec).unwrap(), DenseMatrix::identity(4));
    }

    #[test]
    fn seeded_generators_repeat() {
        for generator in [Generator::Diagdom, Generator::Randlowrank] {
            let spec = ProblemSpec { n: 17, generator, seed: 9, ..Default::default() };
            let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
            let bytes = |m: &Matrix| m.as_slice().iter().flat_map(|x| x.to_le_bytes()).collect::<Vec<_>>();
            assert_eq!(bytes(&a), bytes(&b));
            let other = generate(&ProblemSpec { seed: 10, ..spec }).unwrap();
            assert_ne!(a, other);
        }
    }

    #[test]
    fn rows_are_dominant() {
        for generator in [Generator::Logkernel, Generator::Diagdom, Generator::Randlowrank] {
            let spec = ProblemSpec { n: 20, generator, shift: 0.5, ..Default::default() };
            let m = generate(&spec).unwrap();
            for i in 0..20 {
                let off: f64 = (0..20).filter(|&j| j != i).map(|j| m[(i, j)].abs()).sum();
                assert!((m[(i, i)] - off - 0.5).abs() < 1e-12);
            }
        }
    }
}
