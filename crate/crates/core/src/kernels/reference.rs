//! Straightforward nested-loop versions of every kernel, written without any
//! layout, segment or threading machinery. Used as test oracles.

use super::lbm::{Q, VELOCITIES, WEIGHTS};
use super::KernelError;

/// Inputs for [`reference_oracle`]. Which fields matter depends on the kernel.
#[derive(Debug, Clone, Default)]
pub struct OracleInputs {
    /// Input arrays in kernel order (see [`reference_oracle`]).
    pub arrays: Vec<Vec<f64>>,
    pub scalar: f64,
    /// Edge length for grid kernels.
    pub n: usize,
    /// Fluid flags of the lattice interior, `x` fastest.
    pub fluid: Vec<bool>,
    pub omega: f64,
    pub steps: usize,
}

/// Largest grid edge the oracle accepts.
pub const MAX_EDGE: usize = 64;

/// Evaluates `kernel` directly:
///
/// * `copy`: `[a]` gives `c = a`
/// * `scale`: `[c]` gives `b = s * c`
/// * `add`: `[a, b]` gives `c = a + b`
/// * `triad`: `[b, c]` gives `a = b + s * c`
/// * `vtriad`: `[b, c, d]` gives `a = b + c * d`
/// * `jacobi2d`: `[source]` (row-major `n x n`) gives the relaxed plane
/// * `lbm`: `[grid0, grid1]` in `(z, y, x, v)` order over the haloed cube;
///   runs `steps` sweeps starting from grid 0 and returns the latest grid
pub fn reference_oracle(kernel: &str, inputs: &OracleInputs) -> Result<Vec<f64>, KernelError> {
    let arrays = &inputs.arrays;
    let need = |k: usize| -> Result<(), KernelError> {
        if arrays.len() != k {
            return Err(KernelError::InvalidArgument(format!(
                "{kernel} needs {k} input arrays, got {}",
                arrays.len()
            )));
        }
        let n = arrays[0].len();
        if arrays.iter().any(|a| a.len() != n) {
            return Err(KernelError::InvalidArgument("input lengths differ".into()));
        }
        Ok(())
    };
    let s = inputs.scalar;
    match kernel {
        "copy" => {
            need(1)?;
            Ok(arrays[0].clone())
        }
        "scale" => {
            need(1)?;
            Ok(arrays[0].iter().map(|c| s * c).collect())
        }
        "add" => {
            need(2)?;
            Ok((0..arrays[0].len()).map(|i| arrays[0][i] + arrays[1][i]).collect())
        }
        "triad" => {
            need(2)?;
            Ok((0..arrays[0].len()).map(|i| arrays[0][i] + s * arrays[1][i]).collect())
        }
        "vtriad" => {
            need(3)?;
            Ok((0..arrays[0].len())
                .map(|i| arrays[0][i] + arrays[1][i] * arrays[2][i])
                .collect())
        }
        "jacobi2d" => {
            need(1)?;
            jacobi(inputs.n, &arrays[0])
        }
        "lbm" => {
            need(2)?;
            lbm(inputs)
        }
        other => Err(KernelError::UnsupportedKernel(other.to_string())),
    }
}

fn check_edge(n: usize, min: usize) -> Result<(), KernelError> {
    if n < min {
        return Err(KernelError::DomainTooSmall { n, min });
    }
    if n > MAX_EDGE {
        return Err(KernelError::InvalidArgument(format!(
            "oracle accepts edges up to {MAX_EDGE}, got {n}"
        )));
    }
    Ok(())
}

fn jacobi(n: usize, source: &[f64]) -> Result<Vec<f64>, KernelError> {
    check_edge(n, 3)?;
    if source.len() != n * n {
        return Err(KernelError::LengthMismatch {
            expected: n * n,
            actual: source.len(),
        });
    }
    let at = |i: usize, j: usize| source[i * n + j];
    let mut dest = source.to_vec();
    for i in 1..n - 1 {
        for j in 1..n - 1 {
            dest[i * n + j] = (at(i - 1, j) + at(i + 1, j) + at(i, j - 1) + at(i, j + 1)) * 0.25;
        }
    }
    Ok(dest)
}

fn lbm(inputs: &OracleInputs) -> Result<Vec<f64>, KernelError> {
    let n = inputs.n;
    check_edge(n, 1)?;
    let m = n + 2;
    let cells = m * m * m * Q;
    if inputs.arrays[0].len() != cells {
        return Err(KernelError::LengthMismatch {
            expected: cells,
            actual: inputs.arrays[0].len(),
        });
    }
    if inputs.fluid.len() != n * n * n {
        return Err(KernelError::LengthMismatch {
            expected: n * n * n,
            actual: inputs.fluid.len(),
        });
    }
    let idx = |x: usize, y: usize, z: usize, v: usize| ((z * m + y) * m + x) * Q + v;
    let omega = inputs.omega;
    let mut src = inputs.arrays[0].clone();
    let mut dst = inputs.arrays[1].clone();

    for _ in 0..inputs.steps {
        for z in 1..=n {
            for y in 1..=n {
                for x in 1..=n {
                    if !inputs.fluid[(x - 1) + n * ((y - 1) + n * (z - 1))] {
                        continue;
                    }
                    let f: Vec<f64> = (0..Q).map(|v| src[idx(x, y, z, v)]).collect();
                    let rho: f64 = f.iter().sum();
                    let mut u = [0.0; 3];
                    for (d, ud) in u.iter_mut().enumerate() {
                        *ud = (0..Q).map(|v| VELOCITIES[v][d] as f64 * f[v]).sum::<f64>() / rho;
                    }
                    let usq = u[0] * u[0] + u[1] * u[1] + u[2] * u[2];
                    for v in 0..Q {
                        let c = VELOCITIES[v];
                        let cu = c[0] as f64 * u[0] + c[1] as f64 * u[1] + c[2] as f64 * u[2];
                        let feq = WEIGHTS[v] * rho * (1.0 + 3.0 * cu + 4.5 * cu * cu - 1.5 * usq);
                        let post = f[v] - omega * (f[v] - feq);
                        let (tx, ty, tz) = (
                            (x as isize + c[0]) as usize,
                            (y as isize + c[1]) as usize,
                            (z as isize + c[2]) as usize,
                        );
                        dst[idx(tx, ty, tz, v)] = post;
                    }
                }
            }
        }
        std::mem::swap(&mut src, &mut dst);
    }
    Ok(src)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobi_hand_value() {
        let src: Vec<f64> = (0..16).map(f64::from).collect();
        let out = reference_oracle(
            "jacobi2d",
            &OracleInputs {
                arrays: vec![src],
                n: 4,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out[5], 5.0);
        assert_eq!(out[0], 0.0);
    }

    #[test]
    fn triad_hand_values() {
        let seq: Vec<f64> = (1..=8).map(f64::from).collect();
        let out = reference_oracle(
            "triad",
            &OracleInputs {
                arrays: vec![seq.clone(), seq],
                scalar: 2.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out, vec![3.0, 6.0, 9.0, 12.0, 15.0, 18.0, 21.0, 24.0]);
    }

    #[test]
    fn single_cell_propagation_without_collision() {
        // 2^3 interior, only (1,1,1) fluid, omega 0 leaves populations alone
        let n = 2;
        let m = n + 2;
        let cells = m * m * m * Q;
        let grid0: Vec<f64> = (0..cells).map(|i| i as f64).collect();
        let grid1 = vec![-1.0; cells];
        let mut fluid = vec![false; n * n * n];
        fluid[0] = true;
        let out = reference_oracle(
            "lbm",
            &OracleInputs {
                arrays: vec![grid0.clone(), grid1],
                n,
                fluid,
                omega: 0.0,
                steps: 1,
                ..Default::default()
            },
        )
        .unwrap();
        let idx = |x: usize, y: usize, z: usize, v: usize| ((z * m + y) * m + x) * Q + v;
        let mut touched = 0;
        for v in 0..Q {
            let c = VELOCITIES[v];
            let t = idx(
                (1 + c[0]) as usize,
                (1 + c[1]) as usize,
                (1 + c[2]) as usize,
                v,
            );
            assert_eq!(out[t], grid0[idx(1, 1, 1, v)]);
            touched += 1;
        }
        assert_eq!(touched, Q);
        assert_eq!(out.iter().filter(|&&x| x != -1.0).count(), Q);
    }

    #[test]
    fn unsupported() {
        assert!(matches!(
            reference_oracle("fft", &OracleInputs::default()),
            Err(KernelError::UnsupportedKernel(_))
        ));
        assert!(reference_oracle("add", &OracleInputs { arrays: vec![vec![1.0]], ..Default::default() }).is_err());
    }
}
