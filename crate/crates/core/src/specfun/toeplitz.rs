use nalgebra::DMatrix;

/// First column of `exp(C)` for the lower-triangular Toeplitz matrix `C` with
/// first column `c`.
///
/// `C = c₀I + N` with `N` strictly lower triangular, hence nilpotent, so
/// `exp(C) = e^{c₀} Σ_{j<M} Nʲ/j!` exactly. Products of lower-triangular
/// Toeplitz matrices are again lower-triangular Toeplitz, so only first
/// columns (truncated convolutions) are ever formed.
pub fn lt_toeplitz_expm_column(c: &[f64]) -> Vec<f64> {
    let m = c.len();
    if m == 0 {
        return Vec::new();
    }
    let mut out = vec![0.0; m];
    let mut term = vec![0.0; m];
    out[0] = 1.0;
    term[0] = 1.0;
    for j in 1..m {
        let mut next = vec![0.0; m];
        for i in 1..m {
            // (N term)_i = Σ_{l=1}^{i} c_l term_{i−l}
            let mut s = 0.0;
            for l in 1..=i {
                s += c[l] * term[i - l];
            }
            next[i] = s / j as f64;
        }
        term = next;
        for i in 0..m {
            out[i] += term[i];
        }
    }
    let scale = c[0].exp();
    out.iter_mut().for_each(|v| *v *= scale);
    out
}

/// `exp(C)` as a dense matrix.
pub fn lt_toeplitz_expm(c: &[f64]) -> DMatrix<f64> {
    let col = lt_toeplitz_expm_column(c);
    let m = c.len();
    DMatrix::from_fn(m, m, |i, j| if i >= j { col[i - j] } else { 0.0 })
}

/// `‖exp(C)‖₁` in the first-column-sum sense.
pub fn lt_toeplitz_first_column_sum(c: &[f64]) -> f64 {
    lt_toeplitz_expm_column(c).iter().sum()
}
