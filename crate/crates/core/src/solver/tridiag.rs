/// Tridiagonal system `sub[i]·x[i−1] + diag[i]·x[i] + sup[i]·x[i+1] = rhs[i]`.
/// `sub[0]` and `sup[n−1]` are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
    pub rhs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroPivot {
    pub index: usize,
}

impl TridiagonalSystem {
    pub fn with_len(n: usize) -> Self {
        Self {
            sub: vec![0.0; n],
            diag: vec![0.0; n],
            sup: vec![0.0; n],
            rhs: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Rows where `|diag| < |sub| + |sup|`; reported, not required.
    pub fn non_dominant_rows(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.diag[i].abs() < self.sub[i].abs() + self.sup[i].abs())
            .collect()
    }

    /// Thomas algorithm, no pivoting.
    pub fn solve(&self) -> Result<Vec<f64>, ZeroPivot> {
        let n = self.len();
        if n == 0 {
            return Ok(Vec::new());
        }
        let mut c_prime = vec![0.0; n];
        let mut d_prime = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(ZeroPivot { index: 0 });
        }
        c_prime[0] = self.sup[0] / pivot;
        d_prime[0] = self.rhs[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.sub[i] * c_prime[i - 1];
            let scale = self.diag[i].abs() + (self.sub[i] * c_prime[i - 1]).abs();
            if pivot.abs() <= 1e-14 * scale || !pivot.is_finite() {
                return Err(ZeroPivot { index: i });
            }
            c_prime[i] = if i + 1 < n { self.sup[i] / pivot } else { 0.0 };
            d_prime[i] = (self.rhs[i] - self.sub[i] * d_prime[i - 1]) / pivot;
        }
        let mut x = d_prime;
        for i in (0..n - 1).rev() {
            x[i] -= c_prime[i] * x[i + 1];
        }
        Ok(x)
    }

    /// `A·x`, for residual checks.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * x[i];
                if i > 0 {
                    acc += self.sub[i] * x[i - 1];
                }
                if i + 1 < n {
                    acc += self.sup[i] * x[i + 1];
                }
                acc
            })
            .collect()
    }
}
