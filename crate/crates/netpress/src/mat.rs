//! Minimal row-major dense matrix. The models here are tiny (hundreds of
//! rows), so this stays a plain Vec with index arithmetic; no BLAS.

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![T::zero(); rows * cols] }
    }

    /// data is row-major and must have exactly rows*cols entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length mismatch");
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c, "ragged rows");
            data.extend_from_slice(row);
        }
        Matrix { rows: r, cols: c, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn set(&mut self, r: usize, c: usize, v: T) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// y = A x, with y.len() == rows.
    pub fn matvec(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (r, out) in y.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = T::zero();
            for (w, xv) in row.iter().zip(x) {
                acc += *w * *xv;
            }
            *out = acc;
        }
    }

    /// y = Aᵀ x, with y.len() == cols. Used for backpropagation.
    pub fn matvec_t(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.rows);
        debug_assert_eq!(y.len(), self.cols);
        for v in y.iter_mut() {
            *v = T::zero();
        }
        for (r, xv) in x.iter().enumerate() {
            if *xv == T::zero() {
                continue;
            }
            let row = self.row(r);
            for (c, w) in row.iter().enumerate() {
                y[c] += *w * *xv;
            }
        }
    }

    /// A += alpha * u vᵀ (rank-1 update), u.len() == rows, v.len() == cols.
    pub fn rank1_add(&mut self, alpha: T, u: &[T], v: &[T]) {
        debug_assert_eq!(u.len(), self.rows);
        debug_assert_eq!(v.len(), self.cols);
        for (r, uv) in u.iter().enumerate() {
            let scale = alpha * *uv;
            if scale == T::zero() {
                continue;
            }
            let row = self.row_mut(r);
            for (w, vv) in row.iter_mut().zip(v) {
                *w += scale * *vv;
            }
        }
    }

    pub fn map<F: Fn(T) -> T>(&self, f: F) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| f(*v)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_hand_values() {
        // [[1,2],[3,4],[5,6]] * [1,-1] = [-1,-1,-1]
        let a = Matrix::from_vec(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let mut y = vec![0.0; 3];
        a.matvec(&[1.0, -1.0], &mut y);
        assert_eq!(y, vec![-1.0, -1.0, -1.0]);
    }

    #[test]
    fn matvec_t_hand_values() {
        let a = Matrix::from_vec(2, 3, vec![1.0, 0.0, 2.0, -1.0, 1.0, 0.0]);
        let mut y = vec![0.0; 3];
        a.matvec_t(&[2.0, 3.0], &mut y);
        // Aᵀ [2,3] = [2*1+3*(-1), 2*0+3*1, 2*2+3*0]
        assert_eq!(y, vec![-1.0, 3.0, 4.0]);
    }

    #[test]
    fn rank1_update() {
        let mut a = Matrix::zeros(2, 2);
        a.rank1_add(2.0, &[1.0, 0.5], &[3.0, -1.0]);
        assert_eq!(a.as_slice(), &[6.0, -2.0, 3.0, -1.0]);
    }

    #[test]
    #[should_panic(expected = "matrix data length mismatch")]
    fn from_vec_length_checked() {
        let _ = Matrix::from_vec(2, 2, vec![1.0f64; 3]);
    }
}
