//! Discrete field storage with one ghost layer on each side.

/// A rectangular array of `ni × nj` interior values surrounded by one ghost layer.
/// Index `(-1, _)` and `(ni, _)` address ghosts.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    ni: usize,
    nj: usize,
    data: Vec<f64>,
}

impl Field {
    pub fn zeros(ni: usize, nj: usize) -> Self {
        Field { ni, nj, data: vec![0.0; (ni + 2) * (nj + 2)] }
    }

    pub fn constant(ni: usize, nj: usize, v: f64) -> Self {
        Field { ni, nj, data: vec![v; (ni + 2) * (nj + 2)] }
    }

    pub fn ni(&self) -> usize {
        self.ni
    }
    pub fn nj(&self) -> usize {
        self.nj
    }

    #[inline(always)]
    fn idx(&self, i: isize, j: isize) -> usize {
        debug_assert!(i >= -1 && i <= self.ni as isize && j >= -1 && j <= self.nj as isize, "({i},{j})");
        (j + 1) as usize * (self.ni + 2) + (i + 1) as usize
    }

    #[inline(always)]
    pub fn get(&self, i: isize, j: isize) -> f64 {
        self.data[self.idx(i, j)]
    }

    #[inline(always)]
    pub fn set(&mut self, i: isize, j: isize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] = v;
    }

    #[inline(always)]
    pub fn add(&mut self, i: isize, j: isize, v: f64) {
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// Raw storage including ghosts.
    pub fn raw(&self) -> &[f64] {
        &self.data
    }
    pub fn raw_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Interior values, row-major with `i` fastest.
    pub fn interior(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.ni * self.nj);
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                out.push(self.get(i, j));
            }
        }
        out
    }

    pub fn set_interior(&mut self, v: &[f64]) {
        assert_eq!(v.len(), self.ni * self.nj);
        let mut k = 0;
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                self.set(i, j, v[k]);
                k += 1;
            }
        }
    }

    pub fn from_fn(ni: usize, nj: usize, mut f: impl FnMut(isize, isize) -> f64) -> Self {
        let mut out = Field::zeros(ni, nj);
        for j in 0..nj as isize {
            for i in 0..ni as isize {
                out.set(i, j, f(i, j));
            }
        }
        out
    }

    /// Applies `f` to every interior value in place.
    pub fn map_inplace(&mut self, f: impl Fn(f64) -> f64) {
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                let k = self.idx(i, j);
                self.data[k] = f(self.data[k]);
            }
        }
    }

    /// `self += a * other` over all storage.
    pub fn axpy(&mut self, a: f64, other: &Field) {
        assert_eq!(self.data.len(), other.data.len());
        for (x, y) in self.data.iter_mut().zip(&other.data) {
            *x += a * y;
        }
    }

    pub fn scaled(&self, a: f64) -> Field {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= a);
        out
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn interior_max_abs(&self) -> f64 {
        let mut m = 0.0f64;
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                m = m.max(self.get(i, j).abs());
            }
        }
        m
    }

    pub fn interior_sum(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                s += self.get(i, j);
            }
        }
        s
    }

    pub fn interior_is_finite(&self) -> bool {
        (0..self.nj as isize).all(|j| (0..self.ni as isize).all(|i| self.get(i, j).is_finite()))
    }

    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        assert_eq!((self.ni, self.nj), (other.ni, other.nj));
        let mut m = 0.0f64;
        for j in 0..self.nj as isize {
            for i in 0..self.ni as isize {
                m = m.max((self.get(i, j) - other.get(i, j)).abs());
            }
        }
        m
    }
}

/// Cell-centered scalar.
pub type ScalarField = Field;

/// Staggered vector: `x` lives on vertical faces (`nx+1 × ny`), `y` on horizontal faces (`nx × ny+1`).
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub x: Field,
    pub y: Field,
}

impl VectorField {
    pub fn zeros(nx: usize, ny: usize) -> Self {
        VectorField { x: Field::zeros(nx + 1, ny), y: Field::zeros(nx, ny + 1) }
    }

    pub fn axpy(&mut self, a: f64, o: &VectorField) {
        self.x.axpy(a, &o.x);
        self.y.axpy(a, &o.y);
    }

    pub fn max_abs(&self) -> f64 {
        self.x.interior_max_abs().max(self.y.interior_max_abs())
    }

    pub fn is_finite(&self) -> bool {
        self.x.interior_is_finite() && self.y.interior_is_finite()
    }

    pub fn max_abs_diff(&self, o: &VectorField) -> f64 {
        self.x.max_abs_diff(&o.x).max(self.y.max_abs_diff(&o.y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ghost_indexing() {
        let mut f = Field::zeros(4, 3);
        f.set(-1, -1, 1.0);
        f.set(4, 3, 2.0);
        f.set(0, 0, 3.0);
        assert_eq!(f.raw()[0], 1.0);
        assert_eq!(*f.raw().last().unwrap(), 2.0);
        assert_eq!(f.raw()[7], 3.0);
        assert_eq!(f.interior_sum(), 3.0);
        assert_eq!(f.interior().len(), 12);
    }

    #[test]
    fn interior_round_trip() {
        let f = Field::from_fn(5, 4, |i, j| (i * 10 + j) as f64);
        let mut g = Field::zeros(5, 4);
        g.set_interior(&f.interior());
        assert_eq!(f.max_abs_diff(&g), 0.0);
    }
}
