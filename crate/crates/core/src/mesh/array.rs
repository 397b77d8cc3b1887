//! Dense field storage in `k-j-i` order with `i` fastest.

use std::marker::PhantomData;

/// `nvar x n3 x n2 x n1` array, variable-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Array4<T> {
    data: Vec<T>,
    nvar: usize,
    n3: usize,
    n2: usize,
    n1: usize,
}

impl<T: Copy + Default> Array4<T> {
    pub fn zeros(nvar: usize, n3: usize, n2: usize, n1: usize) -> Self {
        Array4 { data: vec![T::default(); nvar * n3 * n2 * n1], nvar, n3, n2, n1 }
    }
}

impl<T: Copy> Array4<T> {
    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.nvar, self.n3, self.n2, self.n1)
    }

    #[inline(always)]
    pub fn index(&self, v: usize, k: usize, j: usize, i: usize) -> usize {
        debug_assert!(v < self.nvar && k < self.n3 && j < self.n2 && i < self.n1);
        ((v * self.n3 + k) * self.n2 + j) * self.n1 + i
    }

    #[inline(always)]
    pub fn get(&self, v: usize, k: usize, j: usize, i: usize) -> T {
        self.data[self.index(v, k, j, i)]
    }

    #[inline(always)]
    pub fn set(&mut self, v: usize, k: usize, j: usize, i: usize, x: T) {
        let idx = self.index(v, k, j, i);
        self.data[idx] = x;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, x: T) {
        self.data.fill(x);
    }

    pub fn copy_from(&mut self, other: &Array4<T>) {
        self.data.copy_from_slice(&other.data);
    }

    /// Unsynchronized writer for disjoint per-cell writes from parallel loops.
    pub fn writer(&mut self) -> Writer4<'_, T> {
        Writer4 {
            ptr: self.data.as_mut_ptr(),
            len: self.data.len(),
            nvar: self.nvar,
            n3: self.n3,
            n2: self.n2,
            n1: self.n1,
            _m: PhantomData,
        }
    }
}

/// `n3 x n2 x n1` array.
#[derive(Clone, Debug, PartialEq)]
pub struct Array3<T> {
    data: Vec<T>,
    n3: usize,
    n2: usize,
    n1: usize,
}

impl<T: Copy + Default> Array3<T> {
    pub fn zeros(n3: usize, n2: usize, n1: usize) -> Self {
        Array3 { data: vec![T::default(); n3 * n2 * n1], n3, n2, n1 }
    }
}

impl<T: Copy> Array3<T> {
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.n3, self.n2, self.n1)
    }

    #[inline(always)]
    pub fn index(&self, k: usize, j: usize, i: usize) -> usize {
        debug_assert!(k < self.n3 && j < self.n2 && i < self.n1, "({k},{j},{i}) outside {:?}", self.dims());
        (k * self.n2 + j) * self.n1 + i
    }

    #[inline(always)]
    pub fn get(&self, k: usize, j: usize, i: usize) -> T {
        self.data[self.index(k, j, i)]
    }

    #[inline(always)]
    pub fn set(&mut self, k: usize, j: usize, i: usize, x: T) {
        let idx = self.index(k, j, i);
        self.data[idx] = x;
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn fill(&mut self, x: T) {
        self.data.fill(x);
    }

    pub fn copy_from(&mut self, other: &Array3<T>) {
        self.data.copy_from_slice(&other.data);
    }

    pub fn writer(&mut self) -> Writer4<'_, T> {
        Writer4 {
            ptr: self.data.as_mut_ptr(),
            len: self.data.len(),
            nvar: 1,
            n3: self.n3,
            n2: self.n2,
            n1: self.n1,
            _m: PhantomData,
        }
    }
}

/// Raw write handle shared by the workers of one parallel loop.
///
/// Callers guarantee that no two iterations write the same element and that
/// nothing reads the array through another path while the handle is live.
pub struct Writer4<'a, T> {
    ptr: *mut T,
    len: usize,
    nvar: usize,
    n3: usize,
    n2: usize,
    n1: usize,
    _m: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for Writer4<'_, T> {}
unsafe impl<T: Send> Sync for Writer4<'_, T> {}

impl<T: Copy> Writer4<'_, T> {
    /// # Safety
    /// No other iteration of the running loop may write `(v, k, j, i)`.
    #[inline(always)]
    pub unsafe fn write(&self, v: usize, k: usize, j: usize, i: usize, x: T) {
        debug_assert!(v < self.nvar && k < self.n3 && j < self.n2 && i < self.n1);
        let idx = ((v * self.n3 + k) * self.n2 + j) * self.n1 + i;
        assert!(idx < self.len);
        *self.ptr.add(idx) = x;
    }

    /// # Safety
    /// Same contract as [`Writer4::write`] for 3-D arrays (`v = 0`).
    #[inline(always)]
    pub unsafe fn write3(&self, k: usize, j: usize, i: usize, x: T) {
        self.write(0, k, j, i, x)
    }

    /// # Safety
    /// No other iteration may write flat index `idx`.
    #[inline(always)]
    pub unsafe fn write_flat(&self, idx: usize, x: T) {
        assert!(idx < self.len);
        *self.ptr.add(idx) = x;
    }
}

/// Writer over a plain slice (boundary buffers).
pub struct SliceWriter<'a, T> {
    ptr: *mut T,
    len: usize,
    _m: PhantomData<&'a mut [T]>,
}

unsafe impl<T: Send> Send for SliceWriter<'_, T> {}
unsafe impl<T: Send> Sync for SliceWriter<'_, T> {}

impl<'a, T: Copy> SliceWriter<'a, T> {
    pub fn new(s: &'a mut [T]) -> Self {
        SliceWriter { ptr: s.as_mut_ptr(), len: s.len(), _m: PhantomData }
    }

    /// # Safety
    /// No other iteration may write `idx`.
    #[inline(always)]
    pub unsafe fn write(&self, idx: usize, x: T) {
        assert!(idx < self.len);
        *self.ptr.add(idx) = x;
    }
}
