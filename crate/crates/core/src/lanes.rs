//! Apply a 1D transform to every line of a tensor along one axis.

use ndarray::{Array2, ArrayD, IxDyn};
use num_complex::Complex64;

/// Moves `axis` last, hands `f` an `(lines, n)` row-major block, and restores the layout.
/// `f` may change the line length.
pub(crate) fn map_axis(
    data: &ArrayD<Complex64>,
    axis: usize,
    f: impl FnOnce(Array2<Complex64>) -> Array2<Complex64>,
) -> ArrayD<Complex64> {
    let nd = data.ndim();
    let mut perm: Vec<usize> = (0..nd).filter(|&i| i != axis).collect();
    perm.push(axis);
    let permuted = data.view().permuted_axes(IxDyn(&perm));
    let mut pshape: Vec<usize> = permuted.shape().to_vec();
    let n = data.shape()[axis];
    let lines = data.len() / n;
    let flat: Vec<Complex64> = permuted.iter().cloned().collect();
    let block = Array2::from_shape_vec((lines, n), flat).expect("line block");
    let out = f(block);
    assert_eq!(out.nrows(), lines, "line count must be preserved");
    pshape[nd - 1] = out.ncols();
    let v: Vec<Complex64> = out.iter().cloned().collect();
    let back = ArrayD::from_shape_vec(IxDyn(&pshape), v).expect("permuted shape");
    let mut inverse = vec![0; nd];
    for (i, &p) in perm.iter().enumerate() {
        inverse[p] = i;
    }
    let restored = back.permuted_axes(IxDyn(&inverse));
    restored.as_standard_layout().into_owned()
}
