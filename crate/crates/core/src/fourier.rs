//! Unnormalized n-dimensional DFTs over tensor arrays.

use ndarray::ArrayD;
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::lanes::map_axis;

pub(crate) fn fft_axes(mut data: ArrayD<Complex64>, inverse: bool) -> ArrayD<Complex64> {
    let mut planner = FftPlanner::<f64>::new();
    for axis in 0..data.ndim() {
        let n = data.shape()[axis];
        let plan = if inverse { planner.plan_fft_inverse(n) } else { planner.plan_fft_forward(n) };
        data = map_axis(&data, axis, |mut block| {
            let mut buf = vec![Complex64::default(); n];
            for mut row in block.rows_mut() {
                buf.iter_mut().zip(row.iter()).for_each(|(b, r)| *b = *r);
                plan.process(&mut buf);
                row.iter_mut().zip(&buf).for_each(|(r, b)| *r = *b);
            }
            block
        });
    }
    data
}
