//! Minimal dense f32 kernels for the frozen encoder.
//!
//! Accumulation order is fixed (k-major), so results are identical across
//! runs and platforms for the same inputs — a requirement for the pipeline's
//! byte-identical reruns.

/// c[m×n] = a[m×k] · b[k×n], all row-major. `c` is overwritten.
pub fn matmul_f32(a: &[f32], b: &[f32], c: &mut [f32], m: usize, k: usize, n: usize) {
    assert_eq!(a.len(), m * k, "lhs size");
    assert_eq!(b.len(), k * n, "rhs size");
    assert_eq!(c.len(), m * n, "out size");
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        crow.fill(0.0);
        for (p, &av) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    }
}

/// out[m×n] = xs[m×k] · w[k×n] + bias[n] broadcast over rows.
///
/// Per output element this accumulates in exactly the same k-ascending
/// order as [`vecmat_bias_f32`], so the results are bit-identical — the
/// loop nest only differs to reuse each weight row across all `m` inputs
/// while it is hot in cache (the projection weights can be tens of MB).
pub fn matmul_bias_f32(xs: &[f32], m: usize, k: usize, w: &[f32], bias: &[f32], out: &mut [f32]) {
    let n = bias.len();
    assert_eq!(xs.len(), m * k, "input size");
    assert_eq!(w.len(), k * n, "weight size");
    assert_eq!(out.len(), m * n, "out size");
    for orow in out.chunks_exact_mut(n) {
        orow.copy_from_slice(bias);
    }
    for p in 0..k {
        let wrow = &w[p * n..(p + 1) * n];
        for (xrow, orow) in xs.chunks_exact(k).zip(out.chunks_exact_mut(n)) {
            let xv = xrow[p];
            for (ov, &wv) in orow.iter_mut().zip(wrow) {
                *ov += xv * wv;
            }
        }
    }
}

/// out[n] = x[k] · w[k×n] + bias[n]; `w` row-major with one row per input.
pub fn vecmat_bias_f32(x: &[f32], w: &[f32], bias: &[f32], out: &mut [f32]) {
    let k = x.len();
    let n = bias.len();
    assert_eq!(w.len(), k * n, "weight size");
    assert_eq!(out.len(), n, "out size");
    out.copy_from_slice(bias);
    for (p, &xv) in x.iter().enumerate() {
        let wrow = &w[p * n..(p + 1) * n];
        for (ov, &wv) in out.iter_mut().zip(wrow) {
            *ov += xv * wv;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn matmul_small_known_product() {
        // [1 2; 3 4] * [5 6; 7 8] = [19 22; 43 50]
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, 6.0, 7.0, 8.0];
        let mut c = [0.0f32; 4];
        matmul_f32(&a, &b, &mut c, 2, 2, 2);
        assert_eq!(c, [19.0, 22.0, 43.0, 50.0]);
    }

    #[test]
    fn blocked_matmul_is_bitwise_equal_to_per_row_vecmat() {
        // awkward values (no nice cancellation) so a reordered accumulation
        // would actually show up as a bit difference
        let mut state = 0x9E3779B97F4A7C15u64;
        let mut next = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 40) as f32) / (1u32 << 24) as f32 - 0.5
        };
        let (m, k, n) = (5, 17, 13);
        let xs: alloc::vec::Vec<f32> = (0..m * k).map(|_| next()).collect();
        let w: alloc::vec::Vec<f32> = (0..k * n).map(|_| next()).collect();
        let bias: alloc::vec::Vec<f32> = (0..n).map(|_| next()).collect();

        let mut blocked = vec![0.0f32; m * n];
        matmul_bias_f32(&xs, m, k, &w, &bias, &mut blocked);

        let mut row_out = vec![0.0f32; n];
        for t in 0..m {
            vecmat_bias_f32(&xs[t * k..(t + 1) * k], &w, &bias, &mut row_out);
            assert_eq!(&blocked[t * n..(t + 1) * n], row_out.as_slice());
        }
    }

    #[test]
    fn vecmat_matches_matmul_row() {
        let x = [0.5f32, -1.0, 2.0];
        let w = [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0]; // 3x2
        let bias = [0.25f32, -0.25];
        let mut out = [0.0f32; 2];
        vecmat_bias_f32(&x, &w, &bias, &mut out);

        let mut mm = vec![0.0f32; 2];
        matmul_f32(&x, &w, &mut mm, 1, 3, 2);
        assert_eq!(out[0], mm[0] + bias[0]);
        assert_eq!(out[1], mm[1] + bias[1]);
    }
}
