//! Blockwise pair sums over Gram tiles.
//!
//! Pair functions that depend on two rows only through `<a, b>`, `|a|^2` and
//! `|b|^2` are summed tile by tile: each tile's inner products come from one
//! matrix product, no `n x n` matrix is ever materialized, and tiles are
//! reduced in a fixed row-major order with a pairwise tree. The result is
//! therefore independent of how many threads evaluate the tiles.

use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, MatRef, Par};
use rayon::prelude::*;

/// Columns per Gram strip; keeps each strip resident in cache.
const STRIP: usize = 128;
const LANES: usize = 8;

/// A pair function summed over one column of a Gram strip.
pub(crate) trait PairKernel: Sync {
    /// Sum of `f(dots[i], norms_a[i], norm_b)` over `i`.
    fn column_sum(&self, dots: &[f64], norms_a: &[f64], norm_b: f64) -> f64;
}

/// Row-major sample with cached squared row norms.
pub(crate) struct Rows<'a> {
    data: &'a [f64],
    n: usize,
    d: usize,
    sq_norms: Vec<f64>,
}

impl<'a> Rows<'a> {
    pub(crate) fn new(data: &'a [f64], n: usize, d: usize) -> Self {
        debug_assert_eq!(data.len(), n * d);
        let sq_norms = data
            .chunks_exact(d.max(1))
            .take(n)
            .map(|r| r.iter().map(|v| v * v).sum())
            .collect();
        Self { data, n, d, sq_norms }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    fn view(&self, start: usize, len: usize) -> MatRef<'a, f64> {
        MatRef::from_row_major_slice(&self.data[start * self.d..(start + len) * self.d], len, self.d)
    }
}

#[derive(Clone, Copy)]
struct Tile {
    a_start: usize,
    a_len: usize,
    b_start: usize,
    b_len: usize,
    diagonal: bool,
}

fn block_ranges(n: usize, block: usize) -> Vec<(usize, usize)> {
    (0..n)
        .step_by(block)
        .map(|s| (s, block.min(n - s)))
        .collect()
}

/// Sum over unordered pairs `i < j` of one sample.
pub(crate) fn self_pair_sum<K: PairKernel>(x: &Rows<'_>, block: usize, kernel: &K) -> f64 {
    let blocks = block_ranges(x.len(), block.max(1));
    let mut tiles = Vec::new();
    for (bi, &(a_start, a_len)) in blocks.iter().enumerate() {
        for &(b_start, b_len) in &blocks[bi..] {
            tiles.push(Tile {
                a_start,
                a_len,
                b_start,
                b_len,
                diagonal: a_start == b_start,
            });
        }
    }
    reduce_tiles(x, x, &tiles, kernel)
}

/// Sum over all `m * n` pairs `(x_i, y_j)`.
pub(crate) fn cross_pair_sum<K: PairKernel>(x: &Rows<'_>, y: &Rows<'_>, block: usize, kernel: &K) -> f64 {
    let block = block.max(1);
    let mut tiles = Vec::new();
    for &(a_start, a_len) in &block_ranges(x.len(), block) {
        for &(b_start, b_len) in &block_ranges(y.len(), block) {
            tiles.push(Tile {
                a_start,
                a_len,
                b_start,
                b_len,
                diagonal: false,
            });
        }
    }
    reduce_tiles(x, y, &tiles, kernel)
}

fn reduce_tiles<K: PairKernel>(a: &Rows<'_>, b: &Rows<'_>, tiles: &[Tile], kernel: &K) -> f64 {
    let sums: Vec<f64> = tiles
        .par_iter()
        .map_init(
            || Mat::<f64>::zeros(0, 0),
            |buf, tile| tile_sum(a, b, tile, kernel, buf),
        )
        .collect();
    pairwise_sum(&sums)
}

fn tile_sum<K: PairKernel>(a: &Rows<'_>, b: &Rows<'_>, tile: &Tile, kernel: &K, buf: &mut Mat<f64>) -> f64 {
    let lhs = a.view(tile.a_start, tile.a_len);
    let norms_a = &a.sq_norms[tile.a_start..tile.a_start + tile.a_len];
    let mut strip_sums = Vec::with_capacity(tile.b_len.div_ceil(STRIP));
    for s in (0..tile.b_len).step_by(STRIP) {
        let width = STRIP.min(tile.b_len - s);
        let rhs = b.view(tile.b_start + s, width);
        buf.resize_with(tile.a_len, width, |_, _| 0.0);
        matmul(buf.as_mut(), Accum::Replace, lhs, rhs.transpose(), 1.0, Par::Seq);
        let mut acc = 0.0;
        for j in 0..width {
            let col = buf.col(j).try_as_col_major().expect("owned matrices are column-major");
            let dots = col.as_slice();
            let nb = b.sq_norms[tile.b_start + s + j];
            // on diagonal tiles only rows strictly above the diagonal contribute
            let rows = if tile.diagonal { s + j } else { tile.a_len };
            acc += kernel.column_sum(&dots[..rows], &norms_a[..rows], nb);
        }
        strip_sums.push(acc);
    }
    pairwise_sum(&strip_sums)
}

pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        2 => v[0] + v[1],
        n => {
            let (lo, hi) = v.split_at(n / 2);
            pairwise_sum(lo) + pairwise_sum(hi)
        }
    }
}

/// Sums `f(dot, na, nb)` over a column; element `i` accumulates into lane `i % 8`.
///
/// Values are produced by a plain map loop into a stack buffer, which the
/// compiler vectorizes, then folded into the lanes.
#[inline(always)]
fn lane_sum(dots: &[f64], norms_a: &[f64], nb: f64, f: impl Fn(f64, f64, f64) -> f64) -> f64 {
    const CHUNK: usize = 32 * LANES;
    let mut lanes = [0.0_f64; LANES];
    let mut buf = [0.0_f64; CHUNK];
    for (dc, nc) in dots.chunks(CHUNK).zip(norms_a.chunks(CHUNK)) {
        let vals = &mut buf[..dc.len()];
        for ((v, &d), &n) in vals.iter_mut().zip(dc).zip(nc) {
            *v = f(d, n, nb);
        }
        let mut groups = vals.chunks_exact(LANES);
        for g in &mut groups {
            for l in 0..LANES {
                lanes[l] += g[l];
            }
        }
        for (l, v) in groups.remainder().iter().enumerate() {
            lanes[l] += v;
        }
    }
    pairwise_sum(&lanes)
}

/// `exp(x)` for `x <= 0`, branch-free so that column loops vectorize.
///
/// Cody-Waite reduction `x = k ln 2 + r`, `|r| <= ln 2 / 2`, followed by a
/// degree-13 Taylor polynomial (truncation error below 1e-17 relative) and
/// exponent-bit scaling. Arguments below -708 return 0.
#[inline(always)]
pub(crate) fn exp_nonpositive(x: f64) -> f64 {
    const LOG2E: f64 = std::f64::consts::LOG2_E;
    const LN2_HI: f64 = 0.693_147_180_369_123_8;
    const LN2_LO: f64 = 1.908_214_929_270_587_7e-10;
    // 1.5 * 2^52: adding it rounds to an integer held in the low mantissa bits
    const SHIFTER: f64 = 6_755_399_441_055_744.0;
    const C: [f64; 14] = [
        1.0,
        1.0,
        1.0 / 2.0,
        1.0 / 6.0,
        1.0 / 24.0,
        1.0 / 120.0,
        1.0 / 720.0,
        1.0 / 5_040.0,
        1.0 / 40_320.0,
        1.0 / 362_880.0,
        1.0 / 3_628_800.0,
        1.0 / 39_916_800.0,
        1.0 / 479_001_600.0,
        1.0 / 6_227_020_800.0,
    ];
    let xc = if x < -708.0 { -708.0 } else { x };
    let t = xc * LOG2E + SHIFTER;
    let k = t - SHIFTER;
    let r = (xc - k * LN2_HI) - k * LN2_LO;
    // Estrin's scheme
    let r2 = r * r;
    let r4 = r2 * r2;
    let r8 = r4 * r4;
    let q0 = (C[0] + C[1] * r) + (C[2] + C[3] * r) * r2;
    let q1 = (C[4] + C[5] * r) + (C[6] + C[7] * r) * r2;
    let q2 = (C[8] + C[9] * r) + (C[10] + C[11] * r) * r2;
    let q3 = C[12] + C[13] * r;
    let p = (q0 + q1 * r4) + (q2 + q3 * r4) * r8;
    let ki = t.to_bits().wrapping_sub(SHIFTER.to_bits()) as i64;
    let scale = f64::from_bits((ki.wrapping_add(1023) as u64) << 52);
    let y = p * scale;
    if x < -708.0 {
        0.0
    } else {
        y
    }
}

macro_rules! dispatch_column {
    ($name:ident, |$d:ident, $na:ident, $nb:ident, $p:ident: $pt:ty| $body:expr) => {
        fn $name(dots: &[f64], norms_a: &[f64], nb: f64, $p: $pt) -> f64 {
            #[inline(always)]
            fn body(dots: &[f64], norms_a: &[f64], nb: f64, $p: $pt) -> f64 {
                lane_sum(dots, norms_a, nb, |$d, $na, $nb| $body)
            }
            #[cfg(target_arch = "x86_64")]
            {
                #[target_feature(enable = "avx512f")]
                unsafe fn avx512(dots: &[f64], norms_a: &[f64], nb: f64, $p: $pt) -> f64 {
                    body(dots, norms_a, nb, $p)
                }
                #[target_feature(enable = "avx2")]
                unsafe fn avx2(dots: &[f64], norms_a: &[f64], nb: f64, $p: $pt) -> f64 {
                    body(dots, norms_a, nb, $p)
                }
                if std::is_x86_feature_detected!("avx512f") {
                    // SAFETY: the feature was detected at runtime.
                    return unsafe { avx512(dots, norms_a, nb, $p) };
                }
                if std::is_x86_feature_detected!("avx2") {
                    // SAFETY: the feature was detected at runtime.
                    return unsafe { avx2(dots, norms_a, nb, $p) };
                }
            }
            body(dots, norms_a, nb, $p)
        }
    };
}

dispatch_column!(rbf_column, |dot, na, nb, gamma: f64| {
    let d2 = na + nb - 2.0 * dot;
    let d2 = if d2 < 0.0 { 0.0 } else { d2 };
    exp_nonpositive(-gamma * d2)
});

dispatch_column!(cube_column, |dot, _na, _nb, _unused: ()| dot * dot * dot);

/// Gaussian RBF `exp(-gamma |a - b|^2)` with squared distances from the Gram identity.
pub(crate) struct RbfPairs {
    pub gamma: f64,
}

impl PairKernel for RbfPairs {
    fn column_sum(&self, dots: &[f64], norms_a: &[f64], norm_b: f64) -> f64 {
        rbf_column(dots, norms_a, norm_b, self.gamma)
    }
}

/// `<a, b>^3`.
pub(crate) struct CubedInnerProduct;

impl PairKernel for CubedInnerProduct {
    fn column_sum(&self, dots: &[f64], norms_a: &[f64], norm_b: f64) -> f64 {
        cube_column(dots, norms_a, norm_b, ())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fast_exp_matches_std_on_grid() {
        let mut worst = 0.0_f64;
        let mut x = 0.0;
        while x > -708.0 {
            let rel = (exp_nonpositive(x) - x.exp()).abs() / x.exp();
            worst = worst.max(rel);
            x -= 0.013_7;
        }
        assert!(worst < 1e-15, "worst relative error {worst:e}");
        assert_eq!(exp_nonpositive(0.0), 1.0);
        assert_eq!(exp_nonpositive(-800.0), 0.0);
        assert_eq!(exp_nonpositive(f64::NEG_INFINITY), 0.0);
    }

    proptest! {
        #[test]
        fn fast_exp_relative_error(x in -708.0f64..=0.0) {
            let rel = (exp_nonpositive(x) - x.exp()).abs() / x.exp();
            prop_assert!(rel < 1e-15);
        }
    }

    fn brute_self(data: &[f64], n: usize, d: usize, f: impl Fn(&[f64], &[f64]) -> f64) -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += f(&data[i * d..(i + 1) * d], &data[j * d..(j + 1) * d]);
            }
        }
        s
    }

    fn pseudo(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        (0..n)
            .map(|_| {
                s ^= s << 13;
                s ^= s >> 7;
                s ^= s << 17;
                (s >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
            })
            .collect()
    }

    #[test]
    fn cube_self_sum_matches_brute_force() {
        let (n, d) = (150, 3);
        let data = pseudo(n * d, 3);
        let rows = Rows::new(&data, n, d);
        let want = brute_self(&data, n, d, |a, b| {
            let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
            dot.powi(3)
        });
        for block in [1, 7, 64, 150, 1000] {
            let got = self_pair_sum(&rows, block, &CubedInnerProduct);
            assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "block {block}: {got} vs {want}");
        }
    }

    #[test]
    fn rbf_cross_sum_matches_brute_force() {
        let (m, n, d) = (40, 300, 5);
        let x = pseudo(m * d, 1);
        let y = pseudo(n * d, 2);
        let gamma = 0.3;
        let mut want = 0.0;
        for i in 0..m {
            for j in 0..n {
                let d2: f64 = x[i * d..(i + 1) * d]
                    .iter()
                    .zip(&y[j * d..(j + 1) * d])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                want += (-gamma * d2).exp();
            }
        }
        let (rx, ry) = (Rows::new(&x, m, d), Rows::new(&y, n, d));
        for block in [1, 7, 64, 300] {
            let got = cross_pair_sum(&rx, &ry, block, &RbfPairs { gamma });
            assert!((got - want).abs() <= 1e-12 * want, "block {block}");
        }
    }

    #[test]
    fn pairwise_sum_small_cases() {
        assert_eq!(pairwise_sum(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0, 4.0, 5.0]), 15.0);
    }
}
