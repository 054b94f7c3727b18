use nalgebra::DMatrix;

// Pade [13/13] coefficients and the matching scaling threshold.
const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with a diagonal [13/13] Pade
/// approximant.
pub fn matrix_exp(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "matrix_exp needs a square matrix");
    let n = a.nrows();
    let ident = DMatrix::<f64>::identity(n, n);
    if a.iter().all(|&v| v == 0.0) {
        return ident;
    }
    let norm1 = (0..n)
        .map(|j| a.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let squarings = if norm1 > THETA13 {
        (norm1 / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let a = a * 2f64.powi(-squarings);

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = &PADE13;
    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9])
        + &a6 * b[7]
        + &a4 * b[5]
        + &a2 * b[3]
        + &ident * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8])
        + &a6 * b[6]
        + &a4 * b[4]
        + &a2 * b[2]
        + &ident * b[0];

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut r = lhs
        .lu()
        .solve(&rhs)
        .expect("Pade denominator is nonsingular for scaled arguments");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
