//! Orthonormal lowpass filters.

#![allow(clippy::excessive_precision)]

/// Haar, `1/√2 (1, 1)`.
const HAAR: [f64; 2] = [
    std::f64::consts::FRAC_1_SQRT_2,
    std::f64::consts::FRAC_1_SQRT_2,
];

/// Daubechies, 2 vanishing moments.
const DB2: [f64; 4] = [
    0.482_962_913_144_534_143_37,
    0.836_516_303_737_807_905_58,
    0.224_143_868_042_013_381_03,
    -0.129_409_522_551_260_381_17,
];

/// Daubechies, 3 vanishing moments.
const DB3: [f64; 6] = [
    0.332_670_552_950_082_616,
    0.806_891_509_311_092_576_49,
    0.459_877_502_118_491_570_1,
    -0.135_011_020_010_254_588_7,
    -0.085_441_273_882_026_661_693,
    0.035_226_291_885_709_536_603,
];

/// Daubechies, 4 vanishing moments.
const DB4: [f64; 8] = [
    0.230_377_813_308_896_500_86,
    0.714_846_570_552_915_647_09,
    0.630_880_767_929_858_907_88,
    -0.027_983_769_416_859_854_211,
    -0.187_034_811_719_093_084_08,
    0.030_841_381_835_560_763_627,
    0.032_883_011_666_885_199_735,
    -0.010_597_401_785_069_032_105,
];

/// Daubechies, 5 vanishing moments.
const DB5: [f64; 10] = [
    0.160_102_397_974_192_914_48,
    0.603_829_269_797_189_670_54,
    0.724_308_528_437_772_927_73,
    0.138_428_145_901_320_731_51,
    -0.242_294_887_066_382_031_86,
    -0.032_244_869_584_638_374_649,
    0.077_571_493_840_045_713_523,
    -0.006_241_490_212_798_274_274_2,
    -0.012_580_751_999_081_999_469,
    0.003_335_725_285_473_771_278,
];

/// Daubechies, 6 vanishing moments.
const DB6: [f64; 12] = [
    0.111_540_743_350_109_463_62,
    0.494_623_890_398_453_085_68,
    0.751_133_908_021_095_350_68,
    0.315_250_351_709_197_629_09,
    -0.226_264_693_965_439_820_08,
    -0.129_766_867_567_261_935_56,
    0.097_501_605_587_323_049_102,
    0.027_522_865_530_305_728_626,
    -0.031_582_039_317_486_029_565,
    0.000_553_842_201_161_496_139_25,
    0.004_777_257_510_945_510_639_6,
    -0.001_077_301_085_308_479_564_9,
];

/// Lowpass filter for `vanishing_moments` ∈ 1..=6 (1 is Haar).
pub(crate) fn daubechies_lowpass(vanishing_moments: usize) -> Option<&'static [f64]> {
    match vanishing_moments {
        1 => Some(&HAAR),
        2 => Some(&DB2),
        3 => Some(&DB3),
        4 => Some(&DB4),
        5 => Some(&DB5),
        6 => Some(&DB6),
        _ => None,
    }
}

/// Quadrature mirror highpass `g_m = (-1)^m h_{L-1-m}`.
pub(crate) fn highpass(lowpass: &[f64]) -> Vec<f64> {
    let l = lowpass.len();
    (0..l)
        .map(|m| {
            if m % 2 == 0 {
                lowpass[l - 1 - m]
            } else {
                -lowpass[l - 1 - m]
            }
        })
        .collect()
}
