use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use roadboost::dataset::ImagePatch;
use roadboost::haar::{
    build_index, extract_feature, extract_vector, feature_count, integral_image, FeatureDescriptor,
    FeatureError, HaarKernelType,
};

fn random_patch(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePatch {
    ImagePatch::new(w, h, (0..w * h).map(|_| rng.gen_range(0.0..1.0)).collect()).unwrap()
}

/// Sign of each grid cell, row-major, for a kernel drawn as `rows x cols` cells.
fn sign_grid(kernel: HaarKernelType) -> (usize, usize, Vec<i8>) {
    match kernel {
        HaarKernelType::EdgeHorizontal => (2, 1, vec![1, -1]),
        HaarKernelType::EdgeVertical => (1, 2, vec![-1, 1]),
        HaarKernelType::LineHorizontal => (3, 1, vec![-1, 1, -1]),
        HaarKernelType::LineVertical => (1, 3, vec![-1, 1, -1]),
        HaarKernelType::CenterSurround => (3, 3, vec![-1, -1, -1, -1, 1, -1, -1, -1, -1]),
        HaarKernelType::Checkerboard => (2, 2, vec![1, -1, -1, 1]),
        HaarKernelType::DiagonalEdgeMain => (2, 2, vec![0, 1, -1, 0]),
        HaarKernelType::DiagonalEdgeAnti => (2, 2, vec![1, 0, 0, -1]),
    }
}

/// Pixel-by-pixel mask multiplication, each polarity divided by its own area.
fn direct_response(patch: &ImagePatch, d: &FeatureDescriptor) -> f64 {
    let (rows, cols, signs) = sign_grid(d.kernel);
    let (w, h) = (d.kernel_w as usize, d.kernel_h as usize);
    let x0 = d.center_x as usize - w / 2;
    let y0 = d.center_y as usize - h / 2;
    let (mut sp, mut ap, mut sn, mut an) = (0.0, 0.0, 0.0, 0.0);
    for dy in 0..h {
        for dx in 0..w {
            let cell = (dy * rows / h) * cols + dx * cols / w;
            let v = patch.get(x0 + dx, y0 + dy);
            match signs[cell] {
                1 => {
                    sp += v;
                    ap += 1.0;
                }
                -1 => {
                    sn += v;
                    an += 1.0;
                }
                _ => {}
            }
        }
    }
    0.5 * (sp / ap - sn / an)
}

#[test]
fn feature_count_matches_closed_form_and_brute_force() {
    assert_eq!(feature_count(42, 42, 8).unwrap(), 24_893_568);
    assert_eq!(feature_count(1, 1, 1).unwrap(), 1);
    assert_eq!(feature_count(4, 4, 2).unwrap(), 512);
    for nx in 1..=6u64 {
        for ny in 1..=6u64 {
            for nk in 1..=8u64 {
                let mut n = 0;
                for _translation in 0..nx * ny {
                    for _scale in 0..nx * ny {
                        for _kernel in 0..nk {
                            n += 1;
                        }
                    }
                }
                assert_eq!(feature_count(nx, ny, nk).unwrap(), n);
            }
        }
    }
    assert!(matches!(feature_count(u64::MAX, 2, 1), Err(FeatureError::Overflow { .. })));
    assert!(feature_count(0, 1, 1).is_err());
}

#[test]
fn stride_one_index_counts_every_placement() {
    let index = build_index(8, 8, &HaarKernelType::ALL, 1, 1).unwrap();
    let mut expected = 0;
    for k in HaarKernelType::ALL {
        let (uw, uh) = k.unit();
        for w in (uw..=8).step_by(uw) {
            for h in (uh..=8).step_by(uh) {
                expected += (8 - w + 1) * (8 - h + 1);
            }
        }
    }
    assert_eq!(index.len(), expected);
    assert!(index.len() as u64 <= feature_count(8, 8, 8).unwrap());
    let again = build_index(8, 8, &HaarKernelType::ALL, 1, 1).unwrap();
    assert_eq!(index.descriptors(), again.descriptors());
    assert_eq!(index.version(), again.version());
}

#[test]
fn single_pixel_patch_has_at_most_one_descriptor() {
    for k in HaarKernelType::ALL {
        assert!(build_index(1, 1, &[k], 1, 1).unwrap().len() <= 1);
    }
}

#[test]
fn step_edge_peaks_on_the_edge() {
    let (w, h) = (16, 16);
    let pixels = (0..w * h).map(|i| if i % w < w / 2 { 0.0 } else { 1.0 }).collect();
    let patch = ImagePatch::new(w, h, pixels).unwrap();
    let ii = integral_image(&patch);
    let at = |cx: u16| {
        extract_feature(
            &ii,
            &FeatureDescriptor {
                kernel: HaarKernelType::EdgeVertical,
                center_x: cx,
                center_y: 8,
                kernel_w: 4,
                kernel_h: 4,
            },
        )
        .unwrap()
    };
    let best = (2..=14).map(at).fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(at(8), best);
    assert_eq!(best, 0.5);
}

#[test]
fn integral_and_direct_extraction_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    let index = build_index(12, 12, &HaarKernelType::ALL, 1, 1).unwrap();
    for _ in 0..50 {
        let patch = random_patch(&mut rng, 12, 12);
        let d = index.descriptors()[rng.gen_range(0..index.len())];
        let fast = extract_feature(&integral_image(&patch), &d).unwrap();
        assert!((fast - direct_response(&patch, &d)).abs() < 1e-9, "{d:?}");
    }
}

#[test]
fn extract_vector_matches_per_descriptor_loop() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let index = build_index(10, 10, &HaarKernelType::ALL, 2, 1).unwrap();
    let patch = random_patch(&mut rng, 10, 10);
    let v = extract_vector(&patch, &index).unwrap();
    assert_eq!(v.len(), index.len());
    let ii = integral_image(&patch);
    for (d, x) in index.descriptors().iter().zip(&v.values) {
        // the vector path uses precomputed cell plans, so summation order differs
        assert!((x - extract_feature(&ii, d).unwrap()).abs() < 1e-12);
    }
    let zero = extract_vector(&ImagePatch::filled(10, 10, 0.0).unwrap(), &index).unwrap();
    assert!(zero.values.iter().all(|&x| x == 0.0));
    assert!(matches!(
        extract_vector(&ImagePatch::filled(9, 10, 0.0).unwrap(), &index),
        Err(FeatureError::DimensionMismatch { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn rectangle_sums_match_direct_summation(
        seed in any::<u64>(),
        w in 1usize..20,
        h in 1usize..20,
        rect in (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let patch = random_patch(&mut rng, w, h);
        let x = (rect.0 * w as f64) as usize;
        let y = (rect.1 * h as f64) as usize;
        let rw = 1 + (rect.2 * (w - x) as f64) as usize;
        let rh = 1 + (rect.3 * (h - y) as f64) as usize;
        let (rw, rh) = (rw.min(w - x), rh.min(h - y));
        let mut direct = 0.0;
        for yy in y..y + rh {
            for xx in x..x + rw {
                direct += patch.get(xx, yy);
            }
        }
        prop_assert!((integral_image(&patch).rect_sum(x, y, rw, rh) - direct).abs() < 1e-9);
    }

    #[test]
    fn responses_ignore_a_constant_offset(seed in any::<u64>(), offset in 0.0f64..0.5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = random_patch(&mut rng, 9, 9);
        let patch = ImagePatch::new(9, 9, half.pixels().iter().map(|v| v * 0.5).collect()).unwrap();
        let shifted = ImagePatch::new(9, 9, patch.pixels().iter().map(|v| v + offset).collect()).unwrap();
        let index = build_index(9, 9, &HaarKernelType::ALL, 2, 1).unwrap();
        let a = extract_vector(&patch, &index).unwrap();
        let b = extract_vector(&shifted, &index).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn strided_index_is_a_subset(w in 3usize..14, h in 3usize..14, ts in 1usize..4, ss in 1usize..4) {
        let full: HashSet<FeatureDescriptor> =
            build_index(w, h, &HaarKernelType::ALL, 1, 1).unwrap().descriptors().iter().copied().collect();
        let strided = build_index(w, h, &HaarKernelType::ALL, ts, ss).unwrap();
        prop_assert!(strided.descriptors().iter().all(|d| full.contains(d)));
        prop_assert!(strided.len() as u64 <= feature_count(w as u64, h as u64, 8).unwrap());
    }
}
