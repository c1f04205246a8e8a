use crate::dataset::ImagePatch;

use super::index::{FeatureIndex, IndexVersion, KernelPlan};
use super::{FeatureDescriptor, FeatureError, IntegralImage};

/// Feature responses, index-aligned to the descriptors of one `FeatureIndex`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub index_version: IndexVersion,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Normalized response of one kernel: mean of the positive cells minus mean
/// of the negative cells, halved. For kernels with equal positive and
/// negative area this is `(sum(+) - sum(-)) / area`.
pub fn extract_feature(ii: &IntegralImage, desc: &FeatureDescriptor) -> Result<f64, FeatureError> {
    if !desc.fits(ii.width(), ii.height()) {
        return Err(FeatureError::OutOfBounds(*desc, ii.width(), ii.height()));
    }
    let (pos, neg) = desc.regions();
    let sum = |rs: &[super::Rect]| -> (f64, f64) {
        rs.iter().fold((0.0, 0.0), |(s, a), r| {
            (s + ii.rect_sum(r.0, r.1, r.2, r.3), a + (r.2 * r.3) as f64)
        })
    };
    let (sp, ap) = sum(&pos);
    let (sn, an) = sum(&neg);
    Ok(0.5 * (sp / ap - sn / an))
}

fn check_dims(w: usize, h: usize, index: &FeatureIndex) -> Result<(), FeatureError> {
    if w != index.patch_w() || h != index.patch_h() {
        return Err(FeatureError::DimensionMismatch {
            got_w: w,
            got_h: h,
            want_w: index.patch_w(),
            want_h: index.patch_h(),
        });
    }
    Ok(())
}

fn eval_all(ii: &IntegralImage, index: &FeatureIndex) -> Vec<f64> {
    (0..index.len()).map(|i| index.plan(i).eval(ii)).collect()
}

/// Extracts every indexed feature from a patch that already has the index's
/// dimensions. No resampling or normalization is applied.
pub fn extract_vector(patch: &ImagePatch, index: &FeatureIndex) -> Result<FeatureVector, FeatureError> {
    check_dims(patch.width(), patch.height(), index)?;
    let ii = super::integral_image(patch);
    Ok(FeatureVector {
        values: eval_all(&ii, index),
        index_version: index.version(),
    })
}

/// Bilinear resample to `w x h` followed by zero-mean, unit-variance
/// normalization. A constant patch maps to all zeros.
pub fn canonicalize(patch: &ImagePatch, w: usize, h: usize) -> Vec<f64> {
    let mut out = if patch.width() == w && patch.height() == h {
        patch.pixels().to_vec()
    } else {
        resample_bilinear(patch, w, h)
    };
    let n = out.len() as f64;
    let mean = out.iter().sum::<f64>() / n;
    let var = out.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < 1e-12 {
        out.iter_mut().for_each(|v| *v = 0.0);
    } else {
        out.iter_mut().for_each(|v| *v = (*v - mean) / std);
    }
    out
}

fn resample_bilinear(patch: &ImagePatch, w: usize, h: usize) -> Vec<f64> {
    let (sw, sh) = (patch.width(), patch.height());
    let sx = sw as f64 / w as f64;
    let sy = sh as f64 / h as f64;
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        let fy = ((y as f64 + 0.5) * sy - 0.5).clamp(0.0, (sh - 1) as f64);
        let y0 = fy.floor() as usize;
        let y1 = (y0 + 1).min(sh - 1);
        let ty = fy - y0 as f64;
        for x in 0..w {
            let fx = ((x as f64 + 0.5) * sx - 0.5).clamp(0.0, (sw - 1) as f64);
            let x0 = fx.floor() as usize;
            let x1 = (x0 + 1).min(sw - 1);
            let tx = fx - x0 as f64;
            let top = patch.get(x0, y0) * (1.0 - tx) + patch.get(x1, y0) * tx;
            let bottom = patch.get(x0, y1) * (1.0 - tx) + patch.get(x1, y1) * tx;
            out.push(top * (1.0 - ty) + bottom * ty);
        }
    }
    out
}

/// Field-side extraction: canonicalizes arbitrary patches to the index size
/// before computing features.
#[derive(Debug, Clone, Copy)]
pub struct FeatureExtractor<'a> {
    index: &'a FeatureIndex,
}

impl<'a> FeatureExtractor<'a> {
    pub fn new(index: &'a FeatureIndex) -> Self {
        Self { index }
    }

    pub fn index(&self) -> &'a FeatureIndex {
        self.index
    }

    fn integral(&self, patch: &ImagePatch) -> IntegralImage {
        let (w, h) = (self.index.patch_w(), self.index.patch_h());
        IntegralImage::from_values(w, h, &canonicalize(patch, w, h))
    }

    pub fn vector(&self, patch: &ImagePatch) -> FeatureVector {
        FeatureVector {
            values: eval_all(&self.integral(patch), self.index),
            index_version: self.index.version(),
        }
    }

    /// Computes only the listed dimensions, e.g. those a trained classifier uses.
    pub fn sparse(&self, patch: &ImagePatch, dims: &[usize]) -> Vec<f64> {
        let ii = self.integral(patch);
        dims.iter()
            .map(|&d| KernelPlan::eval(self.index.plan(d), &ii))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::haar::{build_index, integral_image, HaarKernelType};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_patch(rng: &mut ChaCha8Rng, w: usize, h: usize) -> ImagePatch {
        ImagePatch::new(w, h, (0..w * h).map(|_| rng.gen_range(0.0..=1.0)).collect()).unwrap()
    }

    /// Direct kernel multiplication: +1/-1 mask weighted by per-polarity area.
    fn direct(patch: &ImagePatch, desc: &FeatureDescriptor) -> f64 {
        let (pos, neg) = desc.regions();
        let mut mask = vec![0i8; patch.width() * patch.height()];
        for (rs, s) in [(&pos, 1i8), (&neg, -1i8)] {
            for r in rs.iter() {
                for y in r.1..r.1 + r.3 {
                    for x in r.0..r.0 + r.2 {
                        mask[y * patch.width() + x] = s;
                    }
                }
            }
        }
        let ap = mask.iter().filter(|&&m| m == 1).count() as f64;
        let an = mask.iter().filter(|&&m| m == -1).count() as f64;
        let mut acc = 0.0;
        for (i, &m) in mask.iter().enumerate() {
            match m {
                1 => acc += patch.pixels()[i] / ap,
                -1 => acc -= patch.pixels()[i] / an,
                _ => {}
            }
        }
        0.5 * acc
    }

    #[test]
    fn uniform_patch_has_zero_response_for_every_kernel() {
        let patch = ImagePatch::filled(12, 12, 0.7).unwrap();
        let index = build_index(12, 12, &HaarKernelType::ALL, 1, 1).unwrap();
        let v = extract_vector(&patch, &index).unwrap();
        assert!(v.values.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn zero_patch_gives_zero_vector_of_index_length() {
        let patch = ImagePatch::filled(8, 8, 0.0).unwrap();
        let index = build_index(8, 8, &HaarKernelType::ALL, 1, 1).unwrap();
        let v = extract_vector(&patch, &index).unwrap();
        assert_eq!(v.len(), index.len());
        assert!(v.values.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn step_edge_peaks_when_kernel_is_centered_on_edge() {
        let (w, h) = (16, 8);
        let px = (0..w * h)
            .map(|i| if i % w >= w / 2 { 1.0 } else { 0.0 })
            .collect();
        let patch = ImagePatch::new(w, h, px).unwrap();
        let ii = integral_image(&patch);
        let (kw, kh) = (4u16, 4u16);
        let mut best = (f64::MIN, 0u16);
        for cx in 0..w as u16 {
            let desc = FeatureDescriptor {
                kernel: HaarKernelType::EdgeVertical,
                center_x: cx,
                center_y: 4,
                kernel_w: kw,
                kernel_h: kh,
            };
            if let Ok(v) = extract_feature(&ii, &desc) {
                if v > best.0 {
                    best = (v, cx);
                }
            }
        }
        // kernel split line sits at cx, the edge is at x = 8
        assert_eq!(best.1, 8);
        assert!((best.0 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn integral_route_matches_direct_multiplication() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let index = build_index(10, 9, &HaarKernelType::ALL, 1, 1).unwrap();
        for _ in 0..50 {
            let patch = random_patch(&mut rng, 10, 9);
            let ii = integral_image(&patch);
            let desc = index.descriptors()[rng.gen_range(0..index.len())];
            let fast = extract_feature(&ii, &desc).unwrap();
            assert!((fast - direct(&patch, &desc)).abs() < 1e-9);
        }
    }

    #[test]
    fn vector_matches_per_descriptor_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let patch = random_patch(&mut rng, 9, 9);
        let index = build_index(9, 9, &HaarKernelType::ALL, 1, 1).unwrap();
        let v = extract_vector(&patch, &index).unwrap();
        let ii = integral_image(&patch);
        for (i, d) in index.descriptors().iter().enumerate() {
            assert!((v.values[i] - extract_feature(&ii, d).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn out_of_bounds_and_dimension_mismatch_are_errors() {
        let patch = ImagePatch::filled(6, 6, 0.5).unwrap();
        let ii = integral_image(&patch);
        let desc = FeatureDescriptor {
            kernel: HaarKernelType::EdgeVertical,
            center_x: 5,
            center_y: 3,
            kernel_w: 4,
            kernel_h: 2,
        };
        assert!(matches!(
            extract_feature(&ii, &desc),
            Err(FeatureError::OutOfBounds(..))
        ));
        let index = build_index(8, 8, &HaarKernelType::ALL, 1, 1).unwrap();
        assert!(matches!(
            extract_vector(&patch, &index),
            Err(FeatureError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn constant_offset_does_not_change_features() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let index = build_index(8, 8, &HaarKernelType::ALL, 1, 2).unwrap();
        let base: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..=0.5)).collect();
        let shifted: Vec<f64> = base.iter().map(|v| v + 0.4).collect();
        let a = extract_vector(&ImagePatch::new(8, 8, base).unwrap(), &index).unwrap();
        let b = extract_vector(&ImagePatch::new(8, 8, shifted).unwrap(), &index).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn canonicalize_is_identity_resample_at_native_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let patch = random_patch(&mut rng, 6, 6);
        let resampled = resample_bilinear(&patch, 6, 6);
        for (a, b) in resampled.iter().zip(patch.pixels()) {
            assert!((a - b).abs() < 1e-12);
        }
        let norm = canonicalize(&patch, 12, 12);
        let mean = norm.iter().sum::<f64>() / norm.len() as f64;
        let var = norm.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / norm.len() as f64;
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-9);
        assert!(canonicalize(&ImagePatch::filled(5, 5, 0.3).unwrap(), 8, 8)
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sparse_extraction_matches_full_vector() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let patch = random_patch(&mut rng, 13, 11);
        let index = build_index(8, 8, &HaarKernelType::ALL, 2, 2).unwrap();
        let ex = FeatureExtractor::new(&index);
        let full = ex.vector(&patch);
        let dims = [0, 7, index.len() - 1];
        let sparse = ex.sparse(&patch, &dims);
        for (k, &d) in dims.iter().enumerate() {
            assert_eq!(sparse[k], full.values[d]);
        }
    }
}
