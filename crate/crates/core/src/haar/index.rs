use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use sha2::{Digest, Sha256};

use super::{FeatureDescriptor, FeatureError, HaarKernelType, IntegralImage};

/// Idealized size of the Haar feature space, `nx^2 * ny^2 * nk`: every
/// pixel as a center times every area from 1 to `nx * ny`, per kernel, with
/// boundary clipping ignored.
pub fn feature_count(nx: u64, ny: u64, nk: u64) -> Result<u64, FeatureError> {
    if nx == 0 || ny == 0 || nk == 0 {
        return Err(FeatureError::InvalidArgument(format!(
            "nx, ny, nk must be at least 1, got ({nx}, {ny}, {nk})"
        )));
    }
    let overflow = || FeatureError::Overflow { nx, ny, nk };
    let translations = nx.checked_mul(ny).ok_or_else(overflow)?;
    let scales = translations;
    translations
        .checked_mul(scales)
        .and_then(|v| v.checked_mul(nk))
        .ok_or_else(overflow)
}

/// Short content digest identifying a feature index layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexVersion(pub u64);

impl fmt::Display for IndexVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl std::str::FromStr for IndexVersion {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16)
            .map(IndexVersion)
            .map_err(|_| format!("invalid index version {s:?}"))
    }
}

/// Weighted rectangle terms whose sum is the normalized feature response.
#[derive(Debug, Clone, Copy)]
pub(crate) struct KernelPlan {
    rects: [(u16, u16, u16, u16); 4],
    weights: [f64; 4],
    len: u8,
}

impl KernelPlan {
    fn new(desc: &FeatureDescriptor) -> Self {
        let (pos, neg) = desc.regions();
        let area = |rs: &[super::Rect]| rs.iter().map(|r| (r.2 * r.3) as f64).sum::<f64>();
        let (wp, wn) = (0.5 / area(&pos), -0.5 / area(&neg));
        let mut terms: Vec<(super::Rect, f64)> = Vec::with_capacity(4);
        if desc.kernel == HaarKernelType::CenterSurround {
            // ring = whole - center
            let (x0, y0) = desc.origin();
            let whole = (
                x0 as usize,
                y0 as usize,
                desc.kernel_w as usize,
                desc.kernel_h as usize,
            );
            terms.push((whole, wn));
            terms.push((pos[0], wp - wn));
        } else {
            terms.extend(pos.iter().map(|&r| (r, wp)));
            terms.extend(neg.iter().map(|&r| (r, wn)));
        }
        let mut plan = KernelPlan {
            rects: [(0, 0, 0, 0); 4],
            weights: [0.0; 4],
            len: terms.len() as u8,
        };
        for (i, (r, w)) in terms.into_iter().enumerate() {
            plan.rects[i] = (r.0 as u16, r.1 as u16, r.2 as u16, r.3 as u16);
            plan.weights[i] = w;
        }
        plan
    }

    #[inline]
    pub(crate) fn eval(&self, ii: &IntegralImage) -> f64 {
        let mut acc = 0.0;
        for i in 0..self.len as usize {
            let (x, y, w, h) = self.rects[i];
            acc += self.weights[i] * ii.rect_sum(x as usize, y as usize, w as usize, h as usize);
        }
        acc
    }
}

/// Deterministically ordered set of feature descriptors over a canonical patch.
///
/// Order is kernel-major, then scale (width, then height), then row-major
/// center position.
#[derive(Debug, Clone)]
pub struct FeatureIndex {
    patch_w: usize,
    patch_h: usize,
    kernels: Vec<HaarKernelType>,
    translation_stride: usize,
    scale_stride: usize,
    descriptors: Vec<FeatureDescriptor>,
    plans: Vec<KernelPlan>,
    version: IndexVersion,
}

impl PartialEq for FeatureIndex {
    fn eq(&self, other: &Self) -> bool {
        self.patch_w == other.patch_w
            && self.patch_h == other.patch_h
            && self.kernels == other.kernels
            && self.translation_stride == other.translation_stride
            && self.scale_stride == other.scale_stride
            && self.descriptors == other.descriptors
    }
}

fn strided_sizes(limit: usize, unit: usize, stride: usize) -> impl Iterator<Item = usize> {
    (1..=limit / unit).map(move |k| k * unit).step_by(stride)
}

/// Enumerates every in-bounds kernel placement. Descriptors whose rectangle
/// would cross the patch boundary are dropped, so the count never exceeds
/// `feature_count(patch_w, patch_h, kernels.len())`.
pub fn build_index(
    patch_w: usize,
    patch_h: usize,
    kernels: &[HaarKernelType],
    translation_stride: usize,
    scale_stride: usize,
) -> Result<FeatureIndex, FeatureError> {
    if patch_w == 0 || patch_h == 0 {
        return Err(FeatureError::InvalidArgument(format!(
            "patch dimensions must be positive, got {patch_w}x{patch_h}"
        )));
    }
    if patch_w > u16::MAX as usize || patch_h > u16::MAX as usize {
        return Err(FeatureError::InvalidArgument(format!(
            "patch {patch_w}x{patch_h} is too large"
        )));
    }
    if translation_stride == 0 || scale_stride == 0 {
        return Err(FeatureError::InvalidArgument(
            "strides must be at least 1".to_string(),
        ));
    }
    if kernels.is_empty() {
        return Err(FeatureError::InvalidArgument(
            "kernel list is empty".to_string(),
        ));
    }
    let mut descriptors = Vec::new();
    for &kernel in kernels {
        let (uw, uh) = kernel.unit();
        for kw in strided_sizes(patch_w, uw, scale_stride) {
            for kh in strided_sizes(patch_h, uh, scale_stride) {
                for cy in (0..patch_h).step_by(translation_stride) {
                    for cx in (0..patch_w).step_by(translation_stride) {
                        let desc = FeatureDescriptor {
                            kernel,
                            center_x: cx as u16,
                            center_y: cy as u16,
                            kernel_w: kw as u16,
                            kernel_h: kh as u16,
                        };
                        if desc.fits(patch_w, patch_h) {
                            descriptors.push(desc);
                        }
                    }
                }
            }
        }
    }
    Ok(FeatureIndex::assemble(
        patch_w,
        patch_h,
        kernels.to_vec(),
        translation_stride,
        scale_stride,
        descriptors,
    ))
}

const MAGIC: &[u8; 8] = b"RBHAARIX";
const FORMAT_VERSION: u16 = 1;

impl FeatureIndex {
    fn assemble(
        patch_w: usize,
        patch_h: usize,
        kernels: Vec<HaarKernelType>,
        translation_stride: usize,
        scale_stride: usize,
        descriptors: Vec<FeatureDescriptor>,
    ) -> Self {
        let plans = descriptors.iter().map(KernelPlan::new).collect();
        let mut index = FeatureIndex {
            patch_w,
            patch_h,
            kernels,
            translation_stride,
            scale_stride,
            descriptors,
            plans,
            version: IndexVersion(0),
        };
        let digest = Sha256::digest(index.to_sidecar_bytes());
        index.version = IndexVersion(u64::from_be_bytes(digest[..8].try_into().unwrap()));
        index
    }

    pub fn patch_w(&self) -> usize {
        self.patch_w
    }

    pub fn patch_h(&self) -> usize {
        self.patch_h
    }

    pub fn kernels(&self) -> &[HaarKernelType] {
        &self.kernels
    }

    pub fn translation_stride(&self) -> usize {
        self.translation_stride
    }

    pub fn scale_stride(&self) -> usize {
        self.scale_stride
    }

    pub fn descriptors(&self) -> &[FeatureDescriptor] {
        &self.descriptors
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn version(&self) -> IndexVersion {
        self.version
    }

    pub(crate) fn plan(&self, i: usize) -> &KernelPlan {
        &self.plans[i]
    }

    /// Versioned little-endian descriptor table.
    pub fn to_sidecar_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + self.descriptors.len() * 9);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        for v in [
            self.patch_w,
            self.patch_h,
            self.translation_stride,
            self.scale_stride,
        ] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        out.push(self.kernels.len() as u8);
        out.extend(self.kernels.iter().map(|k| k.code()));
        out.extend_from_slice(&(self.descriptors.len() as u32).to_le_bytes());
        for d in &self.descriptors {
            out.push(d.kernel.code());
            for v in [d.center_x, d.center_y, d.kernel_w, d.kernel_h] {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_sidecar_bytes(bytes: &[u8]) -> Result<Self, FeatureError> {
        let mut cur = bytes;
        let bad = |m: &str| FeatureError::Sidecar(m.to_string());
        let mut take = |n: usize| -> Result<&[u8], FeatureError> {
            if cur.len() < n {
                return Err(bad("truncated"));
            }
            let (head, tail) = cur.split_at(n);
            cur = tail;
            Ok(head)
        };
        if take(8)? != MAGIC {
            return Err(bad("bad magic"));
        }
        let fmt = u16::from_le_bytes(take(2)?.try_into().unwrap());
        if fmt != FORMAT_VERSION {
            return Err(FeatureError::Sidecar(format!(
                "unsupported format version {fmt}"
            )));
        }
        let mut u32s = [0usize; 4];
        for slot in &mut u32s {
            *slot = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        }
        let n_kernels = take(1)?[0] as usize;
        let kernels = take(n_kernels)?
            .iter()
            .map(|&c| HaarKernelType::from_code(c).ok_or_else(|| bad("unknown kernel code")))
            .collect::<Result<Vec<_>, _>>()?;
        let count = u32::from_le_bytes(take(4)?.try_into().unwrap()) as usize;
        let mut descriptors = Vec::with_capacity(count);
        for _ in 0..count {
            let rec = take(9)?;
            let kernel = HaarKernelType::from_code(rec[0]).ok_or_else(|| bad("unknown kernel code"))?;
            let field = |i: usize| u16::from_le_bytes([rec[1 + 2 * i], rec[2 + 2 * i]]);
            let desc = FeatureDescriptor {
                kernel,
                center_x: field(0),
                center_y: field(1),
                kernel_w: field(2),
                kernel_h: field(3),
            };
            if !desc.fits(u32s[0], u32s[1]) {
                return Err(FeatureError::OutOfBounds(desc, u32s[0], u32s[1]));
            }
            descriptors.push(desc);
        }
        if !cur.is_empty() {
            return Err(bad("trailing bytes"));
        }
        Ok(FeatureIndex::assemble(
            u32s[0], u32s[1], kernels, u32s[2], u32s[3], descriptors,
        ))
    }

    pub fn save(&self, path: &Path) -> Result<(), FeatureError> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_sidecar_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, FeatureError> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_sidecar_bytes(&bytes)
    }
}
