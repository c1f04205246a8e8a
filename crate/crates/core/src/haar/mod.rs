//! Haar-like feature space: kernels, the enumerated feature index, integral
//! images and feature extraction.

mod extract;
mod index;
mod integral;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use extract::{
    canonicalize, extract_feature, extract_vector, FeatureExtractor, FeatureVector,
};
pub use index::{build_index, feature_count, FeatureIndex, IndexVersion};
pub use integral::{integral_image, IntegralImage};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("feature count overflows for {nx}x{ny} patch with {nk} kernels")]
    Overflow { nx: u64, ny: u64, nk: u64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("descriptor {0:?} does not fit a {1}x{2} image")]
    OutOfBounds(FeatureDescriptor, usize, usize),
    #[error("patch is {got_w}x{got_h}, index expects {want_w}x{want_h}")]
    DimensionMismatch {
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },
    #[error("malformed index sidecar: {0}")]
    Sidecar(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// The eight kernel shapes. Each one has zero response on a uniform patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HaarKernelType {
    /// Top half positive, bottom half negative.
    EdgeHorizontal,
    /// Left half negative, right half positive.
    EdgeVertical,
    /// Three stacked stripes, middle positive.
    LineHorizontal,
    /// Three side-by-side stripes, middle positive.
    LineVertical,
    /// 3x3 grid, center cell positive, ring negative.
    CenterSurround,
    /// 2x2 grid, main-diagonal cells positive.
    Checkerboard,
    /// 2x2 grid, top-right positive, bottom-left negative.
    DiagonalEdgeMain,
    /// 2x2 grid, top-left positive, bottom-right negative.
    DiagonalEdgeAnti,
}

impl HaarKernelType {
    pub const ALL: [HaarKernelType; 8] = [
        HaarKernelType::EdgeHorizontal,
        HaarKernelType::EdgeVertical,
        HaarKernelType::LineHorizontal,
        HaarKernelType::LineVertical,
        HaarKernelType::CenterSurround,
        HaarKernelType::Checkerboard,
        HaarKernelType::DiagonalEdgeMain,
        HaarKernelType::DiagonalEdgeAnti,
    ];

    /// Width and height must be multiples of these so every cell is at least 1 px.
    pub fn unit(self) -> (usize, usize) {
        match self {
            HaarKernelType::EdgeHorizontal => (1, 2),
            HaarKernelType::EdgeVertical => (2, 1),
            HaarKernelType::LineHorizontal => (1, 3),
            HaarKernelType::LineVertical => (3, 1),
            HaarKernelType::CenterSurround => (3, 3),
            HaarKernelType::Checkerboard
            | HaarKernelType::DiagonalEdgeMain
            | HaarKernelType::DiagonalEdgeAnti => (2, 2),
        }
    }

    pub fn code(self) -> u8 {
        Self::ALL.iter().position(|&k| k == self).unwrap() as u8
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            HaarKernelType::EdgeHorizontal => "edge-horizontal",
            HaarKernelType::EdgeVertical => "edge-vertical",
            HaarKernelType::LineHorizontal => "line-horizontal",
            HaarKernelType::LineVertical => "line-vertical",
            HaarKernelType::CenterSurround => "center-surround",
            HaarKernelType::Checkerboard => "checkerboard-2x2",
            HaarKernelType::DiagonalEdgeMain => "diagonal-edge-main",
            HaarKernelType::DiagonalEdgeAnti => "diagonal-edge-anti",
        }
    }
}

impl fmt::Display for HaarKernelType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for HaarKernelType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .iter()
            .copied()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown kernel {s:?}"))
    }
}

/// Axis-aligned rectangle `(x, y, w, h)` in pixel units.
pub type Rect = (usize, usize, usize, usize);

/// One kernel instance: type, center pixel and size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureDescriptor {
    pub kernel: HaarKernelType,
    pub center_x: u16,
    pub center_y: u16,
    pub kernel_w: u16,
    pub kernel_h: u16,
}

impl FeatureDescriptor {
    /// Top-left corner; the kernel covers `[cx - w/2, cx - w/2 + w)`.
    pub fn origin(&self) -> (i64, i64) {
        (
            i64::from(self.center_x) - i64::from(self.kernel_w / 2),
            i64::from(self.center_y) - i64::from(self.kernel_h / 2),
        )
    }

    pub fn has_valid_shape(&self) -> bool {
        let (uw, uh) = self.kernel.unit();
        let (w, h) = (self.kernel_w as usize, self.kernel_h as usize);
        w >= uw && h >= uh && w % uw == 0 && h % uh == 0
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        let (x0, y0) = self.origin();
        self.has_valid_shape()
            && x0 >= 0
            && y0 >= 0
            && x0 as usize + self.kernel_w as usize <= width
            && y0 as usize + self.kernel_h as usize <= height
    }

    /// Positive and negative cells. Only valid when `fits` holds.
    pub fn regions(&self) -> (Vec<Rect>, Vec<Rect>) {
        let (x0, y0) = self.origin();
        let (x, y) = (x0 as usize, y0 as usize);
        let (w, h) = (self.kernel_w as usize, self.kernel_h as usize);
        match self.kernel {
            HaarKernelType::EdgeHorizontal => {
                let hh = h / 2;
                (vec![(x, y, w, hh)], vec![(x, y + hh, w, hh)])
            }
            HaarKernelType::EdgeVertical => {
                let hw = w / 2;
                (vec![(x + hw, y, hw, h)], vec![(x, y, hw, h)])
            }
            HaarKernelType::LineHorizontal => {
                let t = h / 3;
                (
                    vec![(x, y + t, w, t)],
                    vec![(x, y, w, t), (x, y + 2 * t, w, t)],
                )
            }
            HaarKernelType::LineVertical => {
                let t = w / 3;
                (
                    vec![(x + t, y, t, h)],
                    vec![(x, y, t, h), (x + 2 * t, y, t, h)],
                )
            }
            HaarKernelType::CenterSurround => {
                let (tw, th) = (w / 3, h / 3);
                let mut ring = Vec::with_capacity(8);
                for gy in 0..3 {
                    for gx in 0..3 {
                        if gx != 1 || gy != 1 {
                            ring.push((x + gx * tw, y + gy * th, tw, th));
                        }
                    }
                }
                (vec![(x + tw, y + th, tw, th)], ring)
            }
            HaarKernelType::Checkerboard => {
                let (hw, hh) = (w / 2, h / 2);
                (
                    vec![(x, y, hw, hh), (x + hw, y + hh, hw, hh)],
                    vec![(x + hw, y, hw, hh), (x, y + hh, hw, hh)],
                )
            }
            HaarKernelType::DiagonalEdgeMain => {
                let (hw, hh) = (w / 2, h / 2);
                (vec![(x + hw, y, hw, hh)], vec![(x, y + hh, hw, hh)])
            }
            HaarKernelType::DiagonalEdgeAnti => {
                let (hw, hh) = (w / 2, h / 2);
                (vec![(x, y, hw, hh)], vec![(x + hw, y + hh, hw, hh)])
            }
        }
    }
}
