use crate::dataset::ImagePatch;

/// Summed-area table with a zero first row and column.
///
/// `table[y][x]` holds the sum of all pixels strictly above and to the left of
/// `(x, y)`, so the table is `(width + 1) x (height + 1)` and the bottom-right
/// entry is the sum of the whole image.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    table: Vec<f64>,
}

impl IntegralImage {
    pub fn from_values(width: usize, height: usize, values: &[f64]) -> Self {
        assert_eq!(values.len(), width * height, "value count must match dimensions");
        let stride = width + 1;
        let mut table = vec![0.0; stride * (height + 1)];
        for y in 0..height {
            let mut row_sum = 0.0;
            for x in 0..width {
                row_sum += values[y * width + x];
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row_sum;
            }
        }
        Self {
            width,
            height,
            table,
        }
    }

    /// Source image width (the table is one wider).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.table[y * (self.width + 1) + x]
    }

    /// Sum over the `w x h` rectangle whose top-left pixel is `(x, y)`.
    #[inline]
    pub fn rect_sum(&self, x: usize, y: usize, w: usize, h: usize) -> f64 {
        debug_assert!(x + w <= self.width && y + h <= self.height);
        let stride = self.width + 1;
        let (x1, y1) = (x + w, y + h);
        self.table[y1 * stride + x1] - self.table[y * stride + x1] - self.table[y1 * stride + x]
            + self.table[y * stride + x]
    }
}

pub fn integral_image(patch: &ImagePatch) -> IntegralImage {
    IntegralImage::from_values(patch.width(), patch.height(), patch.pixels())
}
