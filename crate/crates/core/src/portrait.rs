//! Grayscale portraits of matrices as binary PGM (`P5`) images.

use crate::qfield::QuadExt;

/// Pixel size of a matrix cell; levels map affinely from `[-1, 1]` onto
/// `[0, 255]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PortraitSpec {
    pub cell_size: usize,
}

impl Default for PortraitSpec {
    fn default() -> Self {
        PortraitSpec { cell_size: 8 }
    }
}

/// A cell value, exact when the source matrix carries exact levels.
#[derive(Debug, Clone, PartialEq)]
pub enum CellValue {
    Exact(QuadExt),
    Float(f64),
}

impl PortraitSpec {
    /// `round(255 (x + 1) / 2)`, ties to even, clamped to `[0, 255]`.
    /// Exact values are rounded exactly.
    pub fn value_map(&self, value: &CellValue) -> u8 {
        let gray = match value {
            CellValue::Exact(x) => {
                let scaled = x
                    .try_add(&QuadExt::one())
                    .expect("one is rational")
                    .scale(&num_rational::BigRational::new(255.into(), 2.into()));
                let rounded = scaled.round_half_even();
                num_traits::ToPrimitive::to_i64(&rounded).unwrap_or(if scaled.signum().is_lt() { 0 } else { 255 })
            }
            CellValue::Float(x) => (255.0 * (x + 1.0) / 2.0).round_ties_even() as i64,
        };
        gray.clamp(0, 255) as u8
    }

    /// `P5` graymap of side `n * cell_size`.
    pub fn render(&self, cells: &[Vec<CellValue>]) -> Vec<u8> {
        let n = cells.len();
        let side = n * self.cell_size;
        let grays: Vec<Vec<u8>> = cells.iter().map(|r| r.iter().map(|c| self.value_map(c)).collect()).collect();
        let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
        out.reserve(side * side);
        for row in &grays {
            for _ in 0..self.cell_size {
                for &g in row {
                    out.extend(std::iter::repeat_n(g, self.cell_size));
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CellValue::Float;

    fn header_len(bytes: &[u8]) -> usize {
        // three newline-terminated header lines
        bytes.iter().enumerate().filter(|(_, &b)| b == b'\n').nth(2).unwrap().0 + 1
    }

    #[test]
    fn value_map_endpoints() {
        let spec = PortraitSpec::default();
        assert_eq!(spec.value_map(&Float(-1.0)), 0);
        assert_eq!(spec.value_map(&Float(1.0)), 255);
        assert_eq!(spec.value_map(&Float(0.0)), 128);
        assert_eq!(spec.value_map(&CellValue::Exact(QuadExt::from_fraction(-2, 3))), 42);
        assert_eq!(spec.value_map(&CellValue::Exact(QuadExt::zero())), 128);
        assert_eq!(spec.value_map(&Float(3.0)), 255);
        let mut last = 0;
        for i in -100..=100 {
            let g = spec.value_map(&Float(i as f64 / 100.0));
            assert!(g >= last);
            last = g;
        }
    }

    #[test]
    fn order_5_portrait() {
        let y = QuadExt::from_fraction(-2, 3);
        let cells: Vec<Vec<CellValue>> = (0..5)
            .map(|i| {
                (0..5)
                    .map(|j| CellValue::Exact(if i == j { QuadExt::one() } else { y.clone() }))
                    .collect()
            })
            .collect();
        let bytes = PortraitSpec { cell_size: 1 }.render(&cells);
        assert!(bytes.starts_with(b"P5\n5 5\n255\n"));
        let pixels = &bytes[header_len(&bytes)..];
        assert_eq!(pixels.len(), 25);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(pixels[i * 5 + j], if i == j { 255 } else { 42 });
            }
        }
    }

    #[test]
    fn dimensions_scale_with_cell_size() {
        let cells = vec![vec![Float(0.0); 3]; 3];
        let bytes = PortraitSpec { cell_size: 4 }.render(&cells);
        assert!(bytes.starts_with(b"P5\n12 12\n255\n"));
        assert_eq!(bytes.len() - header_len(&bytes), 144);
        assert_eq!(bytes, PortraitSpec { cell_size: 4 }.render(&cells));
    }
}
