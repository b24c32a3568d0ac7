//! Per-pixel barycentric records and instance segmentation maps.

use crate::mesh::{BaryCoord, SceneMesh};

/// Face index stored for pixels that carry no surface record.
pub const NO_FACE: u32 = u32::MAX;

/// Full scale of the 16-bit fixed-point barycentric weights.
pub const ALPHA_SCALE: f64 = 65535.0;

/// Quantization tolerance on each reconstructed weight.
pub const ALPHA_TOL: f64 = 1.0 / 32768.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum PixelFlag {
    Invalid = 0,
    Static = 1,
    Dynamic = 2,
}

impl PixelFlag {
    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Self::Invalid),
            1 => Some(Self::Static),
            2 => Some(Self::Dynamic),
            _ => None,
        }
    }
}

/// `(f, α₁, α₂)` with the third weight implied, plus the pixel class.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PixelRecord {
    pub face: u32,
    pub alpha: [u16; 2],
    pub flag: PixelFlag,
}

impl PixelRecord {
    pub const INVALID: Self = Self {
        face: NO_FACE,
        alpha: [0, 0],
        flag: PixelFlag::Invalid,
    };

    pub const STATIC: Self = Self {
        face: NO_FACE,
        alpha: [0, 0],
        flag: PixelFlag::Static,
    };

    /// Quantizes the first two weights; the third absorbs the remainder and
    /// never goes negative.
    pub fn dynamic(bc: &BaryCoord) -> Self {
        let q = |a: f64| (a.clamp(0.0, 1.0) * ALPHA_SCALE).round() as u32;
        let a1 = q(bc.alpha[0]);
        let mut a2 = q(bc.alpha[1]);
        if a1 + a2 > ALPHA_SCALE as u32 {
            a2 = ALPHA_SCALE as u32 - a1;
        }
        Self {
            face: bc.face,
            alpha: [a1 as u16, a2 as u16],
            flag: PixelFlag::Dynamic,
        }
    }

    /// Dequantized barycentric coordinate of a dynamic record.
    pub fn bary(&self) -> Option<BaryCoord> {
        if self.flag != PixelFlag::Dynamic {
            return None;
        }
        let a1 = self.alpha[0] as f64 / ALPHA_SCALE;
        let a2 = self.alpha[1] as f64 / ALPHA_SCALE;
        let a3 = (ALPHA_SCALE as u32 - self.alpha[0] as u32 - self.alpha[1] as u32) as f64
            / ALPHA_SCALE;
        Some(BaryCoord {
            face: self.face,
            alpha: [a1, a2, a3],
        })
    }
}

/// Compact DPM encoding of one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BaryMap {
    pub width: u32,
    pub height: u32,
    pub records: Vec<PixelRecord>,
}

impl BaryMap {
    pub fn invalid(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            records: vec![PixelRecord::INVALID; width as usize * height as usize],
        }
    }

    pub fn get(&self, u: u32, v: u32) -> PixelRecord {
        self.records[v as usize * self.width as usize + u as usize]
    }

    pub fn count(&self, flag: PixelFlag) -> usize {
        self.records.iter().filter(|r| r.flag == flag).count()
    }

    /// Checks every dynamic record against the union face table and the
    /// implied third weight.
    pub fn validate(&self, scene: &SceneMesh) -> Result<(), String> {
        for (i, r) in self.records.iter().enumerate() {
            match r.flag {
                PixelFlag::Dynamic => {
                    if r.face as usize >= scene.face_count() {
                        return Err(format!("pixel {i}: face {} out of range", r.face));
                    }
                    if r.alpha[0] as u32 + r.alpha[1] as u32 > ALPHA_SCALE as u32 {
                        return Err(format!("pixel {i}: weights exceed one"));
                    }
                }
                PixelFlag::Static | PixelFlag::Invalid => {
                    if r.face != NO_FACE {
                        return Err(format!("pixel {i}: non-dynamic pixel carries a face"));
                    }
                }
            }
        }
        Ok(())
    }
}

/// Instance id per pixel; 0 is background and static environment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SegMap {
    pub width: u32,
    pub height: u32,
    pub ids: Vec<u32>,
}

impl SegMap {
    pub fn background(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            ids: vec![0; width as usize * height as usize],
        }
    }

    pub fn get(&self, u: u32, v: u32) -> u32 {
        self.ids[v as usize * self.width as usize + u as usize]
    }

    /// Boolean mask of the pixels labelled `id`.
    pub fn mask(&self, id: u32) -> Vec<bool> {
        self.ids.iter().map(|&x| x == id).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn quantized_weights_stay_in_simplex(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            let bc = BaryCoord { face: 3, alpha: [a, b, 1.0 - a - b] };
            let back = PixelRecord::dynamic(&bc).bary().unwrap();
            prop_assert!(back.alpha.iter().all(|x| *x >= 0.0));
            prop_assert!((back.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            for k in 0..3 {
                prop_assert!((back.alpha[k] - bc.alpha[k]).abs() <= ALPHA_TOL);
            }
        }
    }

    #[test]
    fn corners_are_exact() {
        for alpha in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]] {
            let r = PixelRecord::dynamic(&BaryCoord { face: 0, alpha });
            assert_eq!(r.bary().unwrap().alpha, alpha);
        }
        assert_eq!(PixelRecord::STATIC.bary(), None);
    }
}
