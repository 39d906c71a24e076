use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the detection range used for plotted spectra.
pub const DEFAULT_HALF_WIDTH: u32 = 20;

/// Inclusive range of OAM indices `l_min..=l_max` a detector projects onto.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct OamWindow {
    pub l_min: i32,
    pub l_max: i32,
}

impl OamWindow {
    pub fn new(l_min: i32, l_max: i32) -> Result<Self> {
        if l_min > l_max {
            return Err(Error::Precondition(format!(
                "window lower bound {l_min} exceeds upper bound {l_max}"
            )));
        }
        Ok(OamWindow { l_min, l_max })
    }

    /// `-half_width..=half_width`.
    pub fn symmetric(half_width: u32) -> Self {
        let h = i32::try_from(half_width).expect("half-width fits in i32");
        OamWindow {
            l_min: -h,
            l_max: h,
        }
    }

    pub fn len(&self) -> usize {
        (self.l_max as i64 - self.l_min as i64 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, l: i32) -> bool {
        (self.l_min..=self.l_max).contains(&l)
    }

    /// Position of `l` in the window, if present.
    pub fn index_of(&self, l: i32) -> Option<usize> {
        self.contains(l).then(|| (l as i64 - self.l_min as i64) as usize)
    }

    /// OAM index at position `i`.
    pub fn l_at(&self, i: usize) -> i32 {
        debug_assert!(i < self.len());
        self.l_min + i as i32
    }

    pub fn iter(&self) -> impl Iterator<Item = i32> + Clone {
        self.l_min..=self.l_max
    }
}

impl Default for OamWindow {
    fn default() -> Self {
        OamWindow::symmetric(DEFAULT_HALF_WIDTH)
    }
}
