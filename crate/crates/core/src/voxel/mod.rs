//! Dense 3D volumes with physical spacing, voxel distances, and the
//! neighborhood machinery shared by the rest of the pipeline.
//!
//! Data is stored flat with x varying fastest: `(x, y, z)` lives at
//! `x + sx * (y + sy * z)`.

mod components;
pub mod rvol;
mod smooth;

pub use components::{component_border, connected_components, Component, Connectivity};
pub use smooth::{gaussian_kernel, gaussian_smooth, gaussian_smooth_axes};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical length per voxel step along x, y and z.
pub type Spacing = [f64; 3];

/// On-disk sample type of a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
    U32,
    F32,
}

impl Dtype {
    pub fn byte_width(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::U32 | Dtype::F32 => 4,
        }
    }
}

/// A scalar voxel sample type.
pub trait Sample: Copy + Default + PartialEq + Send + Sync + std::fmt::Debug + 'static {
    const DTYPE: Dtype;

    fn to_f64(self) -> f64;

    /// Converts with rounding, saturating at the type's range.
    fn from_f64(v: f64) -> Self;

    fn write_le(self, out: &mut Vec<u8>);

    fn read_le(bytes: &[u8]) -> Self;
}

macro_rules! int_sample {
    ($t:ty, $dtype:expr) => {
        impl Sample for $t {
            const DTYPE: Dtype = $dtype;

            fn to_f64(self) -> f64 {
                self as f64
            }

            fn from_f64(v: f64) -> Self {
                // `as` saturates and maps NaN to zero.
                v.round() as $t
            }

            fn write_le(self, out: &mut Vec<u8>) {
                out.extend_from_slice(&self.to_le_bytes());
            }

            fn read_le(bytes: &[u8]) -> Self {
                <$t>::from_le_bytes(bytes.try_into().expect("sample width"))
            }
        }
    };
}

int_sample!(u8, Dtype::U8);
int_sample!(u16, Dtype::U16);
int_sample!(u32, Dtype::U32);

impl Sample for f32 {
    const DTYPE: Dtype = Dtype::F32;

    fn to_f64(self) -> f64 {
        self as f64
    }

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn write_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn read_le(bytes: &[u8]) -> Self {
        f32::from_le_bytes(bytes.try_into().expect("sample width"))
    }
}

/// Integer voxel position inside a volume.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VoxelCoord {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl VoxelCoord {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        VoxelCoord { x, y, z }
    }

    pub fn as_array(self) -> [usize; 3] {
        [self.x, self.y, self.z]
    }

    /// Scan-order key: z, then y, then x. Matches the flat data layout.
    pub fn scan_key(self) -> (usize, usize, usize) {
        (self.z, self.y, self.x)
    }
}

/// A dense 3D grid of samples with physical voxel spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume<T> {
    size: [usize; 3],
    spacing: Spacing,
    data: Vec<T>,
}

fn check_geometry(size: [usize; 3], spacing: Spacing) -> Result<()> {
    if size.iter().any(|&s| s == 0) {
        return Err(Error::invalid("size", format!("all extents must be positive, got {size:?}")));
    }
    if spacing.iter().any(|&d| !(d.is_finite() && d > 0.0)) {
        return Err(Error::invalid(
            "spacing",
            format!("all components must be finite and positive, got {spacing:?}"),
        ));
    }
    Ok(())
}

impl<T: Sample> Volume<T> {
    pub fn new(size: [usize; 3], spacing: Spacing, data: Vec<T>) -> Result<Self> {
        check_geometry(size, spacing)?;
        let expected = size[0] * size[1] * size[2];
        if data.len() != expected {
            return Err(Error::invalid(
                "data",
                format!("length {} does not match size {:?} ({expected} voxels)", data.len(), size),
            ));
        }
        Ok(Volume { size, spacing, data })
    }

    pub fn filled(size: [usize; 3], spacing: Spacing, value: T) -> Result<Self> {
        check_geometry(size, spacing)?;
        Ok(Volume {
            size,
            spacing,
            data: vec![value; size[0] * size[1] * size[2]],
        })
    }

    /// Empty volume with the same geometry as `self`.
    pub fn like<U: Sample>(&self, value: U) -> Volume<U> {
        Volume {
            size: self.size,
            spacing: self.spacing,
            data: vec![value; self.data.len()],
        }
    }

    pub fn map<U: Sample>(&self, f: impl Fn(T) -> U) -> Volume<U> {
        Volume {
            size: self.size,
            spacing: self.spacing,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn to_f32(&self) -> Volume<f32> {
        self.map(|v| v.to_f64() as f32)
    }

    pub fn size(&self) -> [usize; 3] {
        self.size
    }

    pub fn spacing(&self) -> Spacing {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn offset(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.size[0] * (y + self.size[1] * z)
    }

    #[inline]
    pub fn coord(&self, offset: usize) -> VoxelCoord {
        let [sx, sy, _] = self.size;
        VoxelCoord::new(offset % sx, (offset / sx) % sy, offset / (sx * sy))
    }

    #[inline]
    pub fn get(&self, c: VoxelCoord) -> T {
        self.data[self.offset(c.x, c.y, c.z)]
    }

    #[inline]
    pub fn set(&mut self, c: VoxelCoord, value: T) {
        let o = self.offset(c.x, c.y, c.z);
        self.data[o] = value;
    }

    pub fn contains(&self, x: i64, y: i64, z: i64) -> bool {
        x >= 0
            && y >= 0
            && z >= 0
            && (x as usize) < self.size[0]
            && (y as usize) < self.size[1]
            && (z as usize) < self.size[2]
    }

    /// Physical volume of one voxel.
    pub fn voxel_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Copies the slices `z0..z1` into a new volume.
    pub fn slab(&self, z0: usize, z1: usize) -> Result<Volume<T>> {
        if z0 >= z1 || z1 > self.size[2] {
            return Err(Error::invalid("slab", format!("bad z-range {z0}..{z1}")));
        }
        let plane = self.size[0] * self.size[1];
        Ok(Volume {
            size: [self.size[0], self.size[1], z1 - z0],
            spacing: self.spacing,
            data: self.data[z0 * plane..z1 * plane].to_vec(),
        })
    }
}

/// Euclidean distance between two voxel centers in physical units.
pub fn physical_distance(p: VoxelCoord, q: VoxelCoord, spacing: Spacing) -> f64 {
    p.as_array()
        .iter()
        .zip(q.as_array())
        .zip(spacing)
        .map(|((&a, b), d)| {
            let t = (a as f64 - b as f64) * d;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Pixel-space distance flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelMetric {
    /// City-block distance.
    D6,
    /// Chessboard distance.
    D26,
}

pub fn pixel_distance(p: VoxelCoord, q: VoxelCoord, kind: PixelMetric) -> usize {
    let deltas = p.as_array().into_iter().zip(q.as_array()).map(|(a, b)| a.abs_diff(b));
    match kind {
        PixelMetric::D6 => deltas.sum(),
        PixelMetric::D26 => deltas.max().unwrap_or(0),
    }
}

/// The six face-neighbor offsets.
pub const NEIGHBORS_6: [[i64; 3]; 6] = [
    [-1, 0, 0],
    [1, 0, 0],
    [0, -1, 0],
    [0, 1, 0],
    [0, 0, -1],
    [0, 0, 1],
];

/// All 26 offsets in the unit cube around a voxel, in scan order.
pub fn neighbors_26() -> impl Iterator<Item = [i64; 3]> {
    (-1..=1).flat_map(|dz| {
        (-1..=1).flat_map(move |dy| {
            (-1..=1).filter_map(move |dx| {
                if dx == 0 && dy == 0 && dz == 0 {
                    None
                } else {
                    Some([dx, dy, dz])
                }
            })
        })
    })
}

/// Bounding-box lookup table over a voxel set, padded by one voxel on every
/// side so that 26-neighbor probes never leave the table.
///
/// Each cell holds `index + 1` of the voxel in the set, or 0.
#[derive(Debug, Clone)]
pub(crate) struct LocalIndex {
    origin: [i64; 3],
    dims: [usize; 3],
    cells: Vec<u32>,
}

impl LocalIndex {
    pub(crate) fn new(voxels: &[VoxelCoord]) -> Self {
        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for v in voxels {
            for (axis, c) in v.as_array().into_iter().enumerate() {
                lo[axis] = lo[axis].min(c as i64);
                hi[axis] = hi[axis].max(c as i64);
            }
        }
        if voxels.is_empty() {
            lo = [0; 3];
            hi = [-1; 3];
        }
        let origin = [lo[0] - 1, lo[1] - 1, lo[2] - 1];
        let dims = [
            (hi[0] - lo[0] + 3) as usize,
            (hi[1] - lo[1] + 3) as usize,
            (hi[2] - lo[2] + 3) as usize,
        ];
        let mut index = LocalIndex {
            origin,
            dims,
            cells: vec![0; dims[0] * dims[1] * dims[2]],
        };
        for (i, v) in voxels.iter().enumerate() {
            let cell = index.cell_of(*v);
            index.cells[cell] = i as u32 + 1;
        }
        index
    }

    #[inline]
    pub(crate) fn cell_of(&self, v: VoxelCoord) -> usize {
        let lx = (v.x as i64 - self.origin[0]) as usize;
        let ly = (v.y as i64 - self.origin[1]) as usize;
        let lz = (v.z as i64 - self.origin[2]) as usize;
        lx + self.dims[0] * (ly + self.dims[1] * lz)
    }

    /// Flat cell-offset delta for a neighbor step.
    #[inline]
    pub(crate) fn stride(&self, d: [i64; 3]) -> isize {
        (d[0] + self.dims[0] as i64 * (d[1] + self.dims[1] as i64 * d[2])) as isize
    }

    /// Index of the set member at `cell`, if any.
    #[inline]
    pub(crate) fn at(&self, cell: usize) -> Option<usize> {
        match self.cells[cell] {
            0 => None,
            n => Some(n as usize - 1),
        }
    }
}
