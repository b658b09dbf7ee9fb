//! Fixed-size block partitioning and the inverse stitching step.

use crate::error::{Error, Result};
use crate::image::{BinaryMap, GrayImage, Label};

/// Default block side used by the CNN.
pub const BLOCK_SIDE: usize = 224;

/// Layout of a partitioned image.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TilingDescriptor {
    pub width: usize,
    pub height: usize,
    pub side: usize,
    pub cols: usize,
    pub rows: usize,
}

impl TilingDescriptor {
    pub fn new(width: usize, height: usize, side: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidDimensions { width, height });
        }
        if side == 0 {
            return Err(Error::InvalidParams("block side must be positive".into()));
        }
        Ok(Self {
            width,
            height,
            side,
            cols: width.div_ceil(side),
            rows: height.div_ceil(side),
        })
    }

    pub fn block_count(&self) -> usize {
        self.cols * self.rows
    }

    pub fn padded_width(&self) -> usize {
        self.cols * self.side
    }

    pub fn padded_height(&self) -> usize {
        self.rows * self.side
    }
}

/// Symmetric reflection (`abc|cba|abc...`) of an out-of-range index.
#[inline]
fn reflect(i: usize, n: usize) -> usize {
    let m = i % (2 * n);
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

fn partition_grid<T: Copy>(
    src: &[T],
    desc: &TilingDescriptor,
) -> Vec<Vec<T>> {
    let side = desc.side;
    let mut blocks = Vec::with_capacity(desc.block_count());
    for by in 0..desc.rows {
        for bx in 0..desc.cols {
            let mut block = Vec::with_capacity(side * side);
            for y in 0..side {
                let sy = reflect(by * side + y, desc.height);
                let row = &src[sy * desc.width..(sy + 1) * desc.width];
                for x in 0..side {
                    block.push(row[reflect(bx * side + x, desc.width)]);
                }
            }
            blocks.push(block);
        }
    }
    blocks
}

/// Pads by reflection to whole blocks and cuts into row-major blocks.
pub fn partition_blocks(img: &GrayImage, side: usize) -> Result<(Vec<GrayImage>, TilingDescriptor)> {
    let desc = TilingDescriptor::new(img.width(), img.height(), side)?;
    let blocks = partition_grid(img.as_slice(), &desc)
        .into_iter()
        .map(|data| GrayImage::from_vec(side, side, data))
        .collect::<Result<Vec<_>>>()?;
    Ok((blocks, desc))
}

/// Label-map counterpart of [`partition_blocks`], used for training targets.
pub fn partition_labels(map: &BinaryMap, side: usize) -> Result<(Vec<BinaryMap>, TilingDescriptor)> {
    let desc = TilingDescriptor::new(map.width(), map.height(), side)?;
    let blocks = partition_grid(map.labels(), &desc)
        .into_iter()
        .map(|labels| BinaryMap::from_labels(side, side, labels))
        .collect::<Result<Vec<_>>>()?;
    Ok((blocks, desc))
}

/// Reassembles row-major blocks and crops to the original size.
pub fn stitch_blocks(blocks: &[BinaryMap], desc: &TilingDescriptor) -> Result<BinaryMap> {
    if blocks.len() != desc.block_count() {
        return Err(Error::BlockCountMismatch {
            expected: desc.block_count(),
            found: blocks.len(),
        });
    }
    let side = desc.side;
    for b in blocks {
        if b.dimensions() != (side, side) {
            return Err(Error::mismatch(b.dimensions(), (side, side)));
        }
    }
    let mut labels = vec![Label::Background; desc.width * desc.height];
    for y in 0..desc.height {
        let (by, oy) = (y / side, y % side);
        for x in 0..desc.width {
            let (bx, ox) = (x / side, x % side);
            labels[y * desc.width + x] = blocks[by * desc.cols + bx].get(ox, oy);
        }
    }
    BinaryMap::from_labels(desc.width, desc.height, labels)
}
