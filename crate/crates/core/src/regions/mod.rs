//! Region analysis over an [`IndexMap`]: connected components, small-region
//! merging, crack-following boundaries and number placement.

mod anchor;
mod contour;
mod label;
mod merge;

use std::collections::BTreeSet;

pub use anchor::{chamfer_pole, compute_label_anchor, LabelAnchor, MIN_LABEL_CLEARANCE};
pub use contour::{simplify_contour, trace_boundaries, Contour, ContourKind, Point};
pub use label::{label_regions, Connectivity};
pub use merge::merge_small_regions;

use crate::error::{Error, Result};
use crate::quant::IndexMap;

/// Inclusive pixel bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BBox {
    pub min_x: u32,
    pub min_y: u32,
    pub max_x: u32,
    pub max_y: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Region {
    pub id: u32,
    pub palette_index: u32,
    pub area: u32,
    pub bbox: BBox,
    /// Regions sharing at least one pixel edge with this one.
    pub neighbors: BTreeSet<u32>,
}

/// A partition of the canvas into regions with dense ids `0..regions.len()`,
/// numbered in raster order of each region's first pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegionMap {
    pub width: u32,
    pub height: u32,
    pub region_of: Vec<u32>,
    pub regions: Vec<Region>,
}

impl RegionMap {
    /// Builds the map from arbitrary per-pixel labels. Pixels sharing a label
    /// form one region; `palette_of` gives each label's palette ordinal.
    pub(crate) fn from_labels(width: u32, height: u32, labels: &[u32], palette_of: impl Fn(u32) -> u32) -> Self {
        let w = width as usize;
        let mut dense: std::collections::HashMap<u32, u32> = std::collections::HashMap::new();
        let mut regions: Vec<Region> = Vec::new();
        let mut region_of = Vec::with_capacity(labels.len());
        for (i, &label) in labels.iter().enumerate() {
            let (x, y) = ((i % w) as u32, (i / w) as u32);
            let id = *dense.entry(label).or_insert_with(|| {
                regions.push(Region {
                    id: regions.len() as u32,
                    palette_index: palette_of(label),
                    area: 0,
                    bbox: BBox {
                        min_x: x,
                        min_y: y,
                        max_x: x,
                        max_y: y,
                    },
                    neighbors: BTreeSet::new(),
                });
                regions.len() as u32 - 1
            });
            let r = &mut regions[id as usize];
            r.area += 1;
            r.bbox.min_x = r.bbox.min_x.min(x);
            r.bbox.max_x = r.bbox.max_x.max(x);
            r.bbox.max_y = y;
            region_of.push(id);
        }
        for i in 0..region_of.len() {
            let a = region_of[i];
            let x = i % w;
            if x + 1 < w && region_of[i + 1] != a {
                let b = region_of[i + 1];
                regions[a as usize].neighbors.insert(b);
                regions[b as usize].neighbors.insert(a);
            }
            if i + w < region_of.len() && region_of[i + w] != a {
                let b = region_of[i + w];
                regions[a as usize].neighbors.insert(b);
                regions[b as usize].neighbors.insert(a);
            }
        }
        RegionMap {
            width,
            height,
            region_of,
            regions,
        }
    }

    pub fn region(&self, id: u32) -> Result<&Region> {
        self.regions
            .get(id as usize)
            .ok_or_else(|| Error::invalid(format!("unknown region id {id}")))
    }

    pub fn get(&self, x: u32, y: u32) -> u32 {
        self.region_of[y as usize * self.width as usize + x as usize]
    }

    /// Per-pixel palette ordinals implied by the regions.
    pub fn index_map(&self) -> IndexMap {
        let indices = self
            .region_of
            .iter()
            .map(|&r| self.regions[r as usize].palette_index)
            .collect();
        IndexMap::new(self.width, self.height, indices).expect("region map dimensions are valid")
    }

    /// Checks the partition invariants: dense ids, consistent areas, bounding
    /// boxes, palette homogeneity, symmetric neighbor sets and 4-connectedness.
    pub fn validate(&self) -> Result<()> {
        let n = self.regions.len();
        if self.region_of.len() != self.width as usize * self.height as usize {
            return Err(Error::invalid("region buffer does not match dimensions"));
        }
        let mut area = vec![0u32; n];
        for &r in &self.region_of {
            if r as usize >= n {
                return Err(Error::invalid(format!("pixel references unknown region {r}")));
            }
            area[r as usize] += 1;
        }
        let fresh = RegionMap::from_labels(self.width, self.height, &self.region_of, |r| {
            self.regions[r as usize].palette_index
        });
        for (i, region) in self.regions.iter().enumerate() {
            if region.id as usize != i {
                return Err(Error::invalid(format!("region at position {i} has id {}", region.id)));
            }
            if region.area == 0 || region.area != area[i] {
                return Err(Error::invalid(format!("region {i} area mismatch")));
            }
        }
        if fresh.regions.len() != n {
            return Err(Error::invalid("ids are not dense"));
        }
        for (a, b) in self.regions.iter().zip(&fresh.regions) {
            if a.id != b.id || a.bbox != b.bbox || a.neighbors != b.neighbors {
                return Err(Error::invalid(format!("region {} statistics are stale", a.id)));
            }
        }
        let components = label::label_raw(self.width, self.height, &self.region_of, Connectivity::Four);
        if components.regions.len() != n {
            return Err(Error::invalid("a region is not 4-connected"));
        }
        Ok(())
    }
}
