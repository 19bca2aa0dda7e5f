//! Occupancy-grid scene with class-labeled object instances.
//!
//! Cell (ix, iy, iz) spans the half-open box [i*res, (i+1)*res) on each
//! axis. The outermost cell shell is always occupied (closed world), the
//! bottom layer is the floor and the top layer the ceiling. Object AABBs
//! are cell-aligned: they are constructed from integer cell ranges of
//! free cells, marked into the occupancy grid, and the renderer therefore
//! hits exactly the box surface.
//!
//! The serialized form is versioned JSON with run-length-encoded
//! occupancy. Serialization is canonical (sorted maps, stable field
//! order), so the same scene always produces identical bytes and a
//! load/save round trip is byte-exact.

use std::collections::BTreeMap;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SCENE_FORMAT_VERSION: u32 = 1;

/// Axis-aligned box in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    /// Distance from a point to the nearest point of the box, 0 inside.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        let mut d2 = 0.0;
        for i in 0..3 {
            let c = p[i].clamp(self.min[i], self.max[i]);
            d2 += (p[i] - c) * (p[i] - c);
        }
        d2.sqrt()
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) * 0.5
    }

    pub fn corners(&self) -> [Vector3<f64>; 8] {
        let (a, b) = (&self.min, &self.max);
        [
            Vector3::new(a.x, a.y, a.z),
            Vector3::new(b.x, a.y, a.z),
            Vector3::new(a.x, b.y, a.z),
            Vector3::new(b.x, b.y, a.z),
            Vector3::new(a.x, a.y, b.z),
            Vector3::new(b.x, a.y, b.z),
            Vector3::new(a.x, b.y, b.z),
            Vector3::new(b.x, b.y, b.z),
        ]
    }
}

/// A class-labeled box placed in the scene. Its cells are marked occupied.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectInstance {
    pub id: u32,
    pub class: String,
    pub aabb: Aabb,
    pub target_candidate: bool,
    /// Inclusive-exclusive cell range covered by the box.
    pub(crate) cell_min: [usize; 3],
    pub(crate) cell_max: [usize; 3],
}

#[derive(Debug, Clone)]
pub struct VoxelScene {
    resolution: f64,
    dims: [usize; 3],
    occupancy: Vec<bool>,
    objects: Vec<ObjectInstance>,
    taxonomy: BTreeMap<String, Option<String>>,
    seed: u64,
    /// Per cell, 0 for structure or free, otherwise object index + 1.
    cell_object: Vec<u16>,
    /// Class label to 1-based class id, assigned by sorted taxonomy keys.
    class_ids: BTreeMap<String, u16>,
    /// Reverse lookup, index = class id - 1.
    class_names: Vec<String>,
}

impl VoxelScene {
    /// Creates an empty closed world: boundary shell occupied, interior free.
    pub fn new(resolution: f64, dims: [usize; 3], seed: u64) -> Result<Self> {
        if !(resolution > 0.0) {
            return Err(Error::config("scene: resolution must be positive"));
        }
        if dims.iter().any(|&d| d < 3) {
            return Err(Error::config("scene: dims must be at least 3 cells per axis"));
        }
        let n = dims[0] * dims[1] * dims[2];
        let mut scene = VoxelScene {
            resolution,
            dims,
            occupancy: vec![false; n],
            objects: Vec::new(),
            taxonomy: BTreeMap::new(),
            seed,
            cell_object: vec![0; n],
            class_ids: BTreeMap::new(),
            class_names: Vec::new(),
        };
        for z in 0..dims[2] {
            for y in 0..dims[1] {
                for x in 0..dims[0] {
                    if x == 0
                        || y == 0
                        || z == 0
                        || x == dims[0] - 1
                        || y == dims[1] - 1
                        || z == dims[2] - 1
                    {
                        let i = scene.idx([x, y, z]);
                        scene.occupancy[i] = true;
                    }
                }
            }
        }
        Ok(scene)
    }

    #[inline]
    pub fn idx(&self, c: [usize; 3]) -> usize {
        (c[2] * self.dims[1] + c[1]) * self.dims[0] + c[0]
    }

    pub fn cell_of_index(&self, i: usize) -> [usize; 3] {
        let x = i % self.dims[0];
        let y = (i / self.dims[0]) % self.dims[1];
        let z = i / (self.dims[0] * self.dims[1]);
        [x, y, z]
    }

    #[inline]
    pub fn in_bounds(&self, c: [i64; 3]) -> bool {
        (0..self.dims[0] as i64).contains(&c[0])
            && (0..self.dims[1] as i64).contains(&c[1])
            && (0..self.dims[2] as i64).contains(&c[2])
    }

    #[inline]
    pub fn occupied(&self, c: [usize; 3]) -> bool {
        self.occupancy[self.idx(c)]
    }

    /// Out-of-bounds cells count as occupied (closed world).
    #[inline]
    pub fn occupied_i64(&self, c: [i64; 3]) -> bool {
        if !self.in_bounds(c) {
            return true;
        }
        self.occupied([c[0] as usize, c[1] as usize, c[2] as usize])
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn cell_count(&self) -> usize {
        self.occupancy.len()
    }

    pub fn free_cell_count(&self) -> usize {
        self.occupancy.iter().filter(|&&o| !o).count()
    }

    /// Center of a cell in meters.
    pub fn cell_center(&self, c: [usize; 3]) -> Vector3<f64> {
        Vector3::new(
            (c[0] as f64 + 0.5) * self.resolution,
            (c[1] as f64 + 0.5) * self.resolution,
            (c[2] as f64 + 0.5) * self.resolution,
        )
    }

    /// Cell containing a point, None outside the grid.
    pub fn cell_of_point(&self, p: &Vector3<f64>) -> Option<[usize; 3]> {
        let c = [
            (p.x / self.resolution).floor() as i64,
            (p.y / self.resolution).floor() as i64,
            (p.z / self.resolution).floor() as i64,
        ];
        if self.in_bounds(c) {
            Some([c[0] as usize, c[1] as usize, c[2] as usize])
        } else {
            None
        }
    }

    /// Top surface of the floor layer.
    pub fn floor_z(&self) -> f64 {
        self.resolution
    }

    /// Bottom surface of the ceiling layer.
    pub fn ceiling_z(&self) -> f64 {
        (self.dims[2] as f64 - 1.0) * self.resolution
    }

    /// Altitude of a world z coordinate over the floor surface.
    pub fn height_above_floor(&self, z: f64) -> f64 {
        z - self.floor_z()
    }

    /// Marks a cell range as plain structure (walls, partitions).
    pub fn fill_structure(&mut self, cmin: [usize; 3], cmax: [usize; 3]) {
        for z in cmin[2]..cmax[2] {
            for y in cmin[1]..cmax[1] {
                for x in cmin[0]..cmax[0] {
                    let i = self.idx([x, y, z]);
                    self.occupancy[i] = true;
                }
            }
        }
    }

    /// Clears a cell range back to free space (used to carve door openings).
    /// Boundary-shell cells are never cleared.
    pub fn carve(&mut self, cmin: [usize; 3], cmax: [usize; 3]) {
        for z in cmin[2].max(1)..cmax[2].min(self.dims[2] - 1) {
            for y in cmin[1].max(1)..cmax[1].min(self.dims[1] - 1) {
                for x in cmin[0].max(1)..cmax[0].min(self.dims[0] - 1) {
                    let i = self.idx([x, y, z]);
                    self.occupancy[i] = false;
                    self.cell_object[i] = 0;
                }
            }
        }
    }

    /// Declares a class and its optional parent before any instance is added.
    pub fn declare_class(&mut self, class: &str, parent: Option<&str>) {
        self.taxonomy.insert(class.to_string(), parent.map(str::to_string));
        self.rebuild_class_ids();
    }

    pub fn taxonomy(&self) -> &BTreeMap<String, Option<String>> {
        &self.taxonomy
    }

    /// Parent class of a class, if declared.
    pub fn parent_of(&self, class: &str) -> Option<&str> {
        self.taxonomy.get(class).and_then(|p| p.as_deref())
    }

    pub fn class_id(&self, class: &str) -> Option<u16> {
        self.class_ids.get(class).copied()
    }

    pub fn class_name(&self, id: u16) -> Option<&str> {
        if id == 0 {
            return None;
        }
        self.class_names.get(id as usize - 1).map(String::as_str)
    }

    pub fn class_ids(&self) -> &BTreeMap<String, u16> {
        &self.class_ids
    }

    fn rebuild_class_ids(&mut self) {
        self.class_ids.clear();
        self.class_names.clear();
        for (i, name) in self.taxonomy.keys().enumerate() {
            let id = u16::try_from(i + 1).expect("class count fits u16");
            self.class_ids.insert(name.clone(), id);
            self.class_names.push(name.clone());
        }
    }

    /// Places an object covering the cell range [cmin, cmax). The range must
    /// lie strictly inside the boundary shell, cover only free cells, and
    /// the class must be declared. Returns the instance id.
    pub fn add_object(
        &mut self,
        class: &str,
        cmin: [usize; 3],
        cmax: [usize; 3],
        target_candidate: bool,
    ) -> Result<u32> {
        if !self.taxonomy.contains_key(class) {
            return Err(Error::config(format!("scene: class {class:?} not declared")));
        }
        for i in 0..3 {
            if cmin[i] < 1 || cmax[i] > self.dims[i] - 1 || cmin[i] >= cmax[i] {
                return Err(Error::config(format!(
                    "scene: object cells {cmin:?}..{cmax:?} outside interior"
                )));
            }
        }
        for z in cmin[2]..cmax[2] {
            for y in cmin[1]..cmax[1] {
                for x in cmin[0]..cmax[0] {
                    if self.occupied([x, y, z]) {
                        return Err(Error::config(format!(
                            "scene: object cells {cmin:?}..{cmax:?} overlap occupied space"
                        )));
                    }
                }
            }
        }
        let id = u32::try_from(self.objects.len()).expect("object count fits u32");
        let tag = u16::try_from(self.objects.len() + 1)
            .map_err(|_| Error::config("scene: too many objects"))?;
        for z in cmin[2]..cmax[2] {
            for y in cmin[1]..cmax[1] {
                for x in cmin[0]..cmax[0] {
                    let i = self.idx([x, y, z]);
                    self.occupancy[i] = true;
                    self.cell_object[i] = tag;
                }
            }
        }
        let res = self.resolution;
        let aabb = Aabb {
            min: Vector3::new(cmin[0] as f64 * res, cmin[1] as f64 * res, cmin[2] as f64 * res),
            max: Vector3::new(cmax[0] as f64 * res, cmax[1] as f64 * res, cmax[2] as f64 * res),
        };
        self.objects.push(ObjectInstance {
            id,
            class: class.to_string(),
            aabb,
            target_candidate,
            cell_min: cmin,
            cell_max: cmax,
        });
        Ok(id)
    }

    pub fn objects(&self) -> &[ObjectInstance] {
        &self.objects
    }

    pub fn instances_of<'a>(&'a self, class: &'a str) -> impl Iterator<Item = &'a ObjectInstance> {
        self.objects.iter().filter(move |o| o.class == class)
    }

    /// Class id rendered for a cell: the id of the object covering it, or 0
    /// for plain structure and free cells.
    #[inline]
    pub fn cell_class_id(&self, c: [usize; 3]) -> u16 {
        let tag = self.cell_object[self.idx(c)];
        if tag == 0 {
            return 0;
        }
        let class = &self.objects[tag as usize - 1].class;
        *self.class_ids.get(class).expect("placed object class is declared")
    }

    /// Object covering a cell, if any.
    pub fn cell_object(&self, c: [usize; 3]) -> Option<&ObjectInstance> {
        let tag = self.cell_object[self.idx(c)];
        if tag == 0 {
            None
        } else {
            Some(&self.objects[tag as usize - 1])
        }
    }

    /// Canonical JSON serialization.
    pub fn to_json(&self) -> String {
        let file = SceneFile {
            version: SCENE_FORMAT_VERSION,
            resolution: self.resolution,
            dims: self.dims,
            seed: self.seed,
            occupancy: encode_rle(&self.occupancy),
            objects: self
                .objects
                .iter()
                .map(|o| ObjectFile {
                    id: o.id,
                    class: o.class.clone(),
                    aabb: AabbFile {
                        min: [o.aabb.min.x, o.aabb.min.y, o.aabb.min.z],
                        max: [o.aabb.max.x, o.aabb.max.y, o.aabb.max.z],
                    },
                    target_candidate: o.target_candidate,
                })
                .collect(),
            taxonomy: self.taxonomy.clone(),
        };
        serde_json::to_string_pretty(&file).expect("scene serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: SceneFile = serde_json::from_str(text)?;
        if file.version != SCENE_FORMAT_VERSION {
            return Err(Error::format(format!(
                "scene: unsupported format version {}",
                file.version
            )));
        }
        if !(file.resolution > 0.0) {
            return Err(Error::format("scene: resolution must be positive"));
        }
        let n = file.dims[0] * file.dims[1] * file.dims[2];
        let occupancy = decode_rle(&file.occupancy, n)?;
        let mut scene = VoxelScene {
            resolution: file.resolution,
            dims: file.dims,
            occupancy,
            objects: Vec::new(),
            taxonomy: file.taxonomy,
            seed: file.seed,
            cell_object: vec![0; n],
            class_ids: BTreeMap::new(),
            class_names: Vec::new(),
        };
        scene.rebuild_class_ids();
        // Closed-world check: the boundary shell must be occupied.
        for z in 0..scene.dims[2] {
            for y in 0..scene.dims[1] {
                for x in 0..scene.dims[0] {
                    let boundary = x == 0
                        || y == 0
                        || z == 0
                        || x == scene.dims[0] - 1
                        || y == scene.dims[1] - 1
                        || z == scene.dims[2] - 1;
                    if boundary && !scene.occupied([x, y, z]) {
                        return Err(Error::format("scene: boundary cell is not occupied"));
                    }
                }
            }
        }
        for (i, o) in file.objects.iter().enumerate() {
            if o.id as usize != i {
                return Err(Error::format("scene: object ids must be dense and ordered"));
            }
            if !scene.taxonomy.contains_key(&o.class) {
                return Err(Error::format(format!(
                    "scene: object class {:?} missing from taxonomy",
                    o.class
                )));
            }
            let (cmin, cmax) = recover_cells(&o.aabb, scene.resolution)?;
            for a in 0..3 {
                if cmin[a] >= cmax[a] || cmax[a] > scene.dims[a] {
                    return Err(Error::format("scene: object box outside grid"));
                }
            }
            let tag = u16::try_from(i + 1).map_err(|_| Error::format("scene: too many objects"))?;
            for z in cmin[2]..cmax[2] {
                for y in cmin[1]..cmax[1] {
                    for x in cmin[0]..cmax[0] {
                        let idx = scene.idx([x, y, z]);
                        if !scene.occupancy[idx] {
                            return Err(Error::format(
                                "scene: object cell not marked occupied in grid",
                            ));
                        }
                        scene.cell_object[idx] = tag;
                    }
                }
            }
            let res = scene.resolution;
            scene.objects.push(ObjectInstance {
                id: o.id,
                class: o.class.clone(),
                aabb: Aabb {
                    min: Vector3::new(
                        cmin[0] as f64 * res,
                        cmin[1] as f64 * res,
                        cmin[2] as f64 * res,
                    ),
                    max: Vector3::new(
                        cmax[0] as f64 * res,
                        cmax[1] as f64 * res,
                        cmax[2] as f64 * res,
                    ),
                },
                target_candidate: o.target_candidate,
                cell_min: cmin,
                cell_max: cmax,
            });
        }
        Ok(scene)
    }
}

/// Object boxes are cell-aligned by construction, so cells are recovered by
/// rounding and validated against the stored coordinates.
fn recover_cells(aabb: &AabbFile, res: f64) -> Result<([usize; 3], [usize; 3])> {
    let mut cmin = [0usize; 3];
    let mut cmax = [0usize; 3];
    for a in 0..3 {
        let lo = (aabb.min[a] / res).round();
        let hi = (aabb.max[a] / res).round();
        if (lo * res - aabb.min[a]).abs() > 1e-9 || (hi * res - aabb.max[a]).abs() > 1e-9 {
            return Err(Error::format("scene: object box is not cell-aligned"));
        }
        if lo < 0.0 || hi <= lo {
            return Err(Error::format("scene: object box is degenerate"));
        }
        cmin[a] = lo as usize;
        cmax[a] = hi as usize;
    }
    Ok((cmin, cmax))
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    version: u32,
    resolution: f64,
    dims: [usize; 3],
    seed: u64,
    occupancy: RleBits,
    objects: Vec<ObjectFile>,
    taxonomy: BTreeMap<String, Option<String>>,
}

#[derive(Serialize, Deserialize)]
struct ObjectFile {
    id: u32,
    class: String,
    aabb: AabbFile,
    target_candidate: bool,
}

#[derive(Serialize, Deserialize)]
struct AabbFile {
    min: [f64; 3],
    max: [f64; 3],
}

/// Run-length encoding of the flattened occupancy bits: the value of the
/// first cell plus alternating run lengths.
#[derive(Serialize, Deserialize)]
struct RleBits {
    first: bool,
    runs: Vec<u64>,
}

fn encode_rle(bits: &[bool]) -> RleBits {
    let first = bits.first().copied().unwrap_or(false);
    let mut runs = Vec::new();
    let mut current = first;
    let mut len = 0u64;
    for &b in bits {
        if b == current {
            len += 1;
        } else {
            runs.push(len);
            current = b;
            len = 1;
        }
    }
    if len > 0 {
        runs.push(len);
    }
    RleBits { first, runs }
}

fn decode_rle(rle: &RleBits, expected: usize) -> Result<Vec<bool>> {
    let mut bits = Vec::with_capacity(expected);
    let mut current = rle.first;
    for &run in &rle.runs {
        for _ in 0..run {
            bits.push(current);
        }
        current = !current;
    }
    if bits.len() != expected {
        return Err(Error::format(format!(
            "scene: occupancy RLE decodes to {} cells, expected {expected}",
            bits.len()
        )));
    }
    Ok(bits)
}
