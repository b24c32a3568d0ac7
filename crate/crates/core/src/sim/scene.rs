//! Scene layout: static environment plus dynamic objects placed on a ground-occupancy grid.

use nalgebra::Rotation3;
use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::objects::{self, box_mesh, ObjectKind};
use super::SimError;
use crate::geometry::Vec3;
use crate::mesh::{union_faces, AnimatedMesh, SceneMesh};

pub const MAX_DYNAMIC_OBJECTS: u32 = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SceneSpec {
    /// `None`: derived from the clip seed.
    pub seed: Option<u64>,
    /// Procedural objects besides the human proxy, 1..=3.
    pub dynamic_objects: u32,
    /// Explicit object kinds; empty draws from the random pool.
    pub kinds: Vec<ObjectKind>,
    pub human: bool,
    /// Ground point the cameras orbit.
    pub root: [f64; 3],
    /// Height of the look-at point above the root.
    pub look_height: f64,
    pub grid_cells: u32,
    pub cell_size: f64,
    /// Static boxes placed on the grid before the objects.
    pub clutter: u32,
    /// Ground, backdrop walls and pillars.
    pub environment: bool,
    pub max_attempts: u32,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: None,
            dynamic_objects: 2,
            kinds: Vec::new(),
            human: true,
            root: [0.0; 3],
            look_height: 0.8,
            grid_cells: 20,
            cell_size: 0.25,
            clutter: 2,
            environment: true,
            max_attempts: 200,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidSpec(m));
        if !(1..=MAX_DYNAMIC_OBJECTS).contains(&self.dynamic_objects) {
            return bad(format!("dynamic_objects must be in 1..={MAX_DYNAMIC_OBJECTS}, got {}", self.dynamic_objects));
        }
        if !self.kinds.is_empty() && self.kinds.len() != self.dynamic_objects as usize {
            return bad(format!("{} kinds given for {} objects", self.kinds.len(), self.dynamic_objects));
        }
        if self.grid_cells == 0 || !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return bad("occupancy grid must have positive size".into());
        }
        if !self.root.iter().all(|v| v.is_finite()) || !self.look_height.is_finite() {
            return bad("root must be finite".into());
        }
        Ok(())
    }

    pub fn camera_root(&self) -> Vec3 {
        Vec3::new(self.root[0], self.root[1], self.root[2] + self.look_height)
    }
}

/// Square ground grid centred on the root; each cell records its owner.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub cells: u32,
    /// Row-major owner ids; `FREE` for empty cells, `CLUTTER` for static props.
    pub owner: Vec<u32>,
}

impl OccupancyGrid {
    pub const FREE: u32 = u32::MAX;
    pub const CLUTTER: u32 = 0;

    pub fn new(center: [f64; 2], cell_size: f64, cells: u32) -> Self {
        let half = cell_size * cells as f64 / 2.0;
        Self {
            origin: [center[0] - half, center[1] - half],
            cell_size,
            cells,
            owner: vec![Self::FREE; (cells * cells) as usize],
        }
    }

    /// Cells overlapped by the xy box `[min, max]`; `None` if it leaves the grid.
    pub fn cells_for(&self, min: [f64; 2], max: [f64; 2]) -> Option<Vec<(u32, u32)>> {
        let cell = |x: f64, o: f64| ((x - o) / self.cell_size).floor();
        let (i0, i1) = (cell(min[0], self.origin[0]), cell(max[0], self.origin[0]));
        let (j0, j1) = (cell(min[1], self.origin[1]), cell(max[1], self.origin[1]));
        let n = self.cells as f64;
        if i0 < 0.0 || j0 < 0.0 || i1 >= n || j1 >= n {
            return None;
        }
        let mut out = Vec::new();
        for j in j0 as u32..=j1 as u32 {
            for i in i0 as u32..=i1 as u32 {
                out.push((i, j));
            }
        }
        Some(out)
    }

    pub fn is_free(&self, cells: &[(u32, u32)]) -> bool {
        cells.iter().all(|&(i, j)| self.owner[(j * self.cells + i) as usize] == Self::FREE)
    }

    pub fn claim(&mut self, cells: &[(u32, u32)], id: u32) {
        for &(i, j) in cells {
            self.owner[(j * self.cells + i) as usize] = id;
        }
    }

    pub fn cell_center(&self, i: u32, j: u32) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell_size,
            self.origin[1] + (j as f64 + 0.5) * self.cell_size,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlacedObject {
    pub object_id: u32,
    pub kind: ObjectKind,
    pub offset: [f64; 2],
    pub yaw_deg: f64,
    pub cells: Vec<(u32, u32)>,
}

#[derive(Clone, Debug)]
pub struct Scene {
    pub mesh: SceneMesh,
    pub camera_root: Vec3,
    pub objects: Vec<PlacedObject>,
    pub occupancy: OccupancyGrid,
}

fn footprint(frames: &[Vec<Vec3>]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for p in frames.iter().flatten() {
        lo = [lo[0].min(p.x), lo[1].min(p.y)];
        hi = [hi[0].max(p.x), hi[1].max(p.y)];
    }
    (lo, hi)
}

fn environment_mesh<R: Rng + ?Sized>(rng: &mut R, center: Vec3) -> (Vec<Vec3>, Vec<[u32; 3]>) {
    let (mut v, mut f) = objects::ground(center, 40.0, 8);
    let mut add = |(bv, bf): (Vec<Vec3>, Vec<[u32; 3]>)| {
        let base = v.len() as u32;
        v.extend(bv);
        f.extend(bf.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    };
    // Backdrop walls well outside the camera ranges.
    let d = 14.0;
    for (min, max) in [
        (Vec3::new(-d, -d - 0.5, 0.0), Vec3::new(d, -d, 3.0)),
        (Vec3::new(-d, d, 0.0), Vec3::new(d, d + 0.5, 3.0)),
        (Vec3::new(-d - 0.5, -d, 0.0), Vec3::new(-d, d, 3.0)),
        (Vec3::new(d, -d, 0.0), Vec3::new(d + 0.5, d, 3.0)),
    ] {
        add(box_mesh(center + min, center + max));
    }
    for _ in 0..4 {
        let a = rng.random_range(0.0..std::f64::consts::TAU);
        let r = rng.random_range(11.5..13.0);
        let h = rng.random_range(1.5..4.0);
        let c = center + Vec3::new(r * a.cos(), r * a.sin(), 0.0);
        add(box_mesh(c - Vec3::new(0.3, 0.3, 0.0), c + Vec3::new(0.3, 0.3, h)));
    }
    (v, f)
}

/// Builds the environment and places every object so no two footprints
/// share an occupancy cell. Object ids start at 1; the environment is 0.
pub fn compose_scene(spec: &SceneSpec, seed: u64, frames: usize) -> Result<Scene, SimError> {
    spec.validate()?;
    if frames == 0 {
        return Err(SimError::InvalidSpec("clip needs at least one frame".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let root = Vec3::from(spec.root);
    let mut grid = OccupancyGrid::new([root.x, root.y], spec.cell_size, spec.grid_cells);

    let mut env_v = Vec::new();
    let mut env_f = Vec::new();
    if spec.environment {
        (env_v, env_f) = environment_mesh(&mut rng, root);
    }
    for _ in 0..spec.clutter {
        // Clutter is best effort: a full grid simply gets fewer props.
        for _ in 0..spec.max_attempts {
            let s = rng.random_range(0.15..0.3);
            let i = rng.random_range(0..spec.grid_cells);
            let j = rng.random_range(0..spec.grid_cells);
            let c = grid.cell_center(i, j);
            let (lo, hi) = ([c[0] - s, c[1] - s], [c[0] + s, c[1] + s]);
            if let Some(cells) = grid.cells_for(lo, hi).filter(|c| grid.is_free(c)) {
                grid.claim(&cells, OccupancyGrid::CLUTTER);
                let h = rng.random_range(0.2..0.5);
                let (bv, bf) = box_mesh(Vec3::new(lo[0], lo[1], root.z), Vec3::new(hi[0], hi[1], root.z + h));
                let base = env_v.len() as u32;
                env_v.extend(bv);
                env_f.extend(bf.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
                break;
            }
        }
    }

    let mut kinds: Vec<ObjectKind> = if spec.kinds.is_empty() {
        (0..spec.dynamic_objects)
            .map(|_| ObjectKind::RANDOM_POOL[rng.random_range(0..ObjectKind::RANDOM_POOL.len())])
            .collect()
    } else {
        spec.kinds.clone()
    };
    if spec.human {
        // Largest footprint last would fail more often; place the human first.
        kinds.insert(0, ObjectKind::Human);
    }

    let mut meshes = Vec::new();
    if !env_f.is_empty() {
        let mut env = AnimatedMesh::new_static(0, env_v, env_f)?;
        env.round_to_f32();
        meshes.push(env);
    }
    let mut placed = Vec::new();
    for (k, kind) in kinds.into_iter().enumerate() {
        let id = k as u32 + 1;
        let local = objects::build(kind, frames, &mut rng);
        let mut done = None;
        for _ in 0..spec.max_attempts {
            let yaw = rng.random_range(0.0..360.0f64);
            let rot = Rotation3::from_axis_angle(&Vec3::z_axis(), yaw.to_radians());
            let half = grid.cell_size * grid.cells as f64 / 2.0;
            let off = [root.x + rng.random_range(-half..half), root.y + rng.random_range(-half..half)];
            let posed: Vec<Vec<Vec3>> = local
                .frames
                .iter()
                .map(|f| {
                    f.iter()
                        .map(|p| (rot * p + Vec3::new(off[0], off[1], root.z)).map(|c| c as f32 as f64))
                        .collect()
                })
                .collect();
            let (lo, hi) = footprint(&posed);
            if let Some(cells) = grid.cells_for(lo, hi).filter(|c| grid.is_free(c)) {
                grid.claim(&cells, id);
                done = Some((posed, off, yaw, cells));
                break;
            }
        }
        let Some((posed, offset, yaw_deg, cells)) = done else {
            return Err(SimError::PlacementFailed {
                object: id,
                kind: format!("{kind:?}"),
                attempts: spec.max_attempts,
            });
        };
        let mut mesh = AnimatedMesh::new_animated(id, posed, local.faces.clone())?;
        mesh.round_to_f32();
        meshes.push(mesh);
        placed.push(PlacedObject {
            object_id: id,
            kind,
            offset,
            yaw_deg,
            cells,
        });
    }
    Ok(Scene {
        mesh: union_faces(meshes, frames)?,
        camera_root: spec.camera_root(),
        objects: placed,
        occupancy: grid,
    })
}
