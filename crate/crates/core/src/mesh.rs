//! Animated triangle meshes with fixed connectivity, the scene-wide union
//! face table, and barycentric evaluation of vertex trajectories.

use std::ops::Range;

use thiserror::Error;

use crate::geometry::Vec3;

/// Tolerance on the simplex constraint of stored barycentric weights.
pub const SIMPLEX_TOL: f64 = 1e-6;

const MIN_FACE_AREA: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("face {face} references vertex {vertex} but the mesh has {vertex_count} vertices")]
    VertexOutOfRange {
        face: usize,
        vertex: u32,
        vertex_count: usize,
    },
    #[error("face {0} is degenerate at t=0")]
    DegenerateFace(usize),
    #[error("non-finite vertex position (vertex {vertex}, frame {frame})")]
    NonFinite { vertex: usize, frame: usize },
    #[error("mesh has no vertex frames")]
    NoFrames,
    #[error("frame {frame} has {got} vertices, expected {expected}")]
    VertexCountMismatch {
        frame: usize,
        expected: usize,
        got: usize,
    },
    #[error("duplicate object id {0}")]
    DuplicateObjectId(u32),
    #[error("object {object_id} has {got} frames but the clip has {expected}")]
    FrameCountMismatch {
        object_id: u32,
        expected: usize,
        got: usize,
    },
    #[error("face index {face} out of range ({count} faces)")]
    FaceOutOfRange { face: u32, count: usize },
    #[error("time {time} out of range ({frames} frames)")]
    TimeOutOfRange { time: usize, frames: usize },
    #[error("barycentric weights {0:?} are not in the simplex")]
    NotInSimplex([f64; 3]),
    #[error("unknown object id {0}")]
    UnknownObject(u32),
}

/// Time-varying vertices `q_v(t)` with fixed triangular faces.
///
/// Static meshes keep a single vertex frame that is broadcast to every time.
#[derive(Clone, Debug, PartialEq)]
pub struct AnimatedMesh {
    pub object_id: u32,
    is_static: bool,
    vertex_count: usize,
    /// Frame-major: all vertices of frame 0, then frame 1, ...
    vertices: Vec<Vec3>,
    faces: Vec<[u32; 3]>,
}

impl AnimatedMesh {
    pub fn new_static(
        object_id: u32,
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        let vertex_count = vertices.len();
        Self::build(object_id, true, vertex_count, vertices, faces)
    }

    pub fn new_animated(
        object_id: u32,
        frames: Vec<Vec<Vec3>>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        let vertex_count = frames.first().ok_or(MeshError::NoFrames)?.len();
        for (frame, f) in frames.iter().enumerate() {
            if f.len() != vertex_count {
                return Err(MeshError::VertexCountMismatch {
                    frame,
                    expected: vertex_count,
                    got: f.len(),
                });
            }
        }
        let vertices = frames.into_iter().flatten().collect();
        Self::build(object_id, false, vertex_count, vertices, faces)
    }

    /// Rebuilds a mesh from its flattened storage (as read back from an archive).
    pub fn from_parts(
        object_id: u32,
        is_static: bool,
        vertex_count: usize,
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        Self::build(object_id, is_static, vertex_count, vertices, faces)
    }

    fn build(
        object_id: u32,
        is_static: bool,
        vertex_count: usize,
        vertices: Vec<Vec3>,
        faces: Vec<[u32; 3]>,
    ) -> Result<Self, MeshError> {
        if vertex_count == 0 || vertices.is_empty() || !vertices.len().is_multiple_of(vertex_count) {
            return Err(MeshError::NoFrames);
        }
        if is_static && vertices.len() != vertex_count {
            return Err(MeshError::VertexCountMismatch {
                frame: 1,
                expected: vertex_count,
                got: vertices.len() - vertex_count,
            });
        }
        if let Some(i) = vertices.iter().position(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(MeshError::NonFinite {
                vertex: i % vertex_count,
                frame: i / vertex_count,
            });
        }
        for (fi, face) in faces.iter().enumerate() {
            if let Some(&vertex) = face.iter().find(|&&v| v as usize >= vertex_count) {
                return Err(MeshError::VertexOutOfRange {
                    face: fi,
                    vertex,
                    vertex_count,
                });
            }
            let [a, b, c] = face.map(|v| vertices[v as usize]);
            if (b - a).cross(&(c - a)).norm() * 0.5 <= MIN_FACE_AREA {
                return Err(MeshError::DegenerateFace(fi));
            }
        }
        Ok(Self {
            object_id,
            is_static,
            vertex_count,
            vertices,
            faces,
        })
    }

    pub fn is_static(&self) -> bool {
        self.is_static
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    /// Number of stored vertex frames (1 for static meshes).
    pub fn stored_frames(&self) -> usize {
        self.vertices.len() / self.vertex_count
    }

    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }

    /// All stored vertex positions, frame-major.
    pub fn raw_vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    fn frame_slot(&self, t: usize) -> usize {
        if self.is_static {
            0
        } else {
            t
        }
    }

    /// Vertex positions at time `t`; `t` must be below `stored_frames()` for
    /// animated meshes.
    pub fn vertices_at(&self, t: usize) -> &[Vec3] {
        let s = self.frame_slot(t) * self.vertex_count;
        &self.vertices[s..s + self.vertex_count]
    }

    pub fn triangle(&self, face: usize, t: usize) -> [Vec3; 3] {
        let verts = self.vertices_at(t);
        self.faces[face].map(|v| verts[v as usize])
    }

    /// Rounds every vertex to the nearest `f32`, the archive's storage precision.
    pub fn round_to_f32(&mut self) {
        for p in &mut self.vertices {
            *p = p.map(|c| c as f32 as f64);
        }
    }
}

/// A face of the scene union together with simplex weights over its vertices.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaryCoord {
    pub face: u32,
    pub alpha: [f64; 3],
}

impl BaryCoord {
    pub fn new(face: u32, alpha: [f64; 3]) -> Result<Self, MeshError> {
        let bc = Self { face, alpha };
        bc.check_simplex()?;
        Ok(bc)
    }

    pub fn check_simplex(&self) -> Result<(), MeshError> {
        let sum: f64 = self.alpha.iter().sum();
        if self.alpha.iter().any(|a| !(*a >= -SIMPLEX_TOL)) || (sum - 1.0).abs() > SIMPLEX_TOL {
            return Err(MeshError::NotInSimplex(self.alpha));
        }
        Ok(())
    }

    /// `α₁a + α₂b + α₃c`.
    #[inline]
    pub fn combine(&self, tri: &[Vec3; 3]) -> Vec3 {
        tri[0] * self.alpha[0] + tri[1] * self.alpha[1] + tri[2] * self.alpha[2]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FaceRef {
    /// Index into `SceneMesh::meshes()`.
    pub mesh: u32,
    pub local: u32,
}

/// The union of all clip meshes, ordered by ascending object id, with a
/// global face table that stays stable for the clip's lifetime.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneMesh {
    meshes: Vec<AnimatedMesh>,
    frames: usize,
    face_offsets: Vec<u32>,
    vertex_offsets: Vec<u32>,
    face_table: Vec<FaceRef>,
}

/// Concatenates `meshes` in ascending object-id order into one union mesh
/// spanning `frames` time steps.
pub fn union_faces(mut meshes: Vec<AnimatedMesh>, frames: usize) -> Result<SceneMesh, MeshError> {
    meshes.sort_by_key(|m| m.object_id);
    for pair in meshes.windows(2) {
        if pair[0].object_id == pair[1].object_id {
            return Err(MeshError::DuplicateObjectId(pair[0].object_id));
        }
    }
    for m in &meshes {
        if !m.is_static() && m.stored_frames() != frames {
            return Err(MeshError::FrameCountMismatch {
                object_id: m.object_id,
                expected: frames,
                got: m.stored_frames(),
            });
        }
    }
    let mut face_offsets = Vec::with_capacity(meshes.len() + 1);
    let mut vertex_offsets = Vec::with_capacity(meshes.len() + 1);
    let mut face_table = Vec::new();
    let (mut fo, mut vo) = (0u32, 0u32);
    for (mi, m) in meshes.iter().enumerate() {
        face_offsets.push(fo);
        vertex_offsets.push(vo);
        face_table.extend((0..m.faces().len() as u32).map(|local| FaceRef {
            mesh: mi as u32,
            local,
        }));
        fo += m.faces().len() as u32;
        vo += m.vertex_count() as u32;
    }
    face_offsets.push(fo);
    vertex_offsets.push(vo);
    Ok(SceneMesh {
        meshes,
        frames,
        face_offsets,
        vertex_offsets,
        face_table,
    })
}

impl SceneMesh {
    pub fn meshes(&self) -> &[AnimatedMesh] {
        &self.meshes
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn face_count(&self) -> usize {
        self.face_table.len()
    }

    pub fn vertex_count(&self) -> usize {
        *self.vertex_offsets.last().unwrap() as usize
    }

    /// Scalars needed for the vertex trajectories, `3·V·T` for animated
    /// meshes and `3·V` for static ones.
    pub fn trajectory_scalars(&self) -> usize {
        self.meshes
            .iter()
            .map(|m| 3 * m.vertex_count() * m.stored_frames())
            .sum()
    }

    pub fn face_ref(&self, face: u32) -> Result<FaceRef, MeshError> {
        self.face_table
            .get(face as usize)
            .copied()
            .ok_or(MeshError::FaceOutOfRange {
                face,
                count: self.face_table.len(),
            })
    }

    /// Global face index → (object id, local face index).
    pub fn to_local(&self, face: u32) -> Result<(u32, u32), MeshError> {
        let r = self.face_ref(face)?;
        Ok((self.meshes[r.mesh as usize].object_id, r.local))
    }

    /// (object id, local face index) → global face index.
    pub fn to_global(&self, object_id: u32, local: u32) -> Result<u32, MeshError> {
        let mi = self.mesh_index(object_id)?;
        let count = self.meshes[mi].faces().len();
        if local as usize >= count {
            return Err(MeshError::FaceOutOfRange { face: local, count });
        }
        Ok(self.face_offsets[mi] + local)
    }

    pub fn mesh_index(&self, object_id: u32) -> Result<usize, MeshError> {
        self.meshes
            .binary_search_by_key(&object_id, |m| m.object_id)
            .map_err(|_| MeshError::UnknownObject(object_id))
    }

    pub fn mesh(&self, object_id: u32) -> Option<&AnimatedMesh> {
        self.mesh_index(object_id).ok().map(|i| &self.meshes[i])
    }

    /// Global face range owned by `object_id`.
    pub fn faces_of(&self, object_id: u32) -> Result<Range<u32>, MeshError> {
        let mi = self.mesh_index(object_id)?;
        Ok(self.face_offsets[mi]..self.face_offsets[mi + 1])
    }

    /// Faces of the union expressed with global vertex indices.
    pub fn global_faces(&self) -> Vec<[u32; 3]> {
        self.meshes
            .iter()
            .zip(&self.vertex_offsets)
            .flat_map(|(m, &vo)| m.faces().iter().map(move |f| f.map(|v| v + vo)))
            .collect()
    }

    pub fn vertex_offsets(&self) -> &[u32] {
        &self.vertex_offsets[..self.meshes.len()]
    }

    pub fn object_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.meshes.iter().map(|m| m.object_id)
    }

    fn check_time(&self, t: usize) -> Result<(), MeshError> {
        if t >= self.frames {
            return Err(MeshError::TimeOutOfRange {
                time: t,
                frames: self.frames,
            });
        }
        Ok(())
    }

    /// Corner positions of a global face at time `t`.
    pub fn triangle(&self, face: u32, t: usize) -> Result<[Vec3; 3], MeshError> {
        self.check_time(t)?;
        let r = self.face_ref(face)?;
        Ok(self.meshes[r.mesh as usize].triangle(r.local as usize, t))
    }
}

/// `Q(t) = α₁q_{f₁}(t) + α₂q_{f₂}(t) + α₃q_{f₃}(t)`.
pub fn eval_point(scene: &SceneMesh, bc: &BaryCoord, t: usize) -> Result<Vec3, MeshError> {
    bc.check_simplex()?;
    Ok(bc.combine(&scene.triangle(bc.face, t)?))
}

/// The whole trajectory `(Q(t))_{t=0..T-1}` through a barycentric point.
pub fn eval_track(scene: &SceneMesh, bc: &BaryCoord) -> Result<Vec<Vec3>, MeshError> {
    bc.check_simplex()?;
    let r = scene.face_ref(bc.face)?;
    let mesh = &scene.meshes[r.mesh as usize];
    Ok((0..scene.frames)
        .map(|t| bc.combine(&mesh.triangle(r.local as usize, t)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use proptest::prelude::*;

    fn tri_faces() -> Vec<[u32; 3]> {
        vec![[0, 1, 2], [0, 2, 3]]
    }

    fn quad(offset: Vec3) -> Vec<Vec3> {
        vec![
            Vec3::new(0.0, 0.0, 0.0) + offset,
            Vec3::new(1.0, 0.0, 0.0) + offset,
            Vec3::new(1.0, 1.0, 0.0) + offset,
            Vec3::new(0.0, 1.0, 0.0) + offset,
        ]
    }

    fn translating(object_id: u32, step: Vec3, frames: usize) -> AnimatedMesh {
        let fr = (0..frames).map(|t| quad(step * t as f64)).collect();
        AnimatedMesh::new_animated(object_id, fr, tri_faces()).unwrap()
    }

    #[test]
    fn vertex_and_centroid_weights() {
        let scene = union_faces(vec![translating(1, Vec3::x(), 4)], 4).unwrap();
        let p = eval_point(&scene, &BaryCoord::new(0, [1.0, 0.0, 0.0]).unwrap(), 2).unwrap();
        assert_eq!(p, Vec3::new(2.0, 0.0, 0.0));
        let third = 1.0 / 3.0;
        let c = eval_point(&scene, &BaryCoord::new(1, [third; 3]).unwrap(), 0).unwrap();
        let expect = (Vec3::zeros() + Vec3::new(1.0, 1.0, 0.0) + Vec3::new(0.0, 1.0, 0.0)) / 3.0;
        assert!((c - expect).norm() < 1e-12);
    }

    #[test]
    fn static_mesh_is_time_invariant() {
        let m = AnimatedMesh::new_static(0, quad(Vec3::zeros()), tri_faces()).unwrap();
        let scene = union_faces(vec![m], 10).unwrap();
        let bc = BaryCoord::new(1, [0.2, 0.3, 0.5]).unwrap();
        let track = eval_track(&scene, &bc).unwrap();
        assert_eq!(track.len(), 10);
        assert!(track.iter().all(|p| *p == track[0]));
    }

    #[test]
    fn rigid_translation_gives_arithmetic_track() {
        let step = Vec3::new(0.1, -0.2, 0.05);
        let scene = union_faces(vec![translating(3, step, 6)], 6).unwrap();
        let track = eval_track(&scene, &BaryCoord::new(0, [0.5, 0.25, 0.25]).unwrap()).unwrap();
        for w in track.windows(2) {
            assert!((w[1] - w[0] - step).norm() < 1e-12);
        }
    }

    #[test]
    fn union_offsets_second_mesh() {
        let a = translating(5, Vec3::x(), 2);
        let b = AnimatedMesh::new_static(2, quad(Vec3::z()), tri_faces()).unwrap();
        let scene = union_faces(vec![a, b], 2).unwrap();
        // Ascending object id: static mesh 2 first, then 5.
        assert_eq!(scene.object_ids().collect::<Vec<_>>(), vec![2, 5]);
        let g = scene.global_faces();
        assert_eq!(g[0], [0, 1, 2]);
        assert_eq!(g[2], [4, 5, 6]);
        assert_eq!(scene.faces_of(5).unwrap(), 2..4);
        assert_eq!(scene.to_local(3).unwrap(), (5, 1));
        assert_eq!(scene.trajectory_scalars(), 3 * 4 + 3 * 4 * 2);
    }

    #[test]
    fn union_single_mesh_is_identity() {
        let scene = union_faces(vec![translating(1, Vec3::x(), 2)], 2).unwrap();
        assert_eq!(scene.global_faces(), tri_faces());
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(
            union_faces(vec![translating(1, Vec3::x(), 2), translating(1, Vec3::y(), 2)], 2),
            Err(MeshError::DuplicateObjectId(1))
        );
        assert!(matches!(
            union_faces(vec![translating(1, Vec3::x(), 3)], 2),
            Err(MeshError::FrameCountMismatch { .. })
        ));
        assert!(matches!(
            AnimatedMesh::new_static(0, quad(Vec3::zeros()), vec![[0, 1, 7]]),
            Err(MeshError::VertexOutOfRange { .. })
        ));
        assert_eq!(
            AnimatedMesh::new_static(0, quad(Vec3::zeros()), vec![[0, 1, 1]]),
            Err(MeshError::DegenerateFace(0))
        );
        let scene = union_faces(vec![translating(1, Vec3::x(), 2)], 2).unwrap();
        assert!(matches!(
            eval_point(&scene, &BaryCoord { face: 9, alpha: [1.0, 0.0, 0.0] }, 0),
            Err(MeshError::FaceOutOfRange { .. })
        ));
        assert!(matches!(
            eval_point(&scene, &BaryCoord { face: 0, alpha: [1.0, 0.5, 0.0] }, 0),
            Err(MeshError::NotInSimplex(_))
        ));
        assert!(matches!(
            eval_point(&scene, &BaryCoord { face: 0, alpha: [1.0, 0.0, 0.0] }, 2),
            Err(MeshError::TimeOutOfRange { .. })
        ));
    }

    #[test]
    fn degenerate_faces_after_t0_still_evaluate() {
        let frames = vec![quad(Vec3::zeros()), vec![Vec3::zeros(); 4]];
        let m = AnimatedMesh::new_animated(1, frames, tri_faces()).unwrap();
        let scene = union_faces(vec![m], 2).unwrap();
        let p = eval_point(&scene, &BaryCoord::new(0, [0.2, 0.3, 0.5]).unwrap(), 1).unwrap();
        assert_eq!(p, Vec3::zeros());
    }

    fn simplex() -> impl Strategy<Value = [f64; 3]> {
        (0.0..1.0f64, 0.0..1.0f64).prop_map(|(a, b)| {
            let (a, b) = if a + b > 1.0 { (1.0 - a, 1.0 - b) } else { (a, b) };
            [a, b, 1.0 - a - b]
        })
    }

    proptest! {
        #[test]
        fn rigid_transform_commutes_with_eval(
            alpha in simplex(),
            axis in prop::array::uniform3(-1.0..1.0f64),
            angle in -3.0..3.0f64,
            shift in prop::array::uniform3(-5.0..5.0f64),
            t in 0usize..3,
        ) {
            let axis = Vec3::from(axis);
            prop_assume!(axis.norm() > 1e-3);
            let rot = Rotation3::from_scaled_axis(axis.normalize() * angle);
            let shift = Vec3::from(shift);
            let base = translating(1, Vec3::new(0.3, 0.1, -0.2), 3);
            let moved: Vec<Vec<Vec3>> = (0..3)
                .map(|t| base.vertices_at(t).iter().map(|p| rot * p + shift).collect())
                .collect();
            let moved = AnimatedMesh::new_animated(1, moved, tri_faces()).unwrap();
            let a = union_faces(vec![base], 3).unwrap();
            let b = union_faces(vec![moved], 3).unwrap();
            let bc = BaryCoord::new(1, alpha).unwrap();
            let pa = eval_point(&a, &bc, t).unwrap();
            let pb = eval_point(&b, &bc, t).unwrap();
            prop_assert!((rot * pa + shift - pb).norm() < 1e-6);
        }

        #[test]
        fn global_local_round_trip(sizes in prop::collection::vec(1usize..6, 1..5)) {
            let meshes: Vec<AnimatedMesh> = sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| {
                    // A fan of n triangles.
                    let mut verts = vec![Vec3::zeros()];
                    for k in 0..=n {
                        let a = k as f64 * 0.5;
                        verts.push(Vec3::new(a.cos(), a.sin(), 0.0));
                    }
                    let faces = (0..n as u32).map(|k| [0, k + 1, k + 2]).collect();
                    AnimatedMesh::new_static(10 - i as u32, verts, faces).unwrap()
                })
                .collect();
            let scene = union_faces(meshes, 1).unwrap();
            for g in 0..scene.face_count() as u32 {
                let (obj, local) = scene.to_local(g).unwrap();
                prop_assert_eq!(scene.to_global(obj, local).unwrap(), g);
            }
        }

        #[test]
        fn eval_point_stays_on_triangle(alpha in simplex(), t in 0usize..4) {
            let scene = union_faces(vec![translating(1, Vec3::new(0.5, 0.0, 0.1), 4)], 4).unwrap();
            let bc = BaryCoord::new(0, alpha).unwrap();
            let p = eval_point(&scene, &bc, t).unwrap();
            let [a, b, c] = scene.triangle(0, t).unwrap();
            // Inside-ness via sub-triangle areas.
            let area = |x: Vec3, y: Vec3, z: Vec3| (y - x).cross(&(z - x)).norm() / 2.0;
            let total = area(a, b, c);
            let parts = area(p, b, c) + area(a, p, c) + area(a, b, p);
            prop_assert!((parts - total).abs() < 1e-9);
        }
    }
}
