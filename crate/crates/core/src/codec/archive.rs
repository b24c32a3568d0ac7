//! The clip archive: a little-endian sectioned binary file.
//!
//! ```text
//! magic "DPMCLIP\0" | major u16 | minor u16 | section*
//! section = tag [u8; 4] | payload_len u64 | payload | crc32 u32
//! ```
//!
//! The CRC covers tag, length and payload. Sections appear in a fixed order:
//! one `HEAD`, one `META` (JSON text), one `MESH` per animated mesh in
//! ascending object id, one `FRAM` per frame in time-major order, and a
//! closing `END!`. `docs/archive-format.md` documents every field.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::Path;

use flate2::read::ZlibDecoder;
use flate2::write::ZlibEncoder;
use flate2::Compression;
use thiserror::Error;

use super::barymap::{BaryMap, PixelFlag, PixelRecord, SegMap};
use crate::geometry::{CameraParams, DepthMap, FrameId, GeometryError, Intrinsics, Mat3, Vec3};
use crate::mesh::{union_faces, AnimatedMesh, MeshError, SceneMesh};

pub const MAGIC: &[u8; 8] = b"DPMCLIP\0";
pub const VERSION_MAJOR: u16 = 1;
pub const VERSION_MINOR: u16 = 0;

/// Convention bits stored in the header; readers require all of them.
pub mod conventions {
    /// Rotation maps world to camera; position is the camera centre.
    pub const WORLD_TO_CAMERA_ROTATION: u32 = 1 << 0;
    /// Integer pixels sample at `(u + 0.5, v + 0.5)`.
    pub const PIXEL_CENTERS: u32 = 1 << 1;
    /// Depth is camera-frame z.
    pub const DEPTH_IS_Z: u32 = 1 << 2;
    /// Right-handed camera frame: +x right, +y down, +z forward.
    pub const RIGHT_HANDED_Z_FORWARD: u32 = 1 << 3;
    pub const ALL: u32 =
        WORLD_TO_CAMERA_ROTATION | PIXEL_CENTERS | DEPTH_IS_Z | RIGHT_HANDED_Z_FORWARD;
}

const TAG_HEAD: [u8; 4] = *b"HEAD";
const TAG_META: [u8; 4] = *b"META";
const TAG_MESH: [u8; 4] = *b"MESH";
const TAG_FRAME: [u8; 4] = *b"FRAM";
const TAG_END: [u8; 4] = *b"END!";

const FRAME_ORDER_TIME_MAJOR: u8 = 0;
const CAMERA_BYTES: usize = 8 + 16 * 8;

#[derive(Debug, Error)]
pub enum ArchiveError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("not a clip archive (bad magic)")]
    BadMagic,
    #[error("unsupported archive version {major}.{minor} (reader supports {VERSION_MAJOR}.x)")]
    UnsupportedVersion { major: u16, minor: u16 },
    #[error("unsupported conventions 0x{0:x}")]
    UnsupportedConvention(u32),
    #[error("checksum mismatch in {section} section at byte {offset}")]
    ChecksumMismatch { section: String, offset: u64 },
    #[error("archive is truncated ({0})")]
    Truncated(String),
    #[error("malformed archive: {0}")]
    Malformed(String),
    #[error("inconsistent clip: {0}")]
    Inconsistent(String),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Camera(#[from] GeometryError),
}

impl ArchiveError {
    /// Whether the error means the bytes are damaged or incomplete, as
    /// opposed to a readable file of the wrong version or kind.
    pub fn is_corruption(&self) -> bool {
        matches!(
            self,
            Self::ChecksumMismatch { .. } | Self::Truncated(_) | Self::Malformed(_)
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClipHeader {
    pub width: u32,
    pub height: u32,
    pub times: u32,
    pub cameras: u32,
    pub surface_tolerance: f64,
}

impl ClipHeader {
    pub fn frame_count(&self) -> usize {
        self.times as usize * self.cameras as usize
    }
}

/// One image of the clip with its ground truth and compact DPM encoding.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub id: FrameId,
    pub camera: CameraParams,
    /// Stored at `f32` precision; invalid pixels are written as 0.
    pub depth: DepthMap,
    pub seg: SegMap,
    pub bary: BaryMap,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClipArchive {
    pub header: ClipHeader,
    /// Captions, provenance and the resolved generation config.
    pub metadata: serde_json::Value,
    pub scene: SceneMesh,
    /// Time-major: index `time * cameras + camera`.
    pub frames: Vec<Frame>,
}

impl ClipArchive {
    /// Checks counts, ordering, dimensions and cross-references.
    pub fn validate(&self) -> Result<(), ArchiveError> {
        let h = &self.header;
        let bad = |m: String| Err(ArchiveError::Inconsistent(m));
        if h.times == 0 || h.cameras == 0 || h.width == 0 || h.height == 0 {
            return bad("zero-sized clip".into());
        }
        if self.frames.len() != h.frame_count() {
            return bad(format!(
                "{} frames but T*C = {}",
                self.frames.len(),
                h.frame_count()
            ));
        }
        if self.scene.frames() != h.times as usize {
            return bad(format!(
                "scene spans {} frames, header says {}",
                self.scene.frames(),
                h.times
            ));
        }
        let n = (h.width * h.height) as usize;
        for (i, f) in self.frames.iter().enumerate() {
            if f.id != FrameId::from_flat(i, h.cameras) {
                return bad(format!("frame {i} has id {:?} (time-major order expected)", f.id));
            }
            if f.camera.width() != h.width || f.camera.height() != h.height {
                return bad(format!("frame {i}: camera size differs from header"));
            }
            f.camera.validate()?;
            if f.depth.data.len() != n
                || f.depth.dims() != (h.width, h.height)
                || f.seg.ids.len() != n
                || f.bary.records.len() != n
            {
                return bad(format!("frame {i}: per-pixel map sizes differ from header"));
            }
            f.bary
                .validate(&self.scene)
                .map_err(|m| ArchiveError::Inconsistent(format!("frame {i}: {m}")))?;
            if let Some(id) = f
                .seg
                .ids
                .iter()
                .find(|&&id| id != 0 && self.scene.mesh(id).is_none())
            {
                return bad(format!("frame {i}: segmentation id {id} has no mesh"));
            }
        }
        Ok(())
    }

    pub fn frame(&self, id: FrameId) -> Option<&Frame> {
        if id.camera >= self.header.cameras || id.time >= self.header.times {
            return None;
        }
        self.frames.get(id.flat(self.header.cameras))
    }
}

// ---------------------------------------------------------------- writing

struct Buf(Vec<u8>);

impl Buf {
    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f32(&mut self, v: f32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn f64(&mut self, v: f64) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.0.extend_from_slice(b);
    }
    /// `raw_len u32 | comp_len u32 | zlib bytes`.
    fn compressed(&mut self, raw: &[u8]) -> io::Result<()> {
        let mut enc = ZlibEncoder::new(Vec::new(), Compression::new(6));
        enc.write_all(raw)?;
        let comp = enc.finish()?;
        self.u32(raw.len() as u32);
        self.u32(comp.len() as u32);
        self.bytes(&comp);
        Ok(())
    }
}

fn write_section<W: Write>(out: &mut W, tag: [u8; 4], payload: &[u8]) -> io::Result<()> {
    let len = (payload.len() as u64).to_le_bytes();
    let mut crc = crc32fast::Hasher::new();
    crc.update(&tag);
    crc.update(&len);
    crc.update(payload);
    out.write_all(&tag)?;
    out.write_all(&len)?;
    out.write_all(payload)?;
    out.write_all(&crc.finalize().to_le_bytes())
}

/// Byte planes of `width`-byte little-endian words, for better compression.
fn shuffle(words: &[u8], width: usize) -> Vec<u8> {
    let n = words.len() / width;
    let mut out = vec![0u8; words.len()];
    for i in 0..n {
        for b in 0..width {
            out[b * n + i] = words[i * width + b];
        }
    }
    out
}

fn unshuffle(planes: &[u8], width: usize) -> Vec<u8> {
    let n = planes.len() / width;
    let mut out = vec![0u8; planes.len()];
    for i in 0..n {
        for b in 0..width {
            out[i * width + b] = planes[b * n + i];
        }
    }
    out
}

fn encode_camera(b: &mut Buf, cam: &CameraParams) {
    let k = &cam.intrinsics;
    b.u32(k.width);
    b.u32(k.height);
    for v in [k.fx, k.fy, k.cx, k.cy] {
        b.f64(v);
    }
    for r in 0..3 {
        for c in 0..3 {
            b.f64(cam.rotation[(r, c)]);
        }
    }
    for v in cam.position.iter() {
        b.f64(*v);
    }
}

fn encode_frame_section(f: &Frame) -> io::Result<Vec<u8>> {
    let mut b = Buf(Vec::new());
    b.u32(f.id.camera);
    b.u32(f.id.time);
    encode_camera(&mut b, &f.camera);

    let depth: Vec<u8> = f
        .depth
        .data
        .iter()
        .zip(&f.depth.valid)
        .flat_map(|(z, ok)| (if *ok { *z as f32 } else { 0.0f32 }).to_le_bytes())
        .collect();
    b.compressed(&shuffle(&depth, 4))?;

    let seg: Vec<u8> = f.seg.ids.iter().flat_map(|id| id.to_le_bytes()).collect();
    b.compressed(&shuffle(&seg, 4))?;

    // Planar records: faces, first weights, second weights, flags.
    let recs = &f.bary.records;
    let mut bary = Vec::with_capacity(recs.len() * 9);
    let faces: Vec<u8> = recs.iter().flat_map(|r| r.face.to_le_bytes()).collect();
    bary.extend(shuffle(&faces, 4));
    let a1: Vec<u8> = recs.iter().flat_map(|r| r.alpha[0].to_le_bytes()).collect();
    bary.extend(shuffle(&a1, 2));
    let a2: Vec<u8> = recs.iter().flat_map(|r| r.alpha[1].to_le_bytes()).collect();
    bary.extend(shuffle(&a2, 2));
    bary.extend(recs.iter().map(|r| r.flag as u8));
    b.compressed(&bary)?;
    Ok(b.0)
}

fn encode_mesh_section(m: &AnimatedMesh) -> Vec<u8> {
    let mut b = Buf(Vec::new());
    b.u32(m.object_id);
    b.u8(m.is_static() as u8);
    b.bytes(&[0; 3]);
    b.u32(m.vertex_count() as u32);
    b.u32(m.stored_frames() as u32);
    b.u32(m.faces().len() as u32);
    for f in m.faces() {
        for v in f {
            b.u32(*v);
        }
    }
    for p in m.raw_vertices() {
        for c in p.iter() {
            b.f32(*c as f32);
        }
    }
    b.0
}

/// Serializes a validated clip. Output depends only on the clip contents.
pub fn write_archive<W: Write>(clip: &ClipArchive, out: W) -> Result<(), ArchiveError> {
    clip.validate()?;
    let mut out = BufWriter::new(out);
    out.write_all(MAGIC)?;
    out.write_all(&VERSION_MAJOR.to_le_bytes())?;
    out.write_all(&VERSION_MINOR.to_le_bytes())?;

    let h = &clip.header;
    let mut head = Buf(Vec::new());
    head.u32(h.width);
    head.u32(h.height);
    head.u32(h.times);
    head.u32(h.cameras);
    head.u32(clip.scene.meshes().len() as u32);
    head.u32(clip.frames.len() as u32);
    head.u32(conventions::ALL);
    head.u8(FRAME_ORDER_TIME_MAJOR);
    head.bytes(&[0; 3]);
    head.f64(h.surface_tolerance);
    write_section(&mut out, TAG_HEAD, &head.0)?;

    let meta = serde_json::to_vec(&clip.metadata)
        .map_err(|e| ArchiveError::Malformed(format!("metadata: {e}")))?;
    write_section(&mut out, TAG_META, &meta)?;

    for m in clip.scene.meshes() {
        write_section(&mut out, TAG_MESH, &encode_mesh_section(m))?;
    }
    for f in &clip.frames {
        write_section(&mut out, TAG_FRAME, &encode_frame_section(f)?)?;
    }
    let mut end = Buf(Vec::new());
    end.u32(clip.frames.len() as u32);
    write_section(&mut out, TAG_END, &end.0)?;
    out.flush()?;
    Ok(())
}

pub fn write_archive_file(clip: &ClipArchive, path: impl AsRef<Path>) -> Result<(), ArchiveError> {
    write_archive(clip, File::create(path)?)
}

// ---------------------------------------------------------------- reading

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn new(data: &'a [u8], what: &'static str) -> Self {
        Self { data, pos: 0, what }
    }
    fn take(&mut self, n: usize) -> Result<&'a [u8], ArchiveError> {
        if self.data.len() - self.pos < n {
            return Err(ArchiveError::Malformed(format!(
                "{} section ends early",
                self.what
            )));
        }
        let s = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, ArchiveError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, ArchiveError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f32(&mut self) -> Result<f32, ArchiveError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, ArchiveError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn compressed(&mut self, expect: usize) -> Result<Vec<u8>, ArchiveError> {
        let raw_len = self.u32()? as usize;
        let comp_len = self.u32()? as usize;
        if raw_len != expect {
            return Err(ArchiveError::Malformed(format!(
                "{} block holds {raw_len} bytes, expected {expect}",
                self.what
            )));
        }
        let comp = self.take(comp_len)?;
        let mut raw = Vec::with_capacity(raw_len);
        ZlibDecoder::new(comp)
            .read_to_end(&mut raw)
            .map_err(|e| ArchiveError::Malformed(format!("{} block: {e}", self.what)))?;
        if raw.len() != raw_len {
            return Err(ArchiveError::Malformed(format!(
                "{} block decompressed to the wrong size",
                self.what
            )));
        }
        Ok(raw)
    }
    fn finish(&self) -> Result<(), ArchiveError> {
        if self.pos != self.data.len() {
            return Err(ArchiveError::Malformed(format!(
                "{} section has trailing bytes",
                self.what
            )));
        }
        Ok(())
    }
}

fn tag_name(tag: [u8; 4]) -> String {
    String::from_utf8_lossy(&tag).into_owned()
}

#[derive(Clone, Copy, Debug)]
struct SectionLoc {
    tag: [u8; 4],
    /// Offset of the tag.
    offset: u64,
    len: u64,
}

/// Per-section byte counts of an archive on disk.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct SizeBreakdown {
    pub file_bytes: u64,
    pub header_bytes: u64,
    pub metadata_bytes: u64,
    pub mesh_bytes: u64,
    pub frame_bytes: u64,
    pub depth_bytes: u64,
    pub seg_bytes: u64,
    pub bary_bytes: u64,
    pub camera_bytes: u64,
}

/// Random-access reader: indexes sections on open and decodes frames on demand.
pub struct ArchiveReader<R> {
    inner: R,
    header: ClipHeader,
    metadata: serde_json::Value,
    meshes: Vec<SectionLoc>,
    frames: Vec<SectionLoc>,
    file_len: u64,
}

impl ArchiveReader<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>) -> Result<Self, ArchiveError> {
        Self::new(BufReader::new(File::open(path)?))
    }
}

impl<R: Read + Seek> ArchiveReader<R> {
    pub fn new(mut inner: R) -> Result<Self, ArchiveError> {
        let file_len = inner.seek(SeekFrom::End(0))?;
        inner.seek(SeekFrom::Start(0))?;
        let mut pre = [0u8; 12];
        read_exact_or_truncated(&mut inner, &mut pre, "file preamble")?;
        if &pre[..8] != MAGIC {
            return Err(ArchiveError::BadMagic);
        }
        let major = u16::from_le_bytes([pre[8], pre[9]]);
        let minor = u16::from_le_bytes([pre[10], pre[11]]);
        if major != VERSION_MAJOR {
            return Err(ArchiveError::UnsupportedVersion { major, minor });
        }

        // Index every section without reading payloads.
        let mut locs = Vec::new();
        let mut offset = 12u64;
        while offset < file_len {
            if file_len - offset < 12 {
                return Err(ArchiveError::Truncated(format!(
                    "section header at byte {offset}"
                )));
            }
            inner.seek(SeekFrom::Start(offset))?;
            let mut th = [0u8; 12];
            inner.read_exact(&mut th)?;
            let tag: [u8; 4] = th[..4].try_into().unwrap();
            let len = u64::from_le_bytes(th[4..].try_into().unwrap());
            let end = offset
                .checked_add(12)
                .and_then(|o| o.checked_add(len))
                .and_then(|o| o.checked_add(4));
            match end {
                Some(end) if end <= file_len => {
                    locs.push(SectionLoc { tag, offset, len });
                    offset = end;
                }
                _ => {
                    return Err(ArchiveError::Truncated(format!(
                        "{} section at byte {offset} runs past end of file",
                        tag_name(tag)
                    )))
                }
            }
        }

        let mut it = locs.into_iter();
        let mut next = |want: [u8; 4]| -> Result<SectionLoc, ArchiveError> {
            match it.next() {
                Some(l) if l.tag == want => Ok(l),
                Some(l) => Err(ArchiveError::Malformed(format!(
                    "expected {} section, found {}",
                    tag_name(want),
                    tag_name(l.tag)
                ))),
                None => Err(ArchiveError::Truncated(format!(
                    "missing {} section",
                    tag_name(want)
                ))),
            }
        };
        let head_loc = next(TAG_HEAD)?;
        let meta_loc = next(TAG_META)?;
        let mut reader = Self {
            inner,
            header: ClipHeader {
                width: 0,
                height: 0,
                times: 0,
                cameras: 0,
                surface_tolerance: 0.0,
            },
            metadata: serde_json::Value::Null,
            meshes: Vec::new(),
            frames: Vec::new(),
            file_len,
        };

        let head = reader.load(head_loc)?;
        let mut c = Cursor::new(&head, "HEAD");
        let width = c.u32()?;
        let height = c.u32()?;
        let times = c.u32()?;
        let cameras = c.u32()?;
        let mesh_count = c.u32()? as usize;
        let frame_count = c.u32()? as usize;
        let conv = c.u32()?;
        let order = c.u8()?;
        c.take(3)?;
        let surface_tolerance = c.f64()?;
        c.finish()?;
        if conv != conventions::ALL {
            return Err(ArchiveError::UnsupportedConvention(conv));
        }
        if order != FRAME_ORDER_TIME_MAJOR {
            return Err(ArchiveError::Malformed(format!("unknown frame order {order}")));
        }
        if frame_count != times as usize * cameras as usize {
            return Err(ArchiveError::Inconsistent(format!(
                "header declares {frame_count} frames but T*C = {}",
                times as usize * cameras as usize
            )));
        }
        reader.header = ClipHeader {
            width,
            height,
            times,
            cameras,
            surface_tolerance,
        };

        let meta = reader.load(meta_loc)?;
        reader.metadata = serde_json::from_slice(&meta)
            .map_err(|e| ArchiveError::Malformed(format!("metadata is not JSON: {e}")))?;

        for _ in 0..mesh_count {
            reader.meshes.push(next(TAG_MESH)?);
        }
        for _ in 0..frame_count {
            reader.frames.push(next(TAG_FRAME)?);
        }
        let end_loc = next(TAG_END)?;
        let end = reader.load(end_loc)?;
        let mut c = Cursor::new(&end, "END!");
        if c.u32()? as usize != frame_count {
            return Err(ArchiveError::Malformed("END! frame count disagrees".into()));
        }
        c.finish()?;
        if let Some(extra) = it.next() {
            return Err(ArchiveError::Malformed(format!(
                "unexpected {} section after END!",
                tag_name(extra.tag)
            )));
        }
        Ok(reader)
    }

    fn load(&mut self, loc: SectionLoc) -> Result<Vec<u8>, ArchiveError> {
        self.inner.seek(SeekFrom::Start(loc.offset))?;
        let mut buf = vec![0u8; 12 + loc.len as usize + 4];
        read_exact_or_truncated(&mut self.inner, &mut buf, "section")?;
        let (body, crc) = buf.split_at(12 + loc.len as usize);
        let stored = u32::from_le_bytes(crc.try_into().unwrap());
        if crc32fast::hash(body) != stored {
            return Err(ArchiveError::ChecksumMismatch {
                section: tag_name(loc.tag),
                offset: loc.offset,
            });
        }
        Ok(body[12..].to_vec())
    }

    pub fn header(&self) -> &ClipHeader {
        &self.header
    }

    pub fn metadata(&self) -> &serde_json::Value {
        &self.metadata
    }

    pub fn file_len(&self) -> u64 {
        self.file_len
    }

    pub fn read_scene(&mut self) -> Result<SceneMesh, ArchiveError> {
        let mut meshes = Vec::with_capacity(self.meshes.len());
        for loc in self.meshes.clone() {
            let data = self.load(loc)?;
            meshes.push(decode_mesh(&data)?);
        }
        if meshes.windows(2).any(|w| w[0].object_id >= w[1].object_id) {
            return Err(ArchiveError::Malformed(
                "meshes are not in ascending object id order".into(),
            ));
        }
        Ok(union_faces(meshes, self.header.times as usize)?)
    }

    /// Decodes one frame by flat (time-major) index.
    pub fn read_frame(&mut self, flat: usize) -> Result<Frame, ArchiveError> {
        let loc = *self.frames.get(flat).ok_or_else(|| {
            ArchiveError::Inconsistent(format!("frame {flat} out of range"))
        })?;
        let data = self.load(loc)?;
        let frame = decode_frame(&data, &self.header)?;
        if frame.id != FrameId::from_flat(flat, self.header.cameras) {
            return Err(ArchiveError::Malformed(format!(
                "frame {flat} is out of time-major order"
            )));
        }
        Ok(frame)
    }

    pub fn read_all(mut self) -> Result<ClipArchive, ArchiveError> {
        let scene = self.read_scene()?;
        let frames = (0..self.frames.len())
            .map(|i| self.read_frame(i))
            .collect::<Result<Vec<_>, _>>()?;
        let clip = ClipArchive {
            header: self.header.clone(),
            metadata: self.metadata.clone(),
            scene,
            frames,
        };
        clip.validate()?;
        Ok(clip)
    }

    pub fn size_breakdown(&mut self) -> Result<SizeBreakdown, ArchiveError> {
        const FRAMING: u64 = 16;
        let mut s = SizeBreakdown {
            file_bytes: self.file_len,
            header_bytes: 12,
            ..Default::default()
        };
        // Header and metadata sit right after the preamble.
        let mut first = [0u8; 12];
        self.inner.seek(SeekFrom::Start(12))?;
        self.inner.read_exact(&mut first)?;
        let head_len = u64::from_le_bytes(first[4..].try_into().unwrap());
        s.header_bytes += head_len + FRAMING;
        let mut meta = [0u8; 12];
        self.inner.seek(SeekFrom::Start(12 + head_len + FRAMING))?;
        self.inner.read_exact(&mut meta)?;
        s.metadata_bytes = u64::from_le_bytes(meta[4..].try_into().unwrap()) + FRAMING;
        s.mesh_bytes = self.meshes.iter().map(|l| l.len + FRAMING).sum();
        for loc in self.frames.clone() {
            s.frame_bytes += loc.len + FRAMING;
            let mut pos = loc.offset + 12 + 8 + CAMERA_BYTES as u64;
            s.camera_bytes += 8 + CAMERA_BYTES as u64 + FRAMING;
            for slot in [&mut s.depth_bytes, &mut s.seg_bytes, &mut s.bary_bytes] {
                self.inner.seek(SeekFrom::Start(pos + 4))?;
                let mut l = [0u8; 4];
                self.inner.read_exact(&mut l)?;
                let comp = u32::from_le_bytes(l) as u64 + 8;
                *slot += comp;
                pos += comp;
            }
        }
        s.header_bytes += self.file_len
            - (s.header_bytes + s.metadata_bytes + s.mesh_bytes + s.frame_bytes);
        Ok(s)
    }
}

fn read_exact_or_truncated<R: Read>(
    r: &mut R,
    buf: &mut [u8],
    what: &str,
) -> Result<(), ArchiveError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            ArchiveError::Truncated(what.to_string())
        } else {
            ArchiveError::Io(e)
        }
    })
}

fn decode_mesh(data: &[u8]) -> Result<AnimatedMesh, ArchiveError> {
    let mut c = Cursor::new(data, "MESH");
    let object_id = c.u32()?;
    let is_static = match c.u8()? {
        0 => false,
        1 => true,
        x => return Err(ArchiveError::Malformed(format!("mesh static flag {x}"))),
    };
    c.take(3)?;
    let vertex_count = c.u32()? as usize;
    let stored = c.u32()? as usize;
    let face_count = c.u32()? as usize;
    let mut faces = Vec::with_capacity(face_count);
    for _ in 0..face_count {
        faces.push([c.u32()?, c.u32()?, c.u32()?]);
    }
    let n = vertex_count
        .checked_mul(stored)
        .ok_or_else(|| ArchiveError::Malformed("mesh size overflow".into()))?;
    let mut vertices = Vec::with_capacity(n.min(data.len() / 12));
    for _ in 0..n {
        vertices.push(Vec3::new(c.f32()? as f64, c.f32()? as f64, c.f32()? as f64));
    }
    c.finish()?;
    Ok(AnimatedMesh::from_parts(
        object_id,
        is_static,
        vertex_count,
        vertices,
        faces,
    )?)
}

fn decode_frame(data: &[u8], h: &ClipHeader) -> Result<Frame, ArchiveError> {
    let mut c = Cursor::new(data, "FRAM");
    let camera = c.u32()?;
    let time = c.u32()?;
    let width = c.u32()?;
    let height = c.u32()?;
    if (width, height) != (h.width, h.height) {
        return Err(ArchiveError::Inconsistent(format!(
            "frame ({camera}, {time}) is {width}x{height}, header says {}x{}",
            h.width, h.height
        )));
    }
    let fx = c.f64()?;
    let fy = c.f64()?;
    let cx = c.f64()?;
    let cy = c.f64()?;
    let mut rot = Mat3::zeros();
    for r in 0..3 {
        for col in 0..3 {
            rot[(r, col)] = c.f64()?;
        }
    }
    let position = Vec3::new(c.f64()?, c.f64()?, c.f64()?);
    let cam = CameraParams::new(
        Intrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        },
        rot,
        position,
    )?;

    let n = width as usize * height as usize;
    let depth_raw = unshuffle(&c.compressed(4 * n)?, 4);
    let z: Vec<f64> = depth_raw
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let depth = DepthMap::from_values(width, height, z);

    let seg_raw = unshuffle(&c.compressed(4 * n)?, 4);
    let ids = seg_raw
        .chunks_exact(4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .collect();

    let bary_raw = c.compressed(9 * n)?;
    c.finish()?;
    let faces = unshuffle(&bary_raw[..4 * n], 4);
    let a1 = unshuffle(&bary_raw[4 * n..6 * n], 2);
    let a2 = unshuffle(&bary_raw[6 * n..8 * n], 2);
    let flags = &bary_raw[8 * n..];
    let mut records = Vec::with_capacity(n);
    for i in 0..n {
        let flag = PixelFlag::from_u8(flags[i])
            .ok_or_else(|| ArchiveError::Malformed(format!("pixel flag {}", flags[i])))?;
        records.push(PixelRecord {
            face: u32::from_le_bytes(faces[4 * i..4 * i + 4].try_into().unwrap()),
            alpha: [
                u16::from_le_bytes([a1[2 * i], a1[2 * i + 1]]),
                u16::from_le_bytes([a2[2 * i], a2[2 * i + 1]]),
            ],
            flag,
        });
    }
    Ok(Frame {
        id: FrameId { camera, time },
        camera: cam,
        depth,
        seg: SegMap { width, height, ids },
        bary: BaryMap {
            width,
            height,
            records,
        },
    })
}

pub fn read_archive<R: Read + Seek>(r: R) -> Result<ClipArchive, ArchiveError> {
    ArchiveReader::new(r)?.read_all()
}

pub fn read_archive_file(path: impl AsRef<Path>) -> Result<ClipArchive, ArchiveError> {
    ArchiveReader::open(path)?.read_all()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shuffle_round_trip() {
        let data: Vec<u8> = (0..40).collect();
        assert_eq!(unshuffle(&shuffle(&data, 4), 4), data);
        assert_eq!(unshuffle(&shuffle(&data, 2), 2), data);
        assert_eq!(shuffle(&[1, 2, 3, 4, 5, 6, 7, 8], 4), vec![1, 5, 2, 6, 3, 7, 4, 8]);
    }

    #[test]
    fn rejects_foreign_files() {
        let r = ArchiveReader::new(io::Cursor::new(b"NOTACLIP\x01\x00\x00\x00".to_vec()));
        assert!(matches!(r, Err(ArchiveError::BadMagic)));
        let mut v = MAGIC.to_vec();
        v.extend_from_slice(&2u16.to_le_bytes());
        v.extend_from_slice(&0u16.to_le_bytes());
        let r = ArchiveReader::new(io::Cursor::new(v));
        assert!(matches!(
            r,
            Err(ArchiveError::UnsupportedVersion { major: 2, .. })
        ));
        let r = ArchiveReader::new(io::Cursor::new(b"DPM".to_vec()));
        assert!(matches!(r, Err(ArchiveError::Truncated(_))));
    }
}
