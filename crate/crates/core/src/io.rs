//! Mesh, point and signal file formats.
//!
//! Readers: OBJ (`v`/`f` records), OFF, PLY (ASCII or binary little-endian).
//! Writers: OBJ and the binary `TVSM` container. Signals are plain
//! whitespace tables (one row per element) or the binary `TVSV` payload.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriangleMesh;
use crate::signal::{Domain, Signal};

pub const TVSM_MAGIC: &[u8; 4] = b"TVSM";
pub const TVSV_MAGIC: &[u8; 4] = b"TVSV";
const VERSION: u32 = 1;

/// Little-endian cursor over a byte buffer.
pub(crate) struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> ByteReader<'a> {
    pub(crate) fn new(buf: &'a [u8], what: &'static str) -> Self {
        Self { buf, pos: 0, what }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Parse(format!("{}: truncated at byte {}", self.what, self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn magic(&mut self, m: &[u8; 4]) -> Result<()> {
        if self.take(4)? != m {
            return Err(Error::Parse(format!("{}: bad magic", self.what)));
        }
        Ok(())
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        usize::try_from(n)
            .ok()
            .filter(|&n| n <= self.buf.len())
            .ok_or_else(|| Error::Parse(format!("{}: implausible count {n}", self.what)))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let bytes = self.take(n.checked_mul(8).ok_or_else(|| Error::Parse(format!("{}: overflow", self.what)))?)?;
        Ok(bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::Parse(format!("{}: {} trailing bytes", self.what, self.buf.len() - self.pos)));
        }
        Ok(())
    }
}

pub(crate) fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    out.reserve(8 * v.len());
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display())))
    })
}

fn extension(path: &Path) -> String {
    path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase()
}

/// Loads a mesh, choosing the reader from the file extension.
pub fn load_mesh(path: &Path) -> Result<TriangleMesh> {
    let bytes = read_file(path)?;
    let (v, f) = match extension(path).as_str() {
        "obj" => parse_obj(&text(&bytes)?)?,
        "off" => parse_off(&text(&bytes)?)?,
        "ply" => parse_ply(&bytes)?,
        "tvsm" => decode_tvsm(&bytes)?,
        other => return Err(Error::Parse(format!("{}: unknown mesh format '{other}'", path.display()))),
    };
    TriangleMesh::new(v, f)
}

/// Loads points from a mesh file (faces ignored) or an `x y z` text table.
pub fn load_points(path: &Path) -> Result<Vec<Vec3>> {
    let bytes = read_file(path)?;
    let points = match extension(path).as_str() {
        "obj" => parse_obj(&text(&bytes)?)?.0,
        "off" => parse_off(&text(&bytes)?)?.0,
        "ply" => parse_ply(&bytes)?.0,
        "tvsm" => decode_tvsm(&bytes)?.0,
        _ => {
            let rows = parse_table(&text(&bytes)?)?;
            rows.iter()
                .enumerate()
                .map(|(i, r)| match r.as_slice() {
                    [x, y, z, ..] => Ok([*x, *y, *z]),
                    _ => Err(Error::Parse(format!("line {}: expected 3 coordinates", i + 1))),
                })
                .collect::<Result<Vec<_>>>()?
        }
    };
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite point coordinate".into()));
    }
    Ok(points)
}

fn text(bytes: &[u8]) -> Result<String> {
    String::from_utf8(bytes.to_vec()).map_err(|_| Error::Parse("file is not valid UTF-8 text".into()))
}

fn num<T: std::str::FromStr>(tok: Option<&str>, line: usize) -> Result<T> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::Parse(format!("line {line}: expected a number")))
}

fn fan(poly: &[usize], faces: &mut Vec<[usize; 3]>, line: usize) -> Result<()> {
    if poly.len() < 3 {
        return Err(Error::Parse(format!("line {line}: face with fewer than 3 vertices")));
    }
    for i in 1..poly.len() - 1 {
        faces.push([poly[0], poly[i], poly[i + 1]]);
    }
    Ok(())
}

pub fn parse_obj(src: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut v = Vec::new();
    let mut f = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let mut tok = raw.split_whitespace();
        match tok.next() {
            Some("v") => v.push([num(tok.next(), line)?, num(tok.next(), line)?, num(tok.next(), line)?]),
            Some("f") => {
                let mut poly = Vec::new();
                for t in tok {
                    let idx: i64 = num(t.split('/').next(), line)?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        v.len() as i64 + idx
                    } else {
                        return Err(Error::Parse(format!("line {line}: OBJ indices start at 1")));
                    };
                    if resolved < 0 {
                        return Err(Error::Parse(format!("line {line}: vertex index {idx} out of range")));
                    }
                    poly.push(resolved as usize);
                }
                fan(&poly, &mut f, line)?;
            }
            _ => {}
        }
    }
    Ok((v, f))
}

pub fn parse_off(src: &str) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut lines = src
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (hl, header) = lines.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    let counts_inline = header.strip_prefix("OFF").ok_or_else(|| Error::Parse("missing OFF header".into()))?;
    let (cl, counts) = if counts_inline.trim().is_empty() {
        lines.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?
    } else {
        (hl, counts_inline)
    };
    let mut tok = counts.split_whitespace();
    let nv: usize = num(tok.next(), cl)?;
    let nf: usize = num(tok.next(), cl)?;
    let mut v = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (l, s) = lines.next().ok_or_else(|| Error::Parse("OFF: missing vertex lines".into()))?;
        let mut t = s.split_whitespace();
        v.push([num(t.next(), l)?, num(t.next(), l)?, num(t.next(), l)?]);
    }
    let mut f = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, s) = lines.next().ok_or_else(|| Error::Parse("OFF: missing face lines".into()))?;
        let mut t = s.split_whitespace();
        let k: usize = num(t.next(), l)?;
        let poly = (0..k).map(|_| num(t.next(), l)).collect::<Result<Vec<usize>>>()?;
        fan(&poly, &mut f, l)?;
    }
    Ok((v, f))
}

#[derive(Debug, Clone, Copy)]
enum PlyType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl PlyType {
    fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "char" | "int8" => PlyType::I8,
            "uchar" | "uint8" => PlyType::U8,
            "short" | "int16" => PlyType::I16,
            "ushort" | "uint16" => PlyType::U16,
            "int" | "int32" => PlyType::I32,
            "uint" | "uint32" => PlyType::U32,
            "float" | "float32" => PlyType::F32,
            "double" | "float64" => PlyType::F64,
            _ => return Err(Error::Parse(format!("PLY: unknown type '{s}'"))),
        })
    }

    fn size(self) -> usize {
        match self {
            PlyType::I8 | PlyType::U8 => 1,
            PlyType::I16 | PlyType::U16 => 2,
            PlyType::I32 | PlyType::U32 | PlyType::F32 => 4,
            PlyType::F64 => 8,
        }
    }

    fn read(self, b: &[u8]) -> f64 {
        match self {
            PlyType::I8 => b[0] as i8 as f64,
            PlyType::U8 => b[0] as f64,
            PlyType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            PlyType::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            PlyType::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug)]
enum PlyProp {
    Scalar(String, PlyType),
    List(String, PlyType, PlyType),
}

#[derive(Debug)]
struct PlyElement {
    name: String,
    count: usize,
    props: Vec<PlyProp>,
}

/// Parses ASCII or binary little-endian PLY; reads `vertex` (x, y, z) and
/// `face` (`vertex_indices` or `vertex_index`) elements.
pub fn parse_ply(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let end = bytes
        .windows(10)
        .position(|w| w == b"end_header")
        .ok_or_else(|| Error::Parse("PLY: missing end_header".into()))?;
    let mut body = end + 10;
    while body < bytes.len() && bytes[body] != b'\n' {
        body += 1;
    }
    body += 1;
    let header = std::str::from_utf8(&bytes[..end]).map_err(|_| Error::Parse("PLY: header is not text".into()))?;
    let mut lines = header.lines().map(str::trim);
    if lines.next() != Some("ply") {
        return Err(Error::Parse("PLY: missing magic".into()));
    }
    let mut binary = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for line in lines {
        let t: Vec<&str> = line.split_whitespace().collect();
        match t.as_slice() {
            ["format", "ascii", ..] => binary = Some(false),
            ["format", "binary_little_endian", ..] => binary = Some(true),
            ["format", f, ..] => return Err(Error::Parse(format!("PLY: unsupported format '{f}'"))),
            ["element", name, count] => elements.push(PlyElement {
                name: name.to_string(),
                count: count.parse().map_err(|_| Error::Parse("PLY: bad element count".into()))?,
                props: Vec::new(),
            }),
            ["property", "list", ct, it, name] => elements
                .last_mut()
                .ok_or_else(|| Error::Parse("PLY: property before element".into()))?
                .props
                .push(PlyProp::List(name.to_string(), PlyType::parse(ct)?, PlyType::parse(it)?)),
            ["property", ty, name] => elements
                .last_mut()
                .ok_or_else(|| Error::Parse("PLY: property before element".into()))?
                .props
                .push(PlyProp::Scalar(name.to_string(), PlyType::parse(ty)?)),
            _ => {}
        }
    }
    let binary = binary.ok_or_else(|| Error::Parse("PLY: missing format line".into()))?;
    let data = bytes.get(body..).unwrap_or(&[]);

    let mut v = Vec::new();
    let mut f = Vec::new();
    let mut record = |el: &PlyElement, values: &[Vec<f64>]| -> Result<()> {
        if el.name == "vertex" {
            let get = |n: &str| {
                el.props
                    .iter()
                    .position(|p| matches!(p, PlyProp::Scalar(name, _) if name == n))
                    .map(|i| values[i][0])
                    .ok_or_else(|| Error::Parse(format!("PLY: vertex has no '{n}'")))
            };
            v.push([get("x")?, get("y")?, get("z")?]);
        } else if el.name == "face" {
            let i = el
                .props
                .iter()
                .position(|p| matches!(p, PlyProp::List(n, _, _) if n == "vertex_indices" || n == "vertex_index"))
                .ok_or_else(|| Error::Parse("PLY: face has no vertex index list".into()))?;
            let poly = values[i]
                .iter()
                .map(|&x| if x >= 0.0 { Ok(x as usize) } else { Err(Error::Parse("PLY: negative index".into())) })
                .collect::<Result<Vec<_>>>()?;
            fan(&poly, &mut f, 0)?;
        }
        Ok(())
    };

    if binary {
        let mut pos = 0;
        let mut take = |n: usize| -> Result<&[u8]> {
            let s = data.get(pos..pos + n).ok_or_else(|| Error::Parse("PLY: truncated body".into()))?;
            pos += n;
            Ok(s)
        };
        for el in &elements {
            for _ in 0..el.count {
                let mut values = Vec::with_capacity(el.props.len());
                for p in &el.props {
                    match p {
                        PlyProp::Scalar(_, t) => values.push(vec![t.read(take(t.size())?)]),
                        PlyProp::List(_, ct, it) => {
                            let n = ct.read(take(ct.size())?) as usize;
                            let items = (0..n).map(|_| Ok(it.read(take(it.size())?))).collect::<Result<Vec<_>>>()?;
                            values.push(items);
                        }
                    }
                }
                record(el, &values)?;
            }
        }
    } else {
        let body = std::str::from_utf8(data).map_err(|_| Error::Parse("PLY: body is not text".into()))?;
        let mut tokens = body.split_whitespace();
        let mut next = || -> Result<f64> {
            tokens
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::Parse("PLY: truncated or malformed body".into()))
        };
        for el in &elements {
            for _ in 0..el.count {
                let mut values = Vec::with_capacity(el.props.len());
                for p in &el.props {
                    match p {
                        PlyProp::Scalar(..) => values.push(vec![next()?]),
                        PlyProp::List(..) => {
                            let n = next()? as usize;
                            values.push((0..n).map(|_| next()).collect::<Result<Vec<_>>>()?);
                        }
                    }
                }
                record(el, &values)?;
            }
        }
    }
    Ok((v, f))
}

/// Writes vertices with full `f64` round-trip precision.
pub fn write_obj<W: Write>(mesh: &TriangleMesh, mut w: W) -> std::io::Result<()> {
    for p in mesh.vertices() {
        writeln!(w, "v {:?} {:?} {:?}", p[0], p[1], p[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
    }
    w.flush()
}

pub fn write_off<W: Write>(mesh: &TriangleMesh, mut w: W) -> std::io::Result<()> {
    writeln!(w, "OFF\n{} {} 0", mesh.vertex_count(), mesh.face_count())?;
    for p in mesh.vertices() {
        writeln!(w, "{:?} {:?} {:?}", p[0], p[1], p[2])?;
    }
    for f in mesh.faces() {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    w.flush()
}

/// Writes a mesh, choosing the format from the extension (`obj`, `off`, `tvsm`).
pub fn save_mesh(mesh: &TriangleMesh, path: &Path) -> Result<()> {
    let bytes = match extension(path).as_str() {
        "off" => {
            let mut b = Vec::new();
            write_off(mesh, &mut b)?;
            b
        }
        "tvsm" => encode_tvsm(mesh.vertices(), mesh.faces()),
        _ => {
            let mut b = Vec::new();
            write_obj(mesh, &mut b)?;
            b
        }
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// `TVSM` container: magic, `u32` version, `u64` vertex and face counts,
/// `f64` xyz block, `u32` index block, all little-endian.
pub fn encode_tvsm(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 24 * vertices.len() + 12 * faces.len());
    out.extend_from_slice(TVSM_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(vertices.len() as u64).to_le_bytes());
    out.extend_from_slice(&(faces.len() as u64).to_le_bytes());
    for p in vertices {
        put_f64s(&mut out, p);
    }
    for f in faces {
        for &i in f {
            out.extend_from_slice(&(i as u32).to_le_bytes());
        }
    }
    out
}

pub fn decode_tvsm(bytes: &[u8]) -> Result<(Vec<Vec3>, Vec<[usize; 3]>)> {
    let mut r = ByteReader::new(bytes, "TVSM");
    r.magic(TVSM_MAGIC)?;
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Parse(format!("TVSM: unsupported version {version}")));
    }
    let nv = r.len()?;
    let nf = r.len()?;
    let flat = r.f64s(3 * nv)?;
    let vertices = flat.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        faces.push([r.u32()? as usize, r.u32()? as usize, r.u32()? as usize]);
    }
    r.finish()?;
    Ok((vertices, faces))
}

/// `TVSV` payload: magic, `u32` version, `u32` domain, `u64` rows,
/// `u64` channels, `f64` values.
pub fn encode_tvsv(signal: &Signal) -> Vec<u8> {
    let mut out = Vec::with_capacity(28 + 8 * signal.values().len());
    out.extend_from_slice(TVSV_MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&signal.domain().code().to_le_bytes());
    out.extend_from_slice(&(signal.len() as u64).to_le_bytes());
    out.extend_from_slice(&(signal.channels() as u64).to_le_bytes());
    put_f64s(&mut out, signal.values());
    out
}

pub fn decode_tvsv(bytes: &[u8]) -> Result<Signal> {
    let mut r = ByteReader::new(bytes, "TVSV");
    r.magic(TVSV_MAGIC)?;
    if r.u32()? != VERSION {
        return Err(Error::Parse("TVSV: unsupported version".into()));
    }
    let domain = Domain::from_code(r.u32()?).ok_or_else(|| Error::Parse("TVSV: bad domain".into()))?;
    let rows = r.len()?;
    let channels = r.len()?;
    let values = r.f64s(rows.checked_mul(channels).ok_or_else(|| Error::Parse("TVSV: overflow".into()))?)?;
    r.finish()?;
    Signal::new(domain, channels, values)
}

fn parse_table(src: &str) -> Result<Vec<Vec<f64>>> {
    src.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            l.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>().map_err(|_| Error::Parse(format!("line {i}: bad number '{t}'"))))
                .collect()
        })
        .collect()
}

/// Reads a signal table: one row per element, one column per channel.
pub fn read_signal(path: &Path, domain: Domain) -> Result<Signal> {
    let bytes = read_file(path)?;
    if bytes.starts_with(TVSV_MAGIC) {
        let s = decode_tvsv(&bytes)?;
        if s.domain() != domain {
            return Err(Error::InvalidSignal(format!("{}: signal lives on {}, expected {domain}", path.display(), s.domain())));
        }
        return Ok(s);
    }
    let rows = parse_table(&text(&bytes)?)?;
    let channels = rows.first().map_or(1, Vec::len);
    if rows.iter().any(|r| r.len() != channels) {
        return Err(Error::Parse(format!("{}: rows have differing column counts", path.display())));
    }
    Signal::new(domain, channels, rows.into_iter().flatten().collect())
}

pub fn write_signal<W: Write>(signal: &Signal, mut w: W) -> std::io::Result<()> {
    for i in 0..signal.len() {
        let row: Vec<String> = signal.row(i).iter().map(|v| format!("{v:?}")).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    w.flush()
}

/// One non-negative integer per line.
pub fn read_index_map(path: &Path) -> Result<Vec<usize>> {
    let src = text(&read_file(path)?)?;
    src.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse().map_err(|_| Error::Parse(format!("{}: line {}: expected an index", path.display(), i + 1)))
        })
        .collect()
}

pub fn write_spectrum_csv<W: Write>(spectrum: &[(f64, f64)], mut w: W) -> std::io::Result<()> {
    writeln!(w, "t,s")?;
    for (t, s) in spectrum {
        writeln!(w, "{t:?},{s:?}")?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shapes::icosphere;

    #[test]
    fn off_single_triangle() {
        let (v, f) = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        let m = TriangleMesh::new(v, f).unwrap();
        assert_eq!(m.face_area(), &[0.5]);
        assert_eq!(m.face_normal()[0], [0.0, 0.0, 1.0]);
    }

    #[test]
    fn off_index_out_of_range() {
        let (v, f) = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 3\n").unwrap();
        assert!(matches!(TriangleMesh::new(v, f), Err(Error::Parse(_))));
    }

    #[test]
    fn obj_quads_and_negative_indices() {
        let src = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf -4/1 -3/2 -2/3 -1/4\n";
        let (v, f) = parse_obj(src).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn tvsm_round_trip_is_bit_exact() {
        let m = crate::shapes::perturb(&icosphere(1), 0.01, 3);
        let (v, f) = decode_tvsm(&encode_tvsm(m.vertices(), m.faces())).unwrap();
        assert_eq!(v, m.vertices());
        assert_eq!(f, m.faces());
    }

    #[test]
    fn obj_round_trip() {
        let m = crate::shapes::perturb(&icosphere(1), 0.01, 4);
        let mut buf = Vec::new();
        write_obj(&m, &mut buf).unwrap();
        let (v, _) = parse_obj(std::str::from_utf8(&buf).unwrap()).unwrap();
        for (a, b) in v.iter().zip(m.vertices()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn binary_ply() {
        let mut b = b"ply\nformat binary_little_endian 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n".to_vec();
        for p in [[0f32, 0., 0.], [1., 0., 0.], [0., 1., 0.]] {
            for x in p {
                b.extend_from_slice(&x.to_le_bytes());
            }
        }
        b.push(3);
        for i in [0i32, 1, 2] {
            b.extend_from_slice(&i.to_le_bytes());
        }
        let (v, f) = parse_ply(&b).unwrap();
        assert_eq!(v[1], [1.0, 0.0, 0.0]);
        assert_eq!(f, vec![[0, 1, 2]]);
        b.pop();
        assert!(parse_ply(&b).is_err());
    }

    #[test]
    fn tvsv_round_trip() {
        let s = Signal::new(Domain::Faces, 2, vec![1.0, -2.5, 3.0, 1e-300]).unwrap();
        assert_eq!(decode_tvsv(&encode_tvsv(&s)).unwrap(), s);
        assert!(decode_tvsv(&encode_tvsv(&s)[..10]).is_err());
    }
}
