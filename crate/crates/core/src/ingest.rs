//! Streaming point readers for whitespace XYZ text and PLY (ascii and
//! binary little-endian), plus writers used for round trips and fixtures.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Vec3};

/// Fraction of records that may be malformed before a read fails.
pub const DEFAULT_MALFORMED_TOLERANCE: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointFormat {
    Xyz,
    PlyAscii,
    PlyBinaryLe,
}

impl PointFormat {
    /// Guesses the format from the file extension and, for PLY, the header.
    pub fn detect(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        match ext.as_deref() {
            Some("xyz") | Some("txt") | Some("pts") => Ok(Self::Xyz),
            Some("ply") => {
                let mut r = BufReader::new(File::open(path)?);
                Ok(read_ply_header(&mut r)?.format)
            }
            other => Err(Error::UnrecognizedFormat(
                other.unwrap_or("<none>").to_string(),
            )),
        }
    }
}

/// What to subtract from every decoded position.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum OffsetPolicy {
    #[default]
    None,
    Fixed(Vec3),
}

#[derive(Debug, Clone)]
pub struct PointSource {
    pub path: PathBuf,
    /// Detected from the path when `None`.
    pub format: Option<PointFormat>,
    /// Record count if known ahead of time (PLY headers always declare one).
    pub declared_count: Option<u64>,
    pub offset: OffsetPolicy,
    pub malformed_tolerance: f64,
}

impl PointSource {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            format: None,
            declared_count: None,
            offset: OffsetPolicy::None,
            malformed_tolerance: DEFAULT_MALFORMED_TOLERANCE,
        }
    }

    pub fn open(&self) -> Result<PointReader<BufReader<File>>> {
        let format = match self.format {
            Some(f) => f,
            None => PointFormat::detect(&self.path)?,
        };
        let r = BufReader::with_capacity(1 << 16, File::open(&self.path)?);
        let mut reader = PointReader::new(r, format)?;
        reader.tolerance = self.malformed_tolerance;
        reader.offset = match self.offset {
            OffsetPolicy::None => Vec3::ZERO,
            OffsetPolicy::Fixed(o) => o,
        };
        if reader.declared.is_none() {
            reader.declared = self.declared_count;
        }
        Ok(reader)
    }
}

/// Opens `path` with default settings and returns a point stream.
pub fn read_points(path: impl AsRef<Path>) -> Result<PointReader<BufReader<File>>> {
    PointSource::new(path.as_ref()).open()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "char" | "int8" => Self::I8,
            "uchar" | "uint8" => Self::U8,
            "short" | "int16" => Self::I16,
            "ushort" | "uint16" => Self::U16,
            "int" | "int32" => Self::I32,
            "uint" | "uint32" => Self::U32,
            "float" | "float32" => Self::F32,
            "double" | "float64" => Self::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Self::I8 | Self::U8 => 1,
            Self::I16 | Self::U16 => 2,
            Self::I32 | Self::U32 | Self::F32 => 4,
            Self::F64 => 8,
        }
    }

    fn decode(self, b: &[u8]) -> f64 {
        match self {
            Self::I8 => b[0] as i8 as f64,
            Self::U8 => b[0] as f64,
            Self::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Self::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Self::I32 => i32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::U32 => u32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F32 => f32::from_le_bytes(b[..4].try_into().unwrap()) as f64,
            Self::F64 => f64::from_le_bytes(b[..8].try_into().unwrap()),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar(String, Scalar),
    List { count: Scalar, item: Scalar },
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: u64,
    props: Vec<Property>,
}

#[derive(Debug, Clone)]
struct PlyHeader {
    format: PointFormat,
    elements: Vec<Element>,
}

fn malformed(msg: impl Into<String>) -> Error {
    Error::Malformed(msg.into())
}

fn read_ply_header(r: &mut impl BufRead) -> Result<PlyHeader> {
    let mut line = String::new();
    let next = |r: &mut dyn BufRead, line: &mut String| -> Result<bool> {
        line.clear();
        Ok(r.read_line(line)? > 0)
    };
    if !next(r, &mut line)? || line.trim_end() != "ply" {
        return Err(Error::UnrecognizedFormat("missing ply magic".into()));
    }
    let mut format = None;
    let mut elements: Vec<Element> = Vec::new();
    loop {
        if !next(r, &mut line)? {
            return Err(malformed("ply header not terminated"));
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match toks.as_slice() {
            ["end_header"] => break,
            ["comment", ..] | ["obj_info", ..] | [] => {}
            ["format", f, _] => {
                format = Some(match *f {
                    "ascii" => PointFormat::PlyAscii,
                    "binary_little_endian" => PointFormat::PlyBinaryLe,
                    other => return Err(Error::UnrecognizedFormat(format!("ply {other}"))),
                })
            }
            ["element", name, n] => elements.push(Element {
                name: name.to_string(),
                count: n.parse().map_err(|_| malformed("bad element count"))?,
                props: Vec::new(),
            }),
            ["property", "list", c, i, _] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before element"))?;
                let (count, item) = Scalar::parse(c)
                    .zip(Scalar::parse(i))
                    .ok_or_else(|| malformed("bad list type"))?;
                e.props.push(Property::List { count, item });
            }
            ["property", t, name] => {
                let e = elements
                    .last_mut()
                    .ok_or_else(|| malformed("property before element"))?;
                let t = Scalar::parse(t).ok_or_else(|| malformed(format!("unknown type {t}")))?;
                e.props.push(Property::Scalar(name.to_string(), t));
            }
            _ => return Err(malformed(format!("bad header line: {}", line.trim_end()))),
        }
    }
    let format = format.ok_or_else(|| malformed("ply format line missing"))?;
    Ok(PlyHeader { format, elements })
}

/// Where x, y and z sit inside a vertex record.
#[derive(Debug, Clone)]
struct VertexLayout {
    props: Vec<Property>,
    xyz: [usize; 3],
}

impl VertexLayout {
    fn from_element(e: &Element) -> Result<Self> {
        let find = |n: &str| {
            e.props.iter().position(|p| match p {
                Property::Scalar(name, t) => name == n && matches!(t, Scalar::F32 | Scalar::F64),
                _ => false,
            })
        };
        match (find("x"), find("y"), find("z")) {
            (Some(x), Some(y), Some(z)) => Ok(Self {
                props: e.props.clone(),
                xyz: [x, y, z],
            }),
            _ => Err(malformed("vertex element lacks float x/y/z properties")),
        }
    }
}

enum Decoder {
    Xyz,
    PlyAscii {
        layout: VertexLayout,
    },
    PlyBinary {
        layout: VertexLayout,
        fixed: Option<usize>,
    },
}

/// Iterator of decoded points. Malformed records are skipped and counted;
/// the stream fails once they exceed the tolerance.
pub struct PointReader<R: BufRead> {
    inner: R,
    decoder: Decoder,
    /// Remaining vertex records for PLY input.
    remaining: Option<u64>,
    declared: Option<u64>,
    tolerance: f64,
    offset: Vec3,
    records: u64,
    malformed: u64,
    line: String,
    buf: Vec<u8>,
    done: bool,
}

impl<R: BufRead> PointReader<R> {
    pub fn new(mut inner: R, format: PointFormat) -> Result<Self> {
        let (decoder, remaining) = match format {
            PointFormat::Xyz => (Decoder::Xyz, None),
            PointFormat::PlyAscii | PointFormat::PlyBinaryLe => {
                let h = read_ply_header(&mut inner)?;
                let vi = h
                    .elements
                    .iter()
                    .position(|e| e.name == "vertex")
                    .ok_or_else(|| malformed("no vertex element"))?;
                for e in &h.elements[..vi] {
                    skip_element(&mut inner, h.format, e)?;
                }
                let layout = VertexLayout::from_element(&h.elements[vi])?;
                let count = h.elements[vi].count;
                let dec = if h.format == PointFormat::PlyAscii {
                    Decoder::PlyAscii { layout }
                } else {
                    let fixed = layout
                        .props
                        .iter()
                        .map(|p| match p {
                            Property::Scalar(_, t) => Some(t.size()),
                            Property::List { .. } => None,
                        })
                        .sum::<Option<usize>>();
                    Decoder::PlyBinary { layout, fixed }
                };
                (dec, Some(count))
            }
        };
        Ok(Self {
            inner,
            decoder,
            declared: remaining,
            remaining,
            tolerance: DEFAULT_MALFORMED_TOLERANCE,
            offset: Vec3::ZERO,
            records: 0,
            malformed: 0,
            line: String::new(),
            buf: Vec::new(),
            done: false,
        })
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn declared_count(&self) -> Option<u64> {
        self.declared
    }

    /// Records seen so far, including malformed ones.
    pub fn records(&self) -> u64 {
        self.records
    }

    pub fn malformed(&self) -> u64 {
        self.malformed
    }

    fn over_tolerance(&self, total: u64) -> bool {
        self.malformed as f64 > self.tolerance * total as f64
    }

    /// `Ok(None)` at end of input, `Ok(Some(None))` for a skipped record.
    fn next_record(&mut self) -> Result<Option<Option<Point3>>> {
        if let Some(0) = self.remaining {
            return Ok(None);
        }
        let p = match &self.decoder {
            Decoder::Xyz => loop {
                self.line.clear();
                if self.inner.read_line(&mut self.line)? == 0 {
                    return Ok(None);
                }
                let t = self.line.trim();
                if t.is_empty() || t.starts_with('#') || t.starts_with("//") {
                    continue;
                }
                let mut it = t
                    .split(|c: char| c.is_whitespace() || c == ',')
                    .filter(|s| !s.is_empty());
                let mut v = [0.0; 3];
                let mut ok = true;
                for c in &mut v {
                    match it.next().map(str::parse::<f64>) {
                        Some(Ok(x)) => *c = x,
                        _ => ok = false,
                    }
                }
                break ok.then(|| Vec3::from_array(v));
            },
            Decoder::PlyAscii { layout } => {
                self.line.clear();
                if self.inner.read_line(&mut self.line)? == 0 {
                    return Err(malformed("ply body ends before declared vertex count"));
                }
                parse_ascii_vertex(&self.line, layout)
            }
            Decoder::PlyBinary { layout, fixed } => {
                read_binary_vertex(&mut self.inner, &mut self.buf, layout, *fixed)?
            }
        };
        if let Some(r) = &mut self.remaining {
            *r -= 1;
        }
        self.records += 1;
        Ok(Some(p.filter(|p| p.is_finite()).map(|p| p - self.offset)))
    }
}

fn read_binary_vertex(
    inner: &mut impl Read,
    buf: &mut Vec<u8>,
    layout: &VertexLayout,
    fixed: Option<usize>,
) -> Result<Option<Point3>> {
    let mut v = [0.0; 3];
    let eof = |e: io::Error| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            malformed("ply body ends before declared vertex count")
        } else {
            e.into()
        }
    };
    if let Some(n) = fixed {
        buf.resize(n, 0);
        inner.read_exact(buf).map_err(eof)?;
        let mut o = 0;
        for (pi, p) in layout.props.iter().enumerate() {
            if let Property::Scalar(_, t) = p {
                if let Some(axis) = layout.xyz.iter().position(|&x| x == pi) {
                    v[axis] = t.decode(&buf[o..]);
                }
                o += t.size();
            }
        }
    } else {
        let mut b = [0u8; 8];
        for (pi, p) in layout.props.iter().enumerate() {
            match p {
                Property::Scalar(_, t) => {
                    inner.read_exact(&mut b[..t.size()]).map_err(eof)?;
                    if let Some(axis) = layout.xyz.iter().position(|&x| x == pi) {
                        v[axis] = t.decode(&b);
                    }
                }
                Property::List { count, item } => {
                    inner.read_exact(&mut b[..count.size()]).map_err(eof)?;
                    let n = count.decode(&b) as usize;
                    let mut skip = vec![0u8; n * item.size()];
                    inner.read_exact(&mut skip).map_err(eof)?;
                }
            }
        }
    }
    Ok(Some(Vec3::from_array(v)))
}

fn parse_ascii_vertex(line: &str, layout: &VertexLayout) -> Option<Point3> {
    let mut toks = line.split_whitespace();
    let mut v = [0.0; 3];
    for (pi, p) in layout.props.iter().enumerate() {
        match p {
            Property::Scalar(..) => {
                let t = toks.next()?;
                if let Some(axis) = layout.xyz.iter().position(|&x| x == pi) {
                    v[axis] = t.parse().ok()?;
                }
            }
            Property::List { .. } => {
                let n: usize = toks.next()?.parse().ok()?;
                for _ in 0..n {
                    toks.next()?;
                }
            }
        }
    }
    Some(Vec3::from_array(v))
}

fn skip_element(r: &mut impl BufRead, format: PointFormat, e: &Element) -> Result<()> {
    let mut line = String::new();
    for _ in 0..e.count {
        if format == PointFormat::PlyAscii {
            line.clear();
            r.read_line(&mut line)?;
            continue;
        }
        let mut b = [0u8; 8];
        for p in &e.props {
            match p {
                Property::Scalar(_, t) => r.read_exact(&mut b[..t.size()])?,
                Property::List { count, item } => {
                    r.read_exact(&mut b[..count.size()])?;
                    let n = count.decode(&b) as usize;
                    io::copy(
                        &mut r.by_ref().take((n * item.size()) as u64),
                        &mut io::sink(),
                    )?;
                }
            }
        }
    }
    Ok(())
}

impl<R: BufRead> Iterator for PointReader<R> {
    type Item = Result<Point3>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            match self.next_record() {
                Ok(Some(Some(p))) => return Some(Ok(p)),
                Ok(Some(None)) => {
                    self.malformed += 1;
                    if let Some(d) = self.declared {
                        if self.over_tolerance(d) {
                            self.done = true;
                            return Some(Err(malformed(format!(
                                "{} malformed records exceed tolerance",
                                self.malformed
                            ))));
                        }
                    }
                }
                Ok(None) => {
                    self.done = true;
                    if self.over_tolerance(self.records) {
                        return Some(Err(malformed(format!(
                            "{} of {} records malformed",
                            self.malformed, self.records
                        ))));
                    }
                    return None;
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

/// Writes points in the given format. PLY output uses `float` positions for
/// binary and shortest round-trip decimal text for ascii.
pub fn write_points<W: Write>(w: W, format: PointFormat, points: &[Point3]) -> Result<()> {
    let mut w = BufWriter::new(w);
    match format {
        PointFormat::Xyz => {
            for p in points {
                writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
            }
        }
        PointFormat::PlyAscii => {
            write!(
                w,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nend_header\n",
                points.len()
            )?;
            for p in points {
                writeln!(w, "{} {} {}", p.x, p.y, p.z)?;
            }
        }
        PointFormat::PlyBinaryLe => {
            write!(
                w,
                "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
                points.len()
            )?;
            for p in points {
                for c in [p.x, p.y, p.z] {
                    w.write_all(&(c as f32).to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_points_to(
    path: impl AsRef<Path>,
    format: PointFormat,
    points: &[Point3],
) -> Result<()> {
    write_points(File::create(path)?, format, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read_all(bytes: &[u8], f: PointFormat) -> Result<Vec<Point3>> {
        PointReader::new(bytes, f)?.collect()
    }

    #[test]
    fn three_line_xyz() {
        let pts = read_all(b"1 2 3\n4.5 -6 7e2\n0 0 0\n", PointFormat::Xyz).unwrap();
        assert_eq!(
            pts,
            vec![
                Vec3::new(1.0, 2.0, 3.0),
                Vec3::new(4.5, -6.0, 700.0),
                Vec3::ZERO
            ]
        );
    }

    #[test]
    fn ascii_ply_ignores_extras() {
        let src = b"ply\nformat ascii 1.0\ncomment x\nelement vertex 2\nproperty float x\nproperty uchar red\nproperty float y\nproperty float z\nproperty list uchar int idx\nelement face 1\nproperty list uchar int vertex_indices\nend_header\n1 255 2 3 2 7 8\n4 0 5 6 0\n3 0 1 1\n";
        let pts = read_all(src, PointFormat::PlyAscii).unwrap();
        assert_eq!(
            pts,
            vec![Vec3::new(1.0, 2.0, 3.0), Vec3::new(4.0, 5.0, 6.0)]
        );
    }

    #[test]
    fn xyz_malformed_beyond_tolerance_fails() {
        let r: Result<Vec<_>> = read_all(b"1 2 3\nnope\n4 5 6\n", PointFormat::Xyz);
        assert!(matches!(r, Err(Error::Malformed(_))));
        let ok: Vec<_> = PointReader::new(&b"1 2 3\nnope\n4 5 6\n"[..], PointFormat::Xyz)
            .unwrap()
            .with_tolerance(0.5)
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(ok.len(), 2);
    }

    #[test]
    fn unknown_ply_format_is_rejected() {
        let r = PointReader::new(
            &b"ply\nformat binary_big_endian 1.0\nend_header\n"[..],
            PointFormat::PlyBinaryLe,
        );
        assert!(matches!(r, Err(Error::UnrecognizedFormat(_))));
    }
}
