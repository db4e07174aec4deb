//! OFF mesh files: `OFF`, then `V F E`, then `V` lines `x y z`, then `F`
//! lines `3 i j k` (0-based, counter-clockwise seen from outside). `#`
//! starts a comment.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::bem::mesh::SurfaceMesh;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses an OFF document into validated mesh data.
pub fn read_off<T: Real, R: Read>(
    reader: R,
    label: &str,
    auto_flip: bool,
) -> Result<SurfaceMesh<T>> {
    // (line number, tokens) for every non-empty line
    let mut lines = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let body = line.split('#').next().unwrap_or("");
        let tokens: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
        if !tokens.is_empty() {
            lines.push((i + 1, tokens));
        }
    }
    let mut it = lines.into_iter();

    let (ln, header) = it.next().ok_or_else(|| parse_err(1, "empty file"))?;
    if header[0] != "OFF" {
        return Err(parse_err(
            ln,
            format!("expected `OFF` header, found `{}`", header[0]),
        ));
    }
    // Counts may share the header line.
    let (ln, counts) = if header.len() > 1 {
        (ln, header[1..].to_vec())
    } else {
        it.next()
            .ok_or_else(|| parse_err(ln, "missing counts line"))?
    };
    if counts.len() < 2 {
        return Err(parse_err(ln, "counts line must read `V F E`"));
    }
    let count = |s: &str| {
        s.parse::<usize>()
            .map_err(|_| parse_err(ln, format!("bad count `{s}`")))
    };
    let nv = count(&counts[0])?;
    let nf = count(&counts[1])?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, t) = it
            .next()
            .ok_or_else(|| parse_err(ln, "file ends before all vertices"))?;
        if t.len() < 3 {
            return Err(parse_err(ln, "vertex line needs three coordinates"));
        }
        let mut xyz = [T::zero(); 3];
        for (c, tok) in xyz.iter_mut().zip(&t) {
            let v: f64 = tok
                .parse()
                .map_err(|_| parse_err(ln, format!("bad coordinate `{tok}`")))?;
            *c = T::lit(v);
        }
        vertices.push(Vec3(xyz));
    }

    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, t) = it
            .next()
            .ok_or_else(|| parse_err(ln, "file ends before all faces"))?;
        let idx = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| parse_err(ln, format!("bad index `{tok}`")))
        };
        if t.is_empty() || idx(&t[0])? != 3 {
            return Err(parse_err(
                ln,
                "only triangular faces (`3 i j k`) are supported",
            ));
        }
        if t.len() < 4 {
            return Err(parse_err(ln, "face line needs three vertex indices"));
        }
        let face = [idx(&t[1])?, idx(&t[2])?, idx(&t[3])?];
        if face.iter().any(|&v| v >= nv) {
            return Err(parse_err(
                ln,
                format!("vertex index out of range (V = {nv})"),
            ));
        }
        faces.push(face);
    }

    SurfaceMesh::new(label, vertices, faces, auto_flip)
}

/// Loads an OFF file from disk.
pub fn load_mesh<T: Real>(path: impl AsRef<Path>, auto_flip: bool) -> Result<SurfaceMesh<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path)?;
    read_off(file, &path.display().to_string(), auto_flip)
}

/// Writes vertices and faces in OFF format.
pub fn write_off<T: Real, W: Write>(
    mut w: W,
    vertices: &[Vec3<T>],
    faces: &[[usize; 3]],
) -> Result<()> {
    writeln!(w, "OFF")?;
    writeln!(w, "{} {} 0", vertices.len(), faces.len())?;
    for v in vertices {
        writeln!(w, "{} {} {}", v[0], v[1], v[2])?;
    }
    for f in faces {
        writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
    }
    Ok(())
}
