//! Deterministic cloud ingestion and serialization.
//!
//! Two text formats share one column vocabulary:
//! `x y z r g b sem inst offx offy offz f0..f(k-1)`.
//!
//! * Columnar: a header line of space-separated column names, then one
//!   point per line. `x y z` are mandatory.
//! * ASCII PLY: a standard `ply` / `format ascii 1.0` header whose vertex
//!   properties are mapped by name using the same vocabulary.
//!
//! Floats are written with `Display`, which round-trips exactly, so a
//! save/load cycle reproduces the cloud bit for bit. Semantic score rows
//! are not part of the vocabulary and do not survive serialization.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cloud::{PointCloud, RowMatrix};
use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum CloudFormat {
    #[default]
    Columnar,
    #[serde(rename = "ply")]
    PlyAscii,
}

impl std::str::FromStr for CloudFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "columnar" => Ok(Self::Columnar),
            "ply" => Ok(Self::PlyAscii),
            other => Err(Error::InvalidInput(format!(
                "unknown cloud format {other:?}; expected columnar or ply"
            ))),
        }
    }
}

/// Where each logical column sits inside a data row.
struct Layout {
    pos: [usize; 3],
    rgb: Option<[usize; 3]>,
    sem: Option<usize>,
    inst: Option<usize>,
    off: Option<[usize; 3]>,
    /// Row slots of f0..f(k-1), in feature order.
    features: Vec<usize>,
    width: usize,
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

impl Layout {
    fn from_names(names: &[&str], path: &Path, line: usize) -> Result<Self> {
        let slot = |name: &str| -> Option<usize> { names.iter().position(|&n| n == name) };
        let mut used = vec![false; names.len()];
        let mut take = |name: &str| -> Option<usize> {
            let i = slot(name)?;
            used[i] = true;
            Some(i)
        };

        let triple = |a: Option<usize>, b: Option<usize>, c: Option<usize>, what: &str| match (
            a, b, c,
        ) {
            (Some(x), Some(y), Some(z)) => Ok(Some([x, y, z])),
            (None, None, None) => Ok(None),
            _ => Err(parse_err(
                path,
                line,
                format!("{what} columns must appear all together or not at all"),
            )),
        };

        let pos = triple(take("x"), take("y"), take("z"), "x/y/z")?
            .ok_or_else(|| parse_err(path, line, "columns x y z are mandatory"))?;
        let rgb = triple(take("r"), take("g"), take("b"), "r/g/b")?;
        let off = triple(take("offx"), take("offy"), take("offz"), "offx/offy/offz")?;
        let sem = take("sem");
        let inst = take("inst");

        let mut features = Vec::new();
        while let Some(i) = take(&format!("f{}", features.len())) {
            features.push(i);
        }

        for (i, &name) in names.iter().enumerate() {
            if !used[i] {
                return Err(parse_err(
                    path,
                    line,
                    format!(
                        "unknown or out-of-order column {name:?} (vocabulary: \
                         x y z r g b sem inst offx offy offz f0..fk)"
                    ),
                ));
            }
        }

        Ok(Self {
            pos,
            rgb,
            sem,
            inst,
            off,
            features,
            width: names.len(),
        })
    }
}

/// Accumulates parsed rows into columns.
struct Builder<S> {
    positions: Vec<Vec3<S>>,
    colors: Vec<Vec3<S>>,
    labels: Vec<u32>,
    insts: Vec<i32>,
    offsets: Vec<Vec3<S>>,
    features: Vec<S>,
}

impl<S: Scalar> Builder<S> {
    fn new() -> Self {
        Self {
            positions: Vec::new(),
            colors: Vec::new(),
            labels: Vec::new(),
            insts: Vec::new(),
            offsets: Vec::new(),
            features: Vec::new(),
        }
    }

    fn push_row(&mut self, layout: &Layout, tokens: &[&str], path: &Path, line: usize) -> Result<()> {
        if tokens.len() != layout.width {
            return Err(parse_err(
                path,
                line,
                format!("expected {} columns, found {}", layout.width, tokens.len()),
            ));
        }
        let scalar = |i: usize| -> Result<S> {
            tokens[i]
                .parse::<S>()
                .map_err(|_| parse_err(path, line, format!("bad number {:?}", tokens[i])))
        };
        let integer = |i: usize| -> Result<i64> {
            tokens[i]
                .parse::<i64>()
                .map_err(|_| parse_err(path, line, format!("bad integer {:?}", tokens[i])))
        };
        let vec3 = |idx: [usize; 3]| -> Result<Vec3<S>> {
            Ok([scalar(idx[0])?, scalar(idx[1])?, scalar(idx[2])?])
        };

        self.positions.push(vec3(layout.pos)?);
        if let Some(idx) = layout.rgb {
            self.colors.push(vec3(idx)?);
        }
        if let Some(i) = layout.sem {
            let v = integer(i)?;
            if v < 0 || v > u32::MAX as i64 {
                return Err(parse_err(path, line, format!("sem out of range: {v}")));
            }
            self.labels.push(v as u32);
        }
        if let Some(i) = layout.inst {
            let v = integer(i)?;
            if v < i32::MIN as i64 || v > i32::MAX as i64 {
                return Err(parse_err(path, line, format!("inst out of range: {v}")));
            }
            self.insts.push(v as i32);
        }
        if let Some(idx) = layout.off {
            self.offsets.push(vec3(idx)?);
        }
        for &i in &layout.features {
            self.features.push(scalar(i)?);
        }
        Ok(())
    }

    fn finish(self, layout: &Layout) -> Result<PointCloud<S>> {
        let n = self.positions.len();
        let cloud = PointCloud {
            positions: self.positions,
            colors: layout.rgb.map(|_| self.colors),
            semantic_scores: None,
            semantic_labels: layout.sem.map(|_| self.labels),
            offsets: layout.off.map(|_| self.offsets),
            features: if layout.features.is_empty() {
                None
            } else {
                Some(RowMatrix::new(n, layout.features.len(), self.features)?)
            },
            gt_instance_ids: layout.inst.map(|_| self.insts),
        };
        cloud.validate()?;
        check_finite(&cloud)?;
        Ok(cloud)
    }
}

fn check_finite<S: Scalar>(cloud: &PointCloud<S>) -> Result<()> {
    let scan = |what: &'static str, vals: &[Vec3<S>]| -> Result<()> {
        for (i, v) in vals.iter().enumerate() {
            if !crate::geom::is_finite(*v) {
                return Err(Error::NonFinite { what, index: i });
            }
        }
        Ok(())
    };
    scan("positions", &cloud.positions)?;
    if let Some(c) = &cloud.colors {
        scan("colors", c)?;
    }
    if let Some(o) = &cloud.offsets {
        scan("offsets", o)?;
    }
    if let Some(f) = &cloud.features {
        for (i, row) in f.iter_rows().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    what: "features",
                    index: i,
                });
            }
        }
    }
    Ok(())
}

pub fn load_cloud<S: Scalar>(path: impl AsRef<Path>, format: CloudFormat) -> Result<PointCloud<S>> {
    let path = path.as_ref();
    let reader = BufReader::new(std::fs::File::open(path)?);
    match format {
        CloudFormat::Columnar => load_columnar(reader, path),
        CloudFormat::PlyAscii => load_ply(reader, path),
    }
}

fn load_columnar<S: Scalar>(reader: impl BufRead, path: &Path) -> Result<PointCloud<S>> {
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file; expected header line"))??;
    let names: Vec<&str> = header.split_whitespace().collect();
    let layout = Layout::from_names(&names, path, 1)?;

    let mut b = Builder::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        b.push_row(&layout, &tokens, path, i + 2)?;
    }
    b.finish(&layout)
}

fn load_ply<S: Scalar>(reader: impl BufRead, path: &Path) -> Result<PointCloud<S>> {
    let mut lines = reader.lines().enumerate();
    let mut next_line = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(parse_err(path, 0, "unexpected end of file in header")),
        }
    };

    let (ln, magic) = next_line()?;
    if magic.trim() != "ply" {
        return Err(parse_err(path, ln, "not a PLY file (missing `ply` magic)"));
    }
    let (ln, fmt) = next_line()?;
    if fmt.trim() != "format ascii 1.0" {
        return Err(parse_err(path, ln, "only `format ascii 1.0` is supported"));
    }

    let mut vertex_count: Option<usize> = None;
    let mut names: Vec<String> = Vec::new();
    loop {
        let (ln, line) = next_line()?;
        let line = line.trim().to_string();
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("comment") => continue,
            Some("element") => {
                let kind = parts.next().unwrap_or("");
                if kind != "vertex" {
                    return Err(parse_err(path, ln, format!("unsupported element {kind:?}")));
                }
                if vertex_count.is_some() {
                    return Err(parse_err(path, ln, "duplicate vertex element"));
                }
                let count: usize = parts
                    .next()
                    .and_then(|c| c.parse().ok())
                    .ok_or_else(|| parse_err(path, ln, "bad vertex count"))?;
                vertex_count = Some(count);
            }
            Some("property") => {
                if vertex_count.is_none() {
                    return Err(parse_err(path, ln, "property before vertex element"));
                }
                let ty = parts.next().unwrap_or("");
                if ty == "list" {
                    return Err(parse_err(path, ln, "list properties are not supported"));
                }
                let name = parts
                    .next()
                    .ok_or_else(|| parse_err(path, ln, "property without a name"))?;
                names.push(name.to_string());
            }
            Some("end_header") => break,
            other => {
                return Err(parse_err(path, ln, format!("unexpected header token {other:?}")));
            }
        }
    }
    let count =
        vertex_count.ok_or_else(|| parse_err(path, 0, "header has no vertex element"))?;
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let layout = Layout::from_names(&name_refs, path, 1)?;

    let mut b = Builder::new();
    let mut seen = 0usize;
    while seen < count {
        let (ln, line) = next_line()?;
        if line.trim().is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        b.push_row(&layout, &tokens, path, ln)?;
        seen += 1;
    }
    b.finish(&layout)
}

pub fn save_cloud<S: Scalar>(
    path: impl AsRef<Path>,
    cloud: &PointCloud<S>,
    format: CloudFormat,
) -> Result<()> {
    cloud.validate()?;
    let path: &Path = path.as_ref();
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let body = match format {
        CloudFormat::Columnar => render_columnar(cloud),
        CloudFormat::PlyAscii => render_ply(cloud),
    };
    out.write_all(body.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn column_names<S: Scalar>(cloud: &PointCloud<S>) -> Vec<String> {
    let mut names = vec!["x".into(), "y".into(), "z".into()];
    if cloud.colors.is_some() {
        names.extend(["r".into(), "g".into(), "b".into()]);
    }
    if cloud.semantic_labels.is_some() {
        names.push("sem".into());
    }
    if cloud.gt_instance_ids.is_some() {
        names.push("inst".into());
    }
    if cloud.offsets.is_some() {
        names.extend(["offx".into(), "offy".into(), "offz".into()]);
    }
    if let Some(f) = &cloud.features {
        for k in 0..f.cols() {
            names.push(format!("f{k}"));
        }
    }
    names
}

fn render_row<S: Scalar>(cloud: &PointCloud<S>, i: usize, row: &mut String) {
    let p = cloud.positions[i];
    write!(row, "{} {} {}", p[0], p[1], p[2]).unwrap();
    if let Some(c) = &cloud.colors {
        write!(row, " {} {} {}", c[i][0], c[i][1], c[i][2]).unwrap();
    }
    if let Some(l) = &cloud.semantic_labels {
        write!(row, " {}", l[i]).unwrap();
    }
    if let Some(g) = &cloud.gt_instance_ids {
        write!(row, " {}", g[i]).unwrap();
    }
    if let Some(o) = &cloud.offsets {
        write!(row, " {} {} {}", o[i][0], o[i][1], o[i][2]).unwrap();
    }
    if let Some(f) = &cloud.features {
        for v in f.row(i) {
            write!(row, " {v}").unwrap();
        }
    }
    row.push('\n');
}

fn render_columnar<S: Scalar>(cloud: &PointCloud<S>) -> String {
    let mut out = column_names(cloud).join(" ");
    out.push('\n');
    for i in 0..cloud.len() {
        render_row(cloud, i, &mut out);
    }
    out
}

fn render_ply<S: Scalar>(cloud: &PointCloud<S>) -> String {
    let mut out = String::from("ply\nformat ascii 1.0\n");
    writeln!(out, "element vertex {}", cloud.len()).unwrap();
    for name in column_names(cloud) {
        let ty = if name == "sem" || name == "inst" { "int" } else { "double" };
        writeln!(out, "property {ty} {name}").unwrap();
    }
    out.push_str("end_header\n");
    for i in 0..cloud.len() {
        render_row(cloud, i, &mut out);
    }
    out
}
