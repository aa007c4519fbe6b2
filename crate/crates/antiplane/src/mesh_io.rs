//! Line-oriented ASCII mesh files.
//!
//! ```text
//! nodes N
//! x y            (N lines)
//! triangles M
//! i j k          (M lines, 0-based, counterclockwise)
//! bedges B
//! i j MECH ELEC  (B lines, MECH in G1 G2 G3, ELEC in Ga Gb -)
//! ```
//! Blank lines and lines starting with `#` are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use antiplane_core::mesh::{BoundaryEdge, ElecTag, Mesh, MechTag, SideTag, TaggingRule};

use crate::error::{input, CliError};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn mech_tag(s: &str) -> Option<MechTag> {
    match s {
        "G1" => Some(MechTag::G1),
        "G2" => Some(MechTag::G2),
        "G3" => Some(MechTag::G3),
        _ => None,
    }
}

fn elec_tag(s: &str) -> Option<Option<ElecTag>> {
    match s {
        "Ga" => Some(Some(ElecTag::Ga)),
        "Gb" => Some(Some(ElecTag::Gb)),
        "-" => Some(None),
        _ => None,
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_fields(&mut self, what: &str) -> Result<(usize, Vec<&'a str>), ParseError> {
        for (i, raw) in self.inner.by_ref() {
            self.last = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            return Ok((i + 1, line.split_whitespace().collect()));
        }
        Err(ParseError {
            line: self.last + 1,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn header(&mut self, keyword: &str) -> Result<usize, ParseError> {
        let (line, f) = self.next_fields(keyword)?;
        match f.as_slice() {
            [k, n] if *k == keyword => n.parse().map_err(|_| ParseError {
                line,
                message: format!("bad count '{n}' after '{keyword}'"),
            }),
            _ => Err(ParseError {
                line,
                message: format!("expected '{keyword} <count>'"),
            }),
        }
    }
}

fn field<T: FromStr>(line: usize, s: &str, what: &str) -> Result<T, ParseError> {
    s.parse().map_err(|_| ParseError {
        line,
        message: format!("bad {what} '{s}'"),
    })
}

fn arity(line: usize, f: &[&str], n: usize, what: &str) -> Result<(), ParseError> {
    if f.len() == n {
        Ok(())
    } else {
        Err(ParseError {
            line,
            message: format!("{what} needs {n} fields, found {}", f.len()),
        })
    }
}

/// Nodes, triangles and tagged boundary edges, unchecked.
pub type MeshParts = (Vec<[f64; 2]>, Vec<[usize; 3]>, Vec<BoundaryEdge>);

/// Parses the text format. Invariants are checked by [`Mesh::new`] afterwards.
pub fn parse_mesh_parts(text: &str) -> Result<MeshParts, ParseError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let n = lines.header("nodes")?;
    let mut nodes = Vec::with_capacity(n);
    for _ in 0..n {
        let (l, f) = lines.next_fields("node")?;
        arity(l, &f, 2, "node")?;
        nodes.push([field(l, f[0], "coordinate")?, field(l, f[1], "coordinate")?]);
    }
    let m = lines.header("triangles")?;
    let mut tris = Vec::with_capacity(m);
    for _ in 0..m {
        let (l, f) = lines.next_fields("triangle")?;
        arity(l, &f, 3, "triangle")?;
        let t: [usize; 3] = [field(l, f[0], "index")?, field(l, f[1], "index")?, field(l, f[2], "index")?];
        if let Some(bad) = t.iter().find(|&&i| i >= n) {
            return Err(ParseError {
                line: l,
                message: format!("node index {bad} out of range (nodes {n})"),
            });
        }
        tris.push(t);
    }
    let b = lines.header("bedges")?;
    let mut edges = Vec::with_capacity(b);
    for _ in 0..b {
        let (l, f) = lines.next_fields("boundary edge")?;
        arity(l, &f, 4, "boundary edge")?;
        let a: usize = field(l, f[0], "index")?;
        let c: usize = field(l, f[1], "index")?;
        if a >= n || c >= n {
            return Err(ParseError {
                line: l,
                message: format!("node index out of range (nodes {n})"),
            });
        }
        let mech = mech_tag(f[2]).ok_or_else(|| ParseError {
            line: l,
            message: format!("unknown mechanical tag '{}'", f[2]),
        })?;
        let elec = elec_tag(f[3]).ok_or_else(|| ParseError {
            line: l,
            message: format!("unknown electrical tag '{}'", f[3]),
        })?;
        edges.push(BoundaryEdge {
            nodes: [a, c],
            mech,
            elec,
        });
    }
    if let Ok((l, _)) = lines.next_fields("") {
        return Err(ParseError {
            line: l,
            message: "trailing content after boundary edges".into(),
        });
    }
    Ok((nodes, tris, edges))
}

pub fn load_mesh(path: &Path) -> Result<Mesh, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let (nodes, tris, edges) = parse_mesh_parts(&text).map_err(|e| CliError::Parse {
        path: path.to_path_buf(),
        line: e.line,
        message: e.message,
    })?;
    Mesh::new(nodes, tris, edges).map_err(input)
}

/// Round-trips exactly through [`parse_mesh_parts`].
pub fn format_mesh(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "nodes {}", mesh.node_count());
    for p in mesh.nodes() {
        let _ = writeln!(s, "{} {}", p[0], p[1]);
    }
    let _ = writeln!(s, "triangles {}", mesh.triangle_count());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "bedges {}", mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let elec = e.elec.map_or_else(|| "-".to_string(), |t| t.to_string());
        let _ = writeln!(s, "{} {} {} {}", e.nodes[0], e.nodes[1], e.mech, elec);
    }
    s
}

pub fn save_mesh(mesh: &Mesh, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, format_mesh(mesh)).map_err(|e| CliError::io(path, e))
}

/// `bottom=G3,top=G1:Ga,left=G2:Gb,right=G2:Gb`; all four sides required.
pub fn parse_tagging(spec: &str) -> Result<TaggingRule, String> {
    let mut sides: [Option<SideTag>; 4] = [None; 4];
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (side, tag) = part
            .split_once('=')
            .ok_or_else(|| format!("expected side=TAG, got '{part}'"))?;
        let (mech, elec) = match tag.split_once(':') {
            Some((m, e)) => (m, Some(e)),
            None => (tag, None),
        };
        let mech = mech_tag(mech).ok_or_else(|| format!("unknown mechanical tag '{mech}'"))?;
        let elec = match elec {
            None => None,
            Some(e) => elec_tag(e).ok_or_else(|| format!("unknown electrical tag '{e}'"))?,
        };
        let slot = match side {
            "bottom" => 0,
            "right" => 1,
            "top" => 2,
            "left" => 3,
            _ => return Err(format!("unknown side '{side}'")),
        };
        if sides[slot].is_some() {
            return Err(format!("side '{side}' tagged twice"));
        }
        sides[slot] = Some(SideTag::new(mech, elec));
    }
    let names = ["bottom", "right", "top", "left"];
    let get = |i: usize| sides[i].ok_or_else(|| format!("side '{}' not tagged", names[i]));
    Ok(TaggingRule {
        bottom: get(0)?,
        right: get(1)?,
        top: get(2)?,
        left: get(3)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use antiplane_core::mesh::generate_rect_mesh;

    #[test]
    fn round_trip() {
        let m = generate_rect_mesh(2.0, 1.0, 3, 2, &TaggingRule::standard()).unwrap();
        let (n, t, e) = parse_mesh_parts(&format_mesh(&m)).unwrap();
        assert_eq!(Mesh::new(n, t, e).unwrap(), m);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "nodes 3\n0 0\n1 0\n0 x\n";
        let e = parse_mesh_parts(text).unwrap_err();
        assert_eq!(e.line, 4);
        let text = "nodes 3\n0 0\n1 0\n0 1\ntriangles 1\n0 1 2\nbedges 1\n0 1 G4 -\n";
        assert_eq!(parse_mesh_parts(text).unwrap_err().line, 8);
        let text = "nodes 1\n0 0\ntriangles 1\n0 1 2\n";
        assert!(parse_mesh_parts(text).unwrap_err().message.contains("out of range"));
    }

    #[test]
    fn tagging_syntax() {
        let t = parse_tagging("bottom=G3,top=G1:Ga,left=G2:Gb,right=G2:Gb").unwrap();
        assert_eq!(t, TaggingRule::standard());
        assert!(parse_tagging("bottom=G3,top=G1:Ga,left=G2:Gb").is_err());
        assert!(parse_tagging("bottom=G5,top=G1:Ga,left=G2:Gb,right=G2:Gb").is_err());
        assert!(parse_tagging("bottom=G3,bottom=G3").is_err());
    }
}
