//! Text interchange formats. All floating-point values are written with 17
//! significant digits ([`crate::util::fmt17`]), which round-trips f64
//! exactly, and parsed back bit-identically.
//!
//! Domain file: line 1 `polygon N` followed by N `x y` lines, or line 1
//! `support N` followed by N support values on the implicit uniform grid.
//!
//! Mesh file: header `mesh V T E`, then V node lines `x y`, T triangle
//! lines `i j k`, and E boundary-edge lines `i j nx ny`.
//!
//! Config file: flat `key=value` lines; `#` starts a comment.
//!
//! The parsers validate structurally (counts, index ranges, domain and
//! mesh invariants) and are exercised by the fuzz targets under `fuzz/`.

use crate::geometry::{ConvexPolygon, Domain, SupportBody};
use crate::mesh::TriMesh;
use crate::oracles::OracleSpectrum;
use crate::sparse::Pattern;
use crate::util::{fmt17, Pt};
use crate::{Error, Result};

/// Upper bounds on record counts, so malformed headers cannot request
/// absurd allocations.
const MAX_POLYGON_VERTS: usize = 10_000;
const MAX_SUPPORT_SAMPLES: usize = 8_192;
const MAX_MESH_RECORDS: usize = 2_000_000;

// ---------------------------------------------------------------------------
// Domain files
// ---------------------------------------------------------------------------

pub fn write_domain(domain: &Domain) -> String {
    let mut out = String::new();
    match domain {
        Domain::Polygon(p) => {
            out.push_str(&format!("polygon {}\n", p.num_vertices()));
            for v in p.vertices() {
                out.push_str(&format!("{} {}\n", fmt17(v[0]), fmt17(v[1])));
            }
        }
        Domain::Smooth(b) => {
            out.push_str(&format!("support {}\n", b.grid_size()));
            for h in b.h_samples() {
                out.push_str(&format!("{}\n", fmt17(*h)));
            }
        }
    }
    out
}

pub fn parse_domain(text: &str) -> Result<Domain> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty domain file".into()))?;
    let mut parts = header.split_whitespace();
    let kind = parts.next().unwrap_or("");
    let n: usize = parts
        .next()
        .ok_or_else(|| Error::Parse("domain header needs a count".into()))?
        .parse()
        .map_err(|_| Error::Parse("domain count is not an integer".into()))?;
    if parts.next().is_some() {
        return Err(Error::Parse("trailing tokens in domain header".into()));
    }
    match kind {
        "polygon" => {
            if n < 3 || n > MAX_POLYGON_VERTS {
                return Err(Error::Parse(format!("polygon vertex count {n} out of range")));
            }
            let mut verts = Vec::with_capacity(n);
            for i in 0..n {
                let line =
                    lines.next().ok_or_else(|| Error::Parse(format!("missing vertex {i}")))?;
                verts.push(parse_point(line)?);
            }
            if lines.next().is_some() {
                return Err(Error::Parse("trailing lines after polygon vertices".into()));
            }
            Ok(Domain::Polygon(ConvexPolygon::new(verts)?))
        }
        "support" => {
            if n < 16 || n > MAX_SUPPORT_SAMPLES || n % 2 != 0 {
                return Err(Error::Parse(format!("support sample count {n} out of range")));
            }
            let mut h = Vec::with_capacity(n);
            for i in 0..n {
                let line =
                    lines.next().ok_or_else(|| Error::Parse(format!("missing sample {i}")))?;
                h.push(parse_f64(line)?);
            }
            if lines.next().is_some() {
                return Err(Error::Parse("trailing lines after support samples".into()));
            }
            Ok(Domain::Smooth(SupportBody::from_samples(h)?))
        }
        other => Err(Error::Parse(format!("unknown domain kind '{other}'"))),
    }
}

fn parse_point(line: &str) -> Result<Pt> {
    let mut it = line.split_whitespace();
    let x = parse_f64(it.next().ok_or_else(|| Error::Parse("missing x".into()))?)?;
    let y = parse_f64(it.next().ok_or_else(|| Error::Parse("missing y".into()))?)?;
    if it.next().is_some() {
        return Err(Error::Parse(format!("trailing tokens in point line '{line}'")));
    }
    Ok([x, y])
}

fn parse_f64(tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse(format!("bad float '{tok}'")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("non-finite value '{tok}'")));
    }
    Ok(v)
}

// ---------------------------------------------------------------------------
// Mesh files
// ---------------------------------------------------------------------------

pub fn write_mesh(mesh: &TriMesh) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "mesh {} {} {}\n",
        mesh.num_nodes(),
        mesh.num_tris(),
        mesh.boundary_edges.len()
    ));
    for p in &mesh.nodes {
        out.push_str(&format!("{} {}\n", fmt17(p[0]), fmt17(p[1])));
    }
    for t in &mesh.tris {
        out.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
    }
    for e in &mesh.boundary_edges {
        out.push_str(&format!(
            "{} {} {} {}\n",
            e.a,
            e.b,
            fmt17(e.normal[0]),
            fmt17(e.normal[1])
        ));
    }
    out
}

/// Parses and fully validates a mesh file. The boundary loop is recovered
/// from the triangulation and cross-checked against the stored edge
/// records; the curve of a loaded mesh is its boundary polyline.
pub fn parse_mesh(text: &str) -> Result<TriMesh> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("mesh") {
        return Err(Error::Parse("mesh header must start with 'mesh'".into()));
    }
    let mut counts = [0usize; 3];
    for c in counts.iter_mut() {
        *c = parts
            .next()
            .ok_or_else(|| Error::Parse("mesh header needs V T E".into()))?
            .parse()
            .map_err(|_| Error::Parse("mesh count is not an integer".into()))?;
    }
    if parts.next().is_some() {
        return Err(Error::Parse("trailing tokens in mesh header".into()));
    }
    let [nv, nt, ne] = counts;
    if nv < 3 || nv + nt + ne > MAX_MESH_RECORDS {
        return Err(Error::Parse("mesh record counts out of range".into()));
    }
    let mut nodes = Vec::with_capacity(nv);
    for i in 0..nv {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing node {i}")))?;
        nodes.push(parse_point(line)?);
    }
    let mut tris = Vec::with_capacity(nt);
    for i in 0..nt {
        let line = lines.next().ok_or_else(|| Error::Parse(format!("missing triangle {i}")))?;
        let mut it = line.split_whitespace();
        let mut t = [0usize; 3];
        for v in t.iter_mut() {
            *v = it
                .next()
                .ok_or_else(|| Error::Parse("triangle needs 3 indices".into()))?
                .parse()
                .map_err(|_| Error::Parse("bad triangle index".into()))?;
            if *v >= nv {
                return Err(Error::Parse(format!("triangle index {v} out of range")));
            }
        }
        if it.next().is_some() {
            return Err(Error::Parse("trailing tokens in triangle line".into()));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            return Err(Error::Parse("degenerate triangle indices".into()));
        }
        tris.push(t);
    }
    let mut edge_records = Vec::with_capacity(ne);
    for i in 0..ne {
        let line =
            lines.next().ok_or_else(|| Error::Parse(format!("missing boundary edge {i}")))?;
        let mut it = line.split_whitespace();
        let a: usize = it
            .next()
            .ok_or_else(|| Error::Parse("edge needs indices".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad edge index".into()))?;
        let b: usize = it
            .next()
            .ok_or_else(|| Error::Parse("edge needs indices".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad edge index".into()))?;
        let nx = parse_f64(it.next().ok_or_else(|| Error::Parse("edge needs normal".into()))?)?;
        let nyv = parse_f64(it.next().ok_or_else(|| Error::Parse("edge needs normal".into()))?)?;
        if it.next().is_some() {
            return Err(Error::Parse("trailing tokens in edge line".into()));
        }
        if a >= nv || b >= nv {
            return Err(Error::Parse("edge index out of range".into()));
        }
        edge_records.push((a, b, nx, nyv));
    }
    if lines.next().is_some() {
        return Err(Error::Parse("trailing lines after mesh records".into()));
    }
    let mesh = TriMesh::from_raw(nodes, tris, 1.0)?;
    // cross-check stored boundary records against the recovered loop
    if edge_records.len() != mesh.boundary_edges.len() {
        return Err(Error::Parse(format!(
            "boundary edge count {} does not match the triangulation ({})",
            edge_records.len(),
            mesh.boundary_edges.len()
        )));
    }
    let mut want: Vec<(usize, usize)> =
        mesh.boundary_edges.iter().map(|e| (e.a.min(e.b), e.a.max(e.b))).collect();
    want.sort_unstable();
    let mut got: Vec<(usize, usize)> =
        edge_records.iter().map(|&(a, b, _, _)| (a.min(b), a.max(b))).collect();
    got.sort_unstable();
    if want != got {
        return Err(Error::Parse("stored boundary edges do not match the triangulation".into()));
    }
    for &(a, b, nx, nyv) in &edge_records {
        let stored = [nx, nyv];
        let found = mesh
            .boundary_edges
            .iter()
            .find(|e| (e.a == a && e.b == b) || (e.a == b && e.b == a))
            .expect("edge cross-checked above");
        let dotp = stored[0] * found.normal[0] + stored[1] * found.normal[1];
        if (dotp.abs() - 1.0).abs() > 1e-6 {
            return Err(Error::Parse(format!("edge ({a},{b}) normal is not the unit normal")));
        }
        if dotp < 0.0 {
            return Err(Error::Parse(format!("edge ({a},{b}) normal points inward")));
        }
    }
    Ok(mesh)
}

// ---------------------------------------------------------------------------
// Matrix dump
// ---------------------------------------------------------------------------

/// Coordinate-format dump `i j value`, sorted by (i, j).
pub fn write_matrix(p: &Pattern, vals: &[f64]) -> String {
    let mut out = String::new();
    for i in 0..p.n {
        for k in p.row_ptr[i]..p.row_ptr[i + 1] {
            out.push_str(&format!("{} {} {}\n", i, p.col_idx[k], fmt17(vals[k])));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Config files
// ---------------------------------------------------------------------------

/// Parses a flat key=value config file; later lines override earlier ones.
/// `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let eq = line
            .find('=')
            .ok_or_else(|| Error::Parse(format!("line {}: missing '='", lineno + 1)))?;
        let key = line[..eq].trim();
        let value = line[eq + 1..].trim();
        if key.is_empty() {
            return Err(Error::Parse(format!("line {}: empty key", lineno + 1)));
        }
        if !key
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-' || c == '.')
        {
            return Err(Error::Parse(format!("line {}: bad key '{key}'", lineno + 1)));
        }
        out.push((key.to_string(), value.to_string()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// CSV writers
// ---------------------------------------------------------------------------

pub fn eigenvalues_csv(result: &crate::eigensolve::SpectralResult) -> String {
    let mut out = String::from("j,lambda,residual\n");
    for (j, (l, r)) in result.lambdas.iter().zip(result.residuals.iter()).enumerate() {
        out.push_str(&format!("{},{},{}\n", j + 1, fmt17(*l), fmt17(*r)));
    }
    out
}

pub fn eigenvector_csv(vector: &[f64]) -> String {
    let mut out = String::from("dof,value\n");
    for (d, v) in vector.iter().enumerate() {
        out.push_str(&format!("{},{}\n", d, fmt17(*v)));
    }
    out
}

pub fn oracle_csv(spec: &OracleSpectrum) -> String {
    let mut out = String::from("rank,lambda,multiplicity,label,residual\n");
    let mut rank = 1usize;
    for m in &spec.modes {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            rank,
            fmt17(m.lambda),
            m.multiplicity,
            m.label,
            fmt17(m.residual)
        ));
        rank += m.multiplicity;
    }
    out
}

pub fn sweep_csv(run: &crate::experiments::StabilityRun) -> String {
    let j = run.base_lambdas.len();
    let mut out = String::from("k,r,dH,D,rho,area_strip");
    for i in 1..=j {
        out.push_str(&format!(",lambda_{i}"));
    }
    out.push('\n');
    for e in &run.entries {
        out.push_str(&format!(
            "{},{},{},{},{},{}",
            e.k,
            fmt17(e.r),
            fmt17(e.hausdorff),
            fmt17(e.diameter),
            fmt17(e.inradius),
            fmt17(e.area_strip)
        ));
        for l in &e.lambdas {
            out.push_str(&format!(",{}", fmt17(*l)));
        }
        out.push('\n');
    }
    out
}

pub fn convergence_csv(study: &crate::experiments::ConvergenceStudy) -> String {
    let j = study.lambdas[0].len();
    let mut out = String::from("level,h");
    for i in 1..=j {
        out.push_str(&format!(",lambda_{i}"));
    }
    out.push('\n');
    for (lvl, (h, lams)) in study.hs.iter().zip(study.lambdas.iter()).enumerate() {
        out.push_str(&format!("{},{}", lvl, fmt17(*h)));
        for l in lams {
            out.push_str(&format!(",{}", fmt17(*l)));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::random_convex_polygon;
    use crate::mesh::triangulate;
    use crate::util::Rng;

    #[test]
    fn domain_round_trip_is_bit_exact() {
        let mut rng = Rng::new(31);
        for _ in 0..10 {
            let poly = random_convex_polygon(&mut rng, 7);
            let dom = Domain::Polygon(poly);
            let text = write_domain(&dom);
            let back = parse_domain(&text).unwrap();
            assert_eq!(text, write_domain(&back));
        }
        let disk = Domain::unit_disk();
        let text = write_domain(&disk);
        let back = parse_domain(&text).unwrap();
        assert_eq!(text, write_domain(&back));
    }

    #[test]
    fn domain_parse_rejects_garbage() {
        assert!(parse_domain("").is_err());
        assert!(parse_domain("polygon").is_err());
        assert!(parse_domain("polygon 3\n0 0\n1 0\n").is_err()); // short
        assert!(parse_domain("polygon 3\n0 0\n1 0\n2 0\n").is_err()); // collinear
        assert!(parse_domain("support 4\n1\n1\n1\n1\n").is_err()); // too few
        assert!(parse_domain("circle 5\n").is_err());
        assert!(parse_domain("polygon 99999999999\n").is_err());
        assert!(parse_domain("polygon 3\n0 0\n1 nan\n0 1\n").is_err());
    }

    #[test]
    fn mesh_round_trip() {
        let mesh = triangulate(&Domain::unit_square(), 0.35).unwrap();
        let text = write_mesh(&mesh);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.num_nodes(), mesh.num_nodes());
        assert_eq!(back.num_tris(), mesh.num_tris());
        assert_eq!(text, write_mesh(&back));
    }

    #[test]
    fn mesh_parse_rejects_garbage() {
        assert!(parse_mesh("").is_err());
        assert!(parse_mesh("mesh 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n").is_err()); // missing edges
        assert!(parse_mesh("mesh 3 1 3\n0 0\n1 0\n0 1\n0 1 5\n0 1 0 -1\n1 2 1 1\n2 0 -1 0\n")
            .is_err()); // index range
        // inward normal
        let bad = "mesh 3 1 3\n0 0\n1 0\n0 1\n0 1 2\n0 1 0 1\n1 2 0.7071 0.7071\n2 0 -1 0\n";
        assert!(parse_mesh(bad).is_err());
    }

    #[test]
    fn config_parsing() {
        let cfg = parse_config("a=1\n# comment\n b = two words \nkey-x=3 # tail\n").unwrap();
        assert_eq!(cfg[0], ("a".into(), "1".into()));
        assert_eq!(cfg[1], ("b".into(), "two words".into()));
        assert_eq!(cfg[2], ("key-x".into(), "3".into()));
        assert!(parse_config("novalue\n").is_err());
        assert!(parse_config("=x\n").is_err());
        assert!(parse_config("bad key=1\n").is_err());
    }

    #[test]
    fn matrix_dump_is_sorted() {
        let mesh = std::sync::Arc::new(triangulate(&Domain::unit_square(), 0.5).unwrap());
        let space = crate::fem::build_space(&mesh, 1).unwrap();
        let pen = crate::fem::assemble(&space);
        let dump = write_matrix(&pen.pattern, &pen.k);
        let mut prev = (0usize, 0usize);
        let mut first = true;
        for line in dump.lines() {
            let mut it = line.split_whitespace();
            let i: usize = it.next().unwrap().parse().unwrap();
            let j: usize = it.next().unwrap().parse().unwrap();
            if !first {
                assert!((i, j) > prev, "unsorted at {i},{j}");
            }
            prev = (i, j);
            first = false;
        }
    }
}
