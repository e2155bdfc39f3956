use std::fmt::Write as _;

use super::csv::format_number;
use crate::fem::FeFunction;

/// Legacy ASCII structured grid with the nodal values as point scalars `u`.
/// Points are listed in dof order, which is the x-fastest order VTK expects.
pub fn vtk_string(u: &FeFunction) -> String {
    let mesh = u.space().mesh();
    let n = mesh.vertices_per_side();
    let nz = if mesh.dim() == 3 { n } else { 1 };
    let np = mesh.num_vertices();
    let mut out = String::with_capacity(48 * np);
    out.push_str("# vtk DataFile Version 3.0\nu\nASCII\nDATASET STRUCTURED_GRID\n");
    let _ = writeln!(out, "DIMENSIONS {n} {n} {nz}");
    let _ = writeln!(out, "POINTS {np} double");
    for v in 0..np {
        let p = mesh.vertex_coords(v);
        let _ = writeln!(
            out,
            "{} {} {}",
            format_number(p[0]),
            format_number(p[1]),
            format_number(p[2])
        );
    }
    let _ = writeln!(out, "POINT_DATA {np}");
    out.push_str("SCALARS u double 1\nLOOKUP_TABLE default\n");
    for &c in u.coeffs() {
        out.push_str(&format_number(c));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FeSpace;
    use crate::mesh::{BoxDomain, StructuredMesh};

    fn space(dim: usize, level: u32) -> FeSpace {
        FeSpace::new(StructuredMesh::new(BoxDomain::symmetric_unit(dim).unwrap(), level).unwrap())
    }

    fn scalars(s: &str) -> Vec<&str> {
        let start = s.lines().position(|l| l == "LOOKUP_TABLE default").unwrap();
        s.lines().skip(start + 1).collect()
    }

    #[test]
    fn level_one_has_nine_points() {
        let u = space(2, 1).interpolate(|_| 1.0);
        let s = vtk_string(&u);
        assert!(s.contains("DIMENSIONS 3 3 1\n"));
        assert!(s.contains("POINTS 9 double\n"));
        assert!(s.contains("POINT_DATA 9\n"));
        let vals = scalars(&s);
        assert_eq!(vals.len(), 9);
        assert!(vals.iter().all(|v| *v == "1"));
        assert_eq!(vtk_string(&u), s);
    }

    #[test]
    fn values_follow_dof_order() {
        let sp = space(3, 1);
        let u = sp.interpolate(|p| p[0] + 10.0 * p[1] + 100.0 * p[2]);
        let s = vtk_string(&u);
        assert!(s.contains("DIMENSIONS 3 3 3\n"));
        let vals = scalars(&s);
        assert_eq!(vals.len(), 27);
        assert_eq!(vals[0], "-111");
        assert_eq!(vals[1], "-110");
        assert_eq!(vals[3], "-101");
        assert_eq!(vals[26], "111");
        let first_point = s.lines().position(|l| l.starts_with("POINTS")).unwrap() + 1;
        assert_eq!(s.lines().nth(first_point).unwrap(), "-1 -1 -1");
    }
}
