//! Mesh writers: Triangle-style .node/.ele and SVG.

use std::collections::HashMap;
use std::fmt::Write;

use refinelab::geom;
use refinelab::pslg::fmt_real;
use refinelab::Triangulation;

/// Live vertices renumbered from 1, in id order.
fn numbering(mesh: &Triangulation) -> (Vec<usize>, HashMap<usize, usize>) {
    let mut used: Vec<usize> = mesh.triangles().flat_map(|(_, v)| v).collect();
    used.sort_unstable();
    used.dedup();
    let index = used.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    (used, index)
}

/// Canonically ordered triangles, so output does not depend on slot reuse.
fn ordered_triangles(mesh: &Triangulation) -> Vec<[usize; 3]> {
    mesh.triangle_set().into_iter().collect()
}

pub fn write_node(mesh: &Triangulation) -> String {
    let (used, _) = numbering(mesh);
    let mut out = format!("{} 2 0 0\n", used.len());
    for (i, &v) in used.iter().enumerate() {
        let p = mesh.point(v);
        let _ = writeln!(out, "{} {} {}", i + 1, fmt_real(p.x), fmt_real(p.y));
    }
    out
}

pub fn write_ele(mesh: &Triangulation) -> String {
    let (_, index) = numbering(mesh);
    let tris = ordered_triangles(mesh);
    let mut out = format!("{} 3 0\n", tris.len());
    for (i, t) in tris.iter().enumerate() {
        let _ = writeln!(out, "{} {} {} {}", i + 1, index[&t[0]], index[&t[1]], index[&t[2]]);
    }
    out
}

/// One polygon per triangle; those with a minimum angle below `alpha_deg`
/// are filled. Constraint subsegments are drawn as lines on top.
pub fn write_svg(mesh: &Triangulation, alpha_deg: f64) -> String {
    let (used, _) = numbering(mesh);
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for &v in &used {
        let p = mesh.point(v);
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    let pad = 0.02 * (x1 - x0).max(y1 - y0);
    let (w, h) = (x1 - x0 + 2.0 * pad, y1 - y0 + 2.0 * pad);
    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="800" height="{}" viewBox="{} {} {} {}">"#,
        (800.0 * h / w).round(),
        x0 - pad,
        -(y1 + pad),
        w,
        h
    );
    let _ = writeln!(
        out,
        r#"<g transform="scale(1,-1)" stroke="black" stroke-width="1" vector-effect="non-scaling-stroke">"#
    );
    for t in ordered_triangles(mesh) {
        let [a, b, c] = t.map(|v| mesh.point(v));
        let skinny = geom::min_angle_deg(a, b, c).map(|m| m < alpha_deg).unwrap_or(true);
        let fill = if skinny { "#e4572e" } else { "none" };
        let _ = writeln!(
            out,
            r#"<polygon points="{},{} {},{} {},{}" fill="{fill}" vector-effect="non-scaling-stroke"/>"#,
            a.x, a.y, b.x, b.y, c.x, c.y
        );
    }
    for &(a, b) in mesh.constraints().keys() {
        let (p, q) = (mesh.point(a), mesh.point(b));
        let _ = writeln!(
            out,
            r##"<line x1="{}" y1="{}" x2="{}" y2="{}" stroke="#1d4e89" stroke-width="2" vector-effect="non-scaling-stroke"/>"##,
            p.x, p.y, q.x, q.y
        );
    }
    out.push_str("</g>\n</svg>\n");
    out
}
