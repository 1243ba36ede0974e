//! All operations of a string collection at an edge and at a site.

use ymh_loops::stringops::{edge_operations, site_operations, SiteTarget};
use ymh_loops::strings::{parse_edge, parse_string, parse_vertex, render_collection};
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let g = LatticeGeometry::new(2, 4)?;
    let s = vec![
        parse_string("loop (0,0)+x+y-x-y+x-y-x+y", &g)?,
        parse_string("line (0,0)+x+x", &g)?,
    ];
    let e = parse_edge("(0,0) +x", &g)?;
    println!("at edge (0,0) +x of {}", render_collection(&g, &s));
    for op in edge_operations(&g, &s, e)? {
        println!(
            "  {:<20} {:<9?} -> {}",
            op.kind.to_string(),
            op.sign,
            render_collection(&g, &op.result)
        );
    }

    let x = parse_vertex("(0,0)", &g)?;
    let line = vec![parse_string("line (0,0)+x+y-x-y", &g)?];
    println!(
        "at site (0,0) of {}, sphere target",
        render_collection(&g, &line)
    );
    for op in site_operations(
        &g,
        &line,
        x,
        SiteTarget {
            sphere: true,
            max_null: 0,
        },
    )? {
        println!(
            "  {:<20} weight {:<4} -> {}",
            op.kind.to_string(),
            op.weight,
            render_collection(&g, &op.result)
        );
    }
    Ok(())
}
