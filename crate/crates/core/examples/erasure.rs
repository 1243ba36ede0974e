//! Parsing paths, erasing backtracks and the canonical form of loops.

use ymh_loops::strings::{erase_backtracks, parse_string, render_string, EraseMode, LatticePath};
use ymh_loops::LatticeGeometry;

fn main() -> ymh_loops::Result<()> {
    let g = LatticeGeometry::new(2, 4)?;

    // backtracks are erased on input
    let line = parse_string("line (0,0)+x+y-y+y-x", &g)?;
    println!("{}", render_string(&g, &line));

    // the same loop read from two base points
    let a = parse_string("loop (0,0)+x+y-x-y", &g)?;
    let b = parse_string("loop (1,1)-x-y+x+y", &g)?;
    println!(
        "{}  ==  {}: {}",
        render_string(&g, &a),
        render_string(&g, &b),
        a == b
    );

    // a plaquette conjugated by a tail: interior erasure keeps the tail, cyclic erasure drops it
    let s = g.edge(0, 1, true);
    let x = g.edge(g.v(s), 0, true);
    let y = g.edge(g.v(x), 1, true);
    let xb = g.edge(g.v(y), 0, false);
    let yb = g.edge(g.v(xb), 1, false);
    let p = LatticePath::new(&g, 0, vec![s, x, y, xb, yb, s.inv()])?;
    let interior = erase_backtracks(&g, &p, EraseMode::InteriorOnly)?;
    let all = erase_backtracks(&g, &p, EraseMode::All)?;
    println!(
        "path of {} edges: interior erasure {} edges, full erasure {} edges",
        p.edges.len(),
        interior.edges.len(),
        all.edges.len()
    );
    Ok(())
}
