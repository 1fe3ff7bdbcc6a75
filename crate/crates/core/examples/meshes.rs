//! Structured squares, the square frame used for smooth-boundary studies,
//! and the plain-text mesh format.

use volfem::mesh::{BoundaryTag, Mesh, Side};

fn summary(name: &str, m: &Mesh) {
    let d = m.edges_tagged(BoundaryTag::Dirichlet).count();
    let n = m.edges_tagged(BoundaryTag::Neumann).count();
    println!(
        "{name}: {} nodes, {} triangles, area {:.4}, {d} Dirichlet / {n} Neumann edges, |Γ_N| = {:.4}",
        m.num_nodes(),
        m.num_triangles(),
        m.total_area(),
        m.neumann_length()
    );
}

fn main() {
    let square = Mesh::structured_square(8, 8, &[Side::Left]).unwrap();
    summary("square 8x8", &square);
    let frame = Mesh::structured_frame(16, 0.375, 0.625).unwrap();
    summary("frame 16", &frame);

    let text = square.to_text();
    let back = Mesh::parse(&text).unwrap();
    println!("text round trip keeps {} nodes; first lines:", back.num_nodes());
    for line in text.lines().take(4) {
        println!("  {line}");
    }
}
