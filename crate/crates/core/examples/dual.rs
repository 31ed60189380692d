//! A small hypergraph, its incidence lists and its dual.

use hyperwalk::hypergraph::Hypergraph;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let h = Hypergraph::new(6, vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![0, 5]])?;
    println!("{} vertices, {} hyperedges, connected: {}", h.n_vertices(), h.n_hyperedges(), h.is_connected());
    for v in 0..h.n_vertices() {
        println!("vertex {v} lies in hyperedges {:?}", h.incident(v));
    }
    let dual = h.dual()?;
    println!("dual: {} vertices, {} hyperedges", dual.n_vertices(), dual.n_hyperedges());
    for (i, members) in dual.hyperedges().enumerate() {
        println!("  dual hyperedge {i} = hyperedges around vertex {i}: {members:?}");
    }
    assert_eq!(dual.dual()?, h);
    println!("dual of the dual equals the original");
    let mut text = Vec::new();
    h.write_canonical(&mut text)?;
    print!("canonical form:\n{}", String::from_utf8(text)?);
    Ok(())
}
