//! Generate the three benchmark topologies, inspect their degree statistics
//! and the kernel each would be dispatched to, then round-trip one through
//! the binary format and an edge list.

use std::io::Cursor;

use spreadsim::graph::{degree_stats, read_binary, read_edge_list, select_strategy, write_binary, Strategy, Topology};

fn main() -> spreadsim::Result<()> {
    let n = 20_000;
    for t in [Topology::ErdosRenyi { d_avg: 8.0 }, Topology::BarabasiAlbert { m: 4 }, Topology::FixedDegree { d: 8 }] {
        let g = t.generate(n, 1)?;
        let st = degree_stats(&g)?;
        println!(
            "{:<10} edges {:>7}  d_avg {:.2}  d_max {:>4}  rho {:>6.2}  -> {}",
            t.label(),
            g.num_edges(),
            st.d_avg,
            st.d_max,
            st.rho,
            select_strategy(&st, Strategy::Auto).name()
        );
    }

    let g = Topology::BarabasiAlbert { m: 4 }.generate(1000, 7)?;
    let mut buf = Vec::new();
    write_binary(&g, &mut buf)?;
    let back = read_binary(Cursor::new(&buf))?;
    println!("binary: {} bytes, identical after reload: {}", buf.len(), back == g);

    let text = "# src dst [weight]\n0 1\n1 2 0.5\n2 0\n";
    let small = read_edge_list(Cursor::new(text), None)?;
    println!("edge list: {} nodes, {} directed edges, symmetric: {}", small.num_nodes(), small.num_edges(), small.is_symmetric());
    Ok(())
}
