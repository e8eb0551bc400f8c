//! Generates sparse and dense random contact graphs, vaccinates most of the
//! employees and round-trips the result through an edge-list file.
//!
//! cargo run --release --example generate_graph

use shiftrisk::graph::{export_graph, load_graph, GraphMetadata};
use shiftrisk::{assign_vaccination, gen_random_graph, gen_sectioned_graph, Profile};

fn main() -> shiftrisk::Result<()> {
    for profile in [Profile::Sparse, Profile::Dense] {
        let g = gen_random_graph(100, profile, 42)?;
        let pairs = 100 * 99 / 2;
        println!(
            "{profile:>6}: {} contacts out of {pairs} pairs (density {:.3})",
            g.edge_count(),
            g.edge_count() as f64 / pairs as f64
        );
    }

    let g = gen_sectioned_graph(&[12, 8], Profile::Dense, Profile::Sparse, 7)?;
    let g = assign_vaccination(g, 0.95, 7)?;
    let unvaccinated: Vec<usize> = (0..g.n()).filter(|&i| !g.is_vaccinated(i)).collect();
    println!("two sections: {} contacts, unvaccinated {unvaccinated:?}", g.edge_count());

    let dir = std::env::temp_dir().join("shiftrisk-example");
    std::fs::create_dir_all(&dir).map_err(|e| shiftrisk::Error::io(&dir, e))?;
    let path = dir.join("sections.csv");
    export_graph(&g, &GraphMetadata::for_graph(&g), &path)?;
    let back = load_graph(&path)?;
    assert_eq!(back, g);
    println!("wrote and reloaded {}", path.display());
    Ok(())
}
