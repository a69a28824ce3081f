// debug scratch — K=3 Markov violation, piece 13 level 2
use expdyn::address::Address;
use expdyn::puzzle::{build_graph, build_levels, locate, PieceLabel, PuzzleParams};
use expdyn::ray::apply;
use num_complex::Complex64;

fn main() {
    let c = Complex64::new(0.6499999999999998, 1.2283696986087564);
    let addrs: Vec<Address> = ["| 0 0 1", "| 0 1 0", "| 1 0 0"].iter().map(|s| s.parse().unwrap()).collect();
    let g = build_graph(c, &addrs).unwrap();
    let params = PuzzleParams { k_max: 3, ..Default::default() };
    let levels = build_levels(&g, 2, &params).unwrap();
    let (parent, child) = (&levels[1], &levels[2]);
    for piece in &child.pieces {
        if piece.label != PieceLabel::Num(13) { continue; }
        println!("piece 13 witness {} bounding {:?}", piece.witness,
            piece.bounding.iter().map(|a| a.to_string()).collect::<Vec<_>>());
        for &z in piece.samples.iter().take(12) {
            let fz = apply(c, z);
            let dist = parent.curves.iter().map(|cu| cu.polygon.distance_to(fz)).fold(f64::INFINITY, f64::min);
            match locate(parent, fz) {
                Ok(p) => println!("  z={z:.5} f={fz:.5} d={dist:.2e} -> parent {} {:?}", p.label,
                    p.signature.iter().map(|&b| b as u8).collect::<Vec<u8>>()),
                Err(e) => println!("  z={z:.5} f={fz:.5} d={dist:.2e} -> {e:?}"),
            }
        }
    }
}
