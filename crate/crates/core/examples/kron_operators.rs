//! Matrix-free selection, commutation and embedding operators on a small
//! example, shown next to the pair ordering they use.
//!
//! cargo run --example kron_operators -- [K]

use nalgebra::DMatrix;
use qlevy::kronkit::{apply_selection, commutation_apply, embed_antisymmetric};
use qlevy::pair_index_map;

fn main() -> qlevy::Result<()> {
    let k: usize = std::env::args().nth(1).map_or(4, |s| s.parse().expect("K"));
    let map = pair_index_map(k)?;
    println!("pairs: {:?}", map.pairs());
    let m = DMatrix::from_fn(k, k, |i, j| (10 * (i + 1) + j + 1) as f64);
    print!("M ={m}");
    print!("S_K applied to M ={}", commutation_apply(k, &m)?);
    let v = apply_selection(&map, &m)?;
    println!("H_K picks the strict upper triangle: {v:?}");
    print!("embedded antisymmetric ={}", embed_antisymmetric(&map, &v)?);
    Ok(())
}
