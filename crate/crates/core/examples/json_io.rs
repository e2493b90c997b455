//! Build a polynomial map by hand, save it in the JSON exchange format and
//! check it after loading.

use skewjet::local_condition::{check_local_condition, LocalOptions};
use skewjet::{PolyMap, SymMultiMap};

fn main() -> skewjet::Result<()> {
    // (x, y) -> (x, y, x^2, xy, y^2 + x^3, x^2 y)
    let l = SymMultiMap::from_fn(2, 6, 1, |idx| {
        let mut v = vec![0.0; 6];
        v[idx[0]] = 1.0;
        v
    })?;
    let b = SymMultiMap::from_fn(2, 6, 2, |idx| match (idx[0], idx[1]) {
        (0, 0) => vec![0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
        (0, 1) => vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        _ => vec![0.0, 0.0, 0.0, 0.0, 2.0, 0.0],
    })?;
    let t = SymMultiMap::from_fn(2, 6, 3, |idx| match (idx[0], idx[1], idx[2]) {
        (0, 0, 0) => vec![0.0, 0.0, 0.0, 0.0, 6.0, 0.0],
        (0, 0, 1) => vec![0.0, 0.0, 0.0, 0.0, 0.0, 2.0],
        _ => vec![0.0; 6],
    })?;
    let f = PolyMap::from_derivatives(vec![0.0; 6], vec![l, b, t])?;

    let path = std::env::temp_dir().join("skewjet-example-map.json");
    std::fs::write(&path, f.to_json()).expect("temp dir is writable");
    let loaded = PolyMap::from_json(&std::fs::read_to_string(&path).expect("file was just written"))?;
    println!("round trip exact: {}", loaded == f);
    println!("f(1, 2) = {:?}", loaded.eval(&[1.0, 2.0])?);

    let r = check_local_condition(&loaded, &[0.0, 0.0], &LocalOptions::default())?;
    println!("local condition at 0: holds={} min_sigma={:.4e}", r.holds.as_str(), r.min_sigma);
    println!("try: skewjet check-local --map {}", path.display());
    Ok(())
}
