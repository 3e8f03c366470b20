// Global embedding metrics on Gaussian clouds. The synthetic cloud is moved
// further from the real one at each step, and the embeddings make a trip
// through the on-disk `.emb` format on the way.

use synthscreen::dataio::{load_embeddings, write_embeddings};
use synthscreen::embed::{global_metrics, EmbedConfig};
use synthscreen::fixtures::make_fixture;

pub fn run_example() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = EmbedConfig::default();
    let mut last_fid = -1.0;
    for shift in [0.0, 0.5, 1.0, 2.0] {
        let (real, syn) = make_fixture(42, 200, 200, 16, shift).unwrap();

        let path = dir.path().join(format!("syn_{shift}.emb"));
        write_embeddings(&path, &syn).unwrap();
        let syn = load_embeddings(&path).unwrap();

        let values = global_metrics(&real, &syn, 3, &cfg).unwrap();
        println!("shift {shift}");
        for v in &values {
            println!("  {:<16} {} {:>10.4}", v.name, v.direction.arrow(), v.value);
        }
        let fid = values.iter().find(|v| v.name == "fid").unwrap().value;
        assert!(fid > last_fid);
        last_fid = fid;
    }
    // fid for a unit mean shift is about 1, plus sampling noise
    assert!((0.6..2.0).contains(&{
        let (r, s) = make_fixture(42, 200, 200, 16, 1.0).unwrap();
        synthscreen::embed::frechet_distance(&r, &s).unwrap()
    }));
}

#[allow(dead_code)]
fn main() {
    run_example();
}
