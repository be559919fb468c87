//! Generate a runnable demo dataset (synthetic fundus phantoms, masks,
//! manifests, embeddings, targets, and a pipeline config):
//!
//! ```sh
//! cargo run --release -p fundeval-cli --example gen_demo -- demo/
//! fundeval --config demo/config.json run
//! ```

fn main() {
    let root = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "demo".to_string());
    let root = std::path::PathBuf::from(root);
    std::fs::create_dir_all(&root).expect("create output directory");
    let config =
        fundeval::phantom::write_demo_dataset(&root, 16, 128).expect("demo dataset writes");
    println!("wrote dataset under {}", root.display());
    println!("run it with: fundeval --config {} run", config.display());
}
