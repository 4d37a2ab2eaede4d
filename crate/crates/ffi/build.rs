use cbindgen::Config;
use std::env;
use std::path::PathBuf;

fn main() {
    let crate_dir = env::var("CARGO_MANIFEST_DIR").unwrap();
    let root = PathBuf::from(&crate_dir);
    let config = Config::from_file(root.join("cbindgen.toml")).expect("failed to parse cbindgen.toml");
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    match cbindgen::Builder::new().with_crate(&crate_dir).with_config(config).generate() {
        Ok(bindings) => {
            std::fs::create_dir_all(root.join("include")).unwrap();
            bindings.write_to_file(root.join("include/wallgrowth.h"));
        }
        Err(error) => {
            eprintln!("cbindgen: {error}");
            std::process::exit(1);
        }
    }
}
