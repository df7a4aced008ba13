fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").unwrap();
    match cbindgen::generate(&crate_dir) {
        Ok(bindings) => {
            bindings.write_to_file(format!("{crate_dir}/include/haarwave.h"));
        }
        // A stale committed header beats a broken build.
        Err(e) => println!("cargo:warning=keeping committed header, regeneration failed: {e}"),
    }
}
