fn main() {
    println!("cargo:rerun-if-changed=src/lib.rs");
    println!("cargo:rerun-if-changed=cbindgen.toml");
    #[cfg(feature = "gen-header")]
    regenerate_header();
}

/// Rewrite include/deltasense.h from the exported items. Only compiled when
/// the `gen-header` feature pulls in cbindgen; release builds use the
/// checked-in header as-is.
#[cfg(feature = "gen-header")]
fn regenerate_header() {
    let crate_dir = std::env::var("CARGO_MANIFEST_DIR").expect("cargo sets CARGO_MANIFEST_DIR");
    let config = cbindgen::Config::from_file(format!("{crate_dir}/cbindgen.toml"))
        .expect("cbindgen.toml parses");
    cbindgen::Builder::new()
        .with_crate(&crate_dir)
        .with_config(config)
        .generate()
        .expect("header generation")
        .write_to_file(format!("{crate_dir}/include/deltasense.h"));
}
